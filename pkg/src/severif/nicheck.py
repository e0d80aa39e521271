"""Two-run noninterference checking for the ISA semantics.

Low-equivalence treats any two ciphertexts as indistinguishable and demands
bit-equality on public plaintexts; keyReg is private and unconstrained. The
checkers run a program twice on low-equivalent states stepped in lockstep and
demand (i) low-equivalent results and (ii) equal per-step cycle counts.

A pair where exactly one side gets stuck sits outside the soundness theorem's
premises (both runs are assumed to reach skip); check_soundness records such
pairs as findings without failing the verdict, while check_single_step — whose
witness batteries are built to make them impossible — escalates them.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from . import interp
from .crypto import CryptoParams, Key, SaltMode, SaltSource, SplitMix64, cipher_ops, encrypt
from .interp import MachineState, Semantics, Stuck, Value, cipher, plain
from .lang import (
    KEY_REG,
    SKIP,
    Bop,
    BopKind,
    Cmov,
    Command,
    Enc,
    Program,
    Register,
    Skip,
    gpr,
)
from .typecheck import DEFAULT_ENV, Label, TypeEnv, typecheck

PLAIN = interp.PLAIN
CIPHER = interp.CIPHER


class DomainMismatch(ValueError):
    pass


def low_equiv(s1: MachineState, s2: MachineState, env: TypeEnv = DEFAULT_ENV) -> bool:
    """States agree on every public location; ciphertext pairs always agree."""
    if s1.regs.keys() != s2.regs.keys():
        raise DomainMismatch("states have different register domains")
    for reg, v1 in s1.regs.items():
        if env.label(reg) is not Label.PUBLIC:
            continue
        v2 = s2.regs[reg]
        if v1.is_cipher != v2.is_cipher:
            return False
        if not v1.is_cipher and v1.bits != v2.bits:
            return False
    return True


def differing_registers(s1: MachineState, s2: MachineState) -> list[Register]:
    return sorted(
        (r for r in s1.regs if s1.regs[r] != s2.regs.get(r)),
        key=lambda r: (r.index is None, r.index or 0),
    )


@dataclass
class LowEquivWitness:
    s1: MachineState
    s2: MachineState
    differing_locations: list[Register] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Tag analysis: which registers must start plain / cipher, and which are read
# as a cmov condition while still holding their initial value.


@dataclass
class TagInfo:
    initial_tags: dict[Register, str]
    cond_initial: set[Register]
    sticks_at: tuple[int, str, Register] | None
    cond_hazard: bool


def analyze_tags(program: Program) -> TagInfo:
    tags: dict[Register, str] = {}
    initial: dict[Register, str] = {}
    written: set[Register] = set()
    cond_initial: set[Register] = set()
    sticks_at = None
    cond_hazard = False

    def read(reg: Register, want: str, index: int, rule: str) -> bool:
        nonlocal sticks_at
        have = tags.get(reg)
        if have is None:
            tags[reg] = want
            initial[reg] = want
            return True
        if have != want:
            sticks_at = (index, rule, reg)
            return False
        return True

    for index, cmd in enumerate(program.commands):
        if isinstance(cmd, Skip):
            continue
        if isinstance(cmd, Enc):
            if not read(cmd.reg, PLAIN, index, "ENC"):
                break
            tags[cmd.reg] = CIPHER
            written.add(cmd.reg)
        elif isinstance(cmd, Bop):
            if not (read(cmd.r1, CIPHER, index, "BOP") and read(cmd.r2, CIPHER, index, "BOP")):
                break
            tags[cmd.r1] = CIPHER
            written.add(cmd.r1)
        elif isinstance(cmd, Cmov):
            ok = True
            for reg in (cmd.cond, cmd.src_true, cmd.src_false):
                ok = ok and read(reg, CIPHER, index, "CMOV")
            if not ok:
                break
            if cmd.cond in written:
                cond_hazard = True
            else:
                cond_initial.add(cmd.cond)
            tags[cmd.dst] = CIPHER
            written.add(cmd.dst)
    return TagInfo(initial, cond_initial, sticks_at, cond_hazard)


# ---------------------------------------------------------------------------
# Witness generation


def _boolean_word(params: CryptoParams, truthy: bool) -> int:
    return (1 << params.n) - 1 if truthy else 0


def sorted_registers(program: Program) -> list[Register]:
    return sorted(
        (r for r in program.registers() if r != KEY_REG),
        key=lambda r: r.index or 0,
    )


def build_witness(
    program: Program,
    params: CryptoParams,
    rng,
    *,
    vary_key: bool = True,
    vary_cipher: bool = True,
    vary_salt: bool = True,
    env: TypeEnv = DEFAULT_ENV,
    info: TagInfo | None = None,
    registers: list[Register] | None = None,
    record_diffs: bool = True,
) -> LowEquivWitness:
    """A low-equivalent pair for the program: public plaintexts equal, cipher
    bits / key / salt streams varied per the flags. Registers the program
    reads as a cmov condition (before writing them) receive per-side boolean
    encryptions so both runs can fire a cmov rule."""
    if info is None:
        info = analyze_tags(program)
    if registers is None:
        registers = sorted_registers(program)
    key1 = Key(rng.getrandbits(params.key_bits))
    key2 = Key(rng.getrandbits(params.key_bits)) if vary_key else key1

    regs1: dict[Register, Value] = {KEY_REG: plain(key1.material)}
    regs2: dict[Register, Value] = {KEY_REG: plain(key2.material)}
    if info.cond_initial:
        setup1 = SaltSource(params.s, SaltMode.FRESH, rng.getrandbits(32))
        setup2 = SaltSource(params.s, SaltMode.FRESH, rng.getrandbits(32))
        enc1, _ = cipher_ops(params, key1)
        enc2, _ = cipher_ops(params, key2)

    for reg in registers:
        tag = info.initial_tags.get(reg)
        if reg in info.cond_initial:
            b1 = bool(rng.getrandbits(1))
            b2 = bool(rng.getrandbits(1))
            regs1[reg] = cipher(enc1(_boolean_word(params, b1), setup1))
            regs2[reg] = cipher(enc2(_boolean_word(params, b2), setup2))
        elif tag == CIPHER:
            bits1 = rng.getrandbits(params.block_bits)
            bits2 = rng.getrandbits(params.block_bits) if vary_cipher else bits1
            regs1[reg] = cipher(bits1)
            regs2[reg] = cipher(bits2)
        else:
            # Plain initial value, or never read at all: public, equal.
            bits = rng.getrandbits(params.n)
            regs1[reg] = plain(bits)
            regs2[reg] = plain(bits)

    seed1 = rng.getrandbits(48)
    seed2 = rng.getrandbits(48) if vary_salt else seed1
    s1 = MachineState(regs1, params, SaltSource(params.s, SaltMode.FRESH, seed1))
    s2 = MachineState(regs2, params, SaltSource(params.s, SaltMode.FRESH, seed2))
    diffs = differing_registers(s1, s2) if record_diffs else []
    return LowEquivWitness(s1, s2, diffs)


def witness_battery(
    program: Program,
    params: CryptoParams,
    count: int,
    seed: int,
    env: TypeEnv = DEFAULT_ENV,
) -> list[LowEquivWitness]:
    """Deterministic battery cycling through the variation dimensions that
    low-equivalence leaves unconstrained (key, cipher bits, salt streams)."""
    rng = random.Random(seed)
    combos = [
        (True, True, True),
        (True, False, False),
        (False, True, False),
        (False, False, True),
        (True, True, False),
        (False, True, True),
        (True, False, True),
        (False, False, False),
    ]
    out = []
    for i in range(count):
        vk, vc, vs = combos[i % len(combos)]
        out.append(
            build_witness(program, params, rng, vary_key=vk, vary_cipher=vc,
                          vary_salt=vs, env=env)
        )
    return out


# ---------------------------------------------------------------------------
# Lockstep pair checking


COMPLETED = "completed"
BOTH_STUCK = "both_stuck"
ONE_SIDED_STUCK = "one_sided_stuck"


@dataclass
class PairOutcome:
    status: str
    low_equivalent: bool | None
    cycles: tuple[int, int]
    cycles_equal: bool
    stuck: tuple[str, str] | None = None  # (side, detail) for one-sided stuck

    @property
    def is_counterexample(self) -> bool:
        if self.status == ONE_SIDED_STUCK:
            return False
        return not (self.low_equivalent and self.cycles_equal)


def check_pair(
    program: Program,
    witness: LowEquivWitness,
    env: TypeEnv = DEFAULT_ENV,
    sem: Semantics = interp.DEFAULT_SEMANTICS,
    clone: bool = True,
) -> PairOutcome:
    """Run both sides in lockstep until both reach skip (or stick).

    The walk mirrors the small-step sequence exactly — one step per non-skip
    command plus one separator step between commands — reusing the
    interpreter's command rules; tests pin agreement with interp.run.
    """
    s1 = witness.s1.clone() if clone else witness.s1
    s2 = witness.s2.clone() if clone else witness.s2
    n = m = 0
    cycles_equal = True
    exec_command = interp._exec_command
    seq_cost = sem.costs.seq
    commands = program.commands
    last = len(commands) - 1
    for index, cmd in enumerate(commands):
        if not isinstance(cmd, Skip):
            stuck1 = stuck2 = None
            try:
                c1 = exec_command(cmd, s1, sem)
            except Stuck as e:
                stuck1 = e
            try:
                c2 = exec_command(cmd, s2, sem)
            except Stuck as e:
                stuck2 = e
            if stuck1 is not None and stuck2 is not None:
                return PairOutcome(BOTH_STUCK, low_equiv(s1, s2, env), (n, m), cycles_equal)
            if stuck1 is not None or stuck2 is not None:
                side = "left" if stuck1 is not None else "right"
                detail = str(stuck1 or stuck2)
                return PairOutcome(ONE_SIDED_STUCK, None, (n, m), cycles_equal,
                                   (side, detail))
            n += c1
            m += c2
            if c1 != c2:
                cycles_equal = False
        if index != last:
            n += seq_cost
            m += seq_cost
    return PairOutcome(COMPLETED, low_equiv(s1, s2, env), (n, m), cycles_equal)


@dataclass
class Counterexample:
    program: Program
    witness: LowEquivWitness
    outcome: PairOutcome
    finals: tuple[MachineState, MachineState] | None = None

    def describe(self) -> str:
        from .lang import format_program

        return (
            f"program {format_program(self.program)!r}: status={self.outcome.status} "
            f"low_equiv={self.outcome.low_equivalent} cycles={self.outcome.cycles}"
        )

    def to_json(self) -> dict:
        from .lang import format_program

        def dump(state: MachineState) -> dict:
            return {str(r): str(v) for r, v in sorted(
                state.regs.items(), key=lambda kv: (kv[0].index is None, kv[0].index or 0))}

        body = {
            "program": format_program(self.program),
            "status": self.outcome.status,
            "low_equivalent": self.outcome.low_equivalent,
            "cycles": list(self.outcome.cycles),
            "initial": [dump(self.witness.s1), dump(self.witness.s2)],
            "differing_locations": [str(r) for r in self.witness.differing_locations],
        }
        if self.finals is not None:
            body["finals"] = [dump(self.finals[0]), dump(self.finals[1])]
        return body


@dataclass
class SoundnessVerdict:
    passed: bool
    pairs_checked: int
    completed: int = 0
    both_stuck: int = 0
    findings: list[tuple[Program, LowEquivWitness, PairOutcome]] = field(default_factory=list)
    counterexample: Counterexample | None = None

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "pairs_checked": self.pairs_checked,
            "completed": self.completed,
            "both_stuck": self.both_stuck,
            "one_sided_stuck_findings": len(self.findings),
            "counterexample": None
            if self.counterexample is None
            else self.counterexample.describe(),
        }


def check_single_step(
    command: Command,
    witnesses,
    params: CryptoParams,
    env: TypeEnv = DEFAULT_ENV,
    sem: Semantics = interp.DEFAULT_SEMANTICS,
) -> SoundnessVerdict:
    """Single-step security: one step of a well-typed command on each pair
    must preserve low-equivalence with equal cycle cost. Witness batteries
    are built so one-sided sticks cannot happen; if one does, it fails."""
    program = Program((command,))
    typecheck(program, env)
    verdict = SoundnessVerdict(True, 0)
    for witness in witnesses:
        verdict.pairs_checked += 1
        outcome = check_pair(program, witness, env, sem)
        if outcome.status == COMPLETED:
            verdict.completed += 1
        elif outcome.status == BOTH_STUCK:
            verdict.both_stuck += 1
        else:
            verdict.passed = False
            verdict.counterexample = Counterexample(program, witness, outcome)
            return verdict
        if outcome.is_counterexample:
            verdict.passed = False
            verdict.counterexample = Counterexample(program, witness, outcome)
            return verdict
    return verdict


def check_soundness(
    program: Program,
    params: CryptoParams,
    *,
    mode: str = "random",
    trials: int = 10,
    seed: int = 0,
    env: TypeEnv = DEFAULT_ENV,
    sem: Semantics = interp.DEFAULT_SEMANTICS,
    max_pairs: int = 1 << 16,
) -> SoundnessVerdict:
    """Multi-step soundness for one program: every checked pair must end
    low-equivalent with equal total cycles. Ill-typed programs are rejected
    up front (TypeCheckError)."""
    typecheck(program, env)
    if mode == "random":
        witnesses = witness_battery(program, params, trials, seed, env)
    elif mode == "exhaustive":
        witnesses = exhaustive_witnesses(program, params, max_pairs=max_pairs, env=env)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    verdict = SoundnessVerdict(True, 0)
    for witness in witnesses:
        verdict.pairs_checked += 1
        outcome = check_pair(program, witness, env, sem)
        if outcome.status == COMPLETED:
            verdict.completed += 1
        elif outcome.status == BOTH_STUCK:
            verdict.both_stuck += 1
        else:
            verdict.findings.append((program, witness, outcome))
            continue
        if outcome.is_counterexample:
            verdict.passed = False
            verdict.counterexample = Counterexample(program, witness, outcome)
            return verdict
    return verdict


def exhaustive_witnesses(
    program: Program,
    params: CryptoParams,
    *,
    max_pairs: int = 1 << 16,
    salt_seed_pairs: tuple[tuple[int, int], ...] = ((0, 1), (7, 7)),
    env: TypeEnv = DEFAULT_ENV,
    sample_seed: int = 0,
):
    """Enumerate low-equivalent pairs over the program's registers.

    Keys range over the full key space per side; plain registers over all
    n-bit values (equal on both sides); condition registers over per-side
    booleans; other cipher registers over a small bit-pattern alphabet.
    If the product exceeds max_pairs it is deterministically subsampled.
    """
    info = analyze_tags(program)
    regs = sorted(program.registers(), key=lambda r: (r.index is None, r.index or 0))
    regs = [r for r in regs if r != KEY_REG]

    blk = params.block_bits
    cipher_alphabet = sorted({0, (1 << blk) - 1, 0b0101 & ((1 << blk) - 1)})
    dims: list[tuple[str, Register | None, list]] = []
    dims.append(("key", None, [(a, b) for a in range(1 << params.key_bits)
                               for b in range(1 << params.key_bits)]))
    dims.append(("salt", None, list(salt_seed_pairs)))
    for reg in regs:
        tag = info.initial_tags.get(reg)
        if reg in info.cond_initial:
            dims.append(("cond", reg, [(a, b) for a in (False, True) for b in (False, True)]))
        elif tag == CIPHER:
            dims.append(("cipher", reg, [(a, b) for a in cipher_alphabet
                                         for b in cipher_alphabet]))
        else:
            dims.append(("plain", reg, list(range(1 << params.n))))

    total = 1
    for _, _, domain in dims:
        total *= len(domain)
    combos = itertools.product(*(domain for _, _, domain in dims))
    if total > max_pairs:
        rng = random.Random(sample_seed)
        keep = max_pairs / total
        combos = (c for c in combos if rng.random() < keep)

    for combo in combos:
        regs1: dict[Register, Value] = {}
        regs2: dict[Register, Value] = {}
        key1 = key2 = Key(0)
        seeds = (0, 0)
        pending_conds: list[tuple[Register, bool, bool]] = []
        for (kind, reg, _), choice in zip(dims, combo):
            if kind == "key":
                key1, key2 = Key(choice[0]), Key(choice[1])
            elif kind == "salt":
                seeds = choice
            elif kind == "cond":
                pending_conds.append((reg, choice[0], choice[1]))
            elif kind == "cipher":
                regs1[reg] = cipher(choice[0])
                regs2[reg] = cipher(choice[1])
            else:
                regs1[reg] = plain(choice)
                regs2[reg] = plain(choice)
        setup1 = SaltSource(params.s, SaltMode.FRESH, 101)
        setup2 = SaltSource(params.s, SaltMode.FRESH, 202)
        for reg, b1, b2 in pending_conds:
            regs1[reg] = cipher(encrypt(params, key1, _boolean_word(params, b1), setup1))
            regs2[reg] = cipher(encrypt(params, key2, _boolean_word(params, b2), setup2))
        regs1[KEY_REG] = plain(key1.material)
        regs2[KEY_REG] = plain(key2.material)
        s1 = MachineState(regs1, params, SaltSource(params.s, SaltMode.FRESH, seeds[0]))
        s2 = MachineState(regs2, params, SaltSource(params.s, SaltMode.FRESH, seeds[1]))
        yield LowEquivWitness(s1, s2, differing_registers(s1, s2))


# ---------------------------------------------------------------------------
# Program generation: random well-typed programs and exhaustive enumeration


def random_well_typed_program(
    rng: random.Random,
    max_len: int = 6,
    n_regs: int = 4,
    kinds: tuple[BopKind, ...] = tuple(BopKind),
    runnable: bool = True,
) -> Program:
    """A random well-typed program. With runnable=True the generator keeps a
    tag model so no command can stick, and cmov conditions only read registers
    that still hold their initial (boolean-encrypted) value."""
    length = rng.randint(1, max_len)
    registers = [gpr(i) for i in range(1, n_regs + 1)]
    tags: dict[Register, str] = {}
    written: set[Register] = set()
    commands: list[Command] = []

    def usable(reg: Register, want: str) -> bool:
        return tags.get(reg, want) == want

    for _ in range(length):
        options: list[str] = ["skip"]
        enc_targets = [r for r in registers if usable(r, PLAIN)]
        bop_operands = [r for r in registers if usable(r, CIPHER)]
        cond_pool = [r for r in registers if usable(r, CIPHER) and r not in written]
        if enc_targets:
            options += ["enc"] * 4
        if bop_operands:
            options += ["bop"] * 4
        if (cond_pool if runnable else bop_operands) and bop_operands:
            options += ["cmov"] * 3
        choice = rng.choice(options)
        if choice == "skip":
            commands.append(SKIP)
            continue
        if choice == "enc":
            reg = rng.choice(enc_targets)
            tags.setdefault(reg, PLAIN)
            commands.append(Enc(reg))
            tags[reg] = CIPHER
            written.add(reg)
            continue
        if choice == "bop":
            r1 = rng.choice(bop_operands)
            r2 = rng.choice(bop_operands)
            tags.setdefault(r1, CIPHER)
            tags.setdefault(r2, CIPHER)
            commands.append(Bop(rng.choice(kinds), r1, r2))
            tags[r1] = CIPHER
            written.add(r1)
            continue
        cond = rng.choice(cond_pool if runnable else bop_operands)
        src_t = rng.choice(bop_operands)
        src_f = rng.choice(bop_operands)
        dst = rng.choice(registers)
        for reg in (cond, src_t, src_f):
            tags.setdefault(reg, CIPHER)
        commands.append(Cmov(cond, dst, src_t, src_f))
        tags[dst] = CIPHER
        written.add(dst)
    return Program(tuple(commands))


def all_commands(
    n_regs: int, kinds: tuple[BopKind, ...] = tuple(BopKind)
) -> list[Command]:
    """The full command vocabulary over r1..r{n_regs} (well-typed: no keyReg)."""
    registers = [gpr(i) for i in range(1, n_regs + 1)]
    commands: list[Command] = [SKIP]
    commands += [Enc(r) for r in registers]
    commands += [Bop(k, a, b) for k in kinds for a in registers for b in registers]
    commands += [
        Cmov(c, d, t, f)
        for c in registers
        for d in registers
        for t in registers
        for f in registers
    ]
    return commands


def enumerate_programs(max_len: int, n_regs: int, kinds: tuple[BopKind, ...]):
    """All programs of 1..max_len commands over the command vocabulary."""
    vocab = all_commands(n_regs, kinds)
    for length in range(1, max_len + 1):
        for combo in itertools.product(vocab, repeat=length):
            yield Program(combo)


@dataclass
class SuiteResult:
    programs: int
    pairs: int
    completed: int
    both_stuck: int
    findings: int
    counterexample: Counterexample | None

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "programs": self.programs,
            "pairs": self.pairs,
            "completed": self.completed,
            "both_stuck": self.both_stuck,
            "one_sided_stuck_findings": self.findings,
            "counterexample": None
            if self.counterexample is None
            else self.counterexample.describe(),
        }


def random_soundness_suite(
    params: CryptoParams,
    *,
    programs: int = 1000,
    pairs_per_program: int = 10,
    max_len: int = 6,
    n_regs: int = 4,
    seed: int = 0,
    sem: Semantics = interp.DEFAULT_SEMANTICS,
    env: TypeEnv = DEFAULT_ENV,
    stop_at_counterexample: bool = True,
) -> SuiteResult:
    """Randomized soundness sweep: generated programs are runnable by
    construction, so every pair is expected to complete."""
    rng = random.Random(seed)
    result = SuiteResult(0, 0, 0, 0, 0, None)
    for _ in range(programs):
        program = random_well_typed_program(rng, max_len=max_len, n_regs=n_regs)
        result.programs += 1
        battery = witness_battery(program, params, pairs_per_program,
                                  rng.getrandbits(32), env)
        for witness in battery:
            result.pairs += 1
            outcome = check_pair(program, witness, env, sem)
            if outcome.status == COMPLETED:
                result.completed += 1
            elif outcome.status == BOTH_STUCK:
                result.both_stuck += 1
            else:
                result.findings += 1
                continue
            if outcome.is_counterexample and result.counterexample is None:
                result.counterexample = Counterexample(program, witness, outcome)
                if stop_at_counterexample:
                    return result
    return result


_SWEEP_VARIATIONS = (
    dict(vary_key=True, vary_cipher=True, vary_salt=True),
    dict(vary_key=True, vary_cipher=False, vary_salt=False),
    dict(vary_key=False, vary_cipher=True, vary_salt=False),
)


def _sweep_slice(
    params: CryptoParams,
    max_len: int,
    n_regs: int,
    kinds: tuple[BopKind, ...],
    pairs_per_program: int,
    seed: int,
    sem: Semantics,
    start: int,
    stride: int,
) -> SuiteResult:
    """Check every stride-th program (offset start); results merge additively."""
    env = DEFAULT_ENV
    result = SuiteResult(0, 0, 0, 0, 0, None)
    variations = _SWEEP_VARIATIONS[:pairs_per_program]
    for index, program in enumerate(enumerate_programs(max_len, n_regs, kinds)):
        if stride > 1 and index % stride != start:
            continue
        result.programs += 1
        rng = SplitMix64((seed << 24) ^ (index * 0x9E3779B1))
        info = analyze_tags(program)
        registers = sorted_registers(program)
        for variation_index, variation in enumerate(variations):
            witness = build_witness(
                program, params, rng, env=env, info=info, registers=registers,
                record_diffs=False, **variation,
            )
            result.pairs += 1
            outcome = check_pair(program, witness, env, sem, clone=False)
            if outcome.status == COMPLETED:
                result.completed += 1
            elif outcome.status == BOTH_STUCK:
                result.both_stuck += 1
            else:
                result.findings += 1
                continue
            if outcome.is_counterexample:
                # Rebuild the witness from the same stream so the report
                # carries pristine (reproducible) initial states.
                rng2 = SplitMix64((seed << 24) ^ (index * 0x9E3779B1))
                for v in variations[: variation_index + 1]:
                    fresh = build_witness(
                        program, params, rng2, env=env, info=info,
                        registers=registers, **v,
                    )
                finals = (witness.s1, witness.s2)
                result.counterexample = Counterexample(program, fresh, outcome, finals)
                return result
    return result


def exhaustive_program_sweep(
    params: CryptoParams,
    *,
    max_len: int = 3,
    n_regs: int = 3,
    kinds: tuple[BopKind, ...] = (BopKind.ADD,),
    pairs_per_program: int = 2,
    seed: int = 0,
    sem: Semantics = interp.DEFAULT_SEMANTICS,
    env: TypeEnv = DEFAULT_ENV,
    workers: int = 1,
) -> SuiteResult:
    """Exhaustive sweep over the program space (desk scale: the default
    enumerates bops at one representative operator; kinds widens it).

    Per program, deterministic pairs vary the dimensions low-equivalence
    leaves free: one pair varies key, cipher bits and salts together, one
    varies the key alone. One-sided sticks (a bop-produced condition that is
    boolean on one side only) are semantic artifacts outside the theorem's
    premises; they are counted as findings, not failures. Results are
    independent of the worker count: per-program witness streams are derived
    from the global program index.
    """
    if workers <= 1:
        return _sweep_slice(params, max_len, n_regs, kinds, pairs_per_program,
                            seed, sem, 0, 1)
    import multiprocessing as mp

    ctx = mp.get_context("fork")
    with ctx.Pool(workers) as pool:
        parts = pool.starmap(
            _sweep_slice,
            [
                (params, max_len, n_regs, kinds, pairs_per_program, seed, sem, w, workers)
                for w in range(workers)
            ],
        )
    merged = SuiteResult(0, 0, 0, 0, 0, None)
    for part in parts:
        merged.programs += part.programs
        merged.pairs += part.pairs
        merged.completed += part.completed
        merged.both_stuck += part.both_stuck
        merged.findings += part.findings
        if part.counterexample is not None and merged.counterexample is None:
            merged.counterexample = part.counterexample
    return merged
