"""Executable small-step semantics for the enclave ISA.

Every rule that produces data re-encrypts it under the key register with a
fresh salt, so ENC/BOP/CMOV always write ciphertext-tagged values. Step costs
model the timing function: they depend only on the rule matched, never on
operand values, which is what makes the two-run timing check below meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .crypto import CryptoParams, Key, SaltSource, cipher_ops
from .lang import KEY_REG, SKIP, Bop, BopKind, Cmov, Command, Enc, Program, Register, Skip

PLAIN = "plain"
CIPHER = "cipher"


@dataclass(frozen=True, slots=True)
class Value:
    """A bit vector tagged as plaintext or ciphertext."""

    kind: str
    bits: int

    @property
    def is_cipher(self) -> bool:
        return self.kind == CIPHER

    def __str__(self) -> str:
        return f"[{self.bits:#x}]" if self.kind == CIPHER else f"{self.bits:#x}"


def plain(bits: int) -> Value:
    return Value(PLAIN, bits)


def cipher(bits: int) -> Value:
    return Value(CIPHER, bits)


@dataclass(frozen=True, slots=True)
class StepCosts:
    """Cycles charged per rule. The figure's superscripts are read as below;
    alternate readings are a constructor call away."""

    enc: int = 1
    bop: int = 2
    cmov: int = 2
    seq: int = 1


# BOP_PLAIN_RESULT is a deliberate rule mutation for mutation-testing the
# noninterference checker: the BOP rule writes its plaintext result without
# re-encrypting. Never enabled outside tests.
BOP_PLAIN_RESULT = "bop_plain_result"


@dataclass(frozen=True, slots=True)
class Semantics:
    costs: StepCosts = field(default_factory=StepCosts)
    fault: str | None = None


DEFAULT_SEMANTICS = Semantics()


class Stuck(Exception):
    """No rule applies: the offending rule name and register are recorded."""

    def __init__(self, rule: str, register: Register, detail: str):
        super().__init__(f"{rule} stuck at {register}: {detail}")
        self.rule = rule
        self.register = register
        self.detail = detail


@dataclass
class MachineState:
    """Register map plus the crypto context a run needs; single-owner mutable."""

    regs: dict[Register, Value]
    params: CryptoParams
    salts: SaltSource

    def __post_init__(self):
        key = self.regs.get(KEY_REG)
        if key is None or key.is_cipher:
            raise ValueError("keyReg must hold plaintext key material")
        if not 0 <= key.bits < (1 << self.params.key_bits):
            raise ValueError("keyReg width must be n+s bits")
        plain_limit = 1 << self.params.n
        cipher_limit = 1 << self.params.block_bits
        for reg, value in self.regs.items():
            limit = cipher_limit if value.is_cipher else plain_limit
            if reg != KEY_REG and not 0 <= value.bits < limit:
                raise ValueError(f"{reg} holds {value}, out of range for its tag")
        self._ops_cache: tuple[Value, tuple] | None = None

    def key(self) -> Key:
        return Key(self.regs[KEY_REG].bits)

    def ops(self):
        """(encrypt, decrypt) closures for the current key, cached per key value."""
        value = self.regs[KEY_REG]
        cached = self._ops_cache
        if cached is None or cached[0] is not value:
            self._ops_cache = cached = (value, cipher_ops(self.params, Key(value.bits)))
        return cached[1]

    def clone(self) -> "MachineState":
        return MachineState(dict(self.regs), self.params, self.salts.clone())


def boot_state(
    params: CryptoParams,
    key: Key,
    salts: SaltSource,
    assignments: dict[Register, Value] | None = None,
    r_max: int = 0,
) -> MachineState:
    """State with keyReg loaded and optionally r1..r_max zeroed plaintext."""
    regs: dict[Register, Value] = {KEY_REG: plain(key.material)}
    from .lang import gpr

    for i in range(1, r_max + 1):
        regs[gpr(i)] = plain(0)
    if assignments:
        regs.update(assignments)
    return MachineState(regs, params, salts)


@dataclass(frozen=True)
class StepOutcome:
    next_program: Program
    next_state: MachineState
    cycles: int


def _read(state: MachineState, reg: Register, rule: str) -> Value:
    value = state.regs.get(reg)
    if value is None:
        raise Stuck(rule, reg, "register not in state domain")
    return value


def _read_cipher(state: MachineState, reg: Register, rule: str) -> int:
    value = _read(state, reg, rule)
    if not value.is_cipher:
        raise Stuck(rule, reg, "operand is plaintext, rule needs a ciphertext")
    return value.bits


_ALL_ONES_CACHE: dict[int, int] = {}


def bop_apply(kind: BopKind, a: int, b: int, n: int) -> int:
    """Total n-bit semantics of the binary operators: wrapping arithmetic,
    shift amounts modulo width, comparisons yield all-ones / all-zeros."""
    mask = (1 << n) - 1
    if kind is BopKind.ADD:
        return (a + b) & mask
    if kind is BopKind.SUB:
        return (a - b) & mask
    if kind is BopKind.SHL:
        return (a << (b % n)) & mask
    if kind is BopKind.SHR:
        return a >> (b % n)
    if kind is BopKind.AND:
        return a & b
    if kind is BopKind.OR:
        return a | b
    if kind is BopKind.XOR:
        return a ^ b
    if kind is BopKind.LT:
        return mask if a < b else 0
    if kind is BopKind.EQ:
        return mask if a == b else 0
    raise ValueError(f"unknown bop kind {kind}")


def _exec_command(cmd: Command, state: MachineState, sem: Semantics) -> int:
    """Apply one non-skip command in place; returns its cycle cost."""
    params = state.params
    if isinstance(cmd, Enc):
        value = _read(state, cmd.reg, "ENC")
        if value.is_cipher:
            raise Stuck("ENC", cmd.reg, "operand is already a ciphertext")
        if value.bits >= (1 << params.n):
            raise Stuck("ENC", cmd.reg, f"operand wider than {params.n} bits")
        enc, _ = state.ops()
        state.regs[cmd.reg] = cipher(enc(value.bits, state.salts))
        return sem.costs.enc
    if isinstance(cmd, Bop):
        c1 = _read_cipher(state, cmd.r1, "BOP")
        c2 = _read_cipher(state, cmd.r2, "BOP")
        enc, dec = state.ops()
        result = bop_apply(cmd.kind, dec(c1), dec(c2), params.n)
        if sem.fault == BOP_PLAIN_RESULT:
            state.regs[cmd.r1] = plain(result)
        else:
            state.regs[cmd.r1] = cipher(enc(result, state.salts))
        return sem.costs.bop
    if isinstance(cmd, Cmov):
        c_cond = _read_cipher(state, cmd.cond, "CMOV")
        enc, dec = state.ops()
        cond = dec(c_cond)
        all_ones = (1 << params.n) - 1
        if cond == all_ones:
            src = cmd.src_true
        elif cond == 0:
            src = cmd.src_false
        else:
            raise Stuck("CMOV", cmd.cond, f"condition {cond:#x} is neither all-ones nor zero")
        # Both arms are read so the rule's shape (and its cost) cannot depend
        # on the condition.
        _read_cipher(state, cmd.src_true, "CMOV")
        _read_cipher(state, cmd.src_false, "CMOV")
        selected = state.regs[src].bits
        state.regs[cmd.dst] = cipher(enc(dec(selected), state.salts))
        return sem.costs.cmov
    raise ValueError(f"not an executable command: {cmd}")


def is_terminal(program: Program) -> bool:
    """The residual ``skip`` continuation: nothing left to step."""
    return len(program.commands) == 1 and isinstance(program.commands[0], Skip)


def step(program: Program, state: MachineState,
         sem: Semantics = DEFAULT_SEMANTICS) -> StepOutcome:
    """One small-step transition. Mutates ``state`` in place (single owner);
    the outcome carries the same object. Raises Stuck when no rule applies."""
    if is_terminal(program):
        raise ValueError("terminal program: no rule steps bare skip")
    head = program.commands[0]
    rest = program.commands[1:]
    if isinstance(head, Skip):
        # SEQ base: skip; q -> q
        return StepOutcome(Program(rest), state, sem.costs.seq)
    cost = _exec_command(head, state, sem)
    return StepOutcome(Program((SKIP, *rest)), state, cost)


@dataclass(frozen=True)
class RunResult:
    state: MachineState
    cycles: int
    steps: int


def run(program: Program, state: MachineState,
        sem: Semantics = DEFAULT_SEMANTICS) -> RunResult:
    """Multi-step closure: iterate to the terminal skip, summing cycles."""
    total = 0
    steps = 0
    while not is_terminal(program):
        outcome = step(program, state, sem)
        program = outcome.next_program
        total += outcome.cycles
        steps += 1
    return RunResult(state, total, steps)


def expected_step_count(program: Program) -> int:
    """Non-skip commands each take a step; each separator takes a step."""
    non_skip = sum(1 for c in program.commands if not isinstance(c, Skip))
    return non_skip + len(program.commands) - 1
