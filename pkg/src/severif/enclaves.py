"""Builders for the seven enclave design variants.

Three secure designs (pipelined, rolled, cached) and four deliberately broken
ones. Each variant packages its circuit with the metadata the checkers need:
which registers are secret sources (and how to vary them), where the sinks
are, its declassification points, declared latencies, and the verdict the
checkers are expected to reproduce. Vulnerable builders differ from their
secure counterparts by one documented edit each.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .crypto import CryptoParams, Key
from .hwir import Circuit, CircuitBuilder, DeclassPoint, simulate
from .lang import BopKind

ALU_OPS: tuple[BopKind, ...] = tuple(BopKind)  # op_sel index order

SECURE = ("default", "rolled", "cache")
VULNERABLE = ("vuln_rolled", "vuln_multiplier", "vuln_cache", "vuln_rsa")
VARIANT_NAMES = SECURE + VULNERABLE

# Largest prime below 2^w: the vulnerable RSA unit's modulus by block width.
_MODULUS = {4: 13, 6: 61, 8: 251, 10: 1021, 12: 4093, 16: 65521}


@dataclass(frozen=True)
class EnclaveParams:
    n: int = 2
    s: int = 2
    rounds: int = 4
    key_seed: int = 1
    cache_lines: int = 2
    tag_bits: int | None = None   # None: lossless tag (cipher minus index bits)
    modulus: int | None = None    # vuln_rsa; None picks a prime near 2^block

    @property
    def block_bits(self) -> int:
        return self.n + self.s

    def crypto(self) -> CryptoParams:
        return CryptoParams(self.n, self.s, self.rounds)

    def key(self) -> Key:
        return Key.from_seed(self.crypto(), self.key_seed)


@dataclass(frozen=True)
class SecretSource:
    """A secret as the checkers vary it.

    mode 'hold': the registers are overridden with per-run constants every
    cycle (transient values like decrypted operands). mode 'init': the
    registers' initial values differ and dynamics run free (persistent
    values like the key)."""

    name: str
    regs: tuple[str, ...]
    mode: str  # 'hold' | 'init'
    width: int


@dataclass(frozen=True)
class Flow:
    source: str
    sink: str
    classification: str  # functional | timing | functional-timing

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.source, self.sink, self.classification)


@dataclass(frozen=True)
class ExpectedVerdict:
    secure: bool
    flows: tuple[Flow, ...] = ()

    def __post_init__(self):
        if self.secure != (len(self.flows) == 0):
            raise ValueError("secure verdicts carry no flows")


@dataclass
class EnclaveVariant:
    name: str
    params: EnclaveParams
    circuit: Circuit
    secrets: tuple[SecretSource, ...]
    sinks: dict[str, str]            # logical sink -> output port
    declass: tuple[DeclassPoint, ...]
    expected: ExpectedVerdict
    latency: dict[str, int]          # valid_latency, op_period, enc_rounds
    invalid_default: int = 0
    cache_line_regs: tuple[tuple[str, str, str], ...] = ()  # (valid, tag, data)

    def source(self, name: str) -> SecretSource:
        for src in self.secrets:
            if src.name == name:
                return src
        raise KeyError(f"{self.name} has no secret source {name!r}")


def _alu(b: CircuitBuilder, pa: int, pb: int, sel: int, n: int) -> int:
    """The ISA operator set as a mux tree over an op-select index."""
    amt = b.const_table(pb, [i % n for i in range(1 << n)], n)
    results = {
        BopKind.ADD: b.add(pa, pb),
        BopKind.SUB: b.sub(pa, pb),
        BopKind.SHL: b.shl(pa, amt),
        BopKind.SHR: b.shr(pa, amt),
        BopKind.AND: b.and_(pa, pb),
        BopKind.OR: b.or_(pa, pb),
        BopKind.XOR: b.xor(pa, pb),
        BopKind.LT: b.bool_word(b.lt(pa, pb), n),
        BopKind.EQ: b.bool_word(b.eq(pa, pb), n),
    }
    entries = [results[k] for k in ALU_OPS]
    entries += [entries[0]] * (16 - len(entries))
    return b.node_table(sel, entries)


def _encrypt_pipeline(b: CircuitBuilder, key: int, enc_in: int, start: int,
                      rounds: int, blk: int, prefix: str = "st") -> tuple[int, int]:
    """R register stages, one cipher round each; returns (data_node, valid_node).
    The pipeline runs every cycle, so the tail always carries a fully-mixed
    block and emits one ciphertext per cycle after fill."""
    stage_val = enc_in
    stage_vld = start
    for r in range(rounds):
        st = b.reg(f"{prefix}{r}", blk)
        wv = b.reg(f"{prefix}v{r}", 1)
        b.set_next(f"{prefix}{r}", b.feistel_round_fwd(key, b.const(r, 8), stage_val))
        b.set_next(f"{prefix}v{r}", stage_vld)
        stage_val = st
        stage_vld = wv
    return stage_val, stage_vld


def _front_ports(b: CircuitBuilder, params: EnclaveParams):
    blk = params.block_bits
    in_valid = b.input("in_valid", 1)
    op_a = b.input("op_a", blk)
    op_b = b.input("op_b", blk)
    op_sel = b.input("op_sel", 4)
    salt = b.input("salt", params.s)
    return in_valid, op_a, op_b, op_sel, salt


def _key_reg(b: CircuitBuilder, params: EnclaveParams) -> int:
    key = b.reg("key", params.block_bits, params.key().material)
    b.set_next("key", key)
    return key


# ---------------------------------------------------------------------------
# Default: fully pipelined. Decrypt, one-cycle ALU, R-stage re-encrypt
# pipeline; Data is the last crypto stage, declassified with p == true.


def _build_default(params: EnclaveParams) -> EnclaveVariant:
    n, blk, R = params.n, params.block_bits, params.rounds
    b = CircuitBuilder("default")
    in_valid, op_a, op_b, op_sel, salt = _front_ports(b, params)
    key = _key_reg(b, params)

    pa = b.reg("pa", n)
    pb = b.reg("pb", n)
    sel0 = b.reg("sel0", 4)
    v0 = b.reg("v0", 1)
    b.set_next("pa", b.slice(b.decrypt_comb(key, op_a, R), params.s, n))
    b.set_next("pb", b.slice(b.decrypt_comb(key, op_b, R), params.s, n))
    b.set_next("sel0", op_sel)
    b.set_next("v0", in_valid)

    res = b.reg("res", n)
    salt1 = b.reg("salt1", params.s)
    v1 = b.reg("v1", 1)
    b.set_next("res", _alu(b, pa, pb, sel0, n))
    b.set_next("salt1", salt)
    b.set_next("v1", v0)

    data, valid = _encrypt_pipeline(b, key, b.concat(res, salt1), v1, R, blk)
    b.tag("enc_out", data)
    b.tag("enc_done", b.const(1, 1))
    b.output("valid", valid)
    b.output("data", data)

    return EnclaveVariant(
        name="default",
        params=params,
        circuit=b.build(),
        secrets=(
            SecretSource("plaintext", ("pa", "pb"), "hold", n),
            SecretSource("key", ("key",), "init", blk),
        ),
        sinks={"Valid": "valid", "Data": "data"},
        declass=(DeclassPoint("enc_out", "enc_done", "cf_data"),),
        expected=ExpectedVerdict(secure=True),
        latency={"valid_latency": R + 2, "op_period": 1, "enc_rounds": R},
    )


# ---------------------------------------------------------------------------
# Rolled: one round unit plus a round counter; Data gated to zero until the
# completion predicate (round counter == R) holds.


def _rolled_core(params: EnclaveParams, name: str, expose_state: bool) -> EnclaveVariant:
    n, blk, R = params.n, params.block_bits, params.rounds
    cw = max(R + 1, 2).bit_length()
    b = CircuitBuilder(name)
    in_valid, op_a, op_b, op_sel, salt = _front_ports(b, params)
    key = _key_reg(b, params)

    pa = b.reg("pa", n)
    pb = b.reg("pb", n)
    sel0 = b.reg("sel0", 4)
    opv = b.reg("opv", 1)
    enc_busy = b.reg("enc_busy", 1)
    rnd = b.reg("rnd", cw)
    enc_state = b.reg("enc_state", blk)
    b.tag("enc_out", enc_state)

    active = b.or_(opv, enc_busy)
    start = b.and_(in_valid, b.not_(active))
    b.set_next("pa", b.mux(start, b.slice(b.decrypt_comb(key, op_a, R), params.s, n), pa))
    b.set_next("pb", b.mux(start, b.slice(b.decrypt_comb(key, op_b, R), params.s, n), pb))
    b.set_next("sel0", b.mux(start, op_sel, sel0))
    b.set_next("opv", start)

    done = b.and_(enc_busy, b.eq_const(rnd, R))
    b.tag("enc_done", done)
    stepping = b.and_(enc_busy, b.not_(done))
    round_out = b.feistel_round_fwd(key, rnd, enc_state)
    alu_out = _alu(b, pa, pb, sel0, n)
    b.set_next("enc_busy", b.mux(opv, b.const(1, 1), b.mux(done, b.const(0, 1), enc_busy)))
    b.set_next("enc_state",
               b.mux(opv, b.concat(alu_out, salt), b.mux(stepping, round_out, enc_state)))
    b.set_next("rnd", b.mux(opv, b.const(0, cw), b.mux(stepping, b.add(rnd, b.const(1, cw)), rnd)))

    b.output("valid", done)
    if expose_state:
        # The single documented edit for vuln_rolled: the raw round state is
        # wired to Data every cycle instead of the gated, completed value.
        b.output("data", enc_state)
    else:
        b.output("data", b.mux(done, enc_state, b.const(0, blk)))

    flows = ()
    if expose_state:
        flows = (Flow("plaintext", "Data", "functional"), Flow("key", "Data", "functional"))
    return EnclaveVariant(
        name=name,
        params=params,
        circuit=b.build(),
        secrets=(
            SecretSource("plaintext", ("pa", "pb"), "hold", n),
            SecretSource("key", ("key",), "init", blk),
        ),
        sinks={"Valid": "valid", "Data": "data"},
        declass=(DeclassPoint("enc_out", "enc_done", "cf_data"),),
        expected=ExpectedVerdict(secure=not expose_state, flows=flows),
        latency={"valid_latency": R + 2, "op_period": R + 4, "enc_rounds": R},
    )


def _build_rolled(params: EnclaveParams) -> EnclaveVariant:
    return _rolled_core(params, "rolled", expose_state=False)


def _build_vuln_rolled(params: EnclaveParams) -> EnclaveVariant:
    return _rolled_core(params, "vuln_rolled", expose_state=True)


# ---------------------------------------------------------------------------
# Cache: decrypted-operand cache in front of the Default pipeline. The secure
# variant tags lines with ciphertext bits (public); the vulnerable one tags
# with the decrypted plaintext, so hit/miss timing depends on the secret.


def _cache_core(params: EnclaveParams, name: str, tag_by_plaintext: bool) -> EnclaveVariant:
    n, blk, R = params.n, params.block_bits, params.rounds
    lines = params.cache_lines
    if lines & (lines - 1) or lines < 2:
        raise ValueError("cache_lines must be a power of two >= 2")
    idx_bits = (lines - 1).bit_length()
    key_width = n if tag_by_plaintext else blk
    max_tag = key_width - idx_bits
    tag_bits = params.tag_bits if params.tag_bits is not None else max_tag
    if not 1 <= tag_bits <= max_tag:
        raise ValueError(f"tag_bits must be in 1..{max_tag}")

    b = CircuitBuilder(name)
    in_valid, op_a, op_b, op_sel, salt = _front_ports(b, params)
    key = _key_reg(b, params)

    # Stage 0: latch the lookup keys (ciphertexts; the vulnerable variant
    # decrypts first and latches plaintexts - its single documented edit).
    fv = b.reg("fv", 1)
    sel0 = b.reg("sel0", 4)
    b.set_next("sel0", b.mux(in_valid, op_sel, sel0))
    dec_a = b.slice(b.decrypt_comb(key, op_a, R), params.s, n)
    dec_b = b.slice(b.decrypt_comb(key, op_b, R), params.s, n)
    if tag_by_plaintext:
        ka = b.reg("da", n)
        kb = b.reg("db", n)
        b.set_next("da", b.mux(in_valid, dec_a, ka))
        b.set_next("db", b.mux(in_valid, dec_b, kb))
        plain_a, plain_b = ka, kb
    else:
        ka = b.reg("ca", blk)
        kb = b.reg("cb", blk)
        b.set_next("ca", b.mux(in_valid, op_a, ka))
        b.set_next("cb", b.mux(in_valid, op_b, kb))
        plain_a = b.slice(b.decrypt_comb(key, ka, R), params.s, n)
        plain_b = b.slice(b.decrypt_comb(key, kb, R), params.s, n)
    b.set_next("fv", in_valid)

    def split(node):
        index = b.slice(node, 0, idx_bits)
        tag = b.slice(node, idx_bits, tag_bits)
        return index, tag

    idx_a, tag_a = split(ka)
    idx_b, tag_b = split(kb)

    line_regs = []
    valids, tags, datas = [], [], []
    for i in range(lines):
        cv = b.reg(f"cv{i}", 1)
        ct = b.reg(f"ct{i}", tag_bits)
        cd = b.reg(f"cd{i}", n)
        line_regs.append((f"cv{i}", f"ct{i}", f"cd{i}"))
        valids.append(cv)
        tags.append(ct)
        datas.append(cd)

    def lookup(idx, tag):
        hit = None
        data = b.const(0, n)
        for i in range(lines):
            here = b.eq_const(idx, i)
            line_hit = b.and_(here, b.and_(valids[i], b.eq(tags[i], tag)))
            hit = line_hit if hit is None else b.or_(hit, line_hit)
            data = b.mux(here, datas[i], data)
        return hit, data

    hit_a, cached_a = lookup(idx_a, tag_a)
    hit_b, cached_b = lookup(idx_b, tag_b)
    all_hit = b.and_(hit_a, b.and_(hit_b, fv))
    miss = b.and_(fv, b.not_(b.and_(hit_a, hit_b)))
    mstall = b.reg("mstall", 1)
    b.set_next("mstall", miss)

    # Line update on a miss: operand A wins a conflict on the same line.
    fill_a = b.and_(miss, b.not_(hit_a))
    fill_b = b.and_(miss, b.not_(hit_b))
    for i in range(lines):
        here_a = b.and_(fill_a, b.eq_const(idx_a, i))
        here_b = b.and_(fill_b, b.eq_const(idx_b, i))
        take = b.or_(here_a, here_b)
        b.set_next(f"cv{i}", b.or_(valids[i], take))
        new_tag = b.mux(here_a, tag_a, tag_b)
        new_data = b.mux(here_a, plain_a, plain_b)
        b.set_next(f"ct{i}", b.mux(take, new_tag, tags[i]))
        b.set_next(f"cd{i}", b.mux(take, new_data, datas[i]))

    # Operand registers: on a hit cycle take cached data, on the stall cycle
    # take the decryptor output.
    pa = b.reg("pa", n)
    pb = b.reg("pb", n)
    v1 = b.reg("v1", 1)
    pa_next = b.mux(all_hit, cached_a, b.mux(mstall, plain_a, pa))
    pb_next = b.mux(all_hit, cached_b, b.mux(mstall, plain_b, pb))
    b.set_next("pa", pa_next)
    b.set_next("pb", pb_next)
    b.set_next("v1", b.or_(all_hit, mstall))

    res = b.reg("res", n)
    salt1 = b.reg("salt1", params.s)
    v2 = b.reg("v2", 1)
    b.set_next("res", _alu(b, pa, pb, sel0, n))
    b.set_next("salt1", salt)
    b.set_next("v2", v1)

    data, valid = _encrypt_pipeline(b, key, b.concat(res, salt1), v2, R, blk)
    b.tag("enc_out", data)
    b.tag("enc_done", b.const(1, 1))
    b.output("valid", valid)
    b.output("data", data)

    if tag_by_plaintext:
        secrets = (
            SecretSource("plaintext", ("da", "db"), "hold", n),
            SecretSource("key", ("key",), "init", blk),
        )
        expected = ExpectedVerdict(False, (Flow("plaintext", "Valid", "timing"),))
    else:
        secrets = (
            SecretSource("plaintext", ("pa", "pb"), "hold", n),
            SecretSource("key", ("key",), "init", blk),
        )
        expected = ExpectedVerdict(secure=True)
    return EnclaveVariant(
        name=name,
        params=params,
        circuit=b.build(),
        secrets=secrets,
        sinks={"Valid": "valid", "Data": "data"},
        declass=(DeclassPoint("enc_out", "enc_done", "cf_data"),),
        expected=expected,
        latency={"valid_latency": R + 4, "op_period": R + 6, "enc_rounds": R,
                 "hit_latency": R + 3, "miss_latency": R + 4},
        cache_line_regs=tuple(line_regs),
    )


def _build_cache(params: EnclaveParams) -> EnclaveVariant:
    return _cache_core(params, "cache", tag_by_plaintext=False)


def _build_vuln_cache(params: EnclaveParams) -> EnclaveVariant:
    return _cache_core(params, "vuln_cache", tag_by_plaintext=True)


# ---------------------------------------------------------------------------
# Vulnerable multiplier: the Default frame with the ALU swapped for the
# shift-and-add multiplier with the early-finish check on its operands.


def _build_vuln_multiplier(params: EnclaveParams) -> EnclaveVariant:
    n, blk, R = params.n, params.block_bits, params.rounds
    cw = max(n + 1, 2).bit_length()
    b = CircuitBuilder("vuln_multiplier")
    in_valid, op_a, op_b, op_sel, salt = _front_ports(b, params)
    key = _key_reg(b, params)

    da = b.reg("da", n)
    db = b.reg("db", n)
    mv = b.reg("mv", 1)
    busy = b.reg("mbusy", 1)
    start = b.and_(in_valid, b.not_(b.or_(mv, busy)))
    b.set_next("da", b.mux(start, b.slice(b.decrypt_comb(key, op_a, R), params.s, n), da))
    b.set_next("db", b.mux(start, b.slice(b.decrypt_comb(key, op_b, R), params.s, n), db))
    b.set_next("mv", start)

    ma = b.reg("ma", 2 * n)
    mb = b.reg("mb", n)
    acc = b.reg("acc", 2 * n)
    mcnt = b.reg("mcnt", cw)
    fin = b.reg("mfin", 1)
    find = b.reg("mfin_d", 1)

    zero_op = b.or_(b.eq_const(ma, 0), b.eq_const(mb, 0))
    stepping = b.and_(busy, b.not_(zero_op))
    finished = b.and_(busy, zero_op)

    zext_da = b.concat(b.const(0, n), da)
    b.set_next("ma", b.mux(mv, zext_da, ma))
    addend = b.shl(ma, mcnt)
    acc_step = b.mux(b.slice(mb, 0, 1), b.add(acc, addend), acc)
    b.set_next("acc", b.mux(mv, b.const(0, 2 * n), b.mux(stepping, acc_step, acc)))
    b.set_next("mb", b.mux(mv, db, b.mux(stepping, b.shr(mb, b.const(1, 1)), mb)))
    b.set_next("mcnt", b.mux(mv, b.const(0, cw),
                             b.mux(stepping, b.add(mcnt, b.const(1, cw)), mcnt)))
    b.set_next("mbusy", b.mux(mv, b.const(1, 1), b.mux(finished, b.const(0, 1), busy)))
    b.set_next("mfin", b.mux(mv, b.const(0, 1), b.or_(fin, finished)))
    b.set_next("mfin_d", fin)

    fin_rise = b.and_(fin, b.not_(find))
    data, valid = _encrypt_pipeline(b, key, b.concat(b.slice(acc, 0, n), salt), fin_rise, R, blk)
    b.tag("enc_out", data)
    b.tag("enc_done", b.const(1, 1))
    b.output("valid", valid)
    b.output("data", data)

    max_op = n + R + 8
    return EnclaveVariant(
        name="vuln_multiplier",
        params=params,
        circuit=b.build(),
        secrets=(
            SecretSource("plaintext", ("da", "db"), "hold", n),
            SecretSource("key", ("key",), "init", blk),
        ),
        sinks={"Valid": "valid", "Data": "data"},
        declass=(DeclassPoint("enc_out", "enc_done", "cf_data"),),
        expected=ExpectedVerdict(False, (Flow("plaintext", "Valid", "timing"),)),
        latency={"valid_latency": R + 4, "op_period": max_op, "enc_rounds": R},
    )


def multiplier_reference(a: int, b_val: int, n: int) -> tuple[int, int]:
    """Cycle-accurate model of the shift-and-add loop: (product, finish_cycle).
    finish_cycle counts clock edges from operand load until finish reads 1."""
    o = 0
    counter = 0
    cycle = 0
    reg_a, reg_b = a, b_val
    while True:
        cycle += 1
        if reg_a == 0 or reg_b == 0:
            return o & ((1 << (2 * n)) - 1), cycle
        if reg_b & 1:
            o = (o + (reg_a << counter)) & ((1 << (2 * n)) - 1)
        reg_b >>= 1
        counter += 1


# ---------------------------------------------------------------------------
# Vulnerable RSA: square-and-multiply with a key-dependent round count;
# finish == (remaining exponent == 0) and Data holds zeros until done.


def _mulmod(b: CircuitBuilder, x: int, y: int, modulus: int, w: int) -> int:
    """x*y mod modulus via a shift/add tree and conditional subtraction."""
    wide = 2 * w
    zext = lambda node: b.concat(b.const(0, w), node)
    product = b.const(0, wide)
    xw = zext(x)
    for j in range(w):
        addend = b.shl(xw, b.const(j, max(j.bit_length(), 1)))
        product = b.mux(b.slice(y, j, 1), b.add(product, addend), product)
    for k in range(w, -1, -1):
        shifted = b.const(modulus << k, wide)
        keep = b.lt(product, shifted)
        product = b.mux(keep, product, b.sub(product, shifted))
    return b.slice(product, 0, w)


def _build_vuln_rsa(params: EnclaveParams) -> EnclaveVariant:
    blk = params.block_bits
    modulus = params.modulus if params.modulus is not None else _MODULUS[blk]
    if not 2 < modulus < (1 << blk):
        raise ValueError(f"modulus must fit {blk} bits")
    b = CircuitBuilder("vuln_rsa")
    op_a = b.input("op_a", blk)

    d = b.reg("key", blk, params.key().material or 1)
    b.set_next("key", d)
    started = b.reg("started", 1)
    o = b.reg("o", blk)
    onext = b.reg("onext", blk)
    dleft = b.reg("dleft", blk)

    load = b.not_(started)
    b.set_next("started", b.const(1, 1))
    reduced = b.mux(b.lt(op_a, b.const(modulus, blk)), op_a,
                    b.sub(op_a, b.const(modulus, blk)))
    mul_oo = _mulmod(b, o, onext, modulus, blk)
    mul_nn = _mulmod(b, onext, onext, modulus, blk)
    bit0 = b.slice(dleft, 0, 1)
    b.set_next("o", b.mux(load, b.const(1, blk), b.mux(bit0, mul_oo, o)))
    b.set_next("onext", b.mux(load, reduced, mul_nn))
    b.set_next("dleft", b.mux(load, d, b.shr(dleft, b.const(1, 1))))

    finish = b.and_(started, b.eq_const(dleft, 0))
    b.tag("rsa_out", o)
    b.tag("rsa_done", finish)
    b.output("valid", finish)
    b.output("data", b.mux(finish, o, b.const(0, blk)))

    return EnclaveVariant(
        name="vuln_rsa",
        params=params,
        circuit=b.build(),
        secrets=(SecretSource("key", ("key",), "init", blk),),
        sinks={"Valid": "valid", "Data": "data"},
        declass=(DeclassPoint("rsa_out", "rsa_done", "cf_data"),),
        expected=ExpectedVerdict(
            False,
            (Flow("key", "Valid", "timing"), Flow("key", "Data", "functional-timing")),
        ),
        latency={"valid_latency": blk + 2, "op_period": blk + 4, "enc_rounds": 0},
    )


def rsa_reference(c: int, d: int, modulus: int) -> tuple[int, int]:
    """Square-and-multiply model: (c^d mod modulus, finish_cycle). The finish
    cycle counts edges from load until the remaining exponent reads zero."""
    o, onext, dleft = 1, c % modulus, d
    cycle = 0
    while dleft != 0:
        cycle += 1
        if dleft & 1:
            o = (o * onext) % modulus
        onext = (onext * onext) % modulus
        dleft >>= 1
    return o, cycle


# ---------------------------------------------------------------------------


_BUILDERS = {
    "default": _build_default,
    "rolled": _build_rolled,
    "cache": _build_cache,
    "vuln_rolled": _build_vuln_rolled,
    "vuln_multiplier": _build_vuln_multiplier,
    "vuln_cache": _build_vuln_cache,
    "vuln_rsa": _build_vuln_rsa,
}


def build(name: str, params: EnclaveParams | None = None) -> EnclaveVariant:
    if name not in _BUILDERS:
        raise ValueError(f"unknown variant {name!r}; one of {', '.join(VARIANT_NAMES)}")
    return _BUILDERS[name](params or EnclaveParams())


def enumerate_initial_states(
    variant: EnclaveVariant,
    exhaustive: bool = True,
    samples: int = 16,
    seed: int = 0,
):
    """Initial register assignments to sweep. Cache variants yield every
    combination of line valid bits and tags (data zeroed) when exhaustive,
    or seeded random line contents otherwise; other variants yield S0 only."""
    base = variant.circuit.initial_state()
    if not variant.cache_line_regs:
        yield dict(base)
        return
    line_regs = variant.cache_line_regs
    tag_width = variant.circuit.regs[line_regs[0][1]][0]
    data_width = variant.circuit.regs[line_regs[0][2]][0]
    if exhaustive:
        import itertools

        dims = len(line_regs)
        tag_space = itertools.product(range(1 << tag_width), repeat=dims)
        for valid_bits, tags in itertools.product(range(1 << dims), tag_space):
            state = dict(base)
            for i, (vr, tr, dr) in enumerate(line_regs):
                state[vr] = (valid_bits >> i) & 1
                state[tr] = tags[i]
                state[dr] = 0
            yield state
    else:
        rng = random.Random(seed)
        for _ in range(samples):
            state = dict(base)
            for vr, tr, dr in line_regs:
                state[vr] = rng.getrandbits(1)
                state[tr] = rng.getrandbits(tag_width)
                state[dr] = rng.getrandbits(data_width)
            yield state


def drive_trace(
    variant: EnclaveVariant,
    circuit: Circuit,
    n_ops: int,
    rng: random.Random,
    horizon: int,
    operands: list[tuple[int, int, int]] | None = None,
) -> list[dict[str, int]]:
    """Input trace presenting n_ops operations spaced by the variant's safe
    op period; every declared port gets a value each cycle (undriven ports,
    including declassification free inputs, draw from rng so paired runs
    sharing a seed see identical public inputs)."""
    blk = variant.params.block_bits
    period = max(variant.latency["op_period"], 1)
    starts = {i * period: i for i in range(n_ops)}
    pool = [rng.getrandbits(blk) for _ in range(max(2, n_ops))]
    trace = []
    for cycle in range(horizon):
        inputs: dict[str, int] = {}
        op_index = starts.get(cycle)
        for port, width in circuit.inputs.items():
            if port == "in_valid":
                inputs[port] = 1 if op_index is not None else 0
            elif port == "op_a" and op_index is not None:
                if operands is not None:
                    inputs[port] = operands[op_index][0]
                else:
                    inputs[port] = pool[rng.randrange(len(pool))]
            elif port == "op_b" and op_index is not None:
                if operands is not None:
                    inputs[port] = operands[op_index][1]
                else:
                    inputs[port] = pool[rng.randrange(len(pool))]
            elif port == "op_sel" and op_index is not None and operands is not None:
                inputs[port] = operands[op_index][2]
            else:
                inputs[port] = rng.getrandbits(width)
        trace.append(inputs)
    return trace


def run_operation(
    variant: EnclaveVariant,
    cipher_a: int,
    cipher_b: int,
    op_sel: int,
    seed: int = 0,
) -> tuple[int, int]:
    """Drive one operation on the raw circuit; returns (data_at_valid,
    valid_cycle). Raises if Valid never rises within the declared window."""
    rng = random.Random(seed)
    horizon = variant.latency["op_period"] + variant.latency["valid_latency"] + 4
    trace_in = drive_trace(variant, variant.circuit, 1, rng, horizon,
                           operands=[(cipher_a, cipher_b, op_sel)])
    trace = simulate(variant.circuit, trace_in)
    valid_port = variant.sinks["Valid"]
    data_port = variant.sinks["Data"]
    for cycle in range(len(trace)):
        if trace.pi_o[cycle][valid_port]:
            return trace.pi_o[cycle][data_port], cycle
    raise RuntimeError(f"{variant.name}: Valid never rose within {horizon} cycles")
