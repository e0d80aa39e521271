"""Salted small-domain encryption built on a keyed Feistel permutation.

A plaintext of ``n`` bits is concatenated with a fresh ``s``-bit salt and
pushed through a balanced Feistel network over ``n+s``-bit blocks; decryption
inverts the permutation and keeps the first (most significant) ``n`` bits.
Widths are deliberately tiny so the permutation can be checked exhaustively.
The salt stream is a seeded deterministic generator with a fresh/reused mode
switch: reused mode reproduces the salt-reuse fault that the attack module
exploits, fresh mode models a per-call uniform draw.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field

_TABLE_WIDTH_LIMIT = 12  # cache full permutation tables up to this block width


class WidthError(ValueError):
    """A value does not fit the width required by the scheme."""


@dataclass(frozen=True, slots=True)
class CryptoParams:
    """Widths and round count: n data bits, s salt bits, key = n+s bits."""

    n: int = 4
    s: int = 4
    rounds: int = 6

    def __post_init__(self):
        if self.n < 1 or self.s < 1:
            raise ValueError("n and s must be >= 1")
        if (self.n + self.s) % 2 != 0:
            raise ValueError("n + s must be even (balanced Feistel)")
        if self.rounds < 4:
            raise ValueError("rounds must be >= 4")

    @property
    def block_bits(self) -> int:
        return self.n + self.s

    @property
    def key_bits(self) -> int:
        return self.n + self.s


@dataclass(frozen=True, slots=True)
class Key:
    """Key material (n+s bits) plus the seed it was derived from."""

    material: int
    seed: int | None = None

    @staticmethod
    def from_seed(params: CryptoParams, seed: int) -> "Key":
        rng = random.Random(seed)
        return Key(rng.getrandbits(params.key_bits), seed)


class SaltMode(enum.Enum):
    FRESH = "fresh"
    REUSED = "reused"


_M64 = (1 << 64) - 1


class SplitMix64:
    """Tiny deterministic 64-bit stream; cheap to build, clone and advance.

    Statistical quality is ample for salt streams and witness sampling, and
    unlike random.Random a construction is a couple of integer ops, which
    matters when millions of short-lived streams are spawned by the sweeps.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _M64

    def next64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def getrandbits(self, k: int) -> int:
        if k <= 64:
            return self.next64() >> (64 - k)
        value = 0
        for shift in range(0, k, 64):
            value |= self.next64() << shift
        return value & ((1 << k) - 1)


@dataclass
class SaltSource:
    """Deterministic s-bit salt stream; single-owner, stateful.

    FRESH draws a new value per call; REUSED draws once and repeats it
    forever (the fault of an operator that never refreshes its entropy).
    """

    bits: int
    mode: SaltMode = SaltMode.FRESH
    seed: int = 0
    last: int | None = None
    _rng: SplitMix64 = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = SplitMix64(self.seed)

    def draw(self) -> int:
        if self.mode is SaltMode.REUSED:
            if self.last is None:
                self.last = self._rng.getrandbits(self.bits)
            return self.last
        value = self._rng.getrandbits(self.bits)
        self.last = value
        return value

    def clone(self) -> "SaltSource":
        """Snapshot copy: the clone continues the same stream independently."""
        twin = SaltSource(self.bits, self.mode, self.seed, self.last)
        twin._rng.state = self._rng.state
        return twin


def _round_value(key_bytes: bytes, rnd: int, half: int, half_bits: int) -> int:
    data = rnd.to_bytes(2, "big") + half.to_bytes(8, "big")
    digest = hashlib.blake2b(data, digest_size=8, key=key_bytes).digest()
    return int.from_bytes(digest, "big") & ((1 << half_bits) - 1)


def _key_bytes(key: Key) -> bytes:
    return key.material.to_bytes(16, "big")


def round_mix(key_material: int, rnd: int, half: int, half_bits: int) -> int:
    """The Feistel round function on a half-block; the circuit IR's KeyedMix
    primitive evaluates exactly this, so hardware datapaths built from it
    agree with encrypt/decrypt bit for bit."""
    return _round_value(key_material.to_bytes(16, "big"), rnd, half, half_bits)


def _check_block(params: CryptoParams, block: int):
    if not 0 <= block < (1 << params.block_bits):
        raise WidthError(f"block {block:#x} does not fit {params.block_bits} bits")


def _feistel(params: CryptoParams, key: Key, block: int, inverse: bool) -> int:
    half_bits = params.block_bits // 2
    mask = (1 << half_bits) - 1
    kb = _key_bytes(key)
    left, right = block >> half_bits, block & mask
    schedule = range(params.rounds - 1, -1, -1) if inverse else range(params.rounds)
    for rnd in schedule:
        if inverse:
            left, right = right ^ _round_value(kb, rnd, left, half_bits), left
        else:
            left, right = right, left ^ _round_value(kb, rnd, right, half_bits)
    return (left << half_bits) | right


_tables: dict[tuple[int, int, int, int], tuple[list[int], list[int]]] = {}


def _permutation_tables(params: CryptoParams, key: Key) -> tuple[list[int], list[int]]:
    cache_key = (params.n, params.s, params.rounds, key.material)
    cached = _tables.get(cache_key)
    if cached is None:
        size = 1 << params.block_bits
        forward = [_feistel(params, key, b, inverse=False) for b in range(size)]
        backward = [0] * size
        for src, dst in enumerate(forward):
            backward[dst] = src
        cached = _tables[cache_key] = (forward, backward)
    return cached


def prp_forward(params: CryptoParams, key: Key, block: int) -> int:
    """The keyed permutation over n+s-bit blocks."""
    _check_block(params, block)
    if params.block_bits <= _TABLE_WIDTH_LIMIT:
        return _permutation_tables(params, key)[0][block]
    return _feistel(params, key, block, inverse=False)


def prp_inverse(params: CryptoParams, key: Key, block: int) -> int:
    _check_block(params, block)
    if params.block_bits <= _TABLE_WIDTH_LIMIT:
        return _permutation_tables(params, key)[1][block]
    return _feistel(params, key, block, inverse=True)


def encrypt(params: CryptoParams, key: Key, message: int, salts: SaltSource) -> int:
    """Permute message || salt; the salt occupies the low s bits."""
    if not 0 <= message < (1 << params.n):
        raise WidthError(f"message {message:#x} does not fit {params.n} bits")
    if salts.bits != params.s:
        raise WidthError(f"salt source supplies {salts.bits} bits, scheme needs {params.s}")
    return prp_forward(params, key, (message << params.s) | salts.draw())


def cipher_ops(params: CryptoParams, key: Key):
    """(encrypt, decrypt) closures with the width checks hoisted out; callers
    must supply in-range messages/blocks. At table-cached widths these are a
    couple of list lookups, which the interpreter sweeps lean on."""
    s = params.s
    if params.block_bits <= _TABLE_WIDTH_LIMIT:
        fwd, bwd = _permutation_tables(params, key)

        def enc(message: int, salts: SaltSource) -> int:
            return fwd[(message << s) | salts.draw()]

        def dec(block: int) -> int:
            return bwd[block] >> s

    else:

        def enc(message: int, salts: SaltSource) -> int:
            return _feistel(params, key, (message << s) | salts.draw(), inverse=False)

        def dec(block: int) -> int:
            return _feistel(params, key, block, inverse=True) >> s

    return enc, dec


def decrypt(params: CryptoParams, key: Key, cipher: int) -> int:
    """First n bits of the inverted permutation. Total: garbage in, garbage out."""
    return prp_inverse(params, key, cipher) >> params.s


def distinguishability_smoke(
    params: CryptoParams,
    key: Key,
    m0: int,
    m1: int,
    trials: int,
    salts: SaltSource,
    seed: int = 0,
) -> float:
    """Empirical advantage of cheap distinguishers at telling m0 from m1.

    Each trial encrypts a randomly chosen one of the two messages; the
    distinguisher guesses from the ciphertext plus everything seen so far,
    using exact-match-with-past and per-bit frequency votes. The returned
    |accuracy - 1/2| is a heuristic stand-in for a negligible bound: it
    should sit near 0 for fresh salts and near 1/2 when salts are reused.
    """
    rng = random.Random(seed)
    width = params.block_bits
    seen: dict[int, set[int]] = {}
    bit_counts = [[0] * width, [0] * width]
    label_totals = [0, 0]
    correct = 0
    for _ in range(trials):
        b = rng.getrandbits(1)
        c = encrypt(params, key, m1 if b else m0, salts)
        labels = seen.get(c)
        if labels is not None and len(labels) == 1:
            guess = next(iter(labels))
        elif label_totals[0] and label_totals[1]:
            score = 0
            for i in range(width):
                bit = (c >> i) & 1
                f0 = bit_counts[0][i] / label_totals[0]
                f1 = bit_counts[1][i] / label_totals[1]
                score += (f1 - f0) if bit else (f0 - f1)
            guess = 1 if score > 0 else 0 if score < 0 else rng.getrandbits(1)
        else:
            guess = rng.getrandbits(1)
        if guess == b:
            correct += 1
        seen.setdefault(c, set()).add(b)
        label_totals[b] += 1
        for i in range(width):
            bit_counts[b][i] += (c >> i) & 1
    return abs(correct / trials - 0.5)
