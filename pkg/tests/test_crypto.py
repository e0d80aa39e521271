import random
import statistics

import pytest

from severif.crypto import (
    CryptoParams,
    Key,
    SaltMode,
    SaltSource,
    WidthError,
    cipher_ops,
    decrypt,
    distinguishability_smoke,
    encrypt,
    prp_forward,
    prp_inverse,
    round_mix,
)

P44 = CryptoParams(4, 4, 6)


def test_params_validation():
    with pytest.raises(ValueError):
        CryptoParams(3, 2, 6)  # odd block
    with pytest.raises(ValueError):
        CryptoParams(4, 4, 3)  # too few rounds
    with pytest.raises(ValueError):
        CryptoParams(0, 4, 6)


def test_prp_inverse_is_inverse_exhaustive():
    for seed in range(5):
        key = Key.from_seed(P44, seed)
        for block in range(256):
            assert prp_inverse(P44, key, prp_forward(P44, key, block)) == block


def test_prp_bijective_exhaustive():
    key = Key.from_seed(P44, 9)
    image = {prp_forward(P44, key, b) for b in range(256)}
    assert len(image) == 256


def test_prp_key_separation_statistical():
    rng = random.Random(5)
    collisions = 0
    samples = 10_000
    for _ in range(samples):
        k1 = Key(rng.getrandbits(8))
        k2 = Key(rng.getrandbits(8))
        while k2.material == k1.material:
            k2 = Key(rng.getrandbits(8))
        block = rng.getrandbits(8)
        collisions += prp_forward(P44, k1, block) == prp_forward(P44, k2, block)
    assert collisions / samples < 0.01


def test_prp_width_check():
    key = Key.from_seed(P44, 0)
    with pytest.raises(WidthError):
        prp_forward(P44, key, 1 << 8)


def test_roundtrip_identity_exhaustive_three_keys():
    for seed in (1, 2, 3):
        key = Key.from_seed(P44, seed)
        salts = SaltSource(4, SaltMode.FRESH, seed)
        for message in range(16):
            assert decrypt(P44, key, encrypt(P44, key, message, salts)) == message


def test_decrypt_total_on_garbage():
    key = Key.from_seed(P44, 1)
    for block in (0, 77, 255):
        assert 0 <= decrypt(P44, key, block) < 16


def test_decrypt_wrong_key_mostly_mismatches():
    rng = random.Random(11)
    mismatches = 0
    trials = 2000
    salts = SaltSource(4, SaltMode.FRESH, 3)
    for _ in range(trials):
        k1 = Key(rng.getrandbits(8))
        k2 = Key(rng.getrandbits(8))
        while k2.material == k1.material:
            k2 = Key(rng.getrandbits(8))
        m = rng.getrandbits(4)
        mismatches += decrypt(P44, k2, encrypt(P44, k1, m, salts)) != m
    assert mismatches / trials >= 0.90


def test_fresh_salt_distinctness_birthday_bound():
    # With s=8, 100 draws cover ~83 distinct salts on average (the birthday
    # computation); reused mode collapses to a single ciphertext.
    p = CryptoParams(8, 8, 6)
    key = Key.from_seed(p, 2)
    fresh = SaltSource(8, SaltMode.FRESH, 9)
    distinct = len({encrypt(p, key, 5, fresh) for _ in range(100)})
    assert distinct >= 70
    reused = SaltSource(8, SaltMode.REUSED, 9)
    assert len({encrypt(p, key, 5, reused) for _ in range(100)}) == 1


def test_salt_stream_reproducible():
    a = SaltSource(8, SaltMode.FRESH, 42)
    b = SaltSource(8, SaltMode.FRESH, 42)
    assert [a.draw() for _ in range(50)] == [b.draw() for _ in range(50)]
    clone = a.clone()
    assert [a.draw() for _ in range(10)] == [clone.draw() for _ in range(10)]


def test_salt_roughly_uniform():
    src = SaltSource(8, SaltMode.FRESH, 5)
    draws = [src.draw() for _ in range(20_000)]
    assert 100 < statistics.mean(draws) < 155
    assert len(set(draws)) == 256


def test_reused_salt_fixed_after_first_draw():
    src = SaltSource(8, SaltMode.REUSED, 17)
    first = src.draw()
    assert all(src.draw() == first for _ in range(20))
    assert src.clone().draw() == first


def test_distinguisher_reused_salts_wins():
    p = CryptoParams(8, 8, 6)
    key = Key.from_seed(p, 2)
    adv = distinguishability_smoke(p, key, 3, 200, 4000,
                                   SaltSource(8, SaltMode.REUSED, 1), seed=5)
    assert adv > 0.45


def test_distinguisher_fresh_salts_blind():
    # Salt wide enough that 4k queries cannot exhaust the salt space.
    p = CryptoParams(8, 24, 6)
    key = Key.from_seed(p, 2)
    adv = distinguishability_smoke(p, key, 3, 200, 4000,
                                   SaltSource(24, SaltMode.FRESH, 1), seed=5)
    assert adv < 0.05


def test_distinguisher_equal_messages_symmetric():
    p = CryptoParams(8, 8, 6)
    key = Key.from_seed(p, 2)
    adv = distinguishability_smoke(p, key, 7, 7, 4000,
                                   SaltSource(8, SaltMode.FRESH, 2), seed=5)
    assert adv < 0.05


def test_cipher_ops_match_public_api():
    key = Key.from_seed(P44, 4)
    enc, dec = cipher_ops(P44, key)
    salts_a = SaltSource(4, SaltMode.FRESH, 6)
    salts_b = SaltSource(4, SaltMode.FRESH, 6)
    for m in range(16):
        fast = enc(m, salts_a)
        assert fast == encrypt(P44, key, m, salts_b)
        assert dec(fast) == m


def test_round_mix_masks_to_width():
    for half_bits in (1, 2, 4, 8):
        v = round_mix(0xABCD, 3, 1, half_bits)
        assert 0 <= v < (1 << half_bits)


def test_wide_block_direct_path_roundtrips():
    p = CryptoParams(8, 8, 6)  # block 16 exceeds the table cache limit
    key = Key.from_seed(p, 3)
    salts = SaltSource(8, SaltMode.FRESH, 4)
    for m in (0, 1, 200, 255):
        assert decrypt(p, key, encrypt(p, key, m, salts)) == m
