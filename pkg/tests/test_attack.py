import pytest

from severif.attack import run_attack, run_trials
from severif.crypto import CryptoParams, SaltMode


def test_reused_salt_recovers_random_secrets():
    summary = run_trials(8, 40, SaltMode.REUSED, seed=1)
    assert summary.successes == 40
    assert summary.max_iterations <= 8


def test_reused_probe_count_is_exactly_width():
    for width in (4, 6, 8):
        for secret in (0, 1, (1 << width) - 1, 3):
            result = run_attack(width, secret, SaltMode.REUSED, seed=secret + width)
            assert result.iterations == width
            assert result.setup_encryptions == 2
            assert result.success and result.recovered == secret


def test_secret_zero_boundary():
    result = run_attack(8, 0, SaltMode.REUSED, seed=3)
    assert result.recovered == 0 and result.success


def test_fresh_salt_attack_degrades_to_chance():
    summary = run_trials(8, 400, SaltMode.FRESH, seed=2)
    assert summary.success_rate <= 0.02


def test_width_must_fit_scheme():
    with pytest.raises(ValueError):
        run_attack(8, 1, SaltMode.REUSED, params=CryptoParams(4, 4, 6))
    with pytest.raises(ValueError):
        run_attack(4, 99, SaltMode.REUSED)


def test_attack_is_deterministic_given_seed():
    a = run_attack(8, 173, SaltMode.FRESH, seed=7)
    b = run_attack(8, 173, SaltMode.FRESH, seed=7)
    assert a == b


def test_narrow_widths_work():
    result = run_attack(2, 2, SaltMode.REUSED, seed=5)
    assert result.success and result.iterations == 2
