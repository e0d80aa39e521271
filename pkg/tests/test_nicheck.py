import random

import pytest

from severif import interp
from severif.crypto import CryptoParams, Key, SaltMode, SaltSource, encrypt
from severif.interp import BOP_PLAIN_RESULT, MachineState, Semantics, Stuck, cipher, plain
from severif.lang import KEY_REG, Bop, BopKind, Cmov, Enc, Program, gpr, parse_program
from severif.nicheck import (
    BOTH_STUCK,
    COMPLETED,
    ONE_SIDED_STUCK,
    LowEquivWitness,
    analyze_tags,
    build_witness,
    check_pair,
    check_single_step,
    check_soundness,
    enumerate_programs,
    exhaustive_program_sweep,
    exhaustive_witnesses,
    low_equiv,
    random_soundness_suite,
    random_well_typed_program,
    witness_battery,
)
from severif.typecheck import TypeCheckError

PARAMS = CryptoParams(2, 2, 6)


def state_of(regs, seed=0):
    regs = dict(regs)
    regs.setdefault(KEY_REG, plain(5))
    return MachineState(regs, PARAMS, SaltSource(2, SaltMode.FRESH, seed))


def test_low_equiv_reflexive():
    s = state_of({gpr(1): plain(3), gpr(2): cipher(7)})
    assert low_equiv(s, s.clone())


def test_low_equiv_any_two_ciphertexts():
    s1 = state_of({gpr(1): cipher(0x3)})
    s2 = state_of({gpr(1): cipher(0xC)})
    assert low_equiv(s1, s2)


def test_low_equiv_keyreg_free():
    s1 = state_of({KEY_REG: plain(3), gpr(1): plain(2)})
    s2 = state_of({KEY_REG: plain(12), gpr(1): plain(2)})
    assert low_equiv(s1, s2)


def test_low_equiv_plain_values_must_match():
    assert not low_equiv(state_of({gpr(1): plain(3)}), state_of({gpr(1): plain(2)}))


def test_low_equiv_tags_must_match():
    assert not low_equiv(state_of({gpr(1): plain(3)}), state_of({gpr(1): cipher(3)}))


def test_low_equiv_domain_mismatch():
    with pytest.raises(ValueError):
        low_equiv(state_of({gpr(1): plain(0)}), state_of({gpr(2): plain(0)}))


def test_single_step_enc_exhaustive():
    # All low-equivalent pairs for "enc r1": plaintext equal on both sides,
    # keys and salt streams free.
    command = Enc(gpr(1))
    pairs = []
    for value in range(4):
        for k1 in range(16):
            for k2 in range(16):
                s1 = MachineState({gpr(1): plain(value), KEY_REG: plain(k1)},
                                  PARAMS, SaltSource(2, SaltMode.FRESH, 1))
                s2 = MachineState({gpr(1): plain(value), KEY_REG: plain(k2)},
                                  PARAMS, SaltSource(2, SaltMode.FRESH, 2))
                pairs.append(LowEquivWitness(s1, s2))
    verdict = check_single_step(command, pairs, PARAMS)
    assert verdict.passed and verdict.pairs_checked == 1024


def test_single_step_cmov_differing_booleans_passes():
    # With different keys the two runs may resolve the condition differently;
    # the destination still receives a ciphertext on both sides.
    command = Cmov(gpr(1), gpr(2), gpr(3), gpr(4))
    k1, k2 = Key(3), Key(9)
    setup1 = SaltSource(2, SaltMode.FRESH, 11)
    setup2 = SaltSource(2, SaltMode.FRESH, 12)
    s1 = MachineState({
        gpr(1): cipher(encrypt(PARAMS, k1, 0b11, setup1)),
        gpr(2): cipher(0), gpr(3): cipher(5), gpr(4): cipher(9),
        KEY_REG: plain(k1.material),
    }, PARAMS, SaltSource(2, SaltMode.FRESH, 1))
    s2 = MachineState({
        gpr(1): cipher(encrypt(PARAMS, k2, 0b00, setup2)),
        gpr(2): cipher(0), gpr(3): cipher(7), gpr(4): cipher(2),
        KEY_REG: plain(k2.material),
    }, PARAMS, SaltSource(2, SaltMode.FRESH, 2))
    verdict = check_single_step(command, [LowEquivWitness(s1, s2)], PARAMS)
    assert verdict.passed


def test_single_step_mutation_caught():
    command = Bop(BopKind.ADD, gpr(1), gpr(2))
    s1 = state_of({gpr(1): cipher(3), gpr(2): cipher(8)}, seed=1)
    s2 = state_of({gpr(1): cipher(12), gpr(2): cipher(1)}, seed=2)
    verdict = check_single_step(command, [LowEquivWitness(s1, s2)], PARAMS,
                                sem=Semantics(fault=BOP_PLAIN_RESULT))
    assert not verdict.passed
    assert verdict.counterexample is not None


def test_check_pair_matches_independent_interp_runs():
    # The lockstep walk must agree with stepping each side through interp.run.
    rng = random.Random(4)
    for _ in range(200):
        program = random_well_typed_program(rng, max_len=6, n_regs=3)
        witness = build_witness(program, PARAMS, rng)
        outcome = check_pair(program, witness)
        results = []
        for side in (witness.s1, witness.s2):
            state = side.clone()
            try:
                result = interp.run(program, state)
                results.append(("done", result.cycles, state))
            except Stuck:
                results.append(("stuck", None, state))
        kinds = (results[0][0], results[1][0])
        if outcome.status == COMPLETED:
            assert kinds == ("done", "done")
            assert outcome.cycles == (results[0][1], results[1][1])
            assert outcome.low_equivalent == low_equiv(results[0][2], results[1][2])
        elif outcome.status == BOTH_STUCK:
            assert kinds == ("stuck", "stuck")
        else:
            assert kinds.count("stuck") == 1


def test_soundness_random_mode_passes():
    program = parse_program("enc r1; bop add r1 r1")
    verdict = check_soundness(program, PARAMS, mode="random", trials=10, seed=3)
    assert verdict.passed and verdict.pairs_checked == 10


def test_soundness_rejects_ill_typed_before_checking():
    with pytest.raises(TypeCheckError):
        check_soundness(parse_program("bop add r1 keyReg"), PARAMS)


def test_soundness_exhaustive_mode():
    program = parse_program("enc r1; bop add r1 r2")
    verdict = check_soundness(program, PARAMS, mode="exhaustive", max_pairs=3000)
    assert verdict.passed
    assert verdict.pairs_checked > 100


def test_exhaustive_witnesses_cover_cond_booleans():
    program = parse_program("cmov r1 ? r2 <- r2 : r2 <- r3")
    seen_cond_pairs = set()
    for witness in exhaustive_witnesses(program, PARAMS, max_pairs=100_000):
        info = analyze_tags(program)
        assert gpr(1) in info.cond_initial
        seen_cond_pairs.add((witness.s1.regs[gpr(1)].bits, witness.s2.regs[gpr(1)].bits))
    assert len(seen_cond_pairs) > 1


def test_witness_battery_varies_all_dimensions():
    program = parse_program("enc r1; bop add r1 r2")
    battery = witness_battery(program, PARAMS, 8, seed=1)
    keys_differ = ciphers_differ = False
    for witness in battery:
        assert low_equiv(witness.s1, witness.s2)
        if witness.s1.regs[KEY_REG] != witness.s2.regs[KEY_REG]:
            keys_differ = True
        if witness.s1.regs[gpr(2)] != witness.s2.regs[gpr(2)]:
            ciphers_differ = True
    assert keys_differ and ciphers_differ


def test_tag_analysis():
    program = parse_program("enc r1; bop add r1 r2; cmov r3 ? r1 <- r2 : r1 <- r2")
    info = analyze_tags(program)
    assert info.initial_tags[gpr(1)] == "plain"
    assert info.initial_tags[gpr(2)] == "cipher"
    assert info.cond_initial == {gpr(3)}
    assert info.sticks_at is None and not info.cond_hazard


def test_tag_analysis_detects_certain_stick():
    info = analyze_tags(parse_program("enc r1; enc r1"))
    assert info.sticks_at is not None
    index, rule, reg = info.sticks_at
    assert (index, rule, reg) == (1, "ENC", gpr(1))


def test_tag_analysis_flags_cond_hazard():
    info = analyze_tags(parse_program("bop add r1 r2; cmov r1 ? r2 <- r2 : r2 <- r3"))
    assert info.cond_hazard


def test_generated_programs_are_runnable():
    rng = random.Random(6)
    suite = random_soundness_suite(PARAMS, programs=150, pairs_per_program=4, seed=2)
    assert suite.passed
    assert suite.findings == 0 and suite.both_stuck == 0
    assert suite.completed == suite.pairs


def test_suite_catches_injected_fault_with_counterexample():
    suite = random_soundness_suite(PARAMS, programs=200, pairs_per_program=4, seed=2,
                                   sem=Semantics(fault=BOP_PLAIN_RESULT))
    assert not suite.passed
    ce = suite.counterexample
    assert ce is not None
    # The counterexample replays: same witness, same verdict.
    replay = check_pair(ce.program, ce.witness, sem=Semantics(fault=BOP_PLAIN_RESULT))
    assert replay.is_counterexample
    # And the honest interpreter passes it.
    honest = check_pair(ce.program, ce.witness)
    assert not honest.is_counterexample


def test_enumerate_programs_counts():
    # 3 registers, one bop kind: skip + 3 enc + 9 bop + 81 cmov = 94 commands.
    vocab_len = 94
    programs = list(enumerate_programs(2, 3, (BopKind.ADD,)))
    assert len(programs) == vocab_len + vocab_len**2


def test_exhaustive_sweep_small_and_worker_invariant():
    r1 = exhaustive_program_sweep(PARAMS, max_len=2, n_regs=2, kinds=(BopKind.ADD,))
    r2 = exhaustive_program_sweep(PARAMS, max_len=2, n_regs=2, kinds=(BopKind.ADD,),
                                  workers=2)
    assert r1.passed and r2.passed
    assert r1.to_json() == r2.to_json()


def test_exhaustive_sweep_catches_mutation():
    result = exhaustive_program_sweep(PARAMS, max_len=2, n_regs=2,
                                      kinds=(BopKind.ADD,),
                                      sem=Semantics(fault=BOP_PLAIN_RESULT))
    assert not result.passed
    ce = result.counterexample
    replay = check_pair(ce.program, ce.witness, sem=Semantics(fault=BOP_PLAIN_RESULT))
    assert replay.is_counterexample
