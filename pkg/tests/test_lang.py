import random

import pytest

from severif.lang import (
    KEY_REG,
    SKIP,
    Bop,
    BopKind,
    Cmov,
    Enc,
    ParseError,
    Program,
    Register,
    format_program,
    gpr,
    parse_program,
)


def test_single_enc():
    assert parse_program("enc r1") == Program((Enc(gpr(1)),))


def test_two_command_sequence():
    p = parse_program("enc r1; bop add r1 r2")
    assert p == Program((Enc(gpr(1)), Bop(BopKind.ADD, gpr(1), gpr(2))))


def test_cmov_form():
    p = parse_program("cmov r1 ? r2 <- r3 : r2 <- r4")
    assert p == Program((Cmov(gpr(1), gpr(2), gpr(3), gpr(4)),))


def test_cmov_destination_mismatch_rejected():
    with pytest.raises(ParseError) as exc:
        parse_program("cmov r1 ? r2 <- r3 : r5 <- r4")
    assert "destinations" in str(exc.value)


def test_newline_and_comment_separators():
    text = "# setup\nenc r1\n\nbop xor r1 r1  # fold\nskip"
    p = parse_program(text)
    assert [type(c).__name__ for c in p] == ["Enc", "Bop", "Skip"]


def test_keyreg_parses_as_operand():
    p = parse_program("bop and r1 keyReg")
    assert p.commands[0].r2 == KEY_REG


def test_register_out_of_file_rejected():
    with pytest.raises(ParseError) as exc:
        parse_program("enc r9", r_max=8)
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        parse_program("enc r0")


def test_unknown_bop_kind_has_position():
    with pytest.raises(ParseError) as exc:
        parse_program("enc r1; bop nand r1 r2")
    assert "nand" in str(exc.value)
    assert exc.value.column > 1


def test_empty_program_rejected():
    with pytest.raises(ParseError):
        parse_program("   # just a comment\n")


def test_format_examples():
    assert format_program(Program((SKIP,))) == "skip"
    assert format_program(Program((Enc(KEY_REG),))) == "enc keyReg"


def _random_ast(rng: random.Random, r_max: int = 8) -> Program:
    regs = [gpr(i) for i in range(1, r_max + 1)] + [KEY_REG]
    commands = []
    for _ in range(rng.randint(1, 8)):
        pick = rng.randrange(4)
        if pick == 0:
            commands.append(SKIP)
        elif pick == 1:
            commands.append(Enc(rng.choice(regs)))
        elif pick == 2:
            commands.append(Bop(rng.choice(list(BopKind)),
                                rng.choice(regs), rng.choice(regs)))
        else:
            commands.append(Cmov(rng.choice(regs), rng.choice(regs),
                                 rng.choice(regs), rng.choice(regs)))
    return Program(tuple(commands))


def test_roundtrip_1000_random_programs():
    rng = random.Random(20240501)
    for _ in range(1000):
        program = _random_ast(rng)
        assert parse_program(format_program(program)) == program


def test_parsed_cmov_always_single_destination():
    rng = random.Random(7)
    for _ in range(300):
        program = _random_ast(rng)
        for cmd in parse_program(format_program(program)):
            if isinstance(cmd, Cmov):
                assert str(cmd).count(f"{cmd.dst} <-") == 2


def test_register_identity_and_hash():
    assert gpr(3) == Register(3)
    assert hash(gpr(3)) == hash(Register(3))
    assert KEY_REG != gpr(1)
