"""AST, parser and printer for the secure-enclave ISA.

The language has four command forms: ``skip``, ``enc r``, ``bop <kind> r1 r2``
and ``cmov c ? d <- t : d <- f``. Programs are flat, non-empty command
sequences (the sequence operator is right-associated, so a list is the
canonical shape). Registers are ``r1..rN`` plus the special ``keyReg``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

DEFAULT_R_MAX = 8


class ParseError(Exception):
    """Raised on malformed program text; carries 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class Register:
    """A general-purpose register (index >= 1) or the key register (index None)."""

    index: int | None

    def __hash__(self) -> int:  # hot: registers key every state dict
        return -1 if self.index is None else self.index

    @property
    def is_key(self) -> bool:
        return self.index is None

    def __str__(self) -> str:
        return "keyReg" if self.index is None else f"r{self.index}"


KEY_REG = Register(None)

_GPR_CACHE: dict[int, Register] = {}


def gpr(index: int) -> Register:
    """General-purpose register ``r<index>``; indexes start at 1."""
    if index < 1:
        raise ValueError(f"register index must be >= 1, got {index}")
    reg = _GPR_CACHE.get(index)
    if reg is None:
        reg = _GPR_CACHE[index] = Register(index)
    return reg


class BopKind(enum.Enum):
    ADD = "add"
    SUB = "sub"
    SHL = "shl"
    SHR = "shr"
    AND = "and"
    OR = "or"
    XOR = "xor"
    LT = "lt"
    EQ = "eq"


@dataclass(frozen=True, slots=True)
class Skip:
    def __str__(self) -> str:
        return "skip"


@dataclass(frozen=True, slots=True)
class Enc:
    reg: Register

    def __str__(self) -> str:
        return f"enc {self.reg}"


@dataclass(frozen=True, slots=True)
class Bop:
    kind: BopKind
    r1: Register
    r2: Register

    def __str__(self) -> str:
        return f"bop {self.kind.value} {self.r1} {self.r2}"


@dataclass(frozen=True, slots=True)
class Cmov:
    """Conditional move; both arms write the same destination."""

    cond: Register
    dst: Register
    src_true: Register
    src_false: Register

    def __str__(self) -> str:
        return (
            f"cmov {self.cond} ? {self.dst} <- {self.src_true}"
            f" : {self.dst} <- {self.src_false}"
        )


Command = Skip | Enc | Bop | Cmov

SKIP = Skip()


@dataclass(frozen=True)
class Program:
    """Non-empty, right-associated command sequence in flat list form."""

    commands: tuple[Command, ...] = field(default=())

    def __post_init__(self):
        if not self.commands:
            raise ValueError("a program must contain at least one command")

    def __len__(self) -> int:
        return len(self.commands)

    def __iter__(self):
        return iter(self.commands)

    def registers(self) -> set[Register]:
        """All registers mentioned as operands anywhere in the program."""
        regs: set[Register] = set()
        for cmd in self.commands:
            regs.update(command_registers(cmd))
        return regs


def command_registers(cmd: Command) -> tuple[Register, ...]:
    if isinstance(cmd, Skip):
        return ()
    if isinstance(cmd, Enc):
        return (cmd.reg,)
    if isinstance(cmd, Bop):
        return (cmd.r1, cmd.r2)
    return (cmd.cond, cmd.dst, cmd.src_true, cmd.src_false)


_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\?|:|<-|;|#[^\n]*|\n|\S")

_KINDS = {k.value: k for k in BopKind}


class _Tokens:
    """Token stream with line/column bookkeeping for error reports."""

    def __init__(self, text: str):
        self.items: list[tuple[str, int, int]] = []
        line, col_base = 1, 0
        for m in _TOKEN_RE.finditer(text):
            tok = m.group(0)
            if tok.startswith("#"):
                continue
            col = m.start() - col_base + 1
            if tok == "\n":
                self.items.append((";", line, col))
                line += 1
                col_base = m.end()
            else:
                self.items.append((tok, line, col))
        self.items.append(("", line, 1))  # end marker
        self.pos = 0

    def peek(self) -> str:
        return self.items[self.pos][0]

    def next(self) -> tuple[str, int, int]:
        item = self.items[self.pos]
        if item[0]:
            self.pos += 1
        return item

    def here(self) -> tuple[int, int]:
        _, line, col = self.items[self.pos]
        return line, col

    def fail(self, message: str):
        line, col = self.here()
        raise ParseError(message, line, col)

    def expect(self, literal: str):
        tok, line, col = self.next()
        if tok != literal:
            raise ParseError(f"expected '{literal}', found '{tok or 'end of input'}'", line, col)


def _parse_register(toks: _Tokens, r_max: int) -> Register:
    tok, line, col = toks.next()
    if tok == "keyReg":
        return KEY_REG
    m = re.fullmatch(r"r(\d+)", tok)
    if not m:
        raise ParseError(f"expected a register, found '{tok or 'end of input'}'", line, col)
    idx = int(m.group(1))
    if not 1 <= idx <= r_max:
        raise ParseError(f"register r{idx} outside file of size {r_max}", line, col)
    return gpr(idx)


def _parse_command(toks: _Tokens, r_max: int) -> Command:
    tok, line, col = toks.next()
    if tok == "skip":
        return SKIP
    if tok == "enc":
        return Enc(_parse_register(toks, r_max))
    if tok == "bop":
        kind_tok, kline, kcol = toks.next()
        kind = _KINDS.get(kind_tok)
        if kind is None:
            raise ParseError(f"unknown bop kind '{kind_tok}'", kline, kcol)
        r1 = _parse_register(toks, r_max)
        r2 = _parse_register(toks, r_max)
        return Bop(kind, r1, r2)
    if tok == "cmov":
        cond = _parse_register(toks, r_max)
        toks.expect("?")
        dst = _parse_register(toks, r_max)
        toks.expect("<-")
        src_true = _parse_register(toks, r_max)
        toks.expect(":")
        dline, dcol = toks.here()
        dst2 = _parse_register(toks, r_max)
        toks.expect("<-")
        src_false = _parse_register(toks, r_max)
        if dst2 != dst:
            raise ParseError(
                f"cmov arms write different destinations ({dst} vs {dst2})", dline, dcol
            )
        return Cmov(cond, dst, src_true, src_false)
    raise ParseError(f"expected a command, found '{tok or 'end of input'}'", line, col)


def parse_program(text: str, r_max: int = DEFAULT_R_MAX) -> Program:
    """Parse ``.se`` text into a Program.

    Commands are separated by ';' or newlines; '#' starts a comment.
    Raises ParseError with position info on malformed input.
    """
    toks = _Tokens(text)
    commands: list[Command] = []
    while toks.peek() == ";":
        toks.next()
    if not toks.peek():
        toks.fail("empty program")
    commands.append(_parse_command(toks, r_max))
    while toks.peek():
        if toks.peek() != ";":
            toks.fail(f"expected ';' or newline before '{toks.peek()}'")
        while toks.peek() == ";":
            toks.next()
        if toks.peek():
            commands.append(_parse_command(toks, r_max))
    return Program(tuple(commands))


def format_program(program: Program) -> str:
    """Canonical text form; round-trips through parse_program."""
    return "\n".join(str(cmd) for cmd in program.commands)
