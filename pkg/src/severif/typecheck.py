"""Security type system over the two-point public/private lattice.

Every register except keyReg is public; a command types as ``public prog``
exactly when all of its operands are public, and sequences join their parts.
The practical effect: a program is well-typed iff it never names keyReg.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .lang import KEY_REG, Program, Register, command_registers


class Label(enum.Enum):
    PUBLIC = "public"
    PRIVATE = "private"

    def join(self, other: "Label") -> "Label":
        if self is Label.PRIVATE or other is Label.PRIVATE:
            return Label.PRIVATE
        return Label.PUBLIC

    def __le__(self, other: "Label") -> bool:
        return self is Label.PUBLIC or other is Label.PRIVATE


class TypeEnv:
    """Gamma: keyReg is private, everything else public."""

    def __init__(self, overrides: dict[Register, Label] | None = None):
        self._overrides = dict(overrides or {})
        if self._overrides.get(KEY_REG, Label.PRIVATE) is not Label.PRIVATE:
            raise ValueError("keyReg is private by definition")

    def label(self, reg: Register) -> Label:
        if reg == KEY_REG:
            return Label.PRIVATE
        return self._overrides.get(reg, Label.PUBLIC)

    def public_registers(self, regs) -> list[Register]:
        return [r for r in regs if self.label(r) is Label.PUBLIC]


DEFAULT_ENV = TypeEnv()


@dataclass(frozen=True)
class Judgment:
    subject: object
    label: Label
    kind: str  # "prog" for program judgments, "value" for register reads

    def __str__(self) -> str:
        suffix = " prog" if self.kind == "prog" else ""
        return f"{self.label.value}{suffix}"


class TypeCheckError(Exception):
    """A command operand demanded a label it does not have."""

    def __init__(self, command_index: int, register: Register,
                 required: Label, found: Label):
        super().__init__(
            f"command {command_index}: register {register} is {found.value}, "
            f"rule requires {required.value}"
        )
        self.command_index = command_index
        self.register = register
        self.required = required
        self.found = found


def typecheck(program: Program, env: TypeEnv = DEFAULT_ENV) -> Judgment:
    """Derive ``public prog`` for the program or raise TypeCheckError at the
    first command whose operand is private."""
    label = Label.PUBLIC
    for index, cmd in enumerate(program.commands):
        for reg in command_registers(cmd):
            found = env.label(reg)
            if found is not Label.PUBLIC:
                raise TypeCheckError(index, reg, Label.PUBLIC, found)
        # Every command rule concludes "public prog"; SEQ joins them.
        label = label.join(Label.PUBLIC)
    return Judgment(program, label, "prog")


def is_well_typed(program: Program, env: TypeEnv = DEFAULT_ENV) -> bool:
    try:
        typecheck(program, env)
        return True
    except TypeCheckError:
        return False
