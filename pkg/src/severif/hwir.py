"""Finite-state-machine IR: a combinational node DAG over registers.

A Circuit is (inputs, outputs, regs with init values, next-state nodes): the
output and next-state functions are evaluated cycle by cycle over integer
values. Simulation supports per-register override traces — the replace-the-
secret-trace semantics the two-trace checker is built on — and the
declassification transform that reroutes every consumer of a ciphertext
signal through ``p ? c_f : c`` with a fresh free input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto

CONST, INPUT, REG, SLICE, CONCAT = 0, 1, 2, 3, 4
NOT, AND, OR, XOR, ADD, SUB = 5, 6, 7, 8, 9, 10
SHL, SHR, EQ, LT, MUX, KEYED_MIX = 11, 12, 13, 14, 15, 16

KIND_NAMES = {
    CONST: "const", INPUT: "input", REG: "reg", SLICE: "slice", CONCAT: "concat",
    NOT: "not", AND: "and", OR: "or", XOR: "xor", ADD: "add", SUB: "sub",
    SHL: "shl", SHR: "shr", EQ: "eq", LT: "lt", MUX: "mux", KEYED_MIX: "keyed_mix",
}

_BINARY_SAME_WIDTH = {AND, OR, XOR, ADD, SUB}


@dataclass(frozen=True, slots=True)
class Node:
    kind: int
    width: int
    args: tuple[int, ...] = ()
    value: int = 0       # const payload
    name: str = ""       # input/reg port name
    lo: int = 0          # slice offset


class CircuitError(ValueError):
    pass


@dataclass
class Circuit:
    """Immutable after construction; safe to share across simulations."""

    name: str
    inputs: dict[str, int]                    # port -> width
    regs: dict[str, tuple[int, int]]          # reg -> (width, init)
    nodes: list[Node]
    next_of: dict[str, int]                   # reg -> node id
    outputs: dict[str, int]                   # output -> node id
    signals: dict[str, int] = field(default_factory=dict)  # named internal nodes

    def __post_init__(self):
        self._validate()
        self._order = self._topo_order()
        self._prog = self._compile()

    # -- construction-time checks ------------------------------------------

    def _validate(self):
        for reg, (width, init) in self.regs.items():
            if not 0 <= init < (1 << width):
                raise CircuitError(f"register {reg} init {init} exceeds {width} bits")
            if reg not in self.next_of:
                raise CircuitError(f"register {reg} has no next-state node")
        for reg, nid in self.next_of.items():
            if self.nodes[nid].width != self.regs[reg][0]:
                raise CircuitError(f"next({reg}) width mismatch")
        for name, nid in self.outputs.items():
            if not 0 <= nid < len(self.nodes):
                raise CircuitError(f"output {name} references unknown node {nid}")
        for nid, node in enumerate(self.nodes):
            for arg in node.args:
                if not 0 <= arg < len(self.nodes):
                    raise CircuitError(f"node {nid} references unknown node {arg}")

    def _topo_order(self) -> list[int]:
        n = len(self.nodes)
        order: list[int] = []
        mark = [0] * n  # 0 unvisited, 1 on stack, 2 done
        for root in range(n):
            if mark[root]:
                continue
            stack = [(root, 0)]
            while stack:
                nid, argpos = stack.pop()
                if argpos == 0:
                    if mark[nid] == 1:
                        raise CircuitError("combinational cycle detected")
                    if mark[nid] == 2:
                        continue
                    mark[nid] = 1
                args = self.nodes[nid].args
                if argpos < len(args):
                    stack.append((nid, argpos + 1))
                    child = args[argpos]
                    if mark[child] == 1:
                        raise CircuitError("combinational cycle detected")
                    if mark[child] == 0:
                        stack.append((child, 0))
                else:
                    mark[nid] = 2
                    order.append(nid)
        return order

    def _compile(self):
        prog = []
        for nid in self._order:
            node = self.nodes[nid]
            mask = (1 << node.width) - 1
            if node.kind == CONCAT:
                payload = tuple(self.nodes[a].width for a in node.args)
            elif node.kind in (INPUT, REG):
                payload = node.name
            elif node.kind == CONST:
                payload = node.value
            elif node.kind == SLICE:
                payload = node.lo
            elif node.kind == KEYED_MIX:
                payload = node.width
            else:
                payload = None
            prog.append((node.kind, nid, node.args, mask, payload))
        return prog

    # -- evaluation ---------------------------------------------------------

    def eval_nodes(self, state: dict[str, int], inputs: dict[str, int]) -> list[int]:
        """Value of every node for one cycle; missing ports raise KeyError."""
        vals = [0] * len(self.nodes)
        for kind, nid, args, mask, payload in self._prog:
            if kind == CONST:
                v = payload
            elif kind == INPUT:
                v = inputs[payload]
            elif kind == REG:
                v = state[payload]
            elif kind == SLICE:
                v = (vals[args[0]] >> payload) & mask
            elif kind == CONCAT:
                v = 0
                for a, w in zip(args, payload):
                    v = (v << w) | vals[a]
            elif kind == NOT:
                v = ~vals[args[0]] & mask
            elif kind == AND:
                v = vals[args[0]] & vals[args[1]]
            elif kind == OR:
                v = vals[args[0]] | vals[args[1]]
            elif kind == XOR:
                v = vals[args[0]] ^ vals[args[1]]
            elif kind == ADD:
                v = (vals[args[0]] + vals[args[1]]) & mask
            elif kind == SUB:
                v = (vals[args[0]] - vals[args[1]]) & mask
            elif kind == SHL:
                v = (vals[args[0]] << vals[args[1]]) & mask
            elif kind == SHR:
                v = vals[args[0]] >> vals[args[1]]
            elif kind == EQ:
                v = 1 if vals[args[0]] == vals[args[1]] else 0
            elif kind == LT:
                v = 1 if vals[args[0]] < vals[args[1]] else 0
            elif kind == MUX:
                v = vals[args[1]] if vals[args[0]] else vals[args[2]]
            else:  # KEYED_MIX
                v = crypto.round_mix(vals[args[0]], vals[args[1]], vals[args[2]], payload)
            vals[nid] = v
        return vals

    def eval_cycle(self, state: dict[str, int], inputs: dict[str, int]):
        """(next_state, outputs) = (N(state, inputs), F(state, inputs))."""
        missing = self.inputs.keys() - inputs.keys()
        if missing:
            raise CircuitError(f"missing input assignment(s): {sorted(missing)}")
        missing = self.regs.keys() - state.keys()
        if missing:
            raise CircuitError(f"missing register value(s): {sorted(missing)}")
        vals = self.eval_nodes(state, inputs)
        next_state = {reg: vals[nid] for reg, nid in self.next_of.items()}
        outputs = {name: vals[nid] for name, nid in self.outputs.items()}
        return next_state, outputs

    def initial_state(self) -> dict[str, int]:
        return {reg: init for reg, (_, init) in self.regs.items()}

    def dump(self) -> str:
        """One node per line in topological order (debug format)."""
        lines = [f"circuit {self.name}"]
        for port, width in self.inputs.items():
            lines.append(f"  port {port}:{width}")
        for reg, (width, init) in self.regs.items():
            lines.append(f"  reg {reg}:{width} init={init} next=n{self.next_of[reg]}")
        label_of = {nid: name for name, nid in self.signals.items()}
        for nid in self._order:
            node = self.nodes[nid]
            desc = KIND_NAMES[node.kind]
            if node.kind == CONST:
                desc += f" {node.value}"
            elif node.kind in (INPUT, REG):
                desc += f" {node.name}"
            elif node.kind == SLICE:
                desc += f" [{node.lo}+:{node.width}]"
            args = " ".join(f"n{a}" for a in node.args)
            label = f" ({label_of[nid]})" if nid in label_of else ""
            lines.append(f"  n{nid}:{node.width} = {desc} {args}".rstrip() + label)
        for name, nid in self.outputs.items():
            lines.append(f"  out {name} = n{nid}")
        return "\n".join(lines)


@dataclass
class Trace:
    """Per-cycle input/output/state vectors; state entries are the values the
    logic actually saw (override traces included)."""

    pi_i: list[dict[str, int]]
    pi_o: list[dict[str, int]]
    pi_s: list[dict[str, int]]

    def __len__(self) -> int:
        return len(self.pi_o)

    def output(self, name: str) -> list[int]:
        return [o[name] for o in self.pi_o]


def simulate(
    circuit: Circuit,
    input_trace: list[dict[str, int]],
    overrides: dict[str, list[int]] | None = None,
    initial_state: dict[str, int] | None = None,
) -> Trace:
    """Run the FSM over the input trace from S0 (or the given initial state).

    ``overrides`` forces a register's visible value per cycle: both the output
    and next-state functions see the forced value and the register's natural
    update is discarded while forced — the classic replace-the-trace secret
    semantics.
    """
    state = dict(initial_state) if initial_state is not None else circuit.initial_state()
    pi_i: list[dict[str, int]] = []
    pi_o: list[dict[str, int]] = []
    pi_s: list[dict[str, int]] = []
    overrides = overrides or {}
    for reg in overrides:
        if reg not in circuit.regs:
            raise CircuitError(f"override names unknown register {reg}")
    for cycle, inputs in enumerate(input_trace):
        for reg, values in overrides.items():
            state[reg] = values[cycle] if cycle < len(values) else values[-1]
        next_state, outputs = circuit.eval_cycle(state, inputs)
        pi_i.append(dict(inputs))
        pi_o.append(outputs)
        pi_s.append(dict(state))
        state = next_state
    return Trace(pi_i, pi_o, pi_s)


@dataclass(frozen=True)
class DeclassPoint:
    """Cut ciphertext signal: consumers of ``signal`` read ``p ? c_f : c``."""

    signal: str
    predicate: str
    free_input: str


def ancestors(circuit: Circuit, nid: int) -> set[int]:
    seen: set[int] = set()
    stack = [nid]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(circuit.nodes[cur].args)
    return seen


def declassify(circuit: Circuit, point: DeclassPoint) -> Circuit:
    """New circuit with the declassification rewrite applied; the original is
    untouched. The predicate must not depend on the declassified signal."""
    if point.signal not in circuit.signals:
        raise CircuitError(f"unknown signal {point.signal!r}")
    if point.predicate not in circuit.signals:
        raise CircuitError(f"unknown predicate {point.predicate!r}")
    if point.free_input in circuit.inputs:
        raise CircuitError(f"free input {point.free_input!r} already exists")
    sig = circuit.signals[point.signal]
    pred = circuit.signals[point.predicate]
    if circuit.nodes[pred].width != 1:
        raise CircuitError("declassification predicate must be 1 bit")
    if sig in ancestors(circuit, pred):
        raise CircuitError("predicate cone contains the declassified signal")

    width = circuit.nodes[sig].width
    nodes = list(circuit.nodes)
    free_id = len(nodes)
    nodes.append(Node(INPUT, width, name=point.free_input))
    mux_id = len(nodes)
    nodes.append(Node(MUX, width, (pred, free_id, sig)))

    def rewrite(args: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(mux_id if a == sig else a for a in args)

    for nid in range(len(circuit.nodes)):
        node = nodes[nid]
        if nid != mux_id and sig in node.args:
            nodes[nid] = Node(node.kind, node.width, rewrite(node.args),
                              node.value, node.name, node.lo)
    inputs = dict(circuit.inputs)
    inputs[point.free_input] = width
    next_of = {r: (mux_id if n == sig else n) for r, n in circuit.next_of.items()}
    outputs = {o: (mux_id if n == sig else n) for o, n in circuit.outputs.items()}
    signals = dict(circuit.signals)
    signals[f"{point.signal}__declass"] = mux_id
    return Circuit(circuit.name + "'", inputs, dict(circuit.regs), nodes,
                   next_of, outputs, signals)


class CircuitBuilder:
    """Append-only construction; methods return node ids."""

    def __init__(self, name: str):
        self.name = name
        self._inputs: dict[str, int] = {}
        self._regs: dict[str, tuple[int, int]] = {}
        self._reg_nodes: dict[str, int] = {}
        self._nodes: list[Node] = []
        self._next: dict[str, int] = {}
        self._outputs: dict[str, int] = {}
        self._signals: dict[str, int] = {}

    def _push(self, node: Node) -> int:
        self._nodes.append(node)
        return len(self._nodes) - 1

    def _width(self, nid: int) -> int:
        return self._nodes[nid].width

    # structural ------------------------------------------------------------

    def input(self, name: str, width: int) -> int:
        if name in self._inputs:
            raise CircuitError(f"duplicate input {name}")
        self._inputs[name] = width
        return self._push(Node(INPUT, width, name=name))

    def reg(self, name: str, width: int, init: int = 0) -> int:
        if name in self._regs:
            raise CircuitError(f"duplicate register {name}")
        self._regs[name] = (width, init)
        nid = self._push(Node(REG, width, name=name))
        self._reg_nodes[name] = nid
        return nid

    def set_next(self, name: str, nid: int):
        if name not in self._regs:
            raise CircuitError(f"unknown register {name}")
        self._next[name] = nid

    def output(self, name: str, nid: int):
        self._outputs[name] = nid

    def tag(self, name: str, nid: int) -> int:
        """Name an internal node so checkers can refer to it."""
        self._signals[name] = nid
        return nid

    def const(self, value: int, width: int) -> int:
        if not 0 <= value < (1 << width):
            raise CircuitError(f"constant {value} exceeds {width} bits")
        return self._push(Node(CONST, width, value=value))

    # combinational ---------------------------------------------------------

    def _binary(self, kind: int, a: int, b: int) -> int:
        if self._width(a) != self._width(b):
            raise CircuitError(f"{KIND_NAMES[kind]} operand widths differ")
        return self._push(Node(kind, self._width(a), (a, b)))

    def and_(self, a: int, b: int) -> int:
        return self._binary(AND, a, b)

    def or_(self, a: int, b: int) -> int:
        return self._binary(OR, a, b)

    def xor(self, a: int, b: int) -> int:
        return self._binary(XOR, a, b)

    def add(self, a: int, b: int) -> int:
        return self._binary(ADD, a, b)

    def sub(self, a: int, b: int) -> int:
        return self._binary(SUB, a, b)

    def not_(self, a: int) -> int:
        return self._push(Node(NOT, self._width(a), (a,)))

    def shl(self, a: int, amount: int) -> int:
        return self._push(Node(SHL, self._width(a), (a, amount)))

    def shr(self, a: int, amount: int) -> int:
        return self._push(Node(SHR, self._width(a), (a, amount)))

    def eq(self, a: int, b: int) -> int:
        if self._width(a) != self._width(b):
            raise CircuitError("eq operand widths differ")
        return self._push(Node(EQ, 1, (a, b)))

    def lt(self, a: int, b: int) -> int:
        if self._width(a) != self._width(b):
            raise CircuitError("lt operand widths differ")
        return self._push(Node(LT, 1, (a, b)))

    def mux(self, sel: int, if_true: int, if_false: int) -> int:
        if self._width(sel) != 1:
            raise CircuitError("mux select must be 1 bit")
        if self._width(if_true) != self._width(if_false):
            raise CircuitError("mux arm widths differ")
        return self._push(Node(MUX, self._width(if_true), (sel, if_true, if_false)))

    def slice(self, a: int, lo: int, width: int) -> int:
        if lo + width > self._width(a):
            raise CircuitError("slice exceeds operand width")
        return self._push(Node(SLICE, width, (a,), lo=lo))

    def concat(self, *parts: int) -> int:
        """MSB-first concatenation."""
        width = sum(self._width(p) for p in parts)
        return self._push(Node(CONCAT, width, tuple(parts)))

    def keyed_mix(self, key: int, rnd: int, data: int) -> int:
        """The cipher's keyed round mixing function over a half-block."""
        return self._push(Node(KEYED_MIX, self._width(data), (key, rnd, data)))

    # conveniences ------------------------------------------------------------

    def eq_const(self, a: int, value: int) -> int:
        return self.eq(a, self.const(value, self._width(a)))

    def bool_word(self, bit: int, width: int) -> int:
        """Replicate a 1-bit flag to all-ones / all-zeros of the given width."""
        return self.mux(bit, self.const((1 << width) - 1, width), self.const(0, width))

    def const_table(self, index: int, values: list[int], width: int) -> int:
        """Mux tree mapping an index node to constants (LUT)."""
        return self.node_table(index, [self.const(v, width) for v in values])

    def node_table(self, index: int, entries: list[int]) -> int:
        """Mux tree selecting among node values by an index node."""
        bits = self._width(index)
        if len(entries) != (1 << bits):
            raise CircuitError("table size must be 2^index_width")

        def build(lo_bit: int, vals: list[int]) -> int:
            if len(vals) == 1:
                return vals[0]
            sel = self.slice(index, lo_bit, 1) if bits > 1 else index
            half = len(vals) // 2
            return self.mux(sel, build(lo_bit - 1, vals[half:]), build(lo_bit - 1, vals[:half]))

        return build(bits - 1, list(entries))

    # cipher datapaths --------------------------------------------------------

    def feistel_round_fwd(self, key: int, rnd: int, block: int) -> int:
        """(L, R) -> (R, L xor mix(key, rnd, R)); matches the crypto module."""
        half = self._width(block) // 2
        left = self.slice(block, half, half)
        right = self.slice(block, 0, half)
        mixed = self.xor(left, self.keyed_mix(key, rnd, right))
        return self.concat(right, mixed)

    def feistel_round_inv(self, key: int, rnd: int, block: int) -> int:
        half = self._width(block) // 2
        left = self.slice(block, half, half)
        right = self.slice(block, 0, half)
        orig_left = self.xor(right, self.keyed_mix(key, rnd, left))
        return self.concat(orig_left, left)

    def encrypt_comb(self, key: int, block: int, rounds: int, rnd_width: int = 8) -> int:
        for r in range(rounds):
            block = self.feistel_round_fwd(key, self.const(r, rnd_width), block)
        return block

    def decrypt_comb(self, key: int, block: int, rounds: int, rnd_width: int = 8) -> int:
        for r in range(rounds - 1, -1, -1):
            block = self.feistel_round_inv(key, self.const(r, rnd_width), block)
        return block

    def build(self) -> Circuit:
        return Circuit(self.name, self._inputs, self._regs, self._nodes,
                       self._next, self._outputs, self._signals)
