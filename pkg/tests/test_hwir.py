import random

import pytest

from severif.crypto import CryptoParams, Key, prp_forward, prp_inverse
from severif.hwir import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    DeclassPoint,
    Node,
    REG,
    ancestors,
    declassify,
    simulate,
)


def test_passthrough_echoes_inputs():
    b = CircuitBuilder("pass")
    x = b.input("x", 4)
    b.output("y", x)
    trace = simulate(b.build(), [{"x": v} for v in (1, 9, 15)])
    assert trace.output("y") == [1, 9, 15]


def test_one_bit_counter():
    b = CircuitBuilder("tog")
    r = b.reg("r", 1, 0)
    b.set_next("r", b.xor(r, b.const(1, 1)))
    b.output("o", r)
    trace = simulate(b.build(), [{}] * 6)
    assert trace.output("o") == [0, 1, 0, 1, 0, 1]


def test_zero_cycle_trace_is_empty():
    b = CircuitBuilder("empty")
    x = b.input("x", 1)
    b.output("y", x)
    trace = simulate(b.build(), [])
    assert len(trace) == 0 and trace.pi_o == []


def test_simulation_deterministic_replay():
    b = CircuitBuilder("acc")
    x = b.input("x", 4)
    r = b.reg("r", 4, 0)
    b.set_next("r", b.add(r, x))
    b.output("o", r)
    c = b.build()
    ins = [{"x": v} for v in (3, 5, 1, 15, 2)]
    assert simulate(c, ins).pi_o == simulate(c, ins).pi_o


def _reference_semantics(kind, a, b, width):
    mask = (1 << width) - 1
    if kind == "and":
        return a & b
    if kind == "or":
        return a | b
    if kind == "xor":
        return a ^ b
    if kind == "add":
        return (a + b) & mask
    if kind == "sub":
        return (a - b) & mask
    if kind == "shl":
        return (a << b) & mask
    if kind == "shr":
        return a >> b
    if kind == "eq":
        return 1 if a == b else 0
    if kind == "lt":
        return 1 if a < b else 0
    raise AssertionError(kind)


@pytest.mark.parametrize("width", [1, 2, 3, 4, 8])
def test_binary_node_semantics_exhaustive(width):
    b = CircuitBuilder("bin")
    x = b.input("x", width)
    y = b.input("y", width)
    kinds = ["and", "or", "xor", "add", "sub", "shl", "shr"]
    b.output("and", b.and_(x, y))
    b.output("or", b.or_(x, y))
    b.output("xor", b.xor(x, y))
    b.output("add", b.add(x, y))
    b.output("sub", b.sub(x, y))
    b.output("shl", b.shl(x, y))
    b.output("shr", b.shr(x, y))
    b.output("eq", b.eq(x, y))
    b.output("lt", b.lt(x, y))
    c = b.build()
    if width <= 4:
        values = range(1 << width)
    else:
        rng = random.Random(width)
        values = sorted({rng.getrandbits(width) for _ in range(24)})
    for a in values:
        for bb in values:
            _, outs = c.eval_cycle({}, {"x": a, "y": bb})
            for kind in kinds + ["eq", "lt"]:
                assert outs[kind] == _reference_semantics(kind, a, bb, width), (kind, a, bb)


def test_unary_and_structure_nodes():
    b = CircuitBuilder("u")
    x = b.input("x", 8)
    b.output("not", b.not_(x))
    b.output("lo", b.slice(x, 0, 4))
    b.output("hi", b.slice(x, 4, 4))
    b.output("cat", b.concat(b.slice(x, 4, 4), b.slice(x, 0, 4)))
    b.output("mux", b.mux(b.slice(x, 7, 1), b.const(0xAA, 8), b.const(0x55, 8)))
    c = b.build()
    for v in range(256):
        _, outs = c.eval_cycle({}, {"x": v})
        assert outs["not"] == (~v) & 0xFF
        assert outs["lo"] == v & 0xF and outs["hi"] == v >> 4
        assert outs["cat"] == v
        assert outs["mux"] == (0xAA if v >> 7 else 0x55)


def test_full_adder_tree_matches_add_node():
    # Ripple-carry from gates vs the arithmetic Add node, all 2^8 pairs.
    width = 4
    b = CircuitBuilder("adder")
    x = b.input("x", width)
    y = b.input("y", width)
    carry = b.const(0, 1)
    bits = []
    for i in range(width):
        xi = b.slice(x, i, 1)
        yi = b.slice(y, i, 1)
        s = b.xor(b.xor(xi, yi), carry)
        carry = b.or_(b.and_(xi, yi), b.and_(carry, b.xor(xi, yi)))
        bits.append(s)
    b.output("tree", b.concat(*reversed(bits)))
    b.output("node", b.add(x, y))
    c = b.build()
    for a in range(16):
        for bb in range(16):
            _, outs = c.eval_cycle({}, {"x": a, "y": bb})
            assert outs["tree"] == outs["node"] == (a + bb) & 0xF


def test_const_table_lookup():
    b = CircuitBuilder("lut")
    i = b.input("i", 3)
    b.output("o", b.const_table(i, [v * v % 8 for v in range(8)], 3))
    c = b.build()
    for v in range(8):
        assert c.eval_cycle({}, {"i": v})[1]["o"] == v * v % 8


def test_feistel_datapath_matches_crypto_module():
    params = CryptoParams(2, 2, 6)
    key = Key.from_seed(params, 3)
    b = CircuitBuilder("fp")
    k = b.input("k", 4)
    blk = b.input("b", 4)
    enc = b.encrypt_comb(k, blk, params.rounds)
    b.output("enc", enc)
    b.output("dec", b.decrypt_comb(k, enc, params.rounds))
    c = b.build()
    for v in range(16):
        _, outs = c.eval_cycle({}, {"k": key.material, "b": v})
        assert outs["enc"] == prp_forward(params, key, v)
        assert outs["dec"] == v
        assert prp_inverse(params, key, outs["enc"]) == v


def test_trace_invariant_reevaluation():
    # pi_s[i+1] = N(pi_s[i], pi_i[i]) and pi_o[i] = F(pi_s[i], pi_i[i]).
    b = CircuitBuilder("fsm")
    x = b.input("x", 4)
    r = b.reg("r", 4, 7)
    b.set_next("r", b.xor(r, x))
    b.output("o", b.add(r, x))
    c = b.build()
    rng = random.Random(1)
    ins = [{"x": rng.getrandbits(4)} for _ in range(20)]
    trace = simulate(c, ins)
    assert trace.pi_s[0] == {"r": 7}
    for i in range(len(trace)):
        next_state, outputs = c.eval_cycle(trace.pi_s[i], trace.pi_i[i])
        assert outputs == trace.pi_o[i]
        if i + 1 < len(trace):
            assert next_state == trace.pi_s[i + 1]


def test_override_replaces_value_and_discards_natural_update():
    b = CircuitBuilder("ovr")
    r = b.reg("r", 4, 0)
    b.set_next("r", b.add(r, b.const(1, 4)))
    b.output("o", r)
    c = b.build()
    trace = simulate(c, [{}] * 5, overrides={"r": [9, 2, 2, 7, 7]})
    assert trace.output("o") == [9, 2, 2, 7, 7]
    with pytest.raises(CircuitError):
        simulate(c, [{}], overrides={"nope": [1]})


def test_missing_port_assignment_raises():
    b = CircuitBuilder("m")
    x = b.input("x", 1)
    b.output("y", x)
    with pytest.raises(CircuitError):
        b.build().eval_cycle({}, {})


def test_cycle_detection():
    nodes = [Node(REG, 1, name="r")]
    # next(r) points at a node depending on itself via a bogus arg.
    from severif.hwir import XOR

    nodes.append(Node(XOR, 1, (0, 2)))
    nodes.append(Node(XOR, 1, (1, 0)))
    with pytest.raises(CircuitError):
        Circuit("bad", {}, {"r": (1, 0)}, nodes, {"r": 2}, {})


def test_width_checks_in_builder():
    b = CircuitBuilder("w")
    x = b.input("x", 4)
    y = b.input("y", 2)
    with pytest.raises(CircuitError):
        b.add(x, y)
    with pytest.raises(CircuitError):
        b.mux(x, x, x)  # select must be 1 bit
    with pytest.raises(CircuitError):
        b.slice(x, 3, 4)


def test_declassify_pred_true_cuts_fanout():
    b = CircuitBuilder("d")
    sec = b.input("sec", 4)
    c_node = b.tag("c", b.add(sec, sec))
    b.tag("p", b.const(1, 1))
    b.output("data", c_node)
    circuit = b.build()
    cut = declassify(circuit, DeclassPoint("c", "p", "cf"))
    # The sink no longer depends on the secret's cone.
    sink = cut.outputs["data"]
    assert cut.signals["c"] not in {sink} and cut.nodes[sink].kind == 15
    trace = simulate(cut, [{"sec": 3, "cf": 12}])
    assert trace.output("data") == [12]


def test_declassify_pred_false_is_identity():
    b = CircuitBuilder("d0")
    sec = b.input("sec", 4)
    c_node = b.tag("c", b.add(sec, sec))
    b.tag("p", b.const(0, 1))
    b.output("data", c_node)
    circuit = b.build()
    cut = declassify(circuit, DeclassPoint("c", "p", "cf"))
    rng = random.Random(2)
    for _ in range(50):
        v = rng.getrandbits(4)
        base = simulate(circuit, [{"sec": v}]).output("data")
        new = simulate(cut, [{"sec": v, "cf": rng.getrandbits(4)}]).output("data")
        assert base == new


def test_declassify_substitution_identity():
    # Driving c_f with the original signal's value each cycle reproduces the
    # original behavior exactly, whatever the predicate does.
    b = CircuitBuilder("sub")
    x = b.input("x", 4)
    r = b.reg("r", 4, 0)
    c_node = b.tag("c", b.add(r, x))
    b.tag("p", b.eq_const(b.slice(x, 0, 2), 2))
    b.set_next("r", c_node)
    b.output("data", c_node)
    circuit = b.build()
    cut = declassify(circuit, DeclassPoint("c", "p", "cf"))
    rng = random.Random(3)
    for _ in range(200):
        ins = [{"x": rng.getrandbits(4)} for _ in range(12)]
        base = simulate(circuit, ins)
        fed = []
        state = cut.initial_state()
        for cycle, base_in in enumerate(ins):
            c_val = circuit.eval_nodes(base.pi_s[cycle], base_in)[circuit.signals["c"]]
            state_view = dict(state)
            inputs = dict(base_in)
            inputs["cf"] = c_val
            state, outs = cut.eval_cycle(state_view, inputs)
            fed.append(outs)
        assert [o["data"] for o in fed] == base.output("data")


def test_declassify_validation():
    b = CircuitBuilder("v")
    x = b.input("x", 4)
    c_node = b.tag("c", b.add(x, x))
    b.tag("wide", b.add(x, x))
    b.tag("p_on_c", b.eq_const(c_node, 3))
    b.output("data", c_node)
    circuit = b.build()
    with pytest.raises(CircuitError):
        declassify(circuit, DeclassPoint("missing", "p_on_c", "cf"))
    with pytest.raises(CircuitError):
        declassify(circuit, DeclassPoint("c", "wide", "cf"))  # not 1 bit
    with pytest.raises(CircuitError):
        declassify(circuit, DeclassPoint("c", "p_on_c", "cf"))  # cone contains c
    with pytest.raises(CircuitError):
        declassify(circuit, DeclassPoint("c", "p_on_c", "x"))  # input exists


def test_declassify_leaves_original_untouched():
    b = CircuitBuilder("orig")
    x = b.input("x", 4)
    c_node = b.tag("c", b.add(x, x))
    b.tag("p", b.const(1, 1))
    b.output("data", c_node)
    circuit = b.build()
    node_count = len(circuit.nodes)
    declassify(circuit, DeclassPoint("c", "p", "cf"))
    assert len(circuit.nodes) == node_count
    assert "cf" not in circuit.inputs


def test_ancestors():
    b = CircuitBuilder("anc")
    x = b.input("x", 2)
    y = b.input("y", 2)
    s = b.add(x, y)
    t = b.not_(s)
    circuit_b = b
    b.output("o", t)
    c = b.build()
    assert ancestors(c, t) == {x, y, s, t}


def test_dump_lists_every_node_once():
    b = CircuitBuilder("dump")
    x = b.input("x", 2)
    r = b.reg("r", 2, 1)
    b.set_next("r", b.xor(r, x))
    b.output("o", r)
    text = b.build().dump()
    assert "circuit dump" in text
    assert text.count("\n  n") == 3
    assert "reg r:2 init=1" in text
