"""RTL information-flow checkers: taint reachability and two-trace product.

Both run on the declassified circuit (unless ablated) and check one secret
source at a time, with the other declared sources pinned equal — that is what
attributes a leak to its proximate source the way the paper's tables do.

The taint checker propagates per-wire taint alongside a concrete simulation;
mux nodes with untainted selects pass only the selected arm's taint, which is
what lets a correct completion predicate actually cut the ciphertext path.
It is sound per driven trace and conservative elsewhere. The two-trace
checker is the precise one: it replaces the secret's value trace across a
pair of otherwise identical runs and compares the sinks cycle by cycle,
classifying any difference as functional, timing, or functional-timing.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .enclaves import EnclaveVariant, SecretSource, drive_trace, enumerate_initial_states
from .hwir import (
    ADD, AND, CONCAT, CONST, EQ, INPUT, KEYED_MIX, LT, MUX, NOT, OR, REG,
    SHL, SHR, SLICE, SUB, XOR, Circuit, declassify, simulate,
)

TIMING = "timing"
FUNCTIONAL = "functional"
FUNCTIONAL_TIMING = "functional-timing"

SINKS = ("Valid", "Data")


@dataclass(frozen=True)
class FlowFinding:
    source: str
    sink: str
    classification: str
    checker: str
    witness: dict

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "sink": self.sink,
            "class": self.classification,
            "checker": self.checker,
            "witness": self.witness,
        }


@dataclass
class LeakReport:
    variant: str
    checker: str
    declassified: bool
    flows: list[FlowFinding]
    meta: dict = field(default_factory=dict)

    @property
    def secure(self) -> bool:
        return not self.flows

    def flow_pairs(self) -> set[tuple[str, str]]:
        return {(f.source, f.sink) for f in self.flows}

    def flow_triples(self) -> set[tuple[str, str, str]]:
        return {(f.source, f.sink, f.classification) for f in self.flows}

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "checker": self.checker,
            "declassified": self.declassified,
            "secure": self.secure,
            "verdicts": [f.to_json() for f in sorted(
                self.flows, key=lambda f: (f.source, f.sink))],
            **self.meta,
        }


def prepared_circuit(variant: EnclaveVariant, use_declass: bool) -> Circuit:
    circuit = variant.circuit
    if use_declass:
        for point in variant.declass:
            circuit = declassify(circuit, point)
    return circuit


def default_horizon(variant: EnclaveVariant) -> int:
    return 4 * max(variant.latency["valid_latency"], variant.latency["op_period"])


def _ops_for(variant: EnclaveVariant, horizon: int) -> int:
    period = max(variant.latency["op_period"], 1)
    usable = horizon - variant.latency["valid_latency"] - 2
    return max(1, min(usable // period, 8))


def classify(data_a: list[int], data_b: list[int], invalid_default: int) -> str:
    """Data-sink difference taxonomy: if at every differing cycle one side
    still shows the invalid default, the secret modulates only availability
    timing (functional-timing); any other difference is functional."""
    diffs = [(a, b) for a, b in zip(data_a, data_b) if a != b]
    if not diffs:
        raise ValueError("classify needs a non-empty difference")
    if all(a == invalid_default or b == invalid_default for a, b in diffs):
        return FUNCTIONAL_TIMING
    return FUNCTIONAL


# ---------------------------------------------------------------------------
# Taint checker


def _taint_cycle(circuit: Circuit, state, inputs, reg_taints, vals):
    """Per-node taint for one cycle, value-precise at mux selects."""
    taints = [0] * len(circuit.nodes)
    for kind, nid, args, mask, payload in circuit._prog:
        if kind == CONST:
            t = 0
        elif kind == INPUT:
            t = 0
        elif kind == REG:
            t = reg_taints[payload]
        elif kind == SLICE:
            t = (taints[args[0]] >> payload) & mask
        elif kind == CONCAT:
            t = 0
            for a, w in zip(args, payload):
                t = (t << w) | taints[a]
        elif kind == NOT:
            t = taints[args[0]]
        elif kind in (AND, OR, XOR):
            t = taints[args[0]] | taints[args[1]]
        elif kind in (ADD, SUB, SHL, SHR):
            t = mask if (taints[args[0]] | taints[args[1]]) else 0
        elif kind in (EQ, LT):
            t = 1 if (taints[args[0]] | taints[args[1]]) else 0
        elif kind == MUX:
            sel_t = taints[args[0]]
            if sel_t:
                t = mask | taints[args[1]] | taints[args[2]]
            else:
                t = taints[args[1]] if vals[args[0]] else taints[args[2]]
        else:  # KEYED_MIX
            t = mask if (taints[args[0]] | taints[args[1]] | taints[args[2]]) else 0
        taints[nid] = t
    return taints


def _taint_path(circuit: Circuit, taints, sink_node: int, source_regs: set[str]) -> list[str]:
    """Backward walk over tainted operands from the sink toward a source."""
    from .hwir import KIND_NAMES

    path = []
    seen = set()
    nid = sink_node
    while nid not in seen:
        seen.add(nid)
        node = circuit.nodes[nid]
        label = KIND_NAMES[node.kind] + (f":{node.name}" if node.name else f"#{nid}")
        path.append(label)
        if node.kind == REG and node.name in source_regs:
            break
        nxt = None
        for arg in node.args:
            if taints[arg]:
                nxt = arg
                break
        if nxt is None:
            if node.kind == REG and node.name in circuit.next_of:
                nid = circuit.next_of[node.name]
                continue
            break
        nid = nxt
    return path


def taint_for_source(
    variant: EnclaveVariant,
    circuit: Circuit,
    source: SecretSource,
    horizon: int,
    seeds: tuple[int, ...],
) -> dict[str, dict]:
    """Propagate taint seeded at one source over driven simulations; other
    declared sources are barriers (their registers stay untainted, mirroring
    the two-trace checker holding them equal). Returns sink -> finding."""
    source_regs = set(source.regs)
    barrier_regs = {r for other in variant.secrets if other.name != source.name
                    for r in other.regs}
    findings: dict[str, dict] = {}
    for seed in seeds:
        rng = random.Random(f"{seed}:{variant.name}:{source.name}:taint")
        trace_in = drive_trace(variant, circuit, _ops_for(variant, horizon), rng, horizon)
        state = circuit.initial_state()
        reg_taints = {r: 0 for r in circuit.regs}
        for r in source_regs:
            reg_taints[r] = (1 << circuit.regs[r][0]) - 1
        for cycle, inputs in enumerate(trace_in):
            vals = circuit.eval_nodes(state, inputs)
            taints = _taint_cycle(circuit, state, inputs, reg_taints, vals)
            for sink, port in variant.sinks.items():
                if sink in findings:
                    continue
                sink_node = circuit.outputs[port]
                if taints[sink_node]:
                    findings[sink] = {
                        "cycle": cycle,
                        "seed": seed,
                        "path": _taint_path(circuit, taints, sink_node, source_regs),
                    }
            state = {r: vals[nid] for r, nid in circuit.next_of.items()}
            reg_taints = {r: taints[nid] for r, nid in circuit.next_of.items()}
            for r in source_regs:
                reg_taints[r] = (1 << circuit.regs[r][0]) - 1
            for r in barrier_regs:
                reg_taints[r] = 0
        if len(findings) == len(variant.sinks):
            break
    return findings


def taint_check(
    variant: EnclaveVariant,
    use_declass: bool = True,
    horizon: int | None = None,
    seeds: tuple[int, ...] = (0, 1, 2),
) -> LeakReport:
    """Conservative checker: reports a flow whenever a sink's taint bit is
    ever set within the horizon. No missed flows on the driven traces."""
    horizon = horizon or default_horizon(variant)
    circuit = prepared_circuit(variant, use_declass)
    flows: list[FlowFinding] = []
    for source in variant.secrets:
        findings = taint_for_source(variant, circuit, source, horizon, seeds)
        for sink in SINKS:
            if sink in findings:
                classification = TIMING if sink == "Valid" else FUNCTIONAL
                flows.append(FlowFinding(source.name, sink, classification,
                                         "taint", findings[sink]))
    return LeakReport(variant.name, "taint", use_declass, flows,
                      {"horizon": horizon, "seeds": list(seeds)})


# ---------------------------------------------------------------------------
# Two-trace checker


def _constant_trace(value: int, horizon: int) -> list[int]:
    return [value] * horizon


def _source_value_sets(source: SecretSource, rng: random.Random, horizon: int,
                       varying: bool) -> tuple[dict, dict, tuple, tuple]:
    """Override traces for the two runs; guaranteed to differ somewhere."""
    width = source.width
    while True:
        va = tuple(rng.getrandbits(width) for _ in source.regs)
        vb = tuple(rng.getrandbits(width) for _ in source.regs)
        if va != vb:
            break
    if varying:
        over_a = {r: [rng.getrandbits(width) for _ in range(horizon)] for r in source.regs}
        over_b = {r: [rng.getrandbits(width) for _ in range(horizon)] for r in source.regs}
        if all(over_a[r] == over_b[r] for r in source.regs):
            over_b[source.regs[0]][0] ^= 1
        return over_a, over_b, ("varying",), ("varying",)
    over_a = {r: _constant_trace(v, horizon) for r, v in zip(source.regs, va)}
    over_b = {r: _constant_trace(v, horizon) for r, v in zip(source.regs, vb)}
    return over_a, over_b, va, vb


def _context_for_trial(
    variant: EnclaveVariant,
    source: SecretSource,
    rng: random.Random,
    horizon: int,
    init_states: list[dict],
    trial: int,
):
    """Shared context for a pair: held values for other sources, the initial
    state (cache variants sweep theirs), and the input drive."""
    holds: dict[str, list[int]] = {}
    init = dict(init_states[trial % len(init_states)]) if init_states else None
    for other in variant.secrets:
        if other.name == source.name:
            continue
        if other.mode == "hold":
            for reg in other.regs:
                holds[reg] = _constant_trace(rng.getrandbits(other.width), horizon)
        # init-mode others keep their shared S0 value.
    return holds, init


def two_trace_for_source(
    variant: EnclaveVariant,
    circuit: Circuit,
    source: SecretSource,
    *,
    mode: str,
    trials: int,
    seed: int,
    horizon: int,
    max_runs: int = 4096,
) -> tuple[dict[str, dict], int]:
    """Pairs of runs differing only in this source; returns sink findings and
    the number of pairs compared."""
    init_states = list(enumerate_initial_states(variant)) if variant.cache_line_regs else []
    if len(init_states) > 64:
        keep = random.Random(f"{seed}:init").sample(range(len(init_states)), 64)
        init_states = [init_states[i] for i in sorted(keep)]
    findings: dict[str, dict] = {}
    pairs = 0

    def compare(trace_a, trace_b, descr):
        nonlocal pairs
        pairs += 1
        for sink in SINKS:
            if sink in findings:
                continue
            out_a = trace_a.output(variant.sinks[sink])
            out_b = trace_b.output(variant.sinks[sink])
            if out_a != out_b:
                first = next(i for i, (a, b) in enumerate(zip(out_a, out_b)) if a != b)
                classification = (TIMING if sink == "Valid"
                                  else classify(out_a, out_b, variant.invalid_default))
                findings[sink] = {
                    "classification": classification,
                    "witness": {
                        "first_diff_cycle": first,
                        "value_a": out_a[first],
                        "value_b": out_b[first],
                        **descr,
                    },
                }

    if mode == "random":
        for trial in range(trials):
            if len(findings) == len(SINKS):
                break
            rng = random.Random(f"{seed}:{variant.name}:{source.name}:{trial}")
            drive = drive_trace(variant, circuit, _ops_for(variant, horizon), rng, horizon)
            holds, init = _context_for_trial(variant, source, rng, horizon,
                                             init_states, trial)
            varying = source.mode == "hold" and trial % 2 == 1
            if source.mode == "hold":
                over_a, over_b, va, vb = _source_value_sets(source, rng, horizon, varying)
                init_a = init_b = init
            else:
                width = source.width
                va = vb = None
                while va == vb:
                    va, vb = rng.getrandbits(width), rng.getrandbits(width)
                base = init if init is not None else circuit.initial_state()
                init_a = {**base, source.regs[0]: va}
                init_b = {**base, source.regs[0]: vb}
                over_a = over_b = {}
            trace_a = simulate(circuit, drive, {**holds, **over_a}, init_a)
            trace_b = simulate(circuit, drive, {**holds, **over_b}, init_b)
            compare(trace_a, trace_b,
                    {"trial": trial, "source_a": va, "source_b": vb})
    elif mode == "exhaustive":
        width = source.width
        domain = list(itertools.product(range(1 << width), repeat=len(source.regs)))
        contexts = _exhaustive_contexts(variant, source, horizon, init_states)
        budget = max(1, max_runs // max(len(domain), 1))
        contexts = contexts[:budget]
        for ctx_index, (holds, init) in enumerate(contexts):
            rng = random.Random(f"{seed}:{variant.name}:{source.name}:exh:{ctx_index}")
            drive = drive_trace(variant, circuit, _ops_for(variant, horizon), rng, horizon)
            traces = {}
            for values in domain:
                if source.mode == "hold":
                    overrides = {r: _constant_trace(v, horizon)
                                 for r, v in zip(source.regs, values)}
                    init_v = init
                else:
                    base = init if init is not None else circuit.initial_state()
                    init_v = {**base, source.regs[0]: values[0]}
                    overrides = {}
                traces[values] = simulate(circuit, drive, {**holds, **overrides}, init_v)
            for va, vb in itertools.combinations(domain, 2):
                if len(findings) == len(SINKS):
                    break
                compare(traces[va], traces[vb],
                        {"context": ctx_index, "source_a": va, "source_b": vb})
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return findings, pairs


def _exhaustive_contexts(variant, source, horizon, init_states):
    """Cross product of held values for the other sources and initial states."""
    hold_dims: list[tuple[str, int]] = []
    for other in variant.secrets:
        if other.name == source.name or other.mode != "hold":
            continue
        for reg in other.regs:
            hold_dims.append((reg, other.width))
    value_space = itertools.product(*(range(1 << w) for _, w in hold_dims)) \
        if hold_dims else [()]
    inits = init_states if init_states else [None]
    contexts = []
    for values in value_space:
        holds = {reg: _constant_trace(v, horizon)
                 for (reg, _), v in zip(hold_dims, values)}
        for init in inits:
            contexts.append((holds, dict(init) if init else None))
    return contexts


def two_trace_check(
    variant: EnclaveVariant,
    use_declass: bool = True,
    mode: str = "random",
    trials: int = 32,
    seed: int = 0,
    horizon: int | None = None,
    max_runs: int = 4096,
) -> LeakReport:
    """Precise checker: witnesses are concrete trace pairs, classified per the
    sink taxonomy (Valid: timing; Data: functional vs functional-timing by the
    invalid-default heuristic, flagged as such in the report)."""
    horizon = horizon or default_horizon(variant)
    circuit = prepared_circuit(variant, use_declass)
    flows: list[FlowFinding] = []
    total_pairs = 0
    for source in variant.secrets:
        findings, pairs = two_trace_for_source(
            variant, circuit, source, mode=mode, trials=trials, seed=seed,
            horizon=horizon, max_runs=max_runs,
        )
        total_pairs += pairs
        for sink in SINKS:
            if sink in findings:
                finding = findings[sink]
                flows.append(FlowFinding(source.name, sink, finding["classification"],
                                         "two-trace", finding["witness"]))
    meta = {"horizon": horizon, "mode": mode, "trials": trials, "seed": seed,
            "pairs": total_pairs,
            "classification_note": "Data split functional vs functional-timing "
                                   "by the invalid-default heuristic"}
    return LeakReport(variant.name, "two-trace", use_declass, flows, meta)


def check_variant(
    variant: EnclaveVariant,
    checker: str = "both",
    use_declass: bool = True,
    mode: str = "random",
    trials: int = 32,
    seed: int = 0,
    horizon: int | None = None,
) -> dict[str, LeakReport]:
    reports: dict[str, LeakReport] = {}
    if checker in ("taint", "both"):
        reports["taint"] = taint_check(variant, use_declass, horizon)
    if checker in ("two-trace", "both"):
        reports["two-trace"] = two_trace_check(
            variant, use_declass, mode=mode, trials=trials, seed=seed, horizon=horizon)
    return reports


def agreement_holds(taint: LeakReport, two_trace: LeakReport) -> bool:
    """Soundness alignment: taint None at (source, sink) implies two-trace
    None there; i.e. two-trace flows are a subset of taint flows."""
    return two_trace.flow_pairs() <= taint.flow_pairs()
