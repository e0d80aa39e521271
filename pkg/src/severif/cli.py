"""Batch command-line front end for all checkers.

Exit codes: 0 success / judged secure, 1 a checker found (or missed) a flow
or a run stuck, 2 usage, config or type errors. `--json` everywhere; fixed
seeds give byte-identical JSON.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import attack as attack_mod
from . import enclaves, ift, nicheck
from .config import ENV_VAR, RunConfig, dump_config, load_config
from .crypto import Key, SaltMode, SaltSource
from .interp import MachineState, Semantics, Stuck, Value, cipher, plain, run
from .lang import KEY_REG, ParseError, format_program, gpr, parse_program
from .typecheck import TypeCheckError, typecheck

WIDTH_CONFIGS = ((2, 2), (3, 3), (4, 2))  # n=3 pairs with s=3: blocks must be even


def _emit(payload: dict, as_json: bool, text: str | None = None) -> None:
    if as_json:
        print(json.dumps(payload, sort_keys=True))
    elif text is not None:
        print(text)


def _load_program(path: str, r_max: int):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_program(handle.read(), r_max)


def _enclave_params(cfg: RunConfig) -> enclaves.EnclaveParams:
    return enclaves.EnclaveParams(
        n=cfg.n, s=cfg.s, rounds=cfg.rounds, key_seed=cfg.key_seed,
        cache_lines=cfg.cache_lines,
    )


# -- subcommands -------------------------------------------------------------


def cmd_typecheck(args, cfg: RunConfig) -> int:
    try:
        program = _load_program(args.file, cfg.r_max)
        judgment = typecheck(program)
    except (ParseError, TypeCheckError) as err:
        _emit({"ok": False, "error": str(err)}, args.json, f"error: {err}")
        return 2
    _emit({"ok": True, "judgment": str(judgment)}, args.json, f"{args.file}: {judgment}")
    return 0


def _parse_assignment(text: str, cfg: RunConfig):
    name, _, rest = text.partition("=")
    value, _, tag = rest.partition(":")
    if not name.startswith("r") or not name[1:].isdigit():
        raise ValueError(f"assignment target must be r<N>, got {name!r}")
    reg = gpr(int(name[1:]))
    bits = int(value, 0)
    if tag in ("", "plain"):
        return reg, plain(bits)
    if tag == "cipher":
        return reg, cipher(bits)
    raise ValueError(f"unknown tag {tag!r} (plain|cipher)")


def cmd_run(args, cfg: RunConfig) -> int:
    try:
        program = _load_program(args.file, cfg.r_max)
        params = cfg.crypto_params()
        key = Key.from_seed(params, args.key_seed if args.key_seed is not None else cfg.key_seed)
        mode = SaltMode(args.salt_mode)
        regs = {gpr(i): plain(0) for i in range(1, cfg.r_max + 1)}
        regs[KEY_REG] = plain(key.material)
        for item in args.set or []:
            reg, value = _parse_assignment(item, cfg)
            regs[reg] = value
        state = MachineState(regs, params, SaltSource(params.s, mode, cfg.salt_seed))
    except (ParseError, ValueError) as err:
        _emit({"ok": False, "error": str(err)}, args.json, f"error: {err}")
        return 2
    sem = Semantics(cfg.step_costs())
    try:
        result = run(program, state, sem)
    except Stuck as stuck:
        _emit({"ok": False, "stuck": str(stuck)}, args.json, f"stuck: {stuck}")
        return 1
    regs_out = {str(r): str(v) for r, v in sorted(
        state.regs.items(), key=lambda kv: (kv[0].index is None, kv[0].index or 0))}
    _emit(
        {"ok": True, "cycles": result.cycles, "steps": result.steps, "registers": regs_out},
        args.json,
        "\n".join([f"cycles: {result.cycles}  steps: {result.steps}"]
                  + [f"  {r} = {v}" for r, v in regs_out.items()]),
    )
    return 0


def cmd_ni_check(args, cfg: RunConfig) -> int:
    try:
        program = _load_program(args.file, cfg.r_max)
    except ParseError as err:
        _emit({"ok": False, "error": str(err)}, args.json, f"error: {err}")
        return 2
    if args.width:
        n, s = (int(x) for x in args.width.split(","))
        cfg = RunConfig(**{**cfg.__dict__, "n": n, "s": s})
    params = cfg.crypto_params()
    sem = Semantics(cfg.step_costs())
    try:
        verdict = nicheck.check_soundness(
            program, params, mode=args.mode, trials=args.trials,
            seed=args.seed, sem=sem,
        )
    except TypeCheckError as err:
        _emit({"ok": False, "error": str(err)}, args.json, f"type error: {err}")
        return 2
    payload = verdict.to_json()
    text = (f"soundness: {'pass' if verdict.passed else 'FAIL'} "
            f"({verdict.pairs_checked} pairs, {len(verdict.findings)} findings)")
    if verdict.counterexample is not None:
        text += f"\ncounterexample: {verdict.counterexample.describe()}"
        payload["counterexample_detail"] = verdict.counterexample.to_json()
    _emit(payload, args.json, text)
    return 0 if verdict.passed else 1


def cmd_hw_list(args, cfg: RunConfig) -> int:
    params = _enclave_params(cfg)
    rows = []
    for name in enclaves.VARIANT_NAMES:
        variant = enclaves.build(name, params)
        expected = ("secure" if variant.expected.secure else ", ".join(
            f"{f.source}->{f.sink} ({f.classification})" for f in variant.expected.flows))
        rows.append({
            "variant": name,
            "registers": len(variant.circuit.regs),
            "nodes": len(variant.circuit.nodes),
            "latency": variant.latency["valid_latency"],
            "expected": expected,
        })
    text = "\n".join(
        f"{r['variant']:17s} regs={r['registers']:<3d} nodes={r['nodes']:<4d} "
        f"latency={r['latency']:<3d} expected: {r['expected']}" for r in rows)
    _emit({"params": {"n": cfg.n, "s": cfg.s, "rounds": cfg.rounds}, "variants": rows},
          args.json, text)
    return 0


def cmd_hw_dump(args, cfg: RunConfig) -> int:
    try:
        variant = enclaves.build(args.variant, _enclave_params(cfg))
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    circuit = ift.prepared_circuit(variant, args.declassify == "on")
    print(circuit.dump())
    return 0


def cmd_hw_check(args, cfg: RunConfig) -> int:
    try:
        variant = enclaves.build(args.variant, _enclave_params(cfg))
    except ValueError as err:
        _emit({"ok": False, "error": str(err)}, args.json, f"error: {err}")
        return 2
    horizon = args.horizon or (cfg.horizon or None)
    reports = ift.check_variant(
        variant, checker=args.checker, use_declass=args.declassify == "on",
        mode=args.mode, trials=args.trials, seed=args.seed, horizon=horizon,
    )
    payload = {
        "variant": variant.name,
        "params": {"n": cfg.n, "s": cfg.s, "rounds": cfg.rounds},
        "reports": {name: rep.to_json() for name, rep in reports.items()},
    }
    flows_found = any(not rep.secure for rep in reports.values())
    lines = []
    for name, rep in reports.items():
        verdict = "secure" if rep.secure else ", ".join(
            f"{f.source}->{f.sink} ({f.classification})"
            for f in sorted(rep.flows, key=lambda f: (f.source, f.sink)))
        lines.append(f"{variant.name} [{name}]: {verdict}")
    _emit(payload, args.json, "\n".join(lines))
    if args.expect == "secure":
        return 1 if flows_found else 0
    if args.expect == "insecure":
        return 1 if not flows_found else 0
    return 1 if flows_found else 0


def cmd_attack(args, cfg: RunConfig) -> int:
    summary = attack_mod.run_trials(args.width, args.trials, SaltMode(args.mode),
                                    seed=args.seed)
    payload = summary.to_json()
    _emit(payload, args.json,
          f"attack mode={summary.mode.value}: {summary.successes}/{summary.trials} "
          f"recovered (max {summary.max_iterations} probes)")
    return 0


def cmd_check_all(args, cfg: RunConfig) -> int:
    width_configs = []
    for spec_str in args.widths or []:
        n, s = (int(x) for x in spec_str.split(","))
        width_configs.append((n, s))
    if not width_configs:
        width_configs = list(WIDTH_CONFIGS)

    failures: list[str] = []
    matrix_rows = []
    for n, s in width_configs:
        params = enclaves.EnclaveParams(n=n, s=s, rounds=cfg.rounds,
                                        key_seed=cfg.key_seed)
        for name in enclaves.VARIANT_NAMES:
            variant = enclaves.build(name, params)
            reports = ift.check_variant(
                variant, checker="both", use_declass=True,
                mode="random", trials=args.trials, seed=args.seed,
            )
            two_trace = reports["two-trace"]
            taint = reports["taint"]
            expected = {f.as_tuple() for f in variant.expected.flows}
            got = two_trace.flow_triples()
            ok = got == expected and ift.agreement_holds(taint, two_trace)
            if got != expected:
                failures.append(f"{name} at n={n},s={s}: expected "
                                f"{sorted(expected)}, got {sorted(got)}")
            if not ift.agreement_holds(taint, two_trace):
                failures.append(f"{name} at n={n},s={s}: checker disagreement")
            leakage = "-" if two_trace.secure else "; ".join(
                f"{src}->{sink} ({cls})" for src, sink, cls in sorted(got))
            matrix_rows.append({
                "n": n, "s": s, "variant": name,
                "result": "secure" if two_trace.secure else "insecure",
                "leakage": leakage,
                "matches_expected": ok,
            })

    ni = nicheck.random_soundness_suite(
        cfg.crypto_params(), programs=args.ni_programs, pairs_per_program=10,
        seed=args.seed, sem=Semantics(cfg.step_costs()),
    )
    if not ni.passed:
        failures.append(f"soundness suite: {ni.counterexample.describe()}")

    reused = attack_mod.run_trials(8, args.attack_trials, SaltMode.REUSED, seed=args.seed)
    fresh = attack_mod.run_trials(8, max(args.attack_trials * 5, 100),
                                  SaltMode.FRESH, seed=args.seed + 1)
    if reused.success_rate < 1.0 or reused.max_iterations > 8:
        failures.append(f"attack (reused): {reused.to_json()}")
    if fresh.success_rate > 0.02:
        failures.append(f"attack (fresh): {fresh.to_json()}")

    payload = {
        "matrix": matrix_rows,
        "soundness": ni.to_json(),
        "attack": {"reused": reused.to_json(), "fresh": fresh.to_json()},
        "failures": failures,
        "ok": not failures,
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        header = f"{'variant':17s} {'n,s':5s} {'result':9s} leakage"
        print(header)
        print("-" * len(header))
        for row in matrix_rows:
            print(f"{row['variant']:17s} {row['n']},{row['s']:<3d} "
                  f"{row['result']:9s} {row['leakage']}")
        print(f"soundness suite: {'pass' if ni.passed else 'FAIL'} "
              f"({ni.pairs} pairs over {ni.programs} programs)")
        print(f"attack: reused {reused.successes}/{reused.trials} "
              f"(max {reused.max_iterations} probes), "
              f"fresh success rate {fresh.success_rate:.3f}")
        for failure in failures:
            print(f"FAIL: {failure}")
        print("result: " + ("all checks match expectations" if not failures
                            else f"{len(failures)} failure(s)"))
    return 0 if not failures else 1


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="severif",
        description="Verification workbench for the sequestered-encryption enclave.",
    )
    parser.add_argument("--config", help=f"key=value config file (or ${ENV_VAR})")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("typecheck", help="type-check a .se program")
    p.add_argument("file")
    common(p)
    p.set_defaults(func=cmd_typecheck)

    p = sub.add_parser("run", help="execute a .se program")
    p.add_argument("file")
    p.add_argument("--set", action="append", metavar="rN=VAL[:plain|cipher]",
                   help="initial register assignment (repeatable)")
    p.add_argument("--key-seed", type=int, default=None)
    p.add_argument("--salt-mode", choices=["fresh", "reused"], default="fresh")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ni-check", help="noninterference-check a program")
    p.add_argument("file")
    p.add_argument("--mode", choices=["random", "exhaustive"], default="random")
    p.add_argument("--width", metavar="N,S", help="override data,salt widths")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_ni_check)

    p = sub.add_parser("hw-list", help="list enclave variants and expectations")
    common(p)
    p.set_defaults(func=cmd_hw_list)

    p = sub.add_parser("hw-dump", help="dump a variant's circuit")
    p.add_argument("variant", choices=list(enclaves.VARIANT_NAMES))
    p.add_argument("--declassify", choices=["on", "off"], default="off")
    p.set_defaults(func=cmd_hw_dump)

    p = sub.add_parser("hw-check", help="information-flow check a variant")
    p.add_argument("variant", choices=list(enclaves.VARIANT_NAMES))
    p.add_argument("--checker", choices=["taint", "two-trace", "both"], default="both")
    p.add_argument("--declassify", choices=["on", "off"], default="on")
    p.add_argument("--mode", choices=["random", "exhaustive"], default="random")
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=0)
    p.add_argument("--expect", choices=["secure", "insecure"], default=None,
                   help="exit 1 when the verdict contradicts the expectation")
    common(p)
    p.set_defaults(func=cmd_hw_check)

    p = sub.add_parser("attack", help="run the salt-reuse extraction demo")
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--mode", choices=["fresh", "reused"], default="reused")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("check-all", help="full verdict matrix plus ISA suites")
    p.add_argument("--widths", nargs="*", metavar="N,S",
                   help="width configs (default: 2,2 3,3 4,2)")
    p.add_argument("--trials", type=int, default=24, help="two-trace pairs per source")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ni-programs", type=int, default=250)
    p.add_argument("--attack-trials", type=int, default=50)
    common(p)
    p.set_defaults(func=cmd_check_all)

    p = sub.add_parser("config", help="print the effective configuration")
    common(p)
    p.set_defaults(func=cmd_config)
    return parser


def cmd_config(args, cfg: RunConfig) -> int:
    if args.json:
        print(json.dumps(cfg.__dict__, sort_keys=True))
    else:
        print(dump_config(cfg), end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        return args.func(args, cfg)
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
