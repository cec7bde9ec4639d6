"""Command-line frontend.

Subcommands: check, reduce, witness, verify, geometry, minsky-compile.
Every run writes a manifest (OUT.manifest next to outputs, or printed for
output-free commands) with input digests, the constants ledger and the
seed, so identical inputs reproduce identical results.

Exit codes: 0 ok, 1 internal error, 2 input error, 3 budget exhausted,
4 construction / property diagnostic.
"""

import argparse
import hashlib
import json
import sys
import time

from . import checker as checker_mod
from . import geometry, machines, markov, reduction, witness
from ._rational import BACKEND, rat_to_text
from .formula import FormulaError, parse_formula, print_formula, subformulae

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_DIAGNOSTIC = 4

DEFAULT_SEED = 20260809


class InputError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _read(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")


def _digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _constants_ledger(c):
    return {
        "lambda": rat_to_text(c.lam),
        "z": [rat_to_text(c.z.v1), rat_to_text(c.z.v2)],
        "delta": rat_to_text(c.delta),
        "rho": rat_to_text(c.rho),
        "interval": [rat_to_text(c.i_lo), rat_to_text(c.i_hi)],
        "rational_backend": BACKEND,
    }


def _write_manifest(out_path, payload, timings):
    payload = dict(payload)
    payload["timings_s"] = {k: round(v, 3) for k, v in timings.items()}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path is None:
        print(text)
    else:
        with open(out_path + ".manifest", "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _parse_machine_file(path):
    try:
        return machines.parse_machine(_read(path))
    except machines.MachineError as exc:
        raise InputError(f"{path}: {exc}")


def cmd_check(args):
    chain_text = _read(args.chain)
    formula_text = _read(args.formula)
    try:
        chain = markov.parse_chain(chain_text)
    except markov.ChainParseError as exc:
        raise InputError(f"{args.chain}: {exc}")
    violations = markov.validate(chain)
    if violations:
        for v in violations:
            print(f"invalid chain: {v}", file=sys.stderr)
        return EXIT_INPUT
    try:
        phi = parse_formula(formula_text)
    except FormulaError as exc:
        raise InputError(f"{args.formula}: {exc}")

    t0 = time.perf_counter()
    mc = checker_mod.ModelChecker(chain)
    satmap = mc.sat(phi)
    elapsed = time.perf_counter() - t0

    if args.state is not None:
        if args.state not in set(chain.states):
            raise InputError(f"unknown state {args.state}")
        states = [args.state]
    else:
        states = sorted(chain.states)

    good = satmap[phi.uid]
    for s in states:
        print(f"state {s}: {'true' if s in good else 'false'}")
    if args.probs:
        seen = set()
        for sub in subformulae(phi):
            if sub.kind != "prob" or sub.uid in seen:
                continue
            seen.add(sub.uid)
            vec = mc.path_prob(sub.path)
            for s in states:
                print(f"state {s}: P = {rat_to_text(vec[s])} "
                      f"for {print_formula(sub)}")
    _write_manifest(None, {
        "command": "check",
        "inputs": {"chain": _digest(chain_text), "formula": _digest(formula_text)},
        "verdict": {s: (s in good) for s in states},
        "seed": None,
    }, {"check": elapsed})
    return EXIT_OK


def _reduction_config(args):
    fragment = {"u": reduction.WITH_UNTIL, "fg": reduction.FG_ONLY}[args.fragment]
    variant = {"recurrent": reduction.RECURRENT,
               "finite": reduction.FINITE_SAT}[args.variant]
    tau = None
    if variant == reduction.RECURRENT:
        if not args.tau:
            raise InputError("--tau is required for the recurrent variant")
        try:
            tau = frozenset(int(x) for x in args.tau.split(","))
        except ValueError:
            raise InputError(f"bad --tau list {args.tau!r}")
    return reduction.ReductionConfig(
        constants=geometry.DEFAULT_CONSTANTS, fragment=fragment,
        variant=variant, tau=tau)


def cmd_reduce(args):
    machine = _parse_machine_file(args.machine)
    if machine.d != 2:
        raise InputError(f"reduction needs a two-counter machine, got d = {machine.d}")
    cfg = _reduction_config(args)
    t0 = time.perf_counter()
    try:
        phi = reduction.compile(machine, cfg)
    except reduction.ReductionError as exc:
        raise InputError(str(exc))
    text = print_formula(phi)
    elapsed = time.perf_counter() - t0
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    st = reduction.stats(phi)
    _write_manifest(args.output, {
        "command": "reduce",
        "inputs": {"machine": _digest(_read(args.machine))},
        "constants": _constants_ledger(cfg.constants),
        "fragment": cfg.fragment,
        "variant": cfg.variant,
        "tau": sorted(cfg.tau) if cfg.tau else None,
        "atom_universe_size": len(reduction.universe(machine.m)),
        "stats": st,
        "seed": None,
    }, {"reduce": elapsed})
    print(f"wrote {args.output}: {st['distinct_nodes']} distinct nodes, "
          f"tree size {st['tree_size']}")
    return EXIT_OK


def _build_witness(args, machine):
    t0 = time.perf_counter()
    lasso = machines.run_deterministic(machine, max_steps=args.max_steps)
    if isinstance(lasso, machines.Unbounded):
        print(f"no lasso within {args.max_steps} steps; "
              "machine may be unbounded", file=sys.stderr)
        raise InputError("budget exhausted", code=EXIT_BUDGET)
    try:
        report = witness.build_witness(
            machine, lasso, constants=geometry.DEFAULT_CONSTANTS,
            state_cap=args.state_cap, r_mode=args.r_mode)
    except witness.StateCapExceeded as exc:
        raise InputError(str(exc), code=EXIT_DIAGNOSTIC)
    except witness.WitnessError as exc:
        raise InputError(str(exc), code=EXIT_DIAGNOSTIC)
    return lasso, report, time.perf_counter() - t0


def cmd_witness(args):
    machine = _parse_machine_file(args.machine)
    lasso, report, elapsed = _build_witness(args, machine)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(markov.print_chain(report.chain))
    _write_manifest(args.output, {
        "command": "witness",
        "inputs": {"machine": _digest(_read(args.machine))},
        "constants": _constants_ledger(report.constants),
        "lasso": {"alpha": lasso.alpha, "beta": lasso.beta},
        "states": len(report.chain.states),
        "init": report.init,
        "state_map": {str(n): st.pretty() for n, st in enumerate(report.states)},
        "r_sites": report.r_sites,
        "diagnostics": report.diagnostics,
        "seed": None,
    }, {"witness": elapsed})
    print(f"wrote {args.output}: {len(report.chain.states)} states, "
          f"init {report.init}")
    for line in report.diagnostics:
        print(f"note: {line}")
    return EXIT_OK


def cmd_verify(args):
    machine = _parse_machine_file(args.machine)
    if machine.d != 2:
        raise InputError(f"verify needs a two-counter machine, got d = {machine.d}")
    cfg = _reduction_config(args)
    lasso, report, t_witness = _build_witness(args, machine)

    t0 = time.perf_counter()
    part_tree = reduction.compile_parts(machine, cfg)
    phi = part_tree.formula
    t_compile = time.perf_counter() - t0
    st = reduction.stats(phi)

    t0 = time.perf_counter()
    mc = report.checker()
    satmap = mc.sat(phi)
    t_check = time.perf_counter() - t0
    verdict = report.init in satmap[phi.uid]

    print(f"machine {machine.name}: lasso alpha={lasso.alpha} beta={lasso.beta}")
    print(f"witness chain: {len(report.chain.states)} states")
    print(f"formula: {st['distinct_nodes']} distinct nodes, "
          f"tree size {st['tree_size']}")
    print(f"init state {report.init}: "
          f"{'SATISFIES' if verdict else 'DOES NOT SATISFY'} the compiled formula")

    implication_ok = True
    if cfg.fragment == reduction.FG_ONLY:
        for k in (1, 2):
            fg = reduction.build_struct(machine.m, k, reduction.FG_ONLY,
                                        cfg.constants)
            u = reduction.build_struct(machine.m, k, reduction.WITH_UNTIL,
                                       cfg.constants)
            sat_fg = mc.sat(fg)[fg.uid]
            sat_u = mc.sat(u)[u.uid]
            ok = sat_fg <= sat_u
            implication_ok = implication_ok and ok
            print(f"copy {k}: |sat(fg struct)| = {len(sat_fg)}, "
                  f"|sat(u struct)| = {len(sat_u)}, "
                  f"implication {'holds' if ok else 'FAILS'}")

    if not verdict:
        print("failing conjuncts at the init state:")
        for path, detail in reduction.explain_failure(mc, part_tree, report.init):
            print(f"  {path}")
            for line in detail:
                print(f"    {line}")

    _write_manifest(None, {
        "command": "verify",
        "inputs": {"machine": _digest(_read(args.machine))},
        "constants": _constants_ledger(cfg.constants),
        "fragment": cfg.fragment,
        "variant": cfg.variant,
        "verdict": verdict,
        "stats": st,
        "witness_states": len(report.chain.states),
        "diagnostics": report.diagnostics,
        "seed": None,
    }, {"witness": t_witness, "compile": t_compile, "check": t_check})
    if not verdict or not implication_ok:
        return EXIT_DIAGNOSTIC
    return EXIT_OK


def cmd_geometry(args):
    constants = geometry.DEFAULT_CONSTANTS
    t0 = time.perf_counter()
    checked, failures = geometry.run_lemma_suite(
        args.samples, args.seed, constants=constants, max_den=args.max_den)
    gaps = geometry.limit_gaps(args.depth, constants)
    decreasing = all(gaps[n] > gaps[n + 1] for n in range(len(gaps) - 1))
    if not decreasing:
        failures.append(("limit-monotone", None))
    elapsed = time.perf_counter() - t0

    if args.emit_points:
        geometry.emit_points(args.emit_points, args.depth, constants)
        print(f"wrote {args.emit_points}")
    print(f"checked {checked} samples with seed {args.seed}; "
          f"{len(failures)} counterexamples")
    print(f"orbit gap at depth {args.depth}: {rat_to_text(gaps[-1])}")
    for name, point in failures[:10]:
        print(f"counterexample: {name} at {point}", file=sys.stderr)
    _write_manifest(None, {
        "command": "geometry",
        "constants": _constants_ledger(constants),
        "samples": checked,
        "seed": args.seed,
        "depth": args.depth,
        "counterexamples": [name for name, _ in failures],
    }, {"geometry": elapsed})
    return EXIT_DIAGNOSTIC if failures else EXIT_OK


def cmd_minsky_compile(args):
    try:
        program = machines.parse_minsky(_read(args.program))
    except machines.MachineError as exc:
        raise InputError(f"{args.program}: {exc}")
    if program.d != 2:
        raise InputError("the reduction handles two-counter Minsky machines")
    t0 = time.perf_counter()
    try:
        compiled = machines.minsky_to_counter(program)
    except machines.MachineError as exc:
        raise InputError(str(exc))
    elapsed = time.perf_counter() - t0
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(machines.print_machine(compiled))
    m = program.m
    _write_manifest(args.output, {
        "command": "minsky-compile",
        "inputs": {"program": _digest(_read(args.program))},
        "instructions": compiled.m,
        "recurrence_labels": [1, m + 1],
        "note": f"recurrent computations of the input correspond to "
                f"{{1, {m + 1}}}-recurrent computations of the output",
        "seed": None,
    }, {"compile": elapsed})
    print(f"wrote {args.output}: {compiled.m} instructions "
          f"(recurrence labels {{1, {m + 1}}})")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pctlwb",
        description="exact-arithmetic PCTL workbench: model checking, "
                    "counter-machine reductions and witness synthesis")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="model-check a formula on a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--state", type=int, default=None)
    p.add_argument("--probs", action="store_true",
                   help="print exact probabilities of top-level P nodes")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="compile a machine into a formula")
    p.add_argument("--machine", required=True)
    p.add_argument("--fragment", choices=("u", "fg"), default="u")
    p.add_argument("--variant", choices=("recurrent", "finite"),
                   default="finite")
    p.add_argument("--tau", default=None,
                   help="comma-separated recurrence labels")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("witness", help="synthesize the lasso witness chain")
    p.add_argument("--machine", required=True)
    p.add_argument("--max-steps", type=int, default=100000)
    p.add_argument("--state-cap", type=int, default=200000)
    p.add_argument("--r-mode", choices=("solved", "printed"), default="solved")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("verify",
                       help="reduce + witness + model-check the init state")
    p.add_argument("--machine", required=True)
    p.add_argument("--fragment", choices=("u", "fg"), default="u")
    p.add_argument("--variant", choices=("recurrent", "finite"),
                   default="finite")
    p.add_argument("--tau", default=None)
    p.add_argument("--max-steps", type=int, default=100000)
    p.add_argument("--state-cap", type=int, default=200000)
    p.add_argument("--r-mode", choices=("solved", "printed"), default="solved")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("geometry", help="run the exact geometry validators")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-den", type=int, default=10000)
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--emit-points", default=None)
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("minsky-compile",
                       help="compile a Minsky program into the machine DSL")
    p.add_argument("--program", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_minsky_compile)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
