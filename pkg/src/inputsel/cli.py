"""Command-line interface: generate, select, evaluate, simulate, experiment, verify."""
from __future__ import annotations

import argparse
import json
import math
import shlex
import sys

import numpy as np

from . import __version__
from .controllability import structural_report
from .experiments import PRESETS, ExperimentConfig, preset, run_experiment
from .graph import Graph, GraphError, erdos_renyi, geometric_graph, load_graph, named_graph, save_graph
from .matroids import InfeasibleMatroidError, controllability_matroid
from .numerics import NotPositiveDefiniteError
from .objectives import METRICS, make_objective
from .optimize import (
    InfeasibleTargetError,
    InstanceTooLargeError,
    SelectionResult,
    baseline_select,
    brute_force_opt,
    greedy_cover,
    greedy_max,
    matroid_greedy,
)
from .perf import SingularLaplacianError
from .simulate import absorbing_walk_probabilities, simulate_noisy_consensus, simulate_weighted_consensus
from .verify import SUITES, run_suite

EXIT_VERIFY = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_SINGULAR = 4
EXIT_TOO_LARGE = 5

SELECTORS = ("greedy", "cover", "matroid-greedy", "max-degree", "avg-degree", "random", "brute")


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    return [int(x) for x in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _params(items: list[str] | None) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise CliError(f"metric parameter {it!r} must look like key=value", EXIT_INVALID)
        k, v = it.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _emit(args, payload: dict | str, csv_text: str | None = None):
    if isinstance(payload, dict):
        payload = dict(payload, invocation=args.invocation)
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = payload
    if args.format == "csv" and csv_text is not None:
        text = csv_text
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(g: Graph) -> dict:
    return {"n": g.n, "edges": g.num_edges, "directed": g.directed, "connected": g.is_connected(),
            "strongly_connected": g.is_strongly_connected()}


# -- subcommands -----------------------------------------------------------------------------------

def cmd_generate(args) -> int:
    kind = args.kind
    if args.n is None or args.n < 1:
        raise CliError("--n must be a positive integer", EXIT_INVALID)
    if kind == "geometric":
        if args.width is None or args.radius is None or args.width <= 0 or args.radius <= 0:
            raise CliError("geometric graphs need positive --width and --radius", EXIT_INVALID)
        g = geometric_graph(args.n, args.width, args.radius, args.seed)
    elif kind == "er":
        if args.q is None or not 0 <= args.q <= 1:
            raise CliError("er graphs need --q in [0, 1]", EXIT_INVALID)
        g = erdos_renyi(args.n, args.q, args.seed, args.directed)
    else:
        g = named_graph(kind, args.n, directed=args.directed)
    if args.output:
        save_graph(g, args.output)
    else:
        sys.stdout.write(json.dumps(g.to_dict(), sort_keys=True) + "\n")
    sys.stderr.write(json.dumps(_summary(g), sort_keys=True) + "\n")
    return 0


def _matroid(g: Graph, f, k: int | None):
    if k is None:
        raise CliError("matroid-greedy needs --k", EXIT_INVALID)
    return controllability_matroid(g, k)


def cmd_select(args) -> int:
    g = load_graph(args.graph)
    params = dict(_params(args.param), seed=args.seed)
    f = make_objective(args.metric, g, params)
    sel = args.selector
    if sel in ("greedy", "max-degree", "avg-degree", "random") and args.k is None:
        raise CliError(f"selector {sel} needs --k", EXIT_INVALID)
    if args.k is not None and not 0 <= args.k <= g.n:
        raise CliError(f"--k must lie in [0, {g.n}]", EXIT_INVALID)
    if sel == "greedy":
        res = greedy_max(f, args.k, lazy=args.lazy, seed=args.seed)
    elif sel == "cover":
        if args.alpha is None:
            raise CliError("cover needs --alpha", EXIT_INVALID)
        res = greedy_cover(f, args.alpha, args.seed)
    elif sel == "matroid-greedy":
        res = matroid_greedy(f, _matroid(g, f, args.k), args.seed)
    elif sel == "brute":
        if args.alpha is not None:
            res = brute_force_opt(f, alpha=args.alpha)
        elif args.k is not None:
            res = brute_force_opt(f, k=args.k)
        else:
            raise CliError("brute needs --k or --alpha", EXIT_INVALID)
        res.seed = args.seed
    else:
        chosen = baseline_select(g, args.k, sel.replace("-", "_"), args.seed)
        trace = []
        for i in range(len(chosen)):
            trace.append((chosen[i], f(chosen[:i + 1])))
        res = SelectionResult(chosen, trace, {"type": "none", "value": None}, f(()), args.seed, 0.0,
                              {"evaluations": f.calls})
    if args.metric == "noise" and res.selected and not math.isfinite(res.value):
        raise CliError("grounded Laplacian is singular: some component has no input", EXIT_SINGULAR)
    out = res.to_dict()
    out["metric"] = args.metric
    out["selector"] = sel
    rep = structural_report(g, res.selected)
    out["controllable"] = rep.controllable
    out["structural"] = rep.to_dict()
    _emit(args, out)
    return 0


def cmd_evaluate(args) -> int:
    g = load_graph(args.graph)
    s = _int_list(args.set)
    if any(not 0 <= v < g.n for v in s):
        raise CliError("input set has an unknown node id", EXIT_INVALID)
    out = {"set": sorted(s)}
    if args.metric == "structural":
        out["structural"] = structural_report(g, s).to_dict()
    else:
        f = make_objective(args.metric, g, dict(_params(args.param), seed=args.seed))
        value = f(s)
        if args.metric == "noise" and not math.isfinite(value):
            raise CliError("grounded Laplacian is singular: some component has no input", EXIT_SINGULAR)
        out.update(metric=args.metric, value=value if math.isfinite(value) else "inf")
    _emit(args, out)
    return 0


def cmd_simulate(args) -> int:
    g = load_graph(args.graph)
    s = _int_list(args.inputs)
    if not s:
        raise CliError("--inputs must name at least one node", EXIT_INVALID)
    values = _float_list(args.input_values) if args.input_values else [0.0] * len(s)
    if len(values) not in (1, len(s)):
        raise CliError("--input-values needs one value or one per input", EXIT_INVALID)
    x0 = _float_list(args.x0) if args.x0 else np.random.default_rng(args.seed).uniform(-1, 1, g.n)
    if args.model == "walk":
        gm, h = absorbing_walk_probabilities(g, s, args.dt, args.tau)
        _emit(args, {"g": gm.tolist(), "h": h.tolist(), "inputs": sorted(s), "delta": args.dt, "tau": args.tau})
        return 0
    if args.model == "noisy":
        traj = simulate_noisy_consensus(g, s, values, x0, args.dt, args.t_end, args.sigma, args.seed,
                                        args.record_every)
    else:
        traj = simulate_weighted_consensus(g, s, values, x0, args.dt, args.t_end)
    csv_text = f"# invocation: {args.invocation}\n" + traj.to_csv()
    payload = {"times": traj.times.tolist(), "states": traj.states.tolist(), "inputs": list(traj.input_set),
               "input_values": traj.input_values.tolist(), "meta": traj.meta}
    if args.format == "json":
        _emit(args, payload)
    else:
        _emit(args, csv_text, csv_text)
    return 0


def cmd_experiment(args) -> int:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif args.preset:
        over = {}
        if args.trials is not None:
            over["trials"] = args.trials
        over["seed"] = args.seed
        cfg = preset(args.preset, reduced=args.reduced, **over)
        if args.n is not None:
            cfg.graph["n"] = args.n
    else:
        raise CliError("give a config file or --preset", EXIT_INVALID)
    res = run_experiment(cfg, jobs=args.jobs, invocation=args.invocation)
    out = args.output or cfg.output
    if out:
        rows_path, agg_path = res.write(out)
        sys.stderr.write(f"wrote {rows_path} and {agg_path}\n")
    else:
        sys.stdout.write(res.aggregate_csv())
    return 0


def cmd_verify(args) -> int:
    results = run_suite(args.suite, seed=args.seed, quick=args.quick)
    ok = all(r.passed for r in results)
    report = {"suite": args.suite, "passed": ok, "properties": [r.to_dict() for r in results]}
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.checked - r.failed}/{r.checked} "
                     + " ".join(f"{k}={v}" for k, v in r.detail.items()))
    sys.stderr.write("\n".join(lines) + "\n")
    if args.dump or args.format == "json":
        if args.dump:
            with open(args.dump, "w") as fh:
                json.dump(dict(report, invocation=args.invocation), fh, indent=2, sort_keys=True)
        else:
            _emit(args, report)
    return 0 if ok else EXIT_VERIFY


# -- parser ---------------------------------------------------------------------------------------

def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=d if suppress else 0, help="master RNG seed")
    p.add_argument("-o", "--output", default=d if suppress else None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=d if suppress else "json")
    p.add_argument("--jobs", type=int, default=d if suppress else 1, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inputsel", description="Input-node selection for networked systems.")
    parser.add_argument("--version", action="version", version=__version__)
    _globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a graph file")
    p.add_argument("kind", choices=("ring", "path", "star", "geometric", "er"))
    p.add_argument("--n", type=int)
    p.add_argument("--width", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--directed", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("select", parents=[common], help="choose input nodes")
    p.add_argument("graph")
    p.add_argument("--metric", required=True, choices=METRICS)
    p.add_argument("--selector", required=True, choices=SELECTORS)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lazy", action="store_true", help="lazy greedy (same result, fewer evaluations)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="metric parameter")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a metric on an input set")
    p.add_argument("graph")
    p.add_argument("--metric", required=True, choices=METRICS + ("structural",))
    p.add_argument("--set", required=True, help="comma-separated node ids")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", parents=[common], help="simulate consensus dynamics")
    p.add_argument("graph")
    p.add_argument("--model", choices=("noisy", "weighted", "walk"), default="weighted")
    p.add_argument("--inputs", required=True)
    p.add_argument("--input-values")
    p.add_argument("--x0")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--record-every", type=int, default=1)
    p.set_defaults(func=cmd_simulate, format="csv")

    p = sub.add_parser("experiment", parents=[common], help="run a batch study")
    p.add_argument("config", nargs="?")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", parents=[common], help="run property suites")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p.add_argument("--quick", action="store_true")
    p.add_argument("--dump", help="write the JSON report with counterexamples here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.invocation = "inputsel " + shlex.join(argv)
    try:
        return args.func(args)
    except CliError as e:
        sys.stderr.write(f"inputsel: error: {e}\n")
        if e.code == EXIT_INVALID:
            parser.print_usage(sys.stderr)
        return e.code
    except (InfeasibleTargetError, InfeasibleMatroidError) as e:
        sys.stderr.write(f"inputsel: infeasible: {e}\n")
        return EXIT_INFEASIBLE
    except (SingularLaplacianError, NotPositiveDefiniteError) as e:
        sys.stderr.write(f"inputsel: singular: {e}\n")
        return EXIT_SINGULAR
    except InstanceTooLargeError as e:
        sys.stderr.write(f"inputsel: too large: {e}\n")
        return EXIT_TOO_LARGE
    except (GraphError, ValueError, OSError, json.JSONDecodeError) as e:
        sys.stderr.write(f"inputsel: error: {e}\n")
        parser.print_usage(sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
