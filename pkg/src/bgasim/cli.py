"""Command-line front end: generate | spectral | simulate | fit."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph as gr
from .analysis import bound_report, estimate_bias, fit_scaling
from .engine import SimConfig
from .errors import InvalidParameter, UnsupportedGraph
from .spectral import rate_bound, spectral_gap

log = logging.getLogger("bgasim")

EXIT_OK, EXIT_INVALID, EXIT_UNRELIABLE, EXIT_DISCONNECTED = 0, 2, 3, 4

CSV_COLUMNS = ["N", "q", "family", "mean_beta", "std_error", "prop3_shape", "lambda1", "deg_max"]
TRIAL_COLUMNS = ["beta", "stop_time", "hit_cap", "max_step_increment"]

# spawn-key prefix for random geometric instances; trial streams use 1-element keys
_RGG_KEY = 0x524747
RGG_MAX_ATTEMPTS = 100

_POW2 = [16, 32, 64, 128, 256, 512, 1024]

PRESETS = {
    "fig1": {
        "q": [0.5],
        "instances": (
            [("ring", {"n": n}) for n in _POW2[:5]]
            + [("torus", {"k": 2, "side": s}) for s in (4, 8, 16, 32)]
            + [("hypercube", {"dim": d}) for d in range(4, 11)]
            + [("debruijn", {"symbols": 2, "dimension": d}) for d in range(4, 11)]
            + [("rgg", {"n": n}) for n in _POW2]
            + [("complete", {"n": n}) for n in _POW2]
        ),
    },
    "fig2": {
        "q": [0.2, 0.5, 0.8, 1.0],
        "instances": [("debruijn", {"symbols": 2, "dimension": d}) for d in range(4, 11)],
    },
    "fig3": {
        "q": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        "instances": [
            ("complete", {"n": 64}),
            ("ring", {"n": 64}),
            ("torus", {"k": 2, "side": 8}),
            ("hypercube", {"dim": 6}),
            ("debruijn", {"symbols": 2, "dimension": 6}),
            ("rgg", {"n": 64}),
        ],
    },
}


class DisconnectedGraph(Exception):
    pass


@dataclass
class Instance:
    graph: gr.Graph
    label: str
    resamples: int = 0


def family_label(g: gr.Graph) -> str:
    if g.family == "torus" and "k" in g.params:
        return f"torus{g.params['k']}d"
    if g.family == "debruijn" and "symbols" in g.params:
        return f"debruijn{g.params['symbols']}"
    return g.family


def rgg_sample(n: int, seed: int, attempt: int = 0) -> gr.Graph:
    ss = np.random.SeedSequence(seed, spawn_key=(_RGG_KEY, n, attempt))
    return gr.random_geometric(n, np.random.Generator(np.random.PCG64(ss)))


def rgg_instance(n: int, seed: int) -> Instance:
    """First connected sample from the per-``(seed, n)`` attempt streams."""
    for attempt in range(RGG_MAX_ATTEMPTS):
        g = rgg_sample(n, seed, attempt)
        if g.is_connected():
            return Instance(g, "rgg", attempt)
    raise DisconnectedGraph(f"no connected random geometric graph with n={n} "
                            f"in {RGG_MAX_ATTEMPTS} attempts")


def build_instance(family: str, params: dict, seed: int) -> Instance:
    if family == "rgg":
        return rgg_instance(params["n"], seed)
    if family == "complete":
        g = gr.complete(params["n"])
    elif family == "ring":
        g = gr.ring(params["n"])
    elif family == "torus":
        g = gr.torus_lattice(params["k"], params["side"])
    elif family == "hypercube":
        g = gr.hypercube(params["dim"])
    elif family == "debruijn":
        g = gr.de_bruijn(params["symbols"], params["dimension"])
    else:
        raise InvalidParameter(f"unknown family {family!r}")
    return Instance(g, family_label(g))


def _single_params(args) -> dict:
    """Generator parameters from flags for a single graph (first value of list flags)."""
    return _sweep_params(args)[0]


def _sweep_params(args) -> list[dict]:
    fam = args.family
    if fam in ("complete", "ring", "rgg"):
        return [{"n": n} for n in _require(args.n, "--n")]
    if fam == "hypercube":
        return [{"dim": d} for d in _require(args.dim, "--dim")]
    if fam == "torus":
        return [{"k": args.k, "side": s} for s in _require(args.side, "--side")]
    if fam == "debruijn":
        return [{"symbols": args.symbols, "dimension": d} for d in _require(args.dim, "--dim")]
    raise InvalidParameter(f"unknown family {fam!r}")


def _require(values, flag):
    if not values:
        raise InvalidParameter(f"{flag} is required for this family")
    return values


def _load_or_build(args) -> Instance:
    if args.graph:
        g = gr.Graph.load(args.graph)
        return Instance(g, family_label(g))
    if not args.family:
        raise InvalidParameter("give --family or --graph")
    return build_instance(args.family, _single_params(args), args.seed)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def cmd_generate(args) -> int:
    if not args.family:
        raise InvalidParameter("--family is required")
    if args.family == "rgg":
        g = rgg_sample(_single_params(args)["n"], args.seed)
    else:
        g = build_instance(args.family, _single_params(args), args.seed).graph
    if args.out:
        g.save(args.out)
    info = {"family": g.family, "params": g.params, "n": g.n, "edges": g.num_edges,
            **g.degrees.as_dict(), "balanced": g.is_balanced(),
            "symmetric": g.is_symmetric(), "connected": g.is_connected()}
    print(json.dumps(info, sort_keys=True))
    if not info["connected"]:
        print("graph is disconnected", file=sys.stderr)
        return EXIT_DISCONNECTED
    return EXIT_OK


def cmd_spectral(args) -> int:
    inst = _load_or_build(args)
    g = inst.graph
    try:
        s = spectral_gap(g)
    except UnsupportedGraph as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = {"family": inst.label, "n": g.n, "deg_max": g.degrees.deg_max, **s.as_dict()}
    if s.multiplicity_zero == 1:
        out["rate_bound"] = {repr(q): rate_bound(g, q, s) for q in (args.q or []) if 0 < q < 1}
    text = json.dumps(out, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if s.multiplicity_zero == 1 else EXIT_DISCONNECTED


def run_sweep(instances, configs, dump_dir=None):
    """Estimate bias and bounds for every (instance, config), in instance-then-q order."""
    rows = []
    for inst in instances:
        g = inst.graph
        if not g.is_connected():
            raise DisconnectedGraph(f"{inst.label} with N={g.n} is disconnected")
        for cfg in configs:
            q = cfg.q
            est = estimate_bias(g, cfg)
            x0_var = None if cfg.resample_x0 else est.config_echo["x0_sample_variance"]
            rep = bound_report(g, q, cfg.L, x0_var)
            log.info("%s N=%d q=%g mean_beta=%.4g se=%.2g", inst.label, g.n, q,
                     est.mean_beta, est.std_error)
            rows.append({"instance": inst, "q": q, "bias": est, "bounds": rep})
            if dump_dir is not None:
                dump_trials(Path(dump_dir) / f"{inst.label}_N{g.n}_q{q}.csv", est.results)
    return rows


def dump_trials(path: Path, results) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for r in results:
            w.writerow([_fmt(r.beta), r.stop_time, int(r.hit_cap), _fmt(r.max_step_increment)])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        g, rep, est = row["instance"].graph, row["bounds"], row["bias"]
        lam = rep.spectral.lambda1 if rep.spectral else None
        w.writerow([g.n, _fmt(float(row["q"])), row["instance"].label, _fmt(est.mean_beta),
                    _fmt(est.std_error), _fmt(rep.prop3_shape), _fmt(lam), rep.deg_max])
    return buf.getvalue()


def rows_to_json(rows, resamples: int) -> str:
    doc = {
        "rows": [{"family": r["instance"].label, "N": r["instance"].graph.n, "q": r["q"],
                  "params": r["instance"].graph.params, "bias": r["bias"].as_dict(),
                  "bounds": r["bounds"].as_dict()} for r in rows],
        "rgg_resamples": resamples,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def validate_csv_row(row: dict) -> None:
    """Schema check for one sweep CSV row; optional columns may be empty."""
    import math

    if list(row) != CSV_COLUMNS:
        raise InvalidParameter(f"bad columns {list(row)}")
    for key in ("N", "q", "mean_beta", "std_error", "deg_max"):
        if not math.isfinite(float(row[key])):
            raise InvalidParameter(f"{key} not finite")
    for key in ("prop3_shape", "lambda1"):
        if row[key] != "" and not math.isfinite(float(row[key])):
            raise InvalidParameter(f"{key} not finite")
    if float(row["mean_beta"]) < 0 or float(row["std_error"]) < 0:
        raise InvalidParameter("negative bias or standard error")


def cmd_simulate(args) -> int:
    if args.preset:
        preset = PRESETS[args.preset]
        specs = preset["instances"]
        qs = args.q or preset["q"]
    elif args.graph:
        specs = None
        qs = _require(args.q, "--q")
    else:
        if not args.family:
            raise InvalidParameter("give --preset, --family or --graph")
        specs = [(args.family, p) for p in _sweep_params(args)]
        qs = _require(args.q, "--q")
    configs = [SimConfig(q=q, epsilon=args.epsilon, max_steps=args.max_steps,
                         master_seed=args.seed, trials=args.trials,
                         resample_x0=args.resample_x0) for q in qs]

    if specs is None:
        instances = [_load_or_build(args)]
    else:
        instances = [build_instance(f, p, args.seed) for f, p in specs]
    resamples = sum(i.resamples for i in instances)
    if resamples:
        log.info("discarded %d disconnected random geometric samples", resamples)

    rows = run_sweep(instances, configs, args.dump_trials)
    text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows, resamples)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if resamples:
        print(f"rgg resamples: {resamples}", file=sys.stderr)
    unreliable = [r for r in rows if r["bias"].unreliable]
    for r in unreliable:
        print(f"unreliable: {r['instance'].label} N={r['instance'].graph.n} q={r['q']} "
              f"hit_cap_fraction={r['bias'].hit_cap_fraction}", file=sys.stderr)
    return EXIT_UNRELIABLE if unreliable else EXIT_OK


def cmd_fit(args) -> int:
    groups = defaultdict(list)
    with open(args.input, newline="") as fh:
        for row in csv.DictReader(fh):
            validate_csv_row(row)
            groups[(row["family"], float(row["q"]))].append(
                (int(row["N"]), float(row["mean_beta"])))
    lines = ["family,q,points,exponent"]
    for (fam, q), series in groups.items():
        if len(series) < 4:
            log.warning("skipping %s q=%g: only %d points", fam, q, len(series))
            continue
        lines.append(f"{fam},{q!r},{len(series)},{fit_scaling(series)!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {s!r}")


def _graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=sorted(gr.FAMILIES))
    p.add_argument("--graph", help="graph JSON file instead of a generator")
    p.add_argument("--n", type=int, action="append", help="node count (repeatable in sweeps)")
    p.add_argument("--dim", type=int, action="append",
                   help="hypercube dimension or de Bruijn word length (repeatable)")
    p.add_argument("--side", type=int, action="append", help="torus side length (repeatable)")
    p.add_argument("--k", type=int, default=2, help="torus dimension")
    p.add_argument("--symbols", type=int, default=2, help="de Bruijn alphabet size")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgasim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a graph JSON file and print its statistics")
    _graph_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("spectral", help="spectral gap and rate bounds of a symmetric graph")
    _graph_flags(p)
    p.add_argument("--q", type=float, action="append")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("simulate", help="Monte Carlo bias sweep over graph sizes and q")
    _graph_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--q", type=float, action="append")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--resample-x0", type=_bool, default=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--dump-trials", metavar="DIR")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="log-log scaling exponents from a sweep CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidParameter, UnsupportedGraph, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DisconnectedGraph as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED


if __name__ == "__main__":
    sys.exit(main())
