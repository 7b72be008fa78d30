"""Command-line frontend.

Exit codes: 0 success, 2 configuration or usage error, 3 assumption or
verifier failure, 4 word budget exceeded, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import errors as E
from .config import ConfigError, SystemConfig, load_config
from .dimension import (ConstructionMatrix, bowen_dimension, consistency_report,
                        moran_dimension, spectral_dimension)
from .fixtures import SUITE, load_fixture
from .pressure import BUDGET_ENV, pressure_curve
from .scaling import geometric_equivalence, holder_diagnostic, ratio_geometry, scaling_function
from .symbolic import DualWord, check_finite_primitivity
from .system import Cgdms, connector

__all__ = ["main", "build_parser", "EXIT_CODES"]

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4, 5

EXIT_CODES = [
    (E.BudgetExceeded, EXIT_BUDGET),
    (E.NumericalFailure, EXIT_NUMERIC),
    ((ConfigError, E.InvalidGraph, E.InvalidLength, E.InvalidParameter, E.InvalidInput,
      E.InvalidDepth, E.Inadmissible), EXIT_CONFIG),
    ((E.NotAContraction, E.SeparationViolated, E.DegenerateDerivative, E.MissingAssumption,
      E.GraphMismatch, E.NoRoot, E.NotIrreducible), EXIT_VERIFY),
]

DEFAULT_T_GRID = "0:1:0.25"
REPORT_T_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


class UsageError(ConfigError):
    pass


def _exit_code(exc: Exception) -> int:
    for kinds, code in EXIT_CODES:
        if isinstance(exc, kinds):
            return code
    return EXIT_NUMERIC


def _plain(obj):
    """JSON-ready copy with round-trip floats; non-finite values become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _budget(cfg: SystemConfig, flag: int | None) -> int | None:
    if flag is not None:
        return flag
    if os.environ.get(BUDGET_ENV):
        return int(os.environ[BUDGET_ENV])
    return cfg.compute.word_budget


def _t_grid(spec: str) -> np.ndarray:
    try:
        if ":" in spec:
            a, b, step = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise ValueError("step must be > 0")
            k = int(math.floor((b - a) / step + 1e-9))
            return a + step * np.arange(k + 1)
        return np.array([float(x) for x in spec.split(",") if x.strip()])
    except ValueError as exc:
        raise UsageError(f"--t-grid {spec!r}: {exc}") from None


def _letters(spec: str) -> list[int]:
    try:
        return [int(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse word {spec!r}; expected comma-separated edge ids") from None


def constants_block(system: Cgdms) -> dict:
    c = system.constants
    prim = check_finite_primitivity(system.graph, (system.graph.edge_count - 1) ** 2 + 2)
    return {
        "lambda": c.lambda_,
        "lambda_minus": c.lambda_minus,
        "holder_C": c.holder_C,
        "holder_alpha": c.holder_alpha,
        "separation_a": c.separation_a,
        "distortion_K": system.distortion_constant,
        "flags": asdict(system.flags),
        "primitivity_length": None if prim is None else prim[0],
        "connector_length": connector(system),
        "theta": 0.0,
    }


def _graph_block(system: Cgdms) -> dict:
    g = system.graph
    return {"vertices": g.vertex_count, "edges": [[i, t] for _, i, t in g.edges],
            "incidence": g.incidence, "overridden": g.overridden, "synthetic": g.synthetic}


def _header(cfg: SystemConfig, command: str) -> dict:
    return {"command": command, "config": cfg.name, "kind": cfg.kind, "config_digest": cfg.digest}


def _curve_block(curve) -> dict:
    return {
        "method": curve.method,
        "depth": curve.depth,
        "monotone": curve.monotone,
        "convex": curve.convex,
        "theta": curve.theta,
        "rows": [{"t": e.t, "estimate": e.value, "envelope": e.envelope, "lower": e.lower,
                  "upper": e.upper, "depth": e.depth, "method": e.method} for e in curve.estimates],
    }


def _dim_block(res) -> dict:
    d = asdict(res)
    d["diagnostics"] = dict(res.diagnostics)
    return d


def _moran_ratios(cfg: SystemConfig, system: Cgdms):
    if cfg.ratios is not None:
        return cfg.ratios
    g = system.graph
    if system.constant_derivative and g.vertex_count == 1 and g.incidence.all():
        return tuple(float(r) for r in system.ratios())
    raise UsageError("moran needs a similarity-ratio list or a full-shift similarity system")


def _construction_matrix(cfg: SystemConfig, system: Cgdms) -> ConstructionMatrix:
    if cfg.matrix is not None:
        return cfg.matrix
    g = system.graph
    if system.constant_derivative and not g.overridden and system.is_1d:
        M = np.zeros((g.vertex_count, g.vertex_count))
        for e, i, t in g.edges:
            if M[i, t]:
                raise UsageError("spectral needs at most one edge per vertex pair")
            M[i, t] = system.maps[e].ratio
        return ConstructionMatrix.from_array(M)
    raise UsageError("spectral needs a construction matrix or a similarity graph system")


def _dimension(cfg: SystemConfig, system: Cgdms, method: str, tol: float, depth: int,
               strategy: str, workers: int, budget) -> dict:
    if method in ("bowen-partition", "bowen-scaling"):
        res = bowen_dimension(system, method.split("-")[1], depth, tol, strategy, workers, budget)
        return _dim_block(res)
    if method == "moran":
        ratios = _moran_ratios(cfg, system)
        res = moran_dimension(ratios, tol)
        block = _dim_block(res)
        if len(set(ratios)) == 1:
            closed = 0.0 if len(ratios) == 1 else math.log(len(ratios)) / -math.log(ratios[0])
            block["closed_form"] = closed
            block["closed_form_difference"] = abs(res.estimate - closed)
        return block
    if method == "spectral":
        res = spectral_dimension(_construction_matrix(cfg, system), tol)
        return _dim_block(res)
    raise UsageError(f"unknown dimension method {method!r}")


# commands -----------------------------------------------------------------

def cmd_inspect(args) -> str:
    cfg = load_config(args.config)
    system = cfg.verified()
    rep = _header(cfg, "inspect")
    rep["graph"] = _graph_block(system)
    rep["constants"] = constants_block(system)
    return _dumps(rep)


def cmd_pressure(args) -> str:
    cfg = load_config(args.config)
    system = cfg.verified()
    depth = cfg.compute.depth if args.depth is None else args.depth
    curve = pressure_curve(system, _t_grid(args.t_grid), depth, args.method, args.strategy,
                           args.workers, _budget(cfg, args.budget))
    block = _curve_block(curve)
    if args.format == "csv":
        cols = ["t", "estimate", "envelope", "lower", "upper", "depth", "method"]
        return _csv(cols, [[r[c] for c in cols] for r in block["rows"]])
    rep = _header(cfg, "pressure")
    rep["pressure"] = block
    return _dumps(rep)


def cmd_dimension(args) -> str:
    cfg = load_config(args.config)
    system = cfg.verified()
    tol = cfg.compute.tol if args.tol is None else args.tol
    depth = cfg.compute.depth if args.depth is None else args.depth
    rep = _header(cfg, "dimension")
    rep["dimension"] = _dimension(cfg, system, args.method, tol, depth, args.strategy,
                                  args.workers, _budget(cfg, args.budget))
    return _dumps(rep)


def cmd_scaling(args) -> str:
    cfg = load_config(args.config)
    system = cfg.verified()
    word = DualWord.from_sequence(_letters(args.dual_word))
    depth = len(word) if args.depth is None else args.depth
    est = scaling_function(system, word, depth)
    seq = ratio_geometry(system, word, "dual", depth)
    if args.format == "csv":
        rows = [[k + 1, v, b] for k, (v, b) in enumerate(zip(seq.values, seq.error_bounds))]
        return _csv(["n", "ratio", "log_envelope"], rows)
    rep = _header(cfg, "scaling")
    rep["scaling"] = {"dual_word": list(word.sequence), "depth": est.depth,
                      "estimate": est.estimate, "error_bound": est.error_bound,
                      "ratios": seq.values, "log_envelopes": seq.error_bounds}
    return _dumps(rep)


def _equiv_block(S: Cgdms, T: Cgdms, samples: int, depth: int, seed: int,
                 require_separation: bool) -> dict:
    rep = geometric_equivalence(S, T, None, depth, samples, seed, require_separation)
    return {"verdict": rep.verdict, "slope": rep.slope, "slope_upper_95": rep.slope_upper,
            "rate": rep.rate, "amplitude": rep.amplitude, "r_squared": rep.r_squared,
            "tail": rep.tail, "assumptions_met": rep.assumptions_met, "samples": samples,
            "depth": depth, "seed": seed, "envelope": rep.envelope, "_report": rep}


def cmd_equiv(args) -> str:
    a, b = load_config(args.config_a), load_config(args.config_b)
    seed = args.seed if args.seed is not None else a.compute.seed
    if seed is None:
        raise UsageError("equiv needs --seed (or a seed in the first config)")
    need = a.compute.require_separation and b.compute.require_separation
    S, T = a.verified(), b.verified()
    block = _equiv_block(S, T, args.samples, args.depth, seed, need)
    rep = block.pop("_report")
    if args.format == "csv":
        rows = [[n + 1, env] + list(rep.quotients[:, n]) for n, env in enumerate(rep.envelope)]
        header = ["n", "max_abs_q_minus_1"] + [f"q_word{k}" for k in range(len(rep.words))]
        return _csv(header, rows)
    out = {"command": "equiv", "configs": [a.name, b.name],
           "config_digests": [a.digest, b.digest], "equivalence": block,
           "words": rep.words, "quotients": rep.quotients}
    return _dumps(out)


def _fixture_report(cfg: SystemConfig, seed: int, depth: int | None, workers: int,
                    timings: bool, budget_flag: int | None = None) -> dict:
    rep = _header(cfg, "report")
    clock = {}
    t0 = time.perf_counter()
    try:
        system = cfg.verified()
    except E.CgdmsError as exc:
        rep["error"] = {"type": type(exc).__name__, "message": str(exc), "exit_code": _exit_code(exc)}
        return rep
    rep["constants"] = constants_block(system)
    n = min(cfg.compute.depth, 8) if depth is None else depth
    budget = _budget(cfg, budget_flag)
    rep["pressure"] = {}
    methods = ["partition"] + (["scaling"] if system.flags.exponential_geometry else [])
    for m in methods:
        rep["pressure"][m] = _curve_block(pressure_curve(system, REPORT_T_GRID, n, m,
                                                         workers=workers, budget=budget))
    clock["pressure"] = time.perf_counter() - t0
    dims = {}
    for m in methods:
        dims[f"bowen-{m}"] = _dimension(cfg, system, f"bowen-{m}", cfg.compute.tol, n,
                                        "enumerate", workers, budget)
    if cfg.ratios is not None or (system.constant_derivative and system.graph.vertex_count == 1
                                  and system.graph.incidence.all()):
        dims["moran"] = _dimension(cfg, system, "moran", cfg.compute.tol, n, "enumerate", 1, None)
    if cfg.matrix is not None:
        dims["spectral"] = _dimension(cfg, system, "spectral", cfg.compute.tol, n, "enumerate", 1, None)
        c = consistency_report(cfg.matrix)
        dims["consistency"] = {"bowen": c.bowen.estimate, "spectral": c.spectral.estimate,
                               "difference": c.difference, "tolerance": c.tolerance,
                               "agree": c.agree, "depth": c.bowen.depth}
    rep["dimension"] = dims
    clock["dimension"] = time.perf_counter() - t0 - clock["pressure"]
    if system.flags.strong_separation and system.flags.exponential_geometry:
        h = holder_diagnostic(system, 32, 10, seed)
        rep["holder"] = {"K_hat": h.K_hat, "K_hat_upper": h.K_hat_upper, "K_theory": h.K_theory,
                         "pairs": 32, "depth": 10, "seed": seed}
    if timings:
        rep["timings_seconds"] = clock
    return rep


def cmd_report(args) -> str:
    if args.seed is None:
        raise UsageError("report needs an explicit --seed")
    configs = [load_config(p) for p in args.configs] or [load_fixture(n) for n in SUITE]
    out = {"command": "report", "seed": args.seed,
           "fixtures": [_fixture_report(c, args.seed, args.depth, args.workers, args.timings,
                                        args.budget) for c in configs]}
    if not args.configs:
        tern = load_fixture("ternary").verified()
        pairs = {"ternary_vs_conjugate": "ternary_conjugate", "ternary_vs_half_ratio": "half_ratio"}
        eq = {}
        for key, other in pairs.items():
            cfg = load_fixture(other)
            block = _equiv_block(tern, cfg.verified(), 16, 24, args.seed,
                                 cfg.compute.require_separation)
            block.pop("_report")
            eq[key] = block
        out["equivalence"] = eq
    return _dumps(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cgdms", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=False):
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--workers", type=int, default=1, help="worker processes for word batches")
        sp.add_argument("--budget", type=int, default=None,
                        help=f"word budget (overrides ${BUDGET_ENV} and the config)")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("inspect", help="verify a system and list its constants")
    sp.add_argument("config")
    common(sp)
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("pressure", help="pressure estimates over a t grid")
    sp.add_argument("config")
    sp.add_argument("--t-grid", default=DEFAULT_T_GRID, help="start:stop:step or comma list")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--method", choices=("partition", "scaling"), default="partition")
    sp.add_argument("--strategy", choices=("enumerate", "matrix"), default="enumerate")
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_pressure)

    sp = sub.add_parser("dimension", help="Hausdorff dimension estimate")
    sp.add_argument("config")
    sp.add_argument("--method", choices=("bowen-partition", "bowen-scaling", "moran", "spectral"),
                    default="bowen-partition")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--strategy", choices=("enumerate", "matrix"), default="enumerate")
    common(sp)
    sp.set_defaults(func=cmd_dimension)

    sp = sub.add_parser("scaling", help="scaling function along a dual word")
    sp.add_argument("config")
    sp.add_argument("--dual-word", required=True, help="letters as written, left to right")
    sp.add_argument("--depth", type=int)
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("equiv", help="compare the forward ratio geometries of two systems")
    sp.add_argument("config_a")
    sp.add_argument("config_b")
    sp.add_argument("--samples", type=int, default=32)
    sp.add_argument("--depth", type=int, default=24)
    sp.add_argument("--seed", type=int)
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_equiv)

    sp = sub.add_parser("report", help="run the fixture suite (or given configs) end to end")
    sp.add_argument("configs", nargs="*")
    sp.add_argument("--seed", type=int, help="required")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--timings", action="store_true", help="include wall-clock timings")
    common(sp)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except E.CgdmsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
