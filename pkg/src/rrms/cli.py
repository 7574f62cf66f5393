"""Config-driven command line for depth experiments.

Four subcommands: `run` (Monte Carlo + LLN/CLT diagnostics), `exact`
(enumeration oracle vs bucket convolution), `gap` (coupling-gap table over a
grid of n), and `theory` (closed-form constants).  Experiments are described
by a JSON config file, individual flags, or both; flags win.  Exit codes:
0 success, 1 usage error, 2 diagnostic failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import blocks, couplings, dists, exactoracle, stats

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIAGNOSTIC = 2

DEFAULT_LLN_RTOL = 0.15
DEFAULT_KS_MAX = 0.10
EXACT_TV_MAX = 1e-12

_CONFIG_KEYS = {
    "run": {
        "family",
        "n",
        "reps",
        "seed",
        "sampler",
        "workers",
        "out",
        "lln_rtol",
        "ks_max",
    },
    "exact": {"family", "n", "out"},
    "gap": {"family", "grid", "reps", "epsilon", "seed", "workers", "out"},
    "theory": {"family", "out"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the exit-code contract reserves 2 for
    # diagnostic failures, so usage problems are funneled through UsageError
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rrms", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--config", metavar="FILE", help="JSON experiment config")
        p.add_argument(
            "--family",
            choices=sorted(blocks._FAMILY_FIELDS),
            help="block family kind",
        )
        p.add_argument("--p", type=float, help="geometric parameter")
        p.add_argument("--alpha", type=float, help="hook mass parameter")
        p.add_argument(
            "--fitness", help="fitness distribution, e.g. const:1 or pmf:1=0.5,2=0.5"
        )
        p.add_argument(
            "--lambda",
            dest="lam",
            type=float,
            help="exponential rate for segment weights",
        )
        p.add_argument("--chi", type=float, help="degree coefficient")
        p.add_argument("--rho", type=float, help="per-vertex offset")
        p.add_argument("--catalog", metavar="FILE", help="JSON block catalog")
        p.add_argument("--seed", type=int, help="64-bit stream seed")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--workers", type=int, help="worker threads")

    p_run = sub.add_parser("run", help="Monte Carlo depths + LLN/CLT diagnostics")
    add_common(p_run)
    p_run.add_argument("--n", type=int, help="growth horizon")
    p_run.add_argument("--reps", type=int, help="replication count")
    p_run.add_argument(
        "--sampler", choices=stats.SAMPLERS, help="depth sampler to run"
    )

    p_exact = sub.add_parser("exact", help="exact depth law vs bucket convolution")
    add_common(p_exact)
    p_exact.add_argument("--n", type=int, help="growth horizon")

    p_gap = sub.add_parser("gap", help="coupling-gap exceedance over a grid of n")
    add_common(p_gap)
    p_gap.add_argument("--grid", help="comma-separated n values, ascending")
    p_gap.add_argument("--reps", type=int, help="replications per grid point")
    p_gap.add_argument("--epsilon", type=float, help="exceedance threshold")

    p_theory = sub.add_parser("theory", help="closed-form limit constants")
    add_common(p_theory)

    return parser


# -- config assembly ---------------------------------------------------------


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config file: {e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"config file is not valid JSON: {e}")
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def _load_catalog_file(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read catalog file: {e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"catalog file is not valid JSON: {e}")


def _family_descriptor(args, cfg: dict) -> dict:
    """Merge the family description; flags override config fields."""
    desc = cfg.get("family")
    if desc is not None and not isinstance(desc, dict):
        raise UsageError("config field 'family' must be an object")
    desc = dict(desc) if desc else {}
    if args.family is not None:
        if desc.get("kind") not in (None, args.family):
            desc = {}  # flags switch the family outright
        desc["kind"] = args.family
    kind = desc.get("kind")
    if kind is None:
        raise UsageError("missing required field 'family'")

    catalog = _load_catalog_file(args.catalog) if args.catalog else None
    if kind == "k2":
        if args.alpha is not None:
            desc["alpha"] = args.alpha
        if args.fitness is not None:
            try:
                desc["fitness"] = dists.parse(args.fitness).to_config()
            except ValueError as e:
                raise UsageError(str(e))
    elif kind == "geometric_path":
        if args.p is not None:
            desc["p"] = args.p
    elif kind == "uniform_segment":
        if args.lam is not None:
            desc["weights"] = {"kind": "exp", "rate": args.lam}
    elif kind == "hooking":
        if args.chi is not None:
            desc["chi"] = args.chi
        if args.rho is not None:
            desc["rho"] = args.rho
        if catalog is not None:
            if not isinstance(catalog, list):
                raise UsageError(
                    "hooking catalog file must hold a JSON list of"
                    " {edges, hook, prob} entries"
                )
            desc["catalog"] = catalog
    elif kind == "custom_discrete":
        if catalog is not None:
            if not isinstance(catalog, dict) or "blocks" not in catalog:
                raise UsageError(
                    "custom catalog file must hold an object with"
                    " 'blocks' and 'initial'"
                )
            desc["blocks"] = catalog["blocks"]
            if "initial" in catalog:
                desc["initial"] = catalog["initial"]
            extra = set(catalog) - {"blocks", "initial"}
            if extra:
                raise UsageError(f"unknown catalog field(s) {sorted(extra)}")
    return desc


def _merged(args, command: str) -> dict:
    cfg = _load_config_file(args.config) if args.config else {}
    allowed = _CONFIG_KEYS[command]
    for key in cfg:
        if key not in allowed:
            raise UsageError(f"unknown config field '{key}' for command '{command}'")
    merged = dict(cfg)
    merged["family"] = _family_descriptor(args, cfg)
    for key in ("n", "reps", "seed", "workers", "out"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if getattr(args, "sampler", None) is not None:
        merged["sampler"] = args.sampler
    if getattr(args, "epsilon", None) is not None:
        merged["epsilon"] = args.epsilon
    if getattr(args, "grid", None) is not None:
        try:
            merged["grid"] = [int(tok) for tok in str(args.grid).split(",") if tok]
        except ValueError:
            raise UsageError(f"grid must be comma-separated integers, got {args.grid!r}")
    return merged


def _require(merged: dict, field: str):
    if field not in merged:
        raise UsageError(f"missing required field '{field}'")
    return merged[field]


def _as_int(merged: dict, field: str, default=None, minimum=None):
    if field not in merged:
        if default is None:
            raise UsageError(f"missing required field '{field}'")
        return default
    val = merged[field]
    if isinstance(val, bool) or not isinstance(val, int):
        raise UsageError(f"field '{field}' must be an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise UsageError(f"field '{field}' must be at least {minimum}, got {val}")
    return val


def _build_family(desc: dict) -> blocks.BlockFamily:
    try:
        return blocks.family_from_config(desc)
    except ValueError as e:
        raise UsageError(str(e))


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json_dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _samples_csv(samples: np.ndarray) -> str:
    lines = ["rep,value"]
    for r, v in enumerate(samples):
        lines.append(f"{r},{v:.17g}")
    return "\n".join(lines) + "\n"


# -- subcommands ---------------------------------------------------------------


def cmd_run(args) -> int:
    merged = _merged(args, "run")
    family = _build_family(merged["family"])
    n = _as_int(merged, "n", minimum=2)
    reps = _as_int(merged, "reps", minimum=100)
    seed = _as_int(merged, "seed", default=0, minimum=0)
    workers = _as_int(merged, "workers", default=1, minimum=1)
    sampler = merged.get("sampler", "direct")
    if sampler == "coupled":
        raise UsageError(
            "sampler 'coupled' produces pairs; use the gap command for it"
        )
    lln_rtol = float(merged.get("lln_rtol", DEFAULT_LLN_RTOL))
    ks_max = float(merged.get("ks_max", DEFAULT_KS_MAX))
    if not (lln_rtol > 0 and ks_max > 0):
        raise UsageError("fields 'lln_rtol' and 'ks_max' must be positive")

    try:
        spec = stats.McRunSpec(
            family=family, n=n, reps=reps, seed=seed, sampler=sampler, workers=workers
        )
    except ValueError as e:
        raise UsageError(str(e))
    try:
        mu, sigma2 = couplings.theoretical_limits(family.moments)
        if not sigma2 > 0:
            raise ValueError("family has degenerate sigma2; no CLT shape to test")
    except ValueError as e:
        raise UsageError(str(e))

    samples = stats.monte_carlo(spec)
    summary = stats.SummaryStats.from_sample(samples)
    lln = stats.lln_report(samples, n, mu)
    clt = stats.clt_report(samples, n, mu, sigma2)

    lln_ok = lln.rel_err <= lln_rtol
    clt_ok = clt.ks_statistic <= ks_max and not clt.degenerate
    print(
        f"lln: mu_hat={lln.mu_hat:.6g} mu_theory={mu:.6g}"
        f" rel_err={lln.rel_err:.4f} tol={lln_rtol:g}"
        f" [{'pass' if lln_ok else 'FAIL'}]"
    )
    print(
        f"clt: ks={clt.ks_statistic:.4f} max={ks_max:g}"
        f" sigma2_hat={clt.sigma2_hat:.6g} sigma2_theory={sigma2:.6g}"
        f" [{'pass' if clt_ok else 'FAIL'}]"
    )

    doc = {
        "command": "run",
        "config": {
            "family": family.to_config(),
            "n": n,
            "reps": reps,
            "seed": seed,
            "sampler": sampler,
            "lln_rtol": lln_rtol,
            "ks_max": ks_max,
        },
        "summary": asdict(summary),
        "lln": {**asdict(lln), "mu_theory": mu},
        "clt": asdict(clt),
        "verdicts": {
            "lln": "pass" if lln_ok else "fail",
            "clt": "pass" if clt_ok else "fail",
        },
    }
    if merged.get("out"):
        outdir = str(merged["out"])
        os.makedirs(outdir, exist_ok=True)
        _write_text(os.path.join(outdir, "summary.json"), _json_dumps(doc))
        _write_text(os.path.join(outdir, "samples.csv"), _samples_csv(samples))
    return EXIT_OK if (lln_ok and clt_ok) else EXIT_DIAGNOSTIC


def _format_pmf(pmf: exactoracle.DepthPmf) -> str:
    inner = ", ".join(
        f"{exactoracle._format_exact(d)}: {exactoracle._format_exact(p)}"
        for d, p in pmf.entries
    )
    return "{" + inner + "}"


def cmd_exact(args) -> int:
    merged = _merged(args, "exact")
    family = _build_family(merged["family"])
    n = _as_int(merged, "n", minimum=1)
    if n > exactoracle.DEFAULT_ENUMERATION_CAP:
        raise UsageError(
            f"field 'n' exceeds the enumeration cap"
            f" {exactoracle.DEFAULT_ENUMERATION_CAP}, got {n}"
        )
    try:
        trace = couplings.cycled_trace(family, n)
        pmf_engine = exactoracle.exact_depth_pmf(trace.block_refs, n)
        pmf_bucket = couplings.exact_bucket_pmf(trace)
    except ValueError as e:
        raise UsageError(str(e))
    tv = pmf_engine.tv_distance(pmf_bucket)
    ok = float(tv) < EXACT_TV_MAX
    print(f"exact_depth_pmf:  {_format_pmf(pmf_engine)}")
    print(f"exact_bucket_pmf: {_format_pmf(pmf_bucket)}")
    print(
        f"tv_distance: {exactoracle._format_exact(tv)}"
        f" [{'pass' if ok else 'FAIL'}]"
    )
    if merged.get("out"):
        outdir = str(merged["out"])
        os.makedirs(outdir, exist_ok=True)
        _write_text(os.path.join(outdir, "pmf.csv"), pmf_engine.to_csv())
        doc = {
            "command": "exact",
            "config": {"family": family.to_config(), "n": n},
            "tv_distance": float(tv),
            "verdicts": {"exact": "pass" if ok else "fail"},
        }
        _write_text(os.path.join(outdir, "summary.json"), _json_dumps(doc))
    return EXIT_OK if ok else EXIT_DIAGNOSTIC


def cmd_gap(args) -> int:
    merged = _merged(args, "gap")
    family = _build_family(merged["family"])
    grid = merged.get("grid")
    if not isinstance(grid, list) or len(grid) < 2:
        raise UsageError("field 'grid' must list at least 2 values of n")
    if any((isinstance(g, bool) or not isinstance(g, int) or g < 2) for g in grid):
        raise UsageError("field 'grid' must hold integers at least 2")
    if grid != sorted(grid) or len(set(grid)) != len(grid):
        raise UsageError("field 'grid' must be strictly ascending")
    reps = _as_int(merged, "reps", default=2000, minimum=500)
    seed = _as_int(merged, "seed", default=0, minimum=0)
    workers = _as_int(merged, "workers", default=1, minimum=1)
    epsilon = merged.get("epsilon")
    if epsilon is None:
        raise UsageError("missing required field 'epsilon'")
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise UsageError(f"field 'epsilon' must be positive, got {epsilon}")

    # one independent substream block per grid point
    pairs_by_n = []
    for i, g in enumerate(grid):
        spec = stats.McRunSpec(
            family=family,
            n=g,
            reps=reps,
            seed=(seed + i) % 2**64,
            sampler="coupled",
            workers=workers,
        )
        pairs_by_n.append((g, stats.monte_carlo(spec)))
    rows = stats.gap_report(pairs_by_n, epsilon)
    ok = stats.exceedance_nonincreasing(rows)
    for row in rows:
        print(
            f"n={row.n} exceedance={row.exceedance:.6f} se={row.se:.6f}"
            f" reps={row.reps}"
        )
    print(f"gap: exceedance nonincreasing within 2 se [{'pass' if ok else 'FAIL'}]")

    if merged.get("out"):
        outdir = str(merged["out"])
        os.makedirs(outdir, exist_ok=True)
        lines = ["n,rep,y_sum,x_sum,gap_over_sqrtlog"]
        for g, pairs in pairs_by_n:
            root = math.sqrt(math.log(g))
            for r in range(pairs.shape[0]):
                y, x = pairs[r, 0], pairs[r, 1]
                lines.append(
                    f"{g},{r},{y:.17g},{x:.17g},{abs(y - x) / root:.17g}"
                )
        _write_text(os.path.join(outdir, "gap.csv"), "\n".join(lines) + "\n")
        doc = {
            "command": "gap",
            "config": {
                "family": family.to_config(),
                "grid": list(grid),
                "reps": reps,
                "seed": seed,
                "epsilon": epsilon,
            },
            "table": [asdict(row) for row in rows],
            "verdicts": {"gap": "pass" if ok else "fail"},
        }
        _write_text(os.path.join(outdir, "summary.json"), _json_dumps(doc))
    return EXIT_OK if ok else EXIT_DIAGNOSTIC


def cmd_theory(args) -> int:
    merged = _merged(args, "theory")
    family = _build_family(merged["family"])
    if family.moments is None:
        print(
            "error: family has no closed-form moments; estimate them by"
            " Monte Carlo (couplings.estimate_expected_weights) instead",
            file=sys.stderr,
        )
        return EXIT_USAGE
    m = family.moments
    mu, sigma2 = couplings.theoretical_limits(m)
    # every supported weight law (constants, finite pmfs, geometric,
    # exponential) has moments of all orders, so the square-integrability
    # hypotheses hold whenever closed-form moments exist at all
    hypotheses = True
    print(f"E[W]        = {float(m.e_w):.12g}")
    print(f"E[W_0]      = {float(m.e_w0):.12g}")
    print(f"E[W d']     = {float(m.e_wd):.12g}")
    print(f"E[W d'^2]   = {float(m.e_wd2):.12g}")
    print(f"mu          = {mu:.12g}")
    print(f"sigma2      = {sigma2:.12g}")
    print(f"moment hypotheses: {'satisfied' if hypotheses else 'NOT satisfied'}")
    if merged.get("out"):
        outdir = str(merged["out"])
        os.makedirs(outdir, exist_ok=True)
        doc = {
            "command": "theory",
            "config": {"family": family.to_config()},
            "moments": {
                "e_w": float(m.e_w),
                "e_w0": float(m.e_w0),
                "e_wd": float(m.e_wd),
                "e_wd2": float(m.e_wd2),
            },
            "mu": mu,
            "sigma2": sigma2,
            "moment_hypotheses": hypotheses,
        }
        _write_text(os.path.join(outdir, "summary.json"), _json_dumps(doc))
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "exact": cmd_exact, "gap": cmd_gap, "theory": cmd_theory}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: run, exact, gap, theory")
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
