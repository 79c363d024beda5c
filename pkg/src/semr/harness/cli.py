"""``semr`` command line: one subcommand per experiment.

Exit codes: 0 success, 2 configuration error, 3 runtime or numeric error,
4 a certification check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import bounds, lowerbound, numkit
from ..environment import gap_profile
from ..errors import ConfigError, SemrError
from ..montecarlo import default_workers, run_replications
from ..numkit import RngStream
from ..policies import LCB, UNIFORM
from ..regret import count_based_regret
from .config import load_config
from .slope import fit_slope
from .svg import emit_svg
from .sweep import SWEEP_COLUMNS, read_csv, rows_to_csv, run_sweep

log = logging.getLogger("semr")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 2, 3, 4


class CheckFailed(Exception):
    pass


def _out_dir(args, cfg) -> Path:
    path = Path(args.out if args.out else cfg.output)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _setup(args):
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    return cfg, seed


def _columns(rows):
    extra = sorted({k for r in rows for k in r if k.startswith("mean_count_")},
                   key=lambda c: int(c.rsplit("_", 1)[1]))
    return SWEEP_COLUMNS + extra


def cmd_simulate(args):
    cfg, seed = _setup(args)
    n = args.n if args.n is not None else (cfg.horizons[0] if cfg.horizons else None)
    if n is None:
        raise ConfigError("simulate needs --n or a horizons entry in [run]")
    rows, reports = run_sweep(cfg, workers=args.workers, horizons=(n,), seed=seed)
    out = _out_dir(args, cfg)
    _write(out / "simulate.csv", rows_to_csv(rows, _columns(rows)))
    _write(out / "simulate.json", _json([{"policy": p, **r.to_dict()} for p, r in reports]))
    for p, r in reports:
        print(f"{p:>20s} n={n:<8d} regret={r.count_based_regret:.6g} (se {r.count_based_se:.2g})")


def cmd_sweep(args):
    cfg, seed = _setup(args)
    if len(cfg.horizons) < 1:
        raise ConfigError("sweep needs a horizons grid in [run]")
    rows, reports = run_sweep(cfg, workers=args.workers, seed=seed)
    out = _out_dir(args, cfg)
    _write(out / "sweep.csv", rows_to_csv(rows, _columns(rows)))
    summary = {"reports": [{"policy": p, **r.to_dict()} for p, r in reports], "fits": {}}
    for name in dict.fromkeys(r["policy"] for r in rows):
        sub = [r for r in rows if r["policy"] == name]
        if len(sub) < 3:
            continue
        try:
            plain = fit_slope(sub)
            corrected = fit_slope(sub, correction="sqrtlog")
        except SemrError as exc:
            log.warning("no slope fit for %s: %s", name, exc)
            continue
        summary["fits"][name] = {"none": plain.to_dict(), "sqrtlog": corrected.to_dict()}
        _write(out / f"sweep_{name}.svg", emit_svg(sub, plain, title=f"{name}: regret vs horizon"))
        print(f"{name:>20s} slope={plain.slope:.4f}  sqrtlog-corrected={corrected.slope:.4f}")
    _write(out / "sweep.json", _json(summary))


def cmd_fit_slope(args):
    text = Path(args.input).read_text(encoding="utf-8")
    rows = read_csv(text)
    if args.policy:
        rows = [r for r in rows if r.get("policy") == args.policy]
    fit = fit_slope(rows, correction=args.correction, column=args.column)
    print(_json(fit.to_dict()), end="")
    if args.svg:
        _write(Path(args.svg), emit_svg(rows, fit, column=args.column))


def cmd_concentration(args):
    cfg, seed = _setup(args)
    spec = cfg.concentration
    if spec is None or not spec.sigmas:
        raise ConfigError("concentration needs a [concentration] section and at least one [sigma]")
    rows = []
    for i, sig in enumerate(spec.sigmas):
        sigma = sig.matrix(sig.dim or 1)
        ratio = numkit.frobenius_norm(sigma) / numkit.spectral_norm(sigma)
        eps = [*spec.epsilon, spec.linear_factor * ratio]
        for cell in bounds.concentration_sweep(sigma, spec.m, eps, spec.trials, RngStream(seed, i)):
            rows.append({"sigma": i, "d": sigma.shape[0], "m": cell.m, "epsilon": cell.epsilon,
                         "empirical": cell.empirical_tail, "bound": cell.bound, "se": cell.se,
                         "linear_regime": cell.linear_regime, "pass": cell.passed})
    out = _out_dir(args, cfg)
    _write(out / "concentration.csv", rows_to_csv(rows))
    failed = [r for r in rows if not r["pass"]]
    print(f"concentration: {len(rows) - len(failed)}/{len(rows)} cells within the bound")
    if failed:
        raise CheckFailed(f"{len(failed)} concentration cells exceed the bound")


def cmd_certify(args):
    cfg, seed = _setup(args)
    env = cfg.build_environment()
    profile = gap_profile(env)
    if not cfg.horizons:
        raise ConfigError("certify needs a horizons grid in [run]")
    rows, regret_rows = [], []
    for n in cfg.horizons:
        batch = run_replications(env, LCB, n, cfg.replications, seed, workers=args.workers, ddof=cfg.ddof)
        se = batch.counts.std(axis=0, ddof=1) / np.sqrt(batch.replications)
        for c in bounds.certificate(env, profile, n, batch.mean_counts, se):
            rows.append({"n": n, "arm": c.arm, "gap": c.gap, "alpha": c.alpha, "c": c.c, "u": c.u,
                         "eta": c.eta, "c_d": c.c_d, "bound": c.predicted_bound,
                         "empirical": c.empirical_mean, "se": c.empirical_se, "pass": c.passed})
        regret = count_based_regret(profile, batch.mean_counts, n)
        envelope = bounds.regret_threshold_bound(env, profile, n)
        regret_rows.append({"n": n, "regret": regret, "envelope": envelope, "pass": regret <= envelope})
    out = _out_dir(args, cfg)
    _write(out / "certify.csv", rows_to_csv(rows))
    _write(out / "certify.json", _json({"regret_envelope": regret_rows}))
    failed = [r for r in rows if not r["pass"]] + [r for r in regret_rows if not r["pass"]]
    print(f"certify: {len(rows) - sum(not r['pass'] for r in rows)}/{len(rows)} arm certificates pass; "
          f"{sum(r['pass'] for r in regret_rows)}/{len(regret_rows)} horizons under the regret envelope")
    if failed:
        raise CheckFailed(f"{len(failed)} certificate checks failed")


def cmd_lowerbound(args):
    cfg, seed = _setup(args)
    spec = cfg.lowerbound
    if spec is None:
        raise ConfigError("lowerbound needs a [lowerbound] section")
    horizons = spec.horizons or cfg.horizons
    policies = cfg.build_policies() or [LCB]
    rows = []
    for k in spec.arms:
        for n in horizons:
            pair = lowerbound.build_pair(n, k, spec.sigma1, spec.gamma)
            for policy in policies:
                v = lowerbound.verdict(policy, pair, n, cfg.replications, seed, workers=args.workers)
                row = {"n": n, "k": k, "policy": policy.name, "weak_arm": v.weak_arm,
                       "r_minus_base": v.r_minus_base, "r_minus_perturbed": v.r_minus_perturbed,
                       "sum": v.total, "se": v.se, "threshold": v.threshold, "pass": v.passed,
                       "c2": v.c2, "c3": v.c3, "floor": v.floor, "realized_r_info": v.realized_r_info,
                       "floor_pass": v.floor_passed, "bh_p": v.bh_p, "bh_q": v.bh_q, "bh_kl": v.bh_kl,
                       "bh_pass": v.bh_passed}
                rows.append(row)
            if spec.divergence:
                chk = lowerbound.divergence_decomposition_check(
                    UNIFORM, pair.base(), pair.perturbed(), n, cfg.replications, seed, workers=args.workers)
                for row in rows[-len(policies):]:
                    row.update(kl_analytic=chk.analytic, kl_monte_carlo=chk.monte_carlo,
                               kl_relative_error=chk.relative_error)
    out = _out_dir(args, cfg)
    _write(out / "lowerbound.csv", rows_to_csv(rows))
    failed = [r for r in rows if not (r["pass"] and r["bh_pass"] and r["floor_pass"])]
    print(f"lowerbound: {len(rows) - len(failed)}/{len(rows)} cells certified")
    if failed:
        raise CheckFailed(f"{len(failed)} lower-bound cells failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment config file")
        p.add_argument("--out", help="output directory (overrides [run] output)")
        p.add_argument("--seed", type=int, help="root seed (overrides [run] seed)")
        p.add_argument("--workers", type=int, default=default_workers(),
                       help="replication worker threads (default: $SEMR_WORKERS or 1)")

    for name, fn, helptext in [
        ("simulate", cmd_simulate, "regret report at a single horizon"),
        ("sweep", cmd_sweep, "regret over the horizon grid plus log-log slope fits"),
        ("concentration", cmd_concentration, "trace-concentration tail check"),
        ("certify", cmd_certify, "per-arm pull-count bound for LCB"),
        ("lowerbound", cmd_lowerbound, "two-environment lower-bound certification"),
    ]:
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.set_defaults(func=fn)
    sub.choices["simulate"].add_argument("--n", type=int, help="horizon (default: first grid value)")

    p = sub.add_parser("fit-slope", help="fit a log-log slope to an existing CSV")
    p.add_argument("--input", required=True, help="CSV written by sweep")
    p.add_argument("--correction", choices=("none", "sqrtlog"), default="none")
    p.add_argument("--column", default="count_based_regret")
    p.add_argument("--policy", help="only rows for this policy")
    p.add_argument("--svg", help="also write a chart to this path")
    p.set_defaults(func=cmd_fit_slope)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (SemrError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
