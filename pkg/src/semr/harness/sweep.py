"""Regret sweeps over a horizon grid and their CSV representation."""
from __future__ import annotations

import csv
import io

from ..montecarlo import run_replications
from ..regret import summarize_batch

CSV_MAGIC = "# semr-lab v1"

SWEEP_COLUMNS = [
    "n", "policy", "replications",
    "count_based_regret", "count_based_se",
    "mse_based_regret", "mse_based_se",
    "r_info", "r_info_se", "r_estimator", "r_estimator_se",
    "dec1_second_term",
]


def sweep_row(policy_name, report) -> dict:
    row = {"n": report.n, "policy": policy_name, "replications": report.replications}
    for key in SWEEP_COLUMNS[3:]:
        row[key] = getattr(report, key)
    for i, c in enumerate(report.mean_counts):
        row[f"mean_count_{i}"] = c
    return row


def run_sweep(cfg, *, workers=None, horizons=None, policies=None, seed=None):
    """One aggregated row per (policy, n). Returns ``(rows, reports)``.

    Replication ``r`` uses stream ``r`` for every policy and horizon.
    """
    env = cfg.build_environment()
    horizons = cfg.horizons if horizons is None else horizons
    policies = cfg.build_policies() if policies is None else policies
    seed = cfg.seed if seed is None else seed
    rows, reports = [], []
    for policy in policies:
        for n in horizons:
            batch = run_replications(env, policy, n, cfg.replications, seed,
                                     workers=workers, ddof=cfg.ddof)
            report = summarize_batch(env, batch)
            reports.append((policy.name, report))
            rows.append(sweep_row(policy.name, report))
    return rows, reports


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows, columns=None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    buf.write(CSV_MAGIC + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _convert(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text in ("True", "False"):
        return text == "True"
    return text


def read_csv(text: str) -> list:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_MAGIC:
        raise ValueError(f"not a semr-lab CSV: missing {CSV_MAGIC!r} header line")
    reader = csv.DictReader(lines[1:])
    return [{k: _convert(v) for k, v in row.items()} for row in reader]
