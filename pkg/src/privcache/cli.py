"""Batch entry point: parse a config document, run the pipeline, and emit
deterministic reports.

Config documents are JSON with exact "a/b" rational strings for every
probability (floats are rejected: exactness is the whole point):

    {
      "N": 2, "K": 2, "F": 2, "M": 1, "T": 4,
      "x_alphabet": ["00", "01", "10", "11"],
      "pmf": [{"x": "00", "y": [0, 0], "p": "1/160"}, ...],
      "epsilon": 0, "seed": 0, "demands": "all"
    }

T defaults to |x_alphabet|; epsilon, seed, and demands default to 0, 0,
and "all". Demand lists are written [[1, 2], [2, 1]] in a document and
"1-2;2-1" on the command line.

Exit codes are a stable CI contract: 0 all audits pass, 1 audit failure,
2 unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bounds import files_exactly_independent, lb_l1, lb_l2, ub_epsilon, ub_perfect
from .distcore import Alphabet, JointModel, as_fraction
from .caching import SystemParams
from .errors import ConfigError, PrivcacheError, UsageError
from .pipeline import ExperimentConfig, run, simulate_trials

__all__ = ["main", "parse_config_file", "cmd_run", "cmd_bounds", "cmd_trials"]

CSV_COLUMNS = (
    "demand",
    "achieved_length",
    "nominal_length",
    "leakage_bits",
    "ub_entropy",
    "ub_cardinality",
    "ub_deterministic",
    "flags",
)


def _fmt6(value) -> str:
    return f"{float(value):.6f}"


def _fmt9(value) -> str:
    return f"{float(value):.9f}"


def _demand_tag(d: tuple) -> str:
    return "-".join(map(str, d))


def _parse_demand_list(text: str):
    if text.strip().lower() == "all":
        return "all"
    try:
        return [
            [int(part) for part in chunk.split("-")]
            for chunk in text.split(";")
            if chunk.strip()
        ]
    except ValueError as exc:
        raise ConfigError(f"cannot parse demand list {text!r}; use e.g. 1-2;2-1") from exc


def parse_config_file(path: str, overrides: dict | None = None) -> ExperimentConfig:
    """Load and validate a config document; raises ConfigError with the
    offending entry named."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")

    try:
        n = int(doc["N"])
        k = int(doc["K"])
        f = int(doc["F"])
        m = as_fraction(doc["M"])
        labels = doc["x_alphabet"]
        entries = doc["pmf"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required key {exc.args[0]!r}") from exc
    if not isinstance(labels, list) or not labels:
        raise ConfigError(f"{path}: x_alphabet must be a non-empty list")
    t = int(doc.get("T", len(labels)))

    pmf = {}
    for idx, entry in enumerate(entries):
        try:
            x = entry["x"]
            ys = tuple(int(v) for v in entry["y"])
            p = entry["p"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: pmf entry {idx} is malformed: {exc}") from exc
        if isinstance(p, float):
            raise ConfigError(
                f"{path}: pmf entry {idx}: probability must be an exact 'a/b' string, not a float"
            )
        key = (x, ys)
        pmf[key] = pmf.get(key, 0) + as_fraction(p)

    overrides = overrides or {}
    epsilon = float(overrides.get("epsilon", doc.get("epsilon", 0)))
    seed = int(overrides.get("seed", doc.get("seed", 0)))
    demands = overrides.get("demands", doc.get("demands", "all"))
    if isinstance(demands, str) and demands != "all":
        demands = _parse_demand_list(demands)

    try:
        model = JointModel(Alphabet(tuple(labels)), n, f, pmf)
        params = SystemParams(files=n, users=k, file_bits=f, cache_files=m, key_size=t)
        return ExperimentConfig(
            model=model, params=params, epsilon_bits=epsilon, seed=seed, demands=demands
        )
    except PrivcacheError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _write_csv(path: Path, result) -> None:
    rows = []
    audits = {a.demands: a for a in result.audit.per_demand}
    for row in result.bounds.rows:
        audit = audits[row.demands]
        flags = list(audit.flags)
        if row.x_det_of_payload:
            flags.append("x-det-of-payload")
        rows.append(
            {
                "demand": _demand_tag(row.demands),
                "achieved_length": _fmt6(audit.achieved_expected_length_bits),
                "nominal_length": _fmt6(row.nominal_length_bits),
                "leakage_bits": _fmt9(audit.leakage_bits),
                "ub_entropy": _fmt6(row.ub_entropy_bits),
                "ub_cardinality": _fmt6(row.ub_cardinality_bits),
                "ub_deterministic": ""
                if row.ub_deterministic_bits is None
                else _fmt6(row.ub_deterministic_bits),
                "flags": ";".join(flags),
            }
        )
    rows.append(
        {
            "demand": "worst",
            "achieved_length": _fmt6(result.bounds.worst_case_achieved_bits),
            "nominal_length": _fmt6(result.bounds.worst_case_nominal_bits),
            "leakage_bits": _fmt9(result.audit.max_leakage_deviation_bits),
            "ub_entropy": _fmt6(max(r.ub_entropy_bits for r in result.bounds.rows)),
            "ub_cardinality": _fmt6(max(r.ub_cardinality_bits for r in result.bounds.rows)),
            "ub_deterministic": "",
            "flags": "worst-case",
        }
    )
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _print_table(result) -> None:
    header = (
        f"{'demand':>8} {'achieved':>10} {'nominal':>10} {'leakage':>12} "
        f"{'ub_entropy':>11} {'ub_card':>8} {'ub_det':>7}  flags"
    )
    print(header)
    audits = {a.demands: a for a in result.audit.per_demand}
    for row in result.bounds.rows:
        audit = audits[row.demands]
        det = "-" if row.ub_deterministic_bits is None else str(row.ub_deterministic_bits)
        print(
            f"{_demand_tag(row.demands):>8} "
            f"{audit.achieved_expected_length_bits:>10.6f} "
            f"{row.nominal_length_bits:>10.6f} "
            f"{audit.leakage_bits:>12.9f} "
            f"{row.ub_entropy_bits:>11.6f} "
            f"{row.ub_cardinality_bits:>8} "
            f"{det:>7}  {';'.join(audit.flags)}"
        )
    b = result.bounds
    print()
    print(f"worst-case achieved length : {b.worst_case_achieved_bits:.6f} bits")
    print(f"worst-case nominal length  : {b.worst_case_nominal_bits:.6f} bits")
    print(f"lower bound L1             : {b.lb_l1_bits:.6f} bits")
    applicability = "applicable" if b.lb_l2.applicable else "inapplicable (files correlated)"
    print(f"lower bound L2 (stated)    : {b.lb_l2.stated_bits:.6f} bits [{applicability}]")
    print(f"lower bound L2 (cut-set)   : {b.lb_l2.cutset_bits:.6f} bits [{applicability}]")
    print(f"H(X)                       : {result.x_entropy_bits:.6f} bits")
    print(f"pad part width             : {result.part1_bits} bits")
    print(f"leakage budget             : {result.config.epsilon_bits:g} bits")
    print("note: one representation channel is built per demand vector")


def cmd_run(args) -> int:
    config = parse_config_file(
        args.config,
        {
            k: v
            for k, v in (
                ("epsilon", args.epsilon),
                ("seed", args.seed),
                ("demands", args.demands),
            )
            if v is not None
        },
    )
    result = run(config, strict=False)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "report.csv", result)
    _print_table(result)
    if result.audit.violations:
        print()
        for violation in result.audit.violations:
            print(f"AUDIT FAILURE: {violation}")
        return 1
    print()
    print("all audits passed")
    return 0


def cmd_bounds(args) -> int:
    config = parse_config_file(
        args.config, {"epsilon": args.epsilon} if args.epsilon is not None else {}
    )
    model, params, eps = config.model, config.params, config.epsilon_bits
    print(
        f"{'demand':>8} {'entropy_sum':>12} {'nominal':>10} {'ub_entropy':>11} "
        f"{'ub_card':>8} {'ub_det':>7}"
    )
    for d in config.demand_sweep():
        row = ub_perfect(model, d, params) if eps == 0 else ub_epsilon(model, d, params, eps)
        det = "-" if row.ub_deterministic_bits is None else str(row.ub_deterministic_bits)
        print(
            f"{_demand_tag(d):>8} {row.entropy_sum_bits:>12.6f} "
            f"{row.nominal_length_bits:>10.6f} {row.ub_entropy_bits:>11.6f} "
            f"{row.ub_cardinality_bits:>8} {det:>7}"
        )
    l1 = lb_l1(model, params.users)
    l2 = lb_l2(params, files_exactly_independent(model))
    print()
    print(f"lower bound L1           : {l1:.6f} bits")
    applicability = "applicable" if l2.applicable else "inapplicable (files correlated)"
    print(f"lower bound L2 (stated)  : {l2.stated_bits:.6f} bits [{applicability}]")
    print(f"lower bound L2 (cut-set) : {l2.cutset_bits:.6f} bits [{applicability}]")
    return 0


def cmd_trials(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    overrides = {"seed": args.seed} if args.seed is not None else {}
    config = parse_config_file(args.config, overrides)
    summaries = simulate_trials(config, args.n)
    print(
        f"{'demand':>8} {'trials':>7} {'empirical':>11} {'analytic':>11} "
        f"{'sigma':>10} {'band':>5} {'decode_fail':>11}"
    )
    ok = True
    for s in summaries:
        ok = ok and s.within_band and s.decode_failures == 0
        print(
            f"{_demand_tag(s.demands):>8} {s.trials:>7} {s.empirical_mean_bits:>11.6f} "
            f"{s.analytic_mean_bits:>11.6f} {s.sigma_of_mean_bits:>10.6f} "
            f"{'ok' if s.within_band else 'FAIL':>5} {s.decode_failures:>11}"
        )
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privcache",
        description="Cache-aided private variable-length coding: audits and bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full pipeline and audit")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--epsilon", type=float, default=None, help="leakage budget in bits")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=".", help="directory for report.csv")
    p_run.add_argument("--demands", default=None, help='"all" or e.g. "1-2;2-1"')
    p_run.set_defaults(func=cmd_run)

    p_bounds = sub.add_parser("bounds", help="print bound tables without building codes")
    p_bounds.add_argument("--config", required=True)
    p_bounds.add_argument("--epsilon", type=float, default=None)
    p_bounds.set_defaults(func=cmd_bounds)

    p_trials = sub.add_parser("trials", help="empirical sanity trials")
    p_trials.add_argument("--config", required=True)
    p_trials.add_argument("--n", type=int, required=True)
    p_trials.add_argument("--seed", type=int, default=None)
    p_trials.set_defaults(func=cmd_trials)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrivcacheError as exc:
        print(f"audit error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
