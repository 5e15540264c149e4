"""Command-line entry point: ``simulate``, ``check`` and ``sweep``.

Exit codes: 0 success, 1 usage/config/harness error, 2 property failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import model, verifier
from .engine import run_to_completion
from .errors import ConfigError, TooLarge, WarpConsError
from .experiment import config_to_dict, dumps, load_experiment, write_json

log = logging.getLogger("warpcons")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
SWEEP_HEADER = ["n", "p", "r", "f", "last_decision_phase", "bound", "ratio"]
RATIO_DIGITS = 6


def format_fraction(x: Fraction, digits: int = RATIO_DIGITS) -> str:
    """Fixed-point decimal of a non-negative fraction, rounded half up, no floats."""
    scale = 10**digits
    q = (x.numerator * scale * 2 + x.denominator) // (2 * x.denominator)
    return f"{q // scale}.{q % scale:0{digits}d}"


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# simulate


def summarize(trace) -> tuple[dict, int]:
    verdicts = verifier.evaluate_trace(trace)
    c = trace.config.config
    failed = any(v.outcome == verifier.FAIL for v in verdicts.values())
    summary = {
        "verdicts": {prop: verdicts[prop].to_dict() for prop in verifier.PROPERTIES},
        "decisions": {str(pid): v for pid, (v, _) in sorted(trace.correct_decisions().items())},
        "correct_values": sorted(trace.config.correct_values),
        "last_decision_phase": trace.last_decision_phase,
        "decision_phase_bound": model.decision_phase_bound(c.n, c.p, c.r),
        "within_resilience": trace.config.within_resilience,
        "stuck": sorted(trace.stuck),
    }
    return summary, EXIT_FAIL if failed else EXIT_OK


def cmd_simulate(args) -> int:
    cfg, output = load_experiment(args.config)
    trace = run_to_completion(cfg)
    summary, code = summarize(trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / output["trace"], trace.to_dict())
    write_json(out / output["summary"], summary)
    for prop, v in summary["verdicts"].items():
        print(f"{prop}: {v['outcome']}")
    return code


# ---------------------------------------------------------------------------
# check


def tightness_search(space: verifier.CheckSpace, cap: int) -> list:
    """One collusion witness per (n, p, r) with f one past the bound, if any exists."""
    found = []
    for n in space.n_values:
        for p in space.p_set:
            if p > n:
                continue
            for r in space.r_set:
                if r > n:
                    continue
                for vc in range(2, len(space.domain)):
                    f = model.resilience_limit(n, p, vc) + 1
                    if f >= n or n - f < vc:
                        continue
                    trace = verifier.find_violation(n, p, r, f, space.domain, vc, cap=cap)
                    if trace is not None:
                        found.append(trace)
                        break
    return found


def cmd_check(args) -> int:
    cap = args.cap if args.cap is not None else verifier.case_cap()
    space = verifier.CheckSpace(
        n_values=tuple(range(args.n_min, args.n_max + 1)),
        p_set=tuple(args.p_set),
        r_set=tuple(args.r_set),
        domain=tuple(sorted(set(args.domain))),
        f_mode=args.f_mode,
        byzantine_may_abstain=args.abstain,
    )
    try:
        report = verifier.exhaustive_check(space, cap=cap, max_witnesses=args.max_witnesses)
        tight = tightness_search(space, cap) if args.expect_violation else []
    except TooLarge as exc:
        print(f"error: {exc} (cases: {exc.count})", file=sys.stderr)
        return EXIT_ERROR

    out = Path(args.out)
    wdir = out / "witnesses"
    wdir.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["tightness_witnesses"] = []
    for i, trace in enumerate(tight):
        verdicts = verifier.evaluate_trace(trace)
        failed = sorted(p for p, v in verdicts.items() if v.outcome == verifier.FAIL)
        cfg = config_to_dict(verifier.witness_config(trace))
        name = f"tightness_{i:03d}.json"
        write_json(wdir / name, cfg)
        doc["tightness_witnesses"].append({"file": f"witnesses/{name}", "failed": failed, "config": cfg})
    for i, w in enumerate(report.witnesses):
        name = f"witness_{i:03d}.json"
        write_json(wdir / name, w["config"])
        w["file"] = f"witnesses/{name}"
    write_json(out / "report.json", doc)
    (out / "report.csv").write_text(_csv_text(report.csv_rows()), encoding="utf-8")

    regime = sum(report.regime_failures.values())
    print(f"cases: {report.total_cases}  in-regime failures: {regime}  witnesses: {len(report.witnesses)}")
    log.info("elapsed %.1fs", report.elapsed)
    if regime:
        return EXIT_FAIL
    if args.expect_violation and not tight:
        print("expected a violation beyond the bound, none found", file=sys.stderr)
        return EXIT_FAIL
    if args.expect_violation:
        print(f"tightness witnesses: {len(tight)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

GRID_KEYS = {"n", "p", "r"}


def load_grid(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})", key="") from None
    if not isinstance(doc, dict):
        raise ConfigError("grid file must hold a JSON object", key="")
    for key in doc:
        if key not in GRID_KEYS:
            raise ConfigError(f"unknown key {key!r}", key=key)
    for key in sorted(GRID_KEYS):
        vals = doc.get(key)
        if not isinstance(vals, list) or not vals or not all(isinstance(v, int) and v >= 1 for v in vals):
            raise ConfigError(f"{key} must be a non-empty list of positive integers", key=key)
    return doc


def sweep(grid: dict) -> tuple[list, dict]:
    rows = [SWEEP_HEADER]
    ratios = []
    exact = True
    for n in grid["n"]:
        for p in grid["p"]:
            for r in grid["r"]:
                cfg = model.make_config(n, p, r, {pid: 1 for pid in range(n)}, value_domain=(1,))
                last = run_to_completion(cfg).last_decision_phase
                bound = model.decision_phase_bound(n, p, r)
                exact &= last == bound
                ratio = Fraction(last * p * p * r, n * n)
                ratios.append(ratio)
                rows.append([n, p, r, 0, last, bound, format_fraction(ratio)])
    lo, hi = model.RATIO_BOUNDS
    summary = {
        "rows": len(rows) - 1,
        "all_equal_bound": exact,
        "ratio_min": format_fraction(min(ratios)),
        "ratio_max": format_fraction(max(ratios)),
        "ratio_interval": [format_fraction(lo), format_fraction(hi)],
        "within_interval": all(lo <= x <= hi for x in ratios),
    }
    return rows, summary


def cmd_sweep(args) -> int:
    grid = load_grid(args.grid)
    rows, summary = sweep(grid)
    text = _csv_text(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(text, encoding="utf-8")
        write_json(out / "sweep_summary.json", summary)
    else:
        sys.stdout.write(text)
    print(dumps(summary), end="", file=sys.stderr if not args.out else sys.stdout)
    ok = summary["all_equal_bound"] and summary["within_interval"]
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpcons", description="Warp-scheduled Byzantine consensus simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment file")
    sim.add_argument("--config", required=True, help="experiment JSON file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    chk = sub.add_parser("check", help="exhaustive small-instance check")
    chk.add_argument("--n-min", type=int, default=2)
    chk.add_argument("--n-max", type=int, required=True)
    chk.add_argument("--p-set", type=_int_list, default=[1, 2, 3])
    chk.add_argument("--r-set", type=_int_list, default=[1, 2])
    chk.add_argument("--domain", type=_int_list, default=[0, 1, 2])
    chk.add_argument("--f-mode", choices=verifier.F_MODES, default="below-bound")
    chk.add_argument("--expect-violation", action="store_true",
                     help="also search for a collusion witness one past the bound; fail if none")
    chk.add_argument("--abstain", action="store_true", help="let Byzantine processes skip their first access")
    chk.add_argument("--cap", type=int, default=None, help="case cap (default: WARPCONS_CASE_CAP or 10^7)")
    chk.add_argument("--max-witnesses", type=int, default=10, help="witnesses kept per property")
    chk.add_argument("--out", default="check_out", help="output directory")
    chk.set_defaults(func=cmd_check)

    swp = sub.add_parser("sweep", help="honest phase-count grid")
    swp.add_argument("--grid", required=True, help='JSON file {"n": [...], "p": [...], "r": [...]}')
    swp.add_argument("--out", default=None, help="output directory (default: CSV to stdout)")
    swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error at {exc.key or '<root>'}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (WarpConsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
