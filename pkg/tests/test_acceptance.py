"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The summary lines are also repeated at the end of the pytest run.
"""

import csv
import json
import time
from fractions import Fraction
from pathlib import Path

import pytest

from warpcons import casimpl, cli, model, verifier
from warpcons.adversary import Collude
from warpcons.experiment import config_to_dict, dumps

RESULTS = {}

C1_ARGS = ["check", "--n-min", "2", "--n-max", "6", "--p-set", "1,2,3", "--r-set", "1,2", "--domain", "0,1,2",
           "--f-mode", "below-bound"]
C3_ARGS = ["check", "--n-max", "6", "--p-set", "1", "--r-set", "1", "--f-mode", "above-bound", "--expect-violation"]
C4_GRID = {"n": [4, 8, 16, 32], "p": [1, 2, 4], "r": [1, 2, 4]}
C5_VIOLATIONS = ("double_success", "overwrite", "lost_success", "unstable_read", "counter")


def record(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[num] = line
    print(line)
    return ok


def bundle_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def run_cli(args, out):
    t0 = time.perf_counter()
    rc = cli.main([*args, "--out", str(out)])
    return rc, time.perf_counter() - t0


@pytest.fixture(scope="session")
def c1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("c1")
    rc, secs = run_cli(C1_ARGS, out)
    return rc, secs, out


@pytest.fixture(scope="session")
def c3_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("c3")
    rc, _ = run_cli(C3_ARGS, out)
    return rc, out


@pytest.fixture(scope="session")
def c5_sweep():
    t0 = time.perf_counter()
    report = casimpl.conformance_sweep((1, 2, 3), (1, 2, 3), 2)
    return report, time.perf_counter() - t0


def _sweep(tmp: Path) -> tuple:
    grid = tmp / "grid.json"
    grid.write_text(json.dumps(C4_GRID))
    out = tmp / "sweep"
    rc = cli.main(["sweep", "--grid", str(grid), "--out", str(out)])
    return rc, out


def _simulate(cfg, tmp: Path, name: str) -> tuple:
    path = tmp / f"{name}.json"
    path.write_text(dumps(config_to_dict(cfg)))
    out = tmp / name
    rc = cli.main(["simulate", "--config", str(path), "--out", str(out)])
    return rc, out


def test_criterion_1_safety_exhaustive(c1_run):
    rc, secs, out = c1_run
    report = json.loads((out / "report.json").read_text())
    ag = report["counts"]["Agreement"]["fail"]
    sv = report["counts"]["StrongValidity"]["fail"]
    ok = rc == 0 and ag == 0 and sv == 0 and report["total_cases"] > 0 and secs <= 600
    record(1, ok, f"{report['total_cases']} cases, Agreement fails {ag}, StrongValidity fails {sv}, {secs:.1f}s")
    assert ok


def test_criterion_2_common_validity(c1_run):
    _, _, out = c1_run
    with open(out / "report.csv") as fh:
        rows = list(csv.DictReader(fh))
    subset = [
        r for r in rows
        if r["vc_size"] == "1" and r["property"] == "CommonValidity"
        and int(r["f"]) <= model.resilience_limit(int(r["n"]), int(r["p"]), 1)
    ]
    fails = sum(int(r["count"]) for r in subset if r["outcome"] == "fail")
    passes = sum(int(r["count"]) for r in subset if r["outcome"] == "pass")
    faulty = sum(int(r["count"]) for r in subset if r["outcome"] == "pass" and int(r["f"]) > 0)
    ok = fails == 0 and passes > 0 and faulty > 0
    record(2, ok, f"{passes} single-value cases ({faulty} with f > 0), CommonValidity fails {fails}")
    assert ok


def test_criterion_3_tightness(c3_run, tmp_path):
    rc_check, out = c3_run
    report = json.loads((out / "report.json").read_text())
    want = {"2": 1, "3": 1, "4": 2, "5": 2}
    found = [w for w in report["tightness_witnesses"]
             if w["config"]["system"]["n"] == 6 and w["config"]["proposals"] == want
             and w["config"]["byzantine"]["strategy"] == {"kind": "collude", "value": 0}]
    cfg = model.make_config(6, 1, 1, {2: 1, 3: 1, 4: 2, 5: 2}, (0, 1), value_domain=(0, 1, 2),
                            adversary=Collude(0))
    rc_sim, sim = _simulate(cfg, tmp_path, "tight")
    summary = json.loads((sim / "summary.json").read_text())
    decided = set(summary["decisions"].values())
    ok = rc_check == 0 and bool(found) and rc_sim == 2 and decided == {0} \
        and summary["verdicts"]["StrongValidity"]["outcome"] == "fail"
    record(3, ok, f"check rc {rc_check}, witness found {bool(found)}, simulate rc {rc_sim}, decided {sorted(decided)}")
    assert ok


def test_criterion_4_termination_exact(tmp_path):
    rc, out = _sweep(tmp_path)
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    summary = json.loads((out / "sweep_summary.json").read_text())
    bad = [r for r in rows
           if int(r["last_decision_phase"]) != model.decision_phase_bound(int(r["n"]), int(r["p"]), int(r["r"]))]
    lo, hi = model.RATIO_BOUNDS
    ratios = [Fraction(r["ratio"]) for r in rows]
    in_band = all(Fraction(cli.format_fraction(lo)) <= x <= Fraction(cli.format_fraction(hi)) for x in ratios)
    ok = rc == 0 and len(rows) == 36 and not bad and in_band and summary["within_interval"]
    record(4, ok, f"{len(rows)} cells, {len(bad)} off the bound, ratio in [{summary['ratio_min']}, "
                  f"{summary['ratio_max']}] within recorded [{', '.join(summary['ratio_interval'])}]")
    assert ok


def test_criterion_5_cas_conformance(c5_sweep):
    report, secs = c5_sweep
    totals = report.totals()
    violations = {k: totals[k] for k in C5_VIOLATIONS if totals[k]}
    detail = f"{report.schedules} schedules ({report.implementation}), {secs:.1f}s, violations {violations or 'none'}"
    case = report.first_witness(C5_VIOLATIONS)
    if case is not None:
        detail += f"; first witness values={case.values} n={case.capacity} crashes={case.crashes} " \
                  f"order={case.witness.pids()}"
    ok = not violations and secs <= 60
    record(5, ok, detail)
    assert ok, detail


def test_criterion_6_wait_freedom(c5_sweep):
    report, _ = c5_sweep
    bad = report.total("step_count")
    ok = bad == 0 and report.schedules > 0
    record(6, ok, f"{report.schedules} schedules, {bad} with a surviving append not taking exactly 4 steps "
                  "(2 on Limit Reached)")
    assert ok


def test_criterion_7_model_gap(tmp_path):
    t0 = time.perf_counter()
    on = verifier.scenario_witness(verifier.model_gap_config(True))
    off = verifier.scenario_witness(verifier.model_gap_config(False))
    secs = time.perf_counter() - t0
    on_fails = on is not None and verifier.evaluate_trace(on)[verifier.AGREEMENT].outcome == verifier.FAIL
    values = sorted({v for v, _ in on.correct_decisions().values()}) if on is not None else []
    ok = on_fails and off is None and secs < 1
    record(7, ok, f"abstention on: Agreement fail {on_fails} (decided {values}); abstention off passes "
                  f"{off is None}; {secs:.3f}s")
    assert ok


def test_criterion_8_determinism(c1_run, c3_run, tmp_path):
    same = {}
    _, _, c1 = c1_run
    rc, _ = run_cli(C1_ARGS, tmp_path / "c1b")
    same[1] = bundle_bytes(c1) == bundle_bytes(tmp_path / "c1b")
    _, c3 = c3_run
    run_cli(C3_ARGS, tmp_path / "c3b")
    tight = model.make_config(6, 1, 1, {2: 1, 3: 1, 4: 2, 5: 2}, (0, 1), value_domain=(0, 1, 2),
                              adversary=Collude(0))
    s1, s2 = _simulate(tight, tmp_path, "t1")[1], _simulate(tight, tmp_path, "t2")[1]
    same[3] = bundle_bytes(c3) == bundle_bytes(tmp_path / "c3b") and bundle_bytes(s1) == bundle_bytes(s2)
    (tmp_path / "w1").mkdir()
    (tmp_path / "w2").mkdir()
    same[4] = bundle_bytes(_sweep(tmp_path / "w1")[1]) == bundle_bytes(_sweep(tmp_path / "w2")[1])
    g1 = _simulate(verifier.model_gap_config(True), tmp_path, "g1")[1]
    g2 = _simulate(verifier.model_gap_config(True), tmp_path, "g2")[1]
    same[7] = bundle_bytes(g1) == bundle_bytes(g2)
    ok = all(same.values())
    record(8, ok, "byte-identical reruns: " + ", ".join(f"criterion {k} {v}" for k, v in same.items()))
    assert ok
