"""Smoke test for the `skit` extension module.

Build and install first:

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import math
import pathlib

import skit

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def check_metrics():
    assert skit.iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0
    assert math.isclose(skit.iou((0, 0, 10, 10), (5, 0, 15, 10)), 1 / 3)
    gt = "1,1,0,0,10,10\n1,1,20,20,120,120\n"
    det = "1,1,0,0,10,10,0.9\n1,1,20,20,120,120,0.8\n"
    rows = {(m, i, a, d): v for m, i, a, d, v in skit.evaluate(gt, det)}
    assert rows[("AP", "0.50:0.95", "all", 100)] == 1.0
    assert rows[("oLRP", "0.50", "all", None)] == 0.0
    empty = {(m, i, a, d): v for m, i, a, d, v in skit.evaluate(gt, "")}
    assert empty[("oLRP", "0.50", "all", None)] == 1.0


def check_fusion():
    assert math.isclose(skit.log_odds_update(0.0, 0.7), math.log(0.7 / 0.3))
    assert skit.log_odds_update(3.4, 0.9) == 3.5
    try:
        skit.log_odds_update(0.0, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("p outside [0, 1] accepted")


def check_allocation():
    problem = skit.AllocationProblem.from_toml((SCENARIOS / "exp5_cpu.toml").read_text())
    assert problem.size() == (5, 7)
    a = problem.solve()
    assert a is not None and a.optimal
    assert [problem.detector_ids[d] for _, d, _ in a.chosen] == ["ssd_incv2@cpu_a"]
    assert problem.verify(a) == []
    again = problem.parse_assignment(problem.assignment_to_toml(a))
    assert again.chosen == a.chosen
    return problem, a


def check_replay(problem, assignment):
    scenario = skit.Scenario.from_toml((SCENARIOS / "exp5.scenario").read_text())
    scenario.set("resolution", "1.0")
    coupled = scenario.with_assignment(problem, assignment)
    report = coupled.replay()
    assert report.frames > 0
    assert len(report.matches) + len(report.missed) == 9
    for x, y, z, p, cells in report.salient:
        assert 0.5 < p <= 1.0 and cells >= 1
    assert coupled.replay().config_hash == report.config_hash
    return report


def main():
    check_metrics()
    check_fusion()
    problem, assignment = check_allocation()
    report = check_replay(problem, assignment)
    print(
        f"ok: {report.frames} frames, {len(report.salient)} salient, "
        f"{len(report.missed)} missed"
    )


if __name__ == "__main__":
    main()
