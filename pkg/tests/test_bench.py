import json

import pytest

from padl import LedgerConfig
from padl.bench import REFERENCE, BenchPoint, BenchReport, measure_sizes, run_bench, workload

SMALL = LedgerConfig(range_bits=16)


def test_workload_returns_three_phases():
    times = workload(2, 1, config=SMALL)
    assert len(times) == 3 and all(t > 0 for t in times)


def test_small_grid_report():
    rep = run_bench((2, 3), (1, 2), reps=2, config=SMALL, sizes=False)
    assert {(x.participants, x.assets) for x in rep.points} == {(2, 1), (3, 1), (2, 2)}
    obj = json.loads(json.dumps(rep.to_json()))
    assert obj["workload_txs"] == 4 and len(obj["points"]) == 3
    assert obj["measured_seconds_per_tx_2x2"] > 0
    assert rep.to_csv().splitlines()[0].startswith("participants,assets,reps")
    assert "ratio" in rep.table()


def test_full_grid_and_bounds():
    rep = run_bench((2,), (1, 2), reps=1, grid="full", config=SMALL, sizes=False)
    assert len(rep.points) == 2
    with pytest.raises(ValueError):
        run_bench((32,), (1,), config=SMALL)
    with pytest.raises(ValueError):
        run_bench((2,), (1,), grid="diagonal", config=SMALL)


def _point(p, k, t):
    return BenchPoint(p, k, prove=[t], endorse=[0.0], verify=[0.0])


def test_scaling_arithmetic():
    pts = [_point(2, 1, 1.0), _point(4, 1, 2.4), _point(8, 1, 5.1), _point(2, 2, 2.0)]
    rep = BenchReport(pts, {}, "bulletproof", (2, 1))
    rows = {(s["axis"], s["to"]): s for s in rep.scaling()}
    assert rows[("participants", 4)]["ok"] and rows[("participants", 4)]["bound"] == 2.5
    assert not rows[("participants", 8)]["ok"]
    assert rows[("assets", 2)]["time_ratio"] == 2.0
    assert not rep.scaling_ok


def test_size_flag_only_for_optimized_backend():
    big = {"cell_bytes": 2 * REFERENCE["cell_bytes"] + 1}
    assert BenchReport([], big, "bulletproof", (2, 1)).size_flag
    assert not BenchReport([], big, "bitdecomp", (2, 1)).size_flag
    assert not BenchReport([], {"cell_bytes": 1319}, "bulletproof", (2, 1)).size_flag


def test_measured_sizes():
    sizes = measure_sizes(include_bond=False)
    assert sizes["cell_bytes"] == 1319
    assert sizes["cell_with_issuer_token_bytes"] > sizes["cell_bytes"]
    assert sizes["cell_bytes"] <= 2 * REFERENCE["cell_bytes"]
