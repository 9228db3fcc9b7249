"""Smoke test for the fpplab extension module.

Build it first: pip install --no-build-isolation -e crates/python
"""

import json
import math
import pathlib
import tempfile

import fpplab

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check_bundles():
    tree = fpplab.Bundle.tree(3, 8)
    assert tree.vertex_count == 766 and tree.edge_count == 765
    box = fpplab.Bundle.lattice(2, 1)
    assert (box.vertex_count, box.edge_count) == (9, 12)
    tiling = fpplab.Bundle.tiling(3, 7, 4)
    x, y = tiling.symmetric_pair(2)
    assert tiling.hop_distance(x, y) == 4
    same = fpplab.Bundle.from_json(json.dumps({"kind": "tiling", "p": 3, "q": 7, "layers": 4}))
    assert same.edges() == tiling.edges()
    bubble = fpplab.Bundle.bubble(20, [4, 16])
    assert bubble.has_weights


def check_geodesics():
    box = fpplab.Bundle.lattice(2, 6)
    dist = fpplab.Distribution.exponential(1.0)
    x, y = box.symmetric_pair(4)
    path, length = fpplab.geodesic(box, dist, 1, 0, x, y)
    assert path[0] == x and path[-1] == y and length > 0
    assert fpplab.geodesic(box, dist, 1, 0, x, y) == (path, length)
    const = fpplab.Distribution.constant(2.0)
    _, length = fpplab.geodesic(box, const, 0, 0, x, y)
    assert length == 16.0


def check_experiments():
    tree = fpplab.Bundle.tree(3, 8)
    dist = fpplab.Distribution.uniform(0.5, 1.5)
    r = fpplab.midpoint_probability(tree, dist, [1, 2, 4], 0, 50, 7)
    assert all(s["estimate"] == 1.0 for s in r["scales"])
    assert fpplab.sample_thinness(fpplab.Bundle.tree(3, 5)) == 0
    b = fpplab.short_path_bound(0.1, 0.5, 0.2, 10)
    assert 0 < b["bound"] <= 1
    assert math.isclose(fpplab.Distribution.exponential(1.0).cdf(0.1), 1 - math.exp(-0.1))
    try:
        fpplab.midpoint_probability(tree, dist, [6], 0, 10, 1)
    except ValueError as e:
        assert "safe_radius" in str(e)
    else:
        raise AssertionError("infeasible scale accepted")


def check_run_config():
    with tempfile.TemporaryDirectory() as out:
        files = fpplab.run_config(str(ROOT / "configs" / "tree_midpoint.toml"), out, threads=1)
        csv = next(f for f in files if f.endswith(".csv"))
        rows = pathlib.Path(csv).read_text().splitlines()[1:]
        assert rows and all(r.split(",")[2] == "1" for r in rows)


if __name__ == "__main__":
    for check in (check_bundles, check_geodesics, check_experiments, check_run_config):
        check()
        print(f"ok  {check.__name__}")
