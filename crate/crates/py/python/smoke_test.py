"""Smoke test for the cellbench_py extension.

Build and install first, e.g. `maturin build --release -m crates/py/Cargo.toml`
followed by `pip install target/wheels/cellbench_py-*.whl`, then run
`python crates/py/python/smoke_test.py`.
"""

import math
import random
import struct
import tempfile
from pathlib import Path

import cellbench_py as cb


def check_synthetic_and_render():
    pts = cb.generate_class(0, 7)
    assert len(pts) == 900
    assert pts == cb.generate_class(0, 7)
    assert all(0.0 <= x <= 1.0 and 0.0 <= y <= 1.0 for x, y in pts)
    edges = cb.knn_graph(pts, 5)
    assert all(a < b for a, b in edges)
    w, h, bits = cb.render_graph(pts, k=5, native=128, size=64)
    assert (w, h, len(bits)) == (64, 64, 64 * 64)
    assert set(bits) <= {0, 1} and sum(bits) > 0
    img = [float(b) for b in bits]
    pix = cb.pixel_features(img, 1, h, w)
    assert len(pix) == 3 and abs(pix[0] - sum(bits) / len(bits)) < 1e-9
    conv = cb.singleconv_features(img, 1, h, w, n_filters=8, kernel=3, seed=1)
    assert len(conv) == 8 and conv == cb.singleconv_features(img, 1, h, w, n_filters=8, kernel=3, seed=1)
    assert len(cb.cellcount_features(120, 3)) == 256
    assert cb.N_CLASSES == 24


def check_metrics():
    assert abs(cb.spearman([1, 2, 3, 4], [10, 20, 30, 40]) - 1.0) < 1e-15
    assert abs(cb.pearson([1, 2, 3], [1, 2, 4]) - 0.9819805060619657) < 1e-12
    rows = [[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]]
    m, per_group = cb.map_retrieval(rows, ["a", "a", "b", "b"])
    assert m == 1.0 and set(per_group) == {"a", "b"}
    ids = ["w0", "w1", "w2", "w3"]
    assert cb.recall_at_tail(rows, ids, [("w0", "w1")], q=0.2) == 1.0
    acc = cb.knn_accuracy(rows, ["a", "a", "b", "b"], [[1.0, 0.05], [0.05, 1.0]], ["a", "b"], k=1)
    assert acc == 1.0
    rng = random.Random(0)
    base = [[rng.gauss(0, 1) for _ in range(4)] for _ in range(10)]
    other = [[v * 2.0 for v in r] for r in base]
    matrix, order = cb.rsa([base, other, [list(reversed(r)) for r in base]], ["a", "b", "c"])
    assert abs(matrix[0][1] - 1.0) < 1e-12 and sorted(order) == [0, 1, 2]
    plane = [[rng.gauss(0, 1), rng.gauss(0, 1)] for _ in range(40)]
    lifted = [[x, y, x + y, x - 2 * y] for x, y in plane]
    assert abs(cb.variance_explained_first2(lifted) - 1.0) < 1e-9
    spots = cb.bin_spots([f"s{i}{j}" for j in range(3) for i in range(3)],
                         [(100.0 * i, 100.0 * j) for j in range(3) for i in range(3)])
    assert [len(p) for p in spots] == [4, 6, 4, 6, 9, 6, 4, 6, 4]


def check_regression():
    rng = random.Random(1)
    x = [[rng.gauss(0, 1) for _ in range(6)] for _ in range(60)]
    w = [[rng.gauss(0, 1) for _ in range(2)] for _ in range(6)]
    y = [[sum(r[k] * w[k][g] for k in range(6)) for g in range(2)] for r in x]
    datasets = ["A" if i % 2 == 0 else "B" for i in range(60)]
    folds = [(i // 2) % 3 for i in range(60)]
    mean, per_dataset = cb.regression(x, y, datasets, folds, m=6, alpha=1e-8)
    assert mean > 1 - 1e-6 and set(per_dataset) == {"A", "B"}


def check_interchange():
    with tempfile.TemporaryDirectory() as d:
        base = Path(d) / "emb"
        t = cb.EmbeddingTable([[1.0, 2.0], [3.0, 4.5]], ids=["x", "y"], meta={"plate": ["P1", "P2"]})
        t.write(str(base))
        back = cb.EmbeddingTable.read(str(base) + ".manifest.json")
        assert back.ids == ["x", "y"] and back.dim == 2 and len(back) == 2
        assert back.rows() == [[1.0, 2.0], [3.0, 4.5]]
        assert back.meta("plate") == ["P1", "P2"]
        # a truncated payload must be rejected
        payload = Path(str(base) + ".f32")
        payload.write_bytes(payload.read_bytes()[:-4])
        try:
            cb.EmbeddingTable.read(str(base))
        except ValueError as e:
            assert "payload" in str(e)
        else:
            raise AssertionError("truncated payload accepted")
        # a table written by hand the way an exporter would
        (Path(d) / "ext.manifest.json").write_text(
            '{"version": 1, "n_items": 2, "dim": 3, "dtype": "f32le", "ids": ["a", "b"], "meta_keys": []}')
        (Path(d) / "ext.f32").write_bytes(struct.pack("<6f", 0.5, 1, 2, 3, 4, -1))
        ext = cb.EmbeddingTable.read(str(Path(d) / "ext"))
        assert ext.rows()[1] == [3.0, 4.0, -1.0]
        (Path(d) / "ext.f32").write_bytes(struct.pack("<6f", 0.5, 1, math.nan, 3, 4, -1))
        try:
            cb.EmbeddingTable.read(str(Path(d) / "ext"))
        except ValueError as e:
            assert "a" in str(e)
        else:
            raise AssertionError("NaN accepted")


if __name__ == "__main__":
    check_synthetic_and_render()
    check_metrics()
    check_regression()
    check_interchange()
    print("cellbench_py smoke test passed")
