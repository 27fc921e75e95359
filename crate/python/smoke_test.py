"""Smoke test for the rabbithole_py extension module.

Build and install first, e.g.:
    maturin develop -m crates/python/Cargo.toml
then run:
    python python/smoke_test.py
"""

import json
import math
import tempfile
from pathlib import Path

import rabbithole_py as rh


def main():
    assert rh.cosine(["a", "b"], {"a": 2, "b": 2}) == 1.0
    assert rh.cosine(["a"], ["b"]) == 0.0
    try:
        rh.cosine([], ["a"])
    except ValueError:
        pass
    else:
        raise AssertionError("zero vector must raise")

    in_rh, out_rh = rh.expected_similarity(1000, 100, 50)
    assert in_rh == 0.5 and out_rh == 1 / 18
    assert math.isclose(rh.default_threshold(1000, 100, 50), math.sqrt(0.5 / 18))

    trace = rh.simulate(n=20, rounds=5, seed=3)
    assert trace.users == 20 and trace.rounds == 5
    assert len(trace.trajectory(0)) == 6
    assert trace.labels_at(0)[0] in {"U_A", "U_B", "U_AB"}

    pop = rh.converged_population(n=100, seed=2)
    assert pop.absorbed_fraction(pop.rounds) == 1.0
    sims = rh.pairwise_similarity(pop.final_recommendations)
    labels = rh.classify_rh(sims, rh.default_threshold(1000, 100, 50))
    assert labels == pop.final_labels

    km = rh.kmeans(pop.final_recommendations, 2, seed=2)
    assert rh.adjusted_rand_index(km.labels, pop.final_labels) == 1.0
    assert rh.rand_index([1, 1, 2, 2], ["x", "x", "y", "y"]) == 1.0
    assert rh.adjusted_rand_index([1, 1, 2, 2], [1, 2, 1, 2]) == -0.5

    block = [[1.0 if i == j else (0.5 if (i < 5) == (j < 5) else 0.0) for j in range(10)] for i in range(10)]
    tree = rh.ward_linkage(block)
    heights = [m[2] for m in tree.merges]
    assert heights == sorted(heights)
    assert tree.cut((heights[-1] + heights[-2]) / 2) == [1] * 5 + [2] * 5

    chain = rh.absorption(10)
    assert all(abs(p - k / 10) < 1e-10 for k, p in enumerate(chain["p_rh"]))
    full = rh.absorption(3, representation="full")
    assert len(full["state"]) == 8
    rh_share, mainstream_share = rh.trapping_profile()
    assert math.isclose(rh_share + mainstream_share, 1.0)

    snapshots = [[f"m{(i + j) % 40}" for j in range(10)] for i in range(40)]
    model = rh.fit_mainstream(snapshots)
    assert model.calibration_size == 40
    assert not model.contains(["elsewhere"])

    with tempfile.TemporaryDirectory() as tmp:
        log = Path(tmp) / "walks.jsonl"
        rows = [
            {"walk_id": "w1", "profile": "p", "hop": 0, "watched": "", "recommendations": ["a", "b"]},
            {"walk_id": "w1", "profile": "p", "hop": 1, "watched": "a", "recommendations": ["b", "b"]},
            {"walk_id": "w1", "profile": "p", "hop": 1, "watched": "a", "recommendations": ["c"]},
        ]
        log.write_text("".join(json.dumps(r) + "\n" for r in rows))
        walks, diagnostics = rh.parse_walks(log)
        assert len(walks) == 1 and walks[0]["recommendations"][1] == {"b": 2}
        assert [line for line, _ in diagnostics] == [3]
        try:
            rh.parse_walks(Path(tmp) / "missing.jsonl")
        except OSError:
            pass
        else:
            raise AssertionError("missing file must raise")

    assert all(passed for _, passed, _ in rh.validate(seed=1))
    print("rabbithole_py smoke test passed")


if __name__ == "__main__":
    main()
