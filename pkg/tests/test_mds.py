import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import orthogonal_procrustes
from scipy.spatial.distance import pdist, squareform

from fsstab.core import RankingEnsemble
from fsstab.errors import DataError, ShapeError
from fsstab.mds import (
    DissimilarityMatrix,
    Embedding,
    classical_mds,
    dispersion,
    embed,
    normalized_stress,
    rank_dissimilarity,
)


def aligned_error(X, Y):
    """Max coordinate error after the best rotation/reflection of centered X onto Y."""
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    R, _ = orthogonal_procrustes(Xc, Yc)
    return float(np.abs(Xc @ R - Yc).max())


def random_ensemble(name, p, K, rng):
    return RankingEnsemble(name, np.array([rng.permutation(p) + 1 for _ in range(K)], dtype=float))


class TestDissimilarity:
    def test_invariants_enforced(self):
        with pytest.raises(DataError):
            DissimilarityMatrix(np.array([[0, 1], [2, 0.0]]))
        with pytest.raises(DataError):
            DissimilarityMatrix(np.array([[1e-9, 1], [1, 0.0]]))
        with pytest.raises(DataError):
            DissimilarityMatrix(np.array([[0, -1], [-1, 0.0]]))

    def test_identical_and_reversed(self):
        a = RankingEnsemble("a", [[1, 2, 3], [1, 2, 3], [3, 2, 1]])
        D = rank_dissimilarity([a]).values
        assert D[0, 1] == 0.0 and D[0, 2] == 2.0

    def test_shape_and_labels(self):
        rng = np.random.default_rng(0)
        ens = [random_ensemble(f"r{i}", 20, 7, rng) for i in range(6)]
        d = rank_dissimilarity(ens)
        assert d.values.shape == (42, 42)
        assert d.labels[0] == ("r0", 0) and d.labels[-1] == ("r5", 6)

    def test_mixed_p(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ShapeError):
            rank_dissimilarity([random_ensemble("a", 4, 2, rng), random_ensemble("b", 5, 2, rng)])

    @given(st.integers(2, 9), st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_output_is_valid(self, p, K, seed):
        rng = np.random.default_rng(seed)
        d = rank_dissimilarity([random_ensemble("a", p, K, rng), random_ensemble("b", p, K, rng)])
        v = d.values
        assert np.all(v >= 0) and np.all(v <= 2) and np.all(np.diag(v) == 0)
        assert np.array_equal(v, v.T)


class TestEmbed:
    def test_equilateral_triangle(self):
        D = 1.0 - np.eye(3)
        e = embed(DissimilarityMatrix(D))
        assert e.stress < 1e-6
        assert np.allclose(pdist(e.coordinates), 1.0, atol=1e-6)

    def test_exact_planar_configuration(self):
        rng = np.random.default_rng(3)
        Y = rng.standard_normal((12, 2))
        e = embed(DissimilarityMatrix(squareform(pdist(Y))))
        assert e.stress < 1e-6
        assert aligned_error(e.coordinates, Y) < 1e-6

    def test_collinear_input_uses_seed_only_for_degenerate_axis(self):
        x = np.array([0.0, 1.0, 2.5, 4.0])
        D = np.abs(x[:, None] - x[None, :])
        a = embed(DissimilarityMatrix(D), seed=1)
        b = embed(DissimilarityMatrix(D), seed=1)
        assert np.array_equal(a.coordinates, b.coordinates)
        assert a.stress < 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_stress_non_increasing(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.uniform(0.1, 2.0, (10, 10))
        D = np.triu(A, 1) + np.triu(A, 1).T
        e = embed(DissimilarityMatrix(D))
        h = np.asarray(e.stress_history)
        assert np.all(np.diff(h) <= 1e-12)
        assert e.stress == pytest.approx(normalized_stress(e.coordinates, D), abs=1e-12)

    def test_all_zero(self):
        e = embed(DissimilarityMatrix(np.zeros((4, 4))))
        assert e.converged and e.stress == 0.0 and not e.coordinates.any()

    def test_too_few_points(self):
        with pytest.raises(ShapeError):
            embed(DissimilarityMatrix(np.array([[0, 1], [1, 0.0]])))

    def test_stress_rigid_motion_invariant(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((8, 2))
        D = squareform(pdist(rng.standard_normal((8, 3))))
        t = 0.7
        R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        base = normalized_stress(X, D)
        assert normalized_stress(X @ R + [3, -2], D) == pytest.approx(base, abs=1e-12)
        assert normalized_stress(X * [1, -1], D) == pytest.approx(base, abs=1e-12)

    def test_classical_sign_fixed(self):
        rng = np.random.default_rng(1)
        D = squareform(pdist(rng.standard_normal((6, 2))))
        X, _ = classical_mds(D)
        for c in range(2):
            assert X[np.argmax(np.abs(X[:, c])), c] > 0


class TestDispersion:
    def test_identical_runs_zero(self):
        rng = np.random.default_rng(0)
        same = RankingEnsemble("same", np.tile(rng.permutation(15) + 1.0, (5, 1)))
        e = embed(rank_dissimilarity([same, random_ensemble("rand", 15, 5, rng)]))
        disp = dispersion(e)
        assert disp["same"] < 1e-6 and disp["rand"] > disp["same"]

    def test_random_beats_identical(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            same = RankingEnsemble("same", np.tile(rng.permutation(20) + 1.0, (7, 1)))
            disp = dispersion(embed(rank_dissimilarity([same, random_ensemble("rand", 20, 7, rng)]), seed))
            wins += disp["rand"] > disp["same"]
        assert wins >= 99

    def test_translation_invariant(self):
        rng = np.random.default_rng(2)
        labels = tuple((n, i) for n in "ab" for i in range(4))
        X = rng.standard_normal((8, 2))
        e1 = Embedding(X, 0.0, 0, True, labels)
        e2 = Embedding(X + [10.0, -4.0], 0.0, 0, True, labels)
        d1, d2 = dispersion(e1), dispersion(e2)
        assert all(abs(d1[k] - d2[k]) <= 1e-12 for k in d1)

    def test_single_point_omitted(self):
        e = Embedding(np.zeros((3, 2)), 0.0, 0, True, (("a", 0), ("a", 1), ("b", 0)))
        with pytest.warns(RuntimeWarning):
            d = dispersion(e)
        assert set(d) == {"a"}


class TestOutputs:
    def test_csv_and_svg(self):
        rng = np.random.default_rng(0)
        e = embed(rank_dissimilarity([random_ensemble("Pearson", 8, 3, rng), random_ensemble("Relief", 8, 3, rng)]))
        lines = e.to_csv().splitlines()
        assert lines[0] == "ranker,run,x,y" and len(lines) == 7
        assert lines[1].startswith("Pearson,0,")
        svg = e.to_svg()
        assert svg.startswith("<svg") and "Pearson" in svg and "Relief" in svg
        side = e.sidecar()
        assert set(side) >= {"stress", "iterations", "converged"}
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            dispersion(e)
