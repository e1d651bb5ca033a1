import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsstab.classifiers import ClassifierSpec
from fsstab.core import RankingEnsemble, check_ranking
from fsstab.errors import ConfigError
from fsstab.ingest import SyntheticSpec, generate_synthetic
from fsstab.rankers import (
    RankerSpec,
    rank,
    rank_pearson,
    rank_random_forest,
    rank_relief,
    rank_svm_rfe,
    rank_wrapper,
    run_ensemble,
)
from fsstab.rankers.embedded import svm_rfe
from fsstab.rankers.filters import relief_weights
from fsstab.rankers.wrapper import forward_selection

from conftest import make_dataset

FAST = {
    "Pearson": RankerSpec("Pearson"),
    "Relief": RankerSpec("Relief"),
    "SvmWrapper": RankerSpec("SvmWrapper", {"max_steps": 2}),
    "NnWrapper": RankerSpec("NnWrapper", {"max_steps": 1, "inner": {"repeats": 1, "epochs": 30}}),
    "SvmRfe": RankerSpec("SvmRfe"),
    "RandomForest": RankerSpec("RandomForest", {"n_trees": 50}),
}


def label_plus_noise(n=150, p=5, seed=0, at=2):
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.r_[np.zeros(n // 2, int), np.ones(n - n // 2, int)])
    X = rng.standard_normal((n, p))
    X[:, at] = y
    return make_dataset(X, y)


class TestSpec:
    def test_unknown_kind_and_param(self):
        with pytest.raises(ConfigError):
            RankerSpec("Lasso")
        with pytest.raises(ConfigError):
            RankerSpec("Relief", {"k": 3})
        with pytest.raises(ConfigError):
            RankerSpec("SvmRfe", {"step": 1.5})
        with pytest.raises(ConfigError):
            RankerSpec("SvmWrapper", {"inner": {"C": -1}})

    def test_json_round_trip(self):
        spec = RankerSpec("SvmRfe", {"step": 0.5})
        assert RankerSpec.from_json(spec.to_json()) == spec


class TestOutputsArePermutations:
    @pytest.mark.parametrize("name", sorted(FAST))
    def test_permutation(self, name, small_synth):
        d, _ = small_synth
        r = rank(FAST[name], d, 3)
        check_ranking(r, raw=True)
        assert sorted(r.tolist()) == list(range(1, d.n_features + 1))

    @pytest.mark.parametrize("name", sorted(FAST))
    def test_row_permutation_invariant(self, name, small_synth):
        d, _ = small_synth
        perm = np.random.default_rng(0).permutation(d.n_instances)
        shuffled = make_dataset(d.features[perm], d.labels[perm], d.feature_names)
        assert np.array_equal(rank(FAST[name], d, 5), rank(FAST[name], shuffled, 5))

    @pytest.mark.parametrize("name", sorted(FAST))
    def test_same_seed_same_ranking(self, name, small_synth):
        d, _ = small_synth
        assert np.array_equal(rank(FAST[name], d, 9), rank(FAST[name], d, 9))

    @pytest.mark.parametrize("name", sorted(FAST))
    def test_strongest_planted_in_top_tenth(self, name):
        hits = 0
        for seed in range(10):
            d, _ = generate_synthetic(
                SyntheticSpec(300, 3, n_noise=17, coefficients=[2.5, 1.0, 0.8], seed=100 + seed)
            )
            hits += rank(FAST[name], d, seed)[0] <= 2
        assert hits >= 9


class TestPearson:
    def test_label_feature_first(self):
        assert rank_pearson(label_plus_noise())[2] == 1

    def test_tie_goes_to_lower_index(self):
        rng = np.random.default_rng(0)
        y = np.r_[np.zeros(20, int), np.ones(20, int)]
        X = np.column_stack([rng.standard_normal(40), 1 - y, y])
        r = rank_pearson(make_dataset(X, y))
        assert r[1] == 1 and r[2] == 2

    def test_constant_feature_scores_zero(self):
        d = make_dataset(np.column_stack([np.ones(10), np.arange(10.0)]), [0, 1] * 5)
        assert rank_pearson(d).tolist() == [2, 1]

    def test_planted_order(self):
        good = 0
        for seed in range(20):
            d, _ = generate_synthetic(SyntheticSpec(5000, 3, coefficients=[10.0, 1.0, 0.0], seed=seed))
            good += rank_pearson(d).tolist() == [1, 2, 3]
        assert good >= 19

    @settings(max_examples=30)
    @given(st.integers(0, 11), st.floats(0.01, 100), st.floats(-50, 50))
    def test_positive_affine_invariant(self, j, a, b):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((80, 12))
        y = (X[:, 0] + X[:, 3] + rng.standard_normal(80) > 0).astype(int)
        X2 = X.copy()
        X2[:, j] = a * X2[:, j] + b
        assert np.array_equal(rank_pearson(make_dataset(X, y)), rank_pearson(make_dataset(X2, y)))


class TestRelief:
    def test_constant_feature_weight_zero(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([rng.standard_normal(60), np.full(60, 3.0), rng.standard_normal(60)])
        y = (X[:, 0] > 0).astype(int)
        w = relief_weights(X, y)
        assert w[1] == 0.0

    def test_stripes(self):
        good = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            a = rng.uniform(0, 1, 300)
            y = (np.floor(a * 6) % 2).astype(int)
            d = make_dataset(np.column_stack([rng.uniform(0, 1, 300), a]), y)
            good += rank_relief(d).tolist() == [2, 1]
        assert good >= 19

    def test_row_permutation_weights(self, small_synth):
        d, _ = small_synth
        perm = np.random.default_rng(1).permutation(d.n_instances)
        w1 = relief_weights(d.features, d.labels)
        w2 = relief_weights(d.features[perm], d.labels[perm])
        assert np.abs(w1 - w2).max() <= 1e-12


class TestWrapper:
    def test_label_feature_first(self):
        hits = 0
        for seed in range(20):
            d = label_plus_noise(120, 5, seed, at=seed % 5)
            r = rank_wrapper(d, ClassifierSpec("SVM"), RankerSpec("SvmWrapper", {"max_steps": 1}), seed)
            hits += r[seed % 5] == 1
        assert hits >= 19

    def test_single_feature(self):
        d = make_dataset(np.arange(10.0)[:, None], [0, 1] * 5)
        assert rank_wrapper(d, ClassifierSpec("SVM")).tolist() == [1]

    def test_duplicate_ranked_after_independent_signal(self):
        good = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((200, 5))
            y = (2 * X[:, 0] + X[:, 1] + X[:, 2] + 0.5 * rng.standard_normal(200) > 0).astype(int)
            X[:, 3] = X[:, 0]
            r = rank_wrapper(make_dataset(X, y), ClassifierSpec("SVM"), RankerSpec("SvmWrapper", {"max_steps": 4}), seed)
            first, dup = sorted([r[0], r[3]])
            good += first == 1 and dup > max(r[1], r[2])
        assert good >= 8

    def test_trace_is_inclusion_order(self, small_synth):
        d, _ = small_synth
        order, trace, _ = forward_selection(d.features, d.labels, ClassifierSpec("SVM"), 3, 3, 0)
        assert [j for j, _ in trace] == order[:3].tolist()
        assert sorted(order.tolist()) == list(range(d.n_features))

    def test_nn_inner(self):
        d = label_plus_noise(150, 4, 1, at=0)
        spec = RankerSpec("NnWrapper", {"max_steps": 1, "inner": {"repeats": 1}})
        assert rank(spec, d, 0)[0] == 1


class TestSvmRfe:
    def test_label_feature_survives(self):
        hits = sum(rank_svm_rfe(label_plus_noise(100, 6, seed, at=4))[4] == 1 for seed in range(20))
        assert hits >= 19

    def test_constant_feature_goes_first(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.full(40, 2.0), rng.standard_normal(40)])
        y = (X[:, 1] > 0).astype(int)
        assert rank_svm_rfe(make_dataset(X, y)).tolist() == [2, 1]

    def test_half_chunks_on_eight(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((100, 8))
        y = (X[:, 0] > 0).astype(int)
        _, its = svm_rfe(X, y, step=0.5)
        assert [it["n_surviving"] for it in its] == [8, 4, 2]

    def test_single_steps(self, small_synth):
        d, _ = small_synth
        _, its = svm_rfe(d.features, d.labels)
        assert len(its) == d.n_features - 1
        assert all(len(it["removed"]) == 1 for it in its)


class TestRandomForest:
    def test_perfect_split_first(self):
        hits = 0
        for seed in range(20):
            d = label_plus_noise(100, 8, seed, at=6)
            hits += rank_random_forest(d, RankerSpec("RandomForest", {"n_trees": 100}), seed)[6] == 1
        assert hits >= 19

    def test_null_ranks_look_uniform(self):
        p, runs = 6, 50
        total = np.zeros(p)
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            d = make_dataset(rng.standard_normal((80, p)), rng.permutation(np.r_[np.zeros(40, int), np.ones(40, int)]))
            total += rank_random_forest(d, RankerSpec("RandomForest", {"n_trees": 50}), seed)
        mean = total / runs
        sd = np.sqrt((p * p - 1) / 12.0) / np.sqrt(runs)
        assert np.all(np.abs(mean - (p + 1) / 2) <= 3 * sd)


class TestEnsemble:
    def test_seven_runs(self, small_synth):
        e = run_ensemble(RankerSpec("Pearson"), small_synth[0], 7, 0.7, 0)
        assert isinstance(e, RankingEnsemble)
        assert e.rankings.shape == (7, small_synth[0].n_features) and len(set(e.seeds)) == 7

    def test_full_fraction_identical_runs(self, small_synth):
        e = run_ensemble(RankerSpec("Pearson"), small_synth[0], 4, 1.0, 2)
        assert np.all(e.rankings == e.rankings[0])

    @pytest.mark.parametrize("name", ["Pearson", "RandomForest", "SvmWrapper"])
    def test_threads_do_not_change_output(self, name, small_synth):
        d, _ = small_synth
        a = run_ensemble(FAST[name], d, 3, 0.7, 11, threads=1)
        b = run_ensemble(FAST[name], d, 3, 0.7, 11, threads=3)
        assert np.array_equal(a.rankings, b.rankings) and a.seeds == b.seeds

    def test_needs_two_runs(self, small_synth):
        with pytest.raises(ConfigError):
            run_ensemble(RankerSpec("Pearson"), small_synth[0], 1)
