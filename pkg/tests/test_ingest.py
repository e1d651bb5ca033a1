import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fsstab.classifiers import ClassifierSpec, cross_validate
from fsstab.core import Dataset
from fsstab.errors import (
    ConfigError,
    DegenerateSampleError,
    EmptyDataError,
    FormatError,
    GenerationError,
    SchemaError,
)
from fsstab.ingest import (
    CsvSchema,
    Standardizer,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    standardize,
    subsample,
    write_csv,
)
from fsstab.rankers.filters import pearson_scores


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_listwise_deletion(self, tmp_path):
        p = _write(tmp_path, "a,b,label\n1,2,1\n3,NA,0\n5,6,0\n7,8,1\n9,10,0\n")
        res = load_csv(p)
        assert res.dataset.n_instances == 4 and res.dropped == 1
        assert res.dataset.feature_names == ("a", "b")
        assert res.dataset.labels.tolist() == [1, 0, 1, 0]

    def test_empty_token_is_missing(self, tmp_path):
        res = load_csv(_write(tmp_path, "a,label\n1,1\n,0\n2,0\n"))
        assert res.dropped == 1

    def test_no_missing(self, tmp_path):
        res = load_csv(_write(tmp_path, "a,label\n1,1\n2,0\n3,0\n"))
        assert res.dataset.n_instances == 3 and res.dropped == 0

    def test_third_label_token(self, tmp_path):
        with pytest.raises(SchemaError):
            load_csv(_write(tmp_path, "a,label\n1,1\n2,0\n3,2\n"))

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(SchemaError):
            load_csv(_write(tmp_path, "a,b\n1,1\n"))

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        with pytest.raises(FormatError, match=r"line 3, column 'b'"):
            load_csv(_write(tmp_path, "a,b,label\n1,2,1\n3,x,0\n"))

    def test_all_rows_dropped(self, tmp_path):
        with pytest.raises(EmptyDataError):
            load_csv(_write(tmp_path, "a,label\nNA,1\n"))

    def test_custom_schema(self, tmp_path):
        p = _write(tmp_path, "x,y\n1,case\n2,control\n?,case\n")
        res = load_csv(p, CsvSchema(label_column="y", missing_tokens={"?"}, positive_label="case"))
        assert res.dataset.labels.tolist() == [1, 0] and res.dropped == 1

    def test_schema_rejects_colliding_positive_label(self):
        with pytest.raises(ConfigError):
            CsvSchema(positive_label="NA")

    def test_round_trip(self, tmp_path, small_synth):
        d, _ = small_synth
        p = tmp_path / "rt.csv"
        write_csv(d, p)
        back = load_csv(p).dataset
        assert back.feature_names == d.feature_names
        assert np.abs(back.features - d.features).max() <= 1e-12
        assert np.array_equal(back.labels, d.labels)


class TestStandardize:
    def test_hand_example(self):
        d = Dataset(("a", "c"), [[1, 5], [2, 5], [3, 5]], [0, 1, 0])
        z, st_ = standardize(d)
        assert np.allclose(z.features[:, 0], [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)
        assert z.features[:, 1].tolist() == [0, 0, 0]
        assert st_.scale[1] == 0

    def test_idempotent(self, small_synth):
        d, _ = small_synth
        z, _ = standardize(d)
        z2, _ = standardize(z)
        assert np.abs(z2.features - z.features).max() <= 1e-12

    @given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 5)),
                  elements=st.floats(-1e3, 1e3, allow_nan=False)))
    def test_fitted_parameters_round_trip(self, X):
        s = Standardizer.fit(X)
        Z = s.transform(X)
        back = Z * s.scale + s.mean
        # constant columns are recovered through the mean
        const = s.scale == 0
        assert np.allclose(back[:, ~const], X[:, ~const], atol=1e-9 * (1 + np.abs(X).max()))
        assert np.all(Z[:, const] == 0)
        assert np.allclose(Z[:, ~const].mean(axis=0), 0, atol=1e-9)


class TestSubsample:
    def test_size(self):
        rng = np.random.default_rng(0)
        d = Dataset(("a",), rng.standard_normal((3295, 1)), (rng.random(3295) < 0.32).astype(int))
        assert subsample(d, 0.7, 1).n_instances == 2306

    def test_full_fraction_is_permutation(self, small_synth):
        d, _ = small_synth
        s = subsample(d, 1.0, 3)
        key = lambda ds: sorted(map(tuple, np.column_stack([ds.features, ds.labels])))
        assert key(s) == key(d)

    def test_deterministic(self, small_synth):
        d, _ = small_synth
        assert subsample(d, 0.5, 9).same_as(subsample(d, 0.5, 9))
        assert not subsample(d, 0.5, 9).same_as(subsample(d, 0.5, 10))

    @given(st.floats(0.05, 1.0), st.integers(0, 2**31))
    def test_rows_are_sub_multiset(self, frac, seed):
        rng = np.random.default_rng(1)
        X = rng.integers(0, 3, size=(40, 2)).astype(float)
        y = np.r_[np.zeros(20, int), np.ones(20, int)]
        d = Dataset(("a", "b"), X, y)
        s = subsample(d, frac, seed)
        pool = [tuple(r) for r in np.column_stack([X, y])]
        for row in np.column_stack([s.features, s.labels]):
            pool.remove(tuple(row))
        assert set(s.labels.tolist()) == {0, 1}

    def test_degenerate(self):
        # one case among 10000 rows and 2-row draws: the retry budget runs out
        d = Dataset(("a",), np.arange(10000.0)[:, None], np.r_[np.ones(1, int), np.zeros(9999, int)])
        with pytest.raises(DegenerateSampleError):
            subsample(d, 0.0002, 0)

    def test_bad_fraction(self, small_synth):
        with pytest.raises(ConfigError):
            subsample(small_synth[0], 0.0, 0)


class TestSynthetic:
    def test_layout_and_truth(self):
        d, truth = generate_synthetic(SyntheticSpec(200, 3, n_noise=4, n_redundant=2, seed=1))
        assert d.feature_names[:3] == ("inf1", "inf2", "inf3")
        assert d.feature_names[3:5] == ("red1", "red2")
        assert truth == frozenset({0, 1, 2})

    def test_deterministic(self):
        spec = SyntheticSpec(150, 2, n_noise=3, snp_fraction=0.5, seed=4)
        a, _ = generate_synthetic(spec)
        b, _ = generate_synthetic(spec)
        assert a.features.tobytes() == b.features.tobytes() and a.labels.tobytes() == b.labels.tobytes()

    def test_null_model(self):
        d, _ = generate_synthetic(SyntheticSpec(3000, 3, n_noise=3, coefficients=[0, 0, 0], seed=2))
        rate = d.labels.mean()
        assert abs(rate - 1 / 3) < 4 * np.sqrt((1 / 3) * (2 / 3) / 3000)
        # |r| beyond 4 standard errors would be a detectable association
        assert pearson_scores(d.features, d.labels).max() < 4 / np.sqrt(3000)

    def test_prevalence_calibrated(self):
        d, _ = generate_synthetic(SyntheticSpec(4000, 5, coefficients=[1, -1, 2, 0.5, 1], seed=3))
        assert abs(d.labels.mean() - 1 / 3) < 0.05

    def test_strong_feature_alone(self):
        d, _ = generate_synthetic(SyntheticSpec(1000, 1, n_noise=2, coefficients=[10.0], seed=6))
        res = cross_validate(ClassifierSpec("LR"), d.take_features([0]), 5, 0)
        assert res.auc > 0.95

    def test_snp_columns_are_genotypes(self):
        d, _ = generate_synthetic(SyntheticSpec(300, 2, n_noise=8, snp_fraction=1.0, seed=8))
        assert set(np.unique(d.features)) <= {0.0, 1.0, 2.0}

    @given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 3))
    def test_truth_size(self, n_inf, n_noise, n_red):
        if n_inf + n_noise == 0 or (n_red and not n_inf):
            return
        d, truth = generate_synthetic(SyntheticSpec(120, n_inf, n_noise=n_noise, n_redundant=n_red, seed=1))
        assert len(truth) == n_inf and d.n_features == n_inf + n_noise + n_red

    def test_json(self):
        spec = SyntheticSpec(100, 2, n_noise=1, seed=3)
        assert SyntheticSpec.from_json(spec.to_json()) == spec
        with pytest.raises(ConfigError):
            SyntheticSpec.from_json(json.dumps({"n_instances": 10, "n_informative": 1, "bogus": 1}))
        with pytest.raises(ConfigError):
            SyntheticSpec.from_json("{}")

    def test_bad_specs(self):
        with pytest.raises(ConfigError):
            SyntheticSpec(100, 2, coefficients=[1.0])
        with pytest.raises(ConfigError):
            SyntheticSpec(100, 0, n_redundant=1, n_noise=1)

    def test_infeasible_calibration(self):
        with pytest.raises(GenerationError):
            generate_synthetic(SyntheticSpec(5, 1, coefficients=[0.0], prevalence=1e-30, seed=0))
