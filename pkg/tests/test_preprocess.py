import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keystress.errors import (
    AllFeaturesDropped,
    EmptyClassFeature,
    KTooLarge,
    SingleClassInput,
    UnknownFeature,
)
from keystress.features import FeatureMatrix, default_schema
from keystress.preprocess import (
    LEAKAGE_CAVEAT,
    PipelineConfig,
    PipelineParams,
    apply_matrix,
    apply_pipeline,
    chi2_scores,
    drop_low_std,
    drop_rare_features,
    fit_pipeline,
    fit_report,
    impute_for_inference,
    impute_medians,
    select_k_best,
)

from oracles import brute_chi2

NAN = np.nan


def matrix(cols: dict, labels, kinds=None):
    names = list(cols)
    X = np.array([cols[n] for n in names], dtype=float).T
    ids = [f"s{i}" for i in range(len(labels))]
    return FeatureMatrix(ids, list(labels), names, X, kinds)


class TestRare:
    def test_rare_special_keys_dropped(self, default_matrix):
        _, kept = drop_rare_features(default_matrix, 3)
        for name in ("mouse_right_dwell", "capslock_dwell", "esc_dwell", "alt_dwell"):
            assert name not in kept
        assert "typing_speed" in kept

    def test_present_everywhere_kept(self):
        m = matrix({"a": [1, 2, 3], "b": [NAN, NAN, 1]}, "NNS")
        _, kept = drop_rare_features(m, 3)
        assert kept == ["a"]

    def test_zero_threshold_identity(self):
        m = matrix({"a": [NAN, NAN, NAN], "b": [1, 2, 3]}, ["normal"] * 3)
        out, kept = drop_rare_features(m, 0)
        assert kept == ["a", "b"]
        np.testing.assert_array_equal(np.isnan(out.X), np.isnan(m.X))

    def test_all_dropped(self):
        with pytest.raises(AllFeaturesDropped):
            drop_rare_features(matrix({"a": [NAN, 1]}, ["normal", "stress"]), 3)


class TestLowStd:
    labels = ["normal"] * 3 + ["stress"] * 3

    def test_constant_dropped(self):
        m = matrix({"c": [5.0] * 6, "v": [1, 30, 7, 2, 40, 9]}, self.labels)
        _, kept = drop_low_std(m, min_std=0.5)
        assert kept == ["v"]

    def test_spread_kept(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0, 1, 3)
        b = rng.normal(0, 1, 3)
        n = (a - a.mean()) / a.std() * 12.1
        s = (b - b.mean()) / b.std() * 9.8
        m = matrix({"f": [*n, *s]}, self.labels)
        _, kept = drop_low_std(m, min_std=0.5)
        assert kept == ["f"]

    def test_or_versus_and(self):
        # flat within normal only
        m = matrix({"f": [1, 1, 1, 0, 10, 20], "g": [0, 5, 9, 1, 8, 15]}, self.labels)
        assert drop_low_std(m, min_std=0.5, rule="or")[1] == ["g"]
        assert drop_low_std(m, min_std=0.5, rule="and")[1] == ["f", "g"]

    def test_single_class(self):
        with pytest.raises(SingleClassInput):
            drop_low_std(matrix({"f": [1, 2, 3]}, ["normal"] * 3), min_std=0.1)

    def test_per_kind_thresholds(self):
        m = matrix({"t": [0, 0.5, 0.9, 0.1, 0.6, 0.8], "q": [0, 0.5, 0.9, 0.1, 0.6, 0.8]}, self.labels,
                   kinds={"t": "time", "q": "frequency"})
        _, kept = drop_low_std(m, min_std={"time": 1.0, "frequency": 0.01})
        assert kept == ["q"]

    def test_population_std_over_present_values(self):
        # normal present values [2, 4] -> population std 1.0, stays at threshold
        m = matrix({"f": [2, 4, NAN, 0, 3, 9]}, self.labels)
        assert drop_low_std(m, min_std=1.0)[1] == ["f"]
        with pytest.raises(AllFeaturesDropped):
            drop_low_std(m, min_std=1.0 + 1e-9)

    def test_synthetic_count_recorded(self, default_matrix):
        m1, _ = drop_rare_features(default_matrix, 3)
        m2, kept = drop_low_std(m1, min_std={"time": 1.0, "frequency": 0.01})
        print(f"synthetic: {len(default_matrix.names)} -> {len(m1.names)} -> {len(kept)}")
        assert set(kept) <= set(m1.names)


class TestImpute:
    def test_odd_median(self):
        m = matrix({"f": [1, 2, 10, 20, 40, NAN]}, ["normal"] * 2 + ["stress"] * 4)
        out, med = impute_medians(m)
        assert out.X[5, 0] == 20
        assert med["stress"]["f"] == 20

    def test_even_median(self):
        m = matrix({"f": [10, 20, NAN, 1, 2]}, ["normal"] * 3 + ["stress"] * 2)
        out, med = impute_medians(m)
        assert out.X[2, 0] == 15
        assert med["normal"]["f"] == 15

    def test_dense_unchanged(self):
        m = matrix({"f": [1, 2, 3, 4]}, "normal normal stress stress".split())
        out, _ = impute_medians(m)
        np.testing.assert_array_equal(out.X, m.X)

    def test_empty_class_feature(self):
        with pytest.raises(EmptyClassFeature):
            impute_medians(matrix({"f": [1, 2, NAN, NAN]}, "normal normal stress stress".split()))

    @settings(max_examples=50)
    @given(st.lists(st.one_of(st.none(), st.floats(-1e6, 1e6)), min_size=6, max_size=6))
    def test_present_untouched_and_idempotent(self, vals):
        col = [NAN if v is None else v for v in vals]
        labels = ["normal"] * 3 + ["stress"] * 3
        if all(math.isnan(v) for v in col[:3]) or all(math.isnan(v) for v in col[3:]):
            return
        m = matrix({"f": col}, labels)
        out, _ = impute_medians(m)
        present = ~np.isnan(m.X)
        np.testing.assert_array_equal(out.X[present], m.X[present])
        again, _ = impute_medians(out)
        np.testing.assert_array_equal(again.X, out.X)


def fitted_params():
    cols = {
        "typing_speed": [100, 110, 120, 130, 200, 210, 220, 230],
        "то_interval": [60, 62, NAN, 70, 30, NAN, 35, 40],
        "ст_flight": [150, 160, 170, 155, 120, 125, 118, 111],
        "об_latency": [-10, 5, 8, 20, -30, -20, -25, -5],
    }
    labels = ["normal"] * 4 + ["stress"] * 4
    return matrix(cols, labels, kinds={n: ("frequency" if n == "typing_speed" else "time") for n in cols})


class TestInference:
    def test_absent_filled_from_normal_medians(self):
        _, params = fit_pipeline(fitted_params(), PipelineConfig(k=4))
        out = impute_for_inference({"то_interval": None}, params)
        assert out["то_interval"] == params.medians["normal"]["то_interval"] == 62.0

    def test_present_unchanged(self):
        _, params = fit_pipeline(fitted_params(), PipelineConfig(k=4))
        vec = {n: 1.5 for n in params.kept_features_stage2}
        assert impute_for_inference(vec, params) == vec

    def test_unknown_feature(self):
        _, params = fit_pipeline(fitted_params(), PipelineConfig(k=2))
        with pytest.raises(UnknownFeature):
            impute_for_inference({"nope": 1.0}, params)

    def test_pooled_policy(self):
        _, params = fit_pipeline(fitted_params(), PipelineConfig(k=4))
        out = impute_for_inference({}, params, "pooled_median")
        assert out["то_interval"] == float(np.median([60, 62, 70, 30, 35, 40]))


class TestChi2:
    def test_identical_classes_zero(self):
        m = matrix({"f": [1, 2, 1, 2]}, "normal normal stress stress".split())
        assert chi2_scores(m)["f"] == 0

    def test_hand_example(self):
        m = matrix({"f": [1, 1, 3, 3]}, "normal normal stress stress".split())
        assert chi2_scores(m)["f"] == 2.0

    def test_all_zero(self):
        m = matrix({"f": [0, 0, 0, 0]}, "normal normal stress stress".split())
        assert chi2_scores(m)["f"] == 0.0

    def test_negative_values_shifted(self):
        m = matrix({"f": [-3, -1, 1, 3]}, "normal normal stress stress".split())
        assert chi2_scores(m)["f"] == pytest.approx(brute_chi2([-3, -1, 1, 3], m.labels))

    def test_rejects_sparse(self):
        with pytest.raises(ValueError):
            chi2_scores(matrix({"f": [1, NAN, 2, 3]}, "normal normal stress stress".split()))

    def test_random_matrices_match_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n, d = int(rng.integers(2, 21)), int(rng.integers(1, 11))
            labels = list(rng.choice(["normal", "stress"], n))
            X = rng.normal(0, 50, (n, d)) * rng.integers(0, 2, (1, d))
            m = FeatureMatrix([str(i) for i in range(n)], labels, [f"f{j}" for j in range(d)], X)
            got = chi2_scores(m)
            for j in range(d):
                assert abs(got[f"f{j}"] - brute_chi2(X[:, j], labels)) <= 1e-9 * max(1.0, got[f"f{j}"])

    @settings(max_examples=50)
    @given(st.lists(st.floats(0, 1000), min_size=4, max_size=12), st.floats(0.01, 100))
    def test_scaling_scales_score(self, vals, c):
        labels = ["normal", "stress"] * (len(vals) // 2) + ["normal"] * (len(vals) % 2)
        a = chi2_scores(matrix({"f": vals}, labels))["f"]
        b = chi2_scores(matrix({"f": [v * c for v in vals]}, labels))["f"]
        assert b == pytest.approx(a * c, rel=1e-9, abs=1e-9)

    def test_non_negative(self, default_matrix):
        _, params = fit_pipeline(default_matrix)
        assert all(v >= 0 for v in params.chi2_scores.values())


class TestSelect:
    def test_all_features_sorted(self):
        scores = {"a": 1.0, "b": 3.0, "c": 2.0}
        assert select_k_best(scores, 3, order=["a", "b", "c"]) == ["b", "c", "a"]

    def test_tie_goes_to_schema_order(self):
        names = default_schema().names
        scores = {names[10]: 5.0, names[3]: 5.0, names[0]: 1.0}
        assert select_k_best(scores, 2) == [names[3], names[10]]

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            select_k_best({"a": 1.0}, 2)

    def test_default_k(self):
        assert len(select_k_best({c: float(i) for i, c in enumerate("abcdef")}, order=list("abcdef"))) == 3

    @settings(max_examples=50)
    @given(st.permutations(list(range(8))), st.lists(st.integers(0, 3), min_size=8, max_size=8))
    def test_permutation_invariant(self, perm, vals):
        canon = [f"f{i}" for i in range(8)]
        scores = {canon[i]: float(vals[i]) for i in range(8)}
        shuffled = {canon[i]: scores[canon[i]] for i in perm}
        assert select_k_best(shuffled, 3, order=canon) == select_k_best(scores, 3, order=canon)


class TestPipeline:
    def test_dense_training_row_replays(self):
        m = fitted_params()
        dense = m.columns(["typing_speed", "ст_flight", "об_latency"])
        reduced, params = fit_pipeline(dense, PipelineConfig(k=2))
        for i in range(len(dense)):
            vec = {n: float(v) for n, v in zip(dense.names, dense.X[i])}
            np.testing.assert_array_equal(apply_pipeline(vec, params), reduced.X[i])

    def test_all_absent_vector(self):
        reduced, params = fit_pipeline(fitted_params(), PipelineConfig(k=3))
        out = apply_pipeline({}, params)
        expected = [params.medians["normal"][n] - params.shift_offsets[n] for n in params.selected_features]
        np.testing.assert_array_equal(out, expected)

    def test_synthetic_k3_score_order(self, default_matrix):
        reduced, params = fit_pipeline(default_matrix)
        assert reduced.X.shape == (len(default_matrix), 3)
        assert reduced.names == params.selected_features
        # independent chi2 over the class-imputed stage-2 matrix
        stage2 = default_matrix.columns(params.kept_features_stage2)
        imputed, _ = impute_medians(stage2)
        oracle = {n: brute_chi2(imputed.X[:, j], imputed.labels) for j, n in enumerate(imputed.names)}
        ranked = sorted(oracle, key=lambda n: (-oracle[n], params.kept_features_stage2.index(n)))
        assert ranked[:3] == params.selected_features
        scores = [params.chi2_scores[n] for n in params.selected_features]
        assert scores == sorted(scores, reverse=True)
        assert (reduced.X >= 0).all()

    def test_subset_chain_and_medians(self, default_matrix):
        _, p = fit_pipeline(default_matrix)
        schema = set(default_schema().names)
        assert set(p.selected_features) <= set(p.kept_features_stage2) <= set(p.kept_features_stage1) <= schema
        for c in ("normal", "stress"):
            assert set(p.medians[c]) == set(p.kept_features_stage2)

    def test_deterministic_and_serializable(self, default_matrix):
        _, a = fit_pipeline(default_matrix)
        _, b = fit_pipeline(default_matrix)
        assert a.to_json() == b.to_json()
        back = PipelineParams.from_json(a.to_json())
        assert back == a
        assert back.hash() == a.hash()

    def test_apply_matrix_matches_rows(self, default_matrix):
        _, params = fit_pipeline(default_matrix)
        out = apply_matrix(default_matrix.rows(range(5)), params)
        for i in range(5):
            vec = {n: (None if np.isnan(v) else v) for n, v in zip(default_matrix.names, default_matrix.X[i])}
            np.testing.assert_array_equal(out.X[i], apply_pipeline(vec, params))

    def test_report_has_caveat(self, default_matrix):
        _, params = fit_pipeline(default_matrix)
        text = fit_report(params, 189)
        assert LEAKAGE_CAVEAT in text
        assert "189" in text

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PipelineConfig(std_rule="xor")
        with pytest.raises(ValueError):
            PipelineConfig(inference_policy="stress_median")
