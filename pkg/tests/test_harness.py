"""Synthetic corruption benchmark: auxiliary generator and trial runner."""

import numpy as np
import pytest

from drillex.explain.harness import (CONDITIONS, correlated_auxiliary,
                                     synth_harness)


class TestCorrelatedAuxiliary:
    def test_rho_one_matches_target_ranking(self):
        rng = np.random.default_rng(5)
        targets = rng.normal(size=50)
        aux = correlated_auxiliary(rng, targets, 1.0)
        assert np.array_equal(np.argsort(aux), np.argsort(targets))

    def test_rho_zero_is_independent_of_targets(self):
        # With rho=0 the target values never enter the mixture, so the
        # output must be identical for two different target vectors when
        # the generator state matches.
        targets_a = np.arange(30, dtype=float)
        targets_b = -targets_a
        aux_a = correlated_auxiliary(np.random.default_rng(11), targets_a,
                                     0.0)
        aux_b = correlated_auxiliary(np.random.default_rng(11), targets_b,
                                     0.0)
        assert aux_a.shape == (30,)
        assert np.allclose(aux_a, aux_b)

    def test_intermediate_rho_tracks_rank_correlation(self):
        rng = np.random.default_rng(13)
        targets = rng.normal(size=400)
        aux = correlated_auxiliary(rng, targets, 0.8)
        rt = np.argsort(np.argsort(targets))
        ra = np.argsort(np.argsort(aux))
        spearman = np.corrcoef(rt, ra)[0, 1]
        assert 0.6 < spearman < 0.95

    def test_deterministic_for_fixed_seed(self):
        targets = np.linspace(-2, 2, 25)
        a = correlated_auxiliary(np.random.default_rng(17), targets, 0.5)
        b = correlated_auxiliary(np.random.default_rng(17), targets, 0.5)
        assert np.array_equal(a, b)

    def test_rho_out_of_range(self):
        rng = np.random.default_rng(19)
        with pytest.raises(ValueError):
            correlated_auxiliary(rng, np.zeros(5), -0.1)
        with pytest.raises(ValueError):
            correlated_auxiliary(rng, np.zeros(5), 1.5)


class TestSynthHarness:
    def test_fields_and_bounds(self):
        results = synth_harness(conditions=("missing",), trials=3,
                                groups=12, seed=3)
        assert {r.method for r in results} == \
            {"model", "sensitivity", "support"}
        for r in results:
            assert r.condition == "missing"
            assert r.rho == 1.0
            assert r.trials == 3
            assert 0 <= r.hits <= r.trials
            assert 0.0 <= r.accuracy <= 1.0

    def test_all_conditions_reported(self):
        results = synth_harness(trials=1, groups=10, seed=5)
        assert {r.condition for r in results} == set(CONDITIONS)

    def test_ablation_adds_outlier_method(self):
        results = synth_harness(conditions=("ablation",), trials=2,
                                groups=12, seed=9)
        assert {r.method for r in results} == \
            {"model", "sensitivity", "support", "outlier"}

    def test_repeatable_for_fixed_seed(self):
        kwargs = dict(conditions=("dup",), trials=3, groups=12, seed=21)
        first = synth_harness(**kwargs)
        second = synth_harness(**kwargs)
        assert [(r.method, r.hits) for r in first] == \
            [(r.method, r.hits) for r in second]

    def test_rho_sweep_labels(self):
        results = synth_harness(conditions=("up",), rhos=(0.0, 1.0),
                                trials=2, groups=12, seed=23)
        assert {r.rho for r in results} == {0.0, 1.0}

    def test_model_beats_baselines_small_run(self):
        results = synth_harness(conditions=("missing", "dup"), trials=8,
                                groups=40, seed=29)
        by = {(r.condition, r.method): r.accuracy for r in results}
        for cond in ("missing", "dup"):
            assert by[(cond, "model")] >= 0.75
            assert by[(cond, "model")] >= by[(cond, "sensitivity")]
            assert by[(cond, "model")] >= by[(cond, "support")]
