"""Factorised EM training against the dense reference implementation."""

import numpy as np
import pytest

from conftest import make_instance
from drillex import mlm
from drillex.errors import UnknownGroup
from drillex.factorizer import build, cartesian_keys
from drillex.features import FeatureMap, build_view, constant_feature
from oracles import dense_em_fit, dense_predict


def _rel(got, want):
    got = np.atleast_1d(np.asarray(got, dtype=float))
    want = np.atleast_1d(np.asarray(want, dtype=float))
    scale = max(float(np.abs(want).max()), 1.0)
    return float(np.abs(got - want).max()) / scale


def _dense_twin(inst, max_iterations=20):
    return dense_em_fit(inst.x, inst.y, inst.slices, inst.z_idx,
                        inst.include, max_iterations=max_iterations)


class TestInit:
    def test_matches_dense_ridge_least_squares(self):
        rng = np.random.default_rng(211)
        for _ in range(20):
            inst = make_instance(rng)
            params = mlm.init(inst.view, aggs=inst.aggs)
            want = _dense_twin(inst, max_iterations=0)
            assert _rel(params.beta, want.beta) <= 1e-8
            assert _rel(params.sigma2, want.sigma2) <= 1e-8
            assert _rel(params.sigma_b, want.sigma_b) <= 1e-8

    def test_noiseless_linear_target_recovered(self):
        store = build([{"a": f"a{i}", "b": f"b{i % 3}"}
                       for i in range(6)],
                      [("ha", ("a",)), ("hb", ("b",))])
        maps = [constant_feature(store),
                FeatureMap("b", "custom",
                           {f"b{i}": float(i) for i in range(3)}, "fb")]
        keys = list(cartesian_keys(store))
        target = {k: 2.0 + 3.0 * float(k[1][1:]) for k in keys}
        view = build_view(store, maps, target)
        params = mlm.init(view)
        assert params.beta == pytest.approx([2.0, 3.0], abs=1e-4)
        assert params.sigma2 <= 1e-6


class TestFit:
    def test_matches_dense_reference(self):
        rng = np.random.default_rng(223)
        for _ in range(25):
            inst = make_instance(rng)
            fitted = mlm.fit(inst.view, aggs=inst.aggs)
            want = _dense_twin(inst)
            assert fitted.iterations == want.iterations
            assert _rel(fitted.params.beta, want.beta) <= 1e-6
            assert _rel(fitted.params.sigma_b, want.sigma_b) <= 1e-6
            assert _rel(fitted.params.sigma2, want.sigma2) <= 1e-6
            assert _rel(fitted.posteriors.mus, np.stack(want.mus)) <= 1e-6

    def test_matches_dense_reference_with_exclusions(self):
        rng = np.random.default_rng(227)
        for _ in range(15):
            inst = make_instance(rng, exclusions=True)
            fitted = mlm.fit(inst.view, aggs=inst.aggs)
            want = _dense_twin(inst)
            assert fitted.iterations == want.iterations
            assert _rel(fitted.params.beta, want.beta) <= 1e-6
            assert _rel(fitted.params.sigma2, want.sigma2) <= 1e-6

    def test_loglik_non_decreasing(self):
        rng = np.random.default_rng(229)
        for _ in range(15):
            inst = make_instance(rng)
            fitted = mlm.fit(inst.view, aggs=inst.aggs)
            lls = fitted.logliks
            assert len(lls) == fitted.iterations + 1
            for prev, cur in zip(lls, lls[1:]):
                assert cur >= prev - 1e-8

    def test_zero_iterations_returns_init(self):
        rng = np.random.default_rng(233)
        inst = make_instance(rng)
        config = mlm.TrainConfig(max_iterations=0)
        fitted = mlm.fit(inst.view, config, aggs=inst.aggs)
        params = mlm.init(inst.view, config, aggs=inst.aggs)
        assert fitted.iterations == 0
        np.testing.assert_allclose(fitted.params.beta, params.beta)
        np.testing.assert_allclose(fitted.params.sigma2, params.sigma2)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            mlm.TrainConfig(max_iterations=-1)
        with pytest.raises(ValueError):
            mlm.TrainConfig(ridge=0.0)


class TestSteps:
    def test_e_step_zero_residuals_give_zero_means(self):
        rng = np.random.default_rng(239)
        inst = make_instance(rng)
        params = mlm.init(inst.view, aggs=inst.aggs)
        # Force y = X beta exactly by rewriting the targets.
        x = inst.x
        y = x @ params.beta
        keys = list(cartesian_keys(inst.view.store))
        target = {k: float(v) for k, v in zip(keys, y)}
        view = build_view(inst.view.store, inst.view.maps, target,
                          z_mask=inst.view.z_mask)
        posteriors = mlm.e_step(params, view, aggs=inst.aggs)
        np.testing.assert_allclose(posteriors.mus, 0.0, atol=1e-9)

    def test_single_cluster_sigma_is_second_moment(self):
        store = build([{"a": f"a{i}"} for i in range(5)], [("h", ("a",))])
        maps = [constant_feature(store)]
        target = {(f"a{i}",): float(i * i) for i in range(5)}
        view = build_view(store, maps, target)
        fitted = mlm.fit(view, mlm.TrainConfig(max_iterations=3))
        mu = fitted.posteriors.mus[0]
        v = fitted.posteriors.vs[0]
        np.testing.assert_allclose(fitted.params.sigma_b,
                                   v + np.outer(mu, mu))

    def test_second_moments_identity(self):
        rng = np.random.default_rng(241)
        inst = make_instance(rng)
        fitted = mlm.fit(inst.view, aggs=inst.aggs)
        ebb = fitted.posteriors.second_moments()
        for i in range(len(fitted.posteriors.mus)):
            mu = fitted.posteriors.mus[i]
            np.testing.assert_allclose(
                ebb[i], fitted.posteriors.vs[i] + np.outer(mu, mu))


class TestPredict:
    def test_matches_dense_prediction(self):
        rng = np.random.default_rng(251)
        for _ in range(15):
            inst = make_instance(rng)
            fitted = mlm.fit(inst.view, aggs=inst.aggs)
            want = _dense_twin(inst)
            z = np.array(inst.z_idx, dtype=int)
            for row, key in zip(range(inst.view.n), inst.expansion):
                cluster = next(i for i, (s, e) in enumerate(inst.slices)
                               if s <= row < e)
                expect = dense_predict(inst.x[row], z, want.beta,
                                       want.mus[cluster])
                assert _rel(mlm.predict(fitted, key), expect) <= 1e-6

    def test_unknown_group_rejected(self):
        rng = np.random.default_rng(257)
        inst = make_instance(rng)
        fitted = mlm.fit(inst.view, aggs=inst.aggs)
        bad = tuple("zzz" for _ in inst.order)
        with pytest.raises(UnknownGroup):
            mlm.predict(fitted, bad)
        with pytest.raises(UnknownGroup):
            mlm.predict(fitted, inst.expansion[0][:-1])

    def test_input_row_order_invariance(self):
        # The store sorts values, so shuffling the fact rows must leave the
        # fitted model and every prediction unchanged.
        rng = np.random.default_rng(263)
        rows = [{"a": f"a{i % 3}", "b": f"b{i % 2}"} for i in range(6)]
        blocks = [("ha", ("a",)), ("hb", ("b",))]
        fa = {f"a{i}": float(rng.normal()) for i in range(3)}
        fb = {f"b{i}": float(rng.normal()) for i in range(2)}
        targets = {(a, b): float(rng.normal()) for a in fa for b in fb}

        def fit_for(row_order):
            store = build(row_order, blocks)
            maps = [constant_feature(store),
                    FeatureMap("a", "custom", fa, "fa"),
                    FeatureMap("b", "custom", fb, "fb")]
            target = {k: targets[k] for k in cartesian_keys(store)}
            return mlm.fit(build_view(store, maps, target))

        shuffled = list(rows)
        rng.shuffle(shuffled)
        fit_fwd = fit_for(rows)
        fit_shuf = fit_for(shuffled)
        np.testing.assert_allclose(fit_shuf.params.beta, fit_fwd.params.beta)
        for key in targets:
            assert _rel(mlm.predict(fit_shuf, key),
                        mlm.predict(fit_fwd, key)) <= 1e-12
