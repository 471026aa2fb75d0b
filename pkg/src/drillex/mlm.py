"""Multi-level linear model fitted by EM over the factorised feature matrix.

Per cluster i the model is y_i = X_i β + Z_i b_i + ε with b_i ~ N(0, Σ) and
ε ~ N(0, σ² I); Z_i is the masked column subset of X_i.  All data access goes
through the factorised operations: the global gram and Xᵀy once, per-cluster
grams once, and one left- and right-multiplication sweep per iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aggregates import DecompAggs, compute_all
from .errors import DegenerateDesign, SingularSigma, UnknownGroup
from .factorizer import row_iter
from .features import FeatureMatrixView
from .fmatrix import (ClusterLayout, cluster_gram_iter, cluster_layout,
                      cluster_left_iter, cluster_right_iter, gram, left_mul)

SIGMA2_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 20
    ridge: float = 1e-6
    tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.max_iterations < 0 or self.ridge <= 0 or self.tol <= 0:
            raise ValueError("train configuration values must be positive")


@dataclass
class ModelParams:
    beta: np.ndarray
    sigma_b: np.ndarray
    sigma2: float


@dataclass
class ClusterPosteriors:
    """E[b_i] and posterior covariances, one row/page per cluster."""

    mus: np.ndarray  # (G, m_z)
    vs: np.ndarray   # (G, m_z, m_z)

    def second_moments(self) -> np.ndarray:
        return self.vs + np.einsum("gi,gj->gij", self.mus, self.mus)


@dataclass
class FittedModel:
    params: ModelParams
    posteriors: ClusterPosteriors
    view: FeatureMatrixView
    layout: ClusterLayout
    logliks: list[float] = field(default_factory=list)
    iterations: int = 0
    _key_index: dict | None = None

    def cluster_of(self, prefix_key: tuple) -> int:
        if self._key_index is None:
            self._key_index = self.layout.cluster_index()
        try:
            return self._key_index[prefix_key]
        except KeyError:
            raise UnknownGroup(f"no cluster {prefix_key!r}") from None


def _solve(gram_matrix: np.ndarray, rhs: np.ndarray, ridge: float,
           error: type[Exception]) -> np.ndarray:
    try:
        return np.linalg.solve(
            gram_matrix + ridge * np.eye(gram_matrix.shape[0]), rhs)
    except np.linalg.LinAlgError as exc:
        raise error(str(exc)) from exc


class _Prepared:
    """Everything fixed across EM iterations, via factorised ops only."""

    def __init__(self, view: FeatureMatrixView, aggs: DecompAggs | None,
                 config: TrainConfig) -> None:
        self.view = view
        self.config = config
        aggs = aggs if aggs is not None else compute_all(view.store)
        self.layout = cluster_layout(view)
        self.z_idx = np.array(view.z_mask, dtype=int)
        self.include = view.include
        # Per-cluster grams, kept; the shared buffer is copied per cluster.
        self.cluster_grams = np.stack([
            g.copy() for _, g in cluster_gram_iter(view, layout=self.layout)
        ]) if self.layout.count else np.zeros((0, view.m, view.m))
        self.xtx = gram(view, aggs)
        masked_y = view.y if self.include is None \
            else view.y * self.include
        self.xty = left_mul(masked_y[None, :], view, aggs)[0]
        # Deletion corrections: excluded rows leave the grams and counts.
        self.sizes = self.layout.sizes.astype(float)
        if self.include is not None:
            self._apply_exclusions()
        self.n_inc = int(self.include.sum()) if self.include is not None \
            else view.n
        self.ztz = self.cluster_grams[:, self.z_idx[:, None], self.z_idx]

    def _apply_exclusions(self) -> None:
        view = self.view
        excluded = np.flatnonzero(~self.include)
        if len(excluded) == 0:
            return
        bounds = self.layout.starts + self.layout.sizes
        targets = set(excluded.tolist())
        current: dict[str, object] = {}
        x = np.empty(view.m)
        for i, delta in enumerate(row_iter(view.store)):
            current.update(delta)
            if i not in targets:
                continue
            for j, fmap in enumerate(view.maps):
                x[j] = fmap.mapping[current[fmap.attribute]]
            correction = np.outer(x, x)
            cluster = int(np.searchsorted(bounds, i, side="right"))
            self.cluster_grams[cluster] -= correction
            self.xtx -= correction
            self.sizes[cluster] -= 1.0

    # -- factorised sweeps ---------------------------------------------------

    def residuals(self, beta: np.ndarray) -> np.ndarray:
        from .fmatrix import right_mul
        r = self.view.y - right_mul(self.view, beta[:, None])[:, 0]
        if self.include is not None:
            r = r * self.include
        return r

    def cluster_ztr(self, resid: np.ndarray) -> np.ndarray:
        slices = (resid[self.layout.slice_of(i)]
                  for i in range(self.layout.count))
        out = np.empty((self.layout.count, len(self.z_idx)))
        for i, v in cluster_left_iter(self.view, slices, cols=self.z_idx,
                                      layout=self.layout):
            out[i] = v
        return out

    def z_times(self, mus: np.ndarray) -> np.ndarray:
        """Stacked Z_i μ_i over all rows (zero outside the masked columns)."""
        cvecs = []
        for i in range(self.layout.count):
            c = np.zeros(self.view.m)
            c[self.z_idx] = mus[i]
            cvecs.append(c)
        zb = np.empty(self.view.n)
        for i, rows in cluster_right_iter(self.view, cvecs,
                                          layout=self.layout):
            zb[self.layout.slice_of(i)] = rows
        return zb


def init(view: FeatureMatrixView, config: TrainConfig = TrainConfig(),
         aggs: DecompAggs | None = None) -> ModelParams:
    """Ridge least squares for β; residual variance seeds σ² and Σ."""
    prep = _Prepared(view, aggs, config)
    return _init(prep)


def _init(prep: _Prepared) -> ModelParams:
    config = prep.config
    beta = _solve(prep.xtx, prep.xty, config.ridge, DegenerateDesign)
    if not np.all(np.isfinite(beta)):
        raise DegenerateDesign("non-finite least-squares solution")
    resid = prep.residuals(beta)
    sigma2 = max(float(resid @ resid) / max(prep.n_inc, 1), SIGMA2_FLOOR)
    sigma_b = np.eye(len(prep.z_idx)) * sigma2
    return ModelParams(beta, sigma_b, sigma2)


def _e_step(params: ModelParams, prep: _Prepared) -> ClusterPosteriors:
    mz = len(prep.z_idx)
    eye = np.eye(mz)
    try:
        sig_inv = np.linalg.solve(
            params.sigma_b + prep.config.ridge * eye, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularSigma(str(exc)) from exc
    resid = prep.residuals(params.beta)
    ztr = prep.cluster_ztr(resid)
    mus = np.empty((prep.layout.count, mz))
    vs = np.empty((prep.layout.count, mz, mz))
    for i in range(prep.layout.count):
        v = np.linalg.solve(prep.ztz[i] / params.sigma2 + sig_inv, eye)
        vs[i] = v
        mus[i] = v @ ztr[i] / params.sigma2
    return ClusterPosteriors(mus, vs)


def _m_step(posteriors: ClusterPosteriors, prep: _Prepared,
            aggs_xty_left) -> ModelParams:
    config = prep.config
    zb = prep.z_times(posteriors.mus)
    w = prep.view.y - zb
    if prep.include is not None:
        w = w * prep.include
    rhs = aggs_xty_left(w)
    beta = _solve(prep.xtx, rhs, config.ridge, DegenerateDesign)
    ebb = posteriors.second_moments()
    sigma_b = ebb.mean(axis=0) if len(ebb) else np.zeros((0, 0))
    resid = prep.residuals(beta)
    acc = float(resid @ resid)
    acc += float(np.einsum("gij,gji->", prep.ztz, ebb))
    acc -= 2.0 * float(resid @ zb)
    sigma2 = max(acc / max(prep.n_inc, 1), SIGMA2_FLOOR)
    return ModelParams(beta, sigma_b, sigma2)


def _loglik(params: ModelParams, prep: _Prepared) -> float:
    """Observed-data log-likelihood via per-cluster Woodbury identities."""
    mz = len(prep.z_idx)
    eye = np.eye(mz)
    resid = prep.residuals(params.beta)
    ztr = prep.cluster_ztr(resid)
    sig_inv = np.linalg.solve(params.sigma_b + prep.config.ridge * eye, eye)
    total = 0.0
    for i in range(prep.layout.count):
        n_i = prep.sizes[i]
        if n_i <= 0:
            continue
        r = resid[prep.layout.slice_of(i)]
        inner = eye + prep.ztz[i] @ params.sigma_b / params.sigma2
        _, logdet_inner = np.linalg.slogdet(inner)
        logdet = n_i * math.log(params.sigma2) + logdet_inner
        core = np.linalg.solve(params.sigma2 * sig_inv + prep.ztz[i], ztr[i])
        quad = (float(r @ r) - float(ztr[i] @ core)) / params.sigma2
        total += -0.5 * (n_i * math.log(2 * math.pi) + logdet + quad)
    return total


def fit(view: FeatureMatrixView, config: TrainConfig = TrainConfig(),
        aggs: DecompAggs | None = None) -> FittedModel:
    """Alternate E and M steps until convergence or the iteration cap.

    The observed-data log-likelihood is recorded once per iteration and is
    non-decreasing up to floating-point slack.
    """
    prep = _Prepared(view, aggs, config)
    aggs_obj = aggs if aggs is not None else compute_all(view.store)

    def xt_times(vec: np.ndarray) -> np.ndarray:
        return left_mul(vec[None, :], view, aggs_obj)[0]

    params = _init(prep)
    logliks = [_loglik(params, prep)]
    mz = len(prep.z_idx)
    posteriors = ClusterPosteriors(
        np.zeros((prep.layout.count, mz)),
        np.broadcast_to(params.sigma_b,
                        (prep.layout.count, mz, mz)).copy())
    iterations = 0
    for _ in range(config.max_iterations):
        prev = np.concatenate([params.beta, params.sigma_b.ravel(),
                               [params.sigma2]])
        posteriors = _e_step(params, prep)
        params = _m_step(posteriors, prep, xt_times)
        iterations += 1
        logliks.append(_loglik(params, prep))
        cur = np.concatenate([params.beta, params.sigma_b.ravel(),
                              [params.sigma2]])
        if np.max(np.abs(cur - prev)) < config.tol:
            break
    return FittedModel(params, posteriors, view, prep.layout, logliks,
                       iterations)


def e_step(params: ModelParams, view: FeatureMatrixView,
           config: TrainConfig = TrainConfig(),
           aggs: DecompAggs | None = None) -> ClusterPosteriors:
    return _e_step(params, _Prepared(view, aggs, config))


def m_step(posteriors: ClusterPosteriors, view: FeatureMatrixView,
           config: TrainConfig = TrainConfig(),
           aggs: DecompAggs | None = None) -> ModelParams:
    prep = _Prepared(view, aggs, config)
    aggs_obj = aggs if aggs is not None else compute_all(view.store)

    def xt_times(vec: np.ndarray) -> np.ndarray:
        return left_mul(vec[None, :], view, aggs_obj)[0]

    return _m_step(posteriors, prep, xt_times)


def predict(model: FittedModel, group_key: tuple) -> float:
    """x·β plus the group's cluster random effect, x restricted to Z."""
    view = model.view
    order = view.store.attribute_order
    if len(group_key) != len(order):
        raise UnknownGroup(f"key {group_key!r} does not match {order}")
    cluster = model.cluster_of(tuple(group_key[:-1]))
    if group_key[-1] not in model.layout.children[cluster]:
        raise UnknownGroup(f"{group_key!r} is not in the expansion")
    by_attr = dict(zip(order, group_key))
    x = np.array([m.mapping[by_attr[m.attribute]] for m in view.maps])
    z = np.array(view.z_mask, dtype=int)
    return float(x @ model.params.beta +
                 x[z] @ model.posteriors.mus[cluster])
