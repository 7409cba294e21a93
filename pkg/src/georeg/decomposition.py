"""Geometric test error and its Monte-Carlo bias-variance decomposition.

The geometric test error of a fitted model at input x is (delta_x . beta)^2,
the squared label error committed by replacing x with what the model
perceives, x_hat = P_f x.  Averaged over training sets D it splits as

    E_D[(x.beta - x_hat.beta)^2] = Bias^2 + Var
    Bias^2 = E[(x - x_hat).beta]^2          Var = Var_D[x_hat.beta]

Both are estimated with PAIRED training sets: each replica draws one teacher
and one weight matrix, then two independent training sets D1, D2 and a test
set.  Because the two fits are exchangeable and independent given the
teacher, products across the pair are unbiased for the squared means:

    Bias^2 ~ mean[(T - A1)(T - A2)]      A_k = x_hat_k . beta,  T = x . beta
    Var    ~ mean[A1^2] - mean[A1 A2]

bias_variance_mc reports E_geom and the total test error from the D1 fit
alone, keeping the estimator exactly the paired-product form above.  The
sweep driver in experiments.py aggregates the same replicas symmetrically
over the pair instead, which changes no expectation value (exchangeability)
but tightens the standard errors it reports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    ExperimentConfig,
    STREAM_TEACHER,
    STREAM_TEST,
    STREAM_TRAIN,
    STREAM_TRAIN_PAIR,
    STREAM_WEIGHTS,
)
from .errors import ConfigurationError, ShapeError
from .geometry import FeatureOperatorAnalysis, feature_operator_from_model
from .linreg_core import (
    Dataset,
    FeatureMap,
    FittedModel,
    TeacherModel,
    apply_features,
    fit,
    make_feature_map,
    predict,
    sample_dataset,
    sample_teacher,
    training_error,
)

# ------------------------------------------------------------ per-point


def geometric_test_error(
    analysis: FeatureOperatorAnalysis, beta: np.ndarray, x: np.ndarray
) -> float:
    """(delta_x . beta)^2 with delta_x = (I - P_f) x."""
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    n_f = analysis.p_f.shape[0]
    if x.shape != (n_f,) or beta.shape != (n_f,):
        raise ShapeError(
            f"x and beta must have shape ({n_f},), got {x.shape} and {beta.shape}"
        )
    delta_x = x - analysis.p_f @ x
    return float((delta_x @ beta) ** 2)


def error_reduction_check(
    model: FittedModel, teacher: TeacherModel, data: Dataset, x: np.ndarray
) -> dict:
    """Compare total and geometric per-point test error at x.

    total = (y*(x) - yhat(x))^2 against the noiseless teacher label, and
    geometric = ((x - P_f x) . beta)^2.  The gap collapses to round-off when
    the noise, label nonlinearity, and feature nonlinearity all vanish; for
    a nonlinear map or noisy labels it is reported as-is.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (teacher.beta.shape[0],):
        raise ShapeError(f"x must have shape ({teacher.beta.shape[0]},), got {x.shape}")
    y_true = float(teacher.y_star(x[None, :])[0])
    y_hat = predict(model, x)
    p_f = feature_operator_from_model(model, data.X)
    geometric = float(((x - p_f @ x) @ teacher.beta) ** 2)
    total = (y_true - y_hat) ** 2
    return {"total": total, "geometric": geometric, "gap": total - geometric}


# ------------------------------------------------------------- replicas


@dataclass(frozen=True)
class PairedDraw:
    """One replica: shared teacher/weights, two training fits, one test set."""

    teacher: TeacherModel
    feature_map: FeatureMap
    train_1: Dataset
    train_2: Dataset
    test: Dataset
    model_1: FittedModel
    model_2: FittedModel


def draw_paired_replica(
    config: ExperimentConfig, grid_idx: int, replica_idx: int
) -> PairedDraw:
    """Draw and fit one paired replica on deterministic per-index streams.

    Streams are keyed (grid_idx, replica_idx, stream id), so any execution
    order — sequential, threaded, or process pools — produces identical
    samples for the same seed.
    """
    key = (grid_idx, replica_idx)
    teacher = sample_teacher(config, key + (STREAM_TEACHER,))
    fmap = make_feature_map(config, key + (STREAM_WEIGHTS,))
    d1 = sample_dataset(config, teacher, key + (STREAM_TRAIN,))
    d2 = sample_dataset(config, teacher, key + (STREAM_TRAIN_PAIR,))
    dt = sample_dataset(
        config, teacher, key + (STREAM_TEST,), n_rows=config.effective_m_test
    )
    m1 = fit(apply_features(fmap, d1.X), d1.y, lam=config.lam, feature_map=fmap)
    m2 = fit(apply_features(fmap, d2.X), d2.y, lam=config.lam, feature_map=fmap)
    return PairedDraw(
        teacher=teacher,
        feature_map=fmap,
        train_1=d1,
        train_2=d2,
        test=dt,
        model_1=m1,
        model_2=m2,
    )


def paired_projections(draw: PairedDraw) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(T, A1, A2) over the test rows: true signal x.beta and both x_hat.beta."""
    beta = draw.teacher.beta
    p_f_1 = feature_operator_from_model(draw.model_1, draw.train_1.X)
    p_f_2 = feature_operator_from_model(draw.model_2, draw.train_2.X)
    t = draw.test.X @ beta
    a1 = draw.test.X @ (p_f_1.T @ beta)
    a2 = draw.test.X @ (p_f_2.T @ beta)
    return t, a1, a2


# ------------------------------------------------------------ estimator


@dataclass(frozen=True)
class BiasVarianceEstimate:
    """Monte-Carlo decomposition of the geometric test error."""

    geometric_error: float
    bias_squared: float
    variance: float
    total_test_error: float
    train_error: float
    n_replicas: int
    n_test_points: int
    standard_errors: dict


def bias_variance_mc(
    config: ExperimentConfig, n_replicas: int, grid_idx: int = 0
) -> BiasVarianceEstimate:
    """Paired-training-set estimator of bias^2, variance, and E_geom.

    Per replica: draw (teacher, W, D1, D2, test), fit both training sets, and
    accumulate the paired products described in the module docstring.  E_geom,
    the total test error, and the training error are taken from the D1 fit.
    Returns means over replicas with standard errors for every field.
    """
    if n_replicas < 2:
        raise ConfigurationError(f"n_replicas must be >= 2, got {n_replicas}")
    per = {k: np.empty(n_replicas) for k in ("geom", "b2", "var", "test", "train")}
    for r in range(n_replicas):
        draw = draw_paired_replica(config, grid_idx, r)
        t, a1, a2 = paired_projections(draw)
        z_t = apply_features(draw.feature_map, draw.test.X)
        resid = draw.test.y - z_t @ draw.model_1.w_hat
        per["geom"][r] = np.mean((t - a1) ** 2)
        per["b2"][r] = np.mean((t - a1) * (t - a2))
        per["var"][r] = np.mean(a1**2) - np.mean(a1 * a2)
        per["test"][r] = np.mean(resid**2)
        per["train"][r] = training_error(draw.model_1, draw.train_1)
    means = {k: float(v.mean()) for k, v in per.items()}
    ses = {
        k: float(v.std(ddof=1) / np.sqrt(n_replicas)) for k, v in per.items()
    }
    return BiasVarianceEstimate(
        geometric_error=means["geom"],
        bias_squared=means["b2"],
        variance=means["var"],
        total_test_error=means["test"],
        train_error=means["train"],
        n_replicas=n_replicas,
        n_test_points=config.effective_m_test,
        standard_errors={
            "geometric_error": ses["geom"],
            "bias_squared": ses["b2"],
            "variance": ses["var"],
            "total_test_error": ses["test"],
            "train_error": ses["train"],
        },
    )
