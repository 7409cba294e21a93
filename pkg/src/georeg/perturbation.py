"""Adversarial/invariant perturbation split and finite-difference responses.

The fitted model only reacts to input directions inside span{f_W,i}, the row
space of P_f.  A random perturbation e therefore splits into

    e_par  = normalize(F_W F_W^T e)        adversarial component
    e_perp = normalize((I - F_W F_W^T) e)  invariant component

P_f e_perp = 0, so moving along e_perp leaves the internal representation
x_hat — and with it the geometric part of the prediction — unchanged, while
e_par changes the prediction without necessarily changing the true label
much.  The experiment draws random pairs, measures one-sided finite
differences of the true label and the prediction along both components, and
correlates the two per kind.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import ExperimentConfig, STREAM_PERTURB, StreamTag, stream_rng
from .errors import (
    ConfigurationError,
    DegenerateDirectionError,
    ExperimentError,
    NumericError,
    ShapeError,
)
from .geometry import FeatureOperatorAnalysis
from .linreg_core import FittedModel, TeacherModel, predict

KINDS = ("adversarial", "invariant")


@dataclass(frozen=True)
class PerturbationRecord:
    """One measured direction: true and predicted label response rates."""

    kind: str
    d_y_true: float
    d_y_pred: float
    eta: float
    direction: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        n = np.linalg.norm(self.direction)
        if abs(n - 1.0) > 1e-12:
            raise ConfigurationError(f"direction is not unit length (norm {n:.3e})")


# ------------------------------------------------------------- geometry


def decompose_perturbation(
    e: np.ndarray, analysis: FeatureOperatorAnalysis
) -> tuple[np.ndarray, np.ndarray]:
    """Split e into unit vectors along and orthogonal to span{f_W,i}.

    Raises DegenerateDirectionError naming the degenerate side when either
    projected component has norm <= 1e-12 |e| — e.g. e already inside the
    span leaves no perpendicular part.
    """
    e = np.asarray(e, dtype=float)
    if analysis.rank < 1:
        raise ConfigurationError("analysis has no SVD triples; P_f is null")
    n_f = analysis.p_f.shape[0]
    if e.shape != (n_f,):
        raise ShapeError(f"e must have shape ({n_f},), got {e.shape}")
    norm_e = np.linalg.norm(e)
    if norm_e == 0.0:
        raise ConfigurationError("perturbation e must be nonzero")
    f_w = analysis.f_w
    e_par = f_w @ (f_w.T @ e)
    e_perp = e - e_par
    n_par = np.linalg.norm(e_par)
    n_perp = np.linalg.norm(e_perp)
    if n_par <= 1e-12 * norm_e:
        raise DegenerateDirectionError("parallel")
    if n_perp <= 1e-12 * norm_e:
        raise DegenerateDirectionError("perpendicular")
    return e_par / n_par, e_perp / n_perp


def directional_derivative(
    f: Callable[[np.ndarray], float], x: np.ndarray, e_hat: np.ndarray, eta: float
) -> float:
    """One-sided finite difference (f(x + eta e_hat) - f(x)) / eta."""
    if eta <= 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    x = np.asarray(x, dtype=float)
    e_hat = np.asarray(e_hat, dtype=float)
    val = (f(x + eta * e_hat) - f(x)) / eta
    if not np.isfinite(val):
        raise NumericError("directional derivative is not finite")
    return float(val)


# ------------------------------------------------------------ experiment


def _pearson(pairs: list[tuple[float, float]]) -> tuple[float, float]:
    """(correlation, OLS slope) of d_y_pred against d_y_true."""
    arr = np.asarray(pairs)
    a = arr[:, 0] - arr[:, 0].mean()
    b = arr[:, 1] - arr[:, 1].mean()
    va = float(a @ a)
    vb = float(b @ b)
    if va == 0.0 or vb == 0.0:
        return float("nan"), float("nan")
    cov = float(a @ b)
    return float(cov / np.sqrt(va * vb)), cov / va


def perturbation_experiment(
    model: FittedModel,
    teacher: TeacherModel,
    analysis: FeatureOperatorAnalysis,
    x: np.ndarray,
    config: ExperimentConfig,
    n_pairs: int = 200,
    eta: float = 1e-2,
    stream_tag: StreamTag = (0, 0, STREAM_PERTURB),
) -> tuple[list[PerturbationRecord], dict]:
    """Measure label responses along random adversarial/invariant directions.

    Each of the n_pairs draws e from the input distribution (normal with the
    same per-entry scale as x), splits it, and records dy/d_eta and
    dyhat/d_eta for both components at the base point x.  For a purely linear
    teacher dy/d_eta is beta . e_hat, the exact value of the finite
    difference at any eta; with a nonlinear label term the one-sided
    difference at the given eta is used.  Degenerate splits are skipped and
    counted.  Returns the records plus per-kind correlations and OLS slopes.
    """
    if n_pairs < 2:
        raise ConfigurationError(f"n_pairs must be >= 2, got {n_pairs}")
    x = np.asarray(x, dtype=float)
    n_f = analysis.p_f.shape[0]
    if x.shape != (n_f,):
        raise ShapeError(f"x must have shape ({n_f},), got {x.shape}")
    rng = stream_rng(config.seed, stream_tag)
    scale = config.sigma_x / np.sqrt(config.n_f)

    records: list[PerturbationRecord] = []
    pairs: dict[str, list[tuple[float, float]]] = {k: [] for k in KINDS}
    skipped = 0
    for _ in range(n_pairs):
        e = rng.normal(0.0, scale, n_f)
        try:
            e_par, e_perp = decompose_perturbation(e, analysis)
        except DegenerateDirectionError:
            skipped += 1
            continue
        for kind, e_hat in (("adversarial", e_par), ("invariant", e_perp)):
            if teacher.nonlinear_label_fn is None:
                d_true = float(teacher.beta @ e_hat)
            else:
                d_true = directional_derivative(
                    lambda v: float(teacher.y_star(v[None, :])[0]), x, e_hat, eta
                )
            d_pred = directional_derivative(lambda v: predict(model, v), x, e_hat, eta)
            records.append(
                PerturbationRecord(
                    kind=kind,
                    d_y_true=d_true,
                    d_y_pred=d_pred,
                    eta=eta,
                    direction=e_hat,
                )
            )
            pairs[kind].append((d_true, d_pred))
    if not records:
        raise ExperimentError(f"all {n_pairs} perturbation pairs were degenerate")

    summary = {"skipped_degenerate": skipped}
    for kind in KINDS:
        corr, slope = _pearson(pairs[kind]) if len(pairs[kind]) >= 2 else (
            float("nan"),
            float("nan"),
        )
        summary[f"corr_{kind}"] = corr
        summary[f"slope_{kind}"] = slope
        summary[f"n_{kind}"] = len(pairs[kind])
    return records, summary
