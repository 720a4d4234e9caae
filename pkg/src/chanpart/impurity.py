"""Concave cell-impurity functions and per-cell constraint functions.

An impurity scores one output cell from its unnormalized joint column v:
the cell of weight w = sum(v) contributes w * f(v / w), where f is a concave
function on the probability simplex (Shannon entropy in bits, or the Gini
index).  A constraint scores one cell from its mass p(Z_k) alone; the three
supported kinds are none (always zero), entropy (-p * log2 p), and linear
(per-cell weight times p).

Both families expose analytic first derivatives.  Derivative evaluation
clamps its inputs away from zero at ``GRADIENT_CLAMP`` so that the entropy
gradient, which diverges at the boundary, stays finite and comparable.

The ``column_*`` functions are the vectorized kernels: they score many cells
in one call and are the single code path behind the scalar operations, the
objective evaluator, and the enumeration solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NegativeEntryError,
    NonPositiveEntryError,
    OutOfRangeError,
)

#: Derivative inputs are clamped to at least this value before evaluation.
GRADIENT_CLAMP = 1e-12

#: Entries are allowed to dip this far below zero (float dust) before
#: rejection; anything in [-NEG_TOL, 0) is treated as exactly zero.
NEG_TOL = 1e-9

_LOG2E = float(np.log2(np.e))

IMPURITY_KINDS = ("entropy", "gini")
CONSTRAINT_KINDS = ("none", "entropy", "linear")


@dataclass(frozen=True)
class ImpuritySpec:
    """Choice of concave cell-impurity function f."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in IMPURITY_KINDS:
            raise OutOfRangeError(f"impurity kind must be one of {IMPURITY_KINDS}, got {self.kind!r}")


ENTROPY = ImpuritySpec("entropy")
GINI = ImpuritySpec("gini")


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    """Choice of concave per-cell constraint function g_k.

    Only the linear kind may differ across cells (one weight per cell);
    the entropy kind applies the same function to every cell.
    """

    kind: str
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in CONSTRAINT_KINDS:
            raise OutOfRangeError(
                f"constraint kind must be one of {CONSTRAINT_KINDS}, got {self.kind!r}"
            )
        if self.kind == "linear":
            if self.weights is None:
                raise DimensionMismatchError("linear constraint requires a weight per cell")
            w = np.array(self.weights, dtype=float)
            if w.ndim != 1 or w.size < 1 or not np.all(np.isfinite(w)):
                raise DimensionMismatchError("linear weights must be a finite 1-D vector")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise DimensionMismatchError(f"constraint kind {self.kind!r} takes no weights")

    @classmethod
    def none(cls) -> "ConstraintSpec":
        return cls("none")

    @classmethod
    def entropy(cls) -> "ConstraintSpec":
        return cls("entropy")

    @classmethod
    def linear(cls, weights) -> "ConstraintSpec":
        return cls("linear", weights=np.asarray(weights, dtype=float))


# ---------------------------------------------------------------------------
# Impurity of unnormalized cells
# ---------------------------------------------------------------------------


def _checked_columns(columns, error) -> np.ndarray:
    v = np.asarray(columns, dtype=float)
    if np.any(v < -NEG_TOL):
        raise error(f"cell vector has negative entry {float(v.min())}")
    return np.maximum(v, 0.0)


def column_impurities(spec: ImpuritySpec, columns) -> np.ndarray:
    """Impurity w * f(v / w) of each column v of an N x C matrix.

    Zero-weight columns and single-support columns score exactly zero; the
    entropy kind uses the 0 * log 0 = 0 convention.
    """
    v = _checked_columns(columns, NegativeEntryError)
    if v.ndim == 1:
        v = v[:, None]
    w = v.sum(axis=0)
    if spec.kind == "entropy":
        logv = np.log2(np.where(v > 0.0, v, 1.0))
        logw = np.log2(np.where(w > 0.0, w, 1.0))
        out = (v * (logw[None, :] - logv)).sum(axis=0)
    else:
        den = np.where(w > 0.0, w, 1.0)
        out = np.where(w > 0.0, w - (v * v).sum(axis=0) / den, 0.0)
    # the impurity is nonnegative; clear the float dust of exact cancellations
    return np.maximum(out, 0.0)


def cell_impurity(spec: ImpuritySpec, v) -> float:
    """Impurity of a single unnormalized cell vector (bits for entropy)."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatchError(f"cell vector must be 1-D, got ndim={a.ndim}")
    return float(column_impurities(spec, a[:, None])[0])


def column_gradients(spec: ImpuritySpec, columns) -> np.ndarray:
    """Gradient of the column impurity with respect to each joint entry.

    Inputs are clamped at ``GRADIENT_CLAMP`` so the result is finite even on
    the boundary of the simplex.  For entropy the gradient is log2(w / v_n);
    for Gini it is 1 - 2 v_n / w + sum(v^2) / w^2.
    """
    v = _checked_columns(columns, NonPositiveEntryError)
    one_dim = v.ndim == 1
    if one_dim:
        v = v[:, None]
    v = np.maximum(v, GRADIENT_CLAMP)
    w = v.sum(axis=0)
    if spec.kind == "entropy":
        out = np.log2(w[None, :]) - np.log2(v)
    else:
        out = 1.0 - 2.0 * v / w[None, :] + ((v * v).sum(axis=0) / (w * w))[None, :]
    return out[:, 0] if one_dim else out


def cell_gradient(spec: ImpuritySpec, v) -> np.ndarray:
    """Gradient of :func:`cell_impurity` at a single cell vector."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatchError(f"cell vector must be 1-D, got ndim={a.ndim}")
    return column_gradients(spec, a)


# ---------------------------------------------------------------------------
# Constraints on cell masses
# ---------------------------------------------------------------------------


def _check_cell_index(spec: ConstraintSpec, k: int) -> None:
    if spec.kind == "linear" and not (0 <= k < spec.weights.size):
        raise IndexOutOfRangeError(f"cell index {k} out of range for {spec.weights.size} weights")


def constraint_value(spec: ConstraintSpec, k: int, p: float) -> float:
    """Constraint contribution g_k(p) of cell k holding mass p."""
    _check_cell_index(spec, k)
    p = float(p)
    if p < -NEG_TOL or p > 1.0 + NEG_TOL:
        raise OutOfRangeError(f"cell mass must lie in [0, 1], got {p}")
    p = min(max(p, 0.0), 1.0)
    if spec.kind == "none":
        return 0.0
    if spec.kind == "entropy":
        return 0.0 if p == 0.0 else float(-p * np.log2(p))
    return float(spec.weights[k] * p)


def constraint_total(spec: ConstraintSpec, masses) -> np.ndarray | float:
    """Sum of g_k over the last axis of a (..., K) stack of mass vectors."""
    m = np.maximum(np.asarray(masses, dtype=float), 0.0)
    if spec.kind == "none":
        out = np.zeros(m.shape[:-1])
    elif spec.kind == "entropy":
        out = -(m * np.log2(np.where(m > 0.0, m, 1.0))).sum(axis=-1)
    else:
        if m.shape[-1] != spec.weights.size:
            raise DimensionMismatchError(
                f"{m.shape[-1]} cells but {spec.weights.size} linear weights"
            )
        out = m @ spec.weights
    return float(out) if out.ndim == 0 else out


def constraint_derivative(spec: ConstraintSpec, k: int, p: float) -> float:
    """Derivative of g_k at mass p, clamped to [GRADIENT_CLAMP, 1] first."""
    _check_cell_index(spec, k)
    p = min(max(float(p), GRADIENT_CLAMP), 1.0)
    if spec.kind == "none":
        return 0.0
    if spec.kind == "entropy":
        return float(-(np.log2(p) + _LOG2E))
    return float(spec.weights[k])


def constraint_derivatives(spec: ConstraintSpec, masses) -> np.ndarray:
    """Vector of constraint derivatives, one per cell, with clamping."""
    m = np.clip(np.asarray(masses, dtype=float), GRADIENT_CLAMP, 1.0)
    if spec.kind == "none":
        return np.zeros_like(m)
    if spec.kind == "entropy":
        return -(np.log2(m) + _LOG2E)
    if m.shape[-1] != spec.weights.size:
        raise DimensionMismatchError(f"{m.shape[-1]} cells but {spec.weights.size} linear weights")
    return np.broadcast_to(spec.weights, m.shape).copy()
