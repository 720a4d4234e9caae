"""Validated probability containers and the linear forward model.

The data flow is a three-stage pipeline: a joint source/data distribution
p(X, Y) is partitioned by a quantizer into cells Z, and the cells are then
pushed through a row-stochastic relay channel to produce the final outputs T.
Both pushes are linear maps on joint distributions:

    p(X_n, Z_k) = sum_m p(X_n, Y_m) * p(Z_k | Y_m)
    p(X_n, T_h) = sum_k p(X_n, Z_k) * A[k, h]

All containers are immutable after construction (arrays are copied and made
read-only), so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NegativeEntryError,
    OutOfRangeError,
    SumNotOneError,
    ZeroColumnError,
)

#: Tolerance for container invariants (sums, row-stochasticity).
INVARIANT_TOL = 1e-9

#: Acceptance window for externally supplied numbers; anything whose total is
#: within this tolerance of 1 is rescaled, anything worse is rejected.  Wider
#: than INVARIANT_TOL because input files carry limited decimal precision.
INPUT_TOL = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def _check_nonnegative(a: np.ndarray, what: str) -> np.ndarray:
    """Reject materially negative entries, clip float dust up to 0."""
    if np.any(a < -INVARIANT_TOL):
        worst = float(a.min())
        raise NegativeEntryError(f"{what} has negative entry {worst}")
    return np.maximum(a, 0.0)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf p(X, Y) of the source X (rows) and the data Y (columns).

    Invariants enforced at construction: all entries nonnegative, total mass
    one within ``INVARIANT_TOL``, and every column mass strictly positive
    (a data symbol that never occurs has no posterior).
    """

    entries: np.ndarray  # shape (N, M)

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2:
            raise DimensionMismatchError(f"joint must be a 2-D matrix, got ndim={a.ndim}")
        if a.shape[0] < 2 or a.shape[1] < 1:
            raise DimensionMismatchError(
                f"joint needs at least 2 source rows and 1 data column, got shape {a.shape}"
            )
        a = _check_nonnegative(a, "joint distribution")
        total = float(a.sum())
        if abs(total - 1.0) > INVARIANT_TOL:
            raise SumNotOneError(f"joint distribution sums to {total!r}, expected 1")
        col = a.sum(axis=0)
        if np.any(col <= 0.0):
            dead = int(np.argmin(col))
            raise ZeroColumnError(f"data symbol {dead} has zero probability")
        object.__setattr__(self, "entries", _readonly(a))

    @property
    def num_sources(self) -> int:
        return self.entries.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.entries.shape[1]

    @property
    def source_marginal(self) -> np.ndarray:
        """Marginal pmf of X (row sums)."""
        return self.entries.sum(axis=1)

    @property
    def symbol_marginal(self) -> np.ndarray:
        """Marginal pmf of Y (column sums); strictly positive by invariant."""
        return self.entries.sum(axis=0)


def validate_joint(raw) -> JointDistribution:
    """Validate and normalize an externally supplied joint matrix.

    The total is rescaled to exactly one when it deviates by at most
    ``INPUT_TOL``; larger deviations raise ``SumNotOneError``.  Negative
    entries and all-zero columns are rejected.
    """
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatchError(f"joint must be a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 2 or a.shape[1] < 1:
        raise DimensionMismatchError(
            f"joint needs at least 2 source rows and 1 data column, got shape {a.shape}"
        )
    a = _check_nonnegative(a, "joint distribution")
    total = float(a.sum())
    if abs(total - 1.0) > INPUT_TOL:
        raise SumNotOneError(f"joint distribution sums to {total!r}, expected 1 within {INPUT_TOL}")
    return JointDistribution(a / total)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Row-stochastic relay channel: entry [k, h] is p(T_h | Z_k)."""

    entries: np.ndarray  # shape (K, H)

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatchError(f"channel must be a nonempty 2-D matrix, got shape {a.shape}")
        a = _check_nonnegative(a, "channel matrix")
        rows = a.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > INVARIANT_TOL):
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise SumNotOneError(f"channel row {bad} sums to {float(rows[bad])!r}, expected 1")
        object.__setattr__(self, "entries", _readonly(a))

    @classmethod
    def identity(cls, num_inputs: int) -> "ChannelMatrix":
        """Noiseless channel: T is a copy of Z."""
        return cls(np.eye(num_inputs))

    @property
    def num_inputs(self) -> int:
        return self.entries.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.entries.shape[1]

    @property
    def is_identity(self) -> bool:
        k, h = self.entries.shape
        return k == h and bool(np.array_equal(self.entries, np.eye(k)))


def validate_channel(raw) -> ChannelMatrix:
    """Validate an externally supplied channel, renormalizing rows within INPUT_TOL."""
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatchError(f"channel must be a nonempty 2-D matrix, got shape {a.shape}")
    a = _check_nonnegative(a, "channel matrix")
    rows = a.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > INPUT_TOL):
        bad = int(np.argmax(np.abs(rows - 1.0)))
        raise SumNotOneError(
            f"channel row {bad} sums to {float(rows[bad])!r}, expected 1 within {INPUT_TOL}"
        )
    return ChannelMatrix(a / rows[:, None])


@dataclass(frozen=True, eq=False)
class Quantizer:
    """Assignment of data symbols to cells, either hard or soft.

    A hard quantizer stores one 0-based cell label per data symbol; a soft
    quantizer stores a row-stochastic membership matrix p(Z_k | Y_m).  A hard
    quantizer is exactly representable as a 0/1 soft one via
    :meth:`membership_matrix`.
    """

    kind: str  # "hard" | "soft"
    num_cells: int
    hard_assignment: np.ndarray | None = None  # shape (M,), int
    soft_assignment: np.ndarray | None = None  # shape (M, K)

    def __post_init__(self) -> None:
        if self.kind not in ("hard", "soft"):
            raise OutOfRangeError(f"quantizer kind must be 'hard' or 'soft', got {self.kind!r}")
        if self.num_cells < 1:
            raise DimensionMismatchError(f"num_cells must be >= 1, got {self.num_cells}")
        if self.kind == "hard":
            if self.hard_assignment is None or self.soft_assignment is not None:
                raise DimensionMismatchError("hard quantizer requires hard_assignment only")
            a = np.asarray(self.hard_assignment)
            if a.ndim != 1 or a.size < 1:
                raise DimensionMismatchError("hard_assignment must be a nonempty vector")
            if not np.issubdtype(a.dtype, np.integer):
                if not np.all(a == np.floor(a)):
                    raise IndexOutOfRangeError("hard_assignment must hold integer cell labels")
            a = a.astype(np.int64, copy=True)
            if a.min() < 0 or a.max() >= self.num_cells:
                raise IndexOutOfRangeError(
                    f"cell labels must lie in [0, {self.num_cells}), got range "
                    f"[{int(a.min())}, {int(a.max())}]"
                )
            a.setflags(write=False)
            object.__setattr__(self, "hard_assignment", a)
        else:
            if self.soft_assignment is None or self.hard_assignment is not None:
                raise DimensionMismatchError("soft quantizer requires soft_assignment only")
            s = np.asarray(self.soft_assignment, dtype=float)
            if s.ndim != 2 or s.shape[0] < 1:
                raise DimensionMismatchError("soft_assignment must be an M x K matrix")
            if s.shape[1] != self.num_cells:
                raise DimensionMismatchError(
                    f"soft_assignment has {s.shape[1]} columns, expected {self.num_cells}"
                )
            s = _check_nonnegative(s, "soft assignment")
            rows = s.sum(axis=1)
            if np.any(np.abs(rows - 1.0) > INVARIANT_TOL):
                bad = int(np.argmax(np.abs(rows - 1.0)))
                raise SumNotOneError(f"soft row {bad} sums to {float(rows[bad])!r}, expected 1")
            object.__setattr__(self, "soft_assignment", _readonly(s))

    @classmethod
    def hard(cls, assignment, num_cells: int) -> "Quantizer":
        return cls(kind="hard", num_cells=num_cells, hard_assignment=np.asarray(assignment))

    @classmethod
    def soft(cls, membership) -> "Quantizer":
        m = np.asarray(membership, dtype=float)
        cells = m.shape[1] if m.ndim == 2 else 0
        return cls(kind="soft", num_cells=cells, soft_assignment=m)

    @property
    def num_points(self) -> int:
        if self.kind == "hard":
            return self.hard_assignment.shape[0]
        return self.soft_assignment.shape[0]

    def membership_matrix(self) -> np.ndarray:
        """Soft view of the quantizer: M x K row-stochastic matrix."""
        if self.kind == "soft":
            return self.soft_assignment
        return np.eye(self.num_cells)[self.hard_assignment]


@dataclass(frozen=True, eq=False)
class ClusterJoints:
    """Per-cell joint pmf p(X, Z) together with the cell masses p(Z)."""

    entries: np.ndarray  # shape (N, K)
    cluster_mass: np.ndarray  # shape (K,)

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        w = np.asarray(self.cluster_mass, dtype=float)
        if a.ndim != 2 or w.ndim != 1 or a.shape[1] != w.shape[0]:
            raise DimensionMismatchError(
                f"cluster entries {a.shape} inconsistent with mass vector {w.shape}"
            )
        if np.any(np.abs(a.sum(axis=0) - w) > INVARIANT_TOL):
            raise SumNotOneError("cluster column sums disagree with cluster_mass")
        if abs(float(a.sum()) - 1.0) > INVARIANT_TOL:
            raise SumNotOneError(f"cluster joints sum to {float(a.sum())!r}, expected 1")
        object.__setattr__(self, "entries", _readonly(a))
        object.__setattr__(self, "cluster_mass", _readonly(w))

    @property
    def num_cells(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class OutputJoints:
    """Joint pmf p(X, T) at the far end of the relay channel."""

    entries: np.ndarray  # shape (N, H)
    output_mass: np.ndarray  # shape (H,)

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        w = np.asarray(self.output_mass, dtype=float)
        if a.ndim != 2 or w.ndim != 1 or a.shape[1] != w.shape[0]:
            raise DimensionMismatchError(
                f"output entries {a.shape} inconsistent with mass vector {w.shape}"
            )
        if abs(float(a.sum()) - 1.0) > INVARIANT_TOL:
            raise SumNotOneError(f"output joints sum to {float(a.sum())!r}, expected 1")
        object.__setattr__(self, "entries", _readonly(a))
        object.__setattr__(self, "output_mass", _readonly(w))

    @property
    def num_outputs(self) -> int:
        return self.entries.shape[1]


def posteriors(joint: JointDistribution) -> np.ndarray:
    """Posterior source distributions p(X | Y_m), one column per data symbol."""
    return joint.entries / joint.symbol_marginal[None, :]


def cluster_joints_array(joint: JointDistribution, quantizer: Quantizer) -> np.ndarray:
    """Raw N x K cluster-joint matrix (no container bookkeeping).

    Hot path shared by the solvers; ``push_to_clusters`` wraps it in the
    validated container.
    """
    if quantizer.num_points != joint.num_symbols:
        raise DimensionMismatchError(
            f"quantizer covers {quantizer.num_points} symbols, joint has {joint.num_symbols}"
        )
    j = joint.entries
    k = quantizer.num_cells
    if quantizer.kind == "hard":
        labels = quantizer.hard_assignment
        out = np.empty((j.shape[0], k))
        for n in range(j.shape[0]):
            out[n] = np.bincount(labels, weights=j[n], minlength=k)
        return out
    return j @ quantizer.soft_assignment


def push_to_clusters(joint: JointDistribution, quantizer: Quantizer) -> ClusterJoints:
    """Aggregate the joint over the quantizer cells: p(X_n, Z_k).

    Empty cells are legal and yield all-zero columns.
    """
    entries = cluster_joints_array(joint, quantizer)
    return ClusterJoints(entries=entries, cluster_mass=entries.sum(axis=0))


def push_through_channel(clusters: ClusterJoints, channel: ChannelMatrix) -> OutputJoints:
    """Mix the cell joints through the relay channel: p(X_n, T_h)."""
    if clusters.num_cells != channel.num_inputs:
        raise DimensionMismatchError(
            f"clusters have {clusters.num_cells} cells, channel expects {channel.num_inputs}"
        )
    entries = clusters.entries @ channel.entries
    return OutputJoints(entries=entries, output_mass=entries.sum(axis=0))
