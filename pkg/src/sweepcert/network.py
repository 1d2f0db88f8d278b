"""Elastoplastic network description and validation.

A network of ``m`` elastoplastic springs on ``n`` nodes under a single
displacement-controlled loading is described by

* a kinematic matrix ``D`` (m x n) mapping node displacements to spring
  elongations,
* positive spring stiffnesses ``a`` (the diagonal metric used everywhere
  downstream),
* elastic stress limits ``c_minus <= c_plus`` per spring,
* a loading location vector ``R`` (length m), and
* an affine loading length ``l(t) = l0 + l1 * t``.

Validation checks the two structural rank conditions the whole construction
rests on: ``rank D = n - 1`` (connected network) and ``rank(D^T R) = 1``
(the loading actually constrains a length).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    LimitOrderViolated,
    LoadingDegenerate,
    NonpositiveStiffness,
    RankDeficientD,
)


@dataclass(frozen=True)
class Loading:
    """Affine displacement-controlled loading l(t) = l0 + l1 * t."""

    l0: float
    l1: float

    def at(self, t: float) -> float:
        return self.l0 + self.l1 * t


def _readonly(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """User-facing input: the elastoplastic network.

    Arrays are copied and frozen at construction; instances are immutable
    and safe to share across threads.
    """

    D: np.ndarray
    a: np.ndarray
    c_minus: np.ndarray
    c_plus: np.ndarray
    R: np.ndarray
    loading: Loading
    period: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "D", _readonly(np.atleast_2d(self.D)))
        for name in ("a", "c_minus", "c_plus", "R"):
            object.__setattr__(self, name, _readonly(np.ravel(getattr(self, name))))
        m, n = self.D.shape
        if m < n:
            raise ValueError(f"need at least as many springs as nodes, got m={m} < n={n}")
        for name in ("a", "c_minus", "c_plus", "R"):
            vec = getattr(self, name)
            if vec.shape != (m,):
                raise ValueError(f"{name} must have length m={m}, got {vec.shape}")
        if self.period is not None and self.period <= 0:
            raise ValueError("period must be positive when given")

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def n(self) -> int:
        return self.D.shape[1]


@dataclass(frozen=True, eq=False)
class ValidatedNetwork(NetworkSpec):
    """A NetworkSpec that passed validation, with the ranks and tolerance used."""

    rank_D: int = 0
    rank_DTR: int = 0
    rank_tol: float = 0.0


def rank_threshold(matrix: np.ndarray) -> float:
    """Default singular-value threshold: max(m, n) * ||matrix||_2 * machine eps."""
    if matrix.size == 0:
        return 0.0
    smax = float(np.linalg.norm(matrix, 2))
    return max(matrix.shape) * smax * np.finfo(float).eps


def _rank(matrix: np.ndarray, tol: float | None) -> tuple[int, float]:
    if matrix.size == 0:
        return 0, 0.0
    s = np.linalg.svd(matrix, compute_uv=False)
    thr = rank_threshold(matrix) if tol is None else tol * float(s[0] if s.size else 0.0)
    return int(np.count_nonzero(s > thr)), thr


def validate_network(spec: NetworkSpec, rank_tol: float | None = None) -> ValidatedNetwork:
    """Check the structural conditions and return a ValidatedNetwork.

    ``rank_tol``, when given, is a relative singular-value threshold
    (fraction of the largest singular value); by default the scaled
    machine-epsilon threshold of :func:`rank_threshold` is used.

    Raises NonpositiveStiffness, LimitOrderViolated, RankDeficientD, or
    LoadingDegenerate, naming the offending entries.  Validation is
    deterministic and idempotent: a ValidatedNetwork revalidates to an
    identical object.
    """
    bad = np.flatnonzero(spec.a <= 0)
    if bad.size:
        raise NonpositiveStiffness(f"stiffness must be positive; offending springs {bad.tolist()}")
    bad = np.flatnonzero(spec.c_minus > spec.c_plus)
    if bad.size:
        raise LimitOrderViolated(f"c_minus > c_plus for springs {bad.tolist()}")

    m, n = spec.m, spec.n
    rD, thr = _rank(spec.D, rank_tol)
    if rD != n - 1:
        zero_cols = np.flatnonzero(np.abs(spec.D).max(axis=0) <= thr)
        detail = f"; all-zero node columns {zero_cols.tolist()}" if zero_cols.size else ""
        raise RankDeficientD(f"rank D = {rD}, expected n-1 = {n - 1}{detail}")
    rDTR, _ = _rank(spec.D.T @ spec.R.reshape(-1, 1), rank_tol)
    if rDTR != 1:
        raise LoadingDegenerate(f"rank(D^T R) = {rDTR}, expected 1")

    if isinstance(spec, ValidatedNetwork):
        return replace(spec, rank_D=rD, rank_DTR=rDTR, rank_tol=thr)
    return ValidatedNetwork(
        D=spec.D, a=spec.a, c_minus=spec.c_minus, c_plus=spec.c_plus,
        R=spec.R, loading=spec.loading, period=spec.period,
        rank_D=rD, rank_DTR=rDTR, rank_tol=thr,
    )


def from_document(doc: dict) -> NetworkSpec:
    """Build a NetworkSpec from a parsed input document (see schemas/network.schema.json)."""
    D = np.array(doc["D"], dtype=float)
    if D.ndim != 2 or D.shape != (int(doc["m"]), int(doc["n"])):
        raise ValueError(
            f"D must be an m x n array of rows; got shape {D.shape}, "
            f"declared m={doc['m']}, n={doc['n']}"
        )
    loading = Loading(l0=float(doc["loading"]["l0"]), l1=float(doc["loading"]["l1"]))
    return NetworkSpec(
        D=D,
        a=doc["a"],
        c_minus=doc["c_minus"],
        c_plus=doc["c_plus"],
        R=doc["R"],
        loading=loading,
        period=float(doc["period"]) if doc.get("period") is not None else None,
    )


def to_document(spec: NetworkSpec) -> dict:
    """Inverse of :func:`from_document` (for echoing inputs into reports)."""
    doc = {
        "m": spec.m,
        "n": spec.n,
        "D": spec.D.tolist(),
        "a": spec.a.tolist(),
        "c_minus": spec.c_minus.tolist(),
        "c_plus": spec.c_plus.tolist(),
        "R": spec.R.tolist(),
        "loading": {"l0": spec.loading.l0, "l1": spec.loading.l1},
    }
    if spec.period is not None:
        doc["period"] = spec.period
    return doc
