"""Truncated-Fock-space linear algebra.

The state space is a tensor product of ``slots`` one-sided chains, each
truncated at occupation ``cap``.  Basis vectors are occupation tuples
``(n_1, ..., n_m)`` with ``0 <= n_k <= cap``, enumerated lexicographically
with the vacuum ``(0, ..., 0)`` at index 0.  All operators are dense complex
matrices tied to such a basis.

Relations between shift-type operators hold exactly away from the cap; the
``core_residual`` helper measures a relation only on vectors far enough from
the cap that truncation cannot leak in.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CapacityError",
    "TruncationError",
    "NotPositiveError",
    "BasisMismatchError",
    "FockBasis",
    "LinearOperator",
    "PolarPair",
    "enumerate_basis",
    "operator_norm",
    "psd_sqrt",
    "polar_left",
    "core_residual",
    "spectral_norm",
]

DEFAULT_DIM_LIMIT = 20000
DIM_LIMIT_ENV = "TCCR_DIM_LIMIT"

MultiIndex = tuple[int, ...]


class CapacityError(ValueError):
    """A requested basis or table exceeds the configured size limit."""


class TruncationError(ValueError):
    """The truncation cap is too small for the requested computation."""


class NotPositiveError(ValueError):
    """A matrix expected to be positive semidefinite is not."""


class BasisMismatchError(ValueError):
    """Two operators attached to different bases were combined."""


def _dim_limit() -> int:
    raw = os.environ.get(DIM_LIMIT_ENV)
    if raw is None:
        return DEFAULT_DIM_LIMIT
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{DIM_LIMIT_ENV} must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class FockBasis:
    """Lexicographic enumeration of occupation tuples with a per-slot cap."""

    slots: int
    cap: int

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")

    @property
    def dim(self) -> int:
        return (self.cap + 1) ** self.slots

    def states(self) -> Iterable[MultiIndex]:
        """All occupation tuples in index order (vacuum first)."""
        return itertools.product(range(self.cap + 1), repeat=self.slots)

    def index_of(self, state: Sequence[int]) -> int:
        """Row/column index of an occupation tuple (mixed-radix, slot 1 most significant)."""
        if len(state) != self.slots:
            raise ValueError(f"state has {len(state)} entries, basis has {self.slots} slots")
        idx = 0
        for n in state:
            if not 0 <= n <= self.cap:
                raise ValueError(f"occupation {n} outside 0..{self.cap}")
            idx = idx * (self.cap + 1) + n
        return idx

    def state_at(self, index: int) -> MultiIndex:
        if not 0 <= index < self.dim:
            raise ValueError(f"index {index} outside basis of dimension {self.dim}")
        digits = []
        for _ in range(self.slots):
            digits.append(index % (self.cap + 1))
            index //= self.cap + 1
        return tuple(reversed(digits))

    def occupations(self) -> np.ndarray:
        """(dim, slots) integer array of all occupation tuples in index order."""
        return np.array(list(self.states()), dtype=int).reshape(self.dim, self.slots)

    def core_mask(self, level: int) -> np.ndarray:
        """Boolean mask of basis vectors with every occupation <= level."""
        if level < 0:
            raise ValueError(f"core level must be >= 0, got {level}")
        return (self.occupations() <= level).all(axis=1)


def enumerate_basis(slots: int, cap: int, *, dim_limit: int | None = None) -> FockBasis:
    """Build a basis, enforcing the capacity limit (env ``TCCR_DIM_LIMIT`` overrides)."""
    if slots < 1 or cap < 1:
        raise ValueError(f"slots and cap must be >= 1, got slots={slots}, cap={cap}")
    limit = _dim_limit() if dim_limit is None else dim_limit
    dim = (cap + 1) ** slots
    if dim > limit:
        raise CapacityError(
            f"basis dimension {dim} = ({cap}+1)^{slots} exceeds limit {limit}"
        )
    return FockBasis(slots=slots, cap=cap)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense complex matrix attached to a basis.

    Arithmetic is closed over one basis; combining operators on different
    bases raises :class:`BasisMismatchError`.  Matrices are frozen after
    construction, so operators can be shared freely across threads.
    Equality is identity; use :meth:`allclose` for numeric comparison.
    """

    basis: FockBasis
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"matrix shape {mat.shape} does not match basis dimension {self.basis.dim}"
            )
        mat = np.ascontiguousarray(mat)
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    def _check_same_basis(self, other: "LinearOperator") -> None:
        if self.basis != other.basis:
            raise BasisMismatchError(
                f"operators live on different bases: {self.basis} vs {other.basis}"
            )

    def adjoint(self) -> "LinearOperator":
        return LinearOperator(self.basis, self.matrix.conj().T)

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        self._check_same_basis(other)
        return LinearOperator(self.basis, self.matrix @ other.matrix)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        self._check_same_basis(other)
        return LinearOperator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        self._check_same_basis(other)
        return LinearOperator(self.basis, self.matrix - other.matrix)

    def __neg__(self) -> "LinearOperator":
        return LinearOperator(self.basis, -self.matrix)

    def __mul__(self, scalar: complex) -> "LinearOperator":
        return LinearOperator(self.basis, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def power(self, k: int) -> "LinearOperator":
        if k < 0:
            raise ValueError("negative powers are not defined")
        out = identity(self.basis)
        for _ in range(k):
            out = out @ self
        return out

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def allclose(self, other: "LinearOperator", tol: float = 1e-12) -> bool:
        self._check_same_basis(other)
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= tol)

    def to_json_dict(self) -> dict:
        """Row-major [re, im] dump for golden-file comparisons."""
        return {
            "slots": self.basis.slots,
            "cap": self.basis.cap,
            "matrix": [
                [[float(z.real), float(z.imag)] for z in row] for row in self.matrix
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "LinearOperator":
        basis = FockBasis(slots=data["slots"], cap=data["cap"])
        mat = np.array(
            [[complex(re, im) for re, im in row] for row in data["matrix"]],
            dtype=complex,
        )
        return cls(basis, mat)


def identity(basis: FockBasis) -> LinearOperator:
    return LinearOperator(basis, np.eye(basis.dim, dtype=complex))


def zero(basis: FockBasis) -> LinearOperator:
    return LinearOperator(basis, np.zeros((basis.dim, basis.dim), dtype=complex))


@dataclass(frozen=True, eq=False)
class PolarPair:
    """Factors of a left polar decomposition A = positive_part @ isometric_part."""

    isometric_part: LinearOperator
    positive_part: LinearOperator


def operator_norm(a: LinearOperator) -> float:
    """Largest singular value of the matrix."""
    if not np.all(np.isfinite(a.matrix)):
        raise ValueError("operator has non-finite entries")
    if a.basis.dim == 1:
        return float(abs(a.matrix[0, 0]))
    return float(np.linalg.norm(a.matrix, 2))


def spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value of a rectangular block, via the Hermitian Gram form.

    Cheaper than a full SVD for the tall thin blocks produced by core
    projections; accuracy is limited only by eigvalsh rounding.
    """
    if matrix.size == 0:
        return 0.0
    gram = matrix.conj().T @ matrix
    top = float(np.linalg.eigvalsh(gram)[-1])
    return float(np.sqrt(max(top, 0.0)))


def psd_sqrt(a: LinearOperator, *, psd_tol: float = 1e-10, clamp_tol: float = 1e-12) -> LinearOperator:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues below ``-psd_tol`` raise :class:`NotPositiveError`; tiny
    eigenvalues (below ``clamp_tol``) are clamped to zero before the root.
    """
    if not a.is_hermitian(tol=1e-10):
        asym = float(np.max(np.abs(a.matrix - a.matrix.conj().T)))
        raise NotPositiveError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    herm = (a.matrix + a.matrix.conj().T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(herm)
    low = float(eigvals[0])
    if low < -psd_tol:
        raise NotPositiveError(f"matrix has negative eigenvalue {low:.6e}")
    clamped = np.where(eigvals < clamp_tol, 0.0, eigvals)
    root = (eigvecs * np.sqrt(clamped)) @ eigvecs.conj().T
    root = (root + root.conj().T) / 2.0
    return LinearOperator(a.basis, root)


def polar_left(a: LinearOperator, rank_tol: float = 1e-8) -> PolarPair:
    """Left polar decomposition A = C @ S with C PSD and S a partial isometry.

    S is assembled from the SVD factors restricted to singular values above
    ``rank_tol`` relative to the largest one, so its initial space is the
    closure of range(A*) and its final space is range(A).  The zero operator
    decomposes as (0, 0).
    """
    if rank_tol <= 0:
        raise ValueError(f"rank_tol must be positive, got {rank_tol}")
    u, s, vh = np.linalg.svd(a.matrix)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0.0:
        z = zero(a.basis)
        return PolarPair(isometric_part=z, positive_part=z)
    keep = s > rank_tol * smax
    ur = u[:, keep]
    vhr = vh[keep, :]
    isometric = LinearOperator(a.basis, ur @ vhr)
    positive = LinearOperator(a.basis, (u * s) @ u.conj().T)
    return PolarPair(isometric_part=isometric, positive_part=positive)


def core_residual(lhs: LinearOperator, rhs: LinearOperator, degree: int) -> float:
    """Norm of (LHS - RHS) restricted to vectors at least ``degree`` below the cap.

    ``degree`` is the longest generator word appearing in the relation; a word
    of that length cannot push a vector with all occupations <= cap - degree
    past the cap, so a true relation gives exactly zero up to float rounding.
    """
    lhs._check_same_basis(rhs)
    basis = lhs.basis
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if degree > basis.cap:
        raise TruncationError(
            f"relation degree {degree} exceeds cap {basis.cap}; increase the truncation"
        )
    mask = basis.core_mask(basis.cap - degree)
    block = (lhs.matrix - rhs.matrix)[:, mask]
    return spectral_norm(block)
