"""Concrete operator families on truncated bases.

Three builders live here:

* ``build_irrep`` -- the catalog of partial-isometry families, one class per
  integer ``j`` in ``0..d``.  For ``i <= j`` the i-th generator is a shift on
  slot ``i`` cut down by vacuum projections on the earlier slots; generator
  ``j+1`` is a phase times the joint vacuum projection; later generators are
  zero.  Class ``j = d`` is the vacuum-cyclic (Fock) family.
* ``build_fock_tccr`` -- the deformed generators ``a_i`` in closed form as
  weighted lattice raises.  The weights are an implementation choice, not an
  input: they are validated elsewhere against the series reconstruction and
  the exact rewriting engine.
* ``build_qccr_single`` -- the one-mode deformed generator with
  ``a* a = 1 + q a a*``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import FockBasis, LinearOperator, enumerate_basis

__all__ = [
    "IrrepSpec",
    "GeneratorFamily",
    "TccrFamily",
    "build_irrep",
    "build_fock_tccr",
    "build_qccr_single",
    "shift_matrix",
    "defect_matrix",
    "geometric_sum",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IrrepSpec:
    """Parameters selecting one family from the catalog.

    ``class_j = d`` is the vacuum-cyclic class; ``class_j = 0`` is the scalar
    class, realized as ``exp(i*phase)`` times the identity on a single slot.
    ``mu`` is carried for deformed-family builders and ignored by
    ``build_irrep``.
    """

    d: int
    class_j: int
    cap: int
    phase: float = 0.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not 0 <= self.class_j <= self.d:
            raise ValueError(f"class_j must lie in 0..{self.d}, got {self.class_j}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")
        if not abs(self.mu) < 1:
            raise ValueError(f"|mu| must be < 1, got {self.mu}")
        object.__setattr__(self, "phase", float(self.phase) % TWO_PI)

    @property
    def slots(self) -> int:
        return max(self.class_j, 1)

    @property
    def is_fock(self) -> bool:
        return self.class_j == self.d


@dataclass(frozen=True, eq=False)
class GeneratorFamily:
    """d partial isometries t_1..t_d on a shared basis."""

    basis: FockBasis
    ops: tuple[LinearOperator, ...]
    spec: IrrepSpec | None = None
    word_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def d(self) -> int:
        return len(self.ops)


@dataclass(frozen=True, eq=False)
class TccrFamily:
    """d deformed generators a_1..a_d with deformation parameter mu."""

    basis: FockBasis
    ops: tuple[LinearOperator, ...]
    mu: float
    word_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def d(self) -> int:
        return len(self.ops)


def shift_matrix(cap: int) -> np.ndarray:
    """One-slot raise: e_n -> e_{n+1} for n < cap, e_cap -> 0."""
    mat = np.zeros((cap + 1, cap + 1), dtype=complex)
    for n in range(cap):
        mat[n + 1, n] = 1.0
    return mat


def defect_matrix(cap: int) -> np.ndarray:
    """1 - S S^* on one slot: the projection onto the slot vacuum e_0."""
    s = shift_matrix(cap)
    return np.eye(cap + 1, dtype=complex) - s @ s.conj().T


def _kron_all(factors: list[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def build_irrep(spec: IrrepSpec, *, dim_limit: int | None = None) -> GeneratorFamily:
    """Build one family from the catalog on ``max(class_j, 1)`` slots."""
    basis = enumerate_basis(spec.slots, spec.cap, dim_limit=dim_limit)
    s = shift_matrix(spec.cap)
    d_mat = defect_matrix(spec.cap)
    eye = np.eye(spec.cap + 1, dtype=complex)
    j = spec.class_j

    ops: list[LinearOperator] = []
    for i in range(1, spec.d + 1):
        if i <= j:
            factors = [d_mat] * (i - 1) + [s] + [eye] * (j - i)
            mat = _kron_all(factors)
        elif i == j + 1:
            phase = cmath.exp(1j * spec.phase)
            if j == 0:
                mat = phase * np.eye(basis.dim, dtype=complex)
            else:
                mat = phase * _kron_all([d_mat] * j)
        else:
            mat = np.zeros((basis.dim, basis.dim), dtype=complex)
        ops.append(LinearOperator(basis, mat))
    return GeneratorFamily(basis=basis, ops=tuple(ops), spec=spec)


def geometric_sum(x: float, terms: int) -> float:
    """sum of x^k for k = 0..terms-1, summed directly (stable at x = 0)."""
    total = 0.0
    power = 1.0
    for _ in range(terms):
        total += power
        power *= x
    return total


def build_fock_tccr(d: int, mu: float, cap: int, *, dim_limit: int | None = None) -> TccrFamily:
    """Vacuum-cyclic deformed generators as weighted lattice raises.

    a_i sends the state (n_1, .., n_d) to mu^(n_1+..+n_{i-1}) * w(n_i) times
    the state with n_i raised, where w(n)^2 = 1 + mu^2 + .. + mu^(2n); the
    raise dies at the cap.  The adjoints kill the vacuum, and the deformed
    relations hold exactly below the cap.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not abs(mu) < 1:
        raise ValueError(f"|mu| must be < 1, got {mu}")
    basis = enumerate_basis(d, cap, dim_limit=dim_limit)
    weights = [math.sqrt(geometric_sum(mu * mu, n + 1)) for n in range(cap)]

    mats = [np.zeros((basis.dim, basis.dim), dtype=complex) for _ in range(d)]
    for p, state in enumerate(basis.states()):
        prefix = 1.0
        for i in range(d):
            n_i = state[i]
            if n_i < cap:
                q = p + (cap + 1) ** (d - 1 - i)  # index of the raised state
                mats[i][q, p] = prefix * weights[n_i]
            prefix *= float(mu) ** n_i
    ops = tuple(LinearOperator(basis, m) for m in mats)
    return TccrFamily(basis=basis, ops=ops, mu=float(mu))


def build_qccr_single(q: float, cap: int, *, dim_limit: int | None = None) -> LinearOperator:
    """One-mode generator with a* a = 1 + q a a* below the cap, |q| < 1."""
    if not abs(q) < 1:
        raise ValueError(f"|q| must be < 1, got {q}")
    basis = enumerate_basis(1, cap, dim_limit=dim_limit)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    for n in range(cap):
        mat[n + 1, n] = math.sqrt(geometric_sum(q, n + 1))
    return LinearOperator(basis, mat)
