"""Declarative relation sets and the checks built on them.

The two relation families are expressed once as exact formal polynomials and
evaluated against operator families via ``core_residual``, so every check in
a report names the identity it measures.  Alongside the residual reports this
module houses the operator-norm bound check, the sampled norm-domination
evidence, and the slot-collapse map that sends the vacuum-cyclic family onto
each lower class.
"""

from __future__ import annotations

import cmath
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .families import (
    GeneratorFamily,
    IrrepSpec,
    TccrFamily,
    build_irrep,
    defect_matrix,
    geometric_sum,
    shift_matrix,
)
from .fock import LinearOperator, core_residual, operator_norm
from .report import VerificationReport
from .symbolic import (
    MuPoly,
    NcPolynomial,
    Word,
    evaluate_poly,
    evaluate_word,
    gen,
    gen_star,
    random_word,
    word_str,
)

__all__ = [
    "Relation",
    "RelationSet",
    "tccr_relations",
    "pi_relations",
    "qccr_relations",
    "relation_residuals",
    "tccr_residuals",
    "pi_residuals",
    "qccr_residuals",
    "norm_bound_check",
    "norm_domination_sample",
    "collapse_check",
    "TensorWord",
    "SHIFT",
    "SHIFT_STAR",
    "DEFECT",
    "fock_generator_slots",
    "tensor_word_product",
    "apply_collapse",
    "tensor_word_matrix",
]

MODEL_TOL = 1e-10
DERIVED_TOL = 1e-8


@dataclass(frozen=True)
class Relation:
    label: str
    lhs: NcPolynomial
    rhs: NcPolynomial
    degree: int

    def __post_init__(self) -> None:
        expected = max(self.lhs.degree(), self.rhs.degree())
        if self.degree != expected:
            raise ValueError(
                f"relation {self.label}: degree {self.degree} != longest word {expected}"
            )


@dataclass(frozen=True)
class RelationSet:
    kind: str
    relations: tuple[Relation, ...]

    def __post_init__(self) -> None:
        labels = [r.label for r in self.relations]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate relation labels in {self.kind}")

    def adjoint(self) -> "RelationSet":
        flipped = tuple(
            Relation(r.label + "/adj", r.lhs.adjoint(), r.rhs.adjoint(), r.degree)
            for r in self.relations
        )
        return RelationSet(kind=self.kind + "/adj", relations=flipped)


def _pair(a, b) -> NcPolynomial:
    return NcPolynomial.from_word((a, b))


def tccr_relations(d: int) -> RelationSet:
    """The deformed relations: diagonal, twisted commutation, and ordering."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    mu = MuPoly.mu(1)
    mu2 = MuPoly.mu(2)
    one_minus_mu2 = MuPoly({0: 1, 2: -1})
    rels: list[Relation] = []
    for i in range(1, d + 1):
        rhs = NcPolynomial.one() + _pair(gen(i), gen_star(i)) * mu2
        for k in range(1, i):
            rhs = rhs - _pair(gen(k), gen_star(k)) * one_minus_mu2
        rels.append(Relation(f"diag/i{i}", _pair(gen_star(i), gen(i)), rhs, 2))
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if i == j:
                continue
            rels.append(
                Relation(
                    f"twist/i{i}j{j}",
                    _pair(gen_star(i), gen(j)),
                    _pair(gen(j), gen_star(i)) * mu,
                    2,
                )
            )
    for j in range(2, d + 1):
        for i in range(1, j):
            rels.append(
                Relation(
                    f"order/j{j}i{i}",
                    _pair(gen(j), gen(i)),
                    _pair(gen(i), gen(j)) * mu,
                    2,
                )
            )
    return RelationSet(kind=f"TCCR(mu,{d})", relations=tuple(rels))


def pi_relations(d: int) -> RelationSet:
    """The partial-isometry relations: t_i* t_j diagonal/cross plus lower products."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    rels: list[Relation] = []
    for i in range(1, d + 1):
        rhs = NcPolynomial.one()
        for k in range(1, i):
            rhs = rhs - _pair(gen(k), gen_star(k))
        rels.append(Relation(f"diag/i{i}", _pair(gen_star(i), gen(i)), rhs, 2))
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            if i == j:
                continue
            rels.append(
                Relation(f"cross/i{i}j{j}", _pair(gen_star(i), gen(j)), NcPolynomial.zero(), 2)
            )
    for j in range(2, d + 1):
        for i in range(1, j):
            rels.append(
                Relation(f"order/j{j}i{i}", _pair(gen(j), gen(i)), NcPolynomial.zero(), 2)
            )
    return RelationSet(kind=f"PI({d})", relations=tuple(rels))


def qccr_relations() -> RelationSet:
    """One-mode deformed relation a* a = 1 + q a a* (q enters as the mu symbol)."""
    rhs = NcPolynomial.one() + _pair(gen(1), gen_star(1)) * MuPoly.mu(1)
    return RelationSet(
        kind="QCCR(q)",
        relations=(Relation("diag/i1", _pair(gen_star(1), gen(1)), rhs, 2),),
    )


def relation_residuals(
    family,
    relset: RelationSet,
    mu: float,
    *,
    command: str,
    params: dict,
    tolerance: float,
    symbol: str = "a",
    id_prefix: str = "",
) -> VerificationReport:
    """One core-residual check per relation in the set."""
    report = VerificationReport(command=command, params=params)
    for rel in relset.relations:
        lhs = evaluate_poly(family, rel.lhs, mu)
        rhs = evaluate_poly(family, rel.rhs, mu)
        residual = core_residual(lhs, rhs, rel.degree)
        report.add(
            id_prefix + rel.label,
            f"{rel.lhs.to_text(symbol)} = {rel.rhs.to_text(symbol)}",
            residual,
            tolerance,
        )
    return report


def tccr_residuals(a: TccrFamily, tolerance: float = MODEL_TOL, id_prefix: str = "tccr/") -> VerificationReport:
    params = {"d": a.d, "mu": a.mu, "cap": a.basis.cap, "tolerance": tolerance}
    return relation_residuals(
        a,
        tccr_relations(a.d),
        a.mu,
        command="tccr_residuals",
        params=params,
        tolerance=tolerance,
        symbol="a",
        id_prefix=id_prefix,
    )


def pi_residuals(t: GeneratorFamily, tolerance: float = MODEL_TOL, id_prefix: str = "pi/") -> VerificationReport:
    params: dict = {"d": t.d, "cap": t.basis.cap, "tolerance": tolerance}
    if t.spec is not None:
        params["class_j"] = t.spec.class_j
        params["phase"] = t.spec.phase
    return relation_residuals(
        t,
        pi_relations(t.d),
        0.0,
        command="pi_residuals",
        params=params,
        tolerance=tolerance,
        symbol="t",
        id_prefix=id_prefix,
    )


def qccr_residuals(op: LinearOperator, q: float, tolerance: float = 1e-12) -> VerificationReport:
    """Residual of the one-mode relation for a single generator."""

    class _OneOp:
        def __init__(self, op: LinearOperator):
            self.ops = (op,)
            self.basis = op.basis
            self.word_cache: dict = {}

    params = {"q": q, "cap": op.basis.cap, "tolerance": tolerance}
    return relation_residuals(
        _OneOp(op),
        qccr_relations(),
        q,
        command="qccr_residuals",
        params=params,
        tolerance=tolerance,
        symbol="a",
        id_prefix="qccr/",
    )


def norm_bound_check(a: TccrFamily, tolerance: float = MODEL_TOL) -> VerificationReport:
    """Norm bound 1/(1 - mu^2) on a_i a_i*, plus the truncated geometric value.

    The truncated norm of a_i a_i* equals the cap-step geometric sum
    1 + mu^2 + .. + mu^(2(cap-1)); both the bound and the exact value are
    recorded per generator.
    """
    mu = a.mu
    cap = a.basis.cap
    bound = 1.0 / (1.0 - mu * mu)
    truncated = geometric_sum(mu * mu, cap)
    report = VerificationReport(
        command="norm_bound_check",
        params={"d": a.d, "mu": mu, "cap": cap, "tolerance": tolerance},
    )
    for i, op in enumerate(a.ops, start=1):
        val = operator_norm(op @ op.adjoint())
        report.add(
            f"bound/i{i}",
            f"norm(a{i} a{i}*) <= 1/(1 - mu^2) = {bound:.12g}",
            val - bound,
            tolerance,
        )
        report.add(
            f"truncated/i{i}",
            f"norm(a{i} a{i}*) matches the cap-step geometric sum {truncated:.12g}",
            abs(val - truncated),
            tolerance,
        )
    return report


def _word_norm(family, word: Word) -> float:
    return operator_norm(evaluate_word(family, word))


def norm_domination_sample(
    d: int,
    cap: int,
    *,
    classes: Sequence[int] | None = None,
    phase: float = 0.0,
    n_words: int = 100,
    max_len: int = 6,
    seed: int = 42,
    words: Sequence[Word] | None = None,
    monotone_caps: Sequence[int] = (4, 6, 8),
    tolerance: float = DERIVED_TOL,
) -> VerificationReport:
    """Sampled evidence that the vacuum-cyclic norms dominate every class.

    For each word w and each class j < d the check is
    norm_j(w) <= norm_fock(w) + tol at the shared cap; a second group checks
    that the vacuum-cyclic norm of each word is monotone along a cap ladder.
    """
    if classes is None:
        classes = tuple(range(d))
    bad = [j for j in classes if not 0 <= j < d]
    if bad:
        raise ValueError(f"classes must lie in 0..{d - 1}, got {bad}")
    if words is None:
        words = [random_word(d, max_len, random.Random(f"{seed}:{k}")) for k in range(n_words)]
    fock = build_irrep(IrrepSpec(d=d, class_j=d, cap=cap))
    class_families = {j: build_irrep(IrrepSpec(d=d, class_j=j, cap=cap, phase=phase)) for j in classes}
    ladder = [build_irrep(IrrepSpec(d=d, class_j=d, cap=n)) for n in monotone_caps]

    report = VerificationReport(
        command="norm_domination_sample",
        params={
            "d": d,
            "cap": cap,
            "classes": list(classes),
            "phase": phase,
            "n_words": len(words),
            "max_len": max_len,
            "seed": seed,
            "monotone_caps": list(monotone_caps),
            "tolerance": tolerance,
        },
    )
    for k, word in enumerate(words):
        text = word_str(word, "t")
        fock_norm = _word_norm(fock, word)
        for j in classes:
            val = _word_norm(class_families[j], word)
            report.add(
                f"dominate/w{k:03d}/j{j}",
                f"norm_{j}({text}) <= norm_fock({text})",
                val - fock_norm,
                tolerance,
            )
        prev = None
        for fam in ladder:
            cur = _word_norm(fam, word)
            if prev is not None:
                report.add(
                    f"monotone/w{k:03d}/cap{fam.basis.cap}",
                    f"norm_fock({text}) non-decreasing from cap {prev[0]} to {fam.basis.cap}",
                    prev[1] - cur,
                    tolerance,
                )
            prev = (fam.basis.cap, cur)
    return report


# ---------------------------------------------------------------------------
# Slot collapse: the map sending the vacuum-cyclic family onto class j
# ---------------------------------------------------------------------------

# formal per-slot symbols for tensor words
SHIFT = "S"
SHIFT_STAR = "S*"
DEFECT = "D"

TensorWord = tuple[tuple[str, ...], ...]


def fock_generator_slots(d: int, i: int, starred: bool = False) -> TensorWord:
    """Tensor word of the i-th vacuum-cyclic generator over d slots."""
    if not 1 <= i <= d:
        raise ValueError(f"generator index {i} outside 1..{d}")
    slots = [(DEFECT,)] * (i - 1) + [(SHIFT_STAR if starred else SHIFT,)] + [()] * (d - i)
    return tuple(slots)


def tensor_word_product(u: TensorWord, v: TensorWord) -> TensorWord:
    if len(u) != len(v):
        raise ValueError("tensor words have different slot counts")
    return tuple(a + b for a, b in zip(u, v))


def apply_collapse(word: TensorWord, class_j: int, phase: float) -> tuple[complex, TensorWord]:
    """Collapse slots beyond class_j to scalars.

    Slots up to class_j are kept; in slot class_j + 1 the shift becomes the
    phase scalar (so the slot defect becomes 0); in later slots the shift
    becomes 1.  Returns the accumulated scalar and the surviving slots.
    """
    d = len(word)
    if not 0 <= class_j < d:
        raise ValueError(f"class_j must lie in 0..{d - 1}, got {class_j}")
    scalar: complex = 1.0
    for slot in range(class_j, d):
        shift_value = cmath.exp(1j * phase) if slot == class_j else 1.0
        for symbol in word[slot]:
            if symbol == SHIFT:
                scalar *= shift_value
            elif symbol == SHIFT_STAR:
                scalar *= shift_value.conjugate() if slot == class_j else 1.0
            elif symbol == DEFECT:
                scalar = 0.0
            else:
                raise ValueError(f"unknown slot symbol {symbol!r}")
    return scalar, word[:class_j]


def tensor_word_matrix(word: TensorWord, cap: int) -> np.ndarray:
    """Evaluate a tensor word as a matrix; zero slots give the one-slot identity."""
    s = shift_matrix(cap)
    lookup = {SHIFT: s, SHIFT_STAR: s.conj().T, DEFECT: defect_matrix(cap)}
    eye = np.eye(cap + 1, dtype=complex)
    out = np.eye(1, dtype=complex)
    slots = word if word else ((),)
    for slot in slots:
        mat = eye
        for symbol in slot:
            mat = mat @ lookup[symbol]
        out = np.kron(out, mat)
    return out


def collapse_check(
    d: int,
    class_j: int,
    phase: float,
    cap: int,
    tolerance: float = 1e-12,
) -> VerificationReport:
    """Collapse each vacuum-cyclic generator and compare with the class-j family."""
    if not 0 <= class_j < d:
        raise ValueError(f"class_j must lie in 0..{d - 1} (the top class needs no collapse), got {class_j}")
    target = build_irrep(IrrepSpec(d=d, class_j=class_j, cap=cap, phase=phase))
    report = VerificationReport(
        command="collapse_check",
        params={"d": d, "class_j": class_j, "phase": phase, "cap": cap, "tolerance": tolerance},
    )
    for i in range(1, d + 1):
        scalar, collapsed = apply_collapse(fock_generator_slots(d, i), class_j, phase)
        mat = scalar * tensor_word_matrix(collapsed, cap)
        image = LinearOperator(target.basis, mat)
        residual = operator_norm(image - target.ops[i - 1])
        report.add(
            f"collapse/t{i}",
            f"collapse of the vacuum-cyclic t{i} equals the class-{class_j} generator",
            residual,
            tolerance,
        )
    return report
