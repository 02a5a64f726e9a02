"""Complex polynomial arithmetic, root finding and imaginary-sign splits.

Polynomials here live in the normal covariable of an interface problem.
The central operation is :func:`split`, which factors a polynomial into
monic factors whose roots have positive / negative / (near-)zero
imaginary part, and :func:`kappa`, the product of the positive and zero
factors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K

__all__ = [
    "ComplexPolynomial",
    "RootClass",
    "RootSplit",
    "SplitResult",
    "roots",
    "cluster_multiplicities",
    "split",
    "kappa",
    "DEFAULT_EPS_IM_FACTOR",
    "DEFAULT_DELTA_FACTOR",
]

DEFAULT_EPS_IM_FACTOR = 1e-7
DEFAULT_DELTA_FACTOR = 1e-5

_NEWTON_STEPS = 5


class RootClass(enum.Enum):
    POS = "pos"
    NEG = "neg"
    ZERO = "zero"


@dataclass(frozen=True)
class ComplexPolynomial:
    """Dense univariate polynomial; coeffs[k] multiplies the k-th power."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(v) for v in self.coeffs)
        # trim exact trailing zeros, keep at least the constant term
        d = len(c) - 1
        while d > 0 and c[d] == 0:
            d -= 1
        object.__setattr__(self, "coeffs", c[: d + 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> complex:
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __call__(self, z: complex) -> complex:
        return complex(K.horner(np.asarray(self.coeffs, dtype=np.complex128), complex(z)))

    def naive_eval(self, z: complex) -> complex:
        """Plain power-sum evaluation, kept as an oracle for Horner."""
        return sum(c * z**k for k, c in enumerate(self.coeffs))

    def derivative(self) -> "ComplexPolynomial":
        if self.degree == 0:
            return ComplexPolynomial((0.0,))
        return ComplexPolynomial(tuple(k * c for k, c in enumerate(self.coeffs))[1:])

    def monic(self) -> "ComplexPolynomial":
        if self.lead == 0:
            raise ValueError("cannot normalize the zero polynomial")
        return ComplexPolynomial(tuple(c / self.lead for c in self.coeffs))

    def __mul__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        a = np.asarray(self.coeffs, dtype=np.complex128)
        b = np.asarray(other.coeffs, dtype=np.complex128)
        return ComplexPolynomial(tuple(K.polymul(a, b)))

    def scale(self, c: complex) -> "ComplexPolynomial":
        return ComplexPolynomial(tuple(c * v for v in self.coeffs))

    @staticmethod
    def one() -> "ComplexPolynomial":
        return ComplexPolynomial((1.0,))

    @staticmethod
    def from_roots(rs: Iterable[complex], lead: complex = 1.0) -> "ComplexPolynomial":
        coeffs = K.poly_from_roots(np.asarray(list(rs), dtype=np.complex128))
        return ComplexPolynomial(tuple(coeffs)).scale(lead) if lead != 1.0 else ComplexPolynomial(tuple(coeffs))


@dataclass(frozen=True)
class RootSplit:
    """Clustered roots with their imaginary-sign classes."""

    entries: tuple  # of (root: complex, multiplicity: int, RootClass)
    eps_im: float
    source_degree: int

    def count(self, cls: RootClass) -> int:
        return sum(m for _, m, c in self.entries if c is cls)

    def roots_of(self, cls: RootClass):
        out = []
        for r, m, c in self.entries:
            if c is cls:
                out.extend([r] * m)
        return out


@dataclass(frozen=True)
class SplitResult:
    p_plus: ComplexPolynomial
    p_minus: ComplexPolynomial
    p_zero: ComplexPolynomial
    lead: complex
    root_split: RootSplit

    @property
    def m_minus(self) -> int:
        return self.p_minus.degree


def roots(p: ComplexPolynomial) -> np.ndarray:
    """All roots of ``p`` with repetition, deterministically ordered.

    Eigenvalues of the companion matrix followed by a few Newton
    refinement steps on the original coefficients; sorted by
    (real, imag).
    """
    if p.degree < 1:
        raise ValueError("constant polynomial has no roots")
    if p.lead == 0:
        raise ValueError("leading coefficient vanished after trim")
    coeffs = np.asarray(p.coeffs, dtype=np.complex128)
    # np.roots builds the companion matrix; LAPACK balances it internally
    rs = np.roots(coeffs[::-1])
    rs = K.newton_refine(coeffs, rs, _NEWTON_STEPS)
    order = np.lexsort((rs.imag, rs.real))
    return rs[order]


def cluster_multiplicities(rs: Sequence[complex], delta: float):
    """Greedy single-linkage clustering at radius ``delta``.

    Returns a list of (center, multiplicity); centers are cluster means
    and multiplicities sum to ``len(rs)``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    arr = np.asarray(list(rs), dtype=np.complex128)
    if arr.size == 0:
        return []
    order = np.lexsort((arr.imag, arr.real))
    centers, mults = K.cluster_greedy(arr[order], float(delta))
    return [(complex(c), int(m)) for c, m in zip(centers, mults)]


def _scaled_tolerances(rs, eps_im, delta):
    scale = max(1.0, float(np.max(np.abs(rs))) if len(rs) else 1.0)
    if eps_im is None:
        eps_im = DEFAULT_EPS_IM_FACTOR * scale
    if delta is None:
        delta = DEFAULT_DELTA_FACTOR * scale
    return eps_im, delta


def split(p: ComplexPolynomial, eps_im: float | None = None, delta: float | None = None) -> SplitResult:
    """Factor ``p`` as lead * p_plus * p_minus * p_zero by root signs.

    Roots are clustered at radius ``delta`` and classified by the sign
    of the imaginary part of cluster centers against ``eps_im``;
    near-real roots land in the zero factor.  Defaults scale with the
    largest root magnitude.
    """
    if p.is_zero():
        raise ValueError("cannot split the identically-zero polynomial")
    if p.degree == 0:
        one = ComplexPolynomial.one()
        rs = RootSplit(entries=(), eps_im=0.0, source_degree=0)
        return SplitResult(one, one, one, p.coeffs[0], rs)
    rs = roots(p)
    eps_im, delta = _scaled_tolerances(rs, eps_im, delta)
    clusters = cluster_multiplicities(rs, delta)
    entries = []
    buckets = {RootClass.POS: [], RootClass.NEG: [], RootClass.ZERO: []}
    for center, mult in clusters:
        if center.imag > eps_im:
            cls = RootClass.POS
        elif center.imag < -eps_im:
            cls = RootClass.NEG
        else:
            cls = RootClass.ZERO
        entries.append((center, mult, cls))
        buckets[cls].extend([center] * mult)
    root_split = RootSplit(entries=tuple(entries), eps_im=eps_im, source_degree=p.degree)
    return SplitResult(
        p_plus=ComplexPolynomial.from_roots(buckets[RootClass.POS]),
        p_minus=ComplexPolynomial.from_roots(buckets[RootClass.NEG]),
        p_zero=ComplexPolynomial.from_roots(buckets[RootClass.ZERO]),
        lead=p.lead,
        root_split=root_split,
    )


def kappa(sp: SplitResult) -> ComplexPolynomial:
    """Monic product of the positive and zero factors of a split."""
    return sp.p_plus * sp.p_zero
