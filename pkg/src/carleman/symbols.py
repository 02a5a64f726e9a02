"""Principal symbols, weights, conjugation and phase-space brackets.

Operators live on the two sides of the flat interface {x_n = 0}; the
left side is pulled to {x_n > 0} by the reflection (x', x_n) ->
(x', -x_n) so that both conjugated symbols are polynomials in the same
normal covariable.  Only principal parts are represented: every
condition checked downstream depends on them alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import _kernels as K
from .poly import ComplexPolynomial

__all__ = [
    "CoefficientField",
    "OperatorSpec",
    "TransmissionOpSpec",
    "TransmissionPair",
    "WeightSide",
    "WeightSpec",
    "Scenario",
    "reflect_left",
    "conjugated_normal_polynomial",
    "PolySymbol",
    "poisson_bracket",
    "subellipticity_bracket",
    "conjugated_weight_bracket",
    "ScenarioError",
]

_FD_STEP_FACTOR = float(np.finfo(float).eps ** (1.0 / 3.0))


class ScenarioError(ValueError):
    """Raised when a scenario violates a structural invariant."""


@dataclass(frozen=True)
class CoefficientField:
    """Pointwise complex coefficient with a gradient.

    When no analytic gradient is supplied, central finite differences
    with step ~eps^(1/3)*(1+|x|) are used and ``finite_difference`` is
    set so reports can flag the reduced accuracy.
    """

    func: Callable[[np.ndarray], complex]
    grad_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    finite_difference: bool = field(default=False)

    def __post_init__(self):
        if self.grad_func is None:
            object.__setattr__(self, "finite_difference", True)

    @staticmethod
    def constant(c: complex) -> "CoefficientField":
        cc = complex(c)
        return CoefficientField(func=lambda x: cc, grad_func=lambda x: np.zeros(len(x), dtype=complex))

    def value(self, x: np.ndarray) -> complex:
        return complex(self.func(np.asarray(x, dtype=float)))

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad_func is not None:
            return np.asarray(self.grad_func(x), dtype=complex)
        h = _FD_STEP_FACTOR * (1.0 + float(np.linalg.norm(x)))
        g = np.zeros(len(x), dtype=complex)
        for j in range(len(x)):
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            g[j] = (self.func(xp) - self.func(xm)) / (2 * h)
        return g

    def gradient_consistency(self, x: np.ndarray, step: float | None = None) -> float:
        """Max abs difference between the stored gradient and central FD."""
        x = np.asarray(x, dtype=float)
        h = step if step is not None else 1e-5 * (1.0 + float(np.linalg.norm(x)))
        worst = 0.0
        g = self.grad(x)
        for j in range(len(x)):
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            fd = (self.func(xp) - self.func(xm)) / (2 * h)
            worst = max(worst, abs(fd - g[j]))
        return worst


class _TermTable:
    """Array view of a multi-index -> coefficient mapping."""

    def __init__(self, terms: Mapping[tuple, CoefficientField], dim: int):
        items = sorted(terms.items())
        self.alphas = np.array([a for a, _ in items], dtype=np.int64).reshape(len(items), dim)
        self.fields = [f for _, f in items]
        self._const_vals = None
        if all(f.grad_func is not None for f in self.fields):
            probe = np.zeros(dim)
            if all(
                np.allclose(f.grad(probe), 0) and np.allclose(f.grad(probe + 0.37), 0)
                for f in self.fields
            ):
                self._const_vals = np.array([f.value(probe) for f in self.fields], dtype=np.complex128)

    def values(self, x) -> np.ndarray:
        if self._const_vals is not None:
            return self._const_vals
        return np.array([f.value(x) for f in self.fields], dtype=np.complex128)

    def grads(self, x) -> np.ndarray:
        if self._const_vals is not None:
            return np.zeros((len(self.fields), self.alphas.shape[1]), dtype=np.complex128)
        return np.array([f.grad(x) for f in self.fields], dtype=np.complex128)

    @property
    def uses_fd(self) -> bool:
        return any(f.finite_difference for f in self.fields)


@dataclass(frozen=True)
class OperatorSpec:
    """Principal part of one side's elliptic operator."""

    dim: int
    order: int
    terms: Mapping[tuple, CoefficientField]
    eigenvalue_shift: bool = False

    def __post_init__(self):
        if self.order <= 0 or self.order % 2:
            raise ScenarioError(f"operator order must be even and positive, got {self.order}")
        for a in self.terms:
            if len(a) != self.dim or sum(a) != self.order:
                raise ScenarioError(f"multi-index {a} incompatible with order {self.order}, dim {self.dim}")
        object.__setattr__(self, "_table", _TermTable(self.terms, self.dim))

    @property
    def table(self) -> _TermTable:
        return self._table

    def symbol(self, x, xi) -> complex:
        """p(x, xi) for a possibly complex covector xi."""
        return complex(K.eval_terms(self._table.alphas, self._table.values(x), np.asarray(xi, dtype=complex)))


@dataclass(frozen=True)
class TransmissionOpSpec:
    """Principal part of one side of a transmission operator pair."""

    dim: int
    side: str
    index: int
    order: int
    terms: Mapping[tuple, CoefficientField]

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ScenarioError(f"side must be 'left' or 'right', got {self.side!r}")
        if self.order < 0:
            raise ScenarioError("transmission order must be non-negative")
        for a in self.terms:
            if len(a) != self.dim or sum(a) != self.order:
                raise ScenarioError(f"multi-index {a} incompatible with order {self.order}, dim {self.dim}")
        object.__setattr__(self, "_table", _TermTable(self.terms, self.dim))

    @property
    def table(self) -> _TermTable:
        return self._table

    def is_identically_zero(self) -> bool:
        return len(self.terms) == 0

    def symbol(self, x, xi) -> complex:
        if self.is_identically_zero():
            return 0.0
        return complex(K.eval_terms(self._table.alphas, self._table.values(x), np.asarray(xi, dtype=complex)))


@dataclass(frozen=True)
class TransmissionPair:
    left: TransmissionOpSpec
    right: TransmissionOpSpec


@dataclass(frozen=True)
class WeightSide:
    """Value, gradient and Hessian of a weight function on one side."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


def _reflect_weight_side(w: WeightSide) -> WeightSide:
    def refl(x):
        s = np.asarray(x, dtype=float).copy()
        s[-1] = -s[-1]
        return s

    def val(x):
        return w.value(refl(x))

    def grad(x):
        g = np.asarray(w.grad(refl(x)), dtype=float).copy()
        g[-1] = -g[-1]
        return g

    def hess(x):
        h = np.asarray(w.hess(refl(x)), dtype=float).copy()
        h[-1, :] *= -1
        h[:, -1] *= -1
        return h

    return WeightSide(val, grad, hess)


def _exp_weight_side(psi: WeightSide, gamma: float) -> WeightSide:
    def val(x):
        return float(np.exp(gamma * psi.value(x)))

    def grad(x):
        return gamma * val(x) * np.asarray(psi.grad(x), dtype=float)

    def hess(x):
        g = np.asarray(psi.grad(x), dtype=float)
        return gamma * val(x) * (np.asarray(psi.hess(x), dtype=float) + gamma * np.outer(g, g))

    return WeightSide(val, grad, hess)


@dataclass(frozen=True)
class WeightSpec:
    """Piecewise weight, given directly or generated as exp(gamma*psi)."""

    left: WeightSide = None
    right: WeightSide = None
    psi_left: WeightSide = None
    psi_right: WeightSide = None
    gamma: float = None

    def __post_init__(self):
        if self.two_parameter:
            if self.psi_left is None or self.psi_right is None:
                raise ScenarioError("two-parameter weight needs psi on both sides")
            if not (self.gamma > 0):
                raise ScenarioError("gamma must be positive")
            object.__setattr__(self, "left", _exp_weight_side(self.psi_left, self.gamma))
            object.__setattr__(self, "right", _exp_weight_side(self.psi_right, self.gamma))
        elif self.left is None or self.right is None:
            raise ScenarioError("direct weight needs phi on both sides")

    @property
    def two_parameter(self) -> bool:
        return self.gamma is not None

    def with_gamma(self, gamma: float) -> "WeightSpec":
        if not self.two_parameter:
            raise ScenarioError("with_gamma requires a two-parameter weight")
        return WeightSpec(psi_left=self.psi_left, psi_right=self.psi_right, gamma=gamma)

    def side(self, side: str) -> WeightSide:
        return self.left if side == "left" else self.right

    def psi_side(self, side: str) -> WeightSide:
        return self.psi_left if side == "left" else self.psi_right

    def system_side(self, side: str) -> WeightSide:
        """Weight on the system half-space: left side reflected."""
        w = self.side(side)
        return _reflect_weight_side(w) if side == "left" else w

    def system_psi_side(self, side: str) -> WeightSide:
        psi = self.psi_side(side)
        if psi is None:
            return None
        return _reflect_weight_side(psi) if side == "left" else psi


def reflect_left(op):
    """Pull a left-side operator through (x', x_n) -> (x', -x_n).

    The coefficient of xi^alpha at x becomes the original coefficient at
    the reflected point times (-1)^(alpha_n).
    """

    def refl_field(f: CoefficientField, alpha_n: int) -> CoefficientField:
        sign = -1.0 if alpha_n % 2 else 1.0

        def func(x, _f=f, _s=sign):
            s = np.asarray(x, dtype=float).copy()
            s[-1] = -s[-1]
            return _s * _f.value(s)

        grad_func = None
        if f.grad_func is not None:
            def grad_func(x, _f=f, _s=sign):
                s = np.asarray(x, dtype=float).copy()
                s[-1] = -s[-1]
                g = np.asarray(_f.grad(s), dtype=complex).copy()
                g[-1] = -g[-1]
                return _s * g

        return CoefficientField(func=func, grad_func=grad_func, finite_difference=f.finite_difference)

    new_terms = {a: refl_field(f, a[-1]) for a, f in op.terms.items()}
    if isinstance(op, OperatorSpec):
        return OperatorSpec(dim=op.dim, order=op.order, terms=new_terms, eigenvalue_shift=op.eigenvalue_shift)
    return TransmissionOpSpec(dim=op.dim, side=op.side, index=op.index, order=op.order, terms=new_terms)


@dataclass(frozen=True)
class Scenario:
    """Full transmission problem: two operators, m pairs, weight, base point."""

    dim: int
    left: OperatorSpec
    right: OperatorSpec
    transmission: Sequence[TransmissionPair]
    weight: WeightSpec
    x0: tuple
    name: str = ""
    # escape hatch for mixed-order examples whose constant transmission
    # symbols do not satisfy m_l - beta_l = m_r - beta_r
    allow_order_mismatch: bool = False

    def __post_init__(self):
        if self.dim < 2:
            raise ScenarioError("dimension must be at least 2")
        m = (self.left.order + self.right.order) // 2
        if (self.left.order + self.right.order) % 2:
            raise ScenarioError("operator orders must have an even sum")
        if len(self.transmission) != m:
            raise ScenarioError(f"expected m={m} transmission pairs, got {len(self.transmission)}")
        for pair in self.transmission:
            mismatch = self.left.order - pair.left.order != self.right.order - pair.right.order
            if mismatch and not self.allow_order_mismatch:
                raise ScenarioError(
                    f"transmission pair {pair.left.index}: order compatibility "
                    f"m_l - beta_l = m_r - beta_r violated"
                )
            if pair.left.order >= self.left.order or pair.right.order >= self.right.order:
                raise ScenarioError("transmission order must be below the operator order")
        x0 = tuple(float(v) for v in self.x0)
        if len(x0) != self.dim or abs(x0[-1]) > 1e-12:
            raise ScenarioError("x0 must lie on the interface {x_n = 0}")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(
            self,
            "_system_ops",
            {"left": reflect_left(self.left), "right": self.right},
        )
        object.__setattr__(
            self,
            "_system_trans",
            {
                "left": tuple(reflect_left(p.left) for p in self.transmission),
                "right": tuple(p.right for p in self.transmission),
            },
        )

    @property
    def m(self) -> int:
        return (self.left.order + self.right.order) // 2

    def operator(self, side: str) -> OperatorSpec:
        return self.left if side == "left" else self.right

    def system_operator(self, side: str) -> OperatorSpec:
        """The side's operator on the system half-space {x_n > 0}."""
        return self._system_ops[side]

    def system_transmission(self, side: str):
        return self._system_trans[side]

    def validate(self, interface_points=None, rtol: float = 1e-10) -> None:
        """Check pointwise invariants at sampled interface points."""
        pts = interface_points
        if pts is None:
            x0 = np.asarray(self.x0)
            pts = [x0]
            for j in range(self.dim - 1):
                for s in (-0.25, 0.25):
                    p = x0.copy()
                    p[j] += s
                    pts.append(p)
        en = np.zeros(self.dim)
        en[-1] = 1.0
        for x in pts:
            x = np.asarray(x, dtype=float)
            for side in ("left", "right"):
                op = self.operator(side)
                alpha_top = tuple([0] * (self.dim - 1) + [op.order])
                if alpha_top not in op.terms:
                    raise ScenarioError(f"{side}: missing normal term xi_n^{op.order}")
                top = op.terms[alpha_top].value(x)
                if abs(top - 1.0) > 1e-9:
                    raise ScenarioError(f"{side}: normal coefficient must be 1, got {top} at {x}")
            wl = self.weight.side("left").value(x)
            wr = self.weight.side("right").value(x)
            scale = max(1.0, abs(wl), abs(wr))
            if abs(wl - wr) > rtol * scale:
                raise ScenarioError(f"weight discontinuous across the interface at {x}: {wl} vs {wr}")
            for pair in self.transmission:
                for t in (pair.left, pair.right):
                    if t.is_identically_zero():
                        # a vanishing symbol on one side is allowed; the
                        # partner column still carries the condition
                        continue
                    if abs(t.symbol(x, en)) == 0.0:
                        raise ScenarioError(
                            f"transmission symbol {t.index} ({t.side}) characteristic in the normal direction at {x}"
                        )
        for side in ("left", "right"):
            orders = [
                (p.left if side == "left" else p.right).order
                for p in self.transmission
                if not (p.left if side == "left" else p.right).is_identically_zero()
            ]
            if any(b < a for a, b in zip(orders, orders[1:])):
                raise ScenarioError(f"{side}: transmission orders must be non-decreasing")


def _conjugated_table_poly(table: _TermTable, order: int, w: WeightSide, x, xi_prime, tau) -> ComplexPolynomial:
    phi_grad = np.asarray(w.grad(x), dtype=float)
    zeta_tang = np.asarray(xi_prime, dtype=complex) + 1j * tau * phi_grad[:-1]
    shift = 1j * tau * phi_grad[-1]
    coeffs = K.normal_poly_coeffs(table.alphas, table.values(x), zeta_tang, complex(shift), order)
    return ComplexPolynomial(tuple(coeffs))


def conjugated_normal_polynomial(scn: Scenario, side: str, q) -> ComplexPolynomial:
    """Conjugated symbol of one side as a polynomial in the normal covariable.

    ``q`` is an interface quadruple (attributes x, xi, tau, scale); the
    polynomial is evaluated at the raw covector scale * (xi, tau).  The
    left side is the reflected operator and weight.  With the
    eigenvalue-shift flag, tau^m is subtracted from the constant term.
    """
    x = np.asarray(q.x, dtype=float)
    if abs(x[-1]) > 1e-12:
        raise ScenarioError("quadruple must lie on the interface {x_n = 0}")
    scale = getattr(q, "scale", 1.0)
    xi_prime = scale * np.asarray(q.xi, dtype=float)
    tau = scale * float(q.tau)
    if np.linalg.norm(xi_prime) == 0.0 and tau == 0.0:
        raise ScenarioError("zero covector (xi', tau)")
    op = scn.system_operator(side)
    w = scn.weight.system_side(side)
    p = _conjugated_table_poly(op.table, op.order, w, x, xi_prime, tau)
    if op.eigenvalue_shift:
        c = list(p.coeffs)
        c[0] -= tau**op.order
        p = ComplexPolynomial(tuple(c))
    return p


def conjugated_transmission_polynomial(scn: Scenario, side: str, j: int, q) -> ComplexPolynomial:
    """Conjugated transmission symbol j (1-based) on one system side."""
    x = np.asarray(q.x, dtype=float)
    scale = getattr(q, "scale", 1.0)
    xi_prime = scale * np.asarray(q.xi, dtype=float)
    tau = scale * float(q.tau)
    t = scn.system_transmission(side)[j - 1]
    if t.is_identically_zero():
        return ComplexPolynomial((0.0,))
    w = scn.weight.system_side(side)
    return _conjugated_table_poly(t.table, t.order, w, x, xi_prime, tau)


class PolySymbol:
    """Polynomial phase-space symbol with analytic (x, xi) gradients."""

    def __init__(self, op_or_table, weightless: bool = True):
        table = op_or_table.table if hasattr(op_or_table, "table") else op_or_table
        self._table = table

    def value(self, x, xi) -> complex:
        return complex(K.eval_terms(self._table.alphas, self._table.values(x), np.asarray(xi, dtype=complex)))

    def grad_xi(self, x, xi) -> np.ndarray:
        return K.grad_xi_terms(self._table.alphas, self._table.values(x), np.asarray(xi, dtype=complex))

    def grad_x(self, x, xi) -> np.ndarray:
        zeta = np.asarray(xi, dtype=complex)
        grads = self._table.grads(x)  # n_terms x n
        n = grads.shape[1]
        out = np.zeros(n, dtype=complex)
        for l in range(n):
            out[l] = K.eval_terms(self._table.alphas, np.ascontiguousarray(grads[:, l]), zeta)
        return out


def poisson_bracket(f, g, x, xi) -> complex:
    """{f, g} = sum_j (df/dxi_j dg/dx_j - df/dx_j dg/dxi_j) at (x, xi).

    ``f`` and ``g`` expose grad_x / grad_xi; any parameter (such as tau)
    must already be frozen inside the evaluators.
    """
    fx = np.asarray(f.grad_x(x, xi))
    fxi = np.asarray(f.grad_xi(x, xi))
    gx = np.asarray(g.grad_x(x, xi))
    gxi = np.asarray(g.grad_xi(x, xi))
    return complex(np.sum(fxi * gx - fx * gxi))


def _conjugated_gradients(op: OperatorSpec, w: WeightSide, x, xi, tau):
    """Value, xi-gradient and x-gradient of p(x, xi + i*tau*w'(x))."""
    x = np.asarray(x, dtype=float)
    phi_grad = np.asarray(w.grad(x), dtype=float)
    zeta = np.asarray(xi, dtype=float) + 1j * tau * phi_grad
    table = op.table
    cvals = table.values(x)
    val = complex(K.eval_terms(table.alphas, cvals, zeta))
    g_xi = K.grad_xi_terms(table.alphas, cvals, zeta)
    hess = np.asarray(w.hess(x), dtype=float)
    g_x = 1j * tau * (hess @ g_xi)
    grads = table.grads(x)
    if grads.any():
        for l in range(len(x)):
            g_x[l] += K.eval_terms(table.alphas, np.ascontiguousarray(grads[:, l]), zeta)
    return val, g_xi, g_x


def conjugated_weight_bracket(op: OperatorSpec, w: WeightSide, x, xi, tau):
    """The real bracket {Re p_w, Im p_w} at (x, xi) with tau inert.

    Equals (1/2i){conj(p)(x, xi - i tau w'), p(x, xi + i tau w')};
    computed as Im sum_j conj(d_xi_j p_w) d_x_j p_w.
    """
    val, g_xi, g_x = _conjugated_gradients(op, w, x, xi, tau)
    return float(np.imag(np.vdot(g_xi, g_x))), val, g_xi


def subellipticity_bracket(scn: Scenario, side: str, x, xi, tau) -> float:
    """{a, b}(x, xi, tau) with p_phi = a + i b on one system side."""
    if tau < 0:
        raise ScenarioError("tau must be non-negative")
    if np.linalg.norm(xi) == 0.0 and tau == 0.0:
        raise ScenarioError("zero covector (xi, tau)")
    op = scn.system_operator(side)
    w = scn.weight.system_side(side)
    br, _, _ = conjugated_weight_bracket(op, w, x, xi, tau)
    return br
