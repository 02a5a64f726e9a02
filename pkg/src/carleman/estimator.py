"""Discrete validation of the weighted interface inequality on
Fourier-reduced one-dimensional transmission models.

Coefficients are frozen at the base interface point and the weight
depends on the normal variable only, so a tangential Fourier transform
reduces the problem to coupled ODEs on [0, L] per side; fractional
interface norms become exact scalar weights (|xi'|^2 + tau^2)^s.  The
measured constant is the top generalized eigenvalue of the pencil of
the discrete left/right quadratic forms.

The weighted-norm and operator forms are assembled on the full grid
with 4th-order finite differences; the Rayleigh quotient is taken over
a smooth trial subspace (low discrete-cosine modes) so that quotient
extremizers stay inside the band where the stencils are accurate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.special import comb

from .symbols import Scenario, ScenarioError

__all__ = [
    "ModelProblem",
    "EstimateCurve",
    "PencilError",
    "build_conjugated_ode",
    "carleman_ratio",
    "sweep",
    "smooth_mask",
    "diff_matrix",
]

TRIAL_FRACTION = 5  # trial space keeps N // TRIAL_FRACTION cosine modes per side
EPS_FACTOR = 1e-12


class PencilError(RuntimeError):
    """Right quadratic form is not positive definite beyond the regularization."""


def diff_matrix(n: int, h: float) -> np.ndarray:
    """4th-order first-derivative matrix; one-sided rows at the ends."""
    D = np.zeros((n, n))
    c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    for i in range(2, n - 2):
        D[i, i - 2 : i + 3] = c
    D[0, 0:5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    D[1, 0:5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    D[n - 2, n - 5 : n] = -np.array([-3.0, -10.0, 18.0, -6.0, 1.0])[::-1] / 12.0
    D[n - 1, n - 5 : n] = -np.array([-25.0, 48.0, -36.0, 16.0, -3.0])[::-1] / 12.0
    return D / h


def smooth_mask(x: np.ndarray, length: float, order: int) -> np.ndarray:
    """Squared smoothstep cutoff: 1 near 0, identically 0 on the last L/8.

    The transition lives on [L/2, 7L/8]; the smoothstep order makes the
    first ``order`` derivatives vanish at both junctions.
    """

    lo, hi = 0.5 * length, 0.875 * length
    t = np.clip((hi - np.asarray(x, dtype=float)) / (hi - lo), 0.0, 1.0)
    n = order
    s = np.zeros_like(t)
    for k in range(n + 1):
        s += comb(n + k, k, exact=True) * comb(2 * n + 1, n - k, exact=True) * (-t) ** k
    s *= t ** (n + 1)
    return np.clip(s, 0.0, 1.0) ** 2


def _dct_basis(n: int, k: int) -> np.ndarray:
    """First k orthonormal DCT-II column vectors on an n-point grid."""
    i = np.arange(n)[:, None]
    j = np.arange(k)[None, :]
    B = np.cos(np.pi * (i + 0.5) * j / n)
    B[:, 0] *= 1.0 / np.sqrt(2.0)
    return B * np.sqrt(2.0 / n)


def _root_branches(mp: "ModelProblem", side: str, tau: float, gamma: float | None):
    """Roots of the conjugated symbol along the grid, matched into
    smooth branches (nearest-neighbor continuation)."""
    coeffs = mp.tangential_coeffs(side)
    _, dphi = mp.weight_profile(side, gamma)
    w = tau * dphi
    m = len(coeffs) - 1
    n = mp.n_grid
    branches = np.zeros((m, n), dtype=complex)
    prev = None
    for i in range(n):
        # substitute xi_n -> xi_n + i w(x_i) by binomial shift of each power
        shifted = np.zeros_like(coeffs)
        s = 1j * w[i]
        for kk in range(m + 1):
            if coeffs[kk] == 0:
                continue
            for j in range(kk + 1):
                shifted[j] += coeffs[kk] * comb(kk, j, exact=True) * s ** (kk - j)
        rs = np.roots(shifted[::-1])
        rs = rs[np.lexsort((rs.imag, rs.real))]
        if prev is not None:
            used = np.zeros(m, dtype=bool)
            ordered = np.empty(m, dtype=complex)
            for bi in range(m):
                d = np.abs(rs - prev[bi]) + np.where(used, np.inf, 0.0)
                jj = int(np.argmin(d))
                used[jj] = True
                ordered[bi] = rs[jj]
            rs = ordered
        branches[:, i] = rs
        prev = rs
    return branches


def _trial_basis(mp: "ModelProblem", side: str, tau: float, gamma: float | None) -> np.ndarray:
    """Smooth trial space: low cosine modes enriched with WKB
    boundary-layer profiles of the conjugated-symbol root branches."""
    n = mp.n_grid
    k = max(16, n // TRIAL_FRACTION)
    cols = [_dct_basis(n, k)]
    h = mp.h
    try:
        branches = _root_branches(mp, side, tau, gamma)
    except Exception:
        branches = np.zeros((0, n), dtype=complex)
    for b in branches:
        expo = 1j * (np.cumsum(b) - b[0]) * h
        expo = np.clip(expo.real, -60.0, 2.0) + 1j * expo.imag
        v = np.exp(expo)
        nrm = np.linalg.norm(v)
        if np.isfinite(nrm) and nrm > 0:
            cols.append((v / nrm)[:, None])
    M = np.hstack(cols)
    q, r = np.linalg.qr(M)
    keep = np.abs(np.diag(r)) > 1e-10
    return np.ascontiguousarray(q[:, keep])


@dataclass(frozen=True)
class ModelProblem:
    """Fourier-reduced transmission model on [0, L] per system side."""

    scn: Scenario
    xi: tuple
    length: float = 1.0
    n_grid: int = 400
    sides: tuple = ("left", "right")

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
        if len(self.xi) != self.scn.dim - 1:
            raise ScenarioError("tangential covector has wrong dimension")
        for s in self.sides:
            order = self.scn.operator(s).order
            if self.n_grid < 8 * order:
                raise ScenarioError(f"grid too small: need at least {8 * order} points for order {order}")
        x0 = np.asarray(self.scn.x0, dtype=float)
        for s in self.sides:
            w = self.scn.weight.system_side(s)
            for xn in (0.0, self.length / 3, self.length):
                g = np.asarray(w.grad(self._embed(xn)), dtype=float)
                if np.max(np.abs(g[:-1])) > 1e-10:
                    raise ScenarioError("model weight must depend on x_n only")

    def _embed(self, xn: float) -> np.ndarray:
        x = np.asarray(self.scn.x0, dtype=float).copy()
        x[-1] = xn
        return x

    @property
    def h(self) -> float:
        return self.length / self.n_grid

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n_grid) * self.h

    def mask(self, order: int | None = None) -> np.ndarray:
        if order is None:
            order = max(self.scn.operator(s).order for s in self.sides)
        return smooth_mask(self.grid, self.length, order + 1)

    def with_xi(self, xi) -> "ModelProblem":
        return dataclasses.replace(self, xi=tuple(xi))

    def tangential_coeffs(self, side: str, order_limit: int | None = None, trans_index: int | None = None):
        """Coefficients of the frozen symbol as a polynomial in xi_n.

        Returns the complex array [p_0(xi'), ..., p_order(xi')] of the
        side's operator (or of transmission symbol ``trans_index``).
        """
        if trans_index is None:
            op = self.scn.system_operator(side)
            order = op.order
            table = op.table
        else:
            op = self.scn.system_transmission(side)[trans_index - 1]
            order = op.order
            table = op.table if not op.is_identically_zero() else None
        out = np.zeros(order + 1, dtype=complex)
        if table is None:
            return out
        x0 = np.asarray(self.scn.x0, dtype=float)
        cvals = table.values(x0)
        xi = np.asarray(self.xi, dtype=complex)
        for t in range(table.alphas.shape[0]):
            an = int(table.alphas[t, -1])
            w = cvals[t]
            for j in range(table.alphas.shape[1] - 1):
                a = int(table.alphas[t, j])
                if a:
                    w *= xi[j] ** a
            out[an] += w
        return out

    def weight_profile(self, side: str, gamma: float | None = None):
        """(phi, dphi) arrays on the grid for the given side."""
        scn = self.scn
        if gamma is not None:
            scn = dataclasses.replace(scn, weight=scn.weight.with_gamma(gamma))
        w = scn.weight.system_side(side)
        phi = np.array([w.value(self._embed(xn)) for xn in self.grid])
        dphi = np.array([float(np.asarray(w.grad(self._embed(xn)))[-1]) for xn in self.grid])
        return phi, dphi


def build_conjugated_ode(mp: ModelProblem, side: str, tau: float, gamma: float | None = None):
    """Discrete conjugated operator of one side, composed with the cutoff.

    Returns (A, B, M): A = sum_j p_j(xi') B^j M with B = D_n + i tau phi'
    and M the smooth cutoff; D_n uses 4th-order centered stencils with
    one-sided rows at the ends of the grid.
    """
    n = mp.n_grid
    _, dphi = mp.weight_profile(side, gamma)
    D1 = diff_matrix(n, mp.h)
    B = -1j * D1 + 1j * tau * np.diag(dphi)
    coeffs = mp.tangential_coeffs(side)
    M = np.diag(mp.mask())
    A = np.zeros((n, n), dtype=complex)
    P = np.eye(n, dtype=complex)
    for j, cj in enumerate(coeffs):
        if j > 0:
            P = B @ P
        if cj != 0:
            A += cj * P
    return A @ M, B, M


@dataclass(frozen=True)
class EstimateCurve:
    """Sampled discrete estimate constants over tau (and gamma)."""

    points: tuple  # of dicts {tau, gamma, C, eps, N}
    scenario: str
    xi_samples: tuple

    def max_over_min(self) -> float:
        cs = [p["C"] for p in self.points]
        return max(cs) / min(cs)


def _side_forms(mp: ModelProblem, side: str, tau: float, gamma: float | None,
                simple_char: bool, basis: np.ndarray):
    """Left and right quadratic-form blocks of one side on the trial basis."""
    scn = mp.scn
    op = scn.operator(side)
    m_k = op.order
    n = mp.n_grid
    h = mp.h
    Avm, B, M = build_conjugated_ode(mp, side, tau, gamma)
    V = (M @ basis)  # masked trial functions
    two_param = gamma is not None
    if two_param:
        phi, _ = mp.weight_profile(side, gamma)
        tau_tilde = tau * gamma * phi
        lam2 = float(np.dot(mp.xi, mp.xi) + tau_tilde[0] ** 2)
    else:
        tau_tilde = None
        lam2 = float(np.dot(mp.xi, mp.xi) + tau ** 2)

    # volume part of the weighted Sobolev norm
    L = np.zeros((basis.shape[1], basis.shape[1]), dtype=complex)
    Dk = V.copy()
    terms = []
    for k in range(m_k + 1):
        if k > 0:
            Dk = B @ Dk
        terms.append(Dk)
    if two_param:
        Wm = (tau_tilde ** -0.5)[:, None]
        for k, Dk in enumerate(terms):
            Wk = (tau_tilde ** (m_k - k))[:, None]
            G = Wk * Wm * Dk
            L += h * (G.conj().T @ G)
        if simple_char:
            L *= gamma
    else:
        for k, Dk in enumerate(terms):
            G = tau ** (m_k - k) * Dk
            L += h * (G.conj().T @ G)
        L /= tau

    # interface traces of the successive conjugated normal derivatives
    traces = []
    Bj = V.copy()
    for j in range(m_k):
        row = Bj[0, :]
        wgt = lam2 ** (m_k - 1 - j + 0.5)
        L += wgt * np.outer(row.conj(), row)
        traces.append(row)
        Bj = B @ Bj

    R = h * ((Avm @ basis).conj().T @ (Avm @ basis))
    return L, R, B, V, lam2


def _transmission_rows(mp: ModelProblem, sides, tau, gamma, Bs, Vs, lam2):
    """RHS interface rows: conjugated transmission symbols applied at x=0."""
    scn = mp.scn
    m = scn.m
    rows = []
    for j in range(1, m + 1):
        betas = []
        row_parts = []
        for side in sides:
            t_op = scn.system_transmission(side)[j - 1]
            coeffs = mp.tangential_coeffs(side, trans_index=j)
            B, V = Bs[side], Vs[side]
            part = np.zeros(V.shape[1], dtype=complex)
            P = V.copy()
            for i, ci in enumerate(coeffs):
                if i > 0:
                    P = B @ P
                if ci != 0:
                    part += ci * P[0, :]
            row_parts.append(part)
            betas.append(t_op.order if not t_op.is_identically_zero() else t_op.order)
        beta_j = sum(betas) / len(betas)
        wgt = lam2 ** (m - beta_j - 0.5)
        rows.append((wgt, np.concatenate(row_parts)))
    return rows


def carleman_ratio(
    mp: ModelProblem,
    tau: float,
    gamma: float | None = None,
    simple_char: bool = False,
    return_eps: bool = False,
):
    """Best discrete constant of the weighted interface inequality.

    Largest generalized eigenvalue of (L, R + eps I) with L the
    tau-weighted solution and trace norms and R the conjugated-operator
    plus transmission-mismatch norms, both restricted to the smooth
    trial space.  ``gamma`` switches to the two-parameter weights
    tau_tilde = tau * gamma * phi; ``simple_char`` adds the extra gamma
    prefactor of the sharper estimate.
    """
    if tau < 1.0:
        raise ScenarioError("tau below the floor of the discrete model")
    if gamma is not None and not mp.scn.weight.two_parameter:
        raise ScenarioError("gamma given but the weight is not two-parameter")
    sides = mp.sides
    Ls, Rs, Bs, Vs = {}, {}, {}, {}
    lam2 = None
    for side in sides:
        basis = _trial_basis(mp, side, tau, gamma)
        L_s, R_s, B, V, lam2 = _side_forms(mp, side, tau, gamma, simple_char, basis)
        Ls[side], Rs[side], Bs[side], Vs[side] = L_s, R_s, B, V
    L = scipy.linalg.block_diag(*[Ls[s] for s in sides])
    R = scipy.linalg.block_diag(*[Rs[s] for s in sides])
    for wgt, row in _transmission_rows(mp, sides, tau, gamma, Bs, Vs, lam2):
        R += wgt * np.outer(row.conj(), row)
    L = 0.5 * (L + L.conj().T)
    R = 0.5 * (R + R.conj().T)
    dim = R.shape[0]
    eps = EPS_FACTOR * float(np.trace(R).real) / dim
    try:
        vals = scipy.linalg.eigh(L, R + eps * np.eye(dim), eigvals_only=True)
    except scipy.linalg.LinAlgError as exc:
        wmin = float(scipy.linalg.eigvalsh(R).min())
        raise PencilError(f"right form not positive definite beyond eps={eps}: min eig {wmin}") from exc
    C = float(vals[-1])
    if C < 0:
        raise PencilError(f"negative top eigenvalue {C}")
    return (C, eps) if return_eps else C


def sweep(
    mp: ModelProblem,
    tau_list: Sequence[float],
    gamma_list: Sequence[float] | None = None,
    xi_samples: Sequence | None = None,
    simple_char: bool = False,
) -> EstimateCurve:
    """Estimate-constant curve over tau (and gamma), max over xi' samples."""
    if len(tau_list) == 0:
        raise ScenarioError("empty tau list")
    if xi_samples is None:
        xi_samples = [mp.xi]
    xi_samples = [tuple(np.atleast_1d(np.asarray(x, dtype=float))) for x in xi_samples]
    gammas = list(gamma_list) if gamma_list is not None else [None]
    points = []
    for tau in tau_list:
        for gamma in gammas:
            best = None
            eps_used = None
            for xi in xi_samples:
                C, eps = carleman_ratio(mp.with_xi(xi), float(tau), gamma,
                                        simple_char=simple_char, return_eps=True)
                if best is None or C > best:
                    best, eps_used = C, eps
            pt = {"tau": float(tau), "C": best, "eps": eps_used, "N": mp.n_grid}
            if gamma is not None:
                pt["gamma"] = float(gamma)
            points.append(pt)
    return EstimateCurve(points=tuple(points), scenario=mp.scn.name, xi_samples=tuple(xi_samples))
