"""Region-level verdicts: ellipticity, sub-ellipticity, strong
pseudo-convexity and the simple-characteristic property.

All checks sample compact (co)sphere sets with a deterministic
low-discrepancy sequence, locally refine around the worst samples and
polish the worst point, then report a signed margin.  Verdicts derive
from the margin against a fail threshold: holds above +threshold, fails
below -threshold, indeterminate in the band.  The constraint sets of
the definitions ("on the characteristic set") are handled by a
penalized formulation plus an explicit near-constraint witness search;
a condition can only report holds when both certificates agree.

Coordinates are the system half-space ones: base points have x_n >= 0
for either side tag, the left side being the reflected operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri

from . import _kernels as K
from .poly import ComplexPolynomial, cluster_multiplicities, roots
from .symbols import (
    Scenario,
    ScenarioError,
    conjugated_weight_bracket,
)

__all__ = [
    "SampleRegion",
    "ConditionReport",
    "check_ellipticity",
    "check_subellipticity",
    "check_strong_pseudoconvexity",
    "check_simple_characteristic",
    "find_gamma_star",
    "DEFAULT_M_GRID",
]

DEFAULT_M_GRID = tuple(10.0**k for k in range(7))
FAIL_THRESHOLD = 1e-6
STRICT_POSITIVITY = 10 * FAIL_THRESHOLD
NEAR_CONSTRAINT_TOL = 1e-5
GAMMA_CAP = 2**16


def _kronecker_alpha(d: int) -> np.ndarray:
    x = 2.0
    for _ in range(64):
        x = (1.0 + x) ** (1.0 / (d + 1))
    return np.array([(1.0 / x) ** (j + 1) % 1.0 for j in range(d)])


def _sequence_points(d: int, n: int, seed: int) -> np.ndarray:
    """Low-discrepancy sequence in [0,1]^d; point i is independent of n."""
    alpha = _kronecker_alpha(d)
    offset = np.random.default_rng(seed).random(d)
    i = np.arange(1, n + 1, dtype=float)[:, None]
    return (offset + i * alpha) % 1.0


def unit_sphere_points(dim: int, n: int, seed: int, hemisphere: bool = False) -> np.ndarray:
    """Deterministic near-uniform points on the unit sphere in R^dim.

    A Kronecker lattice sequence mapped through the inverse normal CDF
    and normalized; with ``hemisphere`` the last component is folded to
    be non-negative.  Axis poles (and the +last pole) are prepended so
    they are always covered; the point set is incremental in ``n``.
    """
    poles = []
    last = np.zeros(dim)
    last[-1] = 1.0
    poles.append(last)
    for j in range(dim - 1):
        e = np.zeros(dim)
        e[j] = 1.0
        poles.append(e.copy())
        poles.append(-e)
    if not hemisphere:
        poles.append(-last)
    poles = np.array(poles)
    n_seq = max(0, n - len(poles))
    u = _sequence_points(dim, n_seq, seed)
    z = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    nrm = np.linalg.norm(z, axis=1)
    nrm[nrm == 0] = 1.0
    pts = z / nrm[:, None]
    pts = np.vstack([poles, pts])[:n] if n >= len(poles) else poles[:n]
    if hemisphere:
        pts[:, -1] = np.abs(pts[:, -1])
    return pts


@dataclass(frozen=True)
class SampleRegion:
    """Deterministic sample plan: base points plus a covector sampler.

    ``base_points`` are (x, tag) with tag in {left, right, interface};
    points tagged interface are used by both sides.  ``tau_mode`` can
    restrict the hemisphere to its tau = 0 equator.
    """

    base_points: tuple
    n_sphere: int = 256
    seed: int = 0
    tau_mode: str = "hemisphere"

    def __post_init__(self):
        pts = tuple((tuple(float(v) for v in x), tag) for x, tag in self.base_points)
        for x, tag in pts:
            if tag not in ("left", "right", "interface"):
                raise ScenarioError(f"unknown base point tag {tag!r}")
        if self.tau_mode not in ("hemisphere", "zero"):
            raise ScenarioError(f"unknown tau_mode {self.tau_mode!r}")
        object.__setattr__(self, "base_points", pts)

    @property
    def n_x(self) -> int:
        return len(self.base_points)

    def points_for(self, side: str):
        return [np.asarray(x) for x, tag in self.base_points if tag in (side, "interface")]

    def covector_samples(self, cov_dim: int) -> np.ndarray:
        """(n, cov_dim+1) rows (xi..., tau) on the unit hemisphere."""
        if self.tau_mode == "zero":
            xi = unit_sphere_points(cov_dim, self.n_sphere, self.seed, hemisphere=False)
            return np.hstack([xi, np.zeros((len(xi), 1))])
        return unit_sphere_points(cov_dim + 1, self.n_sphere, self.seed, hemisphere=True)

    def sphere_samples(self, cov_dim: int) -> np.ndarray:
        return unit_sphere_points(cov_dim, self.n_sphere, self.seed, hemisphere=False)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one region check.

    ``margin`` is the signed distance to the verdict boundary: holds
    above +fail_threshold, fails below -fail_threshold, indeterminate
    inside the band.  ``witness`` is the worst sampled point and
    ``details`` carries the raw per-check quantities.
    """

    check: str
    verdict: str
    margin: float
    witness: dict
    samples_evaluated: int
    tolerances: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": self.witness,
            "samples_evaluated": self.samples_evaluated,
            "tolerances": self.tolerances,
            "details": self.details,
        }


def _verdict_from_margin(margin: float, fail_threshold: float) -> str:
    if margin > fail_threshold:
        return "holds"
    if margin < -fail_threshold:
        return "fails"
    return "indeterminate"


def _tangent_basis(v: np.ndarray) -> np.ndarray:
    d = len(v)
    basis = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        t = e - np.dot(e, v) * v
        nrm = np.linalg.norm(t)
        if nrm > 1e-8:
            basis.append(t / nrm)
        if len(basis) == d - 1:
            break
    return np.array(basis)


def _fold(v: np.ndarray, hemisphere: bool) -> np.ndarray:
    v = v / np.linalg.norm(v)
    if hemisphere:
        v = v.copy()
        v[-1] = abs(v[-1])
        v /= np.linalg.norm(v)
    return v


def minimize_on_sphere(
    fun: Callable[[np.ndarray], float],
    samples: np.ndarray,
    hemisphere: bool,
    n_refine: int = 16,
    rounds: int = 2,
    polish: bool = True,
):
    """Deterministic minimum search over sampled unit vectors.

    Evaluates all samples, runs ``rounds`` of local refinement with
    radius halving around the ``n_refine`` worst points, then a bounded
    Nelder-Mead polish in the tangent chart of the best point.  Ties
    break on the lowest sample index, so results do not depend on
    evaluation order.  Returns (min value, argmin, evaluations).
    """
    pts = [np.asarray(v, dtype=float) for v in samples]
    vals = [float(fun(v)) for v in pts]
    n_eval = len(pts)
    radius = 1.0 / np.sqrt(max(len(pts), 4))
    for _ in range(rounds):
        order = np.argsort(vals, kind="stable")[:n_refine]
        new_pts = []
        for idx in order:
            v = pts[int(idx)]
            tb = _tangent_basis(v)
            for t in tb:
                for s in (-1.0, 1.0):
                    new_pts.append(_fold(v + s * radius * t, hemisphere))
        for v in new_pts:
            pts.append(v)
            vals.append(float(fun(v)))
        n_eval += len(new_pts)
        radius /= 2.0
    best = int(np.argmin(vals))
    best_val, best_v = vals[best], pts[best]
    if polish:
        tb = _tangent_basis(best_v)

        def chart(t):
            return float(fun(_fold(best_v + tb.T @ t, hemisphere)))

        res = minimize(chart, np.zeros(len(tb)), method="Nelder-Mead",
                       options={"maxiter": 200, "xatol": 1e-12, "fatol": 1e-14})
        n_eval += res.nfev
        if res.fun < best_val:
            best_val = float(res.fun)
            best_v = _fold(best_v + tb.T @ res.x, hemisphere)
    return best_val, best_v, n_eval


def check_ellipticity(op, region: SampleRegion, side: str = "right", tol_ell: float = 1e-8) -> ConditionReport:
    """p(x, xi) != 0 on |xi| = 1 over the region's base points."""
    xs = region.points_for(side)
    if not xs:
        raise ScenarioError("region has no base points for this side")
    samples = region.sphere_samples(op.dim)
    best = (np.inf, None, None)
    n_eval = 0
    for x in xs:
        val, v, ne = minimize_on_sphere(lambda xi: abs(op.symbol(x, xi)), samples, hemisphere=False)
        n_eval += ne
        if val < best[0]:
            best = (val, x, v)
    raw, x_w, xi_w = best
    margin = raw - tol_ell
    ft = 0.99 * tol_ell
    report = ConditionReport(
        check="ellipticity",
        verdict=_verdict_from_margin(margin, ft),
        margin=margin,
        witness={"x": list(map(float, x_w)), "xi": list(map(float, xi_w))},
        samples_evaluated=n_eval,
        tolerances={"tol_ell": tol_ell, "fail_threshold": ft},
        details={"min_abs_symbol": raw},
    )
    return report


def _penalized_min(quantities, weights_grid, tol_pos):
    """Sampled infimum of q0 + sum_i M_i q_i over a penalty grid.

    Prefers the smallest weights that certify positivity (> tol_pos);
    falls back to the weights with the largest infimum.
    """
    best_inf = -np.inf
    best_M = None
    base = quantities[0]
    for Ms in weights_grid:
        tot = base.copy()
        for M, q in zip(Ms, quantities[1:]):
            tot = tot + M * q
        m = float(np.min(tot))
        if m > tol_pos:
            return m, Ms
        if m > best_inf:
            best_inf, best_M = m, Ms
    return best_inf, best_M


def _constrained_check(
    name: str,
    xs,
    samples: np.ndarray,
    bracket_fn,
    constraint_fns,
    m_grid,
    tol_pos: float,
    fail_threshold: float = FAIL_THRESHOLD,
    hemisphere: bool = True,
    extra_tols=None,
):
    """Shared engine for the bracket-positivity checks.

    bracket_fn(x, v) -> real bracket; constraint_fns: list of
    (x, v) -> real >= 0 constraint residuals that define the
    characteristic set {all residuals = 0}.  Certifies holds via the
    penalized infimum over an M-grid and refutes via near-constraint
    witnesses whose bracket is not strictly positive.
    """
    import itertools

    grid = sorted(itertools.product(m_grid, repeat=len(constraint_fns)), key=lambda t: (max(t), sum(t)))
    best_overall = None
    n_eval = 0
    for x in xs:
        br = np.array([bracket_fn(x, v) for v in samples])
        cons = [np.array([fn(x, v) for v in samples]) for fn in constraint_fns]
        n_eval += len(samples) * (1 + len(constraint_fns))
        best_inf, best_M = _penalized_min([br] + cons, grid, tol_pos)

        def penal(v, _x=x, _M=best_M):
            return bracket_fn(_x, v) + sum(M * fn(_x, v) for M, fn in zip(_M, constraint_fns))

        pen_min, pen_v, ne1 = minimize_on_sphere(penal, samples, hemisphere)
        best_inf = min(best_inf, pen_min)

        def cdist(v, _x=x):
            return sum(fn(_x, v) for fn in constraint_fns)

        c_min, c_v, ne2 = minimize_on_sphere(cdist, samples, hemisphere)
        n_eval += ne1 + ne2
        char_br = None
        char_v = None
        if c_min <= NEAR_CONSTRAINT_TOL**2:
            char_br = bracket_fn(x, c_v)
            char_v = c_v
            mask = np.array([cdist(v) for v in samples]) <= NEAR_CONSTRAINT_TOL**2
            n_eval += len(samples)
            if mask.any():
                idx = int(np.argmin(np.where(mask, br, np.inf)))
                if br[idx] < char_br:
                    char_br, char_v = br[idx], samples[idx]
        margin_hold = best_inf - tol_pos
        if char_br is not None:
            margin = min(margin_hold, char_br - STRICT_POSITIVITY)
            wit_v = char_v if margin < margin_hold else pen_v
        else:
            margin = margin_hold
            wit_v = pen_v
        entry = (margin, x, wit_v, best_inf, best_M, char_br)
        if best_overall is None or margin < best_overall[0]:
            best_overall = entry
    margin, x_w, v_w, best_inf, best_M, char_br = best_overall
    tols = {"tol_pos": tol_pos, "fail_threshold": fail_threshold,
            "near_constraint_tol": NEAR_CONSTRAINT_TOL, "strict_positivity": STRICT_POSITIVITY}
    if extra_tols:
        tols.update(extra_tols)
    return ConditionReport(
        check=name,
        verdict=_verdict_from_margin(margin, fail_threshold),
        margin=margin,
        witness={"x": list(map(float, x_w)), "covector": list(map(float, v_w))},
        samples_evaluated=n_eval,
        tolerances=tols,
        details={
            "penalized_infimum": best_inf,
            "penalty_weights": list(best_M) if best_M else [],
            "characteristic_bracket": char_br,
        },
    )


def check_subellipticity(
    scn: Scenario,
    side: str,
    region: SampleRegion,
    penalty_M_grid: Sequence[float] = DEFAULT_M_GRID,
    tol_sub: float = 1e-8,
) -> ConditionReport:
    """Sub-ellipticity of {P_side, phi_side} on the region.

    Positivity of {Re p_phi, Im p_phi} on the characteristic set of the
    conjugated symbol, sampled over |(xi, tau)| = 1, tau >= 0.
    """
    op = scn.system_operator(side)
    w = scn.weight.system_side(side)
    xs = region.points_for(side)
    if not xs:
        raise ScenarioError("region has no base points for this side")
    for x in xs:
        if np.linalg.norm(w.grad(x)) < 1e-12:
            raise ScenarioError(f"weight gradient vanishes at {list(x)}")
    samples = region.covector_samples(op.dim)

    def bracket(x, v):
        br, _, _ = conjugated_weight_bracket(op, w, x, v[:-1], v[-1])
        return br

    def char_res(x, v):
        _, val, _ = conjugated_weight_bracket(op, w, x, v[:-1], v[-1])
        return abs(val) ** 2

    return _constrained_check(
        "subellipticity", xs, samples, bracket, [char_res], penalty_M_grid, tol_sub,
        extra_tols={"tol_sub": tol_sub, "penalty_M_grid": list(penalty_M_grid)},
    )


def check_strong_pseudoconvexity(
    scn: Scenario,
    side: str,
    region: SampleRegion,
    penalty_M_grid: Sequence[float] = DEFAULT_M_GRID,
    tol_pos: float = 1e-8,
) -> ConditionReport:
    """Strong pseudo-convexity of the weight generator on the region.

    On p(x, xi + i tau_hat psi') = 0 and {p, psi}(x, xi + i tau_hat psi') = 0
    the bracket (1/2i){conj p, p} must be positive; tau_hat ranges over
    the compact set |(xi, tau_hat)| = 1, tau_hat >= 0.  Uses psi for a
    two-parameter weight, else the weight itself as generator.
    """
    op = scn.system_operator(side)
    psi = scn.weight.system_psi_side(side) if scn.weight.two_parameter else scn.weight.system_side(side)
    xs = region.points_for(side)
    if not xs:
        raise ScenarioError("region has no base points for this side")
    for x in xs:
        if np.linalg.norm(psi.grad(x)) < 1e-12:
            raise ScenarioError(f"weight-generator gradient vanishes at {list(x)}")
    samples = region.covector_samples(op.dim)

    def parts(x, v):
        return conjugated_weight_bracket(op, psi, x, v[:-1], v[-1])

    def bracket(x, v):
        return parts(x, v)[0]

    def char_res(x, v):
        return abs(parts(x, v)[1]) ** 2

    def trans_res(x, v):
        _, _, g_xi = parts(x, v)
        psi_grad = np.asarray(psi.grad(x), dtype=float)
        return abs(np.dot(g_xi, psi_grad)) ** 2

    return _constrained_check(
        "strong_pseudoconvexity", xs, samples, bracket, [char_res, trans_res],
        penalty_M_grid, tol_pos,
        extra_tols={"penalty_M_grid": list(penalty_M_grid)},
    )


def _rho_polynomial(op, psi_grad, x, xi) -> ComplexPolynomial:
    """tau_hat -> p(x, xi + i tau_hat psi'(x)) as a polynomial in tau_hat."""
    table = op.table
    cvals = table.values(x)
    acc = np.zeros(op.order + 1, dtype=np.complex128)
    for t in range(table.alphas.shape[0]):
        prod = np.array([1.0 + 0.0j])
        for j in range(table.alphas.shape[1]):
            a = int(table.alphas[t, j])
            if a == 0:
                continue
            lin = np.array([xi[j], 1j * psi_grad[j]], dtype=np.complex128)
            for _ in range(a):
                prod = K.polymul(prod, lin)
        acc[: len(prod)] += cvals[t] * prod
    return ComplexPolynomial(tuple(acc))


def _pos_axis_distance(z: complex) -> float:
    return abs(z.imag) if z.real >= 0 else abs(z)


def check_simple_characteristic(
    scn: Scenario,
    side: str,
    region: SampleRegion,
    eps_im: float = 1e-7,
) -> ConditionReport:
    """No multiple root of tau_hat -> p(x, xi + i tau_hat psi') on the
    positive real axis, for unit xi.

    The map is extended to complex tau_hat as a polynomial; a root of
    multiplicity >= 2 with |Im| <= eps_im and Re > eps_im is a
    violation.  The margin combines pair separation with distance from
    the positive real axis.
    """
    op = scn.system_operator(side)
    psi = scn.weight.system_psi_side(side) if scn.weight.two_parameter else scn.weight.system_side(side)
    xs = region.points_for(side)
    if not xs:
        raise ScenarioError("region has no base points for this side")
    for x in xs:
        if np.linalg.norm(psi.grad(x)) < 1e-12:
            raise ScenarioError(f"weight-generator gradient vanishes at {list(x)}")
    samples = region.sphere_samples(op.dim)
    n_eval = 0
    best = (np.inf, None, None)

    def badness(x, xi):
        rho = _rho_polynomial(op, np.asarray(psi.grad(x), dtype=float), x, xi)
        if rho.degree < 2:
            return np.inf
        rs = roots(rho)
        worst = np.inf
        for i in range(len(rs)):
            for j in range(i + 1, len(rs)):
                sep = abs(rs[i] - rs[j]) / 2.0
                mid = (rs[i] + rs[j]) / 2.0
                worst = min(worst, max(sep, _pos_axis_distance(complex(mid))))
        return worst

    for x in xs:
        val, v, ne = minimize_on_sphere(lambda xi: badness(x, xi), samples, hemisphere=False)
        n_eval += ne
        if val < best[0]:
            best = (val, x, v)
    raw, x_w, xi_w = best
    margin = raw - STRICT_POSITIVITY if np.isfinite(raw) else np.inf
    # verdict confirmation through the clustered-multiplicity reading
    detail_viol = None
    if margin < -FAIL_THRESHOLD:
        rho = _rho_polynomial(op, np.asarray(psi.grad(x_w), dtype=float), x_w, xi_w)
        rs = roots(rho)
        for center, mult in cluster_multiplicities(rs, max(eps_im, 1e-9)):
            if mult >= 2 and abs(center.imag) <= eps_im and center.real > eps_im:
                detail_viol = {"root": [center.real, center.imag], "multiplicity": mult}
    return ConditionReport(
        check="simple_characteristic",
        verdict=_verdict_from_margin(margin, FAIL_THRESHOLD),
        margin=float(margin),
        witness={"x": list(map(float, x_w)), "xi": list(map(float, xi_w))},
        samples_evaluated=n_eval,
        tolerances={"eps_im": eps_im, "fail_threshold": FAIL_THRESHOLD,
                    "strict_positivity": STRICT_POSITIVITY},
        details={"min_pair_badness": raw, "double_root": detail_viol},
    )


def find_gamma_star(
    scn: Scenario,
    side: str,
    region: SampleRegion,
    gamma_cap: float = GAMMA_CAP,
) -> float | None:
    """Smallest doubling gamma for which exp(gamma psi) is sub-elliptic.

    Doubling search from gamma = 1; returns None (indeterminate) past
    the cap.  Requires a two-parameter weight.
    """
    import dataclasses

    if not scn.weight.two_parameter:
        raise ScenarioError("gamma search requires a two-parameter weight")
    gamma = 1.0
    while gamma <= gamma_cap:
        trial = dataclasses.replace(scn, weight=scn.weight.with_gamma(gamma))
        rep = check_subellipticity(trial, side, region)
        if rep.verdict == "holds":
            return gamma
        gamma *= 2.0
    return None
