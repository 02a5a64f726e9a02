"""Interface transmission condition: the rank test on the matrix of
transmission-symbol and kappa columns.

For a quadruple (x, xi', tau) on the interface cosphere, each side's
conjugated symbol is split by root signs; the columns of the tested
matrix are the normal-covariable coefficient vectors of the conjugated
transmission symbols (shared across sides) and of the shifted kappa
factors (per side).  The condition holds iff the matrix has full row
rank 2m, decided here through the singular spectrum of the
column-normalized matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .conditions import unit_sphere_points
from .poly import ComplexPolynomial, kappa, split
from .symbols import (
    Scenario,
    ScenarioError,
    conjugated_normal_polynomial,
    conjugated_transmission_polynomial,
)

__all__ = [
    "InterfaceQuadruple",
    "TransmissionMatrix",
    "TransmissionVerdict",
    "AdmissibilityMap",
    "assemble_T",
    "check_transmission_at",
    "check_transmission_point",
    "scan_weight_family",
    "DEFAULT_TOL_RANK",
]

DEFAULT_TOL_RANK = 1e-8
_VERDICT_RANK = {"fails": 0, "indeterminate": 1, "holds": 2}


@dataclass(frozen=True)
class InterfaceQuadruple:
    """Normalized point (x, xi', tau) on the interface cosphere.

    |(xi', tau)| = 1 and tau >= 0 always hold for the stored values;
    ``scale`` remembers the magnitude of the raw covector the quadruple
    was built from, so symbol evaluations can reproduce unnormalized
    inputs exactly.
    """

    x: tuple
    xi: tuple
    tau: float
    scale: float = 1.0

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        xi = tuple(float(v) for v in self.xi)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "tau", float(self.tau))
        if abs(x[-1]) > 1e-12:
            raise ScenarioError("quadruple base point must satisfy x_n = 0")
        if self.tau < 0:
            raise ScenarioError("tau must be non-negative")
        nrm = float(np.hypot(np.linalg.norm(xi), self.tau))
        if abs(nrm - 1.0) > 1e-12:
            raise ScenarioError(f"|(xi', tau)| must be 1, got {nrm}")
        if not (self.scale > 0):
            raise ScenarioError("scale must be positive")

    @classmethod
    def from_raw(cls, x, xi, tau) -> "InterfaceQuadruple":
        """Build from an unnormalized covector, recording its scale."""
        xi = np.asarray(xi, dtype=float)
        tau = float(tau)
        if tau < 0:
            raise ScenarioError("tau must be non-negative")
        s = float(np.hypot(np.linalg.norm(xi), tau))
        if s == 0.0:
            raise ScenarioError("zero covector (xi', tau)")
        return cls(x=tuple(x), xi=tuple(xi / s), tau=tau / s, scale=s)

    def normalized(self) -> "InterfaceQuadruple":
        return replace(self, scale=1.0)

    @property
    def raw_xi(self) -> np.ndarray:
        return self.scale * np.asarray(self.xi)

    @property
    def raw_tau(self) -> float:
        return self.scale * self.tau


@dataclass(frozen=True)
class TransmissionMatrix:
    """Assembled matrix with its singular spectrum.

    Row blocks: left normal-coefficient rows then right rows.  Column
    blocks: the m shared transmission columns, then the left kappa
    columns (m_l_minus of them), then the right ones.  ``entries`` is
    the raw matrix; singular values are those of the column-normalized
    copy.  ``det`` is reported for square matrices (raw scaling).
    """

    entries: np.ndarray
    singular_values: np.ndarray
    m: int
    m_l_minus: int
    m_r_minus: int
    order_left: int
    order_right: int
    det: complex | None
    quadruple: InterfaceQuadruple
    eps_im: float | None = None

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def sigma_ratio(self) -> float:
        if self.cols < self.rows or self.singular_values[0] == 0.0:
            return 0.0
        return float(self.singular_values[self.rows - 1] / self.singular_values[0])


@dataclass(frozen=True)
class TransmissionVerdict:
    verdict: str
    sigma_ratio: float
    necessary_count_ok: bool
    worst_quadruple: InterfaceQuadruple
    m_l_minus: int
    m_r_minus: int
    det: complex | None
    tol_rank: float
    eps_im: float | None
    samples_evaluated: int = 1

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "sigma_ratio": self.sigma_ratio,
            "necessary_count_ok": self.necessary_count_ok,
            "worst_xi": list(self.worst_quadruple.xi),
            "worst_tau": self.worst_quadruple.tau,
            "m_l_minus": self.m_l_minus,
            "m_r_minus": self.m_r_minus,
            "abs_det": abs(self.det) if self.det is not None else None,
            "tol_rank": self.tol_rank,
            "eps_im": self.eps_im,
            "samples_evaluated": self.samples_evaluated,
        }


def _shifted_columns(poly: ComplexPolynomial, count: int, rows: int) -> np.ndarray:
    cols = np.zeros((rows, count), dtype=complex)
    c = np.asarray(poly.coeffs)
    for q in range(count):
        cols[q : q + len(c), q] = c
    return cols


def assemble_T(scn: Scenario, q: InterfaceQuadruple, eps_im: float | None = None, delta: float | None = None) -> TransmissionMatrix:
    """Assemble the transmission matrix at one interface quadruple.

    Raises on degenerate input (a transmission pair identically zero on
    both sides yields a zero column).
    """
    m = scn.m
    m_l, m_r = scn.left.order, scn.right.order
    rows = m_l + m_r
    side_data = {}
    for side, order, row0 in (("left", m_l, 0), ("right", m_r, m_l)):
        p = conjugated_normal_polynomial(scn, side, q)
        if p.degree != order:
            raise ScenarioError(f"conjugated symbol degree {p.degree} != operator order {order}")
        sp = split(p, eps_im=eps_im, delta=delta)
        side_data[side] = {
            "kappa": kappa(sp),
            "m_minus": sp.m_minus,
            "row0": row0,
            "order": order,
            "split": sp,
        }
    cols_t = np.zeros((rows, m), dtype=complex)
    for j in range(1, m + 1):
        for side in ("left", "right"):
            d = side_data[side]
            t_poly = conjugated_transmission_polynomial(scn, side, j, q)
            c = np.asarray(t_poly.coeffs)
            if t_poly.is_zero():
                c = np.zeros(1, dtype=complex)
            cols_t[d["row0"] : d["row0"] + len(c), j - 1] = c
    blocks = [cols_t]
    for side in ("left", "right"):
        d = side_data[side]
        if d["m_minus"] > 0:
            block = np.zeros((rows, d["m_minus"]), dtype=complex)
            block[d["row0"] : d["row0"] + d["order"], :] = _shifted_columns(d["kappa"], d["m_minus"], d["order"])
            blocks.append(block)
    T = np.hstack(blocks)
    col_norms = np.linalg.norm(T, axis=0)
    if np.any(col_norms == 0.0):
        j = int(np.argmin(col_norms))
        raise ScenarioError(f"degenerate input: column {j} of the transmission matrix is zero")
    sv = np.linalg.svd(T / col_norms, compute_uv=False)
    det = complex(np.linalg.det(T)) if T.shape[0] == T.shape[1] else None
    return TransmissionMatrix(
        entries=T,
        singular_values=sv,
        m=m,
        m_l_minus=side_data["left"]["m_minus"],
        m_r_minus=side_data["right"]["m_minus"],
        order_left=m_l,
        order_right=m_r,
        det=det,
        quadruple=q,
        eps_im=eps_im,
    )


def check_transmission_at(
    scn: Scenario,
    q: InterfaceQuadruple,
    tol_rank: float = DEFAULT_TOL_RANK,
    eps_im: float | None = None,
    delta: float | None = None,
) -> TransmissionVerdict:
    """Decide the transmission condition at one quadruple.

    Holds iff the matrix has at least 2m columns and sigma_2m/sigma_1
    exceeds tol_rank; the band [tol_rank/100, tol_rank] is
    indeterminate.  Fewer than 2m columns fails outright.
    """
    T = assemble_T(scn, q, eps_im=eps_im, delta=delta)
    two_m = T.rows
    if T.cols < two_m:
        verdict, ratio = "fails", 0.0
    else:
        ratio = T.sigma_ratio
        if ratio > tol_rank:
            verdict = "holds"
        elif ratio >= tol_rank / 100.0:
            verdict = "indeterminate"
        else:
            verdict = "fails"
    count_ok = (T.m_l_minus + T.m_r_minus) >= T.m
    if verdict == "holds" and not count_ok:
        raise RuntimeError(
            "necessary-count violation: transmission holds with "
            f"m_l^- + m_r^- = {T.m_l_minus + T.m_r_minus} < m = {T.m}"
        )
    return TransmissionVerdict(
        verdict=verdict,
        sigma_ratio=ratio,
        necessary_count_ok=count_ok,
        worst_quadruple=q,
        m_l_minus=T.m_l_minus,
        m_r_minus=T.m_r_minus,
        det=T.det,
        tol_rank=tol_rank,
        eps_im=eps_im,
    )


def interface_quadruples(scn: Scenario, x0=None, n_sphere: int = 256, seed: int = 0):
    """Deterministic quadruple samples over the (xi', tau) hemisphere."""
    x0 = tuple(scn.x0 if x0 is None else x0)
    pts = unit_sphere_points(scn.dim, n_sphere, seed, hemisphere=True)
    out = []
    for v in pts:
        xi = v[:-1]
        tau = float(v[-1])
        nrm = float(np.hypot(np.linalg.norm(xi), tau))
        out.append(InterfaceQuadruple(x=x0, xi=tuple(xi / nrm), tau=tau / nrm))
    return out


def check_transmission_point(
    scn: Scenario,
    x0=None,
    n_sphere: int = 256,
    seed: int = 0,
    tol_rank: float = DEFAULT_TOL_RANK,
    eps_im: float | None = None,
    delta: float | None = None,
) -> TransmissionVerdict:
    """Worst transmission verdict over the sampled interface cosphere."""
    quads = interface_quadruples(scn, x0=x0, n_sphere=n_sphere, seed=seed)
    worst = None
    for q in quads:
        v = check_transmission_at(scn, q, tol_rank=tol_rank, eps_im=eps_im, delta=delta)
        key = (_VERDICT_RANK[v.verdict], v.sigma_ratio)
        if worst is None or key < worst[0]:
            worst = (key, v)
    verdict = worst[1]
    return replace(verdict, samples_evaluated=len(quads))


@dataclass(frozen=True)
class AdmissibilityMap:
    """Verdict of check_transmission_point per weight-parameter cell."""

    param_names: tuple
    cells: tuple  # of dicts {params, verdict, sigma_ratio, worst_xi, worst_tau}
    boundary: tuple  # of (params_before, params_after) transitions

    def verdicts(self):
        return [c["verdict"] for c in self.cells]


def scan_weight_family(
    build: Callable[[Mapping[str, float]], Scenario],
    param_grid: Mapping[str, Sequence[float]],
    x0=None,
    n_sphere: int = 128,
    seed: int = 0,
    tol_rank: float = DEFAULT_TOL_RANK,
    eps_im: float | None = None,
) -> AdmissibilityMap:
    """Evaluate the point transmission verdict over a weight-parameter grid.

    ``build`` maps a parameter assignment to a Scenario; the grid is the
    cartesian product in sorted-name order.  Boundary records verdict
    transitions between consecutive cells of the varying axis.
    """
    names = tuple(sorted(param_grid))
    axes = [np.atleast_1d(np.asarray(param_grid[n], dtype=float)) for n in names]
    cells = []
    for combo in itertools.product(*axes):
        params = dict(zip(names, map(float, combo)))
        scn = build(params)
        v = check_transmission_point(
            scn, x0=x0, n_sphere=n_sphere, seed=seed, tol_rank=tol_rank, eps_im=eps_im
        )
        cells.append(
            {
                "params": params,
                "verdict": v.verdict,
                "sigma_ratio": v.sigma_ratio,
                "worst_xi": list(v.worst_quadruple.xi),
                "worst_tau": v.worst_quadruple.tau,
            }
        )
    boundary = []
    varying = [n for n, ax in zip(names, axes) if len(ax) > 1]
    if len(varying) == 1:
        for a, b in zip(cells, cells[1:]):
            if a["verdict"] != b["verdict"]:
                boundary.append((a["params"], b["params"]))
    return AdmissibilityMap(param_names=names, cells=tuple(cells), boundary=tuple(boundary))
