"""Pure-Python (NumPy) kernel implementations.

Reference semantics for the Cython module ``_core``; results of the two
must agree bit-for-bit on the same inputs.
"""

import numpy as np

from math import comb


def horner(coeffs, z):
    """Evaluate sum_k coeffs[k] * z**k (coeffs ordered low to high)."""
    acc = 0.0 + 0.0j
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def newton_refine(coeffs, roots, max_iter=5):
    """Polish roots of the polynomial given by coeffs with Newton steps.

    A step is only accepted while it reduces |p|; at most ``max_iter``
    steps per root.  Guards against vanishing derivative at multiple
    roots.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    deriv = coeffs[1:] * np.arange(1, len(coeffs), dtype=np.float64)
    out = np.array(roots, dtype=np.complex128, copy=True)
    for i in range(out.shape[0]):
        z = out[i]
        pz = horner(coeffs, z)
        for _ in range(max_iter):
            dpz = horner(deriv, z)
            if dpz == 0:
                break
            z_new = z - pz / dpz
            p_new = horner(coeffs, z_new)
            if abs(p_new) >= abs(pz):
                break
            z, pz = z_new, p_new
        out[i] = z
    return out


def polymul(a, b):
    """Convolution product of two coefficient arrays (low to high)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    out = np.zeros(len(a) + len(b) - 1, dtype=np.complex128)
    for i, ai in enumerate(a):
        out[i : i + len(b)] += ai * b
    return out


def poly_from_roots(roots):
    """Monic coefficient array (low to high) with the given roots."""
    out = np.array([1.0 + 0.0j])
    for r in roots:
        out = polymul(out, np.array([-r, 1.0 + 0.0j]))
    return out


def cluster_greedy(roots, delta):
    """Greedy single-linkage clustering of complex points at radius delta.

    Points are processed in the given order; a point joins the first
    cluster containing a member within ``delta``, else starts a new one.
    Returns (centers, multiplicities) with centers = cluster means.
    """
    roots = np.asarray(roots, dtype=np.complex128)
    members = []
    for z in roots:
        placed = False
        for cl in members:
            for w in cl:
                if abs(z - w) <= delta:
                    cl.append(z)
                    placed = True
                    break
            if placed:
                break
        if not placed:
            members.append([z])
    centers = np.array([np.mean(cl) for cl in members], dtype=np.complex128)
    mults = np.array([len(cl) for cl in members], dtype=np.int64)
    return centers, mults


def eval_terms(alphas, cvals, zeta):
    """Evaluate sum_t cvals[t] * prod_j zeta[j]**alphas[t, j]."""
    alphas = np.asarray(alphas, dtype=np.int64)
    cvals = np.asarray(cvals, dtype=np.complex128)
    zeta = np.asarray(zeta, dtype=np.complex128)
    acc = 0.0 + 0.0j
    for t in range(alphas.shape[0]):
        w = cvals[t]
        for j in range(alphas.shape[1]):
            a = alphas[t, j]
            if a:
                w *= zeta[j] ** a
        acc += w
    return acc


def grad_xi_terms(alphas, cvals, zeta):
    """Gradient in the covariable of the symbol of ``eval_terms``."""
    alphas = np.asarray(alphas, dtype=np.int64)
    cvals = np.asarray(cvals, dtype=np.complex128)
    zeta = np.asarray(zeta, dtype=np.complex128)
    n = alphas.shape[1]
    g = np.zeros(n, dtype=np.complex128)
    for t in range(alphas.shape[0]):
        for l in range(n):
            a_l = alphas[t, l]
            if a_l == 0:
                continue
            w = cvals[t] * a_l
            for j in range(n):
                a = alphas[t, j] - (1 if j == l else 0)
                if a:
                    w *= zeta[j] ** a
            g[l] += w
    return g


def normal_poly_coeffs(alphas, cvals, zeta_tang, shift, order):
    """Coefficients in the normal covariable of the conjugated symbol.

    Computes the coefficient array (low to high, length order+1) of
    ``sum_t cvals[t] * prod_{j<n-1} zeta_tang[j]**alphas[t, j]
    * (x + shift)**alphas[t, n-1]`` as a polynomial in x.
    """
    alphas = np.asarray(alphas, dtype=np.int64)
    cvals = np.asarray(cvals, dtype=np.complex128)
    zeta_tang = np.asarray(zeta_tang, dtype=np.complex128)
    out = np.zeros(order + 1, dtype=np.complex128)
    for t in range(alphas.shape[0]):
        w = cvals[t]
        for j in range(alphas.shape[1] - 1):
            a = alphas[t, j]
            if a:
                w *= zeta_tang[j] ** a
        an = alphas[t, -1]
        for i in range(an + 1):
            out[i] += w * comb(an, i) * shift ** (an - i)
    return out
