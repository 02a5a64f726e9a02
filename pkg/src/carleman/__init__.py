"""Carleman-estimate hypothesis verifier for elliptic transmission problems.

Checks ellipticity, sub-ellipticity, strong pseudo-convexity, the
simple-characteristic property and the interface transmission condition
(root-sign factorization and rank test) for pairs of elliptic operators
across a flat interface, scans weight-parameter families for
admissibility, and measures discrete Carleman-estimate constants on
Fourier-reduced one-dimensional models.
"""

__version__ = "0.1.0"

from ._kernels import USING_COMPILED  # noqa: F401
