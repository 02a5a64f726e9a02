"""Numeric kernels with a compiled fast path.

``_core`` is a Cython extension built at install time; ``_pure`` is a
NumPy implementation of the same interface.  The compiled module is used
when present unless ``CARLEMAN_PURE_KERNELS`` is set in the environment.
Both implementations are kept in exact functional agreement (see
``tests/test_kernels.py`` and ``benchmarks/bench_kernels.py``).
"""

import os

__all__ = [
    "USING_COMPILED",
    "horner",
    "newton_refine",
    "polymul",
    "poly_from_roots",
    "cluster_greedy",
    "eval_terms",
    "grad_xi_terms",
    "normal_poly_coeffs",
]

if os.environ.get("CARLEMAN_PURE_KERNELS"):
    USING_COMPILED = False
    from ._pure import (  # noqa: F401
        cluster_greedy,
        eval_terms,
        grad_xi_terms,
        horner,
        newton_refine,
        normal_poly_coeffs,
        poly_from_roots,
        polymul,
    )
else:
    try:
        from ._core import (  # noqa: F401
            cluster_greedy,
            eval_terms,
            grad_xi_terms,
            horner,
            newton_refine,
            normal_poly_coeffs,
            poly_from_roots,
            polymul,
        )

        USING_COMPILED = True
    except ImportError:
        USING_COMPILED = False
        from ._pure import (  # noqa: F401
            cluster_greedy,
            eval_terms,
            grad_xi_terms,
            horner,
            newton_refine,
            normal_poly_coeffs,
            poly_from_roots,
            polymul,
        )
