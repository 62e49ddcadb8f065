"""Dense matrix-analysis primitives the rest of the package builds on.

Everything here is a pure function of small dense arrays: singular-value
extremes, condition numbers, symmetric positive-definite solves, and the
sorted singular-value trace bound. Singular values are always computed by a
full decomposition; the matrices in this problem are small enough that
exactness beats speed.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import get_lapack_funcs

from .exceptions import (
    DimensionError,
    IllConditionedError,
    NotSymmetricError,
    SingularMatrixError,
)

# Shared numeric policy: algebraic identities are compared at this relative
# tolerance with this absolute floor (double precision throughout).
REL_TOL = 1e-8
ABS_TOL = 1e-12

# Relative asymmetry admitted before an SPD solve refuses the input.
SYM_TOL = 1e-10


class SingularExtremes(NamedTuple):
    s_min: float
    s_max: float


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a 2-D float array with finite entries."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite entries")
    return arr


def singular_extremes(a) -> SingularExtremes:
    """Smallest and largest singular values of a nonempty matrix."""
    arr = as_matrix(a)
    if arr.size == 0:
        raise DimensionError("cannot take singular values of an empty matrix")
    sv = np.linalg.svd(arr, compute_uv=False)
    return SingularExtremes(float(sv[-1]), float(sv[0]))


def condition_number(a) -> float:
    """Ratio of extreme singular values; errors when the matrix is singular."""
    ext = singular_extremes(a)
    if ext.s_min <= 0.0:
        raise SingularMatrixError("condition number of a singular matrix")
    return ext.s_max / ext.s_min


def _symmetrize(a: np.ndarray, name: str) -> np.ndarray:
    scale = np.abs(a).max() if a.size else 0.0
    skew = np.abs(a - a.T).max()
    if skew > SYM_TOL * max(scale, 1.0):
        raise NotSymmetricError(
            f"{name} deviates from symmetry by {skew:.3e} "
            f"(relative tolerance {SYM_TOL:g})"
        )
    return 0.5 * (a + a.T)


def solve_spd(a, b, *, max_condition: float | None = None, name: str = "matrix") -> np.ndarray:
    """Solve ``A X = B`` for symmetric positive-definite ``A`` via Cholesky.

    ``A`` is symmetrized when its asymmetry is below ``SYM_TOL`` relative and
    rejected otherwise. A failed factorization reports the failing pivot.
    When ``max_condition`` is given, a LAPACK reciprocal-condition estimate
    on the factor aborts the solve with a diagnostic instead of returning
    silently inaccurate results.

    The solver is backward stable: the residual ``||A X - B||`` stays below
    1e-10 relative to ``||A|| ||X|| + ||B||`` for condition numbers up to
    1e8 (relative to ``||B||`` alone it necessarily grows with the condition
    number, as for any solver at fixed precision).
    """
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    rhs = np.asarray(b, dtype=float)
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    if rhs.shape[0] != arr.shape[0]:
        raise DimensionError(
            f"rhs has {rhs.shape[0]} rows, expected {arr.shape[0]}"
        )
    sym = _symmetrize(arr, name)

    potrf, potrs = get_lapack_funcs(("potrf", "potrs"), (sym,))
    factor, info = potrf(sym, lower=1, overwrite_a=False, clean=False)
    if info > 0:
        raise SingularMatrixError(
            f"{name} is not positive definite (leading minor {info} failed)",
            pivot=int(info),
        )
    if info < 0:
        raise SingularMatrixError(f"invalid argument {-info} to Cholesky factorization")

    if max_condition is not None:
        pocon = get_lapack_funcs("pocon", (sym,))
        anorm = np.linalg.norm(sym, 1)
        rcond, info = pocon(factor, anorm, uplo="L")
        if info != 0 or (rcond > 0 and 1.0 / rcond > max_condition) or rcond == 0:
            raise IllConditionedError(
                f"{name} condition estimate {1.0 / rcond if rcond else np.inf:.3e} "
                f"exceeds limit {max_condition:.3e}"
            )

    x, info = potrs(factor, rhs, lower=1)
    if info != 0:
        raise SingularMatrixError(f"triangular solve failed with info={info}")
    return x[:, 0] if vector_rhs else x


def von_neumann_bound(a, b) -> float:
    """Sum of descending-sorted singular-value products of two square matrices.

    By the trace inequality this dominates ``|Tr(AB)|``; callers use it as an
    explicit, auditable surrogate for that trace.
    """
    arr_a = as_matrix(a, "first operand")
    arr_b = as_matrix(b, "second operand")
    if arr_a.shape != arr_b.shape or arr_a.shape[0] != arr_a.shape[1]:
        raise DimensionError(
            f"operands must be square and equal-sized, got {arr_a.shape} and {arr_b.shape}"
        )
    sv_a = np.linalg.svd(arr_a, compute_uv=False)
    sv_b = np.linalg.svd(arr_b, compute_uv=False)
    return float(np.dot(sv_a, sv_b))
