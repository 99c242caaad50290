"""Dense complex linear algebra: factor and solve, inversion, singular values, and eigenvalue
magnitudes. All functions are pure and operate on numpy arrays.
"""
import warnings
from logging import getLogger
from typing import Tuple

import numpy as np
from scipy import linalg

from pywirtinger.constants import PIVOT_TOLERANCE, ComplexArray, RealArray
from pywirtinger.exceptions import DimensionMismatch, NoConvergence, SingularMatrix

logger = getLogger(__name__)

LUFactors = Tuple[np.ndarray, np.ndarray]


def as_matrix(a, square: bool = False) -> ComplexArray:
    """Validate and convert input to a 2D complex array with finite entries"""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    if a.ndim != 2 or 0 in a.shape:
        raise DimensionMismatch(f'Expected a non-empty matrix, got shape {a.shape}')
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f'Expected a square matrix, got shape {a.shape}')
    if not np.all(np.isfinite(a)):
        raise ValueError('Matrix contains NaN or infinite entries')
    return a


def factorize(a) -> LUFactors:
    """LU factorization with partial pivoting.

    Raises:
        :py:exc:`.SingularMatrix` if any pivot is below ``1e-13 * max|a_ij|``
    """
    a = as_matrix(a, square=True)
    scale = np.max(np.abs(a))
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if scale == 0 or np.min(pivots) < PIVOT_TOLERANCE * scale:
        raise SingularMatrix(
            f'Pivot {np.min(pivots):.3e} below tolerance (max entry {scale:.3e}, order {len(a)})'
        )
    return lu, piv


def solve_factored(factors: LUFactors, b) -> ComplexArray:
    """Solve using a factorization from :py:func:`factorize`"""
    lu, _ = factors
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != lu.shape[0]:
        raise DimensionMismatch(f'Right-hand side has {b.shape[0]} rows; expected {lu.shape[0]}')
    return linalg.lu_solve(factors, b, check_finite=False)


def lu_solve(a, b) -> ComplexArray:
    """Solve ``a x = b`` by LU factorization with partial pivoting

    Example:
        >>> lu_solve([[2, 0], [0, 4]], [2, 8]).real
        array([1., 2.])
    """
    return solve_factored(factorize(a), b)


def invert(a) -> ComplexArray:
    """Invert a nonsingular square matrix

    Example:
        >>> invert([[2, 0], [0, 4j]])
        array([[0.5+0.j  , 0. +0.j  ],
               [0. +0.j  , 0. -0.25j]])
    """
    a = as_matrix(a, square=True)
    return solve_factored(factorize(a), np.eye(len(a), dtype=complex))


def singular_values(a) -> RealArray:
    """All singular values, in descending order"""
    try:
        return linalg.svd(as_matrix(a), compute_uv=False, check_finite=False)
    except linalg.LinAlgError as e:
        raise NoConvergence(f'SVD did not converge: {e}') from e


def min_singular_value(a) -> float:
    """Smallest singular value"""
    return float(singular_values(a)[-1])


def max_eigenvalue_magnitude(a) -> float:
    """Largest eigenvalue modulus (spectral radius)"""
    try:
        eigenvalues = linalg.eigvals(as_matrix(a, square=True), check_finite=False)
    except linalg.LinAlgError as e:
        raise NoConvergence(f'Eigenvalue iteration did not converge: {e}') from e
    return float(np.max(np.abs(eigenvalues)))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), 'fro'))


def inf_norm(a) -> float:
    """Max absolute row sum for a matrix, or max absolute entry for a vector"""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.ndim == 1 else float(np.linalg.norm(a, np.inf))


def relative_residual(expected, actual) -> float:
    """``||expected - actual||_F / ||expected||_F``, or the absolute difference if ``expected`` is 0"""
    scale = frobenius_norm(expected)
    difference = frobenius_norm(np.asarray(expected) - np.asarray(actual))
    return difference / scale if scale > 0 else difference
