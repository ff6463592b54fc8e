"""Symmetric eigendecomposition helpers and spectral matrix functions.

All functions accept stacked inputs of shape ``(..., n, n)``.
"""

import numpy as np

from .errors import EigenFailure, NonSymmetric

SYMMETRY_TOL = 1e-8
# negative eigenvalues above this (relative) are treated as roundoff
PSD_CLAMP_TOL = 1e-10
# eigenvalue gaps below this use the derivative limit in divided differences
GAP_TOL = 1e-12


def mT(a):
    return np.swapaxes(a, -1, -2)


def sym(a):
    return 0.5 * (a + mT(a))


def check_symmetric(M, tol=SYMMETRY_TOL):
    M = np.asarray(M, dtype=float)
    if M.shape[-1] != M.shape[-2]:
        raise NonSymmetric(f"matrix of shape {M.shape} is not square")
    if M.size and np.max(np.abs(M - mT(M))) > tol * max(1.0, np.max(np.abs(M))):
        raise NonSymmetric("matrix is not symmetric")
    return M


def eigh(M):
    """Eigendecomposition of the symmetric part of ``M``.

    Raises
    ------
    EigenFailure
        If LAPACK does not converge or the input holds non-finite values.
    """
    M = sym(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise EigenFailure("non-finite entries in matrix")
    try:
        return np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc


def _clamp_psd(lam):
    scale = np.maximum(1.0, np.max(np.abs(lam), axis=-1, keepdims=True))
    if np.any(lam < -PSD_CLAMP_TOL * scale):
        raise EigenFailure(
            f"matrix is not positive semi-definite (min eigenvalue {lam.min():.3e})"
        )
    return np.maximum(lam, 0.0)


def from_eig(U, values):
    return (U * values[..., None, :]) @ mT(U)


def matrix_sqrt_psd(M):
    """Symmetric PSD square root ``U diag(sqrt(max(lam, 0))) U^T``.

    Parameters
    ----------
    M : array_like, shape (..., n, n)
        Symmetric positive semi-definite matrix.

    Returns
    -------
    ndarray, shape (..., n, n)
    """
    M = check_symmetric(M)
    lam, U = eigh(M)
    return from_eig(U, np.sqrt(_clamp_psd(lam)))


def sqrt_and_inv_sqrt(M, min_eig=1e-12):
    """Square root and inverse square root of a positive definite matrix."""
    lam, U = eigh(M)
    if np.any(lam < min_eig):
        raise EigenFailure(f"matrix is not positive definite (min eigenvalue {lam.min():.3e})")
    s = np.sqrt(lam)
    return from_eig(U, s), from_eig(U, 1.0 / s)


def trace_sqrt_psd(M):
    lam, _ = eigh(M)
    return np.sum(np.sqrt(_clamp_psd(lam)), axis=-1)


def divided_differences(lam, f_lam, fprime_lam, gap_tol=GAP_TOL):
    """Daleckii-Krein first divided-difference matrix of a spectral function.

    Entries with ``|lam_i - lam_j|`` below ``gap_tol`` (relative to the
    spectrum scale) take the analytic limit ``f'(lam_i)``.
    """
    dl = lam[..., :, None] - lam[..., None, :]
    df = f_lam[..., :, None] - f_lam[..., None, :]
    scale = np.maximum(1.0, np.max(np.abs(lam), axis=-1))[..., None, None]
    close = np.abs(dl) <= gap_tol * scale
    limit = 0.5 * (fprime_lam[..., :, None] + fprime_lam[..., None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(close, limit, df / np.where(close, 1.0, dl))


def spectral_function_vjp(U, lam, f_lam, fprime_lam, G):
    """Reverse-mode derivative of ``M -> U f(diag(lam)) U^T`` at a symmetric ``M``.

    Given the cotangent ``G`` of the output, returns the (symmetric) cotangent
    of the input: ``U (K * (U^T sym(G) U)) U^T`` with ``K`` the divided
    differences of ``f``.
    """
    K = divided_differences(lam, f_lam, fprime_lam)
    inner = mT(U) @ sym(G) @ U
    return U @ (K * inner) @ mT(U)
