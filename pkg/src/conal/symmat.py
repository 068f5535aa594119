"""Dense symmetric matrix primitives.

Matrices are plain ``numpy.ndarray`` objects. Every public function checks
symmetry on entry and symmetrizes inputs that pass the check, so callers can
feed the result of ordinary floating point products without cleaning them up.
"""

from typing import NamedTuple

import numpy as np

from .errors import DimensionError, DomainError, SymmetryError

SYM_RTOL = 1e-12
SPD_RTOL = 1e-12
DEGENERATE_RTOL = 1e-8


class EigenPair(NamedTuple):
    values: np.ndarray   # ascending
    vectors: np.ndarray  # orthonormal columns


def as_sym(S) -> np.ndarray:
    """Validate ``S`` as a real symmetric matrix and return ``(S + S.T) / 2``."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    amax = float(abs(S).max())
    if not np.isfinite(amax):
        raise DomainError("matrix has non-finite entries")
    scale = max(1.0, amax)
    asym = float(abs(S - S.T).max())
    if asym > SYM_RTOL * scale:
        raise SymmetryError(asym, scale)
    return 0.5 * (S + S.T)


def sym_eig(S) -> EigenPair:
    S = as_sym(S)
    w, U = np.linalg.eigh(S)
    return EigenPair(w, U)


def _spd_eig(S, checked=False) -> EigenPair:
    if not checked:
        S = as_sym(S)
    w, U = np.linalg.eigh(S)
    floor = SPD_RTOL * max(1.0, float(abs(S).max()))
    if w[0] <= floor:
        raise DomainError(
            f"matrix is not positive definite: eigenvalue {w[0]:.6e} <= {floor:.1e}"
        )
    return EigenPair(w, U)


def as_spd(S) -> np.ndarray:
    """Validate ``S`` as symmetric positive definite; return the symmetrized copy."""
    S = as_sym(S)
    _spd_eig(S, checked=True)
    return S


def is_spd(S) -> bool:
    try:
        _spd_eig(S)
    except (DomainError, SymmetryError, DimensionError):
        return False
    return True


def _reassemble(U, d):
    out = (U * d) @ U.T
    return 0.5 * (out + out.T)


def sym_fn(S, f, r=None) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its spectrum.

    Parameters
    ----------
    S : array_like
        Symmetric matrix. Must be positive definite for every tag except
        ``"exp"`` and ``"pow"`` with integer exponent.
    f : {"log", "exp", "sqrt", "invsqrt", "pow"}
        Function tag.
    r : float, optional
        Exponent, required when ``f == "pow"``.

    Returns
    -------
    ndarray
        ``U diag(f(lambda)) U^T``.
    """
    if f == "exp":
        w, U = sym_eig(S)
        return _reassemble(U, np.exp(w))
    if f == "pow":
        if r is None:
            raise ValueError("pow requires an exponent r")
        r = float(r)
        if r.is_integer():
            w, U = sym_eig(S)
            if r < 0 and np.any(w == 0):
                raise DomainError("negative integer power of a singular matrix")
        else:
            w, U = _spd_eig(S)
        return _reassemble(U, w ** r)
    if f not in ("log", "sqrt", "invsqrt"):
        raise ValueError(f"unknown function tag {f!r}")
    w, U = _spd_eig(S)
    if f == "log":
        d = np.log(w)
    elif f == "sqrt":
        d = np.sqrt(w)
    else:
        d = 1.0 / np.sqrt(w)
    return _reassemble(U, d)


def sqrt_pair(S):
    """``(S^{1/2}, S^{-1/2})`` from a single eigendecomposition."""
    w, U = _spd_eig(S)
    r = np.sqrt(w)
    return _reassemble(U, r), _reassemble(U, 1.0 / r)


def logm(S):
    return sym_fn(S, "log")


def expm(S):
    return sym_fn(S, "exp")


def sqrtm(S):
    return sym_fn(S, "sqrt")


def invsqrtm(S):
    return sym_fn(S, "invsqrt")


def powm(S, r):
    return sym_fn(S, "pow", r)


def pow_divided_differences(w, r) -> np.ndarray:
    """First divided differences of ``t -> t**r`` on the grid ``w``.

    Close pairs (relative gap below ``DEGENERATE_RTOL``) use the derivative at
    the midpoint instead of the difference quotient.
    """
    w = np.asarray(w, dtype=float)
    li, lj = np.meshgrid(w, w, indexing="ij")
    diff = li - lj
    close = np.abs(diff) <= DEGENERATE_RTOL * np.maximum(li, lj)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(close, 0.0, (li ** r - lj ** r) / np.where(close, 1.0, diff))
    mid = 0.5 * (li + lj)
    G = np.where(close, r * mid ** (r - 1.0), G)
    np.fill_diagonal(G, r * w ** (r - 1.0))
    # exact symmetry regardless of evaluation order above
    return np.triu(G) + np.triu(G, 1).T


def frechet_pow(Sigma, X, r) -> np.ndarray:
    """Frechet derivative of ``Sigma -> Sigma**r`` at ``Sigma`` in direction ``X``.

    Daleckii-Krein formula: ``U (G * (U^T X U)) U^T`` with ``G`` the matrix of
    divided differences of ``t**r`` at the eigenvalues of ``Sigma``.
    """
    w, U = _spd_eig(Sigma)
    X = as_sym(X)
    if X.shape != U.shape:
        raise DimensionError(f"shape mismatch {U.shape} vs {X.shape}")
    G = pow_divided_differences(w, float(r))
    inner = G * (U.T @ X @ U)
    return _reassemble_full(U, inner)


def _reassemble_full(U, M):
    out = U @ M @ U.T
    return 0.5 * (out + out.T)
