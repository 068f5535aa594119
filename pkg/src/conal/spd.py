r"""Affine-invariant geometry of the positive definite cone.

Points are SPD matrices; ``GL(n)`` acts by congruence ``Sigma -> A Sigma A^T``.
The metric at ``Sigma`` is ``<X, Y> = tr(Sigma^{-1} X Sigma^{-1} Y)`` and the
geodesic leaving ``Sigma1`` towards ``Sigma2`` is

.. math::

    \gamma(t) = \Sigma_1^{1/2} \exp(t\Lambda) \Sigma_1^{1/2},\qquad
    \Lambda = \log(\Sigma_1^{-1/2}\Sigma_2\Sigma_1^{-1/2}).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .symmat import as_spd, as_sym, expm, invsqrtm, logm, sqrt_pair, sqrtm

MAX_CONDITION = 1e12


def congruence(A, Sigma) -> np.ndarray:
    """Group action ``A Sigma A^T``."""
    A = np.asarray(A, dtype=float)
    Sigma = as_spd(Sigma)
    if A.shape != Sigma.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {Sigma.shape}")
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DomainError(f"congruence matrix is singular (condition {cond:.3e})")
    out = A @ Sigma @ A.T
    return as_spd(0.5 * (out + out.T))


def _check_pair(S1, S2):
    S1, S2 = as_sym(S1), as_sym(S2)
    if S1.shape != S2.shape:
        raise DimensionError(f"dimension mismatch {S1.shape} vs {S2.shape}")
    return S1, S2


def _whitened(Sigma1, Sigma2):
    # Sigma1^{-1/2} Sigma2 Sigma1^{-1/2}; SPD iff Sigma2 is (Sylvester inertia)
    S1, S2 = _check_pair(Sigma1, Sigma2)
    W = invsqrtm(S1)
    M = W @ S2 @ W
    return 0.5 * (M + M.T)


def relative_eigenvalues(Sigma1, Sigma2) -> np.ndarray:
    """Eigenvalues of ``Sigma1^{-1} Sigma2``, ascending.

    Computed from the similar symmetric matrix
    ``Sigma1^{-1/2} Sigma2 Sigma1^{-1/2}``.
    """
    lam = np.linalg.eigvalsh(_whitened(Sigma1, Sigma2))
    if lam[0] <= 0:
        raise DomainError("second argument is not positive definite")
    return lam


def relative_log(Sigma1, Sigma2) -> np.ndarray:
    """``log(Sigma1^{-1/2} Sigma2 Sigma1^{-1/2})``: the geodesic log-velocity."""
    return logm(_whitened(Sigma1, Sigma2))


def ai_distance(Sigma1, Sigma2) -> float:
    lam = relative_eigenvalues(Sigma1, Sigma2)
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def ai_inner(Sigma, X, Y) -> float:
    """Affine-invariant inner product ``tr(Sigma^{-1} X Sigma^{-1} Y)``."""
    Sigma = as_spd(Sigma)
    Si_X = np.linalg.solve(Sigma, as_sym(X))
    Si_Y = np.linalg.solve(Sigma, as_sym(Y))
    return float(np.trace(Si_X @ Si_Y))


@dataclass(frozen=True)
class GeodesicSegment:
    start: np.ndarray
    end: np.ndarray
    log_velocity: np.ndarray
    start_sqrt: np.ndarray

    @classmethod
    def between(cls, Sigma1, Sigma2):
        S1, S2 = _check_pair(Sigma1, Sigma2)
        return cls(S1, S2, relative_log(S1, S2), sqrtm(S1))

    @classmethod
    def shoot(cls, Sigma1, X):
        """Segment from ``Sigma1`` with initial velocity ``X`` (tangent at ``Sigma1``), t in [0, 1]."""
        S1 = as_sym(Sigma1)
        X = as_sym(X)
        if X.shape != S1.shape:
            raise DimensionError(f"shape mismatch {S1.shape} vs {X.shape}")
        R, W = sqrt_pair(S1)
        M = W @ X @ W
        Lam = 0.5 * (M + M.T)
        end = R @ expm(Lam) @ R
        return cls(S1, 0.5 * (end + end.T), Lam, R)

    def __repr__(self):
        return f"GeodesicSegment(n={self.start.shape[0]})"


def geodesic_point(seg: GeodesicSegment, t) -> np.ndarray:
    R = seg.start_sqrt
    P = R @ expm(t * seg.log_velocity) @ R
    return 0.5 * (P + P.T)


def geodesic_velocity(seg: GeodesicSegment, t) -> np.ndarray:
    R = seg.start_sqrt
    Lam = seg.log_velocity
    V = R @ (Lam @ expm(t * Lam)) @ R
    return 0.5 * (V + V.T)


def random_orthogonal(n, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR of a Gaussian matrix."""
    Z = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def random_spd(n, rng, spread=2.0) -> np.ndarray:
    """``Q diag(exp(u)) Q^T`` with Haar ``Q`` and ``u`` uniform in ``[-spread, spread]``."""
    Q = random_orthogonal(n, rng)
    u = rng.uniform(-spread, spread, n)
    S = (Q * np.exp(u)) @ Q.T
    return 0.5 * (S + S.T)


def random_sym(n, rng, scale=1.0) -> np.ndarray:
    Z = rng.standard_normal((n, n)) * scale
    return 0.5 * (Z + Z.T)


def random_invertible(n, rng) -> np.ndarray:
    """Well-conditioned random matrix ``Q1 diag(exp(u)) Q2``, ``u`` in [-1, 1]."""
    Q1 = random_orthogonal(n, rng)
    Q2 = random_orthogonal(n, rng)
    return (Q1 * np.exp(rng.uniform(-1.0, 1.0, n))) @ Q2
