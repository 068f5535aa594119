"""Base cones at the identity and membership margins of their transported fields.

A cone on the SPD manifold is given once at the identity and carried to every
other point by congruence: ``X`` is in the cone at ``Sigma`` iff the pulled
back matrix ``Sigma^{-1/2} X Sigma^{-1/2}`` is in the base cone. Flat cones
(orthant, planar, quadratic rank-k) are the same at every point.

Membership is reported through raw signed margins; ``ConeMargin.member`` holds
when every margin is at least ``-tol * scale``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .spd import random_orthogonal, random_sym
from .symmat import as_sym, invsqrtm, sym_eig

MEMBER_TOL = 1e-10
BOUNDARY_BAND = 1e-8

KINDS = ("quadratic", "loewner", "rankk", "orthant", "planar")


@dataclass(frozen=True)
class ConeMargin:
    names: tuple
    margins: tuple
    scales: tuple
    tol: float = MEMBER_TOL

    @property
    def member(self) -> bool:
        return all(m >= -self.tol * s for m, s in zip(self.margins, self.scales))

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else 0.0

    def is_boundary(self, band=BOUNDARY_BAND) -> bool:
        """True when some margin lies within ``band * scale`` of zero."""
        return any(abs(m) <= band * s for m, s in zip(self.margins, self.scales))

    def as_dict(self):
        return {
            "margins": dict(zip(self.names, (float(m) for m in self.margins))),
            "member": self.member,
            "boundary": self.is_boundary(),
        }


def _margin(names, values, scales):
    return ConeMargin(tuple(names), tuple(float(v) for v in values),
                      tuple(float(s) for s in scales))


@dataclass(frozen=True)
class ConeSpec:
    """Tagged description of a base cone.

    Use the classmethod constructors rather than building instances directly.
    """

    kind: str
    n: int
    mu: float = None
    P: np.ndarray = field(default=None, repr=False)
    generators: tuple = None
    rank: int = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.n < 1:
            raise DimensionError("cone dimension must be >= 1")

    @classmethod
    def quadratic(cls, mu, n):
        mu = float(mu)
        if not 0.0 < mu < n:
            raise DomainError(f"quadratic cone needs 0 < mu < n, got mu={mu}, n={n}")
        return cls("quadratic", int(n), mu=mu)

    @classmethod
    def loewner(cls, n):
        return cls("loewner", int(n))

    @classmethod
    def rankk(cls, P):
        P = as_sym(P)
        w = sym_eig(P).values
        floor = 1e-10 * max(1.0, float(np.max(np.abs(w))))
        if np.any(np.abs(w) <= floor):
            raise DomainError(f"rank-k form is degenerate: eigenvalues {w}")
        P.setflags(write=False)
        return cls("rankk", P.shape[0], P=P, rank=int(np.sum(w > 0)))

    @classmethod
    def orthant(cls, N):
        return cls("orthant", int(N))

    @classmethod
    def planar(cls, g1, g2):
        g1 = np.asarray(g1, dtype=float).reshape(2)
        g2 = np.asarray(g2, dtype=float).reshape(2)
        n1, n2 = np.linalg.norm(g1), np.linalg.norm(g2)
        if n1 == 0 or n2 == 0:
            raise DomainError("planar cone generators must be nonzero")
        c = _cross(g1, g2)
        if abs(c) <= 1e-12 * n1 * n2:
            raise DomainError("planar cone generators are parallel or antiparallel")
        if c < 0:
            g1, g2 = g2, g1
        return cls("planar", 2, generators=(tuple(g1), tuple(g2)))

    @property
    def signature(self):
        if self.kind != "rankk":
            return None
        return (self.rank, self.n - self.rank)

    def describe(self) -> dict:
        d = {"kind": self.kind, "n": self.n}
        if self.kind == "quadratic":
            d["mu"] = self.mu
        elif self.kind == "rankk":
            d["P"] = self.P.tolist()
            d["rank"] = self.rank
        elif self.kind == "planar":
            d["generators"] = [list(g) for g in self.generators]
        return d


def _cross(a, b):
    return float(a[0] * b[1] - a[1] * b[0])


def _pullback(Sigma, X):
    X = as_sym(X)
    if Sigma is None:
        return X
    W = invsqrtm(Sigma)
    if W.shape != X.shape:
        raise DimensionError(f"shape mismatch {W.shape} vs {X.shape}")
    Y = W @ X @ W
    return 0.5 * (Y + Y.T)


def quadratic_margin_at_identity(mu, Y):
    t = np.trace(Y)
    q = np.sum(Y * Y)  # tr(Y^2) for symmetric Y
    mag = max(1.0, float(np.sqrt(q)))
    return _margin(("trace", "quadratic"), (t, t * t - mu * q), (mag, mag * mag))


def quad_margin(mu, Sigma, X) -> ConeMargin:
    """Margins ``tr(S^-1 X)`` and ``tr(S^-1 X)^2 - mu tr(S^-1 X S^-1 X)``."""
    Y = _pullback(Sigma, X)
    n = Y.shape[0]
    if not 0.0 < mu < n:
        raise DomainError(f"quadratic cone needs 0 < mu < n, got mu={mu}, n={n}")
    return quadratic_margin_at_identity(float(mu), Y)


def loewner_margin(Sigma, X) -> ConeMargin:
    Y = _pullback(Sigma, X)
    lam = np.linalg.eigvalsh(Y)
    mag = max(1.0, float(np.max(np.abs(lam))))
    return _margin(("min_eigenvalue",), (lam[0],), (mag,))


def rankk_margin(P, x) -> ConeMargin:
    P = P.P if isinstance(P, ConeSpec) else np.asarray(P, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    if P.shape != (x.size, x.size):
        raise DimensionError(f"shape mismatch {P.shape} vs vector of length {x.size}")
    mag = max(1.0, float(np.max(np.abs(P))) * float(x @ x))
    return _margin(("form",), (x @ P @ x,), (mag,))


def orthant_margin(v) -> ConeMargin:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0:
        return _margin((), (), ())
    mag = max(1.0, float(np.max(np.abs(v))))
    return _margin(("min_component",), (np.min(v),), (mag,))


def planar_margin(spec: ConeSpec, v) -> ConeMargin:
    g1, g2 = (np.asarray(g) for g in spec.generators)
    v = np.asarray(v, dtype=float).reshape(2)
    mag = max(1.0, float(np.linalg.norm(v)) * max(np.linalg.norm(g1), np.linalg.norm(g2)))
    return _margin(("from_first", "to_second"), (_cross(g1, v), _cross(v, g2)), (mag, mag))


def cone_margin(spec: ConeSpec, X, at=None) -> ConeMargin:
    """Margin of ``X`` in the cone ``spec`` (transported to ``at`` for SPD cones)."""
    if spec.kind == "quadratic":
        return quad_margin(spec.mu, at, X)
    if spec.kind == "loewner":
        return loewner_margin(at, X)
    if spec.kind == "rankk":
        return rankk_margin(spec.P, X)
    if spec.kind == "orthant":
        X = np.asarray(X, dtype=float).reshape(-1)
        if X.size != spec.n:
            raise DimensionError(f"expected vector of length {spec.n}, got {X.size}")
        return orthant_margin(X)
    return planar_margin(spec, X)


def ad_invariance_probe(spec: ConeSpec, trials, seed=None) -> float:
    """Largest change of any margin under ``X -> Q X Q^T`` at the identity."""
    if spec.kind not in ("quadratic", "loewner"):
        raise ValueError("Ad-invariance applies to SPD base cones only")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(trials)):
        X = random_sym(spec.n, rng)
        Q = random_orthogonal(spec.n, rng)
        a = cone_margin(spec, X)
        b = cone_margin(spec, Q @ X @ Q.T)
        worst = max(worst, max(abs(p - q) for p, q in zip(a.margins, b.margins)))
    return worst


def sample_spd_direction(spec: ConeSpec, rng, boundary=False, size=(0.1, 3.0)):
    """Random symmetric matrix in the base cone at the identity.

    For the quadratic cone the trace ``t0`` is drawn from ``size`` and the
    trace-free part is scaled so that ``tr(X^2) = t0^2 / mu`` (boundary) or a
    random fraction of that (interior). For the Loewner cone the eigenvalues
    are drawn from ``[0, size[1]]`` with one pinned to zero on the boundary.
    """
    n = spec.n
    Q = random_orthogonal(n, rng)
    if spec.kind == "quadratic":
        t0 = rng.uniform(*size)
        base = np.eye(n) * (t0 / n)
        if n == 1:
            return base
        Z = random_sym(n, rng)
        Z -= np.eye(n) * (np.trace(Z) / n)
        radius = t0 * np.sqrt(max(1.0 / spec.mu - 1.0 / n, 0.0))
        if not boundary:
            radius *= rng.uniform(0.0, 1.0)
        return base + Z * (radius / np.linalg.norm(Z))
    if spec.kind == "loewner":
        lam = rng.uniform(0.0, size[1], n)
        if boundary:
            lam[rng.integers(n)] = 0.0
        X = (Q * lam) @ Q.T
        return 0.5 * (X + X.T)
    raise ValueError(f"no SPD direction sampler for cone kind {spec.kind!r}")


def rankk_subspace(P, rng, tilt=0.5):
    """Basis (columns) of a random k-dimensional subspace inside the rank-k cone of ``P``.

    The subspace is a rotation of the positive eigenspace tilted towards the
    negative one by at most ``tilt`` times the safe amount.
    """
    w, U = sym_eig(P)
    pos, neg = U[:, w > 0], U[:, w < 0]
    k = pos.shape[1]
    R = random_orthogonal(k, rng)
    if neg.shape[1] == 0:
        return pos @ R
    E = rng.standard_normal((neg.shape[1], k))
    safe = np.sqrt(np.min(w[w > 0]) / np.max(-w[w < 0]))
    E *= tilt * safe / np.linalg.norm(E, 2)
    return pos @ R + neg @ E
