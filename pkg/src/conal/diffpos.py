"""Monotonicity and differential positivity of maps on the SPD manifold.

A map ``F`` is differentially positive when ``dF`` carries the cone at
``Sigma`` into the cone at ``F(Sigma)``. For cone fields that induce a partial
order this is the same as ``F`` being monotone, which ``monotone_scan`` tests
directly on ordered pairs.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cones import ConeSpec, cone_margin, sample_spd_direction
from .errors import DomainError
from .order import ordered_pair, spd_order, transport
from .spd import congruence, random_spd
from .symmat import as_spd, as_sym, frechet_pow, is_spd, powm

VIOLATION_THRESHOLD = 1e-7
MAP_KINDS = ("power", "congruence", "inversion", "translation", "custom")


@dataclass(frozen=True)
class MapSpec:
    kind: str
    r: float = None
    A: np.ndarray = field(default=None, repr=False)
    B: np.ndarray = field(default=None, repr=False)
    fn: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")

    @classmethod
    def power(cls, r):
        return cls("power", r=float(r))

    @classmethod
    def congruence(cls, A):
        A = np.asarray(A, dtype=float)
        if np.linalg.cond(A) > 1e12:
            raise DomainError("congruence map needs an invertible matrix")
        return cls("congruence", A=A)

    @classmethod
    def inversion(cls):
        return cls("inversion")

    @classmethod
    def translation(cls, B):
        return cls("translation", B=as_sym(B))

    @classmethod
    def custom(cls, fn):
        return cls("custom", fn=fn)

    def describe(self):
        d = {"kind": self.kind}
        if self.r is not None:
            d["r"] = self.r
        return d


def map_apply(F: MapSpec, Sigma) -> np.ndarray:
    Sigma = as_spd(Sigma)
    if F.kind == "power":
        return powm(Sigma, F.r)
    if F.kind == "congruence":
        return congruence(F.A, Sigma)
    if F.kind == "inversion":
        inv = np.linalg.inv(Sigma)
        return 0.5 * (inv + inv.T)
    if F.kind == "translation":
        out = Sigma + F.B
        if not is_spd(out):
            raise DomainError("translation leaves the positive definite cone")
        return out
    return as_spd(F.fn(Sigma))


def finite_difference(F: MapSpec, Sigma, X, h=None) -> np.ndarray:
    """Central difference ``(F(S + hX) - F(S - hX)) / 2h``; shrinks ``h`` up to 4 times."""
    Sigma, X = as_spd(Sigma), as_sym(X)
    nx = np.linalg.norm(X)
    if nx == 0:
        return np.zeros_like(X)
    if h is None:
        h = max(1e-6, 1e-6 * np.linalg.norm(Sigma) / nx)
    for _ in range(5):
        if is_spd(Sigma + h * X) and is_spd(Sigma - h * X):
            D = (map_apply(F, Sigma + h * X) - map_apply(F, Sigma - h * X)) / (2 * h)
            return 0.5 * (D + D.T)
        h /= 10.0
    raise DomainError("finite-difference step leaves the positive definite cone")


def map_differential(F: MapSpec, Sigma, X) -> np.ndarray:
    if F.kind == "power":
        return frechet_pow(Sigma, X, F.r)
    X = as_sym(X)
    if F.kind == "congruence":
        Y = F.A @ X @ F.A.T
        return 0.5 * (Y + Y.T)
    if F.kind == "inversion":
        Sigma = as_spd(Sigma)
        Si_X = np.linalg.solve(Sigma, X)
        Y = -np.linalg.solve(Sigma, Si_X.T)
        return 0.5 * (Y + Y.T)
    if F.kind == "translation":
        return X
    return finite_difference(F, Sigma, X)


@dataclass
class PositivityReport:
    min_post_margin: float
    worst_point: np.ndarray
    worst_direction: np.ndarray
    samples: int

    def as_dict(self):
        return {
            "min_post_margin": self.min_post_margin,
            "samples": self.samples,
            "worst_point": None if self.worst_point is None else self.worst_point.tolist(),
            "worst_direction": (None if self.worst_direction is None
                                else self.worst_direction.tolist()),
        }


def diff_positivity_check(F: MapSpec, spec: ConeSpec, points=200, dirs=20,
                          seed=None) -> PositivityReport:
    """Sample ``dF`` on boundary and interior directions of ``K(Sigma)``.

    Reports the smallest margin of ``dF|_Sigma X`` in ``K(F(Sigma))``.
    """
    if points < 1 or dirs < 1:
        raise ValueError("points and dirs must be >= 1")
    rng = np.random.default_rng(seed)
    best = PositivityReport(np.inf, None, None, 0)
    for _ in range(int(points)):
        S = random_spd(spec.n, rng)
        FS = map_apply(F, S)
        for j in range(int(dirs)):
            X = transport(S, sample_spd_direction(spec, rng, boundary=(j % 2 == 0)))
            m = cone_margin(spec, map_differential(F, S, X), at=FS)
            best.samples += 1
            if m.min_margin < best.min_post_margin:
                best.min_post_margin = m.min_margin
                best.worst_point, best.worst_direction = S, X
    return best


@dataclass
class Violation:
    sigma1: np.ndarray
    sigma2: np.ndarray
    margins: dict

    def as_dict(self):
        return {"sigma1": self.sigma1.tolist(), "sigma2": self.sigma2.tolist(),
                "margins": self.margins}


def _check_pair(F, spec, S1, S2, threshold):
    v = spd_order(spec, map_apply(F, S1), map_apply(F, S2))
    m = v.margins
    if any(x < -threshold * s for x, s in zip(m.margins, m.scales)):
        return Violation(S1, S2, dict(zip(m.names, m.margins)))
    return None


def monotone_scan(F: MapSpec, spec: ConeSpec, pairs=500, seed=None,
                  threshold=VIOLATION_THRESHOLD):
    """Test ``F(Sigma1) <= F(Sigma2)`` on seeded ordered pairs; return the violations.

    Half of the pairs are shot along boundary directions of the cone.
    A pair counts only if some margin is below ``-threshold * scale``.
    """
    return monotone_scan_stats(F, spec, pairs, seed, threshold)[0]


def monotone_scan_stats(F: MapSpec, spec: ConeSpec, pairs=500, seed=None,
                        threshold=VIOLATION_THRESHOLD):
    """Like :func:`monotone_scan`, also returning the smallest scaled post-margin seen."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    worst = np.inf
    for i in range(int(pairs)):
        S1, S2 = ordered_pair(spec, rng, boundary=(i % 2 == 0))
        m = spd_order(spec, map_apply(F, S1), map_apply(F, S2)).margins
        scaled = min(x / s for x, s in zip(m.margins, m.scales))
        worst = min(worst, scaled)
        if scaled < -threshold:
            out.append(Violation(S1, S2, dict(zip(m.names, m.margins))))
    return out, float(worst)


def counterexample_search(r, spec: ConeSpec, budget=10_000, seed=None,
                          threshold=VIOLATION_THRESHOLD):
    """Look for ``Sigma1 <= Sigma2`` with ``Sigma1**r`` not below ``Sigma2**r``.

    Pairs are shot along boundary directions with step sizes spread over
    several decades. Returns the first :class:`Violation` or ``None``.
    """
    if spec.n < 2:
        raise DomainError("power maps are monotone for n = 1")
    F = MapSpec.power(r)
    rng = np.random.default_rng(seed)
    for _ in range(int(budget)):
        hi = 10.0 ** rng.uniform(-1.0, 0.5)
        S1, S2 = ordered_pair(spec, rng, boundary=True, size=(0.1 * hi, hi))
        bad = _check_pair(F, spec, S1, S2, threshold)
        if bad is not None:
            return bad
    return None
