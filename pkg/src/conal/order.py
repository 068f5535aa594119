"""Orders induced by invariant cone fields.

Flat spaces are ordered by the difference vector. On the SPD manifold the
order is decided spectrally from the geodesic log-velocity
``log(Sigma1^{-1/2} Sigma2 Sigma1^{-1/2})``, and independently by sampling the
geodesic velocity along the curve (``spd_order_via_geodesic``).
"""

from dataclasses import dataclass

import numpy as np

from .cones import (BOUNDARY_BAND, ConeMargin, ConeSpec, _margin, cone_margin,
                    sample_spd_direction)
from .errors import DimensionError
from .spd import (GeodesicSegment, ai_distance, geodesic_point, geodesic_velocity,
                  random_spd, relative_eigenvalues)
from .symmat import expm, sqrtm

ANTISYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class OrderVerdict:
    ordered: bool
    margins: ConeMargin
    witness: dict = None

    @property
    def boundary(self) -> bool:
        return self.margins.is_boundary()

    def as_dict(self):
        d = {"ordered": self.ordered, **self.margins.as_dict()}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def _verdict(margin, witness=None):
    return OrderVerdict(margin.member, margin, witness)


def vector_order(K: ConeSpec, a, b) -> OrderVerdict:
    """``a <= b`` iff the straight line from ``a`` to ``b`` points into ``K``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.size} vs {b.size}")
    if K.kind not in ("planar", "orthant", "rankk"):
        raise ValueError(f"cone kind {K.kind!r} is not a flat vector cone")
    d = b - a
    return _verdict(cone_margin(K, d), {"kind": "line", "direction": d.tolist()})


def log_spectrum_margin(spec: ConeSpec, ell) -> ConeMargin:
    """Cone margin of a symmetric matrix given only its eigenvalues ``ell``."""
    ell = np.asarray(ell, dtype=float)
    if spec.kind == "quadratic":
        s = ell.sum()
        q = float(ell @ ell)
        mag = max(1.0, np.sqrt(q))
        return _margin(("trace", "quadratic"), (s, s * s - spec.mu * q), (mag, mag * mag))
    if spec.kind == "loewner":
        mag = max(1.0, float(np.max(np.abs(ell))))
        return _margin(("min_eigenvalue",), (ell.min(),), (mag,))
    raise ValueError(f"cone kind {spec.kind!r} does not live on the SPD manifold")


def spd_order(spec: ConeSpec, Sigma1, Sigma2) -> OrderVerdict:
    """Decide ``Sigma1 <= Sigma2`` from the spectrum of ``Sigma1^{-1} Sigma2``.

    Margins are those of the log-eigenvalues ``l_i = log lambda_i``: for the
    quadratic cone ``(sum l_i, (sum l_i)^2 - mu sum l_i^2)``, for the Loewner
    cone ``min l_i``.
    """
    lam = relative_eigenvalues(Sigma1, Sigma2)
    if lam.size != spec.n:
        raise DimensionError(f"cone is for n={spec.n}, matrices are {lam.size}x{lam.size}")
    ell = np.log(lam)
    return _verdict(log_spectrum_margin(spec, ell), {"kind": "geodesic",
                                                      "log_eigenvalues": ell.tolist()})


def spd_order_via_geodesic(spec: ConeSpec, Sigma1, Sigma2, samples=50) -> OrderVerdict:
    """Decide ``Sigma1 <= Sigma2`` by testing the geodesic velocity against the
    transported cone at ``samples`` equally spaced times in [0, 1]."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    seg = GeodesicSegment.between(Sigma1, Sigma2)
    if seg.start.shape[0] != spec.n:
        raise DimensionError(f"cone is for n={spec.n}")
    worst = None
    worst_key = np.inf
    first_fail = None
    for t in np.linspace(0.0, 1.0, int(samples)):
        m = cone_margin(spec, geodesic_velocity(seg, t), at=geodesic_point(seg, t))
        key = min(v / s for v, s in zip(m.margins, m.scales))
        if key < worst_key:
            worst, worst_key = m, key
        if first_fail is None and not m.member:
            first_fail = float(t)
    return _verdict(worst, {"kind": "geodesic_samples", "samples": int(samples),
                            "first_failure_t": first_fail})


def heisenberg_mul(g, h):
    """Product in the Heisenberg group, elements as ``(a, b, c)`` triples."""
    a1, b1, c1 = g
    a2, b2, c2 = h
    return (a1 + a2, b1 + b2, c1 + c2 + a1 * b2)


def heisenberg_inv(g):
    a, b, c = g
    return (-a, -b, -c + a * b)


def heisenberg_order(K: ConeSpec, g1, g2) -> OrderVerdict:
    """Order on the quotient by the center: compare the ``(a, b)`` projections."""
    if K.kind != "planar":
        raise ValueError("the Heisenberg quotient is ordered by a planar cone")
    d = np.array([g2[0] - g1[0], g2[1] - g1[1]], dtype=float)
    return _verdict(cone_margin(K, d), {"kind": "coset_difference", "direction": d.tolist()})


def transport(Sigma, X0):
    """Carry a tangent vector at the identity to ``Sigma``: ``Sigma^{1/2} X0 Sigma^{1/2}``."""
    R = sqrtm(Sigma)
    X = R @ X0 @ R
    return 0.5 * (X + X.T)


def ordered_pair(spec: ConeSpec, rng, boundary=False, size=(0.1, 3.0), Sigma1=None):
    """Pair ``Sigma1 <= Sigma2`` built by shooting a conal geodesic from ``Sigma1``.

    The identity-frame direction ``X0`` is the geodesic log-velocity, so
    ``Sigma2 = Sigma1^{1/2} exp(X0) Sigma1^{1/2}``.
    """
    if Sigma1 is None:
        Sigma1 = random_spd(spec.n, rng)
    X0 = sample_spd_direction(spec, rng, boundary=boundary, size=size)
    R = sqrtm(Sigma1)
    S2 = R @ expm(X0) @ R
    return Sigma1, 0.5 * (S2 + S2.T)


@dataclass
class AxiomReport:
    trials: int = 0
    reflexive_failures: int = 0
    transitive_failures: int = 0
    antisymmetry_failures: int = 0
    boundary: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def order_axiom_probe(spec: ConeSpec, n=None, trials=500, seed=None) -> AxiomReport:
    """Statistical check of reflexivity, transitivity and antisymmetry."""
    n = spec.n if n is None else int(n)
    if n != spec.n:
        raise DimensionError(f"cone is for n={spec.n}, probe asked for n={n}")
    rng = np.random.default_rng(seed)
    rep = AxiomReport(trials=int(trials))
    for i in range(int(trials)):
        S = random_spd(n, rng)
        if not spd_order(spec, S, S).ordered:
            rep.reflexive_failures += 1

        boundary = bool(i % 4 == 0)
        S1, S2 = ordered_pair(spec, rng, boundary=boundary, size=(0.05, 1.5))
        _, S3 = ordered_pair(spec, rng, boundary=boundary, size=(0.05, 1.5), Sigma1=S2)
        legs = (spd_order(spec, S1, S2), spd_order(spec, S2, S3))
        v = spd_order(spec, S1, S3)
        if any(not leg.ordered for leg in legs) or v.boundary:
            rep.boundary += 1
        elif not v.ordered:
            rep.transitive_failures += 1

        mode = i % 3
        A = random_spd(n, rng)
        if mode == 0:
            B = A.copy()
        elif mode == 1:
            B = random_spd(n, rng)
        else:
            _, B = ordered_pair(spec, rng, size=(1e-13, 1e-11), Sigma1=A)
        ab, ba = spd_order(spec, A, B), spd_order(spec, B, A)
        if ab.ordered and ba.ordered and ai_distance(A, B) > ANTISYMMETRY_TOL:
            if ab.boundary or ba.boundary:
                rep.boundary += 1
            else:
                rep.antisymmetry_failures += 1
    return rep


__all__ = [
    "OrderVerdict", "AxiomReport", "vector_order", "spd_order", "spd_order_via_geodesic",
    "heisenberg_mul", "heisenberg_inv", "heisenberg_order", "order_axiom_probe",
    "ordered_pair", "transport", "log_spectrum_margin", "BOUNDARY_BAND",
]
