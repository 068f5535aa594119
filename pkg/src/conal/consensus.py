"""Phase consensus on the N-torus.

Agent ``k`` follows ``dtheta_k/dt = omega_k + sum_i mu_ki(theta_i - theta_k)``
over its out-edges ``(k, i)``. Phases are kept unwrapped in the covering space
and every edge difference is wrapped to ``(-pi, pi]`` before it reaches a
coupling function.

Linearizing gives ``A(theta)`` with nonnegative off-diagonals and zero row
sums, so the flow of the variational equation maps the positive orthant into
itself and fixes the all-ones vector. ``contraction_report`` and
``phi_ratio`` measure how strongly it pulls every direction onto ``span(1)``.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import BarrierBreach, DimensionError, DomainError

COUPLINGS = ("barrier-tan", "sine")
BARRIER_MARGIN = 1e-9
START_MARGIN = 1e-6
DT_MIN = 1e-5


def wrap(x):
    """Map angles to ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def coupling_eval(tag, g, alpha):
    """Value and derivative of a coupling function at ``alpha``.

    ``barrier-tan`` is ``g tan(alpha / 2)``: odd, zero at the origin, strictly
    increasing and unbounded as ``|alpha| -> pi``. ``sine`` is ``g sin(alpha)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    if tag == "barrier-tan":
        if alpha.size and np.abs(alpha).max() >= np.pi:
            raise DomainError(f"barrier coupling evaluated at |alpha| >= pi: {alpha}")
        half = 0.5 * alpha
        c = np.cos(half)
        return g * np.tan(half), 0.5 * g / (c * c)
    if tag == "sine":
        return g * np.sin(alpha), g * np.cos(alpha)
    raise ValueError(f"unknown coupling {tag!r}")


@dataclass(frozen=True)
class OscillatorNetwork:
    """Directed network of phase oscillators.

    ``edges[e] = (k, i)`` adds ``mu_e(theta_i - theta_k)`` to agent ``k``.
    ``sign=-1`` evaluates couplings at ``theta_k - theta_i`` instead, the
    repulsive variant.
    """

    omega: np.ndarray
    edges: np.ndarray
    gains: np.ndarray
    couplings: tuple
    sign: int = 1
    require_connected: bool = field(default=True, repr=False)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).reshape(-1)
        edges = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        gains = np.broadcast_to(np.asarray(self.gains, dtype=float), (len(edges),)).copy()
        couplings = tuple(self.couplings) if not isinstance(self.couplings, str) \
            else (self.couplings,) * len(edges)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "couplings", couplings)
        N = omega.size
        if N < 1:
            raise DimensionError("network needs at least one agent")
        if len(couplings) != len(edges):
            raise DimensionError("one coupling tag per edge required")
        if any(c not in COUPLINGS for c in couplings):
            raise ValueError(f"couplings must be among {COUPLINGS}")
        if edges.size and (edges.min() < 0 or edges.max() >= N):
            raise DimensionError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        if np.any(gains <= 0):
            raise ValueError("coupling gains must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.require_connected and not self.strongly_connected():
            raise ValueError("communication graph is not strongly connected")
        tags = np.array(couplings, dtype=object)
        object.__setattr__(self, "_tag_masks",
                           tuple((t, tags == t) for t in sorted(set(couplings))))

    @property
    def N(self):
        return self.omega.size

    @property
    def barrier_mask(self):
        return dict(self._tag_masks).get("barrier-tan", np.zeros(len(self.edges), bool))

    def strongly_connected(self):
        if self.N == 1:
            return True
        if not self.edges.size:
            return False
        G = csr_matrix((np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])),
                       shape=(self.N, self.N))
        ncomp, _ = connected_components(G, directed=True, connection="strong")
        return ncomp == 1

    def is_symmetric(self):
        """True when every edge has a reverse twin with the same coupling and gain."""
        spec = {(int(k), int(i)): (c, g) for (k, i), c, g
                in zip(self.edges, self.couplings, self.gains)}
        return all(spec.get((i, k)) == v for (k, i), v in spec.items())

    @classmethod
    def ring(cls, omega, chords=(), gain=1.0, coupling="barrier-tan", bidirectional=True,
             sign=1):
        """Ring ``0 -> 1 -> ... -> N-1 -> 0`` plus optional chords."""
        omega = np.asarray(omega, dtype=float)
        N = omega.size
        pairs = [(k, (k + 1) % N) for k in range(N)] if N > 1 else []
        pairs += [tuple(map(int, c)) for c in chords]
        if bidirectional:
            pairs += [(i, k) for k, i in pairs]
        seen = []
        for p in pairs:
            if p not in seen:
                seen.append(p)
        return cls(omega, np.array(seen, dtype=int).reshape(-1, 2), gain, coupling, sign)

    def describe(self):
        return {
            "N": self.N,
            "omega": self.omega.tolist(),
            "edges": self.edges.tolist(),
            "gains": self.gains.tolist(),
            "couplings": list(self.couplings),
            "sign": self.sign,
        }


def edge_gaps(net: OscillatorNetwork, theta):
    """Wrapped argument passed to each edge coupling."""
    theta = np.asarray(theta, dtype=float)
    k, i = net.edges[:, 0], net.edges[:, 1]
    return wrap(net.sign * (theta[i] - theta[k]))


def _edge_terms(net, theta):
    alpha = edge_gaps(net, theta)
    if len(net._tag_masks) == 1:
        return coupling_eval(net.couplings[0], net.gains, alpha)
    val = np.empty_like(alpha)
    der = np.empty_like(alpha)
    for tag, m in net._tag_masks:
        val[m], der[m] = coupling_eval(tag, net.gains[m], alpha[m])
    return val, der


def rhs(net: OscillatorNetwork, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (net.N,):
        raise DimensionError(f"expected {net.N} phases, got shape {theta.shape}")
    if not net.edges.size:
        return net.omega.copy()
    val, _ = _edge_terms(net, theta)
    return net.omega + np.bincount(net.edges[:, 0], weights=val, minlength=net.N)


def _jacobian(net, der):
    k, i = net.edges[:, 0], net.edges[:, 1]
    w = net.sign * der
    N = net.N
    A = np.bincount(k * N + i, weights=w, minlength=N * N).reshape(N, N)
    A[np.diag_indices(N)] -= np.bincount(k, weights=w, minlength=N)
    return A


def linearization(net: OscillatorNetwork, theta) -> np.ndarray:
    """Jacobian ``A(theta)`` of :func:`rhs`; rows sum to zero."""
    if not net.edges.size:
        return np.zeros((net.N, net.N))
    _, der = _edge_terms(net, theta)
    return _jacobian(net, der)


def _rhs_and_jacobian(net, theta):
    if not net.edges.size:
        return net.omega.copy(), np.zeros((net.N, net.N))
    val, der = _edge_terms(net, theta)
    f = net.omega + np.bincount(net.edges[:, 0], weights=val, minlength=net.N)
    return f, _jacobian(net, der)


def max_barrier_gap(net, theta):
    """Largest |wrapped gap| over barrier edges, with the edge index (or -1)."""
    mask = net.barrier_mask
    if not mask.any():
        return 0.0, -1
    gaps = np.abs(edge_gaps(net, theta))
    if not mask.all():
        gaps = np.where(mask, gaps, -np.inf)
    e = int(np.argmax(gaps))
    return float(gaps[e]), e


def _rk4_stages(net, theta, h):
    k1 = rhs(net, theta)
    y2 = theta + 0.5 * h * k1
    k2 = rhs(net, y2)
    y3 = theta + 0.5 * h * k2
    k3 = rhs(net, y3)
    y4 = theta + h * k3
    k4 = rhs(net, y4)
    new = theta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return (theta, y2, y3, y4), new


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    theta: np.ndarray        # (steps + 1, N), covering space
    dt: float
    levels: np.ndarray       # halvings used on each step
    max_gap: float = float("nan")

    @property
    def horizon(self):
        return float(self.times[-1] - self.times[0])

    def to_csv(self, fh=None):
        """Write ``t,theta_1,...,theta_N`` rows with 17 significant digits."""
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"theta_{k + 1}" for k in range(self.theta.shape[1])])
        for t, row in zip(self.times, self.theta):
            w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in row])
        if own:
            return fh.getvalue()
        return None


def _continued_gap(net, ref, alpha_ref, y):
    """Largest barrier gap at ``y`` followed continuously from ``ref``.

    Wrapping alone would hide a step that jumps a gap across pi.
    """
    k, i = net.edges[:, 0], net.edges[:, 1]
    moved = net.sign * ((y[i] - y[k]) - (ref[i] - ref[k]))
    return float(np.max(np.abs(alpha_ref + moved)[net.barrier_mask]))


def _advance(net, theta, t, h, dt_min):
    """One outer step, halving the step size until the barrier is respected."""
    mask = net.barrier_mask
    alpha0 = edge_gaps(net, theta)
    level = 0
    while True:
        sub = h / 2 ** level
        y = theta
        ok = True
        gap = 0.0
        for _ in range(2 ** level):
            try:
                stages, y = _rk4_stages(net, y, sub)
            except DomainError:
                ok = False
                break
            if mask.any():
                gap = max([gap] + [_continued_gap(net, theta, alpha0, z)
                                   for z in stages[1:] + (y,)])
            if gap >= np.pi - BARRIER_MARGIN:
                ok = False
                break
        if ok:
            return y, level, gap
        if sub / 2 < dt_min:
            gap, e = max_barrier_gap(net, theta)
            raise BarrierBreach(t, net.edges[e] if e >= 0 else (-1, -1), gap,
                                f"barrier breach near t={t:.6f} on edge "
                                f"{tuple(int(x) for x in net.edges[max(e, 0)])}: step "
                                f"could not be resolved above dt_min={dt_min}")
        level += 1


def simulate(net: OscillatorNetwork, theta0, T, dt=1e-2, dt_min=DT_MIN) -> Trajectory:
    """Classical fixed-step RK4 integration over ``[0, T]``.

    Each outer step of size ``dt`` is recorded. A step that would bring any
    barrier edge within ``1e-9`` of ``pi`` is retried as ``2**level`` equal
    substeps; :class:`BarrierBreach` is raised once the substep would fall
    below ``dt_min``.
    """
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    if theta0.shape != (net.N,):
        raise DimensionError(f"expected {net.N} initial phases")
    if not np.all(np.isfinite(theta0)):
        raise DomainError("initial phases must be finite")
    if net.edges.size:
        gaps = np.abs(edge_gaps(net, theta0))
        if gaps.max() >= np.pi - START_MARGIN:
            e = int(np.argmax(gaps))
            raise DomainError(f"initial state outside T^N_pi: edge {tuple(net.edges[e])} "
                              f"gap {gaps[e]:.9f}")
    steps = int(round(T / dt))
    if steps < 0 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon T={T} is not a whole number of steps dt={dt}")
    theta = np.empty((steps + 1, net.N))
    theta[0] = theta0
    levels = np.zeros(steps, dtype=int)
    worst = max_barrier_gap(net, theta0)[0]
    for j in range(steps):
        theta[j + 1], levels[j], gap = _advance(net, theta[j], j * dt, dt, dt_min)
        worst = max(worst, gap)
    return Trajectory(np.arange(steps + 1) * dt, theta, float(dt), levels, worst)


@dataclass(frozen=True)
class VariationalFlow:
    times: np.ndarray
    Psi: np.ndarray          # (steps + 1, N, N), Psi[0] = I
    steps: np.ndarray        # (steps, N, N) one-step transition matrices

    @property
    def invariant_error(self):
        """``max_t |Psi(t) 1 - 1|``."""
        return float(np.max(np.abs(self.Psi.sum(axis=2) - 1.0)))

    def transition(self, t0, t1):
        """Transition matrix of the linearized flow from ``t0`` to ``t1``."""
        j0 = _index(self.times, t0)
        j1 = _index(self.times, t1)
        if j1 < j0:
            raise ValueError("t1 must not precede t0")
        M = np.eye(self.Psi.shape[1])
        for S in self.steps[j0:j1]:
            M = S @ M
        return M


def _index(times, t):
    j = int(np.argmin(np.abs(times - t)))
    if abs(times[j] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not on the trajectory grid")
    return j


def _rk4_step_matrix(net, theta, h):
    k1, A1 = _rhs_and_jacobian(net, theta)
    k2, A2 = _rhs_and_jacobian(net, theta + 0.5 * h * k1)
    k3, A3 = _rhs_and_jacobian(net, theta + 0.5 * h * k2)
    k4, A4 = _rhs_and_jacobian(net, theta + h * k3)
    new = theta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    I = np.eye(net.N)
    K1 = A1
    K2 = A2 @ (I + 0.5 * h * K1)
    K3 = A3 @ (I + 0.5 * h * K2)
    K4 = A4 @ (I + h * K3)
    return I + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4), new


def variational(net: OscillatorNetwork, traj: Trajectory, start=0, stop=None) -> VariationalFlow:
    """Integrate ``Psi' = A(theta(t)) Psi``, ``Psi = I`` at ``times[start]``.

    Uses the same RK4 stages (and substep levels) as the trajectory, so the
    pair (theta, Psi) is exactly the RK4 solution of the augmented system.
    """
    stop = len(traj.times) - 1 if stop is None else int(stop)
    N = traj.theta.shape[1]
    m = stop - start
    steps = np.empty((m, N, N))
    Psi = np.empty((m + 1, N, N))
    Psi[0] = np.eye(N)
    for j in range(start, stop):
        level = int(traj.levels[j])
        sub = traj.dt / 2 ** level
        y = traj.theta[j]
        S = np.eye(N)
        for _ in range(2 ** level):
            Ss, y = _rk4_step_matrix(net, y, sub)
            S = Ss @ S
        steps[j - start] = S
        Psi[j - start + 1] = S @ Psi[j - start]
    return VariationalFlow(traj.times[start:stop + 1].copy(), Psi, steps)


def hilbert_diameter(M) -> float:
    """Projective diameter ``max log(M_ik M_jl / (M_jk M_il))`` of the image of the orthant."""
    M = np.asarray(M, dtype=float)
    if np.any(M <= 0):
        return float("inf")
    L = np.log(M)
    D = L[:, None, :] - L[None, :, :]  # D[i, j, k] = L_ik - L_jk
    return float(np.max(D.max(axis=2) - D.min(axis=2)))


def birkhoff_ratio(M) -> float:
    """Birkhoff contraction coefficient ``tanh(diameter / 4)``; 1 when the diameter is infinite."""
    d = hilbert_diameter(M)
    return 1.0 if not np.isfinite(d) else float(np.tanh(d / 4.0))


@dataclass(frozen=True)
class ContractionReport:
    strictly_positive: bool
    hilbert_diameter: float
    birkhoff_ratio: float
    window: tuple

    def as_dict(self):
        return {
            "strictly_positive": self.strictly_positive,
            "hilbert_diameter": (self.hilbert_diameter if np.isfinite(self.hilbert_diameter)
                                 else "inf"),
            "birkhoff_ratio": self.birkhoff_ratio,
            "window": list(self.window),
        }


def contraction_report_matrix(M, window=(np.nan, np.nan)) -> ContractionReport:
    M = np.asarray(M, dtype=float)
    return ContractionReport(bool(np.all(M > 0)), hilbert_diameter(M), birkhoff_ratio(M),
                             tuple(float(w) for w in window))


def contraction_report(flow: VariationalFlow, tau=1.0, start=None) -> ContractionReport:
    """Orthant contraction of the transition matrix over ``[start, start + tau]``.

    ``start`` defaults to the beginning of the flow.
    """
    t0 = float(flow.times[0]) if start is None else float(start)
    t1 = t0 + float(tau)
    if t1 > flow.times[-1] + 1e-9:
        raise ValueError(f"window [{t0}, {t1}] exceeds the flow horizon {flow.times[-1]}")
    return contraction_report_matrix(flow.transition(t0, t1), (t0, t1))


def phi_ratio(flow: VariationalFlow, v, t=None):
    """Ratio of the ``1``-orthogonal to the ``1``-parallel part of ``Psi(t) v``.

    Returns the whole series when ``t`` is None.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    N = flow.Psi.shape[1]
    if v.size != N:
        raise DimensionError(f"expected a vector of length {N}")
    if abs(v.mean()) * np.sqrt(N) <= 1e-12 * max(np.linalg.norm(v), 1e-300):
        raise DomainError("vector has no component along the all-ones direction")
    idx = slice(None) if t is None else _index(flow.times, t)
    W = flow.Psi[idx] @ v
    mean = W.mean(axis=-1, keepdims=True)
    par = np.abs(mean[..., 0]) * np.sqrt(N)
    perp = np.linalg.norm(W - mean, axis=-1)
    if np.any(par == 0):
        raise DomainError("transported vector lost its all-ones component")
    return perp / par


@dataclass(frozen=True)
class LockReport:
    locked: bool
    sync_frequency: float
    asymptotic_gaps: np.ndarray
    gap_variation: float
    frequency_spread: float

    def as_dict(self):
        return {"locked": self.locked, "sync_frequency": self.sync_frequency,
                "asymptotic_gaps": self.asymptotic_gaps.tolist(),
                "gap_variation": self.gap_variation,
                "frequency_spread": self.frequency_spread}


def phase_lock_detect(traj: Trajectory, window=None, tol=1e-6) -> LockReport:
    """Phase locking over the trailing ``window`` (default: 10% of the horizon).

    Locked when every pairwise gap varies by less than ``tol`` peak to peak and
    the step-averaged frequencies of all agents agree within ``tol``.
    """
    window = 0.1 * traj.horizon if window is None else float(window)
    if window > traj.horizon + 1e-12:
        raise ValueError("window exceeds trajectory horizon")
    sel = traj.times >= traj.times[-1] - window - 1e-12
    th = traj.theta[sel]
    ts = traj.times[sel]
    if len(ts) < 2:
        raise ValueError("window must contain at least two samples")
    freq = np.diff(th, axis=0) / np.diff(ts)[:, None]
    spread = float(np.max(freq.max(axis=1) - freq.min(axis=1)))
    gaps = th[:, :, None] - th[:, None, :]
    variation = float(np.max(gaps.max(axis=0) - gaps.min(axis=0)))
    locked = bool(variation < tol and spread < tol)
    final = wrap(th[-1] - th[-1, 0])
    return LockReport(locked, float(freq.mean()), final, variation, spread)
