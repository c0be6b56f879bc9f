"""Per-window optimal control of a virtual player.

Each sampling period is one finite-horizon optimal control problem: minimize a
weighted sum of terminal position mismatch, signature tracking, velocity
matching and control effort.  The minimum principle turns this into a
two-point boundary value problem on the state/costate system with the control
law ``u = -l2 / eta``; this module solves it by damped Newton shooting on the
unknown initial costates, both for a single player against an estimated
partner and for two players coupled through a joint boundary value problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatch, NonFiniteState
from .oscillator import HkbParams, LinearParams, PlayerState

RESIDUAL_TOL = 1e-8
MAX_ITER = 50
BACKTRACK_MAX = 20
_FD_STEP = 1e-8


@dataclass(frozen=True)
class CouplingWeights:
    """Cost weights: position TC, signature tracking, velocity TC, effort."""

    theta_p: float
    theta_sigma: float
    theta_v: float
    eta: float = 1e-4

    def __post_init__(self) -> None:
        vals = (self.theta_p, self.theta_sigma, self.theta_v, self.eta)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ValueError("all weights must be finite and positive")
        total = self.theta_p + self.theta_sigma + self.theta_v
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"theta weights must sum to 1, got {total!r}")


@dataclass(frozen=True)
class Costate:
    """Adjoint variables paired with (x, v)."""

    l1: float = 0.0
    l2: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.l1) and math.isfinite(self.l2)):
            raise ValueError("costate must be finite")


@dataclass(frozen=True)
class PartnerEstimate:
    """Constant-velocity extrapolation of the partner over one window."""

    t0: float
    anchor: float
    velocity: float

    def position_at(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.anchor + self.velocity * (np.asarray(t) - self.t0)


def estimate_partner(x_prev: float, x_now: float, period: float, t0: float = 0.0) -> PartnerEstimate:
    """Estimate partner velocity and position from the last two samples.

    The velocity is the backward difference over one period; the position
    predictor is anchored at the latest observation, so
    ``position_at(t0) == x_now``.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    return PartnerEstimate(t0=t0, anchor=x_now, velocity=(x_now - x_prev) / period)


@dataclass(frozen=True)
class WindowProblem:
    """One receding-horizon subproblem over ``[t0, t0 + horizon]``.

    ``sigma`` maps an array of times to signature velocities.  ``partner`` is
    the estimated other player for the single-player solve and ``None`` when
    the problem is one side of a coupled pair.
    """

    t0: float
    horizon: float
    state: PlayerState
    params: HkbParams | LinearParams
    weights: CouplingWeights
    sigma: Callable[[np.ndarray], np.ndarray]
    partner: PartnerEstimate | None = None
    n_sub: int = 10

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.n_sub < 2:
            raise ValueError("n_sub must be at least 2")


@dataclass
class WindowSolution:
    """Solved trajectories of one window at the substep nodes."""

    t: np.ndarray
    states: np.ndarray
    costates: np.ndarray
    controls: np.ndarray
    lambda0: np.ndarray
    residual_norm: float
    converged: bool
    cost: float
    iterations: int


def optimal_control(c: Costate, eta: float) -> float:
    """Open-loop control from the costate: ``u = -l2 / eta``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    return -c.l2 / eta


def costate_rhs(
    s: PlayerState,
    c: Costate,
    p: HkbParams | LinearParams,
    w: CouplingWeights,
    sigma_t: float,
    partner_v: float,
) -> Costate:
    """Adjoint dynamics, the negative state gradient of the Hamiltonian."""
    track = w.theta_sigma * (s.v - sigma_t) + w.theta_v * (s.v - partner_v)
    if isinstance(p, HkbParams):
        om2 = p.omega * p.omega
        dl1 = c.l2 * (2.0 * p.beta * s.x * s.v + om2)
        dl2 = c.l2 * (3.0 * p.alpha * s.v * s.v + p.beta * s.x * s.x - p.gamma) - c.l1 - track
    else:
        dl1 = c.l2 * p.b
        dl2 = c.l2 * p.a - c.l1 - track
    return Costate(l1=dl1, l2=dl2)


def window_cost(
    states: np.ndarray,
    controls: np.ndarray,
    sigma_ref: np.ndarray,
    partner_pos: np.ndarray,
    partner_vel: np.ndarray,
    weights: CouplingWeights,
    dt: float,
) -> float:
    """Window cost from sampled trajectories, integrals by trapezoid.

    ``states`` is ``(m, 2)``; all other trajectories have length ``m`` on the
    same substep grid with spacing ``dt``.  Only the final entry of
    ``partner_pos`` enters (the terminal position mismatch term).
    """
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    sigma_ref = np.asarray(sigma_ref, dtype=float)
    partner_pos = np.asarray(partner_pos, dtype=float)
    partner_vel = np.asarray(partner_vel, dtype=float)
    m = states.shape[0]
    if any(arr.shape[0] != m for arr in (controls, sigma_ref, partner_pos, partner_vel)):
        raise GridMismatch("trajectories are not on a common substep grid")
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = states[:, 1]
    terminal = 0.5 * weights.theta_p * (states[-1, 0] - partner_pos[-1]) ** 2
    j_sigma = 0.5 * weights.theta_sigma * np.trapezoid((v - sigma_ref) ** 2, dx=dt)
    j_vel = 0.5 * weights.theta_v * np.trapezoid((v - partner_vel) ** 2, dx=dt)
    j_u = 0.5 * weights.eta * np.trapezoid(controls**2, dx=dt)
    return float(terminal + j_sigma + j_vel + j_u)


# --- internal integration ---------------------------------------------------


def _eval_sigma(fn: Callable, ts: np.ndarray) -> list[float]:
    out = fn(ts)
    arr = np.asarray(out, dtype=float)
    if arr.shape != ts.shape:
        arr = np.asarray([float(fn(float(t))) for t in ts])
    return arr.tolist()


def _coeffs(params: HkbParams | LinearParams) -> tuple[bool, float, float, float, float]:
    if isinstance(params, HkbParams):
        return True, params.alpha, params.beta, params.gamma, params.omega * params.omega
    return False, params.a, params.b, 0.0, 0.0


def _half_times(prob: WindowProblem) -> np.ndarray:
    h = prob.horizon / prob.n_sub
    return prob.t0 + np.arange(2 * prob.n_sub + 1) * (0.5 * h)


def _integrate_single(
    prob: WindowProblem,
    sig_half: list[float],
    rv: float,
    lam0: tuple[float, float],
) -> tuple[list[float], list[float], list[float], list[float]]:
    """Forward RK4 of the 4-dim state/costate system with u = -l2/eta.

    Signature values are pre-evaluated on the half-step grid so the stage
    evaluations never interpolate.  Raises NonFiniteState on blow-up.
    """
    hkb, c0, c1, c2, c3 = _coeffs(prob.params)
    w = prob.weights
    ts, tv, eta_inv = w.theta_sigma, w.theta_v, 1.0 / w.eta
    n = prob.n_sub
    h = prob.horizon / n
    hh, h6 = 0.5 * h, h / 6.0

    def rhs(x: float, v: float, l1: float, l2: float, sig: float):
        u = -l2 * eta_inv
        if hkb:
            acc = u - (c0 * v * v + c1 * x * x - c2) * v - c3 * x
            dl1 = l2 * (2.0 * c1 * x * v + c3)
            dl2 = l2 * (3.0 * c0 * v * v + c1 * x * x - c2) - l1 - ts * (v - sig) - tv * (v - rv)
        else:
            acc = u - c0 * v - c1 * x
            dl1 = l2 * c1
            dl2 = l2 * c0 - l1 - ts * (v - sig) - tv * (v - rv)
        return v, acc, dl1, dl2

    x, v = prob.state.x, prob.state.v
    l1, l2 = lam0
    xs, vs, l1s, l2s = [x], [v], [l1], [l2]
    for j in range(n):
        i = 2 * j
        s0, s1, s2 = sig_half[i], sig_half[i + 1], sig_half[i + 2]
        a1, b1, g1, d1 = rhs(x, v, l1, l2, s0)
        a2, b2, g2, d2 = rhs(x + hh * a1, v + hh * b1, l1 + hh * g1, l2 + hh * d1, s1)
        a3, b3, g3, d3 = rhs(x + hh * a2, v + hh * b2, l1 + hh * g2, l2 + hh * d2, s1)
        a4, b4, g4, d4 = rhs(x + h * a3, v + h * b3, l1 + h * g3, l2 + h * d3, s2)
        x += h6 * (a1 + 2.0 * (a2 + a3) + a4)
        v += h6 * (b1 + 2.0 * (b2 + b3) + b4)
        l1 += h6 * (g1 + 2.0 * (g2 + g3) + g4)
        l2 += h6 * (d1 + 2.0 * (d2 + d3) + d4)
        if not math.isfinite(x + v + l1 + l2):
            raise NonFiniteState(f"window integration diverged at substep {j + 1}")
        xs.append(x)
        vs.append(v)
        l1s.append(l1)
        l2s.append(l2)
    return xs, vs, l1s, l2s


def _player_rhs(
    x: float,
    v: float,
    l1: float,
    l2: float,
    sig: float,
    other_v: float,
    hkb: bool,
    c0: float,
    c1: float,
    c2: float,
    c3: float,
    ts: float,
    tv: float,
    eta_inv: float,
):
    # Shared per-player derivative so the two sides of a symmetric coupled
    # problem follow bitwise-identical code paths.
    u = -l2 * eta_inv
    if hkb:
        acc = u - (c0 * v * v + c1 * x * x - c2) * v - c3 * x
        dl1 = l2 * (2.0 * c1 * x * v + c3)
        dl2 = l2 * (3.0 * c0 * v * v + c1 * x * x - c2) - l1 - ts * (v - sig) - tv * (v - other_v)
    else:
        acc = u - c0 * v - c1 * x
        dl1 = l2 * c1
        dl2 = l2 * c0 - l1 - ts * (v - sig) - tv * (v - other_v)
    return v, acc, dl1, dl2


def _integrate_coupled(
    p1: WindowProblem,
    p2: WindowProblem,
    sig1: list[float],
    sig2: list[float],
    lam0: Sequence[float],
) -> tuple[list[list[float]], list[list[float]]]:
    """Forward RK4 of the joint 8-dim system of two coupled players."""
    hkb1, a1_, b1_, g1_, o1_ = _coeffs(p1.params)
    hkb2, a2_, b2_, g2_, o2_ = _coeffs(p2.params)
    w1, w2 = p1.weights, p2.weights
    ts1, tv1, ei1 = w1.theta_sigma, w1.theta_v, 1.0 / w1.eta
    ts2, tv2, ei2 = w2.theta_sigma, w2.theta_v, 1.0 / w2.eta
    n = p1.n_sub
    h = p1.horizon / n
    hh, h6 = 0.5 * h, h / 6.0

    x1, v1 = p1.state.x, p1.state.v
    x2, v2 = p2.state.x, p2.state.v
    l11, l12, l21, l22 = lam0
    out1 = [[x1], [v1], [l11], [l12]]
    out2 = [[x2], [v2], [l21], [l22]]

    def stage(y, s1v, s2v):
        x1_, v1_, l11_, l12_, x2_, v2_, l21_, l22_ = y
        d1 = _player_rhs(x1_, v1_, l11_, l12_, s1v, v2_, hkb1, a1_, b1_, g1_, o1_, ts1, tv1, ei1)
        d2 = _player_rhs(x2_, v2_, l21_, l22_, s2v, v1_, hkb2, a2_, b2_, g2_, o2_, ts2, tv2, ei2)
        return (d1[0], d1[1], d1[2], d1[3], d2[0], d2[1], d2[2], d2[3])

    y = (x1, v1, l11, l12, x2, v2, l21, l22)
    for j in range(n):
        i = 2 * j
        s1a, s1b, s1c = sig1[i], sig1[i + 1], sig1[i + 2]
        s2a, s2b, s2c = sig2[i], sig2[i + 1], sig2[i + 2]
        k1 = stage(y, s1a, s2a)
        y2 = tuple(y[m] + hh * k1[m] for m in range(8))
        k2 = stage(y2, s1b, s2b)
        y3 = tuple(y[m] + hh * k2[m] for m in range(8))
        k3 = stage(y3, s1b, s2b)
        y4 = tuple(y[m] + h * k3[m] for m in range(8))
        k4 = stage(y4, s1c, s2c)
        y = tuple(y[m] + h6 * (k1[m] + 2.0 * (k2[m] + k3[m]) + k4[m]) for m in range(8))
        if not math.isfinite(sum(y)):
            raise NonFiniteState(f"coupled window integration diverged at substep {j + 1}")
        for m in range(4):
            out1[m].append(y[m])
            out2[m].append(y[4 + m])
    return out1, out2


def _replay_states(
    prob: WindowProblem,
    controls: np.ndarray,
    sig_half: list[float] | None = None,
    rv: float = 0.0,
) -> tuple[np.ndarray, float]:
    """RK4 of the state equation under piecewise-linear control samples.

    Returns the node states and the running cost integral (signature tracking,
    velocity matching and effort terms, without the terminal term).  The cost
    is integrated alongside the state, so its quadrature matches the
    integrator order rather than the trapezoid rule; when ``sig_half`` is
    omitted the cost is reported as 0.
    """
    controls = np.asarray(controls, dtype=float)
    n = prob.n_sub
    if controls.shape != (n + 1,):
        raise GridMismatch(f"expected {n + 1} control samples, got {controls.shape}")
    hkb, c0, c1, c2, c3 = _coeffs(prob.params)
    w = prob.weights
    ts, tv, eta = w.theta_sigma, w.theta_v, w.eta
    h = prob.horizon / n
    hh, h6 = 0.5 * h, h / 6.0
    u = controls.tolist()
    with_cost = sig_half is not None
    if not with_cost:
        sig_half = [0.0] * (2 * n + 1)

    def rhs(x: float, v: float, uu: float, sig: float):
        if hkb:
            acc = uu - (c0 * v * v + c1 * x * x - c2) * v - c3 * x
        else:
            acc = uu - c0 * v - c1 * x
        run = 0.5 * (ts * (v - sig) ** 2 + tv * (v - rv) ** 2 + eta * uu * uu) if with_cost else 0.0
        return v, acc, run

    x, v = prob.state.x, prob.state.v
    cost = 0.0
    out = np.empty((n + 1, 2))
    out[0] = (x, v)
    for j in range(n):
        i = 2 * j
        u0, u1 = u[j], u[j + 1]
        um = 0.5 * (u0 + u1)
        s0, s1, s2 = sig_half[i], sig_half[i + 1], sig_half[i + 2]
        a1, b1, q1 = rhs(x, v, u0, s0)
        a2, b2, q2 = rhs(x + hh * a1, v + hh * b1, um, s1)
        a3, b3, q3 = rhs(x + hh * a2, v + hh * b2, um, s1)
        a4, b4, q4 = rhs(x + h * a3, v + h * b3, u1, s2)
        x += h6 * (a1 + 2.0 * (a2 + a3) + a4)
        v += h6 * (b1 + 2.0 * (b2 + b3) + b4)
        cost += h6 * (q1 + 2.0 * (q2 + q3) + q4)
        if not math.isfinite(x + v):
            raise NonFiniteState(f"state replay diverged at substep {j + 1}")
        out[j + 1] = (x, v)
    return out, cost


# --- shooting solvers -------------------------------------------------------


def _as_lambda0(warm_start, size: int) -> np.ndarray:
    if warm_start is None:
        return np.zeros(size)
    if isinstance(warm_start, Costate):
        return np.array([warm_start.l1, warm_start.l2], dtype=float)
    arr = np.asarray(warm_start, dtype=float).ravel()
    if arr.shape != (size,):
        raise ValueError(f"warm start must have {size} components")
    return arr


def _newton_shoot(residual, lam: np.ndarray, residual_tol: float, max_iter: int):
    """Damped Newton on the terminal residuals; returns (lam, r, rn, payload, it, ok)."""

    def safe_eval(z):
        try:
            return residual(z)
        except NonFiniteState:
            return None

    res = safe_eval(lam)
    if res is None and np.any(lam != 0.0):
        lam = np.zeros_like(lam)
        res = safe_eval(lam)
    if res is None:
        return lam, None, math.inf, None, 0, False
    r, payload = res
    rn = float(np.linalg.norm(r))
    m = lam.size
    for it in range(1, max_iter + 1):
        if rn < residual_tol:
            return lam, r, rn, payload, it - 1, True
        jac = np.empty((m, m))
        ok = True
        for i in range(m):
            dz = _FD_STEP * max(1.0, abs(lam[i]))
            probe = lam.copy()
            probe[i] += dz
            res_i = safe_eval(probe)
            if res_i is None:
                dz *= 1e-3
                probe = lam.copy()
                probe[i] += dz
                res_i = safe_eval(probe)
            if res_i is None:
                ok = False
                break
            jac[:, i] = (res_i[0] - r) / dz
        if not ok:
            break
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        accepted = False
        scale = 1.0
        for _ in range(BACKTRACK_MAX):
            res_t = safe_eval(lam + scale * step)
            if res_t is not None:
                r_t, payload_t = res_t
                rn_t = float(np.linalg.norm(r_t))
                if rn_t < rn:
                    lam = lam + scale * step
                    r, rn, payload = r_t, rn_t, payload_t
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            break
    converged = rn < residual_tol
    return lam, r, rn, payload, max_iter, converged


def _single_refs(prob: WindowProblem) -> tuple[list[float], float, np.ndarray]:
    t_half = _half_times(prob)
    sig_half = _eval_sigma(prob.sigma, t_half)
    est = prob.partner
    rv = est.velocity
    partner_pos = np.asarray(est.position_at(t_half[::2]), dtype=float)
    return sig_half, rv, partner_pos


def _single_solution(
    prob: WindowProblem,
    traj: tuple[list[float], list[float], list[float], list[float]],
    lam0: np.ndarray,
    rn: float,
    converged: bool,
    iterations: int,
    sig_half: list[float],
    rv: float,
    partner_pos: np.ndarray,
) -> WindowSolution:
    xs, vs, l1s, l2s = traj
    m = prob.n_sub + 1
    t_nodes = prob.t0 + np.arange(m) * (prob.horizon / prob.n_sub)
    states = np.column_stack([xs, vs])
    costates = np.column_stack([l1s, l2s])
    controls = -costates[:, 1] / prob.weights.eta
    cost = window_cost(
        states,
        controls,
        np.asarray(sig_half[::2]),
        partner_pos,
        np.full(m, rv),
        prob.weights,
        prob.horizon / prob.n_sub,
    )
    return WindowSolution(
        t=t_nodes,
        states=states,
        costates=costates,
        controls=controls,
        lambda0=lam0,
        residual_norm=rn,
        converged=converged,
        cost=cost,
        iterations=iterations,
    )


def solve_window_single(
    prob: WindowProblem,
    warm_start: Costate | np.ndarray | None = None,
    residual_tol: float = RESIDUAL_TOL,
    max_iter: int = MAX_ITER,
) -> WindowSolution:
    """Solve one window against an estimated partner.

    Newton shooting on the initial costate drives the terminal conditions
    ``l1(T) = theta_p * (x(T) - partner position(T))`` and ``l2(T) = 0`` below
    ``residual_tol``.  On non-convergence the fail-safe solution applies zero
    control over the window and is flagged ``converged=False``.
    """
    if prob.partner is None:
        raise ValueError("single-player solve needs a partner estimate")
    sig_half, rv, partner_pos = _single_refs(prob)
    rp_end = float(partner_pos[-1])
    theta_p = prob.weights.theta_p

    def residual(lam):
        traj = _integrate_single(prob, sig_half, rv, (lam[0], lam[1]))
        xs, _, l1s, l2s = traj
        r = np.array([l1s[-1] - theta_p * (xs[-1] - rp_end), l2s[-1]])
        return r, traj

    lam0 = _as_lambda0(warm_start, 2)
    lam, _, rn, traj, iterations, converged = _newton_shoot(residual, lam0, residual_tol, max_iter)
    if not converged:
        states, _ = _replay_states(prob, np.zeros(prob.n_sub + 1))
        zeros = [0.0] * (prob.n_sub + 1)
        traj = (states[:, 0].tolist(), states[:, 1].tolist(), zeros, zeros)
        lam = np.zeros(2)
    return _single_solution(prob, traj, lam, rn, converged, iterations, sig_half, rv, partner_pos)


def solve_window_coupled(
    prob1: WindowProblem,
    prob2: WindowProblem,
    warm_start: np.ndarray | None = None,
    residual_tol: float = RESIDUAL_TOL,
    max_iter: int = MAX_ITER,
) -> tuple[WindowSolution, WindowSolution]:
    """Solve the joint window problem of two coupled players.

    The four unknowns are both initial costates; the joint 8-dim system is
    integrated forward and Newton drives the four terminal residuals (both
    players' terminal conditions) below ``residual_tol``.  Fail-safe as in
    :func:`solve_window_single`.
    """
    if (prob1.t0, prob1.horizon, prob1.n_sub) != (prob2.t0, prob2.horizon, prob2.n_sub):
        raise ValueError("coupled problems must share t0, horizon and n_sub")
    t_half = _half_times(prob1)
    sig1 = _eval_sigma(prob1.sigma, t_half)
    sig2 = _eval_sigma(prob2.sigma, t_half)
    tp1, tp2 = prob1.weights.theta_p, prob2.weights.theta_p

    def residual(lam):
        o1, o2 = _integrate_coupled(prob1, prob2, sig1, sig2, lam)
        gap = o1[0][-1] - o2[0][-1]
        r = np.array(
            [
                o1[2][-1] - tp1 * gap,
                o1[3][-1],
                o2[2][-1] + tp2 * gap,
                o2[3][-1],
            ]
        )
        return r, (o1, o2)

    lam0 = _as_lambda0(warm_start, 4)
    lam, _, rn, payload, iterations, converged = _newton_shoot(residual, lam0, residual_tol, max_iter)
    if not converged:
        zeros = [0.0] * (prob1.n_sub + 1)
        s1, _ = _replay_states(prob1, np.zeros(prob1.n_sub + 1))
        s2, _ = _replay_states(prob2, np.zeros(prob2.n_sub + 1))
        payload = (
            [s1[:, 0].tolist(), s1[:, 1].tolist(), zeros, zeros],
            [s2[:, 0].tolist(), s2[:, 1].tolist(), zeros, zeros],
        )
        lam = np.zeros(4)
    o1, o2 = payload

    def build(prob, own, other, lam_own):
        m = prob.n_sub + 1
        t_nodes = prob.t0 + np.arange(m) * (prob.horizon / prob.n_sub)
        states = np.column_stack([own[0], own[1]])
        costates = np.column_stack([own[2], own[3]])
        controls = -costates[:, 1] / prob.weights.eta
        sig_nodes = _eval_sigma(prob.sigma, t_nodes)
        cost = window_cost(
            states,
            controls,
            np.asarray(sig_nodes),
            np.asarray(other[0]),
            np.asarray(other[1]),
            prob.weights,
            prob.horizon / prob.n_sub,
        )
        return WindowSolution(
            t=t_nodes,
            states=states,
            costates=costates,
            controls=controls,
            lambda0=lam_own,
            residual_norm=rn,
            converged=converged,
            cost=cost,
            iterations=iterations,
        )

    return build(prob1, o1, o2, lam[:2]), build(prob2, o2, o1, lam[2:])


def verify_second_variation(
    prob: WindowProblem,
    sol: WindowSolution,
    perturbations: Sequence[np.ndarray],
) -> float:
    """Minimum cost increase over a set of control perturbations.

    For linear dynamics the window cost is convex in the control, so any
    perturbation of a converged solution should not decrease the cost (up to
    numerics).  Each candidate control ``u* + du`` is re-integrated from the
    same initial state with the running cost accumulated inside the same RK4
    pass, so the quadrature matches the solver's discretization order; the
    baseline uses the identical evaluation path, so a zero perturbation maps
    to exactly zero increase.
    """
    if not isinstance(prob.params, LinearParams):
        raise ValueError("second-variation check expects linear dynamics")
    if not sol.converged:
        raise ValueError("second-variation check expects a converged solution")
    sig_half, rv, partner_pos = _single_refs(prob)
    rp_end = float(partner_pos[-1])
    m = prob.n_sub + 1

    def evaluate(controls: np.ndarray) -> float:
        states, running = _replay_states(prob, controls, sig_half=sig_half, rv=rv)
        return running + 0.5 * prob.weights.theta_p * (states[-1, 0] - rp_end) ** 2

    base = evaluate(sol.controls)
    best = math.inf
    for du in perturbations:
        du = np.asarray(du, dtype=float)
        if du.shape != (m,):
            raise GridMismatch(f"perturbation must have {m} samples")
        best = min(best, evaluate(sol.controls + du) - base)
    return best
