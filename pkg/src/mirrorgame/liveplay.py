"""Real-time virtual player.

A session advances in fixed ticks: each tick ingests the latest human
position, estimates the human's motion over the coming window, solves the
single-player window problem warm-started from the previous tick, applies the
whole window open loop and emits the virtual player's new position.  A
scripted replay source stands in for the human during headless runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import CouplingWeights, PartnerEstimate, WindowProblem, solve_window_single
from .errors import SchemaViolation, TooShort
from .experiments import TrialAnalysis, TrialRecord, analyze_trial
from .oscillator import HkbParams, PlayerState
from .signature import Signature, load_positions, signature_values


@dataclass(frozen=True)
class SessionConfig:
    """Parameters of one live session."""

    signature: Signature
    params: HkbParams = HkbParams()
    weights: CouplingWeights = CouplingWeights(theta_p=0.2, theta_sigma=0.4, theta_v=0.4, eta=1e-4)
    period: float = 0.04
    domain: tuple[float, float] = (-0.5, 0.5)
    max_duration: float = 60.0
    n_sub: int = 10
    hp_signature: Signature | None = None

    def __post_init__(self) -> None:
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must be a non-empty interval")
        if self.period <= 0 or self.max_duration <= 0:
            raise ValueError("period and max_duration must be positive")


@dataclass
class SessionState:
    """Mutable state of one running session; owned by a single loop."""

    config: SessionConfig
    tick_index: int = 0
    hp_prev: float | None = None
    hp_now: float | None = None
    vp: PlayerState = field(default_factory=PlayerState)
    warm: np.ndarray | None = None
    phase: str = "idle"
    faults: int = 0
    t_log: list[float] = field(default_factory=list)
    vp_log: list[float] = field(default_factory=list)
    hp_log: list[float] = field(default_factory=list)
    u_log: list[float] = field(default_factory=list)

    def start(self) -> None:
        if self.phase != "idle":
            raise RuntimeError("session already started")
        self.phase = "running"

    @property
    def elapsed(self) -> float:
        return self.tick_index * self.config.period


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def session_tick(state: SessionState, hp_x: float) -> tuple[SessionState, float]:
    """Advance the session by one tick given the latest human position.

    Returns the updated state and the virtual player position to emit,
    clamped to the configured domain.  On solver non-convergence the
    zero-control prediction is applied and the fault counter incremented.
    """
    if state.phase != "running":
        raise RuntimeError("session is not running")
    cfg = state.config
    lo, hi = cfg.domain
    hp_x = _clamp(float(hp_x), lo, hi)
    t0 = state.elapsed
    if state.hp_now is None:
        est = PartnerEstimate(t0=t0, anchor=hp_x, velocity=0.0)
    else:
        est = PartnerEstimate(t0=t0, anchor=hp_x, velocity=(hp_x - state.hp_now) / cfg.period)
    prob = WindowProblem(
        t0=t0,
        horizon=cfg.period,
        state=state.vp,
        params=cfg.params,
        weights=cfg.weights,
        sigma=lambda ts: signature_values(cfg.signature, ts),
        partner=est,
        n_sub=cfg.n_sub,
    )
    sol = solve_window_single(prob, warm_start=state.warm)
    if sol.converged:
        state.warm = sol.lambda0
    else:
        state.faults += 1
        state.warm = None
    state.hp_prev, state.hp_now = state.hp_now, hp_x
    state.vp = PlayerState(x=float(sol.states[-1, 0]), v=float(sol.states[-1, 1]))
    emitted = _clamp(state.vp.x, lo, hi)
    state.t_log.append(t0)
    state.hp_log.append(hp_x)
    state.vp_log.append(emitted)
    state.u_log.append(float(sol.controls[0]))
    state.tick_index += 1
    if state.elapsed >= cfg.max_duration:
        state.phase = "finished"
    return state, emitted


@dataclass(frozen=True)
class ScriptedSource:
    """Human positions replayed from a recording, resampled at tick times."""

    t: np.ndarray
    x: np.ndarray

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if self.t.size else 0.0

    def sample(self, t: float) -> float:
        return float(np.interp(t, self.t, self.x))

    def at_ticks(self, period: float):
        """Yield one position per tick until the recording runs out."""
        i = 0
        while self.t.size:
            t = i * period
            if t > self.duration:
                return
            yield self.sample(self.t[0] + t)
            i += 1


def replay_hp(path: str | Path) -> ScriptedSource:
    """Load a ``t,x`` recording as a scripted human source.

    An empty recording yields no ticks, ending the session immediately.
    """
    t, x = load_positions(path)
    if t.size and np.any(np.diff(t) <= 0):
        raise SchemaViolation(f"{path}: timestamps must be strictly increasing", path="t")
    return ScriptedSource(t=t, x=x)


def run_scripted_session(
    config: SessionConfig, source: ScriptedSource
) -> tuple[SessionState, list[float]]:
    """Drive a session headlessly from a scripted source.

    Returns the finished state and the per-tick compute times (s), which is
    what the real-time budget checks measure.
    """
    state = SessionState(config=config)
    state.start()
    timings: list[float] = []
    for hp_x in source.at_ticks(config.period):
        begin = time.perf_counter()
        session_tick(state, hp_x)
        timings.append(time.perf_counter() - begin)
        if state.phase == "finished":
            break
    if state.phase == "running":
        state.phase = "finished"
    return state, timings


def session_report(state: SessionState) -> TrialAnalysis:
    """Post-session metrics over the buffered VP/HP series.

    The virtual player takes the first slot, the human the second, so
    ``emd_sigma1_nu1`` compares the VP against its own signature and
    ``emd_sigma2_nu2`` the human against theirs (when supplied).
    """
    if state.phase != "finished":
        raise RuntimeError("session is not finished")
    n = len(state.t_log)
    cfg = state.config
    if n * cfg.period < 10.0:
        raise TooShort("need at least 10 s of session data")
    rec = TrialRecord(
        t=np.asarray(state.t_log),
        x1=np.asarray(state.vp_log),
        x2=np.asarray(state.hp_log),
        u1=np.asarray(state.u_log),
        u2=np.zeros(n),
        h=0,
        k=0,
        converged_fraction=1.0 - state.faults / max(n, 1),
        config={"L": cfg.domain[1] - cfg.domain[0]},
    )
    an = analyze_trial(rec, (cfg.signature, cfg.hp_signature))
    labels = ["sigma_vp"]
    if cfg.hp_signature is not None:
        labels.append("sigma_hp")
    labels += ["nu", "mu"]
    an.mds_labels = labels
    return an
