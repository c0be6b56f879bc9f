"""End-effector dynamics of the virtual players.

The second-order HKB oscillator (hybrid Rayleigh / van-der-Pol damping) models
each player's hand; a plain linear second-order system is available as a
simpler variant.  A fixed-step classical Runge-Kutta integrator advances the
augmented state/costate systems assembled by the window solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteState


@dataclass(frozen=True)
class HkbParams:
    """Intrinsic HKB coefficients (speed of reaction, settling behaviour)."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    omega: float = 1.0

    def __post_init__(self) -> None:
        vals = (self.alpha, self.beta, self.gamma, self.omega)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("HKB coefficients must be finite")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass(frozen=True)
class LinearParams:
    """Coefficients of the linear second-order variant x'' + a x' + b x = u."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("linear coefficients must be finite")


@dataclass(frozen=True)
class PlayerState:
    """Position and velocity of one end effector."""

    x: float = 0.0
    v: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.v)):
            raise ValueError("state must be finite")


def hkb_accel(p: HkbParams, s: PlayerState, u: float) -> float:
    """Acceleration of the HKB oscillator under control input ``u``.

    Returns ``u - (alpha*v^2 + beta*x^2 - gamma)*v - omega^2*x``.
    """
    return u - (p.alpha * s.v * s.v + p.beta * s.x * s.x - p.gamma) * s.v - p.omega * p.omega * s.x


def linear_accel(p: LinearParams, s: PlayerState, u: float) -> float:
    """Acceleration of the linear variant: ``u - a*v - b*x``."""
    return u - p.a * s.v - p.b * s.x


def rk4_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    y: np.ndarray,
    t: float,
    dt: float,
) -> np.ndarray:
    """Advance ``y`` by one classical 4th-order Runge-Kutta step.

    Parameters
    ----------
    f : callable
        Vector field ``f(t, y) -> dy/dt`` over the augmented state.
    y : ndarray
        Current state vector.
    t : float
        Current time (s).
    dt : float
        Step size (s), must be positive.

    Deterministic for identical inputs.  Raises :class:`NonFiniteState` if any
    component of the advanced state is NaN or infinite, which signals a solver
    blow-up to the calling shooting iteration.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(f(t, y))
    k2 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k1))
    k3 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k2))
    k4 = np.asarray(f(t + dt, y + dt * k3))
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"state became non-finite at t={t + dt:.6g}")
    return out
