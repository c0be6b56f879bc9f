"""Individual motor signatures.

A signature is the velocity time series a player produces when moving alone;
its velocity distribution identifies the player.  This module synthesizes
signatures, imports them from recorded positions, provides time-indexed
lookup with looped replay, and estimates velocity PDFs by kernel density.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateSamples, NonMonotonicTime, SchemaViolation


@dataclass(frozen=True)
class Signature:
    """A player's solo velocity series on strictly increasing timestamps."""

    t: np.ndarray
    v: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size or t.size < 2:
            raise ValueError("signature needs matching t and v with >= 2 samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("signature samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise NonMonotonicTime("signature timestamps must be strictly increasing")

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])


@dataclass(frozen=True)
class VelocityPDF:
    """Probability density of velocities on a uniform grid."""

    z: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float)
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "p", p)
        if z.ndim != 1 or z.size != p.size or z.size < 2:
            raise ValueError("pdf needs matching z and p with >= 2 points")
        dz = np.diff(z)
        if np.any(np.abs(dz - dz[0]) > 1e-9 * abs(dz[0])):
            raise ValueError("pdf grid must be uniform")
        if np.any(p < 0):
            raise ValueError("density must be non-negative")
        total = float(np.trapezoid(p, z))
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"density must integrate to 1, got {total}")


def synth_signature(
    seed: int,
    duration: float = 60.0,
    rate: float = 100.0,
    n_components: int = 6,
    band: tuple[float, float] = (0.1, 1.5),
    amp_scale: float = 1.0,
    label: str = "",
) -> Signature:
    """Synthesize a deterministic multi-sine velocity signature.

    ``n_components`` sinusoids with frequencies drawn inside ``band`` (Hz),
    random phases and amplitudes normalized so their absolute sum equals
    ``amp_scale``.  The same seed always yields the same signature.
    """
    if duration <= 0 or rate <= 0:
        raise ValueError("duration and rate must be positive")
    if n_components < 1:
        raise ValueError("need at least one component")
    f_lo, f_hi = band
    if not (0 < f_lo < f_hi):
        raise ValueError("band must satisfy 0 < f_lo < f_hi")
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(f_lo, f_hi, n_components)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_components)
    raw = rng.uniform(0.5, 1.0, n_components)
    amps = raw / raw.sum() * amp_scale
    t = np.arange(int(round(duration * rate))) / rate
    v = np.zeros_like(t)
    for a, f, ph in zip(amps, freqs, phases):
        v += a * np.sin(2.0 * np.pi * f * t + ph)
    return Signature(t=t, v=v, label=label or f"synth-{seed}")


def signature_values(sig: Signature, ts: np.ndarray) -> np.ndarray:
    """Velocity at arbitrary times: linear interpolation, looped replay.

    Times outside the recorded span wrap modulo the signature duration.
    """
    ts = np.asarray(ts, dtype=float)
    t0 = sig.t[0]
    wrapped = t0 + np.mod(ts - t0, sig.duration)
    return np.interp(wrapped, sig.t, sig.v)


def signature_at(sig: Signature, t: float) -> float:
    """Scalar version of :func:`signature_values`."""
    return float(signature_values(sig, np.asarray([t]))[0])


def velocity_from_positions(t: np.ndarray, x: np.ndarray, target_rate: float) -> Signature:
    """Resample a position recording and differentiate it to a velocity series.

    Positions are resampled onto a uniform grid at ``target_rate`` using
    shape-preserving piecewise cubic interpolation, then differentiated with
    central differences (one-sided at the endpoints).
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.ndim != 1 or t.size != x.size or t.size < 3:
        raise ValueError("need matching t and x with >= 3 samples")
    if np.any(np.diff(t) <= 0):
        raise NonMonotonicTime("position timestamps must be strictly increasing")
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    h = 1.0 / target_rate
    n = int(np.floor((t[-1] - t[0]) * target_rate)) + 1
    if n < 3:
        raise ValueError("recording too short for the requested rate")
    tu = t[0] + np.arange(n) * h
    xu = PchipInterpolator(t, x)(tu)
    v = np.empty_like(xu)
    v[1:-1] = (xu[2:] - xu[:-2]) / (2.0 * h)
    v[0] = (xu[1] - xu[0]) / h
    v[-1] = (xu[-1] - xu[-2]) / h
    return Signature(t=tu, v=v)


def kde_pdf(samples: np.ndarray, grid_n: int = 512, bandwidth: float | None = None) -> VelocityPDF:
    """Gaussian kernel density of velocity samples on a uniform grid.

    The grid spans ``[min - 3h, max + 3h]``; the bandwidth defaults to
    Silverman's rule ``1.06 * std * n^(-1/5)``.  Raises
    :class:`DegenerateSamples` when all samples coincide and no explicit
    bandwidth is given.
    """
    s = np.asarray(samples, dtype=float).ravel()
    if s.size < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    if bandwidth is None:
        sd = float(np.std(s, ddof=1))
        if sd == 0.0:
            raise DegenerateSamples("all samples identical; supply an explicit bandwidth")
        h = 1.06 * sd * s.size ** (-0.2)
    else:
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        h = float(bandwidth)
    z = np.linspace(s.min() - 3.0 * h, s.max() + 3.0 * h, grid_n)
    diff = (z[:, None] - s[None, :]) / h
    p = np.exp(-0.5 * diff * diff).sum(axis=1) / (s.size * h * math.sqrt(2.0 * math.pi))
    p /= np.trapezoid(p, z)
    return VelocityPDF(z=z, p=p)


# --- file formats -----------------------------------------------------------
#
# Signatures: CSV with header ``t,v``; position recordings: CSV with header
# ``t,x``.  UTF-8, '.' decimal separator, one sample per row.  Floats are
# written with repr so a round trip is bit-identical.


def _read_two_columns(path: str | Path, header: tuple[str, str]) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise SchemaViolation(f"{path}: empty file, expected header {','.join(header)}", path="header")
        if [c.strip() for c in head] != list(header):
            raise SchemaViolation(
                f"{path}: expected header {','.join(header)}, got {','.join(head)}", path="header"
            )
        a, b = [], []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaViolation(f"{path}: row {i + 2} has {len(row)} fields", path=f"row[{i}]")
            try:
                a.append(float(row[0]))
                b.append(float(row[1]))
            except ValueError as exc:
                raise SchemaViolation(f"{path}: row {i + 2}: {exc}", path=f"row[{i}]") from exc
    return np.asarray(a), np.asarray(b)


def _write_two_columns(path: str | Path, header: tuple[str, str], a: np.ndarray, b: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for x, y in zip(a, b):
            writer.writerow([repr(float(x)), repr(float(y))])


def load_signature(path: str | Path, label: str = "") -> Signature:
    """Read a ``t,v`` signature CSV."""
    t, v = _read_two_columns(path, ("t", "v"))
    try:
        return Signature(t=t, v=v, label=label or Path(path).stem)
    except (ValueError, NonMonotonicTime) as exc:
        raise SchemaViolation(f"{path}: {exc}", path="t") from exc


def save_signature(sig: Signature, path: str | Path) -> None:
    """Write a signature as a ``t,v`` CSV."""
    _write_two_columns(path, ("t", "v"), sig.t, sig.v)


def load_positions(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``t,x`` position recording CSV."""
    return _read_two_columns(path, ("t", "x"))


def save_positions(t: np.ndarray, x: np.ndarray, path: str | Path) -> None:
    """Write a position recording as a ``t,x`` CSV."""
    _write_two_columns(path, ("t", "x"), t, x)
