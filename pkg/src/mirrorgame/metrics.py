"""Coordination metrics for mirror-game trials.

Covers the full evaluation stack: RMS temporal correspondence of positions,
normalized earth mover's distance between velocity PDFs, relative phase
extracted from Morlet wavelet cross-spectra, circular phase PDFs, classical
multidimensional scaling of distance matrices, and box-plot summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGrid, LengthMismatch, TooShort
from .signature import VelocityPDF

MORLET_OMEGA0 = 6.0
VOICES_PER_OCTAVE = 12
SCALE_SMOOTH_OCTAVES = 0.6
EMD_GRID_N = 1024
EMD_PAD_FRAC = 0.01


@dataclass(frozen=True)
class PhaseSeries:
    """Relative phase between two players over time, in [-pi, pi] rad."""

    t: np.ndarray
    phi: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "phi", phi)
        if t.size != phi.size:
            raise LengthMismatch("t and phi must have equal length")
        if phi.size and np.max(np.abs(phi)) > np.pi + 1e-12:
            raise ValueError("phases must lie within [-pi, pi]")


@dataclass(frozen=True)
class PhasePDF:
    """Circular probability density on a uniform angular grid over [-pi, pi]."""

    z: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric non-negative dissimilarities with a zero diagonal."""

    d: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if np.max(np.abs(d - d.T)) > 1e-12:
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0.0):
            raise ValueError("distance matrix must have a zero diagonal")
        if np.any(d < 0.0):
            raise ValueError("distances must be non-negative")

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class BoxStats:
    median: float
    q25: float
    q75: float
    whisker_lo: float
    whisker_hi: float
    outliers: list[float] = field(default_factory=list)


def rms_position_error(x1: np.ndarray, x2: np.ndarray, length_scale: float) -> float:
    """RMS of the position error, normalized by the admissible range length."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape or x1.ndim != 1 or x1.size < 1:
        raise LengthMismatch("position series must be non-empty and equally long")
    if length_scale <= 0:
        raise ValueError("length_scale must be positive")
    return float(np.sqrt(np.mean((x1 - x2) ** 2)) / length_scale)


# --- earth mover's distance --------------------------------------------------


def _shared_grid(pdfs: list[VelocityPDF], grid_n: int, pad_frac: float) -> tuple[np.ndarray, list[np.ndarray]]:
    lo = min(float(p.z[0]) for p in pdfs)
    hi = max(float(p.z[-1]) for p in pdfs)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise EmptyGrid("pdf supports do not span a usable grid")
    pad = pad_frac * (hi - lo)
    z = np.linspace(lo - pad, hi + pad, grid_n)
    out = []
    for p in pdfs:
        q = np.interp(z, p.z, p.p, left=0.0, right=0.0)
        total = np.trapezoid(q, z)
        if total <= 0:
            raise EmptyGrid("pdf mass vanished on the shared grid")
        out.append(q / total)
    return z, out


def _cdf(q: np.ndarray, dz: float) -> np.ndarray:
    f = np.concatenate([[0.0], np.cumsum(0.5 * (q[1:] + q[:-1]) * dz)])
    return f / f[-1]


def emd(p1: VelocityPDF, p2: VelocityPDF, grid_n: int = EMD_GRID_N) -> float:
    """Normalized 1-D earth mover's distance between two velocity PDFs.

    Both densities are resampled onto a common uniform grid spanning the
    padded union of their supports; the distance is the mean absolute
    difference of their cumulative distributions over that grid, which lies in
    [0, 1] by construction.
    """
    z, (q1, q2) = _shared_grid([p1, p2], grid_n, EMD_PAD_FRAC)
    dz = z[1] - z[0]
    f1, f2 = _cdf(q1, dz), _cdf(q2, dz)
    return float(np.trapezoid(np.abs(f1 - f2), z) / (z[-1] - z[0]))


def emd_matrix(pdfs: list[VelocityPDF], grid_n: int = EMD_GRID_N) -> DistanceMatrix:
    """Pairwise EMDs of several PDFs resampled onto one shared grid."""
    z, qs = _shared_grid(list(pdfs), grid_n, EMD_PAD_FRAC)
    dz = z[1] - z[0]
    span = z[-1] - z[0]
    cdfs = [_cdf(q, dz) for q in qs]
    n = len(cdfs)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            val = float(np.trapezoid(np.abs(cdfs[i] - cdfs[j]), z) / span)
            d[i, j] = d[j, i] = val
    return DistanceMatrix(d=d)


# --- wavelet relative phase ---------------------------------------------------


def _next_pow2(n: int) -> int:
    return 1 << (int(n - 1).bit_length())


def _smooth_scale(a: np.ndarray, win: int) -> np.ndarray:
    """Boxcar along the scale axis with edge truncation."""
    ns = a.shape[0]
    half_lo = (win - 1) // 2
    half_hi = win // 2
    padded = np.concatenate([np.zeros((1,) + a.shape[1:], dtype=a.dtype), np.cumsum(a, axis=0)])
    idx = np.arange(ns)
    lo = np.clip(idx - half_lo, 0, ns)
    hi = np.clip(idx + half_hi + 1, 0, ns)
    sums = padded[hi] - padded[lo]
    return sums / (hi - lo)[:, None]


def wavelet_relative_phase(
    x1: np.ndarray,
    x2: np.ndarray,
    fs: float,
    cutoff: float = 1.0,
    omega0: float = MORLET_OMEGA0,
    voices: int = VOICES_PER_OCTAVE,
) -> PhaseSeries:
    """Relative phase of two motions from smoothed Morlet cross-spectra.

    A continuous Morlet transform on a dyadic scale grid covers frequencies
    from ``4/duration`` up to ``cutoff``.  The cross-spectrum is smoothed in
    time (scale-dependent Gaussian) and across scales (boxcar over 0.6
    octave); at each instant the phase is the argument of the
    coherence-weighted sum of the smoothed cross-spectrum over the scales
    outside the cone of influence.  Positive phase means the first series
    leads the second.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape or x1.ndim != 1:
        raise LengthMismatch("series must be 1-D and equally long")
    n = x1.size
    duration = n / fs
    if duration < 4.0 / cutoff:
        raise TooShort(f"need at least {4.0 / cutoff:.3g} s of data, got {duration:.3g} s")
    dt = 1.0 / fs

    a1 = x1 - x1.mean()
    a2 = x2 - x2.mean()
    npad = _next_pow2(2 * n)
    omega = 2.0 * np.pi * np.fft.fftfreq(npad, dt)
    f1 = np.fft.fft(a1, npad)
    f2 = np.fft.fft(a2, npad)

    fourier_factor = 4.0 * np.pi / (omega0 + math.sqrt(2.0 + omega0 * omega0))
    s_min = 1.0 / (fourier_factor * cutoff)
    s_max = duration / (4.0 * fourier_factor)
    n_scales = int(np.ceil(voices * np.log2(s_max / s_min))) + 1
    scales = s_min * 2.0 ** (np.arange(n_scales) / voices)

    w1 = np.empty((n_scales, n), dtype=complex)
    w2 = np.empty((n_scales, n), dtype=complex)
    positive = omega > 0
    for i, s in enumerate(scales):
        psi_hat = math.pi**-0.25 * math.sqrt(2.0 * math.pi * s / dt) * np.exp(
            -0.5 * (s * omega - omega0) ** 2
        ) * positive
        w1[i] = np.fft.ifft(f1 * psi_hat)[:n]
        w2[i] = np.fft.ifft(f2 * psi_hat)[:n]

    inv_s = 1.0 / scales[:, None]
    p1 = (w1.real**2 + w1.imag**2) * inv_s
    p2 = (w2.real**2 + w2.imag**2) * inv_s
    c12 = w1 * np.conj(w2) * inv_s

    def smooth_time(a: np.ndarray) -> np.ndarray:
        fa = np.fft.fft(a, npad, axis=1)
        fa *= np.exp(-0.5 * (scales[:, None] * omega[None, :]) ** 2)
        return np.fft.ifft(fa, axis=1)[:, :n]

    s1 = smooth_time(p1).real
    s2 = smooth_time(p2).real
    s12 = smooth_time(c12)
    win = max(int(round(SCALE_SMOOTH_OCTAVES * voices)), 1)
    s1 = _smooth_scale(s1, win)
    s2 = _smooth_scale(s2, win)
    s12 = _smooth_scale(s12, win)

    denom = s1 * s2
    coh2 = np.zeros_like(denom)
    np.divide(np.abs(s12) ** 2, denom, out=coh2, where=denom > 0)
    coh2 = np.clip(coh2, 0.0, 1.0)

    t = np.arange(n) * dt
    edge = np.minimum(t, t[-1] - t)
    valid = (math.sqrt(2.0) * scales)[:, None] <= edge[None, :]
    weights = coh2 * valid
    aggregate = (weights * s12).sum(axis=0)
    keep = valid.any(axis=0)
    return PhaseSeries(t=t[keep], phi=np.angle(aggregate[keep]))


def phase_pdf(ps: PhaseSeries, grid_n: int = 360, bandwidth: float | None = None) -> PhasePDF:
    """Wrapped-Gaussian kernel density of a phase series on [-pi, pi].

    Kernels wrap plus/minus three turns so the density is periodic:
    ``p(-pi) == p(pi)``.  The bandwidth defaults to Silverman's rule on the
    circular standard deviation, floored at one grid cell.
    """
    phi = np.asarray(ps.phi, dtype=float)
    if phi.size == 0:
        raise ValueError("phase series is empty")
    if bandwidth is None:
        r = abs(np.mean(np.exp(1j * phi)))
        sd = math.sqrt(max(-2.0 * math.log(max(r, 1e-300)), 0.0)) if r < 1.0 else 0.0
        sd = min(sd, math.pi)
        h = max(1.06 * sd * phi.size ** (-0.2), 2.0 * math.pi / grid_n)
    else:
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        h = float(bandwidth)
    z = np.linspace(-math.pi, math.pi, grid_n)
    dens = np.zeros(grid_n)
    for k in range(-3, 4):
        diff = (z[:, None] - (phi[None, :] + 2.0 * math.pi * k)) / h
        dens += np.exp(-0.5 * diff * diff).sum(axis=1)
    dens /= phi.size * h * math.sqrt(2.0 * math.pi)
    dens /= np.trapezoid(dens, z)
    return PhasePDF(z=z, p=dens)


# --- multidimensional scaling -------------------------------------------------


def classical_mds(dm: DistanceMatrix, dim: int = 2) -> np.ndarray:
    """Classical (Torgerson) MDS embedding of a distance matrix.

    Double-centers the squared distances, keeps the top ``dim`` eigenpairs
    with negative eigenvalues clipped to zero, and fixes each axis's sign so
    its largest-magnitude coordinate is positive.
    """
    n = dm.n
    if n < dim:
        raise ValueError("need at least dim points")
    d2 = dm.d**2
    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * centering @ d2 @ centering
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1][:dim]
    lams = np.clip(evals[order], 0.0, None)
    coords = evecs[:, order] * np.sqrt(lams)[None, :]
    for j in range(dim):
        col = coords[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            coords[:, j] = -col
    return coords


def summary_stats(values: np.ndarray) -> BoxStats:
    """Box-plot summary: quartiles, 1.5-IQR whiskers, outliers beyond them."""
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size < 1 or not np.all(np.isfinite(vals)):
        raise ValueError("need at least one finite value")
    q25, med, q75 = np.percentile(vals, [25.0, 50.0, 75.0])
    iqr = q75 - q25
    lo_fence = q25 - 1.5 * iqr
    hi_fence = q75 + 1.5 * iqr
    inside = vals[(vals >= lo_fence) & (vals <= hi_fence)]
    whisker_lo = float(inside.min())
    whisker_hi = float(inside.max())
    outliers = sorted(float(v) for v in vals[(vals < lo_fence) | (vals > hi_fence)])
    return BoxStats(
        median=float(med),
        q25=float(q25),
        q75=float(q75),
        whisker_lo=whisker_lo,
        whisker_hi=whisker_hi,
        outliers=outliers,
    )
