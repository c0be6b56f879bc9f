import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorgame import (
    DistanceMatrix,
    LengthMismatch,
    TooShort,
    VelocityPDF,
    classical_mds,
    emd,
    emd_matrix,
    phase_pdf,
    rms_position_error,
    summary_stats,
    wavelet_relative_phase,
)
from mirrorgame.metrics import PhaseSeries


class TestRmsPositionError:
    def test_identical(self):
        x = np.array([0.1, -0.2, 0.3])
        assert rms_position_error(x, x, 1.0) == 0.0

    def test_constant_offset(self):
        x = np.linspace(-0.5, 0.5, 17)
        assert rms_position_error(x, x + 0.2, 2.0) == pytest.approx(0.1, rel=1e-12)

    def test_alternating_offset(self):
        n = 10
        d = 0.3 * (-1.0) ** np.arange(n)
        assert rms_position_error(d, np.zeros(n), 1.0) == pytest.approx(0.3, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rms_position_error(np.zeros(3), np.zeros(4), 1.0)

    @given(shift=st.floats(-5, 5, allow_nan=False))
    @settings(max_examples=25)
    def test_common_shift_invariance(self, shift):
        rng = np.random.default_rng(0)
        x1 = rng.uniform(-1, 1, 20)
        x2 = rng.uniform(-1, 1, 20)
        a = rms_position_error(x1, x2, 1.0)
        b = rms_position_error(x1 + shift, x2 + shift, 1.0)
        assert b == pytest.approx(a, abs=1e-9)


def gaussian_pdf(center, width, lo=-2.0, hi=2.0, n=2001):
    z = np.linspace(lo, hi, n)
    p = np.exp(-0.5 * ((z - center) / width) ** 2)
    p /= np.trapezoid(p, z)
    return VelocityPDF(z=z, p=p)


def random_pdf(rng, lo=-2.0, hi=2.0, n=801):
    z = np.linspace(lo, hi, n)
    p = np.zeros_like(z)
    for _ in range(rng.integers(1, 4)):
        c = rng.uniform(lo * 0.6, hi * 0.6)
        w = rng.uniform(0.05, 0.5)
        p += rng.uniform(0.2, 1.0) * np.exp(-0.5 * ((z - c) / w) ** 2)
    p /= np.trapezoid(p, z)
    return VelocityPDF(z=z, p=p)


class TestEmd:
    def test_identity(self):
        p = gaussian_pdf(0.3, 0.2)
        assert emd(p, p) == 0.0

    def test_near_delta_bumps(self):
        a, b = -0.8, 0.6
        p1 = gaussian_pdf(a, 0.005)
        p2 = gaussian_pdf(b, 0.005)
        # discrete CDF-summation oracle on the padded shared grid the
        # implementation uses: |Z| = padded union span, mass transported |a-b|
        span = (2.0 - (-2.0)) * 1.02
        assert emd(p1, p2) == pytest.approx(abs(a - b) / span, abs=1e-3)

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p1, p2 = random_pdf(rng), random_pdf(rng)
            assert emd(p1, p2) == emd(p2, p1)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            p1, p2, p3 = (random_pdf(rng) for _ in range(3))
            d12, d23, d13 = emd(p1, p2), emd(p2, p3), emd(p1, p3)
            assert d13 <= d12 + d23 + 1e-10

    def test_bounded_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            p1, p2 = random_pdf(rng), random_pdf(rng)
            assert 0.0 <= emd(p1, p2) <= 1.0

    def test_matrix_shared_grid(self):
        rng = np.random.default_rng(4)
        pdfs = [random_pdf(rng) for _ in range(4)]
        dm = emd_matrix(pdfs)
        assert dm.n == 4
        assert np.all(np.diag(dm.d) == 0.0)
        assert np.array_equal(dm.d, dm.d.T)


class TestWaveletRelativePhase:
    fs = 100.0

    def _sin(self, f, lag=0.0, duration=60.0):
        t = np.arange(0.0, duration, 1.0 / self.fs)
        return np.sin(2 * np.pi * f * t - lag)

    def _interior(self, ps, lo=10.0, hi=50.0):
        keep = (ps.t >= lo) & (ps.t <= hi)
        return ps.phi[keep]

    def test_identical_signals_zero_phase(self):
        x = self._sin(0.25)
        ps = wavelet_relative_phase(x, x, self.fs)
        assert np.max(np.abs(self._interior(ps))) < 0.05

    def test_quarter_period_lag(self):
        x1 = self._sin(0.25)
        x2 = self._sin(0.25, lag=np.pi / 2)  # x1 leads
        ps = wavelet_relative_phase(x1, x2, self.fs)
        inner = self._interior(ps)
        assert np.max(np.abs(inner - np.pi / 2)) < 0.1

    def test_noise_phase_is_broad(self):
        rng = np.random.default_rng(5)
        n1 = rng.normal(size=6000)
        n2 = rng.normal(size=6000)
        ps_noise = wavelet_relative_phase(n1, n2, self.fs)
        x1 = self._sin(0.25)
        x2 = self._sin(0.25, lag=np.pi / 2)
        ps_sin = wavelet_relative_phase(x1, x2, self.fs)

        def circ_std(phi):
            r = abs(np.mean(np.exp(1j * phi)))
            return math.sqrt(max(-2.0 * math.log(max(r, 1e-12)), 0.0))

        assert circ_std(self._interior(ps_noise)) >= 5.0 * circ_std(self._interior(ps_sin))

    def test_swap_negates_phase(self):
        rng = np.random.default_rng(6)
        t = np.arange(0.0, 30.0, 1.0 / self.fs)
        x1 = np.sin(2 * np.pi * 0.3 * t) + 0.3 * rng.normal(size=t.size)
        x2 = np.cos(2 * np.pi * 0.2 * t) + 0.3 * rng.normal(size=t.size)
        a = wavelet_relative_phase(x1, x2, self.fs)
        b = wavelet_relative_phase(x2, x1, self.fs)
        mismatch = np.abs(np.angle(np.exp(1j * (a.phi + b.phi))))
        assert np.max(mismatch) < 1e-9

    def test_too_short(self):
        x = self._sin(0.25, duration=3.0)
        with pytest.raises(TooShort):
            wavelet_relative_phase(x, x, self.fs)

    def test_phases_in_range(self):
        rng = np.random.default_rng(7)
        ps = wavelet_relative_phase(rng.normal(size=800), rng.normal(size=800), 10.0)
        assert np.all(np.abs(ps.phi) <= np.pi)


class TestPhasePdf:
    def test_constant_zero(self):
        ps = PhaseSeries(t=np.arange(100.0), phi=np.zeros(100))
        pp = phase_pdf(ps)
        assert abs(pp.z[np.argmax(pp.p)]) <= 2 * np.pi / 360 + 1e-12

    def test_integrates_to_one(self):
        rng = np.random.default_rng(8)
        ps = PhaseSeries(t=np.arange(200.0), phi=rng.uniform(-np.pi, np.pi, 200))
        pp = phase_pdf(ps)
        assert abs(np.trapezoid(pp.p, pp.z) - 1.0) < 1e-6

    def test_wraps_at_pi(self):
        ps = PhaseSeries(t=np.arange(50.0), phi=np.full(50, np.pi))
        pp = phase_pdf(ps)
        assert abs(pp.p[0] - pp.p[-1]) < 1e-9
        assert np.argmax(pp.p) in (0, len(pp.p) - 1)

    def test_periodic_endpoints(self):
        rng = np.random.default_rng(9)
        ps = PhaseSeries(t=np.arange(300.0), phi=rng.vonmises(1.0, 2.0, 300))
        pp = phase_pdf(ps)
        assert abs(pp.p[0] - pp.p[-1]) < 1e-9


def pairwise(coords):
    n = coords.shape[0]
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d[i, j] = np.linalg.norm(coords[i] - coords[j])
    return d


class TestClassicalMds:
    def test_collinear_points(self):
        dm = DistanceMatrix(d=np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]))
        coords = classical_mds(dm, dim=2)
        got = pairwise(coords)
        assert np.max(np.abs(got - dm.d)) < 1e-9

    def test_two_points(self):
        d = 0.37
        dm = DistanceMatrix(d=np.array([[0.0, d], [d, 0.0]]))
        coords = classical_mds(dm, dim=2)
        assert abs(np.linalg.norm(coords[0] - coords[1]) - d) < 1e-12

    def test_planar_points_exact(self):
        rng = np.random.default_rng(10)
        pts = rng.uniform(-1, 1, (10, 2))
        dm = DistanceMatrix(d=pairwise(pts))
        coords = classical_mds(dm, dim=2)
        assert np.max(np.abs(pairwise(coords) - dm.d)) < 1e-6

    def test_centered_output(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-1, 1, (6, 2)) + 5.0
        coords = classical_mds(DistanceMatrix(d=pairwise(pts)), dim=2)
        assert np.max(np.abs(coords.mean(axis=0))) < 1e-9

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(12)
        pts = rng.uniform(-1, 1, (5, 2))
        dm = DistanceMatrix(d=pairwise(pts))
        a = classical_mds(dm)
        b = classical_mds(dm)
        assert np.array_equal(a, b)
        for j in range(a.shape[1]):
            assert a[np.argmax(np.abs(a[:, j])), j] >= 0


class TestDistanceMatrixValidation:
    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            DistanceMatrix(d=np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(ValueError):
            DistanceMatrix(d=np.array([[0.1, 1.0], [1.0, 0.0]]))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            DistanceMatrix(d=np.array([[0.0, -1.0], [-1.0, 0.0]]))


class TestSummaryStats:
    def test_five_numbers(self):
        s = summary_stats([1.0, 2.0, 3.0, 4.0, 5.0])
        assert (s.median, s.q25, s.q75) == (3.0, 2.0, 4.0)
        assert s.whisker_lo == 1.0 and s.whisker_hi == 5.0 and s.outliers == []

    def test_single_value(self):
        s = summary_stats([0.7])
        assert s.median == s.q25 == s.q75 == s.whisker_lo == s.whisker_hi == 0.7
        assert s.outliers == []

    def test_outlier_detection(self):
        s = summary_stats(list(range(1, 10)) + [100.0])
        assert s.outliers == [100.0]
        assert s.whisker_hi == 9.0
