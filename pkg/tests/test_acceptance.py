"""Acceptance suite.

Each test runs one acceptance criterion at its stated tolerance and runtime
budget and prints a single pass/fail line (to the raw stdout so the lines
appear even under pytest capture).  Run with::

    pytest tests/test_acceptance.py -v
"""

import math
import sys
import time

import numpy as np
import pytest

from mirrorgame import (
    Costate,
    CouplingWeights,
    DistanceMatrix,
    HkbParams,
    LinearParams,
    PlayerSetup,
    PlayerState,
    ScriptedSource,
    SessionConfig,
    VelocityPDF,
    WindowProblem,
    classical_mds,
    costate_rhs,
    default_config,
    emd,
    estimate_partner,
    kde_pdf,
    phase_pdf,
    rms_position_error,
    run_dyad_batch,
    run_scripted_session,
    run_vp_vp_trial,
    solve_window_single,
    synth_signature,
    verify_second_variation,
    wavelet_relative_phase,
)
from mirrorgame.experiments import WEIGHT_PRESETS, DyadConfig, analyze_trial


def _check(num: int, label: str, budget_s: float, body) -> None:
    start = time.perf_counter()
    try:
        body()
        elapsed = time.perf_counter() - start
        ok = elapsed < budget_s
        verdict = "PASS" if ok else "FAIL"
        print(f"[{verdict}] criterion {num}: {label} ({elapsed:.1f}s / budget {budget_s:.0f}s)",
              file=sys.__stdout__, flush=True)
        assert ok, f"criterion {num} exceeded runtime budget: {elapsed:.1f}s >= {budget_s}s"
    except Exception:
        elapsed = time.perf_counter() - start
        print(f"[FAIL] criterion {num}: {label} ({elapsed:.1f}s)", file=sys.__stdout__, flush=True)
        raise


def _hamiltonian(x, v, l1, l2, u, sigma, rv, p, w):
    acc = u - (p.alpha * v**2 + p.beta * x**2 - p.gamma) * v - p.omega**2 * x
    return (
        0.5 * w.theta_sigma * (v - sigma) ** 2
        + 0.5 * w.theta_v * (v - rv) ** 2
        + 0.5 * w.eta * u**2
        + l1 * v
        + l2 * acc
    )


def test_criterion_1_costate_correctness():
    def body():
        rng = np.random.default_rng(101)
        step = 1e-6
        for _ in range(100):
            p = HkbParams(*rng.uniform(0.5, 1.5, 4))
            th = rng.dirichlet([2.0, 2.0, 2.0])
            w = CouplingWeights(th[0], th[1], th[2], eta=10 ** rng.uniform(-4, 0))
            x, v, l1, l2, u, sigma, rv = rng.uniform(-1, 1, 7)
            d = costate_rhs(PlayerState(x, v), Costate(l1, l2), p, w, sigma, rv)
            fd1 = -(
                _hamiltonian(x + step, v, l1, l2, u, sigma, rv, p, w)
                - _hamiltonian(x - step, v, l1, l2, u, sigma, rv, p, w)
            ) / (2 * step)
            fd2 = -(
                _hamiltonian(x, v + step, l1, l2, u, sigma, rv, p, w)
                - _hamiltonian(x, v - step, l1, l2, u, sigma, rv, p, w)
            ) / (2 * step)
            assert abs(d.l1 - fd1) < 1e-6 * max(1.0, abs(fd1))
            assert abs(d.l2 - fd2) < 1e-6 * max(1.0, abs(fd2))

    _check(1, "costate dynamics match the Hamiltonian gradient", 1.0, body)


def test_criterion_2_linear_window_optimality():
    def body():
        rng = np.random.default_rng(102)
        for _ in range(20):
            th = rng.dirichlet([2.0, 2.0, 2.0])
            weights = CouplingWeights(th[0], th[1], th[2], eta=1e-4)
            amp, f, ph = rng.uniform(0.2, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0, 2 * np.pi)
            anchor = rng.uniform(-0.3, 0.3)
            prob = WindowProblem(
                t0=0.0,
                horizon=0.04,
                state=PlayerState(rng.uniform(-0.3, 0.3), rng.uniform(-1.0, 1.0)),
                params=LinearParams(a=rng.uniform(0.0, 2.0), b=rng.uniform(0.0, 2.0)),
                weights=weights,
                sigma=lambda ts, A=amp, F=f, P=ph: A * np.sin(2 * np.pi * F * np.asarray(ts) + P),
                partner=estimate_partner(anchor - 0.04 * rng.uniform(-2.0, 2.0), anchor, 0.04),
                n_sub=80,
            )
            sol = solve_window_single(prob)
            assert sol.converged
            perts = [rng.uniform(-0.5, 0.5, prob.n_sub + 1) for _ in range(200)]
            assert verify_second_variation(prob, sol, perts) >= -1e-9

    _check(2, "perturbed linear-window controls never beat the solution", 30.0, body)


def test_criterion_3_boundedness_all_presets():
    def body():
        for d in range(1, 9):
            cfg = default_config(
                seed=d, weights1=f"dyad{d}.vp1", weights2=f"dyad{d}.vp2", duration=60.0
            )
            rec = run_vp_vp_trial(cfg, 1, 1)
            assert rec.converged_fraction >= 0.99, f"dyad{d}: {rec.converged_fraction}"
            assert np.max(np.abs(rec.x1)) < 5.0 and np.max(np.abs(rec.x2)) < 5.0
            assert np.max(np.abs(rec.x1 - rec.x2)) < 5.0

    _check(3, "60 s trials under all 16 weight presets stay bounded", 300.0, body)


def test_criterion_4_velocity_pdfs_converge():
    def body():
        cfg = default_config(seed=2, weights1="dyad1.vp1", weights2="dyad1.vp2", duration=60.0)
        batch = run_dyad_batch(cfg)
        assert not batch.failures
        nu_dists, sig_dists = [], []
        for rec in batch.records:
            s1 = cfg.players[0].signatures[rec.h - 1]
            s2 = cfg.players[1].signatures[rec.k - 1]
            an = analyze_trial(rec, (s1, s2))
            nu_dists.append(an.emd_nu1_nu2)
            sig_dists.append(emd(kde_pdf(s1.v), kde_pdf(s2.v)))
            assert an.emd_sigma1_nu1 > 0.0 and an.emd_sigma2_nu2 > 0.0
        assert np.median(nu_dists) < np.median(sig_dists)

    _check(4, "played velocity PDFs end up closer than the signatures", 300.0, body)


def _slow_config(seed: int, preset: str, duration: float = 60.0) -> DyadConfig:
    players = []
    for i in range(2):
        sigs = tuple(
            synth_signature(
                seed=100 * seed + 10 * (i + 1) + j, band=(0.05, 0.25), amp_scale=1.0, n_components=4
            )
            for j in range(1, 4)
        )
        players.append(
            PlayerSetup(params=HkbParams(), weights=WEIGHT_PRESETS[preset], signatures=sigs)
        )
    return DyadConfig(players=tuple(players), duration=duration)


def test_criterion_5_position_weight_monotonicity():
    def body():
        results = {}
        for name, preset in (("hi", "dyad5.vp1"), ("lo", "dyad1.vp1")):
            rec = run_vp_vp_trial(_slow_config(5, preset), 1, 1)
            results[name] = rms_position_error(rec.x1, rec.x2, 1.0)
        assert results["hi"] < results["lo"], results

    _check(5, "dominant position weight tracks tighter than weak one", 120.0, body)


def test_criterion_6_no_leader_phase():
    def body():
        players = []
        for i in range(2):
            sigs = tuple(
                synth_signature(seed=900 + 10 * (i + 1) + j, band=(0.1, 0.8), amp_scale=1.0)
                for j in range(1, 4)
            )
            players.append(
                PlayerSetup(
                    params=HkbParams(), weights=WEIGHT_PRESETS["dyad4.vp1"], signatures=sigs
                )
            )
        cfg = DyadConfig(players=tuple(players), duration=60.0)
        rec = run_vp_vp_trial(cfg, 1, 2)
        ps = wavelet_relative_phase(rec.x1, rec.x2, fs=1.0 / cfg.period)
        pp = phase_pdf(ps)
        mean_dir = np.angle(np.trapezoid(pp.p * np.exp(1j * pp.z), pp.z))
        assert abs(mean_dir) < np.pi / 8, mean_dir

    _check(6, "symmetric dyad phase PDF centered near zero", 60.0, body)


def test_criterion_7_emd_metric_axioms():
    def body():
        rng = np.random.default_rng(107)
        z = np.linspace(-2.0, 2.0, 801)

        def rand_pdf():
            p = np.zeros_like(z)
            for _ in range(rng.integers(1, 4)):
                c, w = rng.uniform(-1.2, 1.2), rng.uniform(0.05, 0.5)
                p += rng.uniform(0.2, 1.0) * np.exp(-0.5 * ((z - c) / w) ** 2)
            return VelocityPDF(z=z, p=p / np.trapezoid(p, z))

        for _ in range(50):
            p1, p2, p3 = rand_pdf(), rand_pdf(), rand_pdf()
            assert emd(p1, p1) == 0.0
            assert emd(p1, p2) == emd(p2, p1)
            assert emd(p1, p3) <= emd(p1, p2) + emd(p2, p3) + 1e-10
            for val in (emd(p1, p2), emd(p2, p3), emd(p1, p3)):
                assert 0.0 <= val <= 1.0

    _check(7, "EMD satisfies the metric axioms on random PDFs", 5.0, body)


def test_criterion_8_wavelet_phase_ground_truth():
    def body():
        fs = 100.0
        t = np.arange(0.0, 60.0, 1.0 / fs)
        x1 = np.sin(2 * np.pi * 0.25 * t)
        x2 = np.sin(2 * np.pi * 0.25 * t - np.pi / 2)

        def mode(ps):
            pp = phase_pdf(ps)
            return pp.z[np.argmax(pp.p)]

        lagged = wavelet_relative_phase(x1, x2, fs)
        assert abs(mode(lagged) - np.pi / 2) < 0.1
        same = wavelet_relative_phase(x1, x1, fs)
        assert abs(mode(same)) < 0.05

    _check(8, "wavelet phase recovers known lags", 10.0, body)


def test_criterion_9_mds_exactness():
    def body():
        rng = np.random.default_rng(109)
        pts = rng.uniform(-1.0, 1.0, (10, 2))
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        coords = classical_mds(DistanceMatrix(d=d), dim=2)
        got = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
        assert np.max(np.abs(got - d)) < 1e-6

    _check(9, "planar distance matrices re-embed exactly", 1.0, body)


def test_criterion_10_real_time_feasibility():
    def body():
        sig = synth_signature(seed=7, band=(0.1, 0.8), amp_scale=1.0)
        cfg = SessionConfig(signature=sig, max_duration=60.0)
        t = np.arange(0.0, 60.01, 0.01)
        src = ScriptedSource(t=t, x=0.4 * np.sin(2 * np.pi * 0.3 * t))
        state, timings = run_scripted_session(cfg, src)
        timings = np.asarray(timings)
        assert timings.mean() < 0.04, f"mean tick {timings.mean():.4f}s"
        assert np.percentile(timings, 99) < 0.08, f"p99 {np.percentile(timings, 99):.4f}s"
        vp = np.asarray(state.vp_log)
        hp = np.asarray(state.hp_log)
        assert np.all(np.isfinite(vp))
        assert np.max(np.abs(vp)) < 5.0 and np.max(np.abs(vp - hp)) < 5.0

    _check(10, "live session meets the tick budget with bounded error", 120.0, body)
