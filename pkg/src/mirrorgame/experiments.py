"""Batch in-silico experiments between two virtual players.

A dyad configuration pairs two players (oscillator parameters, cost weights,
three signatures each); a trial runs the receding-horizon loop over the full
duration with the coupled window solver; a batch runs all nine signature
combinations.  Trial analysis mirrors the coordination-metrics stack, and the
file formats here are what the CLI reads and writes.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

from .control import CouplingWeights, WindowProblem, solve_window_coupled
from .errors import NonFiniteState, NonMonotonicTime, SchemaViolation, TooShort
from .metrics import PhasePDF, classical_mds, emd, emd_matrix, phase_pdf, rms_position_error, wavelet_relative_phase
from .oscillator import HkbParams, PlayerState
from .signature import Signature, VelocityPDF, kde_pdf, load_signature, signature_values, synth_signature, velocity_from_positions

#: Coupling-weight presets for the eight studied dyads, addressable as
#: ``dyad<n>.vp<i>``.  The effort weight is 1e-4 throughout.
WEIGHT_PRESETS: dict[str, CouplingWeights] = {
    "dyad1.vp1": CouplingWeights(0.10, 0.30, 0.60),
    "dyad1.vp2": CouplingWeights(0.10, 0.55, 0.35),
    "dyad2.vp1": CouplingWeights(0.10, 0.35, 0.55),
    "dyad2.vp2": CouplingWeights(0.12, 0.45, 0.43),
    "dyad3.vp1": CouplingWeights(0.15, 0.30, 0.55),
    "dyad3.vp2": CouplingWeights(0.10, 0.35, 0.55),
    "dyad4.vp1": CouplingWeights(0.31, 0.38, 0.31),
    "dyad4.vp2": CouplingWeights(0.31, 0.38, 0.31),
    "dyad5.vp1": CouplingWeights(0.72, 0.22, 0.06),
    "dyad5.vp2": CouplingWeights(0.72, 0.22, 0.06),
    "dyad6.vp1": CouplingWeights(0.10, 0.60, 0.30),
    "dyad6.vp2": CouplingWeights(0.10, 0.28, 0.62),
    "dyad7.vp1": CouplingWeights(0.10, 0.30, 0.60),
    "dyad7.vp2": CouplingWeights(0.10, 0.35, 0.55),
    "dyad8.vp1": CouplingWeights(0.10, 0.28, 0.62),
    "dyad8.vp2": CouplingWeights(0.10, 0.30, 0.60),
}

#: Order in which the nine signature combinations of a dyad batch are run.
TRIAL_ORDER: tuple[tuple[int, int], ...] = (
    (1, 1), (1, 2), (1, 3),
    (2, 1), (2, 2), (2, 3),
    (3, 1), (3, 2), (3, 3),
)


@dataclass(frozen=True)
class PlayerSetup:
    """One virtual player: dynamics, cost weights and its three signatures."""

    params: HkbParams
    weights: CouplingWeights
    signatures: tuple[Signature, Signature, Signature]
    initial: PlayerState = PlayerState(0.0, 0.0)

    def __post_init__(self) -> None:
        if len(self.signatures) != 3:
            raise ValueError("each player needs exactly three signatures")


@dataclass(frozen=True)
class DyadConfig:
    """Full configuration of one simulated dyad."""

    players: tuple[PlayerSetup, PlayerSetup]
    period: float = 0.016
    duration: float = 60.0
    admissible_range: float = 1.0
    seed: int = 0
    n_sub: int = 10
    snapshot: dict | None = None

    def __post_init__(self) -> None:
        if len(self.players) != 2:
            raise ValueError("a dyad has exactly two players")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.duration < self.period:
            raise ValueError("duration must cover at least one window")
        if self.admissible_range <= 0:
            raise ValueError("admissible_range must be positive")


@dataclass
class TrialRecord:
    """Positions and controls of one trial, sampled at the window boundaries."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    h: int
    k: int
    converged_fraction: float
    config: dict

    def __post_init__(self) -> None:
        arrays = [np.asarray(a, dtype=float) for a in (self.t, self.x1, self.x2, self.u1, self.u2)]
        self.t, self.x1, self.x2, self.u1, self.u2 = arrays
        n = self.t.size
        if any(a.size != n for a in arrays[1:]):
            raise ValueError("trial series must have equal lengths")
        if not 0.0 <= self.converged_fraction <= 1.0:
            raise ValueError("converged_fraction must lie in [0, 1]")


@dataclass
class TrialAnalysis:
    """Coordination metrics of one trial."""

    e_p: float
    emd_sigma1_nu1: float
    emd_sigma2_nu2: float | None
    emd_nu1_nu2: float
    phase_pdf: PhasePDF
    mds: np.ndarray
    mds_labels: list[str]
    phase_emd_vs_ref: float | None = None


@dataclass
class DyadBatch:
    """Results of the nine-combination batch; failures keep the batch going."""

    records: list[TrialRecord] = field(default_factory=list)
    failures: list[tuple[int, int, str]] = field(default_factory=list)


#: Per-player synthesis styles for :func:`default_config`: the two players get
#: clearly distinct velocity distributions (slow/large vs fast/small motion).
_SYNTH_STYLES = (
    {"band": (0.1, 0.8), "amp_scale": 1.4, "n_components": 5},
    {"band": (0.4, 1.5), "amp_scale": 0.7, "n_components": 8},
)


def default_config(
    seed: int = 0,
    weights1: str | CouplingWeights = "dyad1.vp1",
    weights2: str | CouplingWeights = "dyad1.vp2",
    period: float = 0.016,
    duration: float = 60.0,
    n_sub: int = 10,
) -> DyadConfig:
    """Convenience dyad with seeded synthetic signatures for the two players."""
    if isinstance(weights1, str):
        weights1 = WEIGHT_PRESETS[weights1]
    if isinstance(weights2, str):
        weights2 = WEIGHT_PRESETS[weights2]
    players = []
    for i, w in enumerate((weights1, weights2)):
        sigs = tuple(
            synth_signature(seed=100 * seed + 10 * (i + 1) + j, label=f"p{i + 1}s{j + 1}", **_SYNTH_STYLES[i])
            for j in range(1, 4)
        )
        players.append(PlayerSetup(params=HkbParams(), weights=w, signatures=sigs))
    return DyadConfig(players=(players[0], players[1]), period=period, duration=duration, seed=seed, n_sub=n_sub)


def run_vp_vp_trial(cfg: DyadConfig, h: int, k: int) -> TrialRecord:
    """Run one receding-horizon trial with signatures ``h`` and ``k``.

    Each window is solved as the coupled boundary value problem, warm-started
    from the previous window; the entire window's control is applied before
    re-solving from the terminal state.  Deterministic for identical inputs.
    """
    if h not in (1, 2, 3) or k not in (1, 2, 3):
        raise ValueError("signature indices must be 1, 2 or 3")
    p1, p2 = cfg.players
    sig1 = partial(signature_values, p1.signatures[h - 1])
    sig2 = partial(signature_values, p2.signatures[k - 1])
    n_windows = int(round(cfg.duration / cfg.period))
    t = np.arange(n_windows + 1) * cfg.period

    x1 = np.empty(n_windows + 1)
    x2 = np.empty(n_windows + 1)
    u1 = np.empty(n_windows + 1)
    u2 = np.empty(n_windows + 1)
    state1, state2 = p1.initial, p2.initial
    warm: np.ndarray | None = None
    converged = 0
    sol1 = sol2 = None
    for j in range(n_windows):
        prob1 = WindowProblem(
            t0=t[j], horizon=cfg.period, state=state1, params=p1.params,
            weights=p1.weights, sigma=sig1, n_sub=cfg.n_sub,
        )
        prob2 = WindowProblem(
            t0=t[j], horizon=cfg.period, state=state2, params=p2.params,
            weights=p2.weights, sigma=sig2, n_sub=cfg.n_sub,
        )
        try:
            sol1, sol2 = solve_window_coupled(prob1, prob2, warm_start=warm)
        except NonFiniteState as exc:
            err = NonFiniteState(f"window {j}: {exc}")
            err.window = j
            raise err from exc
        x1[j], x2[j] = state1.x, state2.x
        u1[j], u2[j] = sol1.controls[0], sol2.controls[0]
        state1 = PlayerState(x=sol1.states[-1, 0], v=sol1.states[-1, 1])
        state2 = PlayerState(x=sol2.states[-1, 0], v=sol2.states[-1, 1])
        if sol1.converged:
            converged += 1
            warm = np.concatenate([sol1.lambda0, sol2.lambda0])
        else:
            warm = None
    x1[-1], x2[-1] = state1.x, state2.x
    u1[-1], u2[-1] = sol1.controls[-1], sol2.controls[-1]
    return TrialRecord(
        t=t, x1=x1, x2=x2, u1=u1, u2=u2, h=h, k=k,
        converged_fraction=converged / n_windows,
        config=cfg.snapshot if cfg.snapshot is not None else config_to_dict(cfg),
    )


def _run_combo(args: tuple[DyadConfig, int, int]) -> TrialRecord:
    cfg, h, k = args
    return run_vp_vp_trial(cfg, h, k)


def run_dyad_batch(cfg: DyadConfig, workers: int = 1) -> DyadBatch:
    """Run all nine signature combinations, independently and in order.

    Trials are independent jobs; with ``workers > 1`` they run in a process
    pool.  Results are assembled in the canonical combination order either
    way, so the output does not depend on scheduling.
    """
    if cfg.snapshot is None:
        # one shared snapshot dict for all nine records instead of nine copies
        cfg = replace(cfg, snapshot=config_to_dict(cfg))
    batch = DyadBatch()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_combo, [(cfg, h, k) for h, k in TRIAL_ORDER]))
        batch.records = results
        return batch
    for h, k in TRIAL_ORDER:
        try:
            batch.records.append(run_vp_vp_trial(cfg, h, k))
        except Exception as exc:  # collect, keep going
            batch.failures.append((h, k, str(exc)))
    return batch


def analyze_trial(
    rec: TrialRecord,
    sigs: tuple[Signature, Signature | None],
    phase_ref: PhasePDF | None = None,
) -> TrialAnalysis:
    """Compute the coordination metrics of one trial.

    Velocities are recovered from the recorded positions, their PDFs compared
    by EMD against each other and against the signatures actually fed to the
    players, the relative phase extracted below the 1 Hz cutoff, and the PDFs
    embedded in the plane via MDS of their EMD matrix.
    """
    if rec.t.size < 3:
        raise TooShort("trial too short to analyze")
    fs = 1.0 / float(rec.t[1] - rec.t[0])
    sig1, sig2 = sigs
    nu1 = velocity_from_positions(rec.t, rec.x1, fs)
    nu2 = velocity_from_positions(rec.t, rec.x2, fs)
    pdf_nu1 = kde_pdf(nu1.v)
    pdf_nu2 = kde_pdf(nu2.v)
    pdf_sig1 = kde_pdf(sig1.v)
    pdfs: list[VelocityPDF] = [pdf_sig1]
    labels = ["sigma1"]
    pdf_sig2 = None
    if sig2 is not None:
        pdf_sig2 = kde_pdf(sig2.v)
        pdfs.append(pdf_sig2)
        labels.append("sigma2")
    pdfs += [pdf_nu1, pdf_nu2]
    labels += ["nu1", "nu2"]

    length = float(rec.config.get("L", 1.0)) if rec.config else 1.0
    e_p = rms_position_error(rec.x1, rec.x2, length)
    ps = wavelet_relative_phase(rec.x1, rec.x2, fs)
    ppdf = phase_pdf(ps)
    coords = classical_mds(emd_matrix(pdfs), dim=2)
    phase_vs_ref = None
    if phase_ref is not None:
        phase_vs_ref = emd(VelocityPDF(z=ppdf.z, p=ppdf.p), VelocityPDF(z=phase_ref.z, p=phase_ref.p))
    return TrialAnalysis(
        e_p=e_p,
        emd_sigma1_nu1=emd(pdf_sig1, pdf_nu1),
        emd_sigma2_nu2=emd(pdf_sig2, pdf_nu2) if pdf_sig2 is not None else None,
        emd_nu1_nu2=emd(pdf_nu1, pdf_nu2),
        phase_pdf=ppdf,
        mds=coords,
        mds_labels=labels,
        phase_emd_vs_ref=phase_vs_ref,
    )


# --- file formats -------------------------------------------------------------
#
# TrialRecord: CSV ``t,x1,x2,u1,u2`` plus a sidecar JSON (same stem, ``.json``)
# holding the signature indices, convergence stats and the config snapshot.
# TrialAnalysis and DyadConfig travel as JSON.  Floats are written with repr
# (JSON does the same), so an export/import round trip is bit-identical.


def _sidecar_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def save_trial(rec: TrialRecord, csv_path: str | Path) -> None:
    """Write a trial as CSV plus its JSON sidecar."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,x1,x2,u1,u2\n")
        for row in zip(rec.t, rec.x1, rec.x2, rec.u1, rec.u2):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    sidecar = {
        "h": rec.h,
        "k": rec.k,
        "converged_fraction": rec.converged_fraction,
        "config": rec.config,
    }
    with open(_sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_trial(csv_path: str | Path) -> TrialRecord:
    """Read a trial CSV and its sidecar back into a :class:`TrialRecord`."""
    csv_path = Path(csv_path)
    with open(csv_path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,x1,x2,u1,u2":
            raise SchemaViolation(f"{csv_path}: bad header {header!r}", path="header")
        cols: list[list[float]] = [[], [], [], [], []]
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise SchemaViolation(f"{csv_path}: row {i + 2} has {len(parts)} fields", path=f"row[{i}]")
            for c, p in zip(cols, parts):
                c.append(float(p))
    sidecar_path = _sidecar_path(csv_path)
    if not sidecar_path.exists():
        raise SchemaViolation(f"missing sidecar {sidecar_path}", path="sidecar")
    with open(sidecar_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    known = {"h", "k", "converged_fraction", "config"}
    for key in ("h", "k", "converged_fraction", "config"):
        if key not in sidecar:
            raise SchemaViolation(f"missing required field: {key}", path=key)
    for key in sidecar:
        if key not in known:
            warnings.warn(f"{sidecar_path}: ignoring unknown field {key!r}")
    return TrialRecord(
        t=np.asarray(cols[0]),
        x1=np.asarray(cols[1]),
        x2=np.asarray(cols[2]),
        u1=np.asarray(cols[3]),
        u2=np.asarray(cols[4]),
        h=int(sidecar["h"]),
        k=int(sidecar["k"]),
        converged_fraction=float(sidecar["converged_fraction"]),
        config=sidecar["config"],
    )


def analysis_to_dict(an: TrialAnalysis) -> dict:
    return {
        "e_p": an.e_p,
        "emd_sigma1_nu1": an.emd_sigma1_nu1,
        "emd_sigma2_nu2": an.emd_sigma2_nu2,
        "emd_nu1_nu2": an.emd_nu1_nu2,
        "phase_pdf": {"grid": an.phase_pdf.z.tolist(), "density": an.phase_pdf.p.tolist()},
        "mds": an.mds.tolist(),
        "mds_labels": list(an.mds_labels),
        "phase_emd_vs_ref": an.phase_emd_vs_ref,
    }


def analysis_from_dict(d: dict) -> TrialAnalysis:
    required = ["e_p", "emd_sigma1_nu1", "emd_sigma2_nu2", "emd_nu1_nu2", "phase_pdf", "mds"]
    for key in required:
        if key not in d:
            raise SchemaViolation(f"missing required field: {key}", path=key)
    known = set(required) | {"mds_labels", "phase_emd_vs_ref"}
    for key in d:
        if key not in known:
            warnings.warn(f"ignoring unknown analysis field {key!r}")
    pp = d["phase_pdf"]
    for key in ("grid", "density"):
        if key not in pp:
            raise SchemaViolation(f"missing required field: phase_pdf.{key}", path=f"phase_pdf.{key}")
    mds = np.asarray(d["mds"], dtype=float)
    return TrialAnalysis(
        e_p=float(d["e_p"]),
        emd_sigma1_nu1=float(d["emd_sigma1_nu1"]),
        emd_sigma2_nu2=None if d["emd_sigma2_nu2"] is None else float(d["emd_sigma2_nu2"]),
        emd_nu1_nu2=float(d["emd_nu1_nu2"]),
        phase_pdf=PhasePDF(z=np.asarray(pp["grid"]), p=np.asarray(pp["density"])),
        mds=mds,
        mds_labels=list(d.get("mds_labels", [])),
        phase_emd_vs_ref=None if d.get("phase_emd_vs_ref") is None else float(d["phase_emd_vs_ref"]),
    )


def save_analysis(an: TrialAnalysis, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(analysis_to_dict(an), fh, indent=2)
        fh.write("\n")


def load_analysis(path: str | Path) -> TrialAnalysis:
    with open(path, encoding="utf-8") as fh:
        return analysis_from_dict(json.load(fh))


# --- config files -------------------------------------------------------------


def _signature_from_spec(spec: dict, path: str, base_dir: Path) -> Signature:
    if not isinstance(spec, dict):
        raise SchemaViolation(f"{path} must be an object", path=path)
    if "synth" in spec:
        params = dict(spec["synth"])
        if "seed" not in params:
            raise SchemaViolation(f"missing required field: {path}.synth.seed", path=f"{path}.synth.seed")
        known = {"seed", "duration", "rate", "n_components", "band", "amp_scale", "label"}
        for key in params:
            if key not in known:
                warnings.warn(f"ignoring unknown field {path}.synth.{key}")
        kwargs = {k: params[k] for k in known if k in params}
        if "band" in kwargs:
            kwargs["band"] = tuple(kwargs["band"])
        return synth_signature(**kwargs)
    if "csv" in spec:
        return load_signature(base_dir / spec["csv"])
    if "t" in spec and "v" in spec:
        try:
            return Signature(t=np.asarray(spec["t"], dtype=float), v=np.asarray(spec["v"], dtype=float), label=spec.get("label", ""))
        except (ValueError, NonMonotonicTime) as exc:
            raise SchemaViolation(f"{path}: {exc}", path=path) from exc
    raise SchemaViolation(f"{path} needs one of: synth, csv, or inline t/v", path=path)


def _weights_from_spec(spec, path: str) -> CouplingWeights:
    if isinstance(spec, str):
        if spec not in WEIGHT_PRESETS:
            raise SchemaViolation(f"unknown weight preset {spec!r} at {path}", path=path)
        return WEIGHT_PRESETS[spec]
    if isinstance(spec, dict):
        for key in ("theta_p", "theta_sigma", "theta_v"):
            if key not in spec:
                raise SchemaViolation(f"missing required field: {path}.{key}", path=f"{path}.{key}")
        try:
            return CouplingWeights(
                theta_p=float(spec["theta_p"]),
                theta_sigma=float(spec["theta_sigma"]),
                theta_v=float(spec["theta_v"]),
                eta=float(spec.get("eta", 1e-4)),
            )
        except ValueError as exc:
            raise SchemaViolation(f"{path}: {exc}", path=path) from exc
    raise SchemaViolation(f"{path} must be a preset name or an object", path=path)


def parse_config(d: dict, base_dir: str | Path = ".") -> DyadConfig:
    """Build a :class:`DyadConfig` from its JSON dict form.

    Unknown fields are ignored with a warning; missing required fields raise
    :class:`SchemaViolation` naming the field path.
    """
    base_dir = Path(base_dir)
    if "players" not in d:
        raise SchemaViolation("missing required field: players", path="players")
    players_spec = d["players"]
    if not isinstance(players_spec, list) or len(players_spec) != 2:
        raise SchemaViolation("players must be a list of exactly two entries", path="players")
    known_top = {"players", "T", "duration", "L", "seed", "n_sub"}
    for key in d:
        if key not in known_top:
            warnings.warn(f"ignoring unknown config field {key!r}")
    players = []
    for i, pd in enumerate(players_spec):
        ppath = f"players[{i}]"
        if not isinstance(pd, dict):
            raise SchemaViolation(f"{ppath} must be an object", path=ppath)
        known = {"hkb", "weights", "signatures", "x0", "v0"}
        for key in pd:
            if key not in known:
                warnings.warn(f"ignoring unknown field {ppath}.{key}")
        if "weights" not in pd:
            raise SchemaViolation(f"missing required field: {ppath}.weights", path=f"{ppath}.weights")
        if "signatures" not in pd:
            raise SchemaViolation(f"missing required field: {ppath}.signatures", path=f"{ppath}.signatures")
        sigs_spec = pd["signatures"]
        if not isinstance(sigs_spec, list) or len(sigs_spec) != 3:
            raise SchemaViolation(f"{ppath}.signatures must list exactly three entries", path=f"{ppath}.signatures")
        hkb_spec = pd.get("hkb", {})
        try:
            params = HkbParams(
                alpha=float(hkb_spec.get("alpha", 1.0)),
                beta=float(hkb_spec.get("beta", 1.0)),
                gamma=float(hkb_spec.get("gamma", 1.0)),
                omega=float(hkb_spec.get("omega", 1.0)),
            )
        except ValueError as exc:
            raise SchemaViolation(f"{ppath}.hkb: {exc}", path=f"{ppath}.hkb") from exc
        sigs = tuple(
            _signature_from_spec(s, f"{ppath}.signatures[{j}]", base_dir) for j, s in enumerate(sigs_spec)
        )
        players.append(
            PlayerSetup(
                params=params,
                weights=_weights_from_spec(pd["weights"], f"{ppath}.weights"),
                signatures=sigs,
                initial=PlayerState(x=float(pd.get("x0", 0.0)), v=float(pd.get("v0", 0.0))),
            )
        )
    return DyadConfig(
        players=(players[0], players[1]),
        period=float(d.get("T", 0.016)),
        duration=float(d.get("duration", 60.0)),
        admissible_range=float(d.get("L", 1.0)),
        seed=int(d.get("seed", 0)),
        n_sub=int(d.get("n_sub", 10)),
        snapshot=d,
    )


def load_config(path: str | Path) -> DyadConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path}: invalid JSON: {exc}", path="") from exc
    return parse_config(d, base_dir=path.parent)


def config_to_dict(cfg: DyadConfig) -> dict:
    """Serialize a config; signatures are inlined as t/v arrays."""
    if cfg.snapshot is not None:
        return cfg.snapshot
    players = []
    for p in cfg.players:
        players.append(
            {
                "hkb": {
                    "alpha": p.params.alpha,
                    "beta": p.params.beta,
                    "gamma": p.params.gamma,
                    "omega": p.params.omega,
                },
                "weights": {
                    "theta_p": p.weights.theta_p,
                    "theta_sigma": p.weights.theta_sigma,
                    "theta_v": p.weights.theta_v,
                    "eta": p.weights.eta,
                },
                "signatures": [
                    {"t": s.t.tolist(), "v": s.v.tolist(), "label": s.label} for s in p.signatures
                ],
                "x0": p.initial.x,
                "v0": p.initial.v,
            }
        )
    return {
        "players": players,
        "T": cfg.period,
        "duration": cfg.duration,
        "L": cfg.admissible_range,
        "seed": cfg.seed,
        "n_sub": cfg.n_sub,
    }


def save_config(cfg: DyadConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")
