"""Command-line interface.

Subcommands: ``sign`` (synthesize or convert signatures), ``simulate`` (run
trials or a dyad batch from a config file), ``analyze`` (metrics from trial
files), ``mds`` (embed a distance matrix), ``serve`` (start the live server).

Exit codes: 0 success, 2 schema error, 3 solver failure above threshold.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, metrics, signature
from .errors import MirrorGameError, SchemaViolation

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_SOLVER = 3


def _cmd_sign(args: argparse.Namespace) -> int:
    if args.mode == "synth":
        sig = signature.synth_signature(
            seed=args.seed,
            duration=args.duration,
            rate=args.rate,
            n_components=args.components,
            band=(args.band[0], args.band[1]),
            amp_scale=args.amp,
            label=args.label,
        )
    else:
        t, x = signature.load_positions(args.positions)
        sig = signature.velocity_from_positions(t, x, args.rate)
    signature.save_signature(sig, args.output)
    print(f"wrote {len(sig.t)} samples to {args.output}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = experiments.load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures: list[tuple[int, int, str]] = []
    records: list[experiments.TrialRecord] = []
    if args.trial is not None:
        h, k = args.trial
        records.append(experiments.run_vp_vp_trial(cfg, h, k))
    else:
        batch = experiments.run_dyad_batch(cfg, workers=args.workers)
        records = batch.records
        failures = batch.failures
    for rec in records:
        path = out / f"trial_h{rec.h}k{rec.k}.csv"
        experiments.save_trial(rec, path)
        print(f"trial ({rec.h},{rec.k}): converged {rec.converged_fraction:.3f} -> {path}")
    for h, k, msg in failures:
        print(f"trial ({h},{k}) FAILED: {msg}", file=sys.stderr)
    below = [r for r in records if r.converged_fraction < args.threshold]
    if failures or below:
        print(
            f"solver failure above threshold: {len(failures)} failed, "
            f"{len(below)} below converged fraction {args.threshold}",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    return EXIT_OK


def _signatures_for_trial(rec: experiments.TrialRecord):
    cfg = experiments.parse_config(rec.config)
    return (
        cfg.players[0].signatures[rec.h - 1],
        cfg.players[1].signatures[rec.k - 1],
    )


def _cmd_analyze(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    e_ps, nu_emds = [], []
    for trial_path in args.trials:
        rec = experiments.load_trial(trial_path)
        an = experiments.analyze_trial(rec, _signatures_for_trial(rec))
        dest = out / (Path(trial_path).stem + "_analysis.json")
        experiments.save_analysis(an, dest)
        e_ps.append(an.e_p)
        nu_emds.append(an.emd_nu1_nu2)
        print(f"{trial_path}: e_p={an.e_p:.4f} emd_nu1_nu2={an.emd_nu1_nu2:.4f} -> {dest}")
    if len(args.trials) > 1:
        summary = {
            "e_p": metrics.summary_stats(e_ps).__dict__,
            "emd_nu1_nu2": metrics.summary_stats(nu_emds).__dict__,
        }
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        print(f"summary over {len(args.trials)} trials -> {out / 'summary.json'}")
    return EXIT_OK


def _cmd_mds(args: argparse.Namespace) -> int:
    raw = np.loadtxt(args.matrix, delimiter=",")
    try:
        dm = metrics.DistanceMatrix(d=raw)
    except ValueError as exc:
        raise SchemaViolation(f"{args.matrix}: {exc}", path="matrix") from exc
    coords = metrics.classical_mds(dm, dim=args.dim)
    np.savetxt(args.out, coords, delimiter=",")
    print(f"embedded {dm.n} points in {args.dim}-D -> {args.out}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app, session_presets

    if args.signature is not None:
        sig = signature.load_signature(args.signature)
    else:
        sig = signature.synth_signature(seed=args.seed, label="vp")
    presets = session_presets(sig, period=args.period, max_duration=args.duration)
    app = create_app(presets=presets, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirrorgame", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sign = sub.add_parser("sign", help="synthesize or convert signatures")
    sign_sub = p_sign.add_subparsers(dest="mode", required=True)
    p_synth = sign_sub.add_parser("synth", help="synthesize a signature")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--duration", type=float, default=60.0)
    p_synth.add_argument("--rate", type=float, default=100.0)
    p_synth.add_argument("--components", type=int, default=6)
    p_synth.add_argument("--band", type=float, nargs=2, default=[0.1, 1.5], metavar=("F_LO", "F_HI"))
    p_synth.add_argument("--amp", type=float, default=1.0)
    p_synth.add_argument("--label", default="")
    p_synth.add_argument("-o", "--output", required=True)
    p_convert = sign_sub.add_parser("convert", help="derive a signature from positions")
    p_convert.add_argument("positions", help="t,x CSV recording")
    p_convert.add_argument("--rate", type=float, default=100.0)
    p_convert.add_argument("-o", "--output", required=True)

    p_sim = sub.add_parser("simulate", help="run a trial or the 9-combination batch")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--trial", type=int, nargs=2, metavar=("H", "K"), default=None)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--threshold", type=float, default=0.99)

    p_an = sub.add_parser("analyze", help="compute metrics from trial files")
    p_an.add_argument("trials", nargs="+")
    p_an.add_argument("--out", required=True)

    p_mds = sub.add_parser("mds", help="embed a distance matrix")
    p_mds.add_argument("--matrix", required=True, help="square CSV matrix")
    p_mds.add_argument("--out", required=True)
    p_mds.add_argument("--dim", type=int, default=2)

    p_serve = sub.add_parser("serve", help="start the live-play websocket server")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--signature", default=None, help="t,v CSV for the virtual player")
    p_serve.add_argument("--seed", type=int, default=7, help="synth seed when no signature file")
    p_serve.add_argument("--period", type=float, default=0.04)
    p_serve.add_argument("--duration", type=float, default=60.0)
    p_serve.add_argument("--frontend", default=None, help="directory of built UI files to serve")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "sign": _cmd_sign,
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "mds": _cmd_mds,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except SchemaViolation as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except MirrorGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
