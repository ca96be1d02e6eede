"""Command-line front end.

Subcommands: theory (response curves and excitation-time summary),
simulate (shot-log generation), analyze (post-selection pipeline on a
log), nullcheck (systematics datasets plus the 2-sigma gate), sweep
(duration x depth tables). All outputs are CSV or a deterministic
zip-of-npy shot log; every file carries the schema version, the config
hash and the active compute backend, and repeated runs are
byte-identical for a fixed (config, seed, package version).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import zipfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    accumulate,
    integral_with_error,
    integration_window,
    ratio_estimate,
)
from .backend import backend_name
from .errors import AnalysisError, ConfigError, ConvergenceError, NegdelayError
from .excitation import excited_population, mean_excitation_time, spectral_report
from .medium import conversion_factor
from .montecarlo import (
    MODES,
    calibrate_detection,
    derive_shapes,
    fine_signal,
    run_campaign,
)
from .config import SCHEMA_VERSION, RunConfig, default_config, load_config
from .oracle import weak_excitation_trace

__all__ = ["main"]

_LOG_ARRAYS = ("traces", "clicked")
_TRUTH_ARRAYS = ("n_transmitted", "n_scattered", "background_clicked")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, run: RunConfig, seed, columns, rows) -> None:
    lines = [
        f"# negdelay schema={SCHEMA_VERSION} version={__version__}",
        f"# config_hash={run.config_hash} backend={backend_name()}"
        + (f" seed={seed}" if seed is not None else ""),
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_log(path: Path, run: RunConfig, seed, mode, arrays: dict) -> None:
    """Shot log: a zip of .npy members with zeroed timestamps, so the
    same data always produces the same bytes."""
    meta = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "config_hash": run.config_hash,
        "backend": backend_name(),
        "seed": seed,
        "mode": mode,
        "n_cycles": int(arrays["traces"].shape[0]),
    }
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.save(buf, arr)
            zf.writestr(
                zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)),
                buf.getvalue(),
            )
        zf.writestr(
            zipfile.ZipInfo("meta.json", date_time=(1980, 1, 1, 0, 0, 0)),
            json.dumps(meta, sort_keys=True, indent=1),
        )


def _read_log(path: Path, run: RunConfig) -> tuple[dict, dict]:
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json"))
            arrays = {
                name: np.load(io.BytesIO(zf.read(f"{name}.npy")))
                for name in _LOG_ARRAYS
            }
    except (OSError, KeyError, zipfile.BadZipFile) as exc:
        raise ConfigError(f"cannot read shot log {path}: {exc}") from None
    if meta.get("schema") != SCHEMA_VERSION:
        raise ConfigError(
            f"shot log schema {meta.get('schema')} does not match "
            f"this package's schema {SCHEMA_VERSION}"
        )
    if meta.get("config_hash") != run.config_hash:
        raise ConfigError(
            "shot log was produced with config hash "
            f"{meta.get('config_hash')}, current config is {run.config_hash}"
        )
    return meta, arrays


class _LogCycles:
    """Adapts stacked log arrays to the accumulate() cycle protocol."""

    def __init__(self, traces, clicked):
        self._traces = traces
        self._clicked = clicked

    def __iter__(self):
        for i in range(self._traces.shape[0]):
            yield _LogCycle(self._traces[i], self._clicked[i])


class _LogCycle:
    def __init__(self, traces, clicked):
        self.traces = traces
        self.clicked = clicked


def _theory_traces(run: RunConfig):
    sig = fine_signal(run.medium, run.pulse)
    conv = conversion_factor(run.medium)
    weak = weak_excitation_trace(
        sig, run.medium, n_atoms=run.n_atoms, snap_every=run.checkpoint_interval
    )
    phi0 = conv * excited_population(sig, run.medium).values
    phi_t = conv * weak.weak
    return sig, weak, phi0, phi_t


def _cmd_theory(run: RunConfig, out: Path, args) -> int:
    sig, weak, phi0, phi_t = _theory_traces(run)
    t0 = sig.axis() * 1e9
    _write_csv(
        out / "phi0_theory.csv",
        run,
        None,
        ("t_ns", "phi_urad"),
        zip(t0, phi0 * 1e6),
    )
    _write_csv(
        out / "phiT_theory.csv",
        run,
        None,
        ("t_ns", "phi_urad"),
        zip(weak.axis() * 1e9, phi_t * 1e6),
    )
    rep = spectral_report(sig, run.medium)
    tau0 = mean_excitation_time(sig, run.medium)
    tau_t_oracle = weak.tau_transmitted()
    rows = [
        (
            rep.tau_0 * 1e9,
            rep.tau_T * 1e9,
            _fmt(rep.ratio) if rep.tau_0 != 0.0 else "NA",
            "spectral",
        ),
        (
            tau0 * 1e9,
            tau_t_oracle * 1e9,
            _fmt(tau_t_oracle / tau0) if tau0 != 0.0 else "NA",
            "oracle",
        ),
    ]
    _write_csv(
        out / "summary.csv",
        run,
        None,
        ("tau0_ns", "tauT_ns", "ratio", "method"),
        rows,
    )
    return 0


def _cmd_simulate(run: RunConfig, out: Path, args) -> int:
    seed = run.seed if args.seed is None else args.seed
    shapes = derive_shapes(
        run.medium,
        run.pulse,
        run.shot,
        n_atoms=run.n_atoms,
        snap_every=run.checkpoint_interval,
    )
    cal = calibrate_detection(
        shapes.tbar,
        run.shot.mean_photons,
        run.shot.target_click_prob,
        run.shot.background_click_fraction,
    )
    cycles = list(
        run_campaign(
            seed,
            run.n_cycles,
            shapes,
            run.shot,
            cal,
            jobs=args.jobs,
            truth=args.truth,
        )
    )
    if not cycles:
        raise ConfigError("campaign.n_cycles is 0: nothing to simulate")
    arrays = {
        "traces": np.stack([c.traces for c in cycles]),
        "clicked": np.stack([c.clicked for c in cycles]),
    }
    if args.truth:
        arrays["n_transmitted"] = np.stack([c.n_transmitted for c in cycles])
        arrays["n_scattered"] = np.stack([c.n_scattered for c in cycles])
        arrays["background_clicked"] = np.stack(
            [c.background_clicked for c in cycles]
        )
    _write_log(out / "shots.npz", run, seed, "normal", arrays)
    return 0


def _analyze_cycles(run: RunConfig, cycles, out: Path, seed, gate: bool) -> int:
    shapes = derive_shapes(
        run.medium,
        run.pulse,
        run.shot,
        n_atoms=run.n_atoms,
        snap_every=run.checkpoint_interval,
    )
    result = accumulate(cycles)
    window = integration_window(shapes.phi_T1, run.window_fraction)
    integral = integral_with_error(
        result.phi_T, result.cov, window, run.shot.dt
    )
    ratio, sigma = ratio_estimate(integral, shapes.phi_01, run.shot.dt)
    centers = run.shot.sample_times() * 1e9
    _write_csv(
        out / "phiT_measured.csv",
        run,
        seed,
        ("t_ns", "phi_urad", "sigma_urad"),
        zip(centers, result.phi_T * 1e6, np.sqrt(np.diag(result.cov)) * 1e6),
    )
    columns = [
        "ratio",
        "sigma",
        "window_lo_ns",
        "window_hi_ns",
        "n_click",
        "n_noclick",
    ]
    row = [
        ratio,
        sigma,
        centers[window[0]],
        centers[window[1]],
        result.n_click,
        result.n_noclick,
    ]
    if gate:
        columns.append("pass")
        row.append(abs(ratio) < 2.0 * sigma)
    _write_csv(out / "ratio.csv", run, seed, columns, [row])
    return 0


def _cmd_analyze(run: RunConfig, out: Path, args) -> int:
    meta, arrays = _read_log(Path(args.log), run)
    return _analyze_cycles(
        run,
        _LogCycles(arrays["traces"], arrays["clicked"]),
        out,
        meta.get("seed"),
        gate=False,
    )


def _cmd_nullcheck(run: RunConfig, out: Path, args) -> int:
    seed = run.seed if args.seed is None else args.seed
    shapes = derive_shapes(
        run.medium,
        run.pulse,
        run.shot,
        n_atoms=run.n_atoms,
        snap_every=run.checkpoint_interval,
    )
    cal = calibrate_detection(
        shapes.tbar,
        run.shot.mean_photons,
        run.shot.target_click_prob,
        run.shot.background_click_fraction,
    )
    cycles = run_campaign(
        seed,
        run.n_cycles,
        shapes,
        run.shot,
        cal,
        mode=args.kind,
        jobs=args.jobs,
    )
    return _analyze_cycles(run, cycles, out, seed, gate=True)


def _cmd_sweep(run: RunConfig, out: Path, args) -> int:
    rows = []
    for sigma_ns in run.sweep_sigmas:
        for od in run.sweep_ods:
            medium = replace(run.medium, od=od)
            pulse = replace(run.pulse, sigma_rms=sigma_ns * 1e-9)
            sig = fine_signal(medium, pulse)
            rep = spectral_report(sig, medium)
            weak = weak_excitation_trace(
                sig,
                medium,
                n_atoms=run.n_atoms,
                snap_every=run.checkpoint_interval,
            )
            tau_t_oracle = weak.tau_transmitted()
            rows.append(
                (
                    sigma_ns,
                    od,
                    weak.transmission,
                    rep.tau_0 * 1e9,
                    rep.tau_T * 1e9,
                    tau_t_oracle * 1e9,
                    rep.ratio,
                    tau_t_oracle / rep.tau_0,
                )
            )
    _write_csv(
        out / "sweep.csv",
        run,
        None,
        (
            "sigma_rms_ns",
            "od",
            "tbar",
            "tau0_ns",
            "tauT_spectral_ns",
            "tauT_oracle_ns",
            "ratio_spectral",
            "ratio_oracle",
        ),
        rows,
    )
    return 0


_COMMANDS = {
    "theory": _cmd_theory,
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "nullcheck": _cmd_nullcheck,
    "sweep": _cmd_sweep,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="negdelay",
        description="Dispersive-medium excitation-time laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key-value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        if name == "simulate":
            p.add_argument(
                "--truth",
                action="store_true",
                help="persist per-shot photon-fate metadata",
            )
        if name == "analyze":
            p.add_argument("--log", required=True, help="shot log from simulate")
        if name == "nullcheck":
            p.add_argument(
                "--kind",
                required=True,
                choices=[m for m in MODES if m != "normal"],
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        run = load_config(args.config) if args.config else default_config()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](run, out, args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NegdelayError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
