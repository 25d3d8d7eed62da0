"""Command-line front end: config ingestion, scenario dispatch, artifacts.

Config files are flat ``key = value`` text with dotted keys, ``#`` comments
and blank lines.  Unknown and duplicate keys are hard errors naming the key
and line.  Grid-valued keys accept either a comma list (``-0.1,0,0.15``) or
``linspace:start:stop:num``.

Every run writes a JSON manifest carrying the fully resolved configuration,
seed and code version; rerunning from the manifest's configuration
reproduces byte-identical CSV numeric content for any worker count.

Exit codes: 0 success, 2 configuration error, 3 integrator abort,
4 fit did not converge (results still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .artifacts import ensure_outdir, fmt, read_xy_csv, write_json, write_map_csv, write_xy_csv
from .catspace import TruncationError
from .experiments import (
    SweepSpec,
    fit_amplitude_sweep,
    run_amplitude_sweep,
    run_chi_ablation,
    run_detuning_scan,
    run_phase_time_map,
    run_projected_comparison,
    synth_stark_spectroscopy,
)
from .fitting import (
    SnailSpec,
    UnidentifiableFit,
    extract_g3_tilde,
    fit_damped_sinusoid,
    fit_stark_shift,
    snail_flux_fit,
    snail_mode_frequency,
)
from .lindblad import IntegrationAbort, IntegratorConfig
from .model import PulseSchedule, SystemParams, default_device_reference

SCENARIOS = (
    "fig2-map",
    "fig3-sweep",
    "detuning-scan",
    "chi-ablation",
    "projected-compare",
    "stark-synth",
    "stark-fit",
    "snail-fit",
    "oscillation-fit",
)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# key registry and parsing
# ---------------------------------------------------------------------------

_PARAM_KEYS = {
    "params.K_a": float, "params.alpha": float, "params.g3_tilde": float,
    "params.xi": float, "params.phi": float, "params.delta": float,
    "params.chi_ab": float, "params.T1_a": float, "params.T2R_a": float,
    "params.T1_b": float, "params.T2R_b": float, "params.N": int,
    "params.ramp": float, "params.dephasing_convention": str,
    "params.chi_reference": str,
}

_GRID = "grid"
_KNOWN_KEYS: dict[str, object] = {
    "scenario": str, "out": str, "workers": int, "seed": int, "input": str,
    **_PARAM_KEYS,
    "integrator.dt": float, "integrator.record_stride": int,
    "integrator.snapshot_stride": int, "integrator.renormalize": bool,
    "integrator.pure_state_fast_path": bool,
    "schedule.t_total": float, "schedule.ramp": float,
    "sweep.closed": bool, "sweep.kcq_init": str, "sweep.transmon_init": str,
    "sweep.observables": "strlist",
    "sweep.phi": _GRID, "sweep.times": _GRID, "sweep.xi": _GRID,
    "sweep.deltas": _GRID, "sweep.chi_values": _GRID, "sweep.alphas": _GRID,
    "stark.c": float, "stark.omega_a": float, "stark.v": _GRID,
    "stark.noise_sigma": float,
    "snail.E_C": float, "snail.E_L": float, "snail.asymmetry": float,
    "snail.n_junctions": int, "snail.n_snails": int, "snail.L_J": float,
    "snail.flux_points": int,
}


def _parse_grid(text: str) -> list[float]:
    text = text.strip()
    if text.startswith("linspace:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"bad grid spec {text!r}; want linspace:start:stop:num")
        return [float(v) for v in np.linspace(float(parts[1]), float(parts[2]), int(parts[3]))]
    return [float(v) for v in text.split(",") if v.strip()]


def _coerce(key: str, raw: str):
    kind = _KNOWN_KEYS[key]
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind is float:
            return math.inf if raw.lower() in ("inf", "infinite") else float(raw)
        if kind is int:
            return int(raw)
        if kind is str:
            return raw
        if kind == "strlist":
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        if kind == _GRID:
            return _parse_grid(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc
    raise ConfigError(f"unhandled kind for {key!r}")


def _read_config_file(path) -> dict:
    values: dict[str, object] = {}
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in seen:
                raise ConfigError(
                    f"{path}:{lineno}: duplicate key {key!r} (first at line {seen[key]})"
                )
            seen[key] = lineno
            values[key] = _coerce(key, val)
    return values


@dataclasses.dataclass(frozen=True)
class RunConfig:
    scenario: str
    out: str
    params: SystemParams
    integrator: IntegratorConfig
    schedule: PulseSchedule
    sweep: dict
    stark: dict
    snail: dict
    workers: int = 1
    seed: int = 0
    input_path: str | None = None
    raw: dict = dataclasses.field(default_factory=dict)


_SCENARIO_DEFAULTS: dict[str, dict] = {
    # moderate drive keeps the parity-sector splitting slow enough that the
    # transmon oscillation decay is dissipation-dominated (reference device
    # behavior); see kcsim.experiments docstrings.
    "fig2-map": {
        "params.xi": 1.0,
        "sweep.phi": list(np.linspace(-math.pi, math.pi, 13)),
        "sweep.times": list(np.arange(0.5, 4.01, 0.5)),
    },
    "fig3-sweep": {
        "params.xi": 2.04,
        "schedule.t_total": 4.0,
        "sweep.xi": [0.6, 0.9, 1.2, 1.5, 1.8, 2.1, 2.4],
    },
    "detuning-scan": {
        "params.xi": 2.04,
        "schedule.t_total": 3.0,
        "sweep.closed": True,
        "sweep.deltas": [-0.1, 0.0, 0.15],
        "sweep.phi": list(np.linspace(-math.pi, math.pi, 13)[:-1]),
        "sweep.times": list(np.arange(0.05, 3.001, 0.05)),
        "integrator.record_stride": 10,
    },
    "chi-ablation": {
        "params.xi": 2.04,
        "schedule.t_total": 10.0,
        "sweep.chi_values": [0.0, 0.01],
    },
    "projected-compare": {"sweep.alphas": [1.0, 1.3, 1.6, 2.0]},
    "stark-synth": {
        "stark.v": list(np.linspace(0.0, 2000.0, 21)),
        "stark.c": 6.57e-4,
        "stark.noise_sigma": 0.0,
    },
    "stark-fit": {
        "stark.v": list(np.linspace(0.0, 2000.0, 21)),
        "stark.c": 6.57e-4,
        "stark.noise_sigma": 0.012,
    },
    "snail-fit": {"snail.flux_points": 25},
    "oscillation-fit": {},
}


def parse_config(
    file: str | None = None,
    overrides: list[str] | None = None,
    **flag_values,
) -> RunConfig:
    """Resolve defaults, config file and --set overrides into a RunConfig."""
    merged: dict[str, object] = {}
    if file:
        merged.update(_read_config_file(file))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"--set: unknown key {key!r}")
        merged[key] = _coerce(key, val)
    for key, val in flag_values.items():
        if val is not None:
            merged[key] = val

    scenario = merged.get("scenario")
    if scenario is None:
        raise ConfigError("missing scenario (set scenario= or --scenario)")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")

    defaults = dict(_SCENARIO_DEFAULTS[scenario])
    for key, val in defaults.items():
        merged.setdefault(key, val)

    params_kw = {
        key.split(".", 1)[1]: val for key, val in merged.items() if key.startswith("params.")
    }
    try:
        params = SystemParams(**params_kw)
    except (ValueError, TruncationError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc

    integ_kw = {
        key.split(".", 1)[1]: val
        for key, val in merged.items()
        if key.startswith("integrator.")
    }
    try:
        integrator = IntegratorConfig(**integ_kw)
    except ValueError as exc:
        raise ConfigError(f"invalid integrator config: {exc}") from exc

    schedule = PulseSchedule(
        t_total=merged.get("schedule.t_total", 4.0),
        ramp=merged.get("schedule.ramp", params.ramp),
    )
    sweep = {k.split(".", 1)[1]: v for k, v in merged.items() if k.startswith("sweep.")}
    stark = {k.split(".", 1)[1]: v for k, v in merged.items() if k.startswith("stark.")}
    snail = {k.split(".", 1)[1]: v for k, v in merged.items() if k.startswith("snail.")}

    return RunConfig(
        scenario=scenario,
        out=str(merged.get("out", "out")),
        params=params,
        integrator=integrator,
        schedule=schedule,
        sweep=sweep,
        stark=stark,
        snail=snail,
        workers=int(merged.get("workers", 1)),
        seed=int(merged.get("seed", 0)),
        input_path=merged.get("input"),
        raw=merged,
    )


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _resolved_dict(config: RunConfig) -> dict:
    d = {
        "scenario": config.scenario,
        "out": config.out,
        "workers": config.workers,
        "seed": config.seed,
        "input": config.input_path,
        "params": dataclasses.asdict(config.params),
        "integrator": {
            k: v
            for k, v in dataclasses.asdict(config.integrator).items()
            if k != "tols"
        },
        "schedule": dataclasses.asdict(config.schedule),
        "sweep": config.sweep,
        "stark": config.stark,
        "snail": config.snail,
    }
    return d


def _spec_from_config(config: RunConfig, **kw) -> SweepSpec:
    base = dict(
        params=config.params,
        schedule=config.schedule,
        integrator=config.integrator,
        closed=bool(config.sweep.get("closed", False)),
        workers=config.workers,
    )
    if "kcq_init" in config.sweep:
        base["kcq_init"] = config.sweep["kcq_init"]
    if "transmon_init" in config.sweep:
        base["transmon_init"] = config.sweep["transmon_init"]
    if "observables" in config.sweep:
        base["observables"] = tuple(config.sweep["observables"])
    base.update(kw)
    return SweepSpec(**base)


def dispatch(config: RunConfig) -> int:
    """Run the configured scenario; write CSV + JSON artifacts; exit status."""
    out = ensure_outdir(config.out)
    t_start = time.perf_counter()
    status = 0
    results_meta: dict = {}

    try:
        if config.scenario == "fig2-map":
            spec = _spec_from_config(config)
            m = run_phase_time_map(
                spec, config.sweep["phi"], config.sweep["times"]
            )
            for name, arr in m.values.items():
                write_map_csv(os.path.join(out, f"map_{name}.csv"), m.axes, arr, name)
            results_meta["map"] = m.metadata

        elif config.scenario == "fig3-sweep":
            spec = _spec_from_config(config)
            m = run_amplitude_sweep(spec, config.sweep["xi"])
            write_map_csv(
                os.path.join(out, "sweep_transmon_z.csv"),
                m.axes, m.values["transmon_z"], "transmon_z",
            )
            rates, sigmas, fits = fit_amplitude_sweep(m)
            write_xy_csv(
                os.path.join(out, "rate_vs_xi.csv"),
                m.axes["xi"], rates, header=("xi", "rate_MHz"),
            )
            g3fit = extract_g3_tilde(m.axes["xi"], rates, config.params.alpha, sigma=sigmas)
            write_json(os.path.join(out, "g3_fit.json"), g3fit.as_dict())
            results_meta["g3_fit"] = g3fit.as_dict()
            if not g3fit.converged or not all(f.converged for f in fits):
                status = 4

        elif config.scenario == "detuning-scan":
            spec = _spec_from_config(config)
            maps, skews = run_detuning_scan(
                spec, config.sweep["deltas"], config.sweep["phi"], config.sweep["times"]
            )
            for m in maps:
                tag = f"{m.metadata['delta']:+.4f}".replace(".", "p")
                write_map_csv(
                    os.path.join(out, f"detuning_{tag}_kcq_y.csv"),
                    m.axes, m.values["kcq_y"], "kcq_y",
                )
            write_xy_csv(
                os.path.join(out, "skew_vs_delta.csv"),
                config.sweep["deltas"], skews, header=("delta_MHz", "skew_deg_per_us"),
            )
            results_meta["skews"] = dict(zip(map(str, config.sweep["deltas"]), skews))

        elif config.scenario == "chi-ablation":
            spec = _spec_from_config(config)
            chi_pair = config.sweep.get("chi_values", [0.0, 0.01])
            report = run_chi_ablation(spec, tuple(chi_pair))
            payload = {
                "chi_values": list(report.chi_values),
                "max_deviation": report.max_deviation,
                "per_observable": report.per_observable,
                "per_phi": {str(k): v for k, v in report.per_phi.items()},
            }
            write_json(os.path.join(out, "chi_ablation.json"), payload)
            results_meta["chi_ablation"] = payload

        elif config.scenario == "projected-compare":
            rows = run_projected_comparison(
                config.params, config.sweep["alphas"], config.integrator
            )
            write_xy_csv(
                os.path.join(out, "projected_deviation.csv"),
                [r[0] for r in rows], [r[1] for r in rows],
                header=("alpha", "max_deviation"),
            )
            results_meta["projected_compare"] = {str(a): d for a, d in rows}

        elif config.scenario in ("stark-synth", "stark-fit"):
            rng = np.random.default_rng(config.seed)
            if config.scenario == "stark-fit" and config.input_path:
                v, omega = read_xy_csv(config.input_path)
            else:
                v, omega = synth_stark_spectroscopy(
                    config.params,
                    config.stark["v"],
                    config.stark["c"],
                    omega_a=config.stark.get("omega_a", 5200.0),
                    noise_sigma=config.stark.get("noise_sigma", 0.0),
                    rng=rng,
                )
                write_xy_csv(
                    os.path.join(out, "stark_spectroscopy.csv"), v, omega,
                    header=("drive_DU", "omega_MHz"),
                )
            if config.scenario == "stark-fit":
                fit = fit_stark_shift(
                    v, omega, k_a=config.params.K_a,
                    omega_a=config.stark.get("omega_a", 5200.0),
                )
                write_json(os.path.join(out, "stark_fit.json"), fit.as_dict())
                results_meta["stark_fit"] = fit.as_dict()
                if not fit.converged:
                    status = 4

        elif config.scenario == "snail-fit":
            dev = default_device_reference()
            base = SnailSpec(
                E_C=config.snail.get("E_C", dev.value("E_C")),
                E_L=config.snail.get("E_L", dev.value("E_L")),
                asymmetry=config.snail.get("asymmetry", dev.value("asymmetry")),
                n_junctions=config.snail.get("n_junctions", 3),
                n_snails=config.snail.get("n_snails", int(dev.value("n_snails"))),
                phi_ext=dev.value("Phi_ext"),
                L_J=config.snail.get("L_J", dev.value("L_J")),
            )
            if config.input_path:
                flux, freq = read_xy_csv(config.input_path)
            else:
                flux = np.linspace(0.0, 0.45, int(config.snail.get("flux_points", 25)))
                freq = snail_mode_frequency(base, flux)
                write_xy_csv(
                    os.path.join(out, "flux_dispersion.csv"), flux, freq,
                    header=("flux_Phi0", "omega_MHz"),
                )
            start = SnailSpec(
                E_C=base.E_C * 1.3, E_L=base.E_L * 0.8, asymmetry=base.asymmetry,
                n_junctions=base.n_junctions, n_snails=base.n_snails,
                phi_ext=base.phi_ext, L_J=base.L_J,
            )
            out_fit = snail_flux_fit(flux, freq, start)
            write_json(os.path.join(out, "snail_fit.json"), out_fit.fit.as_dict())
            write_xy_csv(
                os.path.join(out, "g3_vs_flux.csv"),
                out_fit.flux_grid, out_fit.g3_curve, header=("flux_Phi0", "g3_MHz"),
            )
            write_xy_csv(
                os.path.join(out, "g4_vs_flux.csv"),
                out_fit.flux_grid, out_fit.g4_curve, header=("flux_Phi0", "g4_MHz"),
            )
            results_meta["snail_fit"] = out_fit.fit.as_dict()
            if not out_fit.fit.converged:
                status = 4

        elif config.scenario == "oscillation-fit":
            if not config.input_path:
                raise ConfigError("oscillation-fit requires input= (CSV of t,y)")
            t, y = read_xy_csv(config.input_path)
            fit = fit_damped_sinusoid(t, y)
            write_json(os.path.join(out, "oscillation_fit.json"), fit.as_dict())
            results_meta["oscillation_fit"] = fit.as_dict()
            if not fit.converged:
                status = 4

    except IntegrationAbort as exc:
        print(f"integrator abort: {exc}", file=sys.stderr)
        status = 3
    except (UnidentifiableFit,) as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        status = 4

    manifest = {
        "code_version": __version__,
        "config": _resolved_dict(config),
        "wall_time_s": time.perf_counter() - t_start,
        "exit_status": status,
        "results": results_meta,
    }
    write_json(os.path.join(out, "manifest.json"), manifest)
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="kcsim",
        description="Kerr-cat / transmon beam-splitter simulation and calibration scenarios",
    )
    ap.add_argument("--config", default=None, help="key = value config file")
    ap.add_argument("--scenario", default=None, choices=SCENARIOS)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )
    args = ap.parse_args(argv)
    try:
        config = parse_config(
            file=args.config,
            overrides=args.set,
            scenario=args.scenario,
            out=args.out,
            workers=args.workers,
            seed=args.seed,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
