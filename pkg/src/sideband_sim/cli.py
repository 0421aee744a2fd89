"""Command-line interface: one subcommand per experiment.

    sideband-sim ple          PLE spectrum + multi-Lorentzian peaks
    sideband-sim rabi         pulsed sideband Rabi trace + damped-sine fit
    sideband-sim interference phi_m fringe and/or AOM-frequency scan
    sideband-sim saw          coupling/displacement report
    sideband-sim oracle       quantized-model correspondence checks

Configuration: JSON file of dotted keys via --config, plus individual
"--key value" overrides (e.g. --phonon.nu_m 940).  Outputs are CSV
(9 significant digits, config-hash provenance header), JSON reports and
optional SVG plots (--plot).  Exit codes: 0 success, 1 usage/config
error, 2 numerical non-convergence (outputs still written).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import (OVERLAYS, RunConfig, SCHEMA, config_hash, load_config,
                     validate_mapping)
from .coupling import (red_sideband_resonance_detuning, saw_amplitude,
                       sideband_rabi, single_phonon_coupling)
from .exceptions import ConfigError, SimulationError
from .experiments import (InterferenceConfig, RabiSequenceConfig,
                          fit_damped_sinusoid, fit_phase_fringe,
                          interference_scan_aom, interference_scan_phase,
                          rabi_sequence)
from .fock import classical_correspondence, build_full_hamiltonian, \
    evolve_schrodinger, fock_basis_state, quantized_red_sideband_detuning
from .params import DriveConfig, OpticalTone, PhononDrive
from .spectroscopy import (analyze_sideband_spectrum, default_grid,
                           fit_lorentzians, ple_scan)
from .fitting import fit_damped_cosine

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.8e}"  # 9 significant digits


def write_csv(path: str, columns: Sequence[str], rows, cfg_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config={cfg_hash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: str, payload: dict) -> None:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not serializable: {type(o)}")

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")


def _parse_overrides(pairs: List[str]) -> Dict[str, object]:
    """--key value overrides using dotted keys."""
    mapping: Dict[str, object] = {}
    i = 0
    while i < len(pairs):
        key = pairs[i]
        if not key.startswith("--") or "." not in key:
            raise ConfigError(f"unrecognized argument: {key}")
        name = key[2:]
        if "=" in name:
            name, raw = name.split("=", 1)
        else:
            i += 1
            if i >= len(pairs):
                raise ConfigError(f"missing value for {key}")
            raw = pairs[i]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        mapping[name] = value
        i += 1
    return mapping


def _resolve_config(args, extra: List[str], command: str):
    base = load_config(args.config)
    overrides = _parse_overrides(extra)
    merged = dict(base.values)
    merged.update(overrides)
    cfg = validate_mapping(merged)
    resolved = cfg.resolved(command)
    return cfg, resolved, config_hash(resolved)


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_ple(args, extra) -> int:
    cfg, resolved, chash = _resolve_config(args, extra, "ple")
    emitter = cfg.emitter("ple")
    nu_m = resolved["phonon.nu_m"]
    grid = default_grid(nu_m, points=resolved["ple.points"],
                        span_factor=resolved["ple.span_factor"])
    powers = ([float(p) for p in args.p_o.split(",")] if args.p_o
              else [resolved["optical.p_o"]])
    kappa = resolved["calibration.kappa_opt"]
    exit_code = EXIT_OK
    out = _outdir(args)
    for p_o in powers:
        if resolved["optical.nu_rabi"] is not None and not args.p_o:
            nu_rabi = resolved["optical.nu_rabi"]
        else:
            nu_rabi = kappa * math.sqrt(p_o)
        beta = 0.0 if args.no_phonon else cfg.beta("ple")
        phonon = None if args.no_phonon else PhononDrive(
            nu_m, beta=beta, phi_m=resolved["phonon.phi_m"])
        drive = DriveConfig(tones=(OpticalTone(nu_rabi, 0.0),), phonon=phonon)
        spec = ple_scan(grid, drive, emitter,
                        n_sd_nodes=resolved["ple.sd_nodes"],
                        meta={"p_o": p_o})
        suffix = f"_po{p_o:g}" if len(powers) > 1 else ""
        write_csv(os.path.join(out, f"spectrum{suffix}.csv"),
                  ["detuning_mhz", "fluorescence_au"],
                  zip(spec.detunings, spec.values), chash)
        n_peaks = 1 if args.no_phonon else resolved["ple.n_peaks"]
        if n_peaks >= 3:
            fit = analyze_sideband_spectrum(spec, nu_m)
            peaks = [fit.red, fit.carrier, fit.blue]
            extra_info = {"splitting_mhz": fit.splitting,
                          "sideband_amplitude": fit.sideband_amplitude}
            converged = fit.converged
        else:
            peaks = fit_lorentzians(spec, n_peaks)
            extra_info = {}
            converged = all(p.converged for p in peaks)
        payload = {
            "config": chash, "p_o_uw": p_o, "nu_rabi_mhz": nu_rabi,
            "beta": beta,
            "peaks": [{"center_mhz": p.center, "fwhm_mhz": p.fwhm,
                       "amplitude": p.amplitude,
                       "residual_norm": p.residual_norm,
                       "converged": p.converged} for p in peaks],
        }
        payload.update(extra_info)
        write_json(os.path.join(out, f"peaks{suffix}.json"), payload)
        if args.plot:
            from .svgplot import save_line_svg
            save_line_svg(os.path.join(out, f"spectrum{suffix}.svg"),
                          spec.detunings, spec.values,
                          xlabel="detuning (MHz)",
                          ylabel="fluorescence (a.u.)",
                          title=f"PLE, P_o = {p_o:g} uW")
        if not converged:
            exit_code = EXIT_NUMERIC
    return exit_code


def cmd_rabi(args, extra) -> int:
    cfg, resolved, chash = _resolve_config(args, extra, "rabi")
    emitter = cfg.emitter("rabi")
    out = _outdir(args)
    if args.rf_powers:
        rf_list = [float(p) for p in args.rf_powers.split(",")]
    else:
        rf_list = [resolved["phonon.p_rf"]]
    eta_rf = resolved["calibration.eta_rf"]
    nu_m = resolved["phonon.nu_m"]
    exit_code = EXIT_OK
    fits = []
    for p_rf in rf_list:
        if args.beta is not None and len(rf_list) == 1:
            beta = args.beta
        elif resolved["phonon.beta"] is not None and not args.rf_powers:
            beta = resolved["phonon.beta"]
        else:
            beta = 2.0 * eta_rf * math.sqrt(p_rf) / nu_m
        seq = RabiSequenceConfig(
            pulse_ns=resolved["rabi.pulse_ns"],
            rest_ns=resolved["rabi.rest_ns"],
            bin_ns=resolved["rabi.bin_ns"],
            repetitions=resolved["rabi.repetitions"],
            nu_m=nu_m, beta=beta, nu_rabi=cfg.nu_rabi("rabi"),
            nu_detuning=resolved["rabi.nu_detuning"],
            phi_m=resolved["phonon.phi_m"],
            collection_eta=resolved["rabi.collection_eta"],
            shots=resolved["rabi.shots"], seed=resolved["rabi.seed"])
        counts = rabi_sequence(seq, emitter)
        fit = fit_damped_sinusoid(counts)
        suffix = f"_prf{p_rf:g}" if len(rf_list) > 1 else ""
        cols = ["t_ns", "expected_counts"]
        rows = [list(r) for r in zip(counts.bin_starts, counts.expected)]
        if counts.sampled is not None:
            cols.append("sampled_counts")
            for row, s in zip(rows, counts.sampled):
                row.append(int(s))
        write_csv(os.path.join(out, f"counts{suffix}.csv"), cols, rows, chash)
        fits.append({
            "p_rf_w": p_rf, "beta": beta,
            "frequency_mhz": fit.frequency_mhz,
            "decay_ns": None if math.isinf(fit.decay_ns) else fit.decay_ns,
            "amplitude": fit.amplitude, "phase_rad": fit.phase,
            "offset": fit.offset, "r_squared": fit.r_squared,
            "converged": fit.converged, "ambiguous": fit.ambiguous,
        })
        if args.plot:
            from .svgplot import save_line_svg
            save_line_svg(os.path.join(out, f"counts{suffix}.svg"),
                          counts.bin_centers, counts.counts,
                          xlabel="pulse duration (ns)",
                          ylabel="counts / bin",
                          title=f"sideband Rabi, P_RF = {p_rf:g} W")
        if not fit.converged or fit.ambiguous:
            exit_code = EXIT_NUMERIC
    payload = {"config": chash, "fits": fits}
    if len(fits) > 1:
        from .fitting import line_through_origin
        x = np.sqrt([f["p_rf_w"] for f in fits])
        y = np.array([f["frequency_mhz"] for f in fits])
        slope, r2 = line_through_origin(x, y)
        payload["sqrtp_fit"] = {"slope_mhz_per_sqrtw": slope,
                                "r_squared": r2}
    write_json(os.path.join(out, "fit.json"), payload)
    return exit_code


def cmd_interference(args, extra) -> int:
    cfg, resolved, chash = _resolve_config(args, extra, "interference")
    emitter = cfg.emitter("interference")
    out = _outdir(args)
    icfg = InterferenceConfig(
        nu_m=resolved["phonon.nu_m"], beta=cfg.beta("interference"),
        phi_m=resolved["phonon.phi_m"],
        nu_rabi_sideband=resolved["interference.nu_rabi_sideband"],
        nu_rabi_carrier=resolved["interference.nu_rabi_carrier"],
        phi_aom=resolved["interference.phi_aom"],
        t_int_ns=resolved["interference.t_int_ns"])
    exit_code = EXIT_OK
    if args.mode in ("phase", "both"):
        phi = np.linspace(0.0, 2.0 * math.pi,
                          resolved["interference.phi_points"],
                          endpoint=False)
        phi, values = interference_scan_phase(phi, icfg, emitter)
        write_csv(os.path.join(out, "fringe.csv"),
                  ["phi_m_rad", "fluorescence_au"],
                  zip(phi, values), chash)
        amp, phi0, offset, rel = fit_phase_fringe(phi, values)
        write_json(os.path.join(out, "fringe_fit.json"), {
            "config": chash, "amplitude": amp, "phase_rad": phi0,
            "offset": offset, "relative_residual": rel})
        if args.plot:
            from .svgplot import save_line_svg
            save_line_svg(os.path.join(out, "fringe.svg"), phi, values,
                          xlabel="phi_m (rad)", ylabel="fluorescence (a.u.)",
                          title="two-path interference fringe")
    if args.mode in ("aom", "both"):
        span = resolved["interference.aom_span"]
        n = resolved["interference.aom_points"]
        nu_aom = icfg.nu_m + np.linspace(-span / 2, span / 2, n)
        nu_aom, values = interference_scan_aom(nu_aom, icfg, emitter)
        write_csv(os.path.join(out, "aom_scan.csv"),
                  ["nu_aom_mhz", "fluorescence_au"],
                  zip(nu_aom, values), chash)
        if args.plot:
            from .svgplot import save_line_svg
            save_line_svg(os.path.join(out, "aom_scan.svg"), nu_aom, values,
                          xlabel="nu_AOM (MHz)", ylabel="fluorescence (a.u.)",
                          title="two-path resonance")
    return exit_code


def cmd_saw(args, extra) -> int:
    cfg, resolved, chash = _resolve_config(args, extra, "saw")
    material = cfg.material("saw")
    nu_m = resolved["phonon.nu_m"]
    nu_rabi = cfg.nu_rabi("saw")
    nu_omega = resolved["saw.nu_omega"]
    g = single_phonon_coupling(material, nu_m)
    a_saw = saw_amplitude(nu_omega, nu_rabi, material.saw_velocity,
                          material.d_over_2pi)
    beta = 2.0 * nu_omega / nu_rabi if nu_rabi > 0 else 0.0
    payload = {
        "config": chash,
        "nu_m_mhz": nu_m,
        "nu_rabi_mhz": nu_rabi,
        "nu_omega_mhz": nu_omega,
        "single_phonon_coupling_mhz": g,
        "a_saw_pm": a_saw,
        "beta": beta,
        "sideband_rabi_check_mhz": sideband_rabi(nu_rabi, beta),
        "resolved_sideband": bool(nu_m > 175.0),
    }
    write_json(os.path.join(_outdir(args), "report.json"), payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_oracle(args, extra) -> int:
    cfg, resolved, chash = _resolve_config(args, extra, "oracle")
    nu_m = resolved["phonon.nu_m"]
    g = resolved["oracle.g_ratio"] * nu_m
    nu_rabi = resolved["oracle.rabi_ratio"] * nu_m
    alpha = resolved["oracle.alpha"]
    n_max = resolved["oracle.n_max"]

    corr = classical_correspondence(alpha, g, nu_m, nu_rabi, n_max=n_max)

    det = quantized_red_sideband_detuning(nu_rabi, g, nu_m)

    def flop_freq(n_start, n_dim):
        h = build_full_hamiltonian(det, nu_m, g, nu_rabi, n_dim)
        psi0 = fock_basis_state(0, n_start, n_dim)
        nu_scale = g * nu_rabi * math.sqrt(n_start) / nu_m
        span = 3.0 * 1e3 / nu_scale
        traj = evolve_schrodinger(psi0, h, span, (1e3 / nu_scale) / 40.0)
        params, _, _ = fit_damped_cosine(traj.times, traj.p_excited)
        return params[2] * 1e3

    f1 = flop_freq(1, 8)
    f4 = flop_freq(4, 12)
    predicted = g * nu_rabi / nu_m
    payload = {
        "config": chash,
        "correspondence_deviation": corr.deviation,
        "correspondence_pass": bool(corr.deviation < 0.05),
        "truncation_flag": corr.truncated,
        "flop_n1_mhz": f1, "flop_n1_predicted_mhz": predicted,
        "flop_n1_pass": bool(abs(f1 / predicted - 1.0) < 0.05),
        "flop_ratio_n4_n1": f4 / f1,
        "flop_ratio_pass": bool(abs(f4 / f1 / 2.0 - 1.0) < 0.05),
    }
    write_json(os.path.join(_outdir(args), "correspondence.json"), payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    ok = (payload["correspondence_pass"] and payload["flop_n1_pass"]
          and payload["flop_ratio_pass"] and not corr.truncated)
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sideband-sim",
        description="Resolved-sideband optomechanical control simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (dotted keys)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--plot", action="store_true",
                       help="also write SVG plots")

    p = sub.add_parser("ple", help="PLE spectrum and peak fits")
    common(p)
    p.add_argument("--no-phonon", action="store_true",
                   help="acoustic drive off (carrier line only)")
    p.add_argument("--p-o", help="comma list of optical powers (uW)")
    p.set_defaults(func=cmd_ple)

    p = sub.add_parser("rabi", help="pulsed sideband Rabi oscillations")
    common(p)
    p.add_argument("--rf-powers", help="comma list of RF powers (W)")
    p.add_argument("--beta", type=float, help="modulation index override")
    p.set_defaults(func=cmd_rabi)

    p = sub.add_parser("interference", help="two-pathway interference")
    common(p)
    p.add_argument("--mode", choices=("phase", "aom", "both"),
                   default="both")
    p.set_defaults(func=cmd_interference)

    p = sub.add_parser("saw", help="coupling and displacement report")
    common(p)
    p.set_defaults(func=cmd_saw)

    p = sub.add_parser("oracle", help="quantized-model validation")
    common(p)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
