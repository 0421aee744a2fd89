"""Run configuration: flat JSON with dotted keys, defaults and validation.

Every key has a documented default reproducing the corresponding
measurement's operating point; explicit values override defaults.
Unknown keys are a hard error (anti-typo policy).  Each subcommand
applies a small overlay for keys the user did not set, because the
underlying measurements ran at different operating points (e.g. the
pulsed Rabi data at nu_m = 940 MHz with Omega_0/2pi = 290 MHz, the
spectra at nu_m = 900 MHz driven by 0.4 uW).
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional

from .coupling import optical_power_to_rabi, rf_power_to_beta
from .exceptions import ConfigError
from .params import (Calibration, EmitterParams, MaterialParams,
                     NU_GAMMA_DEFAULT, SD_FWHM_DEFAULT)

#: key -> (default, type, validator-name)
_POSITIVE = "positive"
_NONNEG = "nonnegative"
_ANY = "any"

SCHEMA: Dict[str, tuple] = {
    # emitter
    "emitter.nu_gamma": (NU_GAMMA_DEFAULT, float, _POSITIVE),
    "emitter.nu_phi": (0.0, float, _NONNEG),
    "emitter.sd_fwhm": (SD_FWHM_DEFAULT, float, _NONNEG),
    # material
    "material.d_over_2pi": (6.1e8, float, _POSITIVE),
    "material.saw_velocity": (5600.0, float, _POSITIVE),
    "material.mass": (1e-15, float, _POSITIVE),
    # calibration
    "calibration.eta_rf": (Calibration().eta_rf, float, _NONNEG),
    "calibration.kappa_opt": (65.0, float, _NONNEG),
    # shared drive
    "phonon.nu_m": (900.0, float, _POSITIVE),
    "phonon.phi_m": (0.0, float, _ANY),
    "phonon.p_rf": (0.2, float, _NONNEG),
    "phonon.beta": (None, float, _NONNEG),  # overrides p_rf when set
    "optical.p_o": (0.4, float, _NONNEG),
    "optical.nu_rabi": (None, float, _NONNEG),  # overrides p_o when set
    # ple scan
    "ple.points": (81, int, _POSITIVE),
    "ple.span_factor": (1.6, float, _POSITIVE),
    "ple.n_peaks": (3, int, _POSITIVE),
    "ple.sd_nodes": (2001, int, _POSITIVE),
    # rabi sequence
    "rabi.pulse_ns": (90.0, float, _POSITIVE),
    "rabi.rest_ns": (100.0, float, _POSITIVE),
    "rabi.bin_ns": (2.8, float, _POSITIVE),
    "rabi.repetitions": (100, int, _POSITIVE),
    "rabi.shots": (1, int, _POSITIVE),
    "rabi.seed": (None, int, _ANY),
    "rabi.nu_detuning": (None, float, _ANY),  # None: track the resonance
    "rabi.collection_eta": (1.0, float, _NONNEG),
    # interference
    "interference.nu_rabi_sideband": (3.6, float, _NONNEG),
    "interference.nu_rabi_carrier": (0.85, float, _NONNEG),
    "interference.phi_aom": (0.0, float, _ANY),
    "interference.t_int_ns": (2000.0, float, _POSITIVE),
    "interference.phi_points": (41, int, _POSITIVE),
    "interference.aom_points": (49, int, _POSITIVE),
    "interference.aom_span": (2.4, float, _POSITIVE),
    # saw report
    "saw.nu_omega": (66.0, float, _NONNEG),
    # quantized oracle
    "oracle.alpha": (3.0, float, _NONNEG),
    "oracle.g_ratio": (0.02, float, _POSITIVE),
    "oracle.rabi_ratio": (0.3, float, _POSITIVE),
    "oracle.n_max": (30, int, _POSITIVE),
}

#: Per-subcommand defaults for keys the user left unset: each experiment
#: reproduces its own figure's operating point.
OVERLAYS: Dict[str, Dict[str, Any]] = {
    "rabi": {"phonon.nu_m": 940.0, "optical.nu_rabi": 290.0},
    "saw": {"optical.nu_rabi": 290.0},
    "interference": {"phonon.phi_m": math.pi},
}

#: Fitted-linewidth scale used by the resolved-sideband sanity check.
RESOLVED_SIDEBAND_LINEWIDTH = 175.0


def _coerce(key: str, value: Any):
    default, typ, rule = SCHEMA[key]
    if value is None:
        return None
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
    elif typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if rule == _POSITIVE and not value > 0:
        raise ConfigError(f"{key}: must be > 0, got {value}")
    if rule == _NONNEG and value < 0:
        raise ConfigError(f"{key}: must be >= 0, got {value}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration mapping."""

    values: Dict[str, Any]

    def get(self, key: str):
        return self.values[key]

    def resolved(self, command: Optional[str] = None) -> Dict[str, Any]:
        """Full mapping with the subcommand overlay applied to unset keys."""
        out = {k: default for k, (default, _, _) in SCHEMA.items()}
        if command in OVERLAYS:
            out.update(OVERLAYS[command])
        out.update(self.values)
        return out

    def emitter(self, command=None) -> EmitterParams:
        r = self.resolved(command)
        return EmitterParams(nu_gamma=r["emitter.nu_gamma"],
                             nu_phi=r["emitter.nu_phi"],
                             sd_fwhm=r["emitter.sd_fwhm"])

    def material(self, command=None) -> MaterialParams:
        r = self.resolved(command)
        return MaterialParams(d_over_2pi=r["material.d_over_2pi"],
                              saw_velocity=r["material.saw_velocity"],
                              mass=r["material.mass"])

    def calibration(self, command=None) -> Calibration:
        r = self.resolved(command)
        return Calibration(eta_rf=r["calibration.eta_rf"],
                           kappa_opt=r["calibration.kappa_opt"])

    def nu_rabi(self, command=None) -> float:
        r = self.resolved(command)
        if r["optical.nu_rabi"] is not None:
            return r["optical.nu_rabi"]
        return optical_power_to_rabi(r["optical.p_o"],
                                     r["calibration.kappa_opt"])

    def beta(self, command=None) -> float:
        r = self.resolved(command)
        if r["phonon.beta"] is not None:
            return r["phonon.beta"]
        return rf_power_to_beta(r["phonon.p_rf"], r["calibration.eta_rf"],
                                r["phonon.nu_m"])


def validate_mapping(mapping: Dict[str, Any]) -> RunConfig:
    """Validate a flat dotted-key mapping; collect every violation."""
    if not isinstance(mapping, dict):
        raise ConfigError("config must be a JSON object of dotted keys")
    errors = []
    unknown = [k for k in mapping if k not in SCHEMA]
    for k in unknown:
        errors.append(f"unknown key: {k!r}")
    values = {}
    for key, raw in mapping.items():
        if key not in SCHEMA:
            continue
        try:
            coerced = _coerce(key, raw)
        except ConfigError as exc:
            errors.append(str(exc))
            continue
        if coerced is not None:
            values[key] = coerced
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))

    cfg = RunConfig(values=values)
    nu_m = cfg.resolved()["phonon.nu_m"]
    if nu_m <= RESOLVED_SIDEBAND_LINEWIDTH:
        warnings.warn(
            f"phonon.nu_m = {nu_m} MHz does not exceed the "
            f"{RESOLVED_SIDEBAND_LINEWIDTH} MHz linewidth: outside the "
            f"resolved-sideband regime", stacklevel=2)
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    """Load and validate a JSON config file; None means all defaults."""
    if path is None:
        return validate_mapping({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            mapping = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, "
            f"column {exc.colno}): {exc.msg}") from exc
    return validate_mapping(mapping)


def config_hash(resolved: Dict[str, Any]) -> str:
    """12-hex digest of the resolved mapping, for CSV provenance headers."""
    canon = json.dumps(resolved, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
