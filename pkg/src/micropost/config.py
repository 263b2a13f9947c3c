"""Declarative experiment configuration: named presets in one YAML file.

A preset may inherit from another via ``base:``; sections are merged
shallowly (preset sections override base sections key by key). The resolved
preset plus seed is hashed (sha256) and stamped into every output.
"""

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import yaml

from micropost.cavity import Layer, build_micropost_stack
from micropost.errors import ValidationError
from micropost.hbt import DetectorModel, HistogramSpec
from micropost.purcell import CavityMode, DecayModel
from micropost.source import BlinkingModel, EmissionModel, PulseTrain

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "default_config_path",
]


class ConfigError(ValidationError):
    """Configuration file problem; message carries the preset/key path."""


def default_config_path():
    return resources.files("micropost.data") / "default_config.yaml"


def _merge(base, override):
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out


def _resolve_preset(presets, name, seen=None):
    seen = seen or []
    if name in seen:
        raise ConfigError(f"preset inheritance cycle: {' -> '.join(seen + [name])}")
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(presets)}")
    raw = presets[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"preset {name!r} must be a mapping")
    base_name = raw.get("base")
    if base_name is None:
        return {k: v for k, v in raw.items() if k != "base"}
    base = _resolve_preset(presets, base_name, seen + [name])
    return _merge(base, {k: v for k, v in raw.items() if k != "base"})


def _get(section, key, path, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing key {path}.{key}")
        return default
    return section[key]


@dataclass(frozen=True)
class ExperimentConfig:
    """One resolved preset, with typed accessors for each subsystem."""

    name: str
    raw: dict
    seed: int

    @property
    def config_hash(self):
        canonical = json.dumps(
            {"preset": self.name, "seed": self.seed, "config": self.raw},
            sort_keys=True, default=str,
        )
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def _section(self, key, required=True):
        sec = self.raw.get(key)
        if sec is None:
            if required:
                raise ConfigError(f"preset {self.name!r} lacks section {key!r}")
            return None
        return sec

    def stack(self):
        s = self._section("stack")
        p = f"{self.name}.stack"
        cap_raw = _get(s, "cap", p)
        cap = None
        if cap_raw is not None:
            cap = Layer(
                thickness=_get(cap_raw, "thickness_nm", p + ".cap", required=True),
                refractive_index=_get(cap_raw, "refractive_index", p + ".cap", required=True),
                label=_get(cap_raw, "label", p + ".cap", default="cap"),
            )
        try:
            return build_micropost_stack(
                top_pairs=_get(s, "top_pairs", p, required=True),
                bottom_pairs=_get(s, "bottom_pairs", p, required=True),
                spacer_nm=_get(s, "spacer_nm", p, required=True),
                gaas_nm=_get(s, "gaas_nm", p, required=True),
                alas_nm=_get(s, "alas_nm", p, required=True),
                n_gaas=_get(s, "n_gaas", p, default=3.5),
                n_alas=_get(s, "n_alas", p, default=2.9),
                cap=cap,
                ambient_index=_get(s, "ambient_index", p, default=1.0),
                substrate_index=_get(s, "substrate_index", p, default=3.5),
            )
        except ValidationError as exc:
            raise ConfigError(f"{p}: {exc}") from exc

    def spectrum_band(self):
        s = self._section("spectrum", required=False) or {}
        p = f"{self.name}.spectrum"
        return (
            _get(s, "lambda_min_nm", p, default=850.0),
            _get(s, "lambda_max_nm", p, default=1050.0),
            _get(s, "n_samples", p, default=20001),
        )

    def cavity_mode(self):
        s = self._section("cavity")
        p = f"{self.name}.cavity"
        return CavityMode(
            lambda_c=_get(s, "lambda_c_nm", p, required=True),
            q_factor=_get(s, "q_factor", p, required=True),
        )

    def decay_model(self):
        s = self._section("decay")
        p = f"{self.name}.decay"
        return DecayModel(
            gamma_max=_get(s, "gamma_max_per_ns", p, required=True),
            gamma_min=_get(s, "gamma_min_per_ns", p, required=True),
            mode=self.cavity_mode(),
        )

    def blinking_model(self):
        s = self._section("blinking")
        p = f"{self.name}.blinking"
        if _get(s, "enabled", p, default=True) is False:
            return BlinkingModel.always_on()
        return BlinkingModel(
            k_on=_get(s, "k_on_per_ns", p, required=True),
            k_off=_get(s, "k_off_per_ns", p, required=True),
            initial_state=_get(s, "initial_state", p, default="stationary"),
        )

    def emission_model(self, gamma=None):
        s = self._section("emission")
        p = f"{self.name}.emission"
        if gamma is None:
            gamma = self.decay_model().gamma_max
        return EmissionModel(
            gamma=gamma,
            p1=_get(s, "p1", p, required=True),
            p2=_get(s, "p2", p, default=0.0),
        )

    def poisson_mean(self):
        s = self._section("poisson", required=False)
        if s is None:
            return None
        return _get(s, "mean_photons", f"{self.name}.poisson", required=True)

    def pulse_train(self, n_pulses=None):
        s = self._section("pulse_train")
        p = f"{self.name}.pulse_train"
        return PulseTrain(
            period=_get(s, "period_ns", p, default=1000.0 / 76.0),
            n_pulses=n_pulses or _get(s, "n_pulses", p, required=True),
        )

    def detector_models(self):
        s = self._section("detectors")
        p = f"{self.name}.detectors"
        det = DetectorModel(
            efficiency=_get(s, "efficiency", p, default=1.0),
            jitter_fwhm=_get(s, "jitter_fwhm_ns", p, default=0.3),
            dead_time=_get(s, "dead_time_ns", p, default=50.0),
            dark_rate=_get(s, "dark_rate_per_ns", p, default=0.0),
        )
        return det, det

    def correlator(self):
        s = self._section("correlator", required=False) or {}
        p = f"{self.name}.correlator"
        mode = _get(s, "mode", p, default="tac")
        if mode not in ("tac", "all_pairs"):
            raise ConfigError(f"{p}.mode must be 'tac' or 'all_pairs', got {mode!r}")
        spec = HistogramSpec(
            bin_width=_get(s, "bin_width_ns", p, default=0.05),
            tau_range=_get(s, "tau_range_ns", p, default=65.0),
        )
        return mode, spec

    def streak_settings(self):
        s = self._section("streak", required=False) or {}
        p = f"{self.name}.streak"
        return (
            _get(s, "irf_fwhm_ns", p, default=0.025),
            _get(s, "bin_width_ns", p, default=0.025),
        )

    def analysis_settings(self):
        s = self._section("analysis", required=False) or {}
        p = f"{self.name}.analysis"
        nearest = _get(s, "nearest", p, default="symmetric")
        if nearest not in ("symmetric", "positive_only"):
            raise ConfigError(f"{p}.nearest must be 'symmetric' or 'positive_only'")
        return {
            "windows": _get(s, "windows_ns", p, default=[4.0, 1.0]),
            "k_max": _get(s, "k_max", p, default=4),
            "nearest": nearest,
        }


@dataclass(frozen=True)
class ConfigFile:
    presets: dict
    seed: int

    def preset(self, name, seed=None):
        resolved = _resolve_preset(self.presets, name)
        return ExperimentConfig(name=name, raw=resolved,
                                seed=self.seed if seed is None else seed)

    def names(self):
        return sorted(self.presets)


def load_config(path=None, seed=None):
    """Load and validate the preset file; returns a ConfigFile."""
    if path is None:
        text = default_config_path().read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "presets" not in doc:
        raise ConfigError("config must be a mapping with a 'presets' section")
    presets = doc["presets"]
    if not isinstance(presets, dict) or not presets:
        raise ConfigError("'presets' must be a non-empty mapping")
    # Referential completeness: resolve every preset eagerly.
    for name in presets:
        _resolve_preset(presets, name)
    file_seed = doc.get("seed", 0)
    return ConfigFile(presets=presets, seed=seed if seed is not None else file_seed)
