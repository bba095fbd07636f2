from functools import lru_cache
import os
import threading

import yaml

from . import exceptions
from .fns import maybe


__all__ = (
    "DEFAULTS",
    "ACCEPTANCE_DEFAULTS",
    "SpectraSettings",
    "SettingsMixin",
    "get_global_settings",
    "read_settings_file",
)

MYPY = False
if MYPY:
    from typing import Any, Dict, Optional


SETTINGS_ENV = "TODA_SPECTRA_SETTINGS"

DEFAULTS = {
    # quadrature
    "quad_tol": 1e-11,
    "min_nodes": 16,
    "max_nodes": 2 ** 16,
    # Toda spectrum
    "degeneracy_eps": 1e-11,
    "boundary_eps": 1e-12,
    "xtol": 1e-13,
    "polish_steps": 3,
    "bracket_refinements": 8,
    "series_order": 32,
    "narrow_gap_ratio": 0.25,
    "noise_floor": 1e-15,
    # Hill / KdV
    "hill_n_base": 256,
    "hill_probe_tol": 1e-11,
    "hill_max_doublings": 4,
    "hill_degeneracy_eps": 1e-9,
    "hill_excess_floor": 1e-10,
    "K": 16,
    "K_sigma": 16,
    "n_max": 8,
    "newton_tol": 1e-12,
    "newton_max_iter": 50,
    "tail_tol": 1e-12,
    # sweeps
    "eta_freq": 1.0 / 3.0,
    "eta_action": 0.45,
}  # type: Dict[str, Any]

ACCEPTANCE_DEFAULTS = {
    "equilibrium": 1e-9,
    "eigen_abs": 1e-10,
    "spectrum_slope": -0.3,
    "actions_rel": 0.05,
    "frequencies_rel": 0.10,
    "bulk_ratio": 1e-2,
    "symmetry": 1e-9,
    "cross_actions": 1e-8,
    "cross_frequencies": 1e-6,
}  # type: Dict[str, float]


def read_settings_file(path):
    # type: (str) -> Dict[str, Any]
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise exceptions.ConfigError("cannot read settings file {}: {}".format(path, e))
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise exceptions.ConfigError(
            "invalid settings file {}".format(path),
            line=mark.line + 1 if mark else None,
            column=mark.column + 1 if mark else None,
        )
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise exceptions.ConfigError("settings file {} must hold a mapping".format(path))
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise exceptions.ConfigError("unknown setting in {}".format(path), key=unknown[0])
    return data


@lru_cache(maxsize=1)
def get_global_settings():
    # type: () -> GlobalSettings
    return GlobalSettings(os.environ.get(SETTINGS_ENV))


class GlobalSettings:
    def __init__(self, path=None):
        # type: (Optional[str]) -> None
        self._settings = dict(DEFAULTS)
        if path:
            self._settings.update(read_settings_file(path))
        self._cache = {}  # type: Dict[str, Any]
        self._lock = threading.Lock()

    def get(self, name, default=None):
        try:
            return self._cache[name]
        except KeyError:
            self._cache[name] = current_value = self._settings.get(name, default)
            return current_value

    def set(self, name, value):
        with self._lock:
            self._settings[name] = value
            self._on_update()

    def _on_update(self):
        self._cache.clear()


class SpectraSettings:
    """Per-run overrides layered over the global settings."""

    def __init__(self, overrides=None):
        # type: (Optional[Dict[str, Any]]) -> None
        self._overrides = dict(overrides or {})
        self._global_settings = get_global_settings()

    def get(self, key, default=None):
        try:
            return self._overrides[key]
        except KeyError:
            return self._global_settings.get(key, default)

    def __getitem__(self, key):
        # type: (str) -> Any
        value = self.get(key)
        if value is None:
            raise KeyError(key)
        return value

    def set(self, key, value):
        self._overrides[key] = value

    def fingerprint(self):
        # type: () -> tuple
        """Hashable summary of the overrides, for memo keys."""
        return tuple(sorted((key, repr(value)) for key, value in self._overrides.items()))

    def copy(self):
        # type: () -> SpectraSettings
        return SpectraSettings(self._overrides)


class SettingsMixin:
    _spectra_settings = None  # type: Optional[SpectraSettings]

    @property
    def spectra_settings(self):
        # type: () -> SpectraSettings
        if not self._spectra_settings:
            overrides = maybe(lambda: self.settings_overrides())  # type: ignore[attr-defined]
            self._spectra_settings = SpectraSettings(overrides)
        return self._spectra_settings


def settings_or_default(settings=None):
    # type: (Optional[SpectraSettings]) -> SpectraSettings
    return settings if settings is not None else SpectraSettings()
