"""Resonance widths of a two-level semiclassical tunnelling model."""

from ._core import (
    CacheError,
    InputError,
    Model,
    ModelParams,
    NumericalError,
    action,
    config_canonical,
    config_fingerprint,
    default_theta,
    fit_checks,
    fit_width,
    phi2,
    radial_oracle,
    resonance,
    weber,
    weber_checks,
)

__all__ = [
    "CacheError",
    "InputError",
    "Model",
    "ModelParams",
    "NumericalError",
    "action",
    "config_canonical",
    "config_fingerprint",
    "default_theta",
    "fit_checks",
    "fit_width",
    "phi2",
    "radial_oracle",
    "resonance",
    "weber",
    "weber_checks",
]
