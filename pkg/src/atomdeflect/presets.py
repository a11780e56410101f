"""Built-in scenarios, named after the figure panels they reproduce.

Stated panel values are used where available. Anything left open (interaction
phase, field amplitudes outside the fig2 set, the free-flight scale) takes
the package defaults documented in the README.
"""
from __future__ import annotations

import copy
import math

import yaml

from .config import DEFAULT_TAIL_TOLERANCE, ScenarioConfig, parse_config

R2 = 1.0 / math.sqrt(2.0)

_QUADRATURE = {"quadrature": {"theta1": 0.0, "chi1": 4.0, "theta2": 0.0, "chi2": 4.0}}
_PHASE = {"phase": {"phi1": 0.0, "phi2": 0.0}}
_FIELD = {"alpha1": 2.0, "alpha2": 2.0}
_RAMAN = {"regime": "raman", "eta1": 1.0, "eta2": 1.0}
# unequal detunings; g02 rescaled so both peak phases stay at 1
_OFF_RESONANT = {"regime": "off_resonant", "tau": 1.0, "delta1": 1.0, "delta2": 1.1}
_OFF_COUPLING = {"g01": 1.0, "g02": math.sqrt(1.1)}
FAR_FIELD_SCALE = 1e-3


def _base(a, b, sigma, interaction, measurement, outputs, coupling=None, **extra):
    cfg = {
        "atom": {"a": a, "b": b},
        "field": dict(_FIELD),
        "interaction": dict(interaction),
        "beam": {"sigma_x": sigma, "sigma_y": sigma},
        "grid": {"n": 201, "n_sigma": 5.0},
        "measurement": copy.deepcopy(measurement),
        "outputs": list(outputs),
        "truncation": {"tail_tolerance": DEFAULT_TAIL_TOLERANCE},
    }
    if coupling:
        cfg["coupling"] = dict(coupling)
    cfg.update(extra)
    return cfg


def _fig2(a, b):
    return _base(a, b, 0.2, _RAMAN, _QUADRATURE, ["position"])


PRESETS: dict[str, dict] = {
    "fig2a": _fig2(-1.0, 0.0),
    "fig2b": _fig2(-R2, R2),
    "fig2c": _fig2(-0.2, 0.98),
    "fig2d": _fig2(0.2, 0.98),
    "fig2e": _fig2(R2, R2),
    "fig2f": _fig2(1.0, 0.0),
    "fig3a": _base(1.0, 0.0, 0.2, _RAMAN, _QUADRATURE, ["position"]),
    "fig3b": _base(1.0, 0.0, 0.2, _RAMAN, _QUADRATURE, ["far_field"],
                   propagation={"fresnel_scale": FAR_FIELD_SCALE}),
    "fig4a": _base(-R2, R2, 0.2, _RAMAN, _QUADRATURE, ["momentum"]),
    "fig4b": _base(R2, R2, 0.2, _RAMAN, _QUADRATURE, ["momentum"]),
    "fig5a": _base(1.0, 0.0, 0.3, _OFF_RESONANT, _PHASE, ["position"], _OFF_COUPLING),
    "fig5b": _base(R2, R2, 0.3, _OFF_RESONANT, _PHASE, ["position"], _OFF_COUPLING),
    "fig6a": _base(1.0, 0.0, 0.3, _RAMAN, _PHASE, ["position"]),
    "fig6b": _base(R2, R2, 0.3, _RAMAN, _PHASE, ["position"]),
}

DESCRIPTIONS = {
    "fig2a": "Raman, quadrature chi=4, a=-1, b=0",
    "fig2b": "Raman, quadrature chi=4, a=-1/sqrt2, b=1/sqrt2",
    "fig2c": "Raman, quadrature chi=4, a=-0.2, b=0.98",
    "fig2d": "Raman, quadrature chi=4, a=0.2, b=0.98",
    "fig2e": "Raman, quadrature chi=4, a=b=1/sqrt2",
    "fig2f": "Raman, quadrature chi=4, a=1, b=0",
    "fig3a": "near field at cavity exit, a=1, b=0",
    "fig3b": "far field after free flight, a=1, b=0",
    "fig4a": "momentum, a=-1/sqrt2, b=1/sqrt2",
    "fig4b": "momentum, a=b=1/sqrt2",
    "fig5a": "off-resonant, phase states phi=0, a=1, b=0, width 0.3",
    "fig5b": "off-resonant, phase states phi=0, a=b=1/sqrt2, width 0.3",
    "fig6a": "Raman, phase states phi=0, a=1, b=0, width 0.3",
    "fig6b": "Raman, phase states phi=0, a=b=1/sqrt2, width 0.3",
}


def preset_config(name: str) -> dict:
    try:
        cfg = copy.deepcopy(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; see `atomdeflect presets`") from None
    cfg["name"] = name
    return cfg


def load_preset(name: str, **overrides) -> ScenarioConfig:
    return parse_config(preset_config(name), **overrides)


def list_presets() -> str:
    lines = []
    for name in PRESETS:
        cfg = PRESETS[name]
        beam = cfg["beam"]["sigma_x"]
        meas = next(iter(cfg["measurement"]))
        lines.append(
            f"{name:6s}  {cfg['interaction']['regime']:12s}  {meas:10s}  "
            f"width={beam:<4g} outputs={','.join(cfg['outputs']):10s}  {DESCRIPTIONS[name]}"
        )
    return "\n".join(lines)


def dump_preset(name: str) -> str:
    return yaml.safe_dump(preset_config(name), sort_keys=False)
