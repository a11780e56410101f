"""Scenario configuration: a small YAML schema mapped onto the domain types."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

import yaml

from .dynamics import (
    AtomSuperposition,
    CouplingField,
    GaussianBeam,
    InteractionParams,
    Regime,
    SpatialGrid,
)
from .fockbasis import (
    FockTruncation,
    PhaseOutcome,
    QuadratureOutcome,
    TwoModeCoherent,
    truncation_for_field,
)
from .propagation import PropagationParams

OUTPUT_KINDS = ("position", "momentum", "far_field")
# small enough that the edge-term guard passes at chi ~ 4, |alpha| ~ 2
DEFAULT_TAIL_TOLERANCE = 1e-16

SCHEMA_DOC = """\
Scenario file (YAML). Complex numbers are a number or a [re, im] pair.

name: str                       # optional label
atom: {a: complex, b: complex}  # normalized on load if |a|^2+|b|^2 != 1
field: {alpha1: complex, alpha2: complex}
coupling: {g01: float, g02: float, k1: float, k2: float}      # all optional
interaction:                    # either peak phases or explicit times/detunings
  regime: raman | off_resonant
  eta1: float, eta2: float      # g0i^2 tau / Delta_i
  tau: float, delta: float, delta1: float, delta2: float
beam: {sigma_x: float, sigma_y: float, center_x: float, center_y: float}
grid: {n: int, n_sigma: float}  # centered on the beam, or explicit:
      {nx, ny, x_min, x_max, y_min, y_max}
measurement:
  quadrature: {theta1, chi1, theta2, chi2}
  # or
  phase: {phi1, phi2}
outputs: [position, momentum, far_field]
propagation: {fresnel_scale: float}   # required for far_field
truncation: {n_max: int} or {tail_tolerance: float}   # default tail 1e-16
momentum_pad: int               # zero padding factor for the momentum FFT
"""


class ConfigError(ValueError):
    pass


def _complex(v: Any, where: str) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        v = complex(float(v[0]), float(v[1]))
    elif isinstance(v, (int, float)) and not isinstance(v, bool):
        v = complex(v)
    elif isinstance(v, str):
        try:
            v = complex(v.replace(" ", ""))
        except ValueError as e:
            raise ConfigError(f"{where}: cannot parse complex value {v!r}") from e
    else:
        raise ConfigError(f"{where}: expected a number or [re, im], got {v!r}")
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise ConfigError(f"{where}: value must be finite")
    return v


def _float(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}: value must be finite")
    return float(v)


def _int(v: Any, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    return v


def _section(cfg: dict, key: str, allowed: set[str], required: bool = True) -> dict:
    sec = cfg.get(key)
    if sec is None:
        if required:
            raise ConfigError(f"missing section '{key}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{key}' must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    return sec


def _jsonable_complex(z: complex) -> float | list[float]:
    return z.real if z.imag == 0 else [z.real, z.imag]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    atom: AtomSuperposition
    field: TwoModeCoherent
    coupling: CouplingField
    interaction: InteractionParams
    beam: GaussianBeam
    grid: SpatialGrid
    measurement: QuadratureOutcome | PhaseOutcome | None
    measurement2: QuadratureOutcome | PhaseOutcome | None
    outputs: tuple[str, ...]
    propagation: PropagationParams | None
    truncation: FockTruncation
    momentum_pad: int = 4

    @property
    def measurement_kind(self) -> str:
        return "quadrature" if isinstance(self.measurement, QuadratureOutcome) else "phase"

    def resolved(self) -> dict:
        """Fully explicit, JSON-serializable parameter record."""
        meas: dict
        if self.measurement_kind == "quadrature":
            meas = {"quadrature": {
                "theta1": self.measurement.theta, "chi1": self.measurement.chi,
                "theta2": self.measurement2.theta, "chi2": self.measurement2.chi,
            }}
        else:
            meas = {"phase": {"phi1": self.measurement.phi, "phi2": self.measurement2.phi}}
        it = self.interaction
        inter = {"regime": it.regime.value, "tau": it.tau}
        if it.regime is Regime.RAMAN:
            inter["delta"] = it.delta
        else:
            inter["delta1"], inter["delta2"] = it.delta1, it.delta2
        out = {
            "name": self.name,
            "atom": {"a": _jsonable_complex(complex(self.atom.a)),
                     "b": _jsonable_complex(complex(self.atom.b))},
            "field": {"alpha1": _jsonable_complex(complex(self.field.alpha1)),
                      "alpha2": _jsonable_complex(complex(self.field.alpha2))},
            "coupling": {"g01": self.coupling.g01, "g02": self.coupling.g02,
                         "k1": self.coupling.k1, "k2": self.coupling.k2},
            "interaction": inter,
            "beam": {"sigma_x": self.beam.sigma_x, "sigma_y": self.beam.sigma_y,
                     "center_x": self.beam.center_x, "center_y": self.beam.center_y},
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny,
                     "x_min": self.grid.x_min, "x_max": self.grid.x_max,
                     "y_min": self.grid.y_min, "y_max": self.grid.y_max},
            "measurement": meas,
            "outputs": list(self.outputs),
            "truncation": {"n_max": self.truncation.n_max,
                           "tail_tolerance": self.truncation.tail_tolerance},
            "momentum_pad": self.momentum_pad,
        }
        if self.propagation is not None:
            out["propagation"] = {"fresnel_scale": self.propagation.fresnel_scale}
        return out

    def digest(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


TOP_KEYS = {"name", "atom", "field", "coupling", "interaction", "beam", "grid",
            "measurement", "outputs", "propagation", "truncation", "momentum_pad"}


def parse_config(cfg: dict, *, grid_points: int | None = None, n_max: int | None = None
                 ) -> ScenarioConfig:
    """Validate a config mapping and build the domain objects.

    ``grid_points`` and ``n_max`` override the file (command-line flags).
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    cfg = copy.deepcopy(cfg)
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    try:
        return _parse(cfg, grid_points, n_max)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def _parse(cfg: dict, grid_points: int | None, n_max: int | None) -> ScenarioConfig:
    name = str(cfg.get("name", "scenario"))

    sec = _section(cfg, "atom", {"a", "b"})
    if set(sec) != {"a", "b"}:
        raise ConfigError("atom: both 'a' and 'b' are required")
    a, b = _complex(sec["a"], "atom.a"), _complex(sec["b"], "atom.b")
    if abs(a) == 0 and abs(b) == 0:
        raise ConfigError("atom: a and b cannot both vanish")
    atom = AtomSuperposition.normalized(a, b)

    sec = _section(cfg, "field", {"alpha1", "alpha2"})
    if set(sec) != {"alpha1", "alpha2"}:
        raise ConfigError("field: both 'alpha1' and 'alpha2' are required")
    field = TwoModeCoherent(_complex(sec["alpha1"], "field.alpha1"),
                            _complex(sec["alpha2"], "field.alpha2"))

    sec = _section(cfg, "coupling", {"g01", "g02", "k1", "k2"}, required=False)
    coupling = CouplingField(**{k: _float(v, f"coupling.{k}") for k, v in sec.items()})

    sec = _section(cfg, "interaction",
                   {"regime", "eta1", "eta2", "tau", "delta", "delta1", "delta2"})
    if "regime" not in sec:
        raise ConfigError("interaction.regime is required")
    try:
        regime = Regime(sec["regime"])
    except ValueError:
        raise ConfigError(f"interaction.regime must be one of {[r.value for r in Regime]}") from None
    nums = {k: _float(v, f"interaction.{k}") for k, v in sec.items() if k != "regime"}
    if "eta1" in nums or "eta2" in nums:
        if {"delta", "delta1", "delta2"} & set(nums):
            raise ConfigError("interaction: give either eta1/eta2 or detunings, not both")
        eta1 = nums.get("eta1", 1.0)
        eta2 = nums.get("eta2", eta1)
        interaction = InteractionParams.from_phases(regime, eta1, eta2, coupling,
                                                    tau=nums.get("tau", 1.0))
    else:
        interaction = InteractionParams(regime, **nums)

    sec = _section(cfg, "beam", {"sigma_x", "sigma_y", "center_x", "center_y"}, required=False)
    beam = GaussianBeam(**{k: _float(v, f"beam.{k}") for k, v in sec.items()})

    sec = _section(cfg, "grid", {"n", "n_sigma", "nx", "ny", "x_min", "x_max", "y_min", "y_max"},
                   required=False)
    explicit = {"nx", "ny", "x_min", "x_max", "y_min", "y_max"}
    if set(sec) & explicit:
        if {"n", "n_sigma"} & set(sec):
            raise ConfigError("grid: mix of beam-relative (n, n_sigma) and explicit bounds")
        missing = explicit - set(sec)
        if missing:
            raise ConfigError(f"grid: missing {sorted(missing)}")
        grid = SpatialGrid(_int(sec["nx"], "grid.nx"), _int(sec["ny"], "grid.ny"),
                           *(_float(sec[k], f"grid.{k}") for k in ("x_min", "x_max", "y_min", "y_max")))
        if grid_points is not None:
            grid = SpatialGrid(grid_points, grid_points, grid.x_min, grid.x_max, grid.y_min, grid.y_max)
    else:
        n = grid_points if grid_points is not None else _int(sec.get("n", 201), "grid.n")
        grid = SpatialGrid.covering(beam, n, _float(sec.get("n_sigma", 5.0), "grid.n_sigma"))
    if not grid.covers(beam, 4.0):
        raise ConfigError("grid must cover at least 4 standard deviations of the beam")

    sec = _section(cfg, "measurement", {"quadrature", "phase"})
    if len(sec) != 1:
        raise ConfigError("measurement: give exactly one of 'quadrature' or 'phase'")
    if "quadrature" in sec:
        q = sec["quadrature"]
        if not isinstance(q, dict) or set(q) - {"theta1", "chi1", "theta2", "chi2"}:
            raise ConfigError("measurement.quadrature: keys are theta1, chi1, theta2, chi2")
        if not {"chi1", "chi2"} <= set(q):
            raise ConfigError("measurement.quadrature: chi1 and chi2 are required")
        m1 = QuadratureOutcome(_float(q.get("theta1", 0.0), "theta1"), _float(q["chi1"], "chi1"))
        m2 = QuadratureOutcome(_float(q.get("theta2", 0.0), "theta2"), _float(q["chi2"], "chi2"))
    else:
        q = sec["phase"] or {}
        if not isinstance(q, dict) or set(q) - {"phi1", "phi2"}:
            raise ConfigError("measurement.phase: keys are phi1, phi2")
        m1 = PhaseOutcome(_float(q.get("phi1", 0.0), "phi1"))
        m2 = PhaseOutcome(_float(q.get("phi2", 0.0), "phi2"))

    outputs = cfg.get("outputs", ["position"])
    if isinstance(outputs, str):
        outputs = [outputs]
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("outputs must be a non-empty list")
    bad = [o for o in outputs if o not in OUTPUT_KINDS]
    if bad:
        raise ConfigError(f"unknown outputs {bad}; choose from {list(OUTPUT_KINDS)}")
    if "momentum" in outputs and not isinstance(m1, QuadratureOutcome):
        raise ConfigError("momentum output is defined for quadrature measurements only")

    sec = _section(cfg, "propagation", {"fresnel_scale"}, required="far_field" in outputs)
    propagation = (PropagationParams(_float(sec["fresnel_scale"], "propagation.fresnel_scale"))
                   if sec else None)
    if "far_field" in outputs and propagation is None:
        raise ConfigError("far_field output needs propagation.fresnel_scale")

    sec = _section(cfg, "truncation", {"n_max", "tail_tolerance"}, required=False)
    tol = _float(sec.get("tail_tolerance", DEFAULT_TAIL_TOLERANCE), "truncation.tail_tolerance")
    if n_max is not None:
        trunc = FockTruncation(n_max, tol)
    elif "n_max" in sec:
        trunc = FockTruncation(_int(sec["n_max"], "truncation.n_max"), tol)
    else:
        trunc = truncation_for_field(field, tol)

    pad = _int(cfg.get("momentum_pad", 4), "momentum_pad")
    if pad < 1:
        raise ConfigError("momentum_pad must be >= 1")

    return ScenarioConfig(name, atom, field, coupling, interaction, beam, grid, m1, m2,
                          tuple(outputs), propagation, trunc, pad)


def load_config_file(path, **overrides) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    return parse_config(data, **overrides)
