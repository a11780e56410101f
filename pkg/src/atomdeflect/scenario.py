"""Evaluate a scenario and write its data files."""
from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .dynamics import AmplitudeField, amplitudes
from .fockbasis import QuadratureOutcome, coherent_vector
from .measurement import (
    BoundaryMassWarning,
    DistributionGrid,
    Normalization,
    TruncationWarning,
    momentum_from_conditioned,
    orientation,
    phase_weights,
    quadrature_weights,
    check_boundary,
    check_tail,
)
from .propagation import propagate_array

log = logging.getLogger(__name__)


class NumericalGuardError(RuntimeError):
    """A truncation, sampling or aliasing guard failed."""


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    distributions: dict[str, DistributionGrid]

    def summary(self) -> dict:
        out = {}
        for kind, dist in self.distributions.items():
            o = orientation(dist)
            out[kind] = {"mass": dist.mass(), "orientation": o.angle, "isotropic": o.isotropic,
                         "shape": list(dist.values.shape)}
        return out


def build_amplitudes(cfg: ScenarioConfig, threads: int = 1) -> AmplitudeField:
    return amplitudes(cfg.atom, cfg.field, cfg.coupling, cfg.interaction, cfg.beam, cfg.grid,
                      cfg.truncation, materialize=False, threads=threads)


def compute(cfg: ScenarioConfig, *, threads: int = 1,
            normalization: Normalization | str = Normalization.RAW) -> ScenarioResult:
    """All requested distributions for ``cfg``.

    The field projection is applied once; far-field and momentum outputs
    transform the two conditioned channel amplitudes, which by linearity is
    the same as transforming every ``Phi[i, n, m]`` first.
    """
    amps = build_amplitudes(cfg, threads)
    if cfg.measurement_kind == "quadrature":
        w1, w2 = quadrature_weights(amps, cfg.measurement, cfg.measurement2)
    else:
        w1, w2 = phase_weights(amps, cfg.measurement, cfg.measurement2)
    c1 = coherent_vector(cfg.field.alpha1, amps.n_max)
    c2 = coherent_vector(cfg.field.alpha2, amps.m_max)
    check_tail(amps, w1, w2, c1, c2)
    psi = amps.contract(w1, w2)
    grid = cfg.grid

    dists: dict[str, DistributionGrid] = {}
    for kind in cfg.outputs:
        if kind == "position":
            d = DistributionGrid(grid.x, grid.y, np.sum(np.abs(psi) ** 2, axis=0))
            check_boundary(d)
        elif kind == "far_field":
            far, og = propagate_array(psi, grid, cfg.propagation)
            d = DistributionGrid(og.x, og.y, np.sum(np.abs(far) ** 2, axis=0))
            check_boundary(d)
        elif kind == "momentum":
            assert isinstance(cfg.measurement, QuadratureOutcome)
            d = momentum_from_conditioned(psi, grid, pad=cfg.momentum_pad)
        else:  # pragma: no cover - rejected by the config parser
            raise ValueError(kind)
        dists[kind] = d.with_normalization(normalization)
    return ScenarioResult(cfg, dists)


def write_csv(dist: DistributionGrid, path: Path) -> None:
    X, Y = np.meshgrid(dist.x, dist.y, indexing="ij")
    table = np.column_stack([X.ravel(), Y.ravel(), dist.values.ravel()])
    ax, ay = dist.axis_names
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=f"{ax},{ay},value", comments="")


def write_json(dist: DistributionGrid, path: Path, manifest: dict) -> None:
    ax, ay = dist.axis_names
    doc = {
        "manifest": manifest,
        "kind": dist.kind,
        "normalization": dist.normalization.value,
        ax: dist.x.tolist(),
        ay: dist.y.tolist(),
        "values": dist.values.tolist(),
    }
    path.write_text(json.dumps(doc, separators=(",", ":")))


def render_png(dist: DistributionGrid, path: Path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ax_x, ax_y = dist.axis_names
    fig, ax = plt.subplots(figsize=(4.5, 4))
    extent = [dist.x[0], dist.x[-1], dist.y[0], dist.y[-1]]
    # bright = high probability, linear scale
    im = ax.imshow(dist.values.T, origin="lower", extent=extent, cmap="gray", aspect="equal")
    unit = "(lambda_1)" if dist.kind != "momentum" else "(hbar k_1)"
    ax.set_xlabel(f"{ax_x} {unit}")
    ax.set_ylabel(f"{ax_y} {unit}")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def run_scenario(cfg: ScenarioConfig, out_dir: Path | str, *, label: str | None = None,
                 threads: int = 1, normalization: Normalization | str = Normalization.RAW,
                 fmt: str = "csv", png: bool = True) -> list[Path]:
    """Compute ``cfg`` and write ``<out_dir>/<label>/<output>.<ext>`` plus a manifest.

    Numerical guard warnings are escalated to :class:`NumericalGuardError`.
    Data files depend only on the resolved configuration.
    """
    label = label or cfg.digest()
    target = Path(out_dir) / label
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        warnings.simplefilter("error", BoundaryMassWarning)
        try:
            result = compute(cfg, threads=threads, normalization=normalization)
        except (TruncationWarning, BoundaryMassWarning) as e:
            raise NumericalGuardError(str(e)) from e

    target.mkdir(parents=True, exist_ok=True)
    manifest = {
        "package": "atomdeflect",
        "version": __version__,
        "label": label,
        "config_digest": cfg.digest(),
        "normalization": Normalization(normalization).value,
        "parameters": cfg.resolved(),
    }
    written: list[Path] = []
    files = {}
    for kind, dist in result.distributions.items():
        if kind == "momentum":
            dist = dist.crop()
        path = target / f"{kind}.{fmt}"
        if fmt == "csv":
            write_csv(dist, path)
        else:
            write_json(dist, path, manifest)
        files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        written.append(path)
        if png:
            try:
                png_path = target / f"{kind}.png"
                render_png(dist, png_path, f"{label}: {kind}")
                written.append(png_path)
            except Exception as e:  # rendering is best-effort
                log.warning("could not render %s: %s", kind, e)
    manifest["files"] = files
    manifest["summary"] = result.summary()
    mpath = target / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    written.append(mpath)
    return written
