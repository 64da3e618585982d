"""Self-consistent coupling of surface evolution and electrostatics."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .electrostatics import (
    PbConfig,
    coupling_potential,
    dh_boundary,
    dielectric_map,
    reaction_field_energy,
    solve_gpb,
    spread_charges,
)
from .errors import ConfigurationError, NonConvergenceError
from .grid import Grid, build_grid, enclosed_volume, extended_mask, surface_area, vdw_mask
from .mol_io import Molecule
from .nonpolar import LjConfig, lj_features, lj_field, lj_type_fields, nonpolar_energy
from .params import ParameterSet
from .surface import EvolveTrace, LbConfig, SurfaceMasks, evolve_surface, init_surface

log = logging.getLogger(__name__)

Mode = Literal["auxiliary", "full"]


@dataclass(frozen=True)
class ScfConfig:
    mode: Mode = "full"
    energy_tol: float = 0.01
    max_outer: int = 50
    grid_spacing: float = 0.25
    buffer: float = 6.0
    probe_radius: float = 1.4
    lb: LbConfig = field(default_factory=LbConfig)
    pb: PbConfig = field(default_factory=PbConfig)
    lj: LjConfig = field(default_factory=LjConfig)

    def __post_init__(self):
        if self.mode not in ("auxiliary", "full"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.energy_tol <= 0:
            raise ConfigurationError("energy tolerance must be positive")
        if self.max_outer < 1:
            raise ConfigurationError("max_outer must be at least 1")


@dataclass
class ScfResult:
    name: str
    grid: Grid
    S: np.ndarray
    phi: np.ndarray
    phi_h: np.ndarray
    dG_polar: float
    area: float
    volume: float
    lj: dict[str, float]
    G_nonpolar: float
    outer_iterations: int
    trace: list[tuple[float, float, float]]

    @property
    def dG_total(self) -> float:
        return self.dG_polar + self.G_nonpolar

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dG_polar": self.dG_polar,
            "area": self.area,
            "volume": self.volume,
            "lj": dict(self.lj),
            "G_nonpolar": self.G_nonpolar,
            "dG_total": self.dG_total,
            "outer_iterations": self.outer_iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def trace_csv(self) -> str:
        rows = ["iteration,dG_polar,area,volume"]
        rows += [f"{i},{dg!r},{a!r},{v!r}" for i, (dg, a, v) in enumerate(self.trace)]
        return "\n".join(rows) + "\n"


def assemble_Ve(mode: Mode, pressure: float, U, phi: np.ndarray, h: float,
                pb: PbConfig) -> np.ndarray:
    v = coupling_potential(phi, h, pb)
    if mode == "auxiliary":
        return v
    return v - pressure + U


def run_scf(m: Molecule, P: ParameterSet, cfg: ScfConfig = ScfConfig()) -> ScfResult:
    """Alternate surface relaxation and GPB solves until the polar energy settles.

    The homogeneous reference potential does not depend on S and is solved
    once. An initial GPB solve on the starting surface supplies the first
    dielectric force.
    """
    P.check_feasible()
    g = build_grid(m, cfg.grid_spacing, cfg.buffer)
    h = g.spacing
    vdw = vdw_mask(g, m)
    masks = SurfaceMasks.for_grid(g, vdw)
    S = init_surface(extended_mask(g, m, cfg.probe_radius))
    lb = replace(cfg.lb, gamma=P.gamma)
    pb = cfg.pb

    kernels = lj_type_fields(m, g, vdw, cfg.lj)
    U = lj_field(m, P, g, vdw, cfg.lj, kernels) if cfg.mode == "full" else 0.0

    rho = spread_charges(m, g)
    charged = bool(np.any(rho))
    if charged:
        phi_h = solve_gpb(np.full(g.shape, pb.eps_solute), rho,
                          dh_boundary(m, g, pb, pb.eps_solute), g, pb)
        bc = dh_boundary(m, g, pb)
        phi = solve_gpb(dielectric_map(S, pb), rho, bc, g, pb, S=S)
        dG = reaction_field_energy(phi, phi_h, m, g)
    else:
        phi_h = phi = np.zeros(g.shape)
        dG = 0.0

    trace = [(dG, surface_area(S, h), enclosed_volume(S, h))]
    for it in range(1, cfg.max_outer + 1):
        v_e = assemble_Ve(cfg.mode, P.pressure, U, phi, h, pb)
        S = evolve_surface(S, lb, v_e, masks, h, EvolveTrace())
        if charged:
            phi = solve_gpb(dielectric_map(S, pb), rho, bc, g, pb, S=S, x0=phi)
            dG_new = reaction_field_energy(phi, phi_h, m, g)
        else:
            dG_new = 0.0
        trace.append((dG_new, surface_area(S, h), enclosed_volume(S, h)))
        log.debug("%s outer %d: dG_polar=%.5f", m.name, it, dG_new)
        converged = abs(dG_new - dG) < cfg.energy_tol
        dG = dG_new
        if converged:
            break
    else:
        raise NonConvergenceError(
            f"{m.name}: polar energy not converged after {cfg.max_outer} outer iterations",
            trace=trace,
        )

    area, vol = trace[-1][1], trace[-1][2]
    feats = lj_features(m, S, g, vdw, cfg.lj, kernels)
    U_np = lj_field(m, P, g, vdw, cfg.lj, kernels)
    G_np = nonpolar_energy(S, h, P.gamma, P.pressure, U_np)
    return ScfResult(m.name, g, S, phi, phi_h, dG, area, vol, feats, G_np, it, trace)
