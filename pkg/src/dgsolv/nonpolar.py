"""Solvent-solute Lennard-Jones field, per-type LJ features and the nonpolar energy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, enclosed_volume, integrate, surface_area
from .mol_io import Molecule
from .params import ParameterSet


@dataclass(frozen=True)
class LjConfig:
    solvent_radius: float = 3.0
    cutoff: float = 20.0
    clamp_fraction: float = 0.8

    def __post_init__(self):
        if not self.solvent_radius > 0:
            raise ConfigurationError("solvent radius must be positive")
        if not 0 < self.clamp_fraction < 1:
            raise ConfigurationError("clamp fraction must lie in (0, 1)")
        if not self.cutoff > self.solvent_radius:
            raise ConfigurationError("cutoff must exceed the solvent radius")


def lj_kernel(r, sigma: float, cfg: LjConfig = LjConfig()):
    """(sigma/r)^12 - 2 (sigma/r)^6, core-clamped and truncated at the cutoff."""
    r = np.asarray(r, dtype=float)
    rc = np.maximum(r, cfg.clamp_fraction * sigma)
    s6 = (sigma / rc) ** 6
    out = np.where(r < cfg.cutoff, s6 * s6 - 2.0 * s6, 0.0)
    return out if out.ndim else float(out)


def lj_type_fields(m: Molecule, g: Grid, vdw: np.ndarray,
                   cfg: LjConfig = LjConfig()) -> dict[str, np.ndarray]:
    """Per-type summed kernel fields, zero on van der Waals nodes."""
    x, y, z = g.coordinates()
    fields: dict[str, np.ndarray] = {}
    for a in m.atoms:
        px, py, pz = a.position
        r = np.sqrt((x - px) ** 2 + (y - py) ** 2 + (z - pz) ** 2)
        k = lj_kernel(r, cfg.solvent_radius + a.radius, cfg)
        if a.type_label in fields:
            fields[a.type_label] += k
        else:
            fields[a.type_label] = k
    for k in fields.values():
        k[vdw] = 0.0
    return fields


def lj_type_integral(m: Molecule, label: str, S: np.ndarray, g: Grid, vdw: np.ndarray,
                     cfg: LjConfig = LjConfig(), fields=None) -> float:
    """Integral of (1 - S) times the type's kernel sum over non-vdW nodes (A^3)."""
    fields = lj_type_fields(m, g, vdw, cfg) if fields is None else fields
    if label not in fields:
        return 0.0
    return integrate((1.0 - S) * fields[label], g.spacing)


def lj_features(m: Molecule, S: np.ndarray, g: Grid, vdw: np.ndarray,
                cfg: LjConfig = LjConfig(), fields=None) -> dict[str, float]:
    fields = lj_type_fields(m, g, vdw, cfg) if fields is None else fields
    return {lab: integrate((1.0 - S) * f, g.spacing) for lab, f in fields.items()}


def lj_field(m: Molecule, P: ParameterSet, g: Grid, vdw: np.ndarray,
             cfg: LjConfig = LjConfig(), fields=None) -> np.ndarray:
    """Solvent-solute LJ potential U = sum_j eps_j * K_j, kcal/(mol A^3)."""
    fields = lj_type_fields(m, g, vdw, cfg) if fields is None else fields
    missing = set(fields) - set(P.type_labels)
    if missing:
        raise ConfigurationError(f"parameter set lacks well depths for {sorted(missing)}")
    U = np.zeros(g.shape)
    for lab in sorted(fields):
        U += P.well_depth(lab) * fields[lab]
    return U


def nonpolar_energy(S: np.ndarray, h: float, gamma: float, pressure: float,
                    U: np.ndarray | float = 0.0) -> float:
    return (
        gamma * surface_area(S, h)
        + pressure * enclosed_volume(S, h)
        + integrate((1.0 - S) * U, h)
    )
