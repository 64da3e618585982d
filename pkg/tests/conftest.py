from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from dgsolv.mol_io import Dataset, assign_type_indices, parse_molecule
from dgsolv.params import ParameterSet
from dgsolv.scf import ScfConfig

DATA = Path(__file__).parent / "data"


def make_molecule(name, records):
    """records: (atom, x, y, z, q, label); radii come from the default type table."""
    text = "\n".join(f"{a} {x} {y} {z} {q} 1.0 {t}" for a, x, y, z, q, t in records)
    return assign_type_indices(parse_molecule(text, name))


# Small H/C/O "molecules" for end-to-end fitting checks. Geometries are only
# roughly chemical; what matters is that areas, volumes, charges and type
# mixes vary enough across the set to make the features well conditioned.
FAMILY = [
    ("methane", [("C", 0, 0, 0, -0.2, "C"), ("H1", 1.0, 0, 0, 0.2, "H")]),
    ("ethane", [("C1", 0, 0, 0, -0.1, "C"), ("C2", 1.5, 0, 0, -0.1, "C"), ("H", 2.2, 0.8, 0, 0.2, "H")]),
    ("methanol", [("C", 0, 0, 0, 0.1, "C"), ("O", 1.4, 0, 0, -0.6, "O"), ("H", 1.9, 0.9, 0, 0.5, "H")]),
    ("water", [("O", 0, 0, 0, -0.8, "O"), ("H1", 0.96, 0, 0, 0.4, "H"), ("H2", -0.24, 0.93, 0, 0.4, "H")]),
    ("ethanol", [("C1", 0, 0, 0, -0.1, "C"), ("C2", 1.5, 0, 0, 0.1, "C"),
                 ("O", 2.0, 1.3, 0, -0.6, "O"), ("H", 2.9, 1.4, 0, 0.6, "H")]),
    ("propane", [("C1", 0, 0, 0, -0.05, "C"), ("C2", 1.5, 0, 0, 0.0, "C"),
                 ("C3", 2.1, 1.4, 0, -0.05, "C"), ("H", -0.6, -0.9, 0, 0.1, "H")]),
    ("dme", [("C1", 0, 0, 0, 0.2, "C"), ("O", 1.4, 0, 0, -0.4, "O"), ("C2", 2.0, 1.3, 0, 0.2, "C")]),
    ("formald", [("C", 0, 0, 0, 0.4, "C"), ("O", 1.2, 0, 0, -0.5, "O"), ("H", -0.6, 0.9, 0, 0.1, "H")]),
    ("butane", [("C1", 0, 0, 0, -0.05, "C"), ("C2", 1.5, 0, 0, 0.05, "C"),
                ("C3", 2.1, 1.4, 0, 0.05, "C"), ("C4", 3.6, 1.4, 0, -0.05, "C")]),
    ("acetone", [("C1", 0, 0, 0, 0.5, "C"), ("O", 1.2, 0, 0, -0.5, "O"),
                 ("C2", -0.8, 1.3, 0, -0.1, "C"), ("H", -0.8, -1.2, 0, 0.1, "H")]),
    ("peroxide", [("O1", 0, 0, 0, -0.4, "O"), ("O2", 1.45, 0, 0, -0.4, "O"),
                  ("H1", -0.3, 0.9, 0, 0.4, "H"), ("H2", 1.75, -0.9, 0, 0.4, "H")]),
    ("aminelike", [("C", 0, 0, 0, 0.3, "C"), ("H1", 1.0, 0.3, 0, -0.1, "H"),
                   ("H2", -0.4, 1.0, 0, -0.1, "H"), ("H3", -0.4, -0.5, 0.9, -0.1, "H")]),
]

# Ground-truth parameters for the synthetic family (feasible: 0.005 <= 0.1*0.08).
P_TRUE = ParameterSet(0.08, 0.005, (0.002, -0.003, -0.004), ("H", "C", "O"))
COARSE = ScfConfig(grid_spacing=0.5, buffer=4.0)
NOISE_SEED = 0
NOISE_SIGMA = 0.1


def family_molecules(n=None):
    return [make_molecule(name, recs) for name, recs in FAMILY[:n]]


def synthetic_dataset(runner, n=None, seed=NOISE_SEED, sigma=NOISE_SIGMA, cfg=COARSE):
    """Energies from full-model SCF at P_TRUE plus Gaussian noise."""
    mols = family_molecules(n)
    rng = np.random.default_rng(seed)
    entries = [(m, runner(m, P_TRUE, cfg).dG_total + rng.normal(0.0, sigma)) for m in mols]
    return Dataset(entries, "synthetic")


def read_table(name):
    with open(DATA / name, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def water():
    return make_molecule("water", FAMILY[3][1])


@pytest.fixture(scope="session")
def shared_runner():
    from dgsolv.harness import CachedRunner

    return CachedRunner()
