"""Molecule structure files and dataset manifests.

Structure files carry one atom per line::

    name x y z charge radius type_label

Blank lines and lines starting with ``#`` are ignored. Manifests are CSV
files with header ``name,structure_file,dG_exp``; structure paths are
resolved relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DuplicateEntryError, EmptyMoleculeError, ParseError, TypingError

# label -> (type index, radius in Angstrom)
DEFAULT_TYPE_TABLE: dict[str, tuple[int, float]] = {
    "H": (0, 1.2),
    "C": (1, 1.7),
    "O": (2, 1.5),
}


@dataclass(frozen=True)
class Atom:
    name: str
    position: tuple[float, float, float]
    charge: float
    radius: float
    type_label: str
    type_index: int = 0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"atom {self.name}: radius must be positive, got {self.radius}")
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"atom {self.name}: non-finite position {self.position}")


@dataclass(frozen=True)
class Molecule:
    name: str
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not self.atoms:
            raise EmptyMoleculeError(f"molecule {self.name!r} has no atoms")

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float)

    @property
    def charges(self) -> np.ndarray:
        return np.array([a.charge for a in self.atoms], dtype=float)

    @property
    def radii(self) -> np.ndarray:
        return np.array([a.radius for a in self.atoms], dtype=float)

    @property
    def type_indices(self) -> np.ndarray:
        return np.array([a.type_index for a in self.atoms], dtype=int)

    @property
    def n_types(self) -> int:
        return int(self.type_indices.max()) + 1

    def type_radii(self) -> np.ndarray:
        """Radius of each atom type, indexed by type_index."""
        out = np.zeros(self.n_types)
        for a in self.atoms:
            out[a.type_index] = a.radius
        return out

    def translated(self, shift) -> "Molecule":
        shift = np.asarray(shift, dtype=float)
        atoms = tuple(
            replace(a, position=tuple(float(v) for v in np.asarray(a.position) + shift))
            for a in self.atoms
        )
        return replace(self, atoms=atoms)


@dataclass
class Dataset:
    entries: list[tuple[Molecule, float]] = field(default_factory=list)
    family_label: str = ""

    def __post_init__(self):
        seen = set()
        for mol, dg in self.entries:
            if mol.name in seen:
                raise DuplicateEntryError(f"duplicate molecule name {mol.name!r}")
            seen.add(mol.name)
            if not math.isfinite(dg):
                raise ValueError(f"{mol.name}: experimental value is not finite")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [m.name for m, _ in self.entries]

    @property
    def molecules(self) -> list[Molecule]:
        return [m for m, _ in self.entries]

    @property
    def dg_exp(self) -> np.ndarray:
        return np.array([dg for _, dg in self.entries], dtype=float)

    def subset(self, names) -> "Dataset":
        wanted = set(names)
        return Dataset([e for e in self.entries if e[0].name in wanted], self.family_label)


def parse_molecule(text: str, name: str = "molecule") -> Molecule:
    """Parse structure-file text into a Molecule.

    Atoms get type indices in order of first appearance of their label;
    use :func:`assign_type_indices` to apply a fixed type table.
    """
    atoms = []
    label_index: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ParseError(f"expected 7 fields, got {len(fields)}: {raw!r}", lineno)
        aname, *nums, label = fields
        try:
            x, y, z, q, r = (float(v) for v in nums)
        except ValueError:
            raise ParseError(f"non-numeric field in {raw!r}", lineno) from None
        if not all(math.isfinite(v) for v in (x, y, z, q, r)):
            raise ParseError(f"non-finite field in {raw!r}", lineno)
        if r <= 0:
            raise ParseError(f"radius must be positive in {raw!r}", lineno)
        idx = label_index.setdefault(label, len(label_index))
        atoms.append(Atom(aname, (x, y, z), q, r, label, idx))
    if not atoms:
        raise EmptyMoleculeError(f"molecule {name!r} has no atoms")
    return Molecule(name, tuple(atoms))


def format_molecule(m: Molecule) -> str:
    lines = [f"# {m.name}"]
    for a in m.atoms:
        x, y, z = a.position
        lines.append(f"{a.name} {x!r} {y!r} {z!r} {a.charge!r} {a.radius!r} {a.type_label}")
    return "\n".join(lines) + "\n"


def read_molecule(path, name: str | None = None) -> Molecule:
    path = Path(path)
    return parse_molecule(path.read_text(encoding="utf-8"), name or path.stem)


def assign_type_indices(
    m: Molecule, table: Mapping[str, tuple[int, float]] | None = None
) -> Molecule:
    """Apply a label -> (index, radius) table.

    Indices are compacted to ``0..N_T-1`` over the labels actually used,
    ordered by the table index, so N_T equals the number of distinct labels.
    """
    table = DEFAULT_TYPE_TABLE if table is None else table
    used = []
    for a in m.atoms:
        if a.type_label not in table:
            raise TypingError(a.type_label)
        if a.type_label not in used:
            used.append(a.type_label)
    order = sorted(used, key=lambda lab: table[lab][0])
    compact = {lab: i for i, lab in enumerate(order)}
    atoms = tuple(
        replace(a, type_index=compact[a.type_label], radius=float(table[a.type_label][1]))
        for a in m.atoms
    )
    return replace(m, atoms=atoms)


def read_type_table(path) -> dict[str, tuple[int, float]]:
    """Read a type table CSV with header ``label,index,radius``."""
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            table[row["label"].strip()] = (int(row["index"]), float(row["radius"]))
    return table


def parse_dataset(manifest: str, base_path, family_label: str = "") -> Dataset:
    base_path = Path(base_path)
    entries = []
    seen = set()
    reader = csv.DictReader(io.StringIO(manifest))
    for row in reader:
        name = row["name"].strip()
        if name in seen:
            raise DuplicateEntryError(f"duplicate molecule name {name!r} in manifest")
        seen.add(name)
        path = base_path / row["structure_file"].strip()
        if not path.is_file():
            raise FileNotFoundError(f"structure file not found: {path}")
        mol = read_molecule(path, name)
        entries.append((mol, float(row["dG_exp"])))
    return Dataset(entries, family_label)


def read_dataset(path, family_label: str | None = None) -> Dataset:
    path = Path(path)
    return parse_dataset(
        path.read_text(encoding="utf-8"), path.parent, family_label or path.stem
    )
