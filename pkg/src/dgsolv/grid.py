"""Regular 3D Cartesian grids, domain masks and field operators.

Fields are plain ``numpy`` arrays of shape ``grid.shape`` indexed ``[i, j, k]``
along x, y, z. Node ``(i, j, k)`` sits at ``origin + h * (i, j, k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mol_io import Molecule

DELTA_REG = 1e-6


@dataclass(frozen=True)
class Grid:
    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")
        if min(self.dims) < 2:
            raise ValueError(f"grid needs at least 2 nodes per axis, got {self.dims}")

    @property
    def h(self) -> float:
        return self.spacing

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.dims

    @property
    def size(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * (np.asarray(self.dims) - 1)

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(
            self.origin[a] + self.spacing * np.arange(self.dims[a]) for a in range(3)
        )

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable x, y, z coordinate arrays (shapes (n,1,1), (1,n,1), (1,1,n))."""
        x, y, z = self.axes()
        return x[:, None, None], y[None, :, None], z[None, None, :]

    def boundary_mask(self) -> np.ndarray:
        b = np.zeros(self.dims, dtype=bool)
        b[0, :, :] = b[-1, :, :] = True
        b[:, 0, :] = b[:, -1, :] = True
        b[:, :, 0] = b[:, :, -1] = True
        return b

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        lo = np.asarray(self.origin) + margin
        hi = self.upper - margin
        return np.all((pts >= lo) & (pts <= hi), axis=1)


def build_grid(m: Molecule, h: float = 0.25, buffer: float = 6.0) -> Grid:
    """Smallest box around every inflated atom, snapped outward to multiples of h.

    Each axis is widened symmetrically about its centre until its length is an
    integer multiple of ``h``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if buffer < 0:
        raise ValueError("buffer must be non-negative")
    pos = m.positions
    reach = m.radii + buffer
    lo = (pos - reach[:, None]).min(axis=0)
    hi = (pos + reach[:, None]).max(axis=0)
    origin = []
    dims = []
    for a in range(3):
        length = hi[a] - lo[a]
        # guard against 62.0000001 -> 63 from round-off in length / h
        n = max(1, math.ceil(length / h - 1e-9))
        centre = 0.5 * (lo[a] + hi[a])
        origin.append(float(centre - 0.5 * n * h))
        dims.append(n + 1)
    return Grid(tuple(origin), float(h), tuple(dims))


def _ball_union(g: Grid, centres: np.ndarray, radii: np.ndarray) -> np.ndarray:
    inside = np.zeros(g.shape, dtype=bool)
    h = g.spacing
    org = np.asarray(g.origin)
    x, y, z = g.axes()
    for c, r in zip(centres, radii):
        # restrict work to the sub-box around each ball
        lo = np.maximum(np.floor((c - r - org) / h).astype(int) - 1, 0)
        hi = np.minimum(np.ceil((c + r - org) / h).astype(int) + 2, g.shape)
        if np.any(hi <= lo):
            continue
        dx = (x[lo[0]:hi[0]] - c[0])[:, None, None]
        dy = (y[lo[1]:hi[1]] - c[1])[None, :, None]
        dz = (z[lo[2]:hi[2]] - c[2])[None, None, :]
        d2 = dx * dx + dy * dy + dz * dz
        inside[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] |= d2 <= r * r
    return inside


def vdw_mask(g: Grid, m: Molecule) -> np.ndarray:
    """Nodes within (closed ball) the van der Waals radius of any atom."""
    return _ball_union(g, m.positions, m.radii)


def extended_mask(g: Grid, m: Molecule, r_probe: float = 1.4) -> np.ndarray:
    return _ball_union(g, m.positions, m.radii + r_probe)


def integrate(f: np.ndarray, h: float) -> float:
    """Composite trapezoid rule over the whole box (face nodes weighted 1/2 per axis)."""
    f = np.asarray(f, dtype=float)
    for _ in range(f.ndim):
        f = f.sum(axis=0) - 0.5 * (f[0] + f[-1])
    return float(f) * h**3


def gradient(f: np.ndarray, h: float) -> list[np.ndarray]:
    """Central differences inside, one-sided first order at the box faces."""
    return np.gradient(f, h, edge_order=1)


def gradient_magnitude(f: np.ndarray, h: float, delta_reg: float = DELTA_REG) -> np.ndarray:
    gx, gy, gz = gradient(f, h)
    return np.sqrt(gx * gx + gy * gy + gz * gz + delta_reg * delta_reg)


def surface_area(S: np.ndarray, h: float) -> float:
    """Area as the integral of |grad S| (coarea identity)."""
    return integrate(gradient_magnitude(S, h, 0.0), h)


def enclosed_volume(S: np.ndarray, h: float) -> float:
    return integrate(S, h)


def smoothed_sphere(g: Grid, centre, radius: float, width: float) -> np.ndarray:
    """Indicator of a ball with a linear ramp of the given width across r = radius.

    Handy for fixtures: S = 1 for r <= radius - width/2, 0 beyond radius + width/2.
    """
    x, y, z = g.coordinates()
    c = np.asarray(centre, dtype=float)
    r = np.sqrt((x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2)
    if width <= 0:
        return (r <= radius).astype(float)
    return np.clip(0.5 - (r - radius) / width, 0.0, 1.0)


def write_field(path, values: np.ndarray, g: Grid) -> None:
    """Dump a field as text: a small header followed by one value per line (C order)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# dims {g.dims[0]} {g.dims[1]} {g.dims[2]}\n")
        fh.write(f"# origin {g.origin[0]!r} {g.origin[1]!r} {g.origin[2]!r}\n")
        fh.write(f"# spacing {g.spacing!r}\n")
        np.savetxt(fh, np.ravel(values), fmt="%.17g")


def read_field(path) -> tuple[np.ndarray, Grid]:
    header = {}
    with open(path, encoding="utf-8") as fh:
        for _ in range(3):
            key, *vals = fh.readline().lstrip("#").split()
            header[key] = vals
        data = np.loadtxt(fh)
    dims = tuple(int(v) for v in header["dims"])
    g = Grid(tuple(float(v) for v in header["origin"]), float(header["spacing"][0]), dims)
    return data.reshape(dims), g
