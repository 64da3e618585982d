"""Pure-water generalized Poisson-Boltzmann electrostatics on a smooth dielectric.

Potentials are in kcal/(mol e), charges in e, lengths in Angstrom. The field
equation solved is

    -div(eps grad Phi) = 4 pi k_c S rho

with ``k_c`` the Coulomb constant, so that a point charge in a uniform medium
gives ``Phi = k_c Q / (eps r)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import bicgstab

from .errors import ConfigurationError, DomainError, NonConvergenceError
from .grid import Grid, gradient
from .mol_io import Molecule

log = logging.getLogger(__name__)

COULOMB_CONST = 332.0637


@dataclass(frozen=True)
class PbConfig:
    eps_solute: float = 1.0
    eps_solvent: float = 80.0
    kappa: float = 0.0
    coulomb_const: float = COULOMB_CONST
    tol: float = 1e-8
    max_iter: int = 20_000

    def __post_init__(self):
        if not 0 < self.eps_solute <= self.eps_solvent:
            raise ConfigurationError("need 0 < eps_solute <= eps_solvent")
        if self.kappa < 0:
            raise ConfigurationError("screening parameter must be non-negative")
        if not self.tol > 0:
            raise ConfigurationError("solver tolerance must be positive")


def dielectric_map(S: np.ndarray, cfg: PbConfig) -> np.ndarray:
    return (1.0 - S) * cfg.eps_solvent + S * cfg.eps_solute


def _locate(g: Grid, point) -> tuple[np.ndarray, np.ndarray]:
    """Lower-corner cell index and fractional offsets of ``point``."""
    rel = (np.asarray(point, dtype=float) - np.asarray(g.origin)) / g.spacing
    dims = np.asarray(g.dims)
    if np.any(rel < -1e-9) or np.any(rel > dims - 1 + 1e-9):
        raise DomainError(f"point {tuple(point)} lies outside the grid")
    rel = np.clip(rel, 0.0, dims - 1)
    idx = np.minimum(np.floor(rel).astype(int), dims - 2)
    return idx, rel - idx


def _trilinear_weights(frac):
    fx, fy, fz = frac
    for di in (0, 1):
        wx = fx if di else 1.0 - fx
        for dj in (0, 1):
            wy = fy if dj else 1.0 - fy
            for dk in (0, 1):
                wz = fz if dk else 1.0 - fz
                yield (di, dj, dk), wx * wy * wz


def spread_charges(m: Molecule, g: Grid) -> np.ndarray:
    """Charge density (e per cubic Angstrom) with trilinear weights."""
    rho = np.zeros(g.shape)
    inv_vol = 1.0 / g.cell_volume
    for pos, q in zip(m.positions, m.charges):
        idx, frac = _locate(g, pos)
        for (di, dj, dk), w in _trilinear_weights(frac):
            rho[idx[0] + di, idx[1] + dj, idx[2] + dk] += q * w * inv_vol
    return rho


def interpolate(f: np.ndarray, g: Grid, point) -> float:
    idx, frac = _locate(g, point)
    return float(sum(
        w * f[idx[0] + di, idx[1] + dj, idx[2] + dk]
        for (di, dj, dk), w in _trilinear_weights(frac)
    ))


def dh_boundary(m: Molecule, g: Grid, cfg: PbConfig, eps: float | None = None) -> np.ndarray:
    """Screened-Coulomb Dirichlet values on the six box faces.

    Returns a full-size array that is zero on interior nodes. ``eps`` defaults
    to the solvent dielectric; pass the solute dielectric for the homogeneous
    reference problem.
    """
    eps = cfg.eps_solvent if eps is None else eps
    bmask = np.zeros(g.shape, dtype=bool)
    bmask[[0, -1], :, :] = True
    bmask[:, [0, -1], :] = True
    bmask[:, :, [0, -1]] = True
    nodes = np.nonzero(bmask)
    org = np.asarray(g.origin)
    coords = [org[a] + g.spacing * nodes[a] for a in range(3)]
    vals = np.zeros(len(nodes[0]))
    for pos, q in zip(m.positions, m.charges):
        r = np.sqrt(sum((coords[a] - pos[a]) ** 2 for a in range(3)))
        if np.any(r < 1e-12):
            raise DomainError(f"atom at {tuple(pos)} coincides with a boundary node")
        if q == 0.0:
            continue
        vals += cfg.coulomb_const * q / (eps * r) * np.exp(-cfg.kappa * r)
    out = np.zeros(g.shape)
    out[nodes] = vals
    return out


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def assemble_operator(eps: np.ndarray, h: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """7-point matrix for -div(eps grad .) on interior nodes, scaled by h^2.

    Face coefficients are harmonic means of the adjacent node values. Also
    returns the (interior-shape) face coefficients needed to move Dirichlet
    values to the right-hand side, packed as (axis, side) -> array.
    """
    shape = tuple(n - 2 for n in eps.shape)
    n = int(np.prod(shape))
    c = eps[1:-1, 1:-1, 1:-1]
    faces = {}
    sl = {-1: slice(0, -2), 1: slice(2, None)}
    for axis in range(3):
        for side in (-1, 1):
            idx = [slice(1, -1)] * 3
            idx[axis] = sl[side]
            faces[(axis, side)] = _harmonic(c, eps[tuple(idx)])
    diag = sum(faces.values())
    index = np.arange(n).reshape(shape)
    rows = [index.ravel()]
    cols = [index.ravel()]
    vals = [diag.ravel()]
    for (axis, side), coef in faces.items():
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        if side == 1:
            src[axis], dst[axis] = slice(0, -1), slice(1, None)
        else:
            src[axis], dst[axis] = slice(1, None), slice(0, -1)
        rows.append(index[tuple(src)].ravel())
        cols.append(index[tuple(dst)].ravel())
        vals.append(-coef[tuple(src)].ravel())
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return A, faces


def solve_elliptic(eps: np.ndarray, source: np.ndarray, bc: np.ndarray, h: float,
                   tol: float = 1e-8, max_iter: int = 20_000,
                   x0: np.ndarray | None = None) -> np.ndarray:
    """Solve -div(eps grad u) = source with Dirichlet values ``bc`` on the box faces.

    BiCGSTAB with Jacobi preconditioning; converged when the residual 2-norm
    drops below ``tol`` times the right-hand-side norm.
    """
    if np.min(eps) <= 0:
        raise ConfigurationError("permittivity must be positive everywhere")
    A, faces = assemble_operator(eps, h)
    rhs = h * h * source[1:-1, 1:-1, 1:-1].copy()
    # Dirichlet neighbours of the first/last interior layer
    for (axis, side), coef in faces.items():
        layer = [slice(None)] * 3
        bidx = [slice(1, -1)] * 3
        if side == 1:
            layer[axis], bidx[axis] = -1, -1
        else:
            layer[axis], bidx[axis] = 0, 0
        rhs[tuple(layer)] += coef[tuple(layer)] * bc[tuple(bidx)]
    b = rhs.ravel()
    bnorm = np.linalg.norm(b)
    out = np.array(bc, dtype=float, copy=True)
    out[1:-1, 1:-1, 1:-1] = 0.0
    if bnorm == 0.0:
        return out
    dinv = 1.0 / A.diagonal()
    M = sp.diags(dinv)
    guess = None if x0 is None else x0[1:-1, 1:-1, 1:-1].ravel()
    x, info = bicgstab(A, b, x0=guess, rtol=tol, atol=0.0, maxiter=max_iter, M=M)
    res = np.linalg.norm(b - A @ x)
    if info != 0 or res > tol * bnorm * (1 + 1e-6):
        raise NonConvergenceError(
            f"linear solver stopped with relative residual {res / bnorm:.3e}",
            residual=res / bnorm, info=info,
        )
    out[1:-1, 1:-1, 1:-1] = x.reshape(tuple(s - 2 for s in eps.shape))
    return out


def solve_gpb(eps: np.ndarray, rho: np.ndarray, bc: np.ndarray, g: Grid, cfg: PbConfig,
              S: np.ndarray | None = None, x0: np.ndarray | None = None) -> np.ndarray:
    """Electrostatic potential for charge density ``rho`` (source scaled by S if given)."""
    src = rho if S is None else S * rho
    src = 4.0 * math.pi * cfg.coulomb_const * src
    return solve_elliptic(eps, src, bc, g.spacing, cfg.tol, cfg.max_iter, x0)


def reaction_field_energy(phi: np.ndarray, phi_h: np.ndarray, m: Molecule, g: Grid) -> float:
    diff = phi - phi_h
    return 0.5 * sum(q * interpolate(diff, g, pos) for pos, q in zip(m.positions, m.charges))


def coupling_potential(phi: np.ndarray, h: float, cfg: PbConfig) -> np.ndarray:
    """Dielectric force density (eps_m - eps_s)|grad Phi|^2 / (8 pi k_c), kcal/(mol A^3)."""
    gx, gy, gz = gradient(phi, h)
    scale = 0.5 * (cfg.eps_solute - cfg.eps_solvent) / (4.0 * math.pi * cfg.coulomb_const)
    return scale * (gx * gx + gy * gy + gz * gz)
