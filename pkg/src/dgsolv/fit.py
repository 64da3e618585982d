"""Linear energy model, stability-constrained convex fitting and the learning loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import ConfigurationError, DgsolvError
from .mol_io import Dataset, Molecule
from .params import BETA, GAMMA0, LAMBDA, ParameterSet
from .scf import ScfConfig, ScfResult, run_scf

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MoleculeFeatures:
    name: str
    dG_polar: float
    area: float
    volume: float
    lj: tuple[float, ...]
    dG_exp: float = float("nan")
    type_labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lj", tuple(float(v) for v in self.lj))
        if self.type_labels and len(self.type_labels) != len(self.lj):
            raise ConfigurationError("lj feature count does not match type labels")

    @classmethod
    def from_scf(cls, r: ScfResult, type_labels: Sequence[str], dG_exp: float = float("nan")):
        labels = tuple(type_labels)
        return cls(r.name, r.dG_polar, r.area, r.volume,
                   tuple(r.lj.get(lab, 0.0) for lab in labels), dG_exp, labels)

    def row(self) -> np.ndarray:
        return np.array([self.area, self.volume, *self.lj])

    def to_csv_row(self) -> str:
        vals = [self.name, repr(self.dG_polar), repr(self.area), repr(self.volume)]
        vals += [repr(v) for v in self.lj]
        return ",".join(vals)


def features_csv(features: Sequence[MoleculeFeatures]) -> str:
    n = len(features[0].lj) if features else 0
    labels = features[0].type_labels if features and features[0].type_labels else \
        tuple(str(j + 1) for j in range(n))
    head = "name,dG_polar,area,volume," + ",".join(f"lj_{lab}" for lab in labels)
    return "\n".join([head.rstrip(","), *(f.to_csv_row() for f in features)]) + "\n"


def predict_energy(f: MoleculeFeatures, P: ParameterSet) -> float:
    if len(f.lj) != P.n_types:
        raise ConfigurationError(
            f"{f.name}: {len(f.lj)} LJ features but {P.n_types} well depths"
        )
    return f.dG_polar + float(f.row() @ P.vector())


def project_feasible(gamma: float, p: float, gamma0: float = GAMMA0,
                     beta: float = BETA) -> tuple[float, float]:
    """Euclidean projection of (gamma, p) onto {gamma >= gamma0, |p| <= beta*gamma}."""
    if gamma >= gamma0 and abs(p) <= beta * gamma:
        return gamma, p
    s = 1.0 if p >= 0 else -1.0
    # nearest point on the ray p = s*beta*gamma, gamma >= 0
    t = (gamma + beta * s * p) / (1.0 + beta * beta)
    if t >= gamma0:
        return t, s * beta * t
    # projecting onto the cone lands below gamma0: the set's nearest point is
    # either on the edge gamma = gamma0 or at a vertex (gamma0, +-beta*gamma0)
    cap = beta * gamma0
    return gamma0, min(max(p, -cap), cap)


@dataclass
class ConvexResult:
    P: ParameterSet
    objective: float
    iterations: int
    converged: bool


def objective(P_vec, A, offset, target, lam) -> float:
    r = A @ P_vec + offset - target
    return float(np.linalg.norm(r) + lam * np.linalg.norm(P_vec))


def _design(features: Sequence[MoleculeFeatures]):
    A = np.array([f.row() for f in features], dtype=float)
    offset = np.array([f.dG_polar for f in features], dtype=float)
    target = np.array([f.dG_exp for f in features], dtype=float)
    return A, offset, target


def _subgradient(Az, D, b, lam, z, project, max_iter, window, min_gain, shrink, min_scale):
    """Projected subgradient with normalised steps c/sqrt(k) and restarts from the best iterate."""
    def f_of(z):
        return float(np.linalg.norm(Az @ z - b) + lam * np.linalg.norm(D * z))

    best, f_best = z.copy(), f_of(z)
    c0 = c = max(np.linalg.norm(z), 1.0)
    k = 0
    ref, last = f_best, 0
    it = 0
    for it in range(1, max_iter + 1):
        k += 1
        r = Az @ z - b
        nr = np.linalg.norm(r)
        x = D * z
        nx = np.linalg.norm(x)
        g = Az.T @ r / nr if nr > 0 else np.zeros_like(z)
        if lam and nx > 0:
            g = g + lam * D * x / nx
        ng = np.linalg.norm(g)
        if ng == 0.0:
            return best, it, True
        z = project(z - (c / math.sqrt(k)) * g / ng)
        fz = f_of(z)
        if fz < f_best:
            best, f_best = z.copy(), fz
        if it - last >= window:
            if ref - f_best < min_gain:
                if c < min_scale * c0:
                    return best, it, True
                c *= shrink
                k = 0
                z = best.copy()
            ref, last = f_best, it
    return best, it, False


_project_jit = njit(cache=True)(project_feasible)


@njit(cache=True)
def _pd_kernel(K, b, lam, D, z, g0, beta, max_iter, tol, tau, sigma):
    n = b.shape[0]
    m, d = K.shape
    y = np.zeros(m)
    y_old = np.zeros(m)
    z_bar = z.copy()
    z_new = np.empty(d)
    best = z.copy()

    def f_of(z):
        r = K[:n] @ z - b
        return np.sqrt(r @ r) + lam * np.sqrt(np.sum((D * z) ** 2))

    f_best = f_of(z)
    it = 0
    while it < max_iter:
        it += 1
        y_old[:] = y
        y += sigma * (K @ z_bar)
        y[:n] -= sigma * b
        for lo, hi in ((0, n), (n, m)):
            nb = np.sqrt(np.sum(y[lo:hi] ** 2))
            if nb > 1.0:
                y[lo:hi] /= nb
        z_new[:] = z - tau * (K.T @ y)
        z_new[0], z_new[1] = _project_jit(z_new[0], z_new[1], g0, beta)
        primal = np.sqrt(np.sum((z_new - z) ** 2)) / tau
        dual = np.sqrt(np.sum((y - y_old) ** 2)) / sigma
        z_bar[:] = 2.0 * z_new - z
        z[:] = z_new
        fz = f_of(z)
        if fz < f_best:
            best[:] = z
            f_best = fz
        scale = max(1.0, np.sqrt(z @ z))
        if primal < tol * scale and dual < tol * scale:
            return best, it, True
    return best, it, False


def _primal_dual(Az, D, b, lam, z, g0, beta, max_iter, tol, omega=10.0):
    """Primal-dual hybrid gradient on min ||Az z - b|| + ||lam D z|| over the feasible set.

    Both norms are handled through their dual unit balls; the primal step is
    the same analytic projection the subgradient method uses. Stops when the
    scaled primal and dual fixed-point residuals drop below ``tol``.
    """
    K = np.vstack([Az, lam * np.diag(D)]) if lam > 0 else Az
    K = np.ascontiguousarray(K, dtype=float)
    L = np.linalg.norm(K, 2)
    tau, sigma = 0.99 * omega / L, 0.99 / (omega * L)
    return _pd_kernel(K, np.ascontiguousarray(b, dtype=float), float(lam), D.astype(float),
                      z.astype(float).copy(), float(g0), float(beta), int(max_iter),
                      float(tol), tau, sigma)


def solve_convex(features: Sequence[MoleculeFeatures], P_init: ParameterSet,
                 lam: float = LAMBDA, gamma0: float = GAMMA0, beta: float = BETA,
                 max_iter: int = 500_000, method: str = "primal-dual", tol: float = 1e-8,
                 window: int = 200, min_gain: float = 1e-6, shrink: float = 0.5,
                 min_scale: float = 1e-7) -> ConvexResult:
    """Minimise ||A P + dG_polar - dG_exp|| + lam ||P|| over the stability region.

    Works in variables scaled by the feature-column norms; the region keeps
    its shape under that scaling (with rescaled gamma0 and beta), so both
    methods project with :func:`project_feasible`. ``method`` is

    * ``"primal-dual"`` (default): primal-dual hybrid gradient, stopped on its
      fixed-point residual (``tol``);
    * ``"subgradient"``: projected subgradient with normalised steps
      ``c / sqrt(k)``. Whenever the best objective gains less than
      ``min_gain`` over ``window`` iterations it restarts from the best
      iterate with ``c`` multiplied by ``shrink``, and it is declared
      converged once that happens with ``c`` below ``min_scale`` times its
      starting value.

    Both start from ``P_init`` (projected) and return the best iterate seen.
    """
    if not features:
        raise ConfigurationError("need at least one molecule to fit")
    n_t = {len(f.lj) for f in features}
    if n_t != {P_init.n_types}:
        raise ConfigurationError(f"inconsistent LJ feature counts {sorted(n_t)} vs {P_init.n_types}")
    A, offset, target = _design(features)
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(target)):
        raise ConfigurationError("features and experimental values must be finite")

    col = np.linalg.norm(A, axis=0)
    D = np.where(col > 0, 1.0 / np.where(col > 0, col, 1.0), 1.0)
    Az = A * D
    g0_z = gamma0 / D[0]
    beta_z = beta * D[0] / D[1]

    def project(z):
        z[0], z[1] = project_feasible(z[0], z[1], g0_z, beta_z)
        return z

    z0 = project(P_init.vector() / D)
    b = target - offset
    if method == "primal-dual":
        best, it, converged = _primal_dual(Az, D, b, lam, z0, g0_z, beta_z, max_iter, tol)
    elif method == "subgradient":
        best, it, converged = _subgradient(Az, D, b, lam, z0, project, max_iter,
                                           window, min_gain, shrink, min_scale)
    else:
        raise ConfigurationError(f"unknown convex method {method!r}")

    x = D * best
    # undo round-off from the scaled-space projection so the constraints hold exactly
    x[0], x[1] = project_feasible(x[0], x[1], gamma0, beta)
    P = replace(P_init, gamma0=gamma0, beta=beta, lam=lam).with_vector(x)
    f_final = objective(P.vector(), A, offset, target, lam)
    if not converged:
        log.warning("convex fit hit the iteration cap (%d); returning best iterate", max_iter)
    return ConvexResult(P, f_final, it, converged)


class FitError(DgsolvError, RuntimeError):
    def __init__(self, molecule: str, cause: Exception):
        self.molecule = molecule
        self.cause = cause
        super().__init__(f"SCF failed for {molecule}: {cause}")


@dataclass(frozen=True)
class FitConfig:
    scf: ScfConfig = field(default_factory=ScfConfig)
    lam: float = LAMBDA
    gamma0: float = GAMMA0
    beta: float = BETA
    bootstrap_gamma: float = 0.05
    rms_tol: float = 0.01
    max_outer: int = 20
    convex_max_iter: int = 500_000


@dataclass
class FitTraceRow:
    iteration: int
    rms: float
    P: ParameterSet


@dataclass
class FitResult:
    P: ParameterSet
    names: list[str]
    predictions: np.ndarray
    dG_exp: np.ndarray
    rms: float
    outer_iterations: int
    converged: bool
    features: list[MoleculeFeatures] = field(default_factory=list)
    trace: list[FitTraceRow] = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return self.predictions - self.dG_exp

    def to_dict(self) -> dict:
        return {
            "parameters": self.P.to_dict(),
            "rms": self.rms,
            "outer_iterations": self.outer_iterations,
            "converged": self.converged,
            "molecules": [
                {"name": n, "predicted": float(p), "experimental": float(e), "error": float(p - e)}
                for n, p, e in zip(self.names, self.predictions, self.dG_exp)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def trace_csv(self) -> str:
        labels = self.P.type_labels
        head = "iteration,rms,gamma,pressure" + "".join(f",eps_{lab}" for lab in labels)
        rows = [head]
        for t in self.trace:
            vals = [t.iteration, repr(t.rms), repr(t.P.gamma), repr(t.P.pressure)]
            vals += [repr(v) for v in t.P.well_depths]
            rows.append(",".join(str(v) for v in vals))
        return "\n".join(rows) + "\n"


def dataset_type_labels(molecules: Sequence[Molecule]) -> tuple[str, ...]:
    """Type labels used across molecules, in order of first appearance."""
    labels: list[str] = []
    for m in molecules:
        for a in m.atoms:
            if a.type_label not in labels:
                labels.append(a.type_label)
    return tuple(labels)


ScfRunner = Callable[[Molecule, ParameterSet, ScfConfig], ScfResult]


def compute_features(ds: Dataset, P: ParameterSet, scf_cfg: ScfConfig,
                     runner: ScfRunner = run_scf, mapper=map) -> list[MoleculeFeatures]:
    """Run the SCF for every molecule and collect its feature row."""
    def one(entry):
        mol, dg = entry
        try:
            res = runner(mol, P, scf_cfg)
        except DgsolvError as exc:
            raise FitError(mol.name, exc) from exc
        return MoleculeFeatures.from_scf(res, P.type_labels, dg)

    return list(mapper(one, ds.entries))


def fit_parameters(ds: Dataset, cfg: FitConfig = FitConfig(),
                   runner: ScfRunner = run_scf, mapper=map,
                   type_labels: Sequence[str] | None = None) -> FitResult:
    """Alternate SCF feature extraction and convex refits until the RMS settles.

    The bootstrap pass uses the auxiliary (dielectric-force only) surface
    equation with the bootstrap surface tension; later passes run the full
    model with the current parameters. The reported RMS and predictions
    always come from full-model SCF runs with the returned parameters.
    """
    from .metrics import rmse

    if len(ds) == 0:
        raise ConfigurationError("cannot fit an empty dataset")
    labels = tuple(type_labels) if type_labels else dataset_type_labels(ds.molecules)
    P = ParameterSet.initial(labels, gamma=cfg.bootstrap_gamma, gamma0=cfg.gamma0,
                             beta=cfg.beta, lam=cfg.lam)
    y = ds.dg_exp

    aux_cfg = replace(cfg.scf, mode="auxiliary")
    feats = compute_features(ds, P, aux_cfg, runner, mapper)
    P = solve_convex(feats, P, cfg.lam, cfg.gamma0, cfg.beta, cfg.convex_max_iter).P
    err_prev = rmse([predict_energy(f, P) for f in feats], y)
    trace = [FitTraceRow(0, err_prev, P)]
    log.info("bootstrap fit: rms=%.4f", err_prev)

    full_cfg = replace(cfg.scf, mode="full")
    for it in range(1, cfg.max_outer + 1):
        feats = compute_features(ds, P, full_cfg, runner, mapper)
        preds = np.array([predict_energy(f, P) for f in feats])
        err = rmse(preds, y)
        trace.append(FitTraceRow(it, err, P))
        log.info("fit iteration %d: rms=%.4f", it, err)
        if abs(err - err_prev) < cfg.rms_tol:
            return FitResult(P, ds.names, preds, y, err, it, True, feats, trace)
        err_prev = err
        if it == cfg.max_outer:
            break
        P = solve_convex(feats, P, cfg.lam, cfg.gamma0, cfg.beta, cfg.convex_max_iter).P
    return FitResult(P, ds.names, preds, y, err, it, False, feats, trace)
