"""Benchmark harness: RMS error, k-fold cross validation and solvent-radius sweeps."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DgsolvError
from .fit import (
    FitConfig,
    ScfRunner,
    compute_features,
    dataset_type_labels,
    fit_parameters,
    predict_energy,
)
from .metrics import rmse
from .mol_io import Dataset, Molecule
from .params import ParameterSet
from .scf import ScfConfig, ScfResult, run_scf

log = logging.getLogger(__name__)

__all__ = [
    "CachedRunner",
    "CvReport",
    "FoldResult",
    "SweepReport",
    "cross_validate",
    "kfold_split",
    "parse_radii",
    "read_fold_assignment",
    "rmse",
    "solvent_radius_sweep",
]


class CachedRunner:
    """Memoising SCF runner.

    Auxiliary-mode runs depend only on the surface tension, so they are keyed
    without pressure and well depths and get reused across folds and refits.
    """

    def __init__(self, runner: ScfRunner = run_scf):
        self.runner = runner
        self._cache: dict = {}
        self.hits = 0

    def __call__(self, m: Molecule, P: ParameterSet, cfg: ScfConfig) -> ScfResult:
        if cfg.mode == "auxiliary":
            key = (m, P.gamma, P.gamma0, P.beta, cfg)
        else:
            key = (m, P, cfg)
        if key in self._cache:
            self.hits += 1
            return self._cache[key]
        res = self.runner(m, P, cfg)
        self._cache[key] = res
        return res


def kfold_split(names: Sequence[str], k: int, seed: int | None = None,
                assignment: dict[str, int] | None = None) -> list[list[str]]:
    """Partition names into k folds whose sizes differ by at most one.

    Larger folds come first. Without a seed the input order is kept; with a
    seed the names are shuffled by a seeded generator. An explicit
    ``assignment`` (name -> 1-based fold) overrides both.
    """
    names = list(names)
    if k < 2:
        raise ConfigurationError("k must be at least 2")
    if k > len(names):
        raise ConfigurationError(f"k={k} exceeds dataset size {len(names)}")
    if assignment is not None:
        missing = set(names) - set(assignment)
        if missing:
            raise ConfigurationError(f"fold assignment lacks {sorted(missing)}")
        folds = [[] for _ in range(k)]
        for n in names:
            f = assignment[n]
            if not 1 <= f <= k:
                raise ConfigurationError(f"{n}: fold {f} outside 1..{k}")
            folds[f - 1].append(n)
        if any(not f for f in folds):
            raise ConfigurationError("fold assignment leaves an empty fold")
        return folds
    order = names if seed is None else [names[i] for i in np.random.default_rng(seed).permutation(len(names))]
    base, extra = divmod(len(names), k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(order[start:start + size])
        start += size
    return folds


def read_fold_assignment(path) -> dict[str, int]:
    """Read a ``name,fold`` CSV (1-based folds)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["name"].strip(): int(row["fold"]) for row in csv.DictReader(fh)}


@dataclass
class FoldResult:
    index: int
    train_names: list[str]
    validation_names: list[str]
    train_rms: float = float("nan")
    validation_rms: float = float("nan")
    P: ParameterSet | None = None
    validation_predictions: list[float] = field(default_factory=list)
    validation_exp: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class CvReport:
    folds: list[FoldResult]
    assignment: dict[str, int]

    @property
    def train_rms(self) -> float:
        ok = [f.train_rms for f in self.folds if f.ok]
        return float(np.mean(ok)) if ok else float("nan")

    @property
    def validation_rms(self) -> float:
        """RMS over all held-out predictions pooled across successful folds."""
        pred = [p for f in self.folds if f.ok for p in f.validation_predictions]
        exp = [e for f in self.folds if f.ok for e in f.validation_exp]
        return rmse(pred, exp) if pred else float("nan")

    def to_dict(self) -> dict:
        return {
            "train_rms": self.train_rms,
            "validation_rms": self.validation_rms,
            "assignment": self.assignment,
            "folds": [
                {
                    "fold": f.index,
                    "train_rms": f.train_rms,
                    "validation_rms": f.validation_rms,
                    "validation": f.validation_names,
                    "parameters": f.P.to_dict() if f.P else None,
                    "error": f.error,
                }
                for f in self.folds
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        rows = ["fold,n_train,n_validation,train_rms,validation_rms,error"]
        for f in self.folds:
            rows.append(
                f"{f.index},{len(f.train_names)},{len(f.validation_names)},"
                f"{f.train_rms!r},{f.validation_rms!r},{f.error or ''}"
            )
        return "\n".join(rows) + "\n"


def cross_validate(ds: Dataset, k: int = 5, cfg: FitConfig = FitConfig(),
                   seed: int | None = None, assignment: dict[str, int] | None = None,
                   runner: ScfRunner | None = None, mapper=map) -> CvReport:
    """Fit on k-1 folds, predict the held-out fold with the full model."""
    runner = runner or CachedRunner()
    folds = kfold_split(ds.names, k, seed, assignment)
    labels = dataset_type_labels(ds.molecules)
    fold_of = {n: i + 1 for i, fold in enumerate(folds) for n in fold}
    results = []
    for i, val_names in enumerate(folds, start=1):
        held = set(val_names)
        train = Dataset([e for e in ds.entries if e[0].name not in held], ds.family_label)
        val = ds.subset(held)
        fr = FoldResult(i, train.names, val.names)
        try:
            fit = fit_parameters(train, cfg, runner, mapper, labels)
            assert held.isdisjoint(fit.names)
            feats = compute_features(val, fit.P, replace(cfg.scf, mode="full"), runner, mapper)
            preds = [predict_energy(f, fit.P) for f in feats]
            fr.train_rms = fit.rms
            fr.P = fit.P
            fr.validation_predictions = preds
            fr.validation_exp = list(val.dg_exp)
            fr.validation_rms = rmse(preds, val.dg_exp)
        except DgsolvError as exc:
            log.error("fold %d failed: %s", i, exc)
            fr.error = f"fold {i}: {exc}"
        results.append(fr)
    return CvReport(results, fold_of)


@dataclass
class SweepReport:
    radii: list[float]
    rms: list[float]
    fits: list = field(default_factory=list, repr=False)

    @property
    def best_radius(self) -> float:
        return self.radii[int(np.nanargmin(self.rms))]

    def to_csv(self) -> str:
        rows = ["solvent_radius,rms"]
        rows += [f"{r!r},{e!r}" for r, e in zip(self.radii, self.rms)]
        return "\n".join(rows) + "\n"


def parse_radii(spec: str) -> list[float]:
    """``"0.5:5.5:0.5"`` (inclusive range) or a comma list ``"2.5,3.0,3.5"``."""
    if ":" in spec:
        start, stop, step = (float(v) for v in spec.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + i * step, 10) for i in range(n + 1)]
    return [float(v) for v in spec.split(",") if v.strip()]


def solvent_radius_sweep(ds: Dataset, radii: Sequence[float], cfg: FitConfig = FitConfig(),
                         runner: ScfRunner | None = None, mapper=map) -> SweepReport:
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise ConfigurationError("radii must be a non-empty list of positive values")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigurationError("radii must be strictly increasing")
    runner = runner or CachedRunner()
    rms, fits = [], []
    for r in radii:
        scf = replace(cfg.scf, lj=replace(cfg.scf.lj, solvent_radius=r))
        fit = fit_parameters(ds, replace(cfg, scf=scf), runner, mapper)
        log.info("solvent radius %.2f: rms=%.4f", r, fit.rms)
        rms.append(fit.rms)
        fits.append(fit)
    return SweepReport(radii, rms, fits)
