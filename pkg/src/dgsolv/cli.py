"""Command-line interface: ``dgsolv energy|features|fit|crossval|sweep``."""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click

from .electrostatics import PbConfig
from .errors import DgsolvError
from .fit import FitConfig, MoleculeFeatures, fit_parameters
from .harness import CachedRunner, cross_validate, parse_radii, read_fold_assignment, solvent_radius_sweep
from .mol_io import assign_type_indices, read_dataset, read_molecule, read_type_table
from .nonpolar import LjConfig
from .params import ParameterSet
from .scf import ScfConfig, run_scf
from .surface import LbConfig


def shared_options(f):
    opts = [
        click.option("--grid-spacing", default=0.25, show_default=True, type=float),
        click.option("--buffer", default=6.0, show_default=True, type=float),
        click.option("--probe", default=1.4, show_default=True, type=float),
        click.option("--solvent-radius", default=3.0, show_default=True, type=float),
        click.option("--eps-solute", default=1.0, show_default=True, type=float),
        click.option("--eps-solvent", default=80.0, show_default=True, type=float),
        click.option("--gamma0", default=0.05, show_default=True, type=float),
        click.option("--beta", default=0.1, show_default=True, type=float),
        click.option("--lambda", "lam", default=10.0, show_default=True, type=float),
        click.option("--a1", default=0.5, show_default=True, type=float),
        click.option("--tol", default=0.01, show_default=True, type=float,
                     help="Energy, area, volume and RMS thresholds."),
        click.option("--seed", default=None, type=int),
        click.option("--types", "type_table", default=None, type=click.Path(exists=True),
                     help="CSV type table (label,index,radius); default H/C/O."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _configs(o: dict) -> FitConfig:
    scf = ScfConfig(
        energy_tol=o["tol"],
        grid_spacing=o["grid_spacing"],
        buffer=o["buffer"],
        probe_radius=o["probe"],
        lb=LbConfig(a1=o["a1"], area_tol=o["tol"], vol_tol=o["tol"]),
        pb=PbConfig(eps_solute=o["eps_solute"], eps_solvent=o["eps_solvent"]),
        lj=LjConfig(solvent_radius=o["solvent_radius"]),
    )
    return FitConfig(scf=scf, lam=o["lam"], gamma0=o["gamma0"], beta=o["beta"], rms_tol=o["tol"])


def _typed(mol, o):
    table = read_type_table(o["type_table"]) if o["type_table"] else None
    return assign_type_indices(mol, table)


def _dataset(manifest, o):
    ds = read_dataset(manifest)
    ds.entries = [(_typed(m, o), dg) for m, dg in ds.entries]
    return ds


def _handle_errors(f):
    @functools.wraps(f)
    def wrapper(*a, **kw):
        try:
            return f(*a, **kw)
        except (DgsolvError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc
    return wrapper


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Differential-geometry solvation energies and parameter learning."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("structure", type=click.Path(exists=True))
@click.option("--params", "params_path", required=True, type=click.Path(exists=True))
@shared_options
@_handle_errors
def energy(structure, params_path, **o):
    """Full-model SCF for one molecule; prints the energy breakdown as JSON."""
    cfg = _configs(o)
    mol = _typed(read_molecule(structure), o)
    P = ParameterSet.load(params_path)
    res = run_scf(mol, P, cfg.scf)
    click.echo(res.to_json())


@main.command()
@click.argument("structure", type=click.Path(exists=True))
@click.option("--params", "params_path", required=True, type=click.Path(exists=True))
@shared_options
@_handle_errors
def features(structure, params_path, **o):
    """Feature row (dG_polar, area, volume, per-type LJ integrals) as CSV."""
    cfg = _configs(o)
    mol = _typed(read_molecule(structure), o)
    P = ParameterSet.load(params_path)
    res = run_scf(mol, P, cfg.scf)
    f = MoleculeFeatures.from_scf(res, P.type_labels)
    head = "name,dG_polar,area,volume" + "".join(f",lj_{lab}" for lab in P.type_labels)
    click.echo(head)
    click.echo(f.to_csv_row())


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@shared_options
@_handle_errors
def fit(manifest, out_dir, **o):
    """Learn parameters for a dataset; writes params.json, fit.json and fit_trace.csv."""
    cfg = _configs(o)
    ds = _dataset(manifest, o)
    res = fit_parameters(ds, cfg, CachedRunner())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.P.save(out / "params.json")
    (out / "fit.json").write_text(res.to_json() + "\n", encoding="utf-8")
    (out / "fit_trace.csv").write_text(res.trace_csv(), encoding="utf-8")
    click.echo(f"rms={res.rms:.4f} converged={res.converged} -> {out / 'params.json'}")


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--folds", "folds_path", default=None, type=click.Path(exists=True),
              help="CSV name,fold with 1-based fold numbers.")
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
@shared_options
@_handle_errors
def crossval(manifest, k, folds_path, out_dir, **o):
    """k-fold cross validation; writes crossval.json and crossval.csv."""
    cfg = _configs(o)
    ds = _dataset(manifest, o)
    assignment = read_fold_assignment(folds_path) if folds_path else None
    rep = cross_validate(ds, k, cfg, o["seed"], assignment)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "crossval.json").write_text(rep.to_json() + "\n", encoding="utf-8")
    (out / "crossval.csv").write_text(rep.to_csv(), encoding="utf-8")
    click.echo(f"train_rms={rep.train_rms:.4f} validation_rms={rep.validation_rms:.4f}")


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--radii", default="0.5:5.5:0.5", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@shared_options
@_handle_errors
def sweep(manifest, radii, out_path, **o):
    """Refit over a range of solvent radii; emits radius,rms CSV."""
    cfg = _configs(o)
    ds = _dataset(manifest, o)
    rep = solvent_radius_sweep(ds, parse_radii(radii), cfg)
    text = rep.to_csv()
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    click.echo(f"# best radius {rep.best_radius}", err=True)


if __name__ == "__main__":
    sys.exit(main())
