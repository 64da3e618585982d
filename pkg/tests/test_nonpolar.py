from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from dgsolv.errors import ConfigurationError
from dgsolv.grid import Grid, build_grid, smoothed_sphere, vdw_mask
from dgsolv.mol_io import parse_molecule
from dgsolv.nonpolar import (
    LjConfig,
    lj_features,
    lj_field,
    lj_kernel,
    lj_type_fields,
    lj_type_integral,
    nonpolar_energy,
)
from dgsolv.params import ParameterSet


def test_kernel_identities():
    cfg = LjConfig()
    s = 4.0
    assert lj_kernel(s, s, cfg) == pytest.approx(-1.0)
    assert lj_kernel(s / 2 ** (1 / 6), s, cfg) == pytest.approx(0.0, abs=1e-12)
    assert lj_kernel(cfg.cutoff, s, cfg) == 0.0
    assert -1e-3 < lj_kernel(cfg.cutoff - 1e-9, s, cfg) < 0.0


def test_kernel_core_clamp():
    cfg = LjConfig()
    s = 4.0
    core = lj_kernel(0.8 * s, s, cfg)
    assert lj_kernel(0.1, s, cfg) == core
    assert core == pytest.approx(1.25**12 - 2 * 1.25**6)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        LjConfig(solvent_radius=0.0)
    with pytest.raises(ConfigurationError):
        LjConfig(clamp_fraction=1.0)
    with pytest.raises(ConfigurationError):
        LjConfig(solvent_radius=3.0, cutoff=2.0)


@pytest.fixture
def methanol():
    return parse_molecule("C 0 0 0 0.1 1.7 C\nO 1.4 0 0 -0.6 1.5 O\nH 1.9 0.9 0 0.5 1.2 H")


def _setup(m, h=0.5, buffer=4.0, cfg=LjConfig()):
    g = build_grid(m, h, buffer)
    vdw = vdw_mask(g, m)
    return g, vdw, lj_type_fields(m, g, vdw, cfg)


def test_absent_type_is_zero(methanol):
    g, vdw, _ = _setup(methanol)
    S = np.zeros(g.shape)
    assert lj_type_integral(methanol, "N", S, g, vdw) == 0.0


def test_radial_quadrature_oracle():
    cfg = LjConfig(solvent_radius=3.0, cutoff=8.0)
    m = parse_molecule("C 0 0 0 0 1.7 C")
    g, vdw, fields = _setup(m, h=0.25, buffer=6.5, cfg=cfg)
    S = vdw.astype(float)  # S = 0 outside the vdW ball
    grid_val = lj_type_integral(m, "C", S, g, vdw, cfg, fields)
    sigma = 4.7
    oracle, _ = quad(lambda r: 4 * math.pi * r * r * lj_kernel(r, sigma, cfg), 1.7, 8.0,
                     points=[0.8 * sigma, sigma], limit=200)
    assert grid_val == pytest.approx(oracle, rel=0.03)


def test_shrinking_cutoff_leaves_core_only():
    # cutoff below sigma: only clamped-core and repulsive shell remain, all positive
    m = parse_molecule("C 0 0 0 0 1.7 C")
    cfg = LjConfig(solvent_radius=3.0, cutoff=4.0)
    g, vdw, fields = _setup(m, h=0.25, buffer=3.0, cfg=cfg)
    val = lj_type_integral(m, "C", np.zeros(g.shape), g, vdw, cfg, fields)
    assert val > 0


def test_field_zero_and_linear(methanol):
    g, vdw, fields = _setup(methanol)
    labels = ("C", "O", "H")
    zero = ParameterSet(0.05, 0.0, (0.0, 0.0, 0.0), labels)
    assert not lj_field(methanol, zero, g, vdw, fields=fields).any()
    P1 = ParameterSet(0.05, 0.0, (0.01, -0.02, 0.005), labels)
    P2 = ParameterSet(0.05, 0.0, (-0.03, 0.004, 0.02), labels)
    P3 = ParameterSet(0.05, 0.0, tuple(2 * a - b for a, b in zip(P1.well_depths, P2.well_depths)), labels)
    U1, U2, U3 = (lj_field(methanol, P, g, vdw, fields=fields) for P in (P1, P2, P3))
    assert np.allclose(U3, 2 * U1 - U2, atol=1e-14)
    assert not U1[vdw].any()


def test_field_requires_all_types(methanol):
    g, vdw, fields = _setup(methanol)
    P = ParameterSet(0.05, 0.0, (0.01, 0.01), ("C", "O"))
    with pytest.raises(ConfigurationError):
        lj_field(methanol, P, g, vdw, fields=fields)


def test_energy_matches_feature_sum(methanol):
    g, vdw, fields = _setup(methanol)
    S = np.maximum(vdw, smoothed_sphere(g, (0.7, 0.3, 0), 2.5, 1.0))
    P = ParameterSet(0.06, 0.004, (0.01, -0.02, 0.005), ("C", "O", "H"))
    feats = lj_features(methanol, S, g, vdw, fields=fields)
    U = lj_field(methanol, P, g, vdw, fields=fields)
    direct = nonpolar_energy(S, g.h, 0.0, 0.0, U)
    summed = sum(P.well_depth(k) * v for k, v in feats.items())
    assert direct == pytest.approx(summed, rel=1e-12)


def test_translation_invariant(methanol):
    g, vdw, fields = _setup(methanol)
    a = lj_features(methanol, vdw.astype(float), g, vdw, fields=fields)
    moved = methanol.translated((3.25, -1.5, 0.75))
    g2, vdw2, fields2 = _setup(moved)
    b = lj_features(moved, vdw2.astype(float), g2, vdw2, fields=fields2)
    for k in a:
        assert b[k] == pytest.approx(a[k], rel=1e-10)


def test_cutoff_decay():
    m = parse_molecule("C 0 0 0 0 1.7 C")
    vals = []
    for cut in (20.0, 22.0):
        cfg = LjConfig(cutoff=cut)
        g, vdw, fields = _setup(m, h=0.5, buffer=21.0, cfg=cfg)
        vals.append(lj_type_integral(m, "C", vdw.astype(float), g, vdw, cfg, fields))
    assert abs(vals[1] - vals[0]) < 0.005 * abs(vals[0])


def test_nonpolar_energy_sphere():
    g = Grid((-4.0,) * 3, 0.25, (33,) * 3)
    S = smoothed_sphere(g, (0, 0, 0), 2.0, 0.5)
    assert nonpolar_energy(S, g.h, 0.05, 0.0) == pytest.approx(0.05 * 16 * math.pi, rel=0.02)
    assert nonpolar_energy(S, g.h, 0.05, 0.005) == pytest.approx(2.681, rel=0.02)


def test_nonpolar_affine_in_parameters():
    g = Grid((-3.0,) * 3, 0.5, (13,) * 3)
    rng = np.random.default_rng(4)
    S = smoothed_sphere(g, (0, 0, 0), 1.5, 1.0)
    U1, U2 = rng.normal(size=(2, *g.shape))
    e1 = nonpolar_energy(S, g.h, 0.05, 0.002, U1)
    e2 = nonpolar_energy(S, g.h, 0.09, -0.004, U2)
    e = nonpolar_energy(S, g.h, 0.3 * 0.05 + 0.7 * 0.09, 0.3 * 0.002 - 0.7 * 0.004, 0.3 * U1 + 0.7 * U2)
    assert e == pytest.approx(0.3 * e1 + 0.7 * e2, rel=1e-12)


def test_attractive_regime_negative(methanol):
    g, vdw, fields = _setup(methanol, h=0.5, buffer=6.0)
    S = vdw.astype(float)
    P = ParameterSet(0.05, 0.0, (-0.01, -0.01, -0.01), ("C", "O", "H"))
    U = lj_field(methanol, P, g, vdw, fields=fields)
    assert nonpolar_energy(S, g.h, 0.0, 0.0, U) < 0
