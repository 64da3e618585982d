from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgsolv.errors import DuplicateEntryError, EmptyMoleculeError, ParseError, TypingError
from dgsolv.mol_io import (
    Dataset,
    assign_type_indices,
    format_molecule,
    parse_dataset,
    parse_molecule,
    read_dataset,
    read_molecule,
    read_type_table,
)


def test_single_record():
    m = parse_molecule("C1 0.0 0.0 0.0 -0.1 1.7 C")
    assert len(m.atoms) == 1
    a = m.atoms[0]
    assert a.charge == -0.1 and a.radius == 1.7 and a.type_label == "C"
    assert a.position == (0.0, 0.0, 0.0)


def test_bad_radius_names_line():
    text = "# header\nC1 0 0 0 0 1.7 C\nH1 1 0 0 0 abc H\n"
    with pytest.raises(ParseError, match="line 3"):
        parse_molecule(text)


def test_wrong_arity():
    with pytest.raises(ParseError, match="line 1"):
        parse_molecule("C1 0 0 0 1.7 C")


@pytest.mark.parametrize("text", ["", "# only a comment\n\n"])
def test_empty_molecule(text):
    with pytest.raises(EmptyMoleculeError):
        parse_molecule(text)


def test_nonpositive_radius_rejected():
    with pytest.raises(ParseError):
        parse_molecule("C1 0 0 0 0 0 C")


def test_shared_label_shares_index():
    m = parse_molecule("H1 0 0 0 0.1 1.2 H\nC1 1 0 0 0 1.7 C\nH2 2 0 0 0.1 1.2 H")
    assert m.atoms[0].type_index == m.atoms[2].type_index
    assert m.n_types == 2


def test_default_table_radii():
    m = parse_molecule("H1 0 0 0 0 9 H\nC1 1 0 0 0 9 C\nO1 2 0 0 0 9 O")
    typed = assign_type_indices(m)
    assert list(typed.radii) == [1.2, 1.7, 1.5]
    assert list(typed.type_indices) == [0, 1, 2]
    assert typed.n_types == 3


def test_single_label_compacts_to_zero():
    m = assign_type_indices(parse_molecule("O1 0 0 0 0 1 O\nO2 1 0 0 0 1 O"))
    assert m.n_types == 1
    assert set(m.type_indices) == {0}


def test_unknown_label():
    m = parse_molecule("N1 0 0 0 0 1.6 N")
    with pytest.raises(TypingError) as info:
        assign_type_indices(m)
    assert "N" in str(info.value)


def test_type_partition(water):
    # every atom in exactly one type; indices cover 0..N_T-1
    idx = water.type_indices
    assert sorted(set(idx)) == list(range(water.n_types))


def test_custom_type_table(tmp_path):
    p = tmp_path / "types.csv"
    p.write_text("label,index,radius\nN,0,1.55\nC,1,1.7\n")
    table = read_type_table(p)
    m = assign_type_indices(parse_molecule("C 0 0 0 0 1 C\nN 1 0 0 0 1 N"), table)
    assert list(m.radii) == [1.7, 1.55]
    assert list(m.type_indices) == [1, 0]


coord = st.floats(-50, 50, allow_nan=False)
atom_rec = st.tuples(coord, coord, coord, st.floats(-2, 2, allow_nan=False),
                     st.floats(0.1, 3, allow_nan=False), st.sampled_from("HCO"))


@settings(max_examples=50, deadline=None)
@given(st.lists(atom_rec, min_size=1, max_size=6))
def test_format_round_trip(recs):
    text = "\n".join(f"A{i} {x!r} {y!r} {z!r} {q!r} {r!r} {t}" for i, (x, y, z, q, r, t) in enumerate(recs))
    m = parse_molecule(text, "rt")
    again = parse_molecule(format_molecule(m), "rt")
    assert again == m


def test_read_molecule_uses_stem(tmp_path):
    p = tmp_path / "methane.xyzqr"
    p.write_text("C 0 0 0 0 1.7 C\n")
    assert read_molecule(p).name == "methane"


def _write_structs(tmp_path, names):
    for n in names:
        (tmp_path / f"{n}.xyzqr").write_text("C 0 0 0 0 1.7 C\n")


def test_dataset_row(tmp_path):
    _write_structs(tmp_path, ["ethane"])
    ds = parse_dataset("name,structure_file,dG_exp\nethane,ethane.xyzqr,1.83\n", tmp_path)
    assert ds.names == ["ethane"]
    assert ds.dg_exp[0] == 1.83


def test_empty_manifest(tmp_path):
    ds = parse_dataset("name,structure_file,dG_exp\n", tmp_path)
    assert len(ds) == 0


def test_duplicate_manifest_rows(tmp_path):
    _write_structs(tmp_path, ["ethane"])
    text = "name,structure_file,dG_exp\nethane,ethane.xyzqr,1.83\nethane,ethane.xyzqr,1.9\n"
    with pytest.raises(DuplicateEntryError):
        parse_dataset(text, tmp_path)


def test_missing_structure_names_path(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.xyzqr"):
        parse_dataset("name,structure_file,dG_exp\nx,nope.xyzqr,1.0\n", tmp_path)


def test_read_dataset_family_label(tmp_path):
    _write_structs(tmp_path, ["a", "b"])
    man = tmp_path / "alkane.csv"
    man.write_text("name,structure_file,dG_exp\na,a.xyzqr,1\nb,b.xyzqr,2\n")
    ds = read_dataset(man)
    assert ds.family_label == "alkane"
    assert ds.subset({"b"}).names == ["b"]


def test_dataset_rejects_duplicate_names(water):
    with pytest.raises(DuplicateEntryError):
        Dataset([(water, 1.0), (water, 2.0)])


def test_translated_keeps_everything_but_positions(water):
    t = water.translated((1.0, -2.0, 0.5))
    assert np.allclose(t.positions - water.positions, [1.0, -2.0, 0.5])
    assert np.array_equal(t.charges, water.charges)
    assert np.array_equal(t.type_indices, water.type_indices)
