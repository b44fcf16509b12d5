import json
from fractions import Fraction

import pytest
from mpmath import mpf

from app.arith import RationalBase
from app.census import CensusSpec, run_census
from app.densities import average_density_sum, delta_g_mod4
from app.errors import ArgumentError, SpecMismatchError
from app.report import (
    CENSUS_COLUMNS,
    census_extras,
    census_meta,
    census_table,
    compare,
    format_center,
    format_fixed,
    read_table,
    render,
    theory_table,
)


@pytest.fixture(scope="module")
def census_g2():
    return run_census(CensusSpec(RationalBase(2), 20, (4,)))


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_format_fixed():
    print("\n=== Testing Number Formatting ===")
    assert format_fixed(Fraction(1, 6)) == "0.166667"
    assert format_fixed(Fraction(3, 8)) == "0.375000"
    assert format_fixed(Fraction(1, 8), 2) == "0.12"
    assert format_fixed(Fraction(3, 8), 2) == "0.38"
    assert format_fixed(0.125, 2) == "0.12"
    assert format_fixed(-1e-9) == "0.000000"
    assert format_fixed(1) == "1.000000"
    assert format_center(mpf("0.5")) == "0.500000"


def test_census_table(census_g2):
    table = census_table(census_g2)
    assert list(table.columns) == CENSUS_COLUMNS
    assert table["count"].tolist() == ["3", "0", "3", "1"]
    assert table["freq"].tolist() == ["0.375000", "0.000000", "0.375000", "0.125000"]
    extras = census_extras(census_g2)
    assert extras["skipped"] == ["2"]
    assert extras["legendre_3mod4_residue"] == "1"
    assert census_meta(census_g2)["pi"] == "8"


def test_tsv_and_json_carry_the_same_rows(census_g2):
    table = census_table(census_g2)
    tsv = render(table, "tsv")
    doc = json.loads(render(table, "json", census_meta(census_g2), census_extras(census_g2)))
    lines = tsv.rstrip("\n").split("\n")
    assert lines[0].split("\t") == CENSUS_COLUMNS
    assert [dict(zip(CENSUS_COLUMNS, line.split("\t"))) for line in lines[1:]] == doc["rows"]
    assert doc["meta"]["kind"] == "census"
    assert render(table, "tsv") == tsv
    with pytest.raises(ArgumentError):
        render(table, "xml")


def test_read_table(tmp_path, census_g2):
    table = census_table(census_g2)
    meta, rows = read_table(_write(tmp_path, "c.json", render(table, "json", census_meta(census_g2))))
    assert meta["g"] == "2"
    assert rows["count"].tolist() == ["3", "0", "3", "1"]
    meta, rows = read_table(_write(tmp_path, "c.tsv", render(table, "tsv")))
    assert meta == {}
    assert rows["freq"].tolist() == table["freq"].tolist()


def test_theory_table():
    estimates = [delta_g_mod4(RationalBase(5), a) for a in (1, 3)]
    table = theory_table(estimates)
    assert table["center"].tolist() == ["0.166667", "0.166667"]
    assert table["center_full"].tolist() == ["1/6", "1/6"]
    assert table["certified"].tolist() == ["true", "true"]


def test_compare_with_itself(tmp_path, census_g2):
    """A census compared with itself has zero deviation in every cell."""
    print("\n=== Testing Compare ===")
    text = render(census_table(census_g2), "json", census_meta(census_g2), census_extras(census_g2))
    doc = read_table(_write(tmp_path, "c.json", text))
    rows = compare(doc, doc)
    assert len(rows) == 4
    for row in rows:
        assert row.deviation == 0
        assert "no-theory" not in row.flags


def test_compare_with_theory(tmp_path, census_g2):
    census_doc = read_table(_write(tmp_path, "c.json", render(census_table(census_g2), "json", census_meta(census_g2))))
    theory = theory_table([average_density_sum(a, 4, 10_000, 10_000) for a in range(4)])
    rows = compare(census_doc, read_table(_write(tmp_path, "t.tsv", render(theory, "tsv"))))
    for row in rows:
        assert row.center is not None
        assert row.sigma > 0
        assert any(flag.startswith("bound=") for flag in row.flags)


def test_compare_mismatches(tmp_path, census_g2):
    census_json = render(census_table(census_g2), "json", census_meta(census_g2))
    census_doc = read_table(_write(tmp_path, "c.json", census_json))
    tsv_doc = read_table(_write(tmp_path, "c.tsv", render(census_table(census_g2), "tsv")))
    with pytest.raises(SpecMismatchError):
        compare(tsv_doc, census_doc)
    theory5 = theory_table([average_density_sum(a, 5, 10_000, 10_000) for a in range(5)])
    with pytest.raises(SpecMismatchError):
        compare(census_doc, read_table(_write(tmp_path, "t5.tsv", render(theory5, "tsv"))))
    other_g = theory_table([delta_g_mod4(RationalBase(5), a) for a in (1, 3)])
    with pytest.raises(SpecMismatchError):
        compare(census_doc, read_table(_write(tmp_path, "g5.tsv", render(other_g, "tsv"))))
