import pytest

from hoivolume.priors import PriorError, load_priors, lookup, parse_priors, serialize_priors

HEADER = "category,ratio,gamma_min,gamma_max,box_ratio_mode\n"


@pytest.fixture(scope="module")
def table():
    return load_priors()


def test_bundled_table_has_80_valid_rows(table):
    assert len(table) == 80
    assert all(0 < p.gamma_min <= p.gamma_max for p in table)
    assert not any(p.box_ratio_mode for p in table)


@pytest.mark.parametrize("name, ratio, gmin, gmax", [
    ("apple", 0.205, 1.0, 1.0),
    ("horse", 5.385, 0.8, 1.2),
    ("train", 512.82, 1.0, 1.0),
    ("kite", 2.051, 0.5, 1.5),
])
def test_table_values(table, name, ratio, gmin, gmax):
    p = lookup(table, name)
    assert (p.ratio, p.gamma_min, p.gamma_max) == (ratio, gmin, gmax)


def test_lookup_normalizes_case_and_separators(table):
    assert lookup(table, "Baseball Bat") is lookup(table, "baseball_bat")
    assert lookup(table, " DINING table ") is lookup(table, "dining_table")


def test_unknown_category(table):
    with pytest.raises(PriorError, match="unicorn"):
        lookup(table, "unicorn")


def test_round_trip(table):
    assert parse_priors(serialize_priors(table)) == table


def test_gamma_order_error_names_row():
    text = HEADER + "apple,0.2,1.0,1.0,false\nbad,1.0,1.3,0.7,false\n"
    with pytest.raises(PriorError, match="row 3"):
        parse_priors(text)


@pytest.mark.parametrize("row, match", [
    ("apple,0.2,1.0,1.0,false\napple,0.3,1.0,1.0,false\n", "duplicate"),
    ("apple,0,1.0,1.0,false\n", "ratio must be positive"),
    ("apple,-1,1.0,1.0,false\n", "ratio must be positive"),
    ("apple,x,1.0,1.0,false\n", "not a number"),
    ("apple,0.2,1.0\n", "columns"),
    ("apple,0.2,1.0,1.0,maybe\n", "box_ratio_mode"),
])
def test_parse_errors(row, match):
    with pytest.raises(PriorError, match=match):
        parse_priors(HEADER + row)


def test_bad_header():
    with pytest.raises(PriorError, match="header"):
        parse_priors("name,ratio\napple,1\n")


def test_load_from_file(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text(HEADER + "boat,12.821,1.0,1.0,true\n")
    t = load_priors(path)
    assert lookup(t, "boat").box_ratio_mode
