import json

import numpy as np
import pytest

from pmax_fields.config import ConfigError, load_config, model_from_config, spec_digest, validate_config
from pmax_fields.fields import INDEPENDENT_Z, FieldSample, Location, Schlather, example_spec, simulate_pmax
from pmax_fields.io import (
    format_float,
    read_sample_csv,
    scatter_svg,
    write_json,
    write_pairs_csv,
    write_sample_csv,
)
from pmax_fields.stats_core import DomainError, RngStream

BASE = {
    "model": {
        "innovation": "schlather",
        "weights": ["2/3", "1/3"],
        "locations": [{"id": "x", "x1": 0, "x2": 0}, {"id": "xp", "x1": 1, "x2": 0}],
        "alpha": {"x": 1.0, "xp": 2.0},
    }
}


def with_model(**changes):
    doc = json.loads(json.dumps(BASE))
    doc["model"].update(changes)
    return doc


# --- config ---------------------------------------------------------------

def test_valid_config_builds_spec():
    spec = model_from_config(validate_config(BASE))
    assert isinstance(spec.innovation, Schlather)
    assert spec.temporal_weights == pytest.approx((2 / 3, 1 / 3), abs=1e-16)
    assert spec.alpha["xp"] == 2.0


def test_numeric_weights_accepted():
    doc = with_model(weights=[0.6666666666666666, 0.3333333333333333])
    validate_config(doc)


@pytest.mark.parametrize("doc", [
    {**BASE, "extra": 1},
    with_model(colour="red"),
    with_model(alpha={"x": 0.0, "xp": 1.0}),
    with_model(weights=[0.6, 0.3]),
    with_model(weights=[0.666667, 0.333334]),
    with_model(alpha={"x": 1.0, "xp": 1.0, "nowhere": 1.0}),
    with_model(alpha={"x": 1.0}),
    with_model(innovation="smith"),
    with_model(correlation={"c2": 1.0, "nu": 3.0}),
    {**BASE, "run": {"unknown": 1}},
    {**BASE, "seed": -1},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        validate_config(doc)


def test_schema_lists_every_problem():
    doc = {**with_model(alpha={"x": -1.0, "xp": 1.0}), "bogus": True}
    with pytest.raises(ConfigError) as info:
        validate_config(doc)
    assert "bogus" in str(info.value) and "model/alpha/x" in str(info.value)


def test_load_config_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_independent_z_option():
    spec = model_from_config(with_model(z_coupling="independent"))
    assert spec.z_coupling == INDEPENDENT_Z


def test_spec_digest_stable():
    a = spec_digest(BASE)
    b = spec_digest(json.loads(json.dumps(BASE, sort_keys=True)))
    assert a == b and len(a) == 16
    assert spec_digest(with_model(innovation="independent")) != a


# --- CSV ------------------------------------------------------------------

def test_format_float_round_trip():
    for v in (1.0, 0.1, 1 / 3, 1e-300, 123456789.123456789):
        assert float(format_float(v)) == v
    assert format_float(1 / 3).count("3") >= 12


def test_sample_csv_round_trip(tmp_path):
    locs = (Location("b", 0, 0), Location("a", 1, 0))
    sample = simulate_pmax(example_spec(1, 0.7, locations=locs), 25, RngStream(1))
    path = tmp_path / "s.csv"
    assert write_sample_csv(sample, path) == 50
    lines = path.read_text().splitlines()
    assert lines[0] == "n,loc,value"
    assert lines[1].startswith("1,a,") and lines[2].startswith("1,b,")
    back = read_sample_csv(path)
    assert back.location_ids == ("a", "b")
    assert np.array_equal(back.column("a"), sample.column("a"))
    assert np.array_equal(back.column("b"), sample.column("b"))


@pytest.mark.parametrize("text", [
    "",
    "a,b,c\n1,x,1.0\n",
    "n,loc,value\n",
    "n,loc,value\n1,x,1.0\n3,x,1.0\n",
    "n,loc,value\n1,x,1.0\n1,y,1.0\n2,x,1.0\n",
    "n,loc,value\n1,x,abc\n",
    "n,loc,value\n1,x,1.0\n1,x,2.0\n",
    "n,loc,value\n1,x\n",
])
def test_read_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DomainError):
        read_sample_csv(path)


def test_pairs_csv(tmp_path):
    path = tmp_path / "p.csv"
    write_pairs_csv(np.array([[0.25, 0.5], [0.75, 0.125]]), path)
    assert path.read_text() == "u,v\n0.25,0.5\n0.75,0.125\n"


# --- SVG and JSON ---------------------------------------------------------

def test_svg_self_contained_and_capped():
    pairs = RngStream(3).uniform((12_000, 2))
    svg = scatter_svg(pairs, title="a<b", point_cap=5000)
    assert svg.startswith("<?xml")
    assert "<!-- generator: pmax_fields" in svg
    assert svg.count("<circle") == 5000
    assert "a&lt;b" in svg
    assert "href" not in svg
    assert scatter_svg(pairs, point_cap=5000) == scatter_svg(pairs, point_cap=5000)


def test_svg_small_sample_keeps_all_points():
    pairs = RngStream(3).uniform((10, 2))
    assert scatter_svg(pairs).count("<circle") == 10


def test_svg_raw_axes():
    pairs = 1.0 + RngStream(3).uniform((10, 2)) * 100
    assert scatter_svg(pairs, unit_square=False).count("<circle") == 10


def test_svg_rejects_empty():
    with pytest.raises(DomainError):
        scatter_svg(np.empty((0, 2)))


def test_write_json_nulls_nonfinite(tmp_path):
    text = write_json({"b": float("nan"), "a": np.float64(0.5), "c": [np.int64(2), True]})
    assert json.loads(text) == {"a": 0.5, "b": None, "c": [2, True]}
    assert text.index('"a"') < text.index('"b"')


def test_field_sample_from_file_is_plain():
    sample = FieldSample(np.array([[1.5]]), ("x",), "Y")
    assert sample.spec is None and sample.n_time == 1
