import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rabiq.model import DomainError
from rabiq.output import (CSV_SCHEMA, JSON_SCHEMA, JobConfig, data_section, format_value,
                          parse_config_text, write_table)


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(float("nan")) == "nan"
    assert format_value(float("-inf")) == "-inf"
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(3) == "3"
    assert format_value(None) == ""
    assert format_value([1.0, 2.5]) == "1 2.5"
    assert [format_value(c) for c in (1 + 0j, -1 + 0j, 1j, -1j)] == ["1", "-1", "i", "-i"]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip(x):
    assert float(format_value(x)) == x


def test_parse_config_text():
    raw = parse_config_text("# comment\nx-range = -1 5  # trailing\n\ndelta=0.4\n")
    assert raw == {"x_range": "-1 5", "delta": "0.4"}
    with pytest.raises(DomainError):
        parse_config_text("delta 0.4")
    with pytest.raises(DomainError):
        parse_config_text(" = 3")


settings_values = st.one_of(
    st.floats(allow_nan=False, allow_infinity=False),
    st.integers(-10**6, 10**6),
    st.booleans(),
    st.sampled_from(["rabi", "up", "csv"]),
    st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=2, max_size=3),
)


@given(st.dictionaries(st.from_regex(r"[a-z][a-z_]{0,8}", fullmatch=True), settings_values,
                       max_size=6))
def test_job_config_round_trip(settings):
    job = JobConfig("spectrum", settings)
    back = JobConfig.from_text(job.to_text())
    assert back == job


def test_job_config_needs_subcommand():
    with pytest.raises(DomainError):
        JobConfig.from_text("g = 0.3\n")


def test_csv_layout(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    buf = io.StringIO()
    write_table(buf, JobConfig("gfun", {"g": 0.5}), ["x", "y"], [(0.0, 1.5)], "csv",
                {"peaks": [0.4, 1.3]}, {"series_tol": 1e-13})
    lines = buf.getvalue().splitlines()
    assert lines == [
        f"# {CSV_SCHEMA}",
        "# generated: 1970-01-01T00:00:00Z",
        "# config: subcommand=gfun",
        "# config: g=0.5",
        "# tolerance: series_tol=1e-13",
        "# meta: peaks=0.40000000000000002 1.3",
        "x,y",
        "0,1.5",
    ]
    assert "generated" not in data_section(buf.getvalue())


def test_json_layout():
    buf = io.StringIO()
    write_table(buf, JobConfig("judd", {"n": 1}), ["g"], [(0.4,), (float("nan"),)], "json")
    doc = json.loads(buf.getvalue())
    assert doc["schema"] == JSON_SCHEMA
    assert doc["config"] == {"subcommand": "judd", "n": 1}
    assert doc["rows"] == [[0.4], [None]]
    assert '"generated"' not in data_section(buf.getvalue())


def test_unknown_format():
    with pytest.raises(DomainError):
        write_table(io.StringIO(), JobConfig("x"), ["a"], [], "xml")
