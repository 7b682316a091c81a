from typing import Annotated, Optional

import numpy as np
import pytest
from pydantic import BaseModel

from rld_chaos.errors import ContractError, OutputError
from rld_chaos.read_write import (
    ClassRow,
    ComparisonRow,
    DivergenceRow,
    ExpTimeseriesRow,
    LyapunovRow,
    PortraitRow,
    SeriesRow,
    TimeseriesRow,
    append_summary,
    build_header,
    raw_read,
    read_comparison,
    read_series,
    read_units,
    read_where,
    write,
    write_columns,
)
from rld_chaos.utils import Unit, get_columns, get_file_name, get_unit, get_units, is_model


class Reading(BaseModel):
    t_s: Annotated[float, Unit.SECOND]
    note: str


class Nested(BaseModel):
    reading: Reading


def test_roundtrip_simple(tmp_path):
    classes = [
        ClassRow(E_V=0.1, period_class="P1"),
        ClassRow(E_V=0.2, period_class="APERIODIC"),
    ]
    write(tmp_path, classes)
    result = read_where(tmp_path, ClassRow)
    assert len(result) == 2 and classes[0] in result and classes[1] in result
    assert read_where(tmp_path, ClassRow, E_V=0.2) == [classes[1]]
    assert read_where(tmp_path, ClassRow, **{"class": "P1"}) == [classes[0]]


def test_header_units_and_line_endings(tmp_path):
    path = write(tmp_path, [ClassRow(E_V=0.1, period_class="P2")])
    assert path == tmp_path / "classes.csv"
    assert path.read_bytes() == b"E_V,class\nV,-\n0.1,P2\n"


def test_write_columns(tmp_path):
    path = write_columns(tmp_path, PortraitRow, v_in_V=np.array([0.0, 1.0]), v_r_V=[0.5, 0.25])
    assert path.read_text(encoding="utf-8") == "v_in_V,v_r_V\nV,V\n0.0,0.5\n1.0,0.25\n"
    assert read_units(path) == ("V", "V")
    frame = raw_read(path)
    np.testing.assert_array_equal(frame["v_r_V"], [0.5, 0.25])


def test_timeseries_roundtrip(tmp_path):
    times = np.arange(4) * 1e-8
    write_columns(
        tmp_path,
        TimeseriesRow,
        t_s=times,
        q_C=[0.0, 1e-12, -2.5e-11, 3e-10],
        i_A=[0.0, 1e-3, 2e-3, -1e-3],
        v_r_V=[0.0, 1e-2, 2e-2, -1e-2],
        region=np.array([1, 2, 1, 2]),
    )
    rows = read_where(tmp_path, TimeseriesRow, region=2)
    assert [row.t_s for row in rows] == [times[1], times[3]]
    assert rows[1].q_C == 3e-10
    assert read_units(tmp_path / "timeseries.csv") == ("s", "C", "A", "V", "-")


def test_write_rejects_bad_input(tmp_path):
    with pytest.raises(TypeError):
        write(tmp_path, [])
    with pytest.raises(TypeError):
        write(tmp_path, [ClassRow(E_V=0.1, period_class="P1"), SeriesRow(value=1.0)])
    with pytest.raises(TypeError):
        write_columns(tmp_path, PortraitRow, v_in_V=[0.0, 1.0], v_r_V=[0.5])
    with pytest.raises(TypeError):
        write_columns(tmp_path, PortraitRow, v_in_V=[0.0], v_r_V=[0.5], v_l_V=[0.1])
    with pytest.raises(TypeError):
        write_columns(tmp_path, PortraitRow, v_in_V=[0.0])
    with pytest.raises(TypeError):
        build_header(Nested)


def test_read_where_rejects_unknown_constraint(tmp_path):
    write(tmp_path, [ClassRow(E_V=0.1, period_class="P1")])
    with pytest.raises(TypeError):
        read_where(tmp_path, ClassRow, amplitude=0.1)


def test_write_into_missing_directory_is_output_error(tmp_path):
    with pytest.raises(OutputError):
        write(tmp_path / "missing", [SeriesRow(value=1.0)])


def test_comparison_summary_row(tmp_path):
    path = write_columns(tmp_path, ComparisonRow, t_s=[0.0, 1e-8], v_r_pwl_V=[0.0, 0.5], v_r_exp_V=[0.0, 0.25])
    append_summary(path, "APERIODIC", "P1")
    assert path.read_text(encoding="utf-8").endswith("\nclass,APERIODIC,P1\n")
    frame, labels = read_comparison(path)
    assert labels == ("APERIODIC", "P1")
    np.testing.assert_array_equal(frame["v_r_exp_V"], [0.0, 0.25])


def test_comparison_without_summary_is_rejected(tmp_path):
    path = write_columns(tmp_path, ComparisonRow, t_s=[0.0], v_r_pwl_V=[0.0], v_r_exp_V=[0.0])
    with pytest.raises(ContractError):
        read_comparison(path)


def test_read_series(tmp_path):
    path = write_columns(tmp_path, SeriesRow, value=[1.0, -0.5, 2.0])
    np.testing.assert_array_equal(read_series(path), [1.0, -0.5, 2.0])

    two_columns = tmp_path / "two.csv"
    two_columns.write_text("a,b\n1,1\n1.0,2.0\n", encoding="utf-8")
    with pytest.raises(ContractError):
        read_series(two_columns)

    gaps = tmp_path / "gaps.csv"
    gaps.write_text("value\n1\n1.0\n\n2.0\nnan\n", encoding="utf-8")
    with pytest.raises(ContractError):
        read_series(gaps)

    words = tmp_path / "words.csv"
    words.write_text("value\n1\n1.0\nabc\n2.0\n", encoding="utf-8")
    with pytest.raises(ContractError, match="not finite numbers"):
        read_series(words)


def test_get_file_name():
    assert get_file_name(TimeseriesRow) == "timeseries.csv"
    assert get_file_name(ExpTimeseriesRow) == "exp_timeseries.csv"
    assert get_file_name(LyapunovRow) == "lyapunov.csv"
    assert get_file_name(DivergenceRow) == "divergence.csv"
    assert get_file_name(ClassRow) == "classes.csv"


def test_units_and_columns():
    assert get_columns(ClassRow) == ("E_V", "class")
    assert get_units(LyapunovRow) == ("1", "1", "1/s", "1", "1")
    assert get_unit(Reading.model_fields["note"]) == Unit.LABEL

    class TwoUnits(BaseModel):
        t: Annotated[float, Unit.SECOND, Unit.VOLT]

    with pytest.raises(TypeError):
        get_unit(TwoUnits.model_fields["t"])


def test_is_model():
    class Bounds(BaseModel):
        window: tuple[float, float]
        optional: Optional[Reading] = None

    assert is_model(Nested.model_fields["reading"])
    assert not is_model(Reading.model_fields["note"])
    assert not is_model(Bounds.model_fields["window"])
    assert not is_model(Bounds.model_fields["optional"])
