"""
CSV files with a header row, a units row and LF line endings.

Each file is described by a row model whose fields are the columns, in order, annotated with
their unit. The file name follows the class name (PortraitRow -> portrait.csv) unless the model
sets a `file_name` ClassVar:

    class PortraitRow(BaseModel):
        v_in_V: Annotated[float, Unit.VOLT]
        v_r_V: Annotated[float, Unit.VOLT]
"""
from pathlib import Path
from typing import Annotated, Any, ClassVar, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from rld_chaos.errors import ContractError, OutputError
from rld_chaos.utils import Unit, get_columns, get_file_name, get_units, is_model

PathLike = Union[str, Path]


class TimeseriesRow(BaseModel):
    t_s: Annotated[float, Unit.SECOND]
    q_C: Annotated[float, Unit.COULOMB]
    i_A: Annotated[float, Unit.AMPERE]
    v_r_V: Annotated[float, Unit.VOLT]
    region: Annotated[int, Unit.LABEL]


class PortraitRow(BaseModel):
    v_in_V: Annotated[float, Unit.VOLT]
    v_r_V: Annotated[float, Unit.VOLT]


class BifurcationRow(BaseModel):
    E_V: Annotated[float, Unit.VOLT]
    v_r_section_V: Annotated[float, Unit.VOLT]


class ClassRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    file_name: ClassVar[str] = "classes.csv"

    E_V: Annotated[float, Unit.VOLT]
    period_class: Annotated[str, Unit.LABEL] = Field(alias="class")


class LyapunovRow(BaseModel):
    tau: Annotated[int, Unit.DIMENSIONLESS]
    m: Annotated[int, Unit.DIMENSIONLESS]
    lambda_per_s: Annotated[float, Unit.PER_SECOND]
    lambda_per_drive_period: Annotated[float, Unit.DIMENSIONLESS]
    replacements: Annotated[int, Unit.DIMENSIONLESS]


class DivergenceRow(BaseModel):
    t_s: Annotated[float, Unit.SECOND]
    d_before: Annotated[float, Unit.DIMENSIONLESS]
    d_after: Annotated[float, Unit.DIMENSIONLESS]
    log_sum: Annotated[float, Unit.DIMENSIONLESS]


class ExpTimeseriesRow(BaseModel):
    t_s: Annotated[float, Unit.SECOND]
    i_A: Annotated[float, Unit.AMPERE]
    v_r_V: Annotated[float, Unit.VOLT]


class ComparisonRow(BaseModel):
    t_s: Annotated[float, Unit.SECOND]
    v_r_pwl_V: Annotated[float, Unit.VOLT]
    v_r_exp_V: Annotated[float, Unit.VOLT]


class SeriesRow(BaseModel):
    value: Annotated[float, Unit.DIMENSIONLESS]


SUMMARY_LABEL = "class"

T = TypeVar("T", bound=BaseModel)


def build_header(model_type: Type[BaseModel]) -> str:
    for name, field in model_type.model_fields.items():
        if is_model(field):
            raise TypeError(f"Nested models not supported, field {name} is a Pydantic model.")
    return ",".join(get_columns(model_type)) + "\n" + ",".join(get_units(model_type)) + "\n"


def write_frame(directory: PathLike, model_type: Type[BaseModel], frame: pd.DataFrame) -> Path:
    columns = get_columns(model_type)
    if tuple(frame.columns) != columns:
        raise TypeError(f"Frame columns {tuple(frame.columns)} do not match model {model_type}, expected {columns}")
    path = Path(directory) / get_file_name(model_type)
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(build_header(model_type))
            frame.to_csv(handle, header=False, index=False, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"could not write {path}: {e}") from e
    return path


def write_columns(directory: PathLike, model_type: Type[BaseModel], **columns: Any) -> Path:
    """
    Write equally long column arrays as the file of `model_type`. Example:
    >>> write_columns("out", PortraitRow, v_in_V=[0.0, 1.0], v_r_V=[0.5, 0.25])
    PosixPath('out/portrait.csv')
    """
    expected = get_columns(model_type)
    if any(not_found := [name for name in columns if name not in expected]):
        raise TypeError(f"columns {not_found} not found in model {model_type}")
    if any(missing := [name for name in expected if name not in columns]):
        raise TypeError(f"columns {missing} of model {model_type} not given")
    if len(lengths := {len(np.asarray(values)) for values in columns.values()}) > 1:
        raise TypeError(f"columns have unequal lengths {sorted(lengths)}")
    frame = pd.DataFrame({name: np.asarray(columns[name]) for name in expected})
    return write_frame(directory, model_type, frame)


def write(directory: PathLike, models: list[BaseModel]) -> Path:
    """Write rows `models`, all of one row model, to that model's file in `directory`."""
    if len(models) == 0:
        raise TypeError("Cannot write empty list, the row type is unknown.")
    if len(model_types := set(type(model) for model in models)) > 1:
        raise TypeError(f"Expected only one type of model in models, got {model_types}.")

    model_type = type(models[0])
    frame = pd.DataFrame(
        [model.model_dump(by_alias=True) for model in models], columns=list(get_columns(model_type))
    )
    return write_frame(directory, model_type, frame)


def append_summary(path: PathLike, *labels: str) -> None:
    try:
        with Path(path).open("a", encoding="utf-8", newline="") as handle:
            handle.write(",".join((SUMMARY_LABEL, *labels)) + "\n")
    except OSError as e:
        raise OutputError(f"could not write {path}: {e}") from e


def raw_read(path: PathLike, **kwargs: Any) -> pd.DataFrame:
    return pd.read_csv(path, skiprows=[1], **kwargs)


def read_units(path: PathLike) -> tuple[str, ...]:
    with Path(path).open(encoding="utf-8") as handle:
        handle.readline()
        return tuple(handle.readline().rstrip("\n").split(","))


def read_where(directory: PathLike, model_type: Type[T], **constraints: Any) -> list[T]:
    """
    Read the rows of `model_type`'s file in `directory`, potentially matching constraints.
    Example:
    >>> read_where("out", ClassRow, E_V=0.1)
    [ClassRow(E_V=0.1, period_class='P1')]
    """
    columns = get_columns(model_type)
    if any(not_found := [col for col in constraints.keys() if col not in columns]):
        raise TypeError(f"columns {not_found} not found in model {model_type}")

    path = Path(directory) / get_file_name(model_type)
    frame = raw_read(path)
    if tuple(frame.columns) != columns:
        raise TypeError(f"{path} has columns {tuple(frame.columns)}, model {model_type} expects {columns}")
    for name, value in constraints.items():
        frame = frame[frame[name] == value]
    return [model_type.model_validate(row) for row in frame.to_dict(orient="records")]


def read_comparison(path: PathLike) -> tuple[pd.DataFrame, tuple[str, ...]]:
    """Numeric rows of a comparison file and the labels of its trailing summary row."""
    frame = raw_read(path, dtype=str, keep_default_na=False)
    if len(frame) == 0 or frame.iloc[-1, 0] != SUMMARY_LABEL:
        raise ContractError(f"{path} does not end with a '{SUMMARY_LABEL}' summary row")
    labels = tuple(frame.iloc[-1, 1:])
    return frame.iloc[:-1].astype(float).reset_index(drop=True), labels


def read_series(path: PathLike) -> np.ndarray:
    """The single value column of an externally supplied series file."""
    frame = raw_read(path)
    if frame.shape[1] != 1:
        raise ContractError(f"{path} must hold exactly one value column, found {frame.shape[1]}")
    values = pd.to_numeric(frame.iloc[:, 0], errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise ContractError(f"{path} contains values that are missing or not finite numbers")
    return values
