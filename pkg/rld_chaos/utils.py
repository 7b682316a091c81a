import re
from enum import Enum
from typing import Type, get_origin

from pydantic import BaseModel
from pydantic.fields import FieldInfo


class Unit(Enum):
    SECOND = "s"
    COULOMB = "C"
    AMPERE = "A"
    VOLT = "V"
    PER_SECOND = "1/s"
    DIMENSIONLESS = "1"
    LABEL = "-"


def get_file_name(model_type: type) -> str:
    if hasattr(model_type, "file_name"):
        return model_type.file_name
    else:
        name = re.sub(r"Row$", "", model_type.__name__)
        return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower() + ".csv"


def is_model(field: FieldInfo) -> bool:
    annotation = field.annotation
    if get_origin(annotation) is not None:  # parametrized generics are not classes
        return False
    return isinstance(annotation, type) and issubclass(annotation, BaseModel)


def get_unit(field: FieldInfo) -> Unit:
    units = [datum for datum in field.metadata or [] if isinstance(datum, Unit)]
    if len(units) > 1:
        raise TypeError(f"Expected at most one unit annotation, got {units}")
    return units[0] if units else Unit.LABEL


def get_units(model_type: Type[BaseModel]) -> tuple[str, ...]:
    return tuple(get_unit(field).value for field in model_type.model_fields.values())


def get_columns(model_type: Type[BaseModel]) -> tuple[str, ...]:
    return tuple(field.alias or name for name, field in model_type.model_fields.items())
