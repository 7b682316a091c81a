"""
Run configuration: a flat key-value document with one section per concern.

    [circuit]
    resistance = 10
    drive_amplitude = 9

    [analysis]
    transient_cycles = 200

Unknown sections and keys are rejected, missing keys take their defaults, SI units throughout.
"""
import configparser
import io
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from rld_chaos.analysis import AnalysisSettings
from rld_chaos.chaoskit import ChaosSettings
from rld_chaos.errors import ConfigError
from rld_chaos.integrator import IntegrationConfig
from rld_chaos.model import CircuitParams, ExpDiodeParams, State


class OutputFormat(Enum):
    CSV = "csv"
    SVG = "svg"


class InitialState(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    charge: Optional[float] = None  # None starts on the switching surface, q = q0
    current: float = 0.0

    def state(self, params: CircuitParams) -> State:
        charge = params.charge_offset if self.charge is None else self.charge
        return State(charge=charge, current=self.current)


class OutputSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Path = Path("out")
    formats: frozenset[OutputFormat] = frozenset({OutputFormat.CSV, OutputFormat.SVG})
    plot_cycles: int = Field(20, ge=1)

    @field_validator("formats", mode="before")
    @classmethod
    def comma_separated(cls, value: Any) -> Any:
        if isinstance(value, str):
            return frozenset(item.strip() for item in value.split(",") if item.strip())
        return value

    @property
    def svg(self) -> bool:
        return OutputFormat.SVG in self.formats


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    circuit: CircuitParams = CircuitParams()
    integration: IntegrationConfig = IntegrationConfig()
    initial: InitialState = InitialState()
    analysis: AnalysisSettings = AnalysisSettings()
    chaoskit: ChaosSettings = ChaosSettings()
    exponential: ExpDiodeParams = ExpDiodeParams()
    output: OutputSettings = OutputSettings()


def sections() -> dict[str, Type[BaseModel]]:
    return {name: field.annotation for name, field in RunConfig.model_fields.items()}


def _line_of(error: configparser.Error) -> Optional[int]:
    if (line := getattr(error, "lineno", None)) is not None:
        return line
    if isinstance(error, configparser.ParsingError) and getattr(error, "errors", None):
        return error.errors[0][0]
    return None


def _describe(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in problem['loc'])}: {problem['msg']}"
        for problem in error.errors()
    )


def parse_config(text: str) -> RunConfig:
    """
    Parse a configuration document into a validated RunConfig.
    Example:
    >>> parse_config("[circuit]\\nresistance = 20\\n").circuit.resistance
    20.0
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        line = _line_of(e)
        where = f"line {line}: " if line is not None else ""
        raise ConfigError(f"{where}{e.message}") from e

    if parser.defaults():
        raise ConfigError(f"[{parser.default_section}] is not a configuration section")
    document = {name: dict(parser.items(name)) for name in parser.sections()}
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_describe(e)}") from e


def load_config(path: Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _format(value: Any) -> str:
    if isinstance(value, list):
        return ", ".join(sorted(str(item) for item in value))
    return str(value)


def echo_config(cfg: RunConfig) -> str:
    """The fully resolved configuration; parse_config(echo_config(cfg)) == cfg."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name in sections():
        values = getattr(cfg, name).model_dump(mode="json", exclude_none=True)
        parser[name] = {key: _format(value) for key, value in values.items()}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()
