import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from functools import partial
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.distance import pdist

from rld_chaos.errors import ContractError, InsufficientDataError, IntegrationError
from rld_chaos.integrator import (
    IntegrationConfig,
    ScalarTrajectory,
    Trajectory,
    grid_steps,
    integrate,
)
from rld_chaos.model import CircuitParams, State, drive_series

logger = logging.getLogger(__name__)

MIN_RECORDED_CYCLES = 16


class AnalysisSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    transient_cycles: int = Field(200, ge=0)
    record_cycles: int = Field(256, ge=MIN_RECORDED_CYCLES)
    epsilon: float = Field(1e-3, gt=0)
    max_period: int = Field(16, ge=1)
    scale_floor: float = Field(1e-4, ge=0)
    e_min: float = 0.1
    e_max: float = 10.0
    steps: int = Field(200, ge=2)

    @model_validator(mode="after")
    def classifiable(self) -> "AnalysisSettings":
        if self.record_cycles < 4 * self.max_period:
            raise ValueError(
                f"record_cycles ({self.record_cycles}) must be at least 4 * max_period = {4 * self.max_period}"
            )
        if not self.e_min < self.e_max:
            raise ValueError(f"e_min ({self.e_min}) must be below e_max ({self.e_max})")
        return self


class StroboscopicSection(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    drive_period: float
    transient_cycles: int
    points: np.ndarray  # (cycles, state dimension)


class PeriodKind(Enum):
    PERIODIC = "periodic"
    APERIODIC = "aperiodic"


class PeriodClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: PeriodKind
    period: Optional[int] = None

    @model_validator(mode="after")
    def period_matches_kind(self) -> "PeriodClass":
        if self.kind == PeriodKind.PERIODIC and (self.period is None or self.period < 1):
            raise ValueError(f"periodic class needs a period >= 1, got {self.period}")
        if self.kind == PeriodKind.APERIODIC and self.period is not None:
            raise ValueError("aperiodic class carries no period")
        return self

    @classmethod
    def periodic(cls, period: int) -> "PeriodClass":
        return cls(kind=PeriodKind.PERIODIC, period=period)

    @classmethod
    def aperiodic(cls) -> "PeriodClass":
        return cls(kind=PeriodKind.APERIODIC)

    @property
    def label(self) -> str:
        return f"P{self.period}" if self.kind == PeriodKind.PERIODIC else "APERIODIC"

    @classmethod
    def from_label(cls, label: str) -> "PeriodClass":
        if label == "APERIODIC":
            return cls.aperiodic()
        if label.startswith("P") and label[1:].isdigit():
            return cls.periodic(int(label[1:]))
        raise ValueError(f"not a period class label: {label!r}")


class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amplitude: float
    section_voltages: np.ndarray
    period_class: Optional[PeriodClass] = None
    error: Optional[str] = None


class BifurcationDiagram(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amplitudes: np.ndarray
    sections: list[np.ndarray]
    classes: list[Optional[PeriodClass]]
    errors: list[Optional[str]]

    @model_validator(mode="after")
    def aligned(self) -> "BifurcationDiagram":
        lengths = {len(self.amplitudes), len(self.sections), len(self.classes), len(self.errors)}
        if len(lengths) != 1:
            raise ValueError(f"diagram columns have unequal lengths {sorted(lengths)}")
        if np.any(np.diff(self.amplitudes) <= 0):
            raise ValueError("amplitudes must be strictly increasing")
        return self

    @property
    def labels(self) -> list[str]:
        return [c.label if c is not None else "ERROR" for c in self.classes]

    @classmethod
    def from_points(cls, points: list[SweepPoint]) -> "BifurcationDiagram":
        points = sorted(points, key=lambda p: p.amplitude)
        return cls(
            amplitudes=np.array([p.amplitude for p in points]),
            sections=[p.section_voltages for p in points],
            classes=[p.period_class for p in points],
            errors=[p.error for p in points],
        )


def steps_per_period(dt: float, period: float) -> int:
    ratio = period / dt
    steps = round(ratio)
    if steps < 1 or abs(ratio - steps) > 1e-9 * ratio:
        raise ContractError(
            f"sampling interval {dt} s does not divide the drive period {period} s"
        )
    return steps


def stroboscopic_section(
    traj: Union[Trajectory, ScalarTrajectory], params: CircuitParams, transient_cycles: int
) -> StroboscopicSection:
    per_period = steps_per_period(traj.dt, params.drive_period)
    total_cycles = (len(traj) - 1) // per_period
    required = transient_cycles + MIN_RECORDED_CYCLES
    if total_cycles < required:
        raise InsufficientDataError(
            f"trajectory spans {total_cycles} drive periods, at least {required} are required"
        )
    indices = np.arange(transient_cycles + 1, total_cycles + 1) * per_period
    return StroboscopicSection(
        drive_period=params.drive_period,
        transient_cycles=transient_cycles,
        points=traj.samples[indices].copy(),
    )


def recurs(points: np.ndarray, lag: int, radius: float) -> bool:
    distances = np.linalg.norm(points[lag:] - points[:-lag], axis=1)
    return bool(np.all(distances <= radius))


def normalized_points(points: np.ndarray) -> np.ndarray:
    """Each coordinate divided by its largest magnitude; charge and current are not commensurate."""
    points = np.asarray(points, dtype=float).reshape(len(points), -1)
    scale = np.max(np.abs(points), axis=0)
    scale[scale == 0] = 1.0
    return points / scale


def classify_period(
    section: StroboscopicSection,
    epsilon: float = 1e-3,
    max_period: int = 16,
    scale_floor: float = 1e-4,
) -> PeriodClass:
    if len(section.points) < 4 * max_period:
        raise InsufficientDataError(
            f"{len(section.points)} section points, classification up to period {max_period} "
            f"needs at least {4 * max_period}"
        )
    points = normalized_points(section.points)
    diameter = float(pdist(points).max())
    if diameter <= scale_floor:
        return PeriodClass.periodic(1)
    for lag in range(1, max_period + 1):
        if recurs(points, lag, epsilon * diameter):
            return PeriodClass.periodic(lag)
    return PeriodClass.aperiodic()


def sweep_point(
    base: CircuitParams,
    amplitude: float,
    cfg: IntegrationConfig,
    transient_cycles: int,
    record_cycles: int,
    epsilon: float = 1e-3,
    max_period: int = 16,
    scale_floor: float = 1e-4,
) -> SweepPoint:
    """One amplitude of a sweep, integrated from (q0, 0) with no warm start."""
    params = base.model_copy(update={"drive_amplitude": float(amplitude)})
    span = cfg.spanning(transient_cycles + record_cycles, params.drive_period)
    try:
        traj = integrate(params, State(charge=params.charge_offset, current=0.0), span)
    except IntegrationError as e:
        logger.warning(f"E = {amplitude} V: {e}")
        return SweepPoint(amplitude=amplitude, section_voltages=np.empty(0), error=str(e))
    section = stroboscopic_section(traj, params, transient_cycles)
    period_class = classify_period(section, epsilon, max_period, scale_floor)
    logger.debug(f"E = {amplitude} V: {period_class.label}")
    return SweepPoint(
        amplitude=amplitude,
        section_voltages=params.resistance * section.points[:, 1],
        period_class=period_class,
    )


def bifurcation_sweep(
    base: CircuitParams,
    e_min: float,
    e_max: float,
    steps: int,
    cfg: IntegrationConfig,
    transient_cycles: int,
    record_cycles: int,
    epsilon: float = 1e-3,
    max_period: int = 16,
    scale_floor: float = 1e-4,
    jobs: int = 1,
) -> BifurcationDiagram:
    if not e_min < e_max:
        raise ContractError(f"e_min ({e_min}) must be below e_max ({e_max})")
    if steps < 2:
        raise ContractError(f"a sweep needs at least 2 steps, got {steps}")

    amplitudes = [float(e) for e in np.linspace(e_min, e_max, steps)]
    task = partial(
        sweep_point,
        base,
        cfg=cfg,
        transient_cycles=transient_cycles,
        record_cycles=record_cycles,
        epsilon=epsilon,
        max_period=max_period,
        scale_floor=scale_floor,
    )
    logger.info(f"sweeping {steps} amplitudes in [{e_min}, {e_max}] V with {jobs} job(s)")
    if jobs > 1:
        # the compiled integration loop releases the GIL
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(task, amplitudes))
    else:
        points = [task(amplitude) for amplitude in amplitudes]
    return BifurcationDiagram.from_points(points)


def portrait(
    traj: Trajectory, params: CircuitParams, transient_cycles: int = 0
) -> np.ndarray:
    """(v_in, v_R) pairs over the samples after `transient_cycles` drive periods."""
    start = min(len(traj), grid_steps(transient_cycles * params.drive_period, traj.dt))
    times = traj.times[start:]
    return np.column_stack(
        [drive_series(times, params), traj.resistor_voltage(params)[start:]]
    )
