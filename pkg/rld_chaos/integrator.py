import logging
import math
from typing import Callable, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rld_chaos import _kernels
from rld_chaos.errors import (
    ContractError,
    DivergenceError,
    DomainError,
    EventError,
    IntegrationError,
)
from rld_chaos.model import (
    CircuitParams,
    ExpDiodeParams,
    RegionId,
    State,
    kernel_params,
)

logger = logging.getLogger(__name__)

VectorField = Callable[[float, np.ndarray], np.ndarray]
ScalarFunction = Callable[[np.ndarray], float]
X = TypeVar("X", float, np.ndarray)


def _read_only(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def grid_steps(span: float, h: float) -> int:
    """Number of whole steps of `h` in `span`, forgiving round-off when span is a multiple of h."""
    ratio = span / h
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest)
    return int(math.floor(ratio))


class IntegrationConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    step_size: float = Field(1e-8, gt=0)
    t_start: float = 0.0
    t_end: float = 456e-5
    event_tolerance: float = Field(1e-17, gt=0)
    max_event_iterations: int = Field(64, ge=20)

    @model_validator(mode="after")
    def consistent_span(self) -> "IntegrationConfig":
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if not self.event_tolerance < self.step_size:
            raise ValueError(
                f"event_tolerance ({self.event_tolerance}) must be below step_size ({self.step_size})"
            )
        return self

    @property
    def n_steps(self) -> int:
        return grid_steps(self.t_end - self.t_start, self.step_size)

    def spanning(self, cycles: int, period: float) -> "IntegrationConfig":
        """The same settings stretched to cover exactly `cycles` drive periods."""
        return IntegrationConfig(
            **(self.model_dump() | {"t_end": self.t_start + cycles * period})
        )


class Trajectory(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t0: float
    dt: float
    states: np.ndarray  # (n, 2): charge, current
    switch_times: np.ndarray

    @model_validator(mode="after")
    def shapes(self) -> "Trajectory":
        if self.states.ndim != 2 or self.states.shape[1] != 2:
            raise ValueError(f"states must have shape (n, 2), got {self.states.shape}")
        return self

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def charge(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def current(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def samples(self) -> np.ndarray:
        return self.states

    def state_at(self, n: int) -> State:
        return State(charge=float(self.states[n, 0]), current=float(self.states[n, 1]))

    def regions(self, params: CircuitParams) -> np.ndarray:
        return np.where(
            self.charge - params.charge_offset > 0, RegionId.FORWARD, RegionId.REVERSE
        ).astype(int)

    def resistor_voltage(self, params: CircuitParams) -> np.ndarray:
        return params.resistance * self.current


class ScalarTrajectory(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t0: float
    dt: float
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def samples(self) -> np.ndarray:
        return self.values[:, np.newaxis]


def rk4_step(field: Callable[[float, X], X], t: float, x: X, h: float) -> X:
    k1 = field(t, x)
    k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = field(t + h, x + h * k3)
    for stage, k in enumerate((k1, k2, k3, k4), start=1):
        if not np.all(np.isfinite(k)):
            raise DivergenceError(f"non-finite RK4 stage {stage} at t = {t}", time=t)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def locate_crossing(
    field: VectorField,
    surface: ScalarFunction,
    t_lo: float,
    t_hi: float,
    x_lo: np.ndarray,
    tol: float,
    max_iterations: int = 200,
) -> tuple[float, np.ndarray]:
    """
    Bisect the first sign change of `surface` along the RK4 step from (t_lo, x_lo) to t_hi.
    Every trial state is re-integrated from x_lo in a single RK4 step, so the result is
    consistent with the step that revealed the crossing.
    """
    s_lo = surface(x_lo)
    if s_lo == 0:
        return t_lo, x_lo
    span = t_hi - t_lo
    s_hi = surface(rk4_step(field, t_lo, x_lo, span))
    if np.sign(s_lo) == np.sign(s_hi):
        raise ContractError(
            f"surface does not change sign on [{t_lo}, {t_hi}]: {s_lo} and {s_hi}"
        )

    lo, hi = 0.0, span
    iterations = 0
    while hi - lo >= tol:
        iterations += 1
        if iterations > max_iterations:
            raise EventError(
                f"crossing not resolved to {tol} s within {max_iterations} bisections",
                time=t_lo + lo,
            )
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.sign(surface(rk4_step(field, t_lo, x_lo, mid))) == np.sign(s_lo):
            lo = mid
        else:
            hi = mid
    return t_lo + hi, rk4_step(field, t_lo, x_lo, hi)


def integrate(params: CircuitParams, x0: State, cfg: IntegrationConfig) -> Trajectory:
    n_steps = cfg.n_steps
    states, switches, status, failed_at = _kernels.integrate_pwl(
        kernel_params(params),
        x0.charge - params.charge_offset,
        x0.current,
        cfg.t_start,
        cfg.step_size,
        n_steps,
        cfg.event_tolerance,
        cfg.max_event_iterations,
    )
    if status == _kernels.DIVERGED:
        last_good = cfg.t_start + (len(states) - 1) * cfg.step_size
        raise DivergenceError(
            f"state became non-finite at t = {failed_at} s, last good sample at t = {last_good} s",
            time=last_good,
        )
    if status == _kernels.EVENT_FAILED:
        raise EventError(
            f"switching event near t = {failed_at} s could not be resolved", time=failed_at
        )
    states[:, 0] += params.charge_offset
    logger.debug(f"integrated {n_steps} steps with {len(switches)} region switches")
    return Trajectory(
        t0=cfg.t_start,
        dt=cfg.step_size,
        states=_read_only(states),
        switch_times=_read_only(switches),
    )


def integrate_exponential(
    params: CircuitParams,
    exp_params: ExpDiodeParams,
    i0: float,
    cfg: IntegrationConfig,
) -> ScalarTrajectory:
    """
    Integrate the exponential-diode loop L di/dt = E w(wt) - R i - v_D(i).

    The diode's dynamic resistance is unbounded in reverse bias, so the field is arbitrarily
    stiff. Each grid step is a backward-Euler step solved in the diode-voltage coordinate
    u = v_D / (n V_T). There i = I_s expm1(u) never leaves the log domain, and the step residual is
    monotone in u, so every step has exactly one solution.
    """
    i_s = exp_params.saturation_current
    if not i0 > -i_s:
        raise DomainError(f"initial current {i0} A is at or below -I_s = {-i_s} A")
    n_steps = cfg.n_steps
    us, status, failed_at = _kernels.integrate_log_current(
        kernel_params(params),
        i_s,
        exp_params.slope_voltage,
        math.log1p(i0 / i_s),
        cfg.t_start,
        cfg.step_size,
        n_steps,
    )
    if status != _kernels.OK:
        raise IntegrationError(
            f"exponential model step near t = {failed_at} s has no solution in the log domain",
            time=failed_at,
        )
    values = i_s * np.expm1(us)
    if not np.all(np.isfinite(values)):
        raise DivergenceError("exponential model current became non-finite")
    logger.debug(f"integrated the exponential model over {n_steps} steps")
    return ScalarTrajectory(t0=cfg.t_start, dt=cfg.step_size, values=_read_only(values))
