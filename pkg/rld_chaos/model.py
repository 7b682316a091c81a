"""
Piecewise-linear state-space model of the driven series resistor-inductor-diode loop.

The diode is a parallel conductance/capacitance pair whose values switch at the threshold:
below it the junction capacitance C1 with conductance G1 (normally 0), above it the larger
capacitance C2 with conductance G2. In the shifted coordinate x = (q - q0, i) each region is
linear, dx/dt = A_k x + b_k(t).
"""
import math
from enum import Enum, IntEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rld_chaos.errors import DomainError

DEFAULT_INDUCTANCE = 1e-3
DEFAULT_FREQUENCY = 1e5


def resonant_capacitance(inductance: float, frequency: float) -> float:
    """Capacitance that puts the LC resonance at `frequency`, C = 1 / (w^2 L)."""
    omega = 2 * math.pi * frequency
    return 1 / (omega**2 * inductance)


DEFAULT_CAP_REGION1 = resonant_capacitance(DEFAULT_INDUCTANCE, DEFAULT_FREQUENCY)


class DriveWaveform(Enum):
    COSINE = "cosine"
    SINE = "sine"


class ThresholdMode(Enum):
    BOTH_REGIONS = "both_regions"
    FORWARD_ONLY = "forward_only"


class RegionId(IntEnum):
    REVERSE = 1
    FORWARD = 2


class CircuitParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    resistance: float = Field(10.0, gt=0)
    inductance: float = Field(DEFAULT_INDUCTANCE, gt=0)
    drive_amplitude: float = 9.0
    drive_frequency: float = Field(DEFAULT_FREQUENCY, gt=0)
    drive_waveform: DriveWaveform = DriveWaveform.COSINE
    threshold_voltage: float = 0.7
    charge_offset: float = 0.0
    cap_region1: float = Field(DEFAULT_CAP_REGION1, gt=0)
    cap_region2: float = Field(100 * DEFAULT_CAP_REGION1, gt=0)
    cond_region1: float = Field(0.0, ge=0)
    cond_region2: float = Field(0.01, ge=0)
    threshold_mode: ThresholdMode = ThresholdMode.BOTH_REGIONS

    @model_validator(mode="after")
    def forward_capacitance_dominates(self) -> "CircuitParams":
        if not self.cap_region2 > self.cap_region1:
            raise ValueError(
                f"cap_region2 ({self.cap_region2}) must exceed cap_region1 ({self.cap_region1})"
            )
        return self

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.drive_frequency

    @property
    def drive_period(self) -> float:
        return 1 / self.drive_frequency

    def capacitance(self, region: RegionId) -> float:
        return self.cap_region2 if region == RegionId.FORWARD else self.cap_region1

    def conductance(self, region: RegionId) -> float:
        return self.cond_region2 if region == RegionId.FORWARD else self.cond_region1

    def threshold_weight(self, region: RegionId) -> float:
        if self.threshold_mode == ThresholdMode.BOTH_REGIONS:
            return 1.0
        return 1.0 if region == RegionId.FORWARD else 0.0


class State(BaseModel):
    model_config = ConfigDict(frozen=True)

    charge: float
    current: float

    @field_validator("charge", "current")
    @classmethod
    def finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"state components must be finite, got {value}")
        return value

    def shifted(self, params: CircuitParams) -> np.ndarray:
        return np.array([self.charge - params.charge_offset, self.current])


class ExpDiodeParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    saturation_current: float = Field(1e-9, gt=0)
    emission_coefficient: float = Field(1.7, gt=0)
    thermal_voltage: float = Field(0.02585, gt=0)

    @property
    def slope_voltage(self) -> float:
        return self.emission_coefficient * self.thermal_voltage


StateDerivative = tuple[float, float]


def region_of_charge(shifted_charge: float) -> RegionId:
    # the switching surface itself belongs to the reverse region
    return RegionId.FORWARD if shifted_charge > 0 else RegionId.REVERSE


def region_of(state: State, params: CircuitParams) -> RegionId:
    return region_of_charge(state.charge - params.charge_offset)


def waveform(t: float, params: CircuitParams) -> float:
    phase = params.omega * t
    if params.drive_waveform == DriveWaveform.COSINE:
        return math.cos(phase)
    return math.sin(phase)


def drive_voltage(t: float, params: CircuitParams) -> float:
    return params.drive_amplitude * waveform(t, params)


def region_derivative(
    t: float, x0: float, x1: float, region: RegionId, params: CircuitParams
) -> StateDerivative:
    """Right-hand side in shifted coordinates with the region held fixed."""
    c = params.capacitance(region)
    g = params.conductance(region)
    drive = params.drive_amplitude * waveform(t, params)
    threshold = params.threshold_voltage * params.threshold_weight(region)
    dq = -(g / c) * x0 + x1
    di = (
        -x0 / (params.inductance * c)
        - (params.resistance / params.inductance) * x1
        + (drive - threshold) / params.inductance
    )
    return dq, di


def vector_field(t: float, state: State, params: CircuitParams) -> StateDerivative:
    region = region_of(state, params)
    return region_derivative(
        t, state.charge - params.charge_offset, state.current, region, params
    )


def system_matrix(region: RegionId, params: CircuitParams) -> np.ndarray:
    c = params.capacitance(region)
    g = params.conductance(region)
    return np.array(
        [
            [-g / c, 1.0],
            [-1 / (params.inductance * c), -params.resistance / params.inductance],
        ]
    )


def forcing(t: float, region: RegionId, params: CircuitParams) -> np.ndarray:
    drive = params.drive_amplitude * waveform(t, params)
    threshold = params.threshold_voltage * params.threshold_weight(region)
    return np.array([0.0, (drive - threshold) / params.inductance])


def resistor_voltage(state: State, params: CircuitParams) -> float:
    return params.resistance * state.current


def diode_voltage(state: State, params: CircuitParams) -> float:
    """Reconstructed diode voltage, (q - q0)/C_k plus V_i in the forward region."""
    region = region_of(state, params)
    x0 = state.charge - params.charge_offset
    forward = params.threshold_voltage if region == RegionId.FORWARD else 0.0
    return x0 / params.capacitance(region) + forward


def stored_energy(state: State, params: CircuitParams) -> float:
    region = region_of(state, params)
    x0 = state.charge - params.charge_offset
    return x0**2 / (2 * params.capacitance(region)) + params.inductance * state.current**2 / 2


def exponential_diode_voltage(current: float, exp_params: ExpDiodeParams) -> float:
    if not current > -exp_params.saturation_current:
        raise DomainError(
            f"diode current {current} A is at or below -I_s = {-exp_params.saturation_current} A"
        )
    return exp_params.slope_voltage * math.log1p(current / exp_params.saturation_current)


def exponential_vector_field(
    t: float, current: float, params: CircuitParams, exp_params: ExpDiodeParams
) -> float:
    v_d = exponential_diode_voltage(current, exp_params)
    drive = params.drive_amplitude * waveform(t, params)
    return (drive - params.resistance * current - v_d) / params.inductance


def kernel_params(params: CircuitParams) -> np.ndarray:
    """Flat float array consumed by the compiled kernels, see rld_chaos._kernels."""
    return np.array(
        [
            params.resistance,
            params.inductance,
            params.drive_amplitude,
            params.omega,
            params.threshold_voltage,
            params.cap_region1,
            params.cap_region2,
            params.cond_region1,
            params.cond_region2,
            1.0 if params.drive_waveform == DriveWaveform.COSINE else 0.0,
            1.0 if params.threshold_mode == ThresholdMode.FORWARD_ONLY else 0.0,
        ]
    )


def drive_series(times: np.ndarray, params: CircuitParams) -> np.ndarray:
    phase = params.omega * np.asarray(times)
    if params.drive_waveform == DriveWaveform.COSINE:
        return params.drive_amplitude * np.cos(phase)
    return params.drive_amplitude * np.sin(phase)
