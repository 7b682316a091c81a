import math

import numpy as np
import pytest
from pydantic import ValidationError

from rld_chaos import _kernels
from rld_chaos.errors import DomainError
from rld_chaos.model import (
    DEFAULT_CAP_REGION1,
    CircuitParams,
    DriveWaveform,
    ExpDiodeParams,
    RegionId,
    State,
    ThresholdMode,
    diode_voltage,
    drive_series,
    drive_voltage,
    exponential_diode_voltage,
    exponential_vector_field,
    forcing,
    kernel_params,
    region_derivative,
    region_of,
    region_of_charge,
    resonant_capacitance,
    stored_energy,
    system_matrix,
    vector_field,
)


def random_params(rng: np.random.Generator) -> CircuitParams:
    cap_region1 = 10 ** rng.uniform(-10, -8)
    return CircuitParams(
        resistance=rng.uniform(1, 100),
        inductance=10 ** rng.uniform(-4, -2),
        drive_amplitude=rng.uniform(0, 10),
        drive_frequency=10 ** rng.uniform(4, 6),
        drive_waveform=rng.choice(list(DriveWaveform)),
        threshold_voltage=rng.uniform(0, 1),
        charge_offset=rng.normal(scale=1e-9),
        cap_region1=cap_region1,
        cap_region2=cap_region1 * rng.uniform(2, 200),
        cond_region1=rng.uniform(0, 0.1),
        cond_region2=rng.uniform(0, 5),
        threshold_mode=rng.choice(list(ThresholdMode)),
    )


def test_defaults():
    params = CircuitParams()
    assert params.resistance == 10.0
    assert params.inductance == 1e-3
    assert params.drive_frequency == 1e5
    assert params.drive_amplitude == 9.0
    assert params.drive_period == pytest.approx(1e-5)
    assert (params.cond_region1, params.cond_region2) == (0.0, 0.01)
    assert params.cap_region1 == pytest.approx(2.533e-9, rel=1e-3)
    assert params.cap_region2 == pytest.approx(100 * params.cap_region1)


def test_default_capacitance_is_resonant_at_drive_frequency():
    omega = 2 * math.pi * 1e5
    assert 1 / math.sqrt(1e-3 * DEFAULT_CAP_REGION1) == pytest.approx(omega, rel=1e-12)
    assert resonant_capacitance(1e-3, 1e5) == DEFAULT_CAP_REGION1


def test_forward_capacitance_must_dominate():
    with pytest.raises(ValidationError, match="cap_region2"):
        CircuitParams(cap_region1=1e-9, cap_region2=1e-9)


@pytest.mark.parametrize("field", ["resistance", "inductance", "drive_frequency", "cap_region1"])
def test_positive_fields(field):
    with pytest.raises(ValidationError, match=field):
        CircuitParams(**{field: -1.0})


def test_params_are_frozen():
    params = CircuitParams()
    with pytest.raises(ValidationError):
        params.resistance = 20.0


def test_state_must_be_finite():
    with pytest.raises(ValidationError):
        State(charge=math.nan, current=0.0)
    with pytest.raises(ValidationError):
        State(charge=0.0, current=math.inf)


def test_switching_surface_belongs_to_reverse_region():
    params = CircuitParams(charge_offset=1e-9)
    assert region_of_charge(0.0) == RegionId.REVERSE
    assert region_of_charge(1e-30) == RegionId.FORWARD
    assert region_of_charge(-1e-30) == RegionId.REVERSE
    assert region_of(State(charge=1e-9, current=5.0), params) == RegionId.REVERSE
    assert region_of(State(charge=2e-9, current=0.0), params) == RegionId.FORWARD


def test_vector_field_matches_matrix_form():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        params = random_params(rng)
        state = State(
            charge=params.charge_offset + rng.normal(scale=1e-8), current=rng.normal(scale=1e-2)
        )
        t = rng.uniform(0, 1e-3)
        region = region_of(state, params)
        x = state.shifted(params)
        a = system_matrix(region, params)
        b = forcing(t, region, params)
        expected = a @ x + b
        scale = np.abs(a) @ np.abs(x) + np.abs(b)
        assert np.all(np.abs(np.array(vector_field(t, state, params)) - expected) <= 1e-12 * scale)


def test_compiled_derivative_matches_model():
    rng = np.random.default_rng(11)
    for _ in range(200):
        params = random_params(rng)
        p = kernel_params(params)
        t = rng.uniform(0, 1e-3)
        x0, x1 = rng.normal(scale=1e-8), rng.normal(scale=1e-2)
        for region in RegionId:
            expected = region_derivative(t, x0, x1, region, params)
            got = _kernels.derivative(t, x0, x1, int(region), p)
            np.testing.assert_allclose(got, expected, rtol=1e-12, atol=0)


def test_forward_only_reverse_region_has_no_threshold_term():
    params = CircuitParams(drive_amplitude=0.0, threshold_mode=ThresholdMode.FORWARD_ONLY)
    assert region_derivative(0.0, 0.0, 0.0, RegionId.REVERSE, params) == (0.0, 0.0)
    _, di = region_derivative(0.0, 0.0, 0.0, RegionId.FORWARD, params)
    assert di == pytest.approx(-params.threshold_voltage / params.inductance)


def test_both_regions_reverse_equilibrium():
    params = CircuitParams(drive_amplitude=0.0)
    x0 = -params.threshold_voltage * params.cap_region1
    dq, di = region_derivative(0.0, x0, 0.0, RegionId.REVERSE, params)
    assert dq == 0.0
    assert di == pytest.approx(0.0, abs=1e-9 * params.threshold_voltage / params.inductance)


def test_drive_waveforms():
    cosine = CircuitParams(drive_amplitude=2.0)
    sine = CircuitParams(drive_amplitude=2.0, drive_waveform=DriveWaveform.SINE)
    assert drive_voltage(0.0, cosine) == 2.0
    assert drive_voltage(0.0, sine) == 0.0
    assert drive_voltage(cosine.drive_period / 4, sine) == pytest.approx(2.0)
    times = np.linspace(0, 3e-5, 31)
    np.testing.assert_allclose(
        drive_series(times, sine), [drive_voltage(t, sine) for t in times], rtol=1e-12, atol=1e-12
    )


def test_diode_voltage_reconstruction():
    params = CircuitParams(charge_offset=1e-9)
    reverse = State(charge=0.5e-9, current=0.0)
    forward = State(charge=2e-9, current=0.0)
    assert diode_voltage(reverse, params) == pytest.approx(-0.5e-9 / params.cap_region1)
    assert diode_voltage(forward, params) == pytest.approx(1e-9 / params.cap_region2 + 0.7)


def test_stored_energy_uses_region_capacitance():
    params = CircuitParams()
    state = State(charge=1e-9, current=0.01)
    expected = (1e-9) ** 2 / (2 * params.cap_region2) + params.inductance * 0.01**2 / 2
    assert stored_energy(state, params) == pytest.approx(expected)
    assert stored_energy(State(charge=0.0, current=0.0), params) == 0.0


def test_exponential_diode_voltage():
    exp_params = ExpDiodeParams()
    assert exponential_diode_voltage(0.0, exp_params) == 0.0
    v = exponential_diode_voltage(1e-3, exp_params)
    back = exp_params.saturation_current * math.expm1(v / exp_params.slope_voltage)
    assert back == pytest.approx(1e-3, rel=1e-12)
    with pytest.raises(DomainError):
        exponential_diode_voltage(-exp_params.saturation_current, exp_params)


def test_exponential_vector_field_at_rest():
    params = CircuitParams(drive_amplitude=0.0)
    assert exponential_vector_field(0.0, 0.0, params, ExpDiodeParams()) == 0.0
    with pytest.raises(DomainError):
        exponential_vector_field(0.0, -1.0, params, ExpDiodeParams())
