import logging
from pathlib import Path
from typing import Optional

import numpy as np

from rld_chaos.analysis import bifurcation_sweep, classify_period, portrait, stroboscopic_section
from rld_chaos.chaoskit import ScalarSeries, estimate_lyapunov, resistor_series
from rld_chaos.config import RunConfig, echo_config
from rld_chaos.errors import IntegrationError, OutputError
from rld_chaos.integrator import grid_steps, integrate, integrate_exponential
from rld_chaos.plots import plot_bifurcation, plot_portrait, plot_timeseries
from rld_chaos.read_write import (
    BifurcationRow,
    ClassRow,
    ComparisonRow,
    DivergenceRow,
    ExpTimeseriesRow,
    LyapunovRow,
    PortraitRow,
    TimeseriesRow,
    append_summary,
    read_series,
    write,
    write_columns,
)

logger = logging.getLogger(__name__)

# share of sweep amplitudes that must integrate for the sweep to count as successful
MIN_SWEEP_SUCCESS = 0.9


def prepare_output(cfg: RunConfig) -> Path:
    """Create the output directory and record the resolved configuration in it."""
    directory = cfg.output.directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "config.ini").write_text(echo_config(cfg), encoding="utf-8", newline="\n")
    except OSError as e:
        raise OutputError(f"could not prepare output directory {directory}: {e}") from e
    return directory


def cmd_simulate(cfg: RunConfig) -> list[Path]:
    params = cfg.circuit
    directory = prepare_output(cfg)
    traj = integrate(params, cfg.initial.state(params), cfg.integration)
    logger.info(f"integrated {len(traj)} samples, {len(traj.switch_times)} region switches")

    v_r = traj.resistor_voltage(params)
    written = [
        write_columns(
            directory,
            TimeseriesRow,
            t_s=traj.times,
            q_C=traj.charge,
            i_A=traj.current,
            v_r_V=v_r,
            region=traj.regions(params),
        )
    ]
    pairs = portrait(traj, params, cfg.analysis.transient_cycles)
    written.append(write_columns(directory, PortraitRow, v_in_V=pairs[:, 0], v_r_V=pairs[:, 1]))

    if cfg.output.svg:
        shown = grid_steps(cfg.output.plot_cycles * params.drive_period, traj.dt)
        start = max(0, len(traj) - shown - 1)
        written.append(plot_timeseries(directory / "timeseries.svg", traj.times[start:], v_r[start:]))
        tail = pairs[-shown - 1 :]
        written.append(plot_portrait(directory / "portrait.svg", tail[:, 0], tail[:, 1]))
    return written


def cmd_sweep(
    cfg: RunConfig,
    e_min: Optional[float] = None,
    e_max: Optional[float] = None,
    steps: Optional[int] = None,
    jobs: int = 1,
) -> list[Path]:
    settings = cfg.analysis
    e_min = settings.e_min if e_min is None else e_min
    e_max = settings.e_max if e_max is None else e_max
    steps = settings.steps if steps is None else steps
    directory = prepare_output(cfg)

    diagram = bifurcation_sweep(
        cfg.circuit,
        e_min,
        e_max,
        steps,
        cfg.integration,
        settings.transient_cycles,
        settings.record_cycles,
        epsilon=settings.epsilon,
        max_period=settings.max_period,
        scale_floor=settings.scale_floor,
        jobs=jobs,
    )

    amplitudes = np.concatenate(
        [np.full(len(section), e) for e, section in zip(diagram.amplitudes, diagram.sections)]
    )
    written = [
        write_columns(
            directory,
            BifurcationRow,
            E_V=amplitudes,
            v_r_section_V=np.concatenate([np.asarray(s, dtype=float) for s in diagram.sections]),
        ),
        write(
            directory,
            [ClassRow(E_V=e, period_class=label) for e, label in zip(diagram.amplitudes, diagram.labels)],
        ),
    ]
    if cfg.output.svg:
        written.append(plot_bifurcation(directory / "bifurcation.svg", diagram))

    succeeded = sum(c is not None for c in diagram.classes)
    if succeeded < MIN_SWEEP_SUCCESS * steps:
        raise IntegrationError(f"only {succeeded} of {steps} amplitudes integrated successfully")
    return written


def cmd_lyapunov(cfg: RunConfig, input_path: Optional[Path] = None) -> list[Path]:
    params = cfg.circuit
    settings = cfg.chaoskit
    directory = prepare_output(cfg)

    if input_path is not None:
        dt = settings.input_dt or params.drive_period / settings.samples_per_period
        series = ScalarSeries(dt=dt, values=read_series(input_path))
        logger.info(f"read {len(series)} samples from {input_path}, dt = {dt} s")
    else:
        traj = integrate(params, cfg.initial.state(params), cfg.integration)
        series = resistor_series(
            traj, params, cfg.analysis.transient_cycles, settings.samples_per_period
        )

    report = estimate_lyapunov(series, settings)
    lyapunov = LyapunovRow(
        tau=report.embedding.delay,
        m=report.embedding.dimension,
        lambda_per_s=report.exponent,
        lambda_per_drive_period=report.exponent * params.drive_period,
        replacements=report.replacement_count,
    )
    steps = report.steps
    return [
        write(directory, [lyapunov]),
        write_columns(
            directory,
            DivergenceRow,
            t_s=steps[:, 0],
            d_before=steps[:, 1],
            d_after=steps[:, 2],
            log_sum=np.cumsum(np.log(steps[:, 2] / steps[:, 1])),
        ),
    ]


def cmd_compare_exponential(cfg: RunConfig) -> list[Path]:
    params = cfg.circuit
    settings = cfg.analysis
    directory = prepare_output(cfg)

    initial = cfg.initial.state(params)
    pwl = integrate(params, initial, cfg.integration)
    exp = integrate_exponential(params, cfg.exponential, initial.current, cfg.integration)

    labels = [
        classify_period(
            stroboscopic_section(traj, params, settings.transient_cycles),
            settings.epsilon,
            settings.max_period,
            settings.scale_floor,
        ).label
        for traj in (pwl, exp)
    ]
    logger.info(f"piecewise-linear model: {labels[0]}, exponential model: {labels[1]}")

    v_r_exp = params.resistance * exp.values
    written = [
        write_columns(directory, ExpTimeseriesRow, t_s=exp.times, i_A=exp.values, v_r_V=v_r_exp),
        write_columns(
            directory,
            ComparisonRow,
            t_s=pwl.times,
            v_r_pwl_V=pwl.resistor_voltage(params),
            v_r_exp_V=v_r_exp,
        ),
    ]
    append_summary(written[-1], *labels)
    return written
