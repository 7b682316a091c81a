"""
Chaos quantification from a single observable: delay by average mutual information, embedding
dimension by false nearest neighbours and the largest Lyapunov exponent by following a fiducial
trajectory and a nearby neighbour, replacing the neighbour whenever the pair drifts apart.
"""
import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from rld_chaos.analysis import steps_per_period
from rld_chaos.errors import ContractError, InsufficientDataError
from rld_chaos.integrator import Trajectory
from rld_chaos.model import CircuitParams

logger = logging.getLogger(__name__)

MIN_FNN_POINTS = 10
MIN_LYAPUNOV_POINTS = 100
# upper bound on the number of entries of one brute-force distance block
DISTANCE_BLOCK = 4_000_000


class NeighborSearch(Enum):
    BRUTE = "brute"
    KDTREE = "kdtree"


class ScalarSeries(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dt: float = Field(gt=0)
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def finite_samples(cls, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or len(values) < 2:
            raise ValueError(f"a series needs at least 2 samples in one dimension, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("series samples must be finite")
        return values

    def __len__(self) -> int:
        return len(self.values)


class EmbeddingSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    delay: int = Field(ge=1)
    dimension: int = Field(ge=1)

    @property
    def window(self) -> int:
        return (self.dimension - 1) * self.delay

    def fits(self, length: int) -> bool:
        return self.window < length


class LyapunovReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    embedding: EmbeddingSpec
    exponent: float
    replacement_count: int = Field(ge=0)
    follow_time: float
    steps: np.ndarray  # (intervals, 3): start time, distance before, distance after

    @field_validator("exponent")
    @classmethod
    def finite_exponent(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"exponent must be finite, got {value}")
        return value


class ChaosSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    samples_per_period: int = Field(40, ge=2)
    max_delay: int = Field(40, ge=2)
    bins: int = Field(64, ge=2)
    m_max: int = Field(8, ge=2)
    r_tol: float = Field(15.0, gt=0)
    a_tol: float = Field(2.0, gt=0)
    fnn_threshold: float = Field(0.01, ge=0, le=1)
    delay: Optional[int] = Field(None, ge=1)
    dimension: Optional[int] = Field(None, ge=1)
    theiler_window: Optional[int] = Field(None, ge=0)
    follow_steps: int = Field(3, ge=1)
    replace_threshold: float = Field(0.1, gt=0)
    min_separation: float = Field(1e-9, ge=0)
    neighbor_search: NeighborSearch = NeighborSearch.BRUTE
    input_dt: Optional[float] = Field(None, gt=0)


def embed(series: ScalarSeries, spec: EmbeddingSpec) -> np.ndarray:
    if not spec.fits(len(series)):
        raise ContractError(
            f"embedding window {spec.window} does not fit a series of {len(series)} samples"
        )
    return sliding_window_view(series.values, spec.window + 1)[:, :: spec.delay]


def average_mutual_information(series: ScalarSeries, max_delay: int, bins: int = 64) -> np.ndarray:
    """I(tau) in bits for tau = 0 .. max_delay, indexed by tau."""
    if bins < 2:
        raise ContractError(f"at least 2 bins are needed, got {bins}")
    if not max_delay < len(series) / 4:
        raise ContractError(
            f"max_delay ({max_delay}) must be below a quarter of the series length ({len(series)})"
        )
    x = series.values
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise ContractError("series is constant, its entropy is zero and no delay can be chosen")

    edges = np.linspace(lo, hi, bins + 1)
    ami = np.empty(max_delay + 1)
    for tau in range(max_delay + 1):
        joint, _, _ = np.histogram2d(x[: len(x) - tau], x[tau:], bins=[edges, edges])
        p = joint / joint.sum()
        px = p.sum(axis=1)
        py = p.sum(axis=0)
        nonzero = p > 0
        outer = np.outer(px, py)[nonzero]
        ami[tau] = max(0.0, float(np.sum(p[nonzero] * np.log2(p[nonzero] / outer))))
    return ami


def first_minimum(ami: np.ndarray) -> int:
    ami = np.asarray(ami, dtype=float)
    if len(ami) < 3:
        raise ContractError(f"need at least 3 AMI values to find a minimum, got {len(ami)}")
    for tau in range(1, len(ami) - 1):
        if ami[tau - 1] > ami[tau] <= ami[tau + 1]:
            return tau
    fallback = int(np.argmin(ami[1:])) + 1
    logger.warning(f"AMI has no local minimum up to tau = {len(ami) - 1}, using its argmin {fallback}")
    return fallback


def nearest_neighbors(
    points: np.ndarray, search: NeighborSearch = NeighborSearch.BRUTE
) -> tuple[np.ndarray, np.ndarray]:
    """Index of and distance to each point's nearest other point; brute force breaks ties by lowest index."""
    n = len(points)
    if search == NeighborSearch.KDTREE:
        distances, indices = cKDTree(points).query(points, k=2)
        # an exact duplicate may be listed before the point itself
        other = np.where(indices[:, 0] == np.arange(n), indices[:, 1], indices[:, 0])
        picked = np.where(indices[:, 0] == np.arange(n), distances[:, 1], distances[:, 0])
        return other, picked

    indices = np.empty(n, dtype=np.int64)
    distances = np.empty(n)
    block = max(1, DISTANCE_BLOCK // n)
    for start in range(0, n, block):
        stop = min(n, start + block)
        d = cdist(points[start:stop], points)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        indices[start:stop] = np.argmin(d, axis=1)
        distances[start:stop] = d[np.arange(stop - start), indices[start:stop]]
    return indices, distances


def false_nearest_neighbors(
    series: ScalarSeries,
    delay: int,
    m_max: int,
    r_tol: float = 15.0,
    a_tol: float = 2.0,
    search: NeighborSearch = NeighborSearch.BRUTE,
) -> np.ndarray:
    """Rows (m, fraction of false neighbours) for m = 1 .. m_max."""
    if m_max < 2:
        raise ContractError(f"m_max must be at least 2, got {m_max}")
    x = series.values
    usable = len(x) - m_max * delay
    if usable < MIN_FNN_POINTS:
        raise InsufficientDataError(
            f"{len(x)} samples leave {usable} points at m = {m_max}, tau = {delay}; "
            f"at least {MIN_FNN_POINTS} are needed"
        )
    spread = float(np.std(x))

    rows = []
    for m in range(1, m_max + 1):
        count = len(x) - m * delay
        points = embed(series, EmbeddingSpec(delay=delay, dimension=m))[:count]
        neighbors, distances = nearest_neighbors(points, search)
        jump = np.abs(x[np.arange(count) + m * delay] - x[neighbors + m * delay])
        false = (jump > r_tol * distances) | (jump > a_tol * spread)
        fraction = float(np.mean(false))
        logger.debug(f"FNN m = {m}: {fraction:.4f}")
        rows.append((m, fraction))
    return np.array(rows)


def _replacement(
    points: np.ndarray,
    fiducial: int,
    direction: np.ndarray,
    theiler_window: int,
    horizon: int,
    floor: float,
    threshold: float,
) -> Optional[int]:
    offsets = points[:horizon] - points[fiducial]
    distances = np.linalg.norm(offsets, axis=1)
    candidates = np.flatnonzero(
        (np.abs(np.arange(horizon) - fiducial) > theiler_window) & (distances > floor)
    )
    if len(candidates) == 0:
        return None

    close = candidates[distances[candidates] <= threshold]
    if len(close) == 0:
        return int(candidates[np.argmin(distances[candidates])])
    norm = np.linalg.norm(direction)
    if norm == 0:
        cosines = np.zeros(len(close))
    else:
        cosines = offsets[close] @ direction / (distances[close] * norm)
    # most parallel, then nearest, then lowest index
    order = np.lexsort((close, distances[close], -np.round(cosines, 12)))
    return int(close[order[0]])


def max_lyapunov(
    series: ScalarSeries,
    spec: EmbeddingSpec,
    theiler_window: Optional[int] = None,
    follow_steps: int = 3,
    replace_threshold: float = 0.1,
    min_separation: float = 1e-9,
) -> LyapunovReport:
    """
    Largest Lyapunov exponent in 1/s.

    The neighbour is followed for `follow_steps` samples at a time and ln(d_after / d_before) is
    accumulated. Once the separation exceeds `replace_threshold` times the attractor extent, the
    neighbour is replaced by the eligible point within that radius whose offset is most parallel
    to the old one. Eligible points lie outside the Theiler window and farther than
    `min_separation` times the extent, so exact repeats of a periodic orbit are never chosen.
    """
    if theiler_window is None:
        theiler_window = spec.dimension * spec.delay
    if theiler_window < spec.dimension * spec.delay:
        raise ContractError(
            f"theiler_window ({theiler_window}) must be at least m * tau = {spec.dimension * spec.delay}"
        )
    points = embed(series, spec)
    n = len(points)
    if n < MIN_LYAPUNOV_POINTS:
        raise InsufficientDataError(
            f"embedding leaves {n} points, at least {MIN_LYAPUNOV_POINTS} are needed"
        )
    extent = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    if extent == 0:
        raise ContractError("series is constant, the attractor has no extent")
    threshold = replace_threshold * extent
    floor = min_separation * extent
    s = follow_steps
    horizon = n - s

    fiducial = 0
    neighbor = _replacement(points, 0, np.zeros(spec.dimension), theiler_window, horizon, floor, np.inf)
    if neighbor is None:
        raise InsufficientDataError(
            f"no eligible neighbour among {n} embedded points, a longer series is needed"
        )

    log_sum = 0.0
    followed = 0
    replacements = 0
    steps = []
    while fiducial < horizon and neighbor < horizon:
        d_before = float(np.linalg.norm(points[neighbor] - points[fiducial]))
        d_after = float(np.linalg.norm(points[neighbor + s] - points[fiducial + s]))
        if d_after > 0:
            log_sum += math.log(d_after / d_before)
            followed += s
            steps.append((fiducial * series.dt, d_before, d_after))
        fiducial += s
        neighbor += s
        if fiducial >= horizon:
            break
        if d_after > threshold or d_after <= floor or neighbor >= horizon:
            direction = points[neighbor] - points[fiducial]
            chosen = _replacement(
                points, fiducial, direction, theiler_window, horizon, floor, threshold
            )
            if chosen is None:
                logger.warning(f"no replacement neighbour at sample {fiducial}, stopping early")
                break
            if chosen != neighbor:
                replacements += 1
                neighbor = chosen

    if followed == 0:
        raise InsufficientDataError("the neighbour could not be followed for a single interval")
    follow_time = followed * series.dt
    return LyapunovReport(
        embedding=spec,
        exponent=log_sum / follow_time,
        replacement_count=replacements,
        follow_time=follow_time,
        steps=np.array(steps, dtype=float).reshape(-1, 3),
    )


def select_embedding(series: ScalarSeries, settings: ChaosSettings) -> EmbeddingSpec:
    delay = settings.delay
    if delay is None:
        delay = first_minimum(average_mutual_information(series, settings.max_delay, settings.bins))
        logger.info(f"delay from first AMI minimum: tau = {delay}")
    dimension = settings.dimension
    if dimension is None:
        fractions = false_nearest_neighbors(
            series, delay, settings.m_max, settings.r_tol, settings.a_tol, settings.neighbor_search
        )
        below = np.flatnonzero(fractions[:, 1] <= settings.fnn_threshold)
        if len(below):
            dimension = int(fractions[below[0], 0])
        else:
            dimension = int(fractions[np.argmin(fractions[:, 1]), 0])
            logger.warning(
                f"FNN fraction never fell to {settings.fnn_threshold} up to m = {settings.m_max}, "
                f"using m = {dimension}"
            )
        logger.info(f"dimension from false nearest neighbours: m = {dimension}")
    return EmbeddingSpec(delay=delay, dimension=dimension)


def estimate_lyapunov(series: ScalarSeries, settings: ChaosSettings) -> LyapunovReport:
    spec = select_embedding(series, settings)
    report = max_lyapunov(
        series,
        spec,
        theiler_window=settings.theiler_window,
        follow_steps=settings.follow_steps,
        replace_threshold=settings.replace_threshold,
        min_separation=settings.min_separation,
    )
    logger.info(
        f"lambda_max = {report.exponent:.6g} 1/s over {report.follow_time:.6g} s "
        f"with {report.replacement_count} replacements"
    )
    return report


def resistor_series(
    traj: Trajectory, params: CircuitParams, transient_cycles: int, samples_per_period: int
) -> ScalarSeries:
    """Standardized resistor voltage after the transient, decimated to `samples_per_period`."""
    per_period = steps_per_period(traj.dt, params.drive_period)
    if per_period % samples_per_period:
        raise ContractError(
            f"{samples_per_period} samples per period do not divide the {per_period} integration steps"
        )
    stride = per_period // samples_per_period
    start = transient_cycles * per_period
    if start >= len(traj) - 1:
        raise InsufficientDataError(
            f"trajectory of {len(traj)} samples ends inside the {transient_cycles} transient cycles"
        )
    voltage = traj.resistor_voltage(params)[start::stride]
    spread = float(np.std(voltage))
    if spread == 0:
        raise ContractError("resistor voltage is constant after the transient")
    return ScalarSeries(dt=traj.dt * stride, values=(voltage - voltage.mean()) / spread)
