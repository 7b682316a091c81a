"""Static SVG figures. Rendering is repeatable: fixed id salt and no date metadata."""
from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure

from rld_chaos.analysis import BifurcationDiagram
from rld_chaos.errors import OutputError

SVG_PARAMS = {"svg.hashsalt": "rld-chaos", "svg.fonttype": "path"}


def _save(figure: Figure, path: Path) -> Path:
    try:
        figure.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise OutputError(f"could not write {path}: {e}") from e
    return path


def plot_timeseries(path: Path, times: np.ndarray, voltage: np.ndarray) -> Path:
    with rc_context(SVG_PARAMS):
        figure = Figure(figsize=(8, 4))
        ax = figure.add_subplot()
        ax.plot(times * 1e6, voltage, linewidth=0.8)
        ax.set_xlabel("t (us)")
        ax.set_ylabel("v_R (V)")
        ax.set_title("Resistor voltage")
        ax.grid(True, linewidth=0.3)
        figure.tight_layout()
        return _save(figure, path)


def plot_bifurcation(path: Path, diagram: BifurcationDiagram) -> Path:
    amplitudes = np.concatenate(
        [np.full(len(section), e) for e, section in zip(diagram.amplitudes, diagram.sections)]
    )
    voltages = np.concatenate([np.asarray(section, dtype=float) for section in diagram.sections])
    with rc_context(SVG_PARAMS):
        figure = Figure(figsize=(8, 5))
        ax = figure.add_subplot()
        ax.plot(amplitudes, voltages, linestyle="none", marker=".", markersize=1.5, color="black")
        ax.set_xlabel("E (V)")
        ax.set_ylabel("v_R at the section (V)")
        ax.set_title("Bifurcation diagram")
        figure.tight_layout()
        return _save(figure, path)


def plot_portrait(path: Path, v_in: np.ndarray, v_r: np.ndarray) -> Path:
    with rc_context(SVG_PARAMS):
        figure = Figure(figsize=(5, 5))
        ax = figure.add_subplot()
        ax.plot(v_in, v_r, linewidth=0.5, color="black")
        ax.set_xlabel("v_in (V)")
        ax.set_ylabel("v_R (V)")
        ax.set_title("Input-output portrait")
        ax.grid(True, linewidth=0.3)
        figure.tight_layout()
        return _save(figure, path)
