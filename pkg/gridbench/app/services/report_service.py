"""
Static figures of run logs and scenario signals.

Every figure is an SVG line chart with one series per area and a legend of
ISO codes, written atomically to the output directory.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from gridbench.app.core.logging_config import get_logger  # noqa: E402
from gridbench.app.models.state import INPUT_FIELDS  # noqa: E402
from gridbench.app.schemas.scenario import StepSignals  # noqa: E402
from gridbench.app.services.simulation_service import RunLog  # noqa: E402
from gridbench.app.utils.files import atomic_writer  # noqa: E402

logger = get_logger(__name__)

STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 6,
    "lines.linewidth": 0.8,
    "svg.hashsalt": "gridbench",
    "svg.fonttype": "none",
}

LABELS: Dict[str, str] = {
    "d_delta": "Angle deviation [deg]",
    "d_f": "Frequency deviation [Hz]",
    "e": "Stored energy [GWh]",
    "p_disp": "Dispatchable production [GW]",
    "p_tie": "Integrated tie power [GW]",
    "d_p_disp": "Turbine power deviation [GW]",
    "p_c": "Charging power [GW]",
    "p_d": "Discharging power [GW]",
}

INPUT_LABELS: Dict[str, str] = {
    "d_p_disp": "Dispatch change [GW]",
    "p_c": "Charging [GW]",
    "p_d": "Discharging [GW]",
}

# Longest series drawn in full; longer ones are thinned keeping the last point
MAX_POINTS = 5000


def plot_indices(n: int, max_points: int = MAX_POINTS) -> np.ndarray:
    """Evenly thinned indices that always include the first and last sample."""
    if n <= max_points:
        return np.arange(n)
    stride = int(np.ceil(n / max_points))
    indices = np.arange(0, n, stride)
    if indices[-1] != n - 1:
        indices = np.append(indices, n - 1)
    return indices


def _save(fig, path: Path) -> Path:
    with atomic_writer(path, mode="wb") as handle:
        fig.savefig(handle, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _area_chart(ax, hours: np.ndarray, values: np.ndarray, codes: Sequence[str], ylabel: str) -> None:
    for i, code in enumerate(codes):
        ax.plot(hours, values[:, i], label=code)
    ax.set_ylabel(ylabel)


def _legend(fig, ax, n: int) -> None:
    ax.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0), ncol=2 if n > 13 else 1, frameon=False)


def plot_run(log: RunLog, output_dir, stem: Optional[str] = None, max_points: int = MAX_POINTS) -> List[Path]:
    """State, input, tie-power and cost charts of a run log; returns the written paths."""
    output_dir = Path(output_dir)
    stem = stem or f"run_{log.controller}_{log.variant.value}"
    idx = plot_indices(len(log), max_points)
    hours = (idx + 1) * log.tau / 3600.0
    codes = log.area_codes
    written: List[Path] = []

    with plt.rc_context(STYLE):
        for name, values in log.states.items():
            fig, ax = plt.subplots(figsize=(8, 4))
            _area_chart(ax, hours, values[idx], codes, LABELS.get(name, name))
            ax.set_xlabel("Time [h]")
            _legend(fig, ax, len(codes))
            fig.tight_layout()
            written.append(_save(fig, output_dir / f"{stem}_{name}.svg"))

        fig, axes = plt.subplots(len(INPUT_FIELDS), 1, figsize=(8, 7), sharex=True)
        for ax, name in zip(axes, INPUT_FIELDS):
            _area_chart(ax, hours, log.inputs[name][idx], codes, INPUT_LABELS[name])
        axes[-1].set_xlabel("Time [h]")
        _legend(fig, axes[0], len(codes))
        fig.tight_layout()
        written.append(_save(fig, output_dir / f"{stem}_inputs.svg"))

        fig, ax = plt.subplots(figsize=(8, 4))
        _area_chart(ax, hours, log.tie_power[idx], codes, "Tie power [GW]")
        ax.set_xlabel("Time [h]")
        _legend(fig, ax, len(codes))
        fig.tight_layout()
        written.append(_save(fig, output_dir / f"{stem}_tie_power.svg"))

        fig, ax = plt.subplots(figsize=(8, 3.5))
        ax.plot(hours, log.cumulative_costs[idx], color="k")
        ax.set_xlabel("Time [h]")
        ax.set_ylabel("Cumulative cost")
        fig.tight_layout()
        written.append(_save(fig, output_dir / f"{stem}_cost.svg"))

    logger.info("Run figures written", count=len(written), output_dir=str(output_dir))
    return written


def plot_signals(signals: StepSignals, output_dir, stem: str = "scenario", max_points: int = MAX_POINTS) -> List[Path]:
    """Load and renewable deviations, measurement solid and forecast dashed."""
    output_dir = Path(output_dir)
    idx = plot_indices(signals.n_steps, max_points)
    hours = idx / signals.steps_per_hour
    written: List[Path] = []
    with plt.rc_context(STYLE):
        for label, measured, forecast in (
            ("load", signals.load_meas, signals.load_for),
            ("ren", signals.ren_meas, signals.ren_for),
        ):
            fig, ax = plt.subplots(figsize=(8, 4))
            for i, code in enumerate(signals.area_codes):
                (line,) = ax.plot(hours, measured[idx, i], label=code)
                ax.plot(hours, forecast[idx, i], linestyle="--", color=line.get_color())
            ax.set_xlabel("Time [h]")
            ax.set_ylabel(f"{'Load' if label == 'load' else 'Renewable'} deviation [GW]")
            _legend(fig, ax, signals.n_areas)
            fig.tight_layout()
            written.append(_save(fig, output_dir / f"{stem}_{label}.svg"))
    logger.info("Signal figures written", count=len(written), output_dir=str(output_dir))
    return written
