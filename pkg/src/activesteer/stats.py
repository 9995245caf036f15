"""Ensemble statistics: steps-to-convergence histograms, mode / median /
half-width summaries, and per-cycle averaged curves."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .protocol import TrajectoryRecord
from .quantum_state import TargetStateSpec


def default_bin_width(target: TargetStateSpec, n_qubits: int) -> int:
    if n_qubits <= 2:
        return 1
    if n_qubits == 3:
        return 25
    if n_qubits == 4:
        return 200 if target.kind == "w" else 50
    if n_qubits == 5:
        return 100 if target.kind == "ghz" else 400
    return 400


@dataclass(frozen=True)
class ConvergenceHistogram:
    """Counts of converged step numbers in bins [start, start + bin_width)."""

    bin_width: int
    counts: np.ndarray = field(repr=False)
    total: int = 0

    @property
    def n_converged(self) -> int:
        return int(self.counts.sum())

    @property
    def converged_fraction(self) -> float:
        return self.n_converged / self.total if self.total else 0.0

    @property
    def bin_starts(self) -> np.ndarray:
        return np.arange(len(self.counts)) * self.bin_width

    @property
    def bin_centers(self) -> np.ndarray:
        # integer steps start..start+w-1
        return self.bin_starts + (self.bin_width - 1) / 2.0

    def rows(self) -> list[tuple[int, int, int]]:
        return [(int(s), int(s + self.bin_width), int(c)) for s, c in zip(self.bin_starts, self.counts)]


def converged_steps(records: Sequence[TrajectoryRecord]) -> np.ndarray:
    return np.array([r.n_steps for r in records if r.converged], dtype=np.int64)


def histogram(records: Sequence[TrajectoryRecord], bin_width: int) -> ConvergenceHistogram:
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    steps = converged_steps(records)
    n_bins = int(steps.max() // bin_width) + 1 if len(steps) else 0
    counts = np.bincount(steps // bin_width, minlength=n_bins) if len(steps) else np.zeros(0, dtype=np.int64)
    return ConvergenceHistogram(bin_width, counts.astype(np.int64), len(records))


@dataclass(frozen=True)
class Summary:
    mode: float
    median: float
    half_width: int
    converged_fraction: float
    n_converged: int
    total: int
    bin_width: int

    def as_dict(self) -> dict:
        return {
            "N_m": self.mode,
            "N_s": self.median,
            "delta_N": self.half_width,
            "converged_fraction": self.converged_fraction,
            "n_converged": self.n_converged,
            "M": self.total,
            "bin_width": self.bin_width,
        }


def summarize_histogram(hist: ConvergenceHistogram, steps: np.ndarray) -> Summary:
    if hist.n_converged == 0:
        raise ValueError("no converged trajectories to summarize")
    counts = hist.counts
    peak = int(np.argmax(counts))  # first maximum = smallest bin on ties
    above = np.flatnonzero(counts >= counts[peak] / 2.0)
    width = int((above[-1] - above[0] + 1) * hist.bin_width)
    return Summary(
        mode=float(hist.bin_centers[peak]),
        median=float(np.median(steps)),
        half_width=width,
        converged_fraction=hist.converged_fraction,
        n_converged=hist.n_converged,
        total=hist.total,
        bin_width=hist.bin_width,
    )


def summarize(records: Sequence[TrajectoryRecord], bin_width: int = 1) -> Summary:
    """Mode N_m (binned), median N_s and half-max width over converged runs."""
    hist = histogram(records, bin_width)
    return summarize_histogram(hist, converged_steps(records))


@dataclass(frozen=True)
class AveragedCurves:
    cycle: np.ndarray
    mean_F2: np.ndarray
    se_F2: np.ndarray
    mean_C_total: np.ndarray
    se_C_total: np.ndarray
    mean_C: np.ndarray  # (horizon + 1, N)
    mean_S: np.ndarray
    se_S: np.ndarray

    @property
    def columns(self) -> list[str]:
        n = self.mean_C.shape[1]
        return (
            ["cycle", "mean_F2", "se_F2", "mean_C_total", "se_C_total"]
            + [f"mean_C_{r}" for r in range(1, n + 1)]
            + ["mean_S", "se_S"]
        )

    def table(self) -> np.ndarray:
        return np.column_stack(
            [self.cycle, self.mean_F2, self.se_F2, self.mean_C_total, self.se_C_total, self.mean_C, self.mean_S, self.se_S]
        )


def _frozen(values: np.ndarray, horizon: int) -> np.ndarray:
    """First horizon+1 rows, repeating the last recorded row afterwards."""
    if len(values) > horizon:
        return values[: horizon + 1]
    pad = np.repeat(values[-1:], horizon + 1 - len(values), axis=0)
    return np.concatenate([values, pad])


def _mean_se(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(stack)
    mean = stack.mean(axis=0)
    if m < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / np.sqrt(m)


def averaged_curves(records: Sequence[TrajectoryRecord], horizon: int | None = None) -> AveragedCurves:
    """Per-cycle ensemble means with values frozen after each run stops."""
    if not records:
        raise ValueError("no records to average")
    n = records[0].n_qubits
    if any(r.n_qubits != n for r in records):
        raise ValueError("records mix different qubit numbers")
    if horizon is None:
        horizon = max(r.n_steps for r in records)
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    f2 = np.stack([_frozen(r.fidelity**2, horizon) for r in records])
    ct = np.stack([_frozen(r.total_cost, horizon) for r in records])
    cr = np.stack([_frozen(r.costs, horizon) for r in records])
    s = np.stack([_frozen(r.entropy, horizon) for r in records])
    mf, sf = _mean_se(f2)
    mc, sc = _mean_se(ct)
    ms, ss = _mean_se(s)
    return AveragedCurves(
        cycle=np.arange(horizon + 1),
        mean_F2=mf,
        se_F2=sf,
        mean_C_total=mc,
        se_C_total=sc,
        mean_C=cr.mean(axis=0),
        mean_S=ms,
        se_S=ss,
    )
