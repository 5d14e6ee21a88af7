"""Attachment, noise, Coupling Gain, Downlink Geometry and empirical CDFs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySampleError

THERMAL_NOISE_DBM_HZ = -174.0
DEFAULT_SINR_FLOOR_DB = -6.0


def db_to_linear(x_db):
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def noise_power_dbm(bandwidth_hz, noise_figure_db):
    if not bandwidth_hz > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


@dataclass
class LinkBudget:
    p_tx_dbm: float
    gain_tx_db: float
    gain_rx_db: float
    pl_db: float

    @property
    def p_rx_dbm(self):
        return self.p_tx_dbm + self.gain_tx_db + self.gain_rx_db - self.pl_db


def received_power_dbm(p_tx_dbm, gain_tx_db, gain_rx_db, pl_db):
    return np.asarray(p_tx_dbm) + np.asarray(gain_tx_db) + np.asarray(gain_rx_db) - np.asarray(pl_db)


def attach(rx_power_dbm):
    """Index of the strongest cell along the last axis; ties go to the lowest index."""
    idx = np.argmax(np.asarray(rx_power_dbm, dtype=float), axis=-1)
    return int(idx) if np.ndim(idx) == 0 else idx


def coupling_gain_db(budget: LinkBudget, sign="gain"):
    """``P_R - P_T`` (a negative gain) or, with ``sign="loss"``, ``P_T - P_R``."""
    cg = budget.p_rx_dbm - budget.p_tx_dbm
    if sign == "gain":
        return cg
    if sign == "loss":
        return -cg
    raise ValueError(f"sign must be 'gain' or 'loss', got {sign!r}")


def geometry_sinr_db(signal_dbm, interference_dbm, noise_dbm, interferer_mask=None):
    """Wideband SINR in dB.

    ``interference_dbm`` holds one column per potential interferer (serving cell
    already excluded or masked out by ``interferer_mask``). Summation happens
    in the linear domain.
    """
    i_lin = db_to_linear(interference_dbm)
    if interferer_mask is not None:
        i_lin = np.where(interferer_mask, i_lin, 0.0)
    total = i_lin.sum(axis=-1) + db_to_linear(noise_dbm)
    return linear_to_db(db_to_linear(signal_dbm) / total)


def sinr_from_matrix(serving_idx, signal_dbm, interference_dbm, noise_dbm, cutoff_mask=None):
    """SINR for each row given per-cell interference powers (n_rx, n_cells).

    The serving column is always excluded from interference; ``cutoff_mask``
    marks cells allowed to interfere.
    """
    n_rx, n_cells = np.shape(interference_dbm)
    mask = np.ones((n_rx, n_cells), dtype=bool)
    mask[np.arange(n_rx), serving_idx] = False
    if cutoff_mask is not None:
        mask &= cutoff_mask
    return geometry_sinr_db(signal_dbm, interference_dbm, noise_dbm, mask)


@dataclass
class KpiSampleSet:
    """Measured-cell KPI samples.

    ``geometry_sinr_db`` excludes samples under the SINR floor;
    ``filtered_count`` says how many were dropped.
    """

    coupling_gain_db: np.ndarray
    geometry_sinr_db: np.ndarray
    filtered_count: int = 0
    scenario: str = ""
    drop_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


@dataclass(frozen=True)
class Cdf:
    values: np.ndarray
    probs: np.ndarray

    def __len__(self):
        return len(self.values)

    def evaluate(self, x):
        """Right-continuous step value F(x)."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return np.where(idx > 0, self.probs[np.maximum(idx - 1, 0)], 0.0)


def make_cdf(samples) -> Cdf:
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise EmptySampleError("cannot build a CDF from an empty sample")
    n = x.size
    return Cdf(values=x, probs=np.arange(1, n + 1) / n)


def percentile(cdf: Cdf, p):
    """Smallest value whose cumulative probability reaches ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    idx = int(np.searchsorted(cdf.probs, p - 1e-12, side="left"))
    return float(cdf.values[min(idx, len(cdf.values) - 1)])


def ks_distance(a: Cdf, b: Cdf):
    """Largest vertical gap between two step CDFs over the union of their jumps."""
    grid = np.union1d(a.values, b.values)
    return float(np.max(np.abs(a.evaluate(grid) - b.evaluate(grid))))
