"""Radio environment maps: best-server SINR on a horizontal grid.

Each grid point is an outdoor probe at a fixed height. The probe attaches to
the cell with the strongest received power and every other cell interferes at
full power (worst case), exactly as for an end-to-end UE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linkbudget, network, propagation
from .errors import ConfigError, ModelDomainError
from .streams import LinkDraws, Streams

PGM_SINR_RANGE_DB = (-10.0, 30.0)
DEFAULT_CHUNK = 2048


@dataclass(frozen=True)
class RemGrid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution_m: float
    z_m: float = 1.5

    def __post_init__(self):
        if not self.resolution_m > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution_m}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid bounds are degenerate")

    @property
    def xs(self):
        n = int(math.floor((self.x_max - self.x_min) / self.resolution_m + 1e-9)) + 1
        return self.x_min + self.resolution_m * np.arange(n)

    @property
    def ys(self):
        n = int(math.floor((self.y_max - self.y_min) / self.resolution_m + 1e-9)) + 1
        return self.y_min + self.resolution_m * np.arange(n)

    @property
    def shape(self):
        return len(self.ys), len(self.xs)

    def points(self) -> np.ndarray:
        """Row-major (y outer, x inner) array of shape (n_points, 2)."""
        xx, yy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([xx.ravel(), yy.ravel()])


def default_grid(plan, z_m=1.5, resolution_m=None) -> RemGrid:
    """Bounding box of the ring-0/1 sites padded by ISD/2, step ISD/200."""
    pts = np.array([s.position for s in plan.sites if s.ring_index <= 1])
    pad = plan.isd / 2.0
    res = plan.isd / 200.0 if resolution_m is None else resolution_m
    return RemGrid(x_min=pts[:, 0].min() - pad, x_max=pts[:, 0].max() + pad,
                   y_min=pts[:, 1].min() - pad, y_max=pts[:, 1].max() + pad, resolution_m=res, z_m=z_m)


@dataclass
class RemPoint:
    position: tuple
    best_cell_id: int
    p_rx_best_dbm: float
    sinr_db: float
    p_rx_runner_up_dbm: float


@dataclass
class RemMap:
    """Probe results in row-major order."""

    positions: np.ndarray
    best_cell: np.ndarray
    p_rx_best_dbm: np.ndarray
    p_rx_runner_up_dbm: np.ndarray
    sinr_db: np.ndarray
    grid: RemGrid | None = None

    def __len__(self):
        return len(self.sinr_db)

    @property
    def points(self):
        return [RemPoint((float(p[0]), float(p[1])), int(c), float(b), float(s), float(r))
                for p, c, b, s, r in zip(self.positions, self.best_cell, self.p_rx_best_dbm, self.sinr_db,
                                         self.p_rx_runner_up_dbm)]


def probe_points(points_xy, z_m, plan, config, options: propagation.ChannelOptions, seed=None,
                 chunk=DEFAULT_CHUNK) -> RemMap:
    """Evaluate outdoor probes at arbitrary positions.

    With ``seed`` set, random LOS and shadowing come from the REM streams and
    point ``k`` always uses row ``k`` of every cell stream.
    """
    pts = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    n = len(pts)
    cell_ids = [c.cell_id for c in plan.cells]
    needs_draws = options.shadowing or options.los_mode == "random"
    if needs_draws and seed is None:
        raise ValueError("a seed is required for random LOS or shadowing on REM probes")
    draws = LinkDraws(Streams.for_rem(seed), cell_ids) if needs_draws else None

    best = np.empty(n, dtype=int)
    p_best = np.empty(n)
    p_second = np.full(n, -np.inf)
    sinr = np.empty(n)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        m = sl.stop - sl.start
        try:
            ev = network.evaluate(config, plan, pts[sl], np.full(m, z_m), np.zeros(m, dtype=bool),
                                  np.zeros(m), np.full(m, "low"), draws, options)
        except ModelDomainError as exc:
            raise ModelDomainError(f"{exc} (REM points {pts[sl][0].tolist()}..{pts[sl][-1].tolist()})",
                                   bound=exc.bound, point=pts[sl][0].tolist()) from None
        best[sl] = np.asarray(cell_ids)[ev.serving_idx]
        p_best[sl] = ev.signal_dbm
        if ev.rx_power_dbm.shape[1] > 1:
            part = np.sort(ev.rx_power_dbm, axis=1)
            p_second[sl] = part[:, -2]
        sinr[sl] = ev.sinr_db
    return RemMap(positions=pts, best_cell=best, p_rx_best_dbm=p_best, p_rx_runner_up_dbm=p_second, sinr_db=sinr)


def rem_options(config, shadowing=False, los_mode=None):
    return propagation.ChannelOptions(shadowing=shadowing, o2i=False, o2i_spread=False,
                                      los_mode=los_mode or config.los_mode)


def generate_rem(grid: RemGrid, plan, config, shadowing=False, los_mode=None, seed=None,
                 force_outdoor=False, chunk=DEFAULT_CHUNK) -> RemMap:
    """Best-server SINR map over ``grid``.

    Shadowing is off by default; ``los_mode`` defaults to the config's. A
    scenario with 3D UE heights is refused unless ``force_outdoor`` is set,
    since a single-height outdoor map cannot represent it.
    """
    if config.height_mode == "random_3d" and not force_outdoor:
        raise ConfigError("REM is disabled for scenarios with 3D UE heights; pass force_outdoor to map "
                          "outdoor probes anyway", ["height_mode"])
    seed = config.seed if seed is None else seed
    rmap = probe_points(grid.points(), grid.z_m, plan, config, rem_options(config, shadowing, los_mode),
                        seed=seed, chunk=chunk)
    rmap.grid = grid
    return rmap


def rem_cdf(rmap) -> linkbudget.Cdf:
    sinr = rmap.sinr_db if isinstance(rmap, RemMap) else np.asarray([p.sinr_db for p in rmap])
    return linkbudget.make_cdf(sinr)


def write_rem_csv(path, rmap: RemMap):
    with open(path, "w", newline="") as fh:
        fh.write("x_m,y_m,best_cell,sinr_db\n")
        for (x, y), c, s in zip(rmap.positions, rmap.best_cell, rmap.sinr_db):
            fh.write(f"{x:.3f},{y:.3f},{c},{s:.6f}\n")


def sinr_to_gray(sinr_db):
    lo, hi = PGM_SINR_RANGE_DB
    s = np.clip(np.asarray(sinr_db, dtype=float), lo, hi)
    return np.round((s - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path, rmap: RemMap):
    """Binary PGM heatmap, north up (top row is the largest y)."""
    if rmap.grid is None:
        raise ValueError("PGM output needs a gridded map")
    rows, cols = rmap.grid.shape
    img = sinr_to_gray(rmap.sinr_db).reshape(rows, cols)[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return Path(path)
