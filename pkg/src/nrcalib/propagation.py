"""Large-scale channel: LOS condition, basic pathloss, shadowing and O2I losses.

Formulas follow the 3GPP TR 38.901 pathloss, LOS-probability and O2I models
for the RMa and UMa scenarios. All functions broadcast over numpy arrays; distances in
metres, carrier in GHz, losses in dB.

Total pathloss per link::

    PL = PL_b + PL_tw + PL_in + N(0, sigma_P^2)

where ``PL_b`` already contains the shadow-fading draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelDomainError
from .streams import LinkDraws

SPEED_OF_LIGHT = 3.0e8
KINDS = ("RMa", "UMa")
LOS_MODES = ("random", "los", "nlos")

# RMa validity ranges from the TR 38.901 pathloss model notes
RMA_H_BS = (10.0, 150.0)
RMA_H_UT = (1.0, 10.0)
UMA_H_BS = 25.0
UMA_H_UT = (1.5, 22.5)

O2I_SIGMA_DB = {"low": 4.4, "high": 6.5}
INDOOR_LOSS_DB_PER_M = 0.5
MAX_INDOOR_DEPTH_M = {"RMa": 10.0, "UMa": 25.0}

_EPS = 1e-9


@dataclass(frozen=True)
class PropagationScenario:
    kind: str
    carrier_ghz: float
    avg_building_height_m: float = 5.0
    avg_street_width_m: float = 20.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown propagation scenario {self.kind!r}; expected one of {KINDS}")
        if not 0.5 <= self.carrier_ghz <= 100.0:
            raise ValueError(f"carrier_ghz={self.carrier_ghz} outside model validity [0.5, 100]")

    @property
    def max_indoor_depth_m(self):
        return MAX_INDOOR_DEPTH_M[self.kind]


@dataclass(frozen=True)
class ChannelOptions:
    """Switches for the stochastic parts of a link.

    ``los_mode`` forces every link to LOS or NLOS instead of drawing it.
    """

    shadowing: bool = True
    o2i: bool = True
    o2i_spread: bool = True
    los_mode: str = "random"

    def __post_init__(self):
        if self.los_mode not in LOS_MODES:
            raise ValueError(f"unknown los_mode {self.los_mode!r}")

    @classmethod
    def deterministic(cls, los_mode="los", o2i=True):
        return cls(shadowing=False, o2i=o2i, o2i_spread=False, los_mode=los_mode)


@dataclass(frozen=True)
class LinkState:
    los: bool
    pl_basic_db: float
    pl_tw_db: float
    pl_in_db: float
    penetration_sigma_draw_db: float
    shadowing_db: float
    total_pl_db: float


@dataclass
class LinkStateArrays:
    """Struct-of-arrays version of :class:`LinkState`, shape (n_rx, n_cells)."""

    los: np.ndarray
    pl_basic_db: np.ndarray
    pl_tw_db: np.ndarray
    pl_in_db: np.ndarray
    penetration_sigma_draw_db: np.ndarray
    shadowing_db: np.ndarray
    total_pl_db: np.ndarray
    d2d_m: np.ndarray
    d3d_m: np.ndarray

    def at(self, i, j) -> LinkState:
        return LinkState(los=bool(self.los[i, j]), pl_basic_db=float(self.pl_basic_db[i, j]),
                         pl_tw_db=float(self.pl_tw_db[i, j]), pl_in_db=float(self.pl_in_db[i, j]),
                         penetration_sigma_draw_db=float(self.penetration_sigma_draw_db[i, j]),
                         shadowing_db=float(self.shadowing_db[i, j]), total_pl_db=float(self.total_pl_db[i, j]))


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def los_probability(scenario: PropagationScenario, d2d_out_m, h_ut_m=1.5):
    """Probability of line of sight versus outdoor 2D distance."""
    d = np.asarray(d2d_out_m, dtype=float)
    h = np.asarray(h_ut_m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if scenario.kind == "RMa":
            p = np.where(d <= 10.0, 1.0, np.exp(-(d - 10.0) / 1000.0))
        else:
            c = np.where(h <= 13.0, 0.0, (np.maximum(h - 13.0, 0.0) / 10.0) ** 1.5)
            base = 18.0 / d + np.exp(-d / 63.0) * (1.0 - 18.0 / d)
            p = np.where(d <= 18.0, 1.0, base * (1.0 + c * 1.25 * (d / 100.0) ** 3 * np.exp(-d / 150.0)))
    # the UMa height term pushes the formula above 1 just past 18 m
    return _scalar_or_array(np.clip(p, 0.0, 1.0))


def rma_breakpoint_m(h_bs_m, h_ut_m, carrier_ghz):
    return 2.0 * math.pi * np.asarray(h_bs_m) * np.asarray(h_ut_m) * carrier_ghz * 1e9 / SPEED_OF_LIGHT


def uma_breakpoint_m(h_bs_m, h_ut_m, carrier_ghz, h_e_m=1.0):
    return 4.0 * (np.asarray(h_bs_m) - h_e_m) * (np.asarray(h_ut_m) - h_e_m) * carrier_ghz * 1e9 / SPEED_OF_LIGHT


def _check_domain(scenario, d2d, d3d, h_bs, h_ut):
    if np.any(d2d <= 0):
        raise ModelDomainError("d2d_m must be > 0", bound="d2d_m > 0")
    if np.any(d3d < d2d - 1e-9):
        raise ModelDomainError("d3d_m must be >= d2d_m", bound="d3d_m >= d2d_m")
    if scenario.kind == "RMa":
        lo, hi = RMA_H_BS
        if np.any(h_bs < lo - _EPS) or np.any(h_bs > hi + _EPS):
            raise ModelDomainError(f"RMa h_bs outside [{lo}, {hi}] m", bound=f"{lo} <= h_bs_m <= {hi}")
        lo, hi = RMA_H_UT
        if np.any(h_ut < lo - _EPS) or np.any(h_ut > hi + _EPS):
            raise ModelDomainError(f"RMa h_ut outside [{lo}, {hi}] m", bound=f"{lo} <= h_ut_m <= {hi}")
    else:
        if np.any(np.abs(h_bs - UMA_H_BS) > _EPS):
            raise ModelDomainError(f"UMa requires h_bs = {UMA_H_BS} m", bound=f"h_bs_m == {UMA_H_BS}")
        lo, hi = UMA_H_UT
        if np.any(h_ut < lo - _EPS) or np.any(h_ut > hi + _EPS):
            raise ModelDomainError(f"UMa h_ut outside [{lo}, {hi}] m", bound=f"{lo} <= h_ut_m <= {hi}")


def _rma_pl1(d3d, fc, h):
    return (20.0 * np.log10(40.0 * math.pi * d3d * fc / 3.0)
            + min(0.03 * h ** 1.72, 10.0) * np.log10(d3d)
            - min(0.044 * h ** 1.72, 14.77)
            + 0.002 * math.log10(h) * d3d)


def _rma_los(scenario, d2d, d3d, h_bs, h_ut):
    fc = scenario.carrier_ghz
    h = scenario.avg_building_height_m
    d_bp = rma_breakpoint_m(h_bs, h_ut, fc)
    # anchor the second slope at the 3D distance of the breakpoint so PL is continuous
    d3d_bp = np.sqrt(d_bp ** 2 + (h_bs - h_ut) ** 2)
    pl1 = _rma_pl1(d3d, fc, h)
    pl2 = _rma_pl1(d3d_bp, fc, h) + 40.0 * np.log10(d3d / d3d_bp)
    return np.where(d2d <= d_bp, pl1, pl2)


def _rma_nlos_prime(scenario, d3d, h_bs, h_ut):
    fc = scenario.carrier_ghz
    h = scenario.avg_building_height_m
    w = scenario.avg_street_width_m
    return (161.04 - 7.1 * math.log10(w) + 7.5 * math.log10(h)
            - (24.37 - 3.7 * (h / h_bs) ** 2) * np.log10(h_bs)
            + (43.42 - 3.1 * np.log10(h_bs)) * (np.log10(d3d) - 3.0)
            + 20.0 * math.log10(fc)
            - (3.2 * np.log10(11.75 * h_ut) ** 2 - 4.97))


def _uma_los(scenario, d2d, d3d, h_bs, h_ut):
    fc = scenario.carrier_ghz
    d_bp = uma_breakpoint_m(h_bs, h_ut, fc)
    pl1 = 28.0 + 22.0 * np.log10(d3d) + 20.0 * math.log10(fc)
    pl2 = (28.0 + 40.0 * np.log10(d3d) + 20.0 * math.log10(fc)
           - 9.0 * np.log10(d_bp ** 2 + (h_bs - h_ut) ** 2))
    return np.where(d2d <= d_bp, pl1, pl2)


def _uma_nlos_prime(scenario, d3d, h_ut):
    return 13.54 + 39.08 * np.log10(d3d) + 20.0 * math.log10(scenario.carrier_ghz) - 0.6 * (h_ut - 1.5)


def basic_pathloss(scenario: PropagationScenario, d2d_m, d3d_m, h_bs_m, h_ut_m, los):
    """Basic outdoor pathloss in dB without shadowing.

    NLOS is ``max(PL_LOS, PL'_NLOS)``. Distances beyond the nominal model range
    are extrapolated (outer wrap-around rings need them); heights outside the
    validity range raise :class:`ModelDomainError`.
    """
    d2d, d3d, h_bs, h_ut, los = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (d2d_m, d3d_m, h_bs_m, h_ut_m)), np.asarray(los, dtype=bool))
    _check_domain(scenario, d2d, d3d, h_bs, h_ut)
    if scenario.kind == "RMa":
        pl_los = _rma_los(scenario, d2d, d3d, h_bs, h_ut)
        pl_nlos = np.maximum(pl_los, _rma_nlos_prime(scenario, d3d, h_bs, h_ut))
    else:
        pl_los = _uma_los(scenario, d2d, d3d, h_bs, h_ut)
        pl_nlos = np.maximum(pl_los, _uma_nlos_prime(scenario, d3d, h_ut))
    return _scalar_or_array(np.where(los, pl_los, pl_nlos))


def shadow_sigma_db(scenario: PropagationScenario, los, d2d_m=None, h_bs_m=35.0, h_ut_m=1.5):
    """Shadow-fading standard deviation. RMa LOS is 4 dB before the breakpoint, 6 dB after."""
    los = np.asarray(los, dtype=bool)
    if scenario.kind == "UMa":
        return _scalar_or_array(np.where(los, 4.0, 6.0))
    if d2d_m is None:
        los_sigma = 4.0
    else:
        d_bp = rma_breakpoint_m(h_bs_m, h_ut_m, scenario.carrier_ghz)
        los_sigma = np.where(np.asarray(d2d_m, dtype=float) <= d_bp, 4.0, 6.0)
    return _scalar_or_array(np.where(los, los_sigma, 8.0))


def shadow_fading(scenario: PropagationScenario, los, rng: np.random.Generator, size=None, enabled=True,
                  d2d_m=None, h_bs_m=35.0, h_ut_m=1.5):
    """Zero-mean log-normal shadowing draw(s) in dB; exactly 0 when disabled."""
    sigma = np.asarray(shadow_sigma_db(scenario, los, d2d_m, h_bs_m, h_ut_m))
    shape = np.broadcast(sigma, np.empty(size if size is not None else ())).shape
    if not enabled:
        return _scalar_or_array(np.zeros(shape))
    return _scalar_or_array(sigma * rng.standard_normal(shape))


def o2i_wall_loss_db(loss_class, carrier_ghz):
    """Building-entry loss PL_tw for the low/high-loss models."""
    f = carrier_ghz
    l_glass = 2.0 + 0.2 * f
    l_irr_glass = 23.0 + 0.3 * f
    l_concrete = 5.0 + 4.0 * f
    low = 5.0 - 10.0 * math.log10(0.3 * 10 ** (-l_glass / 10) + 0.7 * 10 ** (-l_concrete / 10))
    high = 5.0 - 10.0 * math.log10(0.7 * 10 ** (-l_irr_glass / 10) + 0.3 * 10 ** (-l_concrete / 10))
    cls = np.asarray(loss_class)
    return _scalar_or_array(np.where(cls == "high", high, low))


def o2i_penetration(loss_class, carrier_ghz, d2din_m, rng: np.random.Generator | None = None, spread=True):
    """``(pl_tw_db, pl_in_db, sigma_draw_db)`` for an indoor receiver."""
    pl_tw = o2i_wall_loss_db(loss_class, carrier_ghz)
    pl_in = INDOOR_LOSS_DB_PER_M * np.asarray(d2din_m, dtype=float)
    sigma = np.where(np.asarray(loss_class) == "high", O2I_SIGMA_DB["high"], O2I_SIGMA_DB["low"])
    if spread:
        if rng is None:
            raise ValueError("a random generator is required when spread=True")
        draw = sigma * rng.standard_normal(np.shape(sigma))
    else:
        draw = np.zeros(np.shape(sigma))
    return _scalar_or_array(pl_tw), _scalar_or_array(pl_in), _scalar_or_array(draw)


def link_geometry(cell_xy, cell_h, rx_xy, rx_h, min_d2d_m=0.0):
    """Distances and departure angles, shape (n_rx, n_cells).

    Returns ``d2d, d3d, zod_deg, aod_deg``. ``d2d`` is floored at ``min_d2d_m``
    (probes inside the exclusion radius are evaluated on its boundary).
    """
    cell_xy = np.asarray(cell_xy, dtype=float).reshape(-1, 2)
    rx_xy = np.asarray(rx_xy, dtype=float).reshape(-1, 2)
    dx = rx_xy[:, None, 0] - cell_xy[None, :, 0]
    dy = rx_xy[:, None, 1] - cell_xy[None, :, 1]
    d2d = np.maximum(np.hypot(dx, dy), min_d2d_m)
    dh = np.asarray(cell_h, dtype=float)[None, :] - np.asarray(rx_h, dtype=float).reshape(-1, 1)
    d3d = np.sqrt(d2d ** 2 + dh ** 2)
    zod = 90.0 + np.degrees(np.arctan2(dh, d2d))
    aod = np.degrees(np.arctan2(dy, dx))
    return d2d, d3d, zod, aod


def compose_links(scenario: PropagationScenario, d2d, d3d, h_bs, h_ut, indoor, depth_m, loss_class,
                  draws: LinkDraws | None, options: ChannelOptions) -> LinkStateArrays:
    """Assemble link states for an (n_rx, n_cells) batch.

    ``indoor``, ``depth_m``, ``h_ut`` and ``loss_class`` are per receiver;
    ``draws`` supplies the next row of uniforms/normals per receiver. Each call
    consumes exactly one row per receiver from every stream, regardless of the
    options, so disabling one effect never shifts the draws of another.
    """
    n_rx, n_cells = d2d.shape
    h_ut_col = np.asarray(h_ut, dtype=float).reshape(-1, 1)
    h_bs_row = np.asarray(h_bs, dtype=float).reshape(1, -1)
    indoor_col = np.asarray(indoor, dtype=bool).reshape(-1, 1) & options.o2i
    loss_col = np.asarray(loss_class).reshape(-1, 1)
    if draws is not None:
        u_los = draws.next_uniform("los", n_rx)
        z_sf = draws.next_normal("shadowing", n_rx)
        z_o2i = draws.next_normal("o2i_spread", n_rx)
    else:
        u_los = z_sf = z_o2i = None

    d2din = np.where(indoor_col, np.minimum(np.asarray(depth_m, dtype=float).reshape(-1, 1), d2d), 0.0)
    if options.los_mode == "los":
        los = np.ones((n_rx, n_cells), dtype=bool)
    elif options.los_mode == "nlos":
        los = np.zeros((n_rx, n_cells), dtype=bool)
    else:
        if u_los is None:
            raise ValueError("random LOS requires link draws")
        los = u_los < los_probability(scenario, d2d - d2din, h_ut_col)

    h_bs_b = np.broadcast_to(h_bs_row, d2d.shape)
    h_ut_b = np.broadcast_to(h_ut_col, d2d.shape)
    pl_outdoor = np.asarray(basic_pathloss(scenario, d2d, d3d, h_bs_b, h_ut_b, los))
    if options.shadowing:
        if z_sf is None:
            raise ValueError("shadowing requires link draws")
        shadow = shadow_sigma_db(scenario, los, d2d, h_bs_b, h_ut_b) * z_sf
    else:
        shadow = np.zeros(d2d.shape)
    pl_basic = pl_outdoor + shadow

    loss_b = np.broadcast_to(loss_col, d2d.shape)
    pl_tw = np.where(indoor_col, o2i_wall_loss_db(loss_b, scenario.carrier_ghz), 0.0)
    pl_in = INDOOR_LOSS_DB_PER_M * d2din
    if options.o2i_spread:
        if z_o2i is None:
            raise ValueError("O2I spread requires link draws")
        sigma_p = np.where(loss_b == "high", O2I_SIGMA_DB["high"], O2I_SIGMA_DB["low"])
        spread = np.where(indoor_col, sigma_p * z_o2i, 0.0)
    else:
        spread = np.zeros(d2d.shape)

    total = pl_basic + pl_tw + pl_in + spread
    return LinkStateArrays(los=los, pl_basic_db=pl_basic, pl_tw_db=pl_tw, pl_in_db=pl_in,
                           penetration_sigma_draw_db=spread, shadowing_db=shadow, total_pl_db=total,
                           d2d_m=d2d, d3d_m=d3d)


def _ue_columns(ues):
    xy = np.array([u.position for u in ues], dtype=float).reshape(-1, 2)
    h = np.array([u.height_m for u in ues], dtype=float)
    indoor = np.array([u.indoor for u in ues], dtype=bool)
    depth = np.array([u.indoor_depth_m for u in ues], dtype=float)
    loss = np.array([u.loss_class for u in ues])
    return xy, h, indoor, depth, loss


def link_states(scenario: PropagationScenario, cells, ues, streams, options: ChannelOptions,
                min_d2d_m=0.0) -> LinkStateArrays:
    """Link states for every (UE, cell) pair; UEs must be ordered by ``ue_id`` = row."""
    ids = [u.ue_id for u in ues]
    if ids != list(range(len(ues))):
        raise ValueError("link_states expects UEs with ids 0..n-1 in order")
    cell_xy = np.array([c.position for c in cells], dtype=float)
    cell_h = np.array([c.antenna_height_m for c in cells], dtype=float)
    xy, h, indoor, depth, loss = _ue_columns(ues)
    d2d, d3d, _, _ = link_geometry(cell_xy, cell_h, xy, h, min_d2d_m)
    draws = LinkDraws(streams, [c.cell_id for c in cells]) if streams is not None else None
    return compose_links(scenario, d2d, d3d, cell_h, h, indoor, depth, loss, draws, options)


def link_state(scenario: PropagationScenario, cell, ue, streams, options: ChannelOptions,
               min_d2d_m=0.0) -> LinkState:
    """Single-link evaluation, identical to the matching entry of :func:`link_states`.

    The draws for UE ``k`` are element ``k`` of the cell's per-purpose streams.
    """
    d2d, d3d, _, _ = link_geometry([cell.position], [cell.antenna_height_m], [ue.position], [ue.height_m],
                                   min_d2d_m)
    k = ue.ue_id
    if streams is not None:
        full = LinkDraws(streams, [cell.cell_id])

        class _Row:
            def next_uniform(self, purpose, n):
                return full.next_uniform(purpose, k + 1)[k:k + 1]

            def next_normal(self, purpose, n):
                return full.next_normal(purpose, k + 1)[k:k + 1]

        draws = _Row()
    else:
        draws = None
    arr = compose_links(scenario, d2d, d3d, [cell.antenna_height_m], [ue.height_m], [ue.indoor],
                        [ue.indoor_depth_m], [ue.loss_class], draws, options)
    return arr.at(0, 0)
