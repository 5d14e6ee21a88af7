"""Hexagonal tri-sector deployment and user dropping.

Coordinates: x east, y north, azimuths counterclockwise from +x in degrees.
Sites sit on the lattice ``isd * (i*(1, 0) + j*(1/2, sqrt(3)/2))``. Each site owns
a hexagon of circumradius ``isd/sqrt(3)`` with vertices at 30 + 60k degrees; the
three sector service regions are the rhombi obtained by cutting that hexagon
along the 90/210/330 degree vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .antenna import ArrayDescriptor, UE_ARRAY
from .errors import NotASiteError, UnsupportedRingCountError
from .streams import Streams

SECTOR_BEARINGS_DEG = (30.0, 150.0, 270.0)
# Sorted distinct site distances from the center, in units of ISD.
RING_DISTANCES = (0.0, 1.0, math.sqrt(3.0), 2.0, math.sqrt(7.0), 3.0)
RING_POPULATIONS = (1, 6, 6, 6, 12, 6)
MAX_RINGS = len(RING_DISTANCES) - 1
MEASURED_RINGS = (0, 1)
MIN_BS_UE_DISTANCE_M = 10.0
OUTDOOR_HEIGHT_M = 1.5

_RING_TOL = 1e-6


@dataclass
class Cell:
    cell_id: int
    site_id: int
    bearing_deg: float
    tx_power_dbm: float
    antenna_height_m: float
    array: ArrayDescriptor
    measured: bool
    position: tuple


@dataclass
class Site:
    site_id: int
    position: tuple
    ring_index: int
    cells: list = field(default_factory=list)


@dataclass
class SitePlan:
    sites: list
    isd: float
    num_rings: int

    @property
    def cells(self):
        return [c for s in self.sites for c in s.cells]

    @property
    def measured_cells(self):
        return [c for c in self.cells if c.measured]

    def cell_positions(self) -> np.ndarray:
        return np.array([c.position for c in self.cells], dtype=float)

    def cell_bearings(self) -> np.ndarray:
        return np.array([c.bearing_deg for c in self.cells], dtype=float)

    def cell_heights(self) -> np.ndarray:
        return np.array([c.antenna_height_m for c in self.cells], dtype=float)

    def cell_powers(self) -> np.ndarray:
        return np.array([c.tx_power_dbm for c in self.cells], dtype=float)


@dataclass
class UserTerminal:
    ue_id: int
    position: tuple
    home_cell: int
    height_m: float = OUTDOOR_HEIGHT_M
    indoor: bool = False
    indoor_depth_m: float = 0.0
    loss_class: str = "low"
    serving_cell: int | None = None


def _lattice_points(num_rings):
    reach = int(math.ceil(RING_DISTANCES[num_rings])) + 1
    pts = []
    for i in range(-2 * reach, 2 * reach + 1):
        for j in range(-2 * reach, 2 * reach + 1):
            d = math.sqrt(i * i + i * j + j * j)
            if d <= RING_DISTANCES[num_rings] + _RING_TOL:
                pts.append((i, j, d))
    return pts


def _ring_index(dist_in_isd):
    for k, ref in enumerate(RING_DISTANCES):
        if abs(dist_in_isd - ref) <= _RING_TOL * max(ref, 1.0):
            return k
    return None


def build_hex_layout(isd: float, num_rings: int, tx_power_dbm: float = 46.0,
                     antenna_height_m: float = 35.0, array: ArrayDescriptor = UE_ARRAY) -> SitePlan:
    """Build a hexagonal layout with ``num_rings`` rings around a center site.

    Sites are ordered by ring, then by azimuth in [0, 360); cell ``3*s + k`` is
    sector ``k`` of site ``s`` with bearing ``SECTOR_BEARINGS_DEG[k]``. Cells on
    rings 0 and 1 are flagged as measured.
    """
    if not isd > 0:
        raise ValueError(f"isd must be positive, got {isd}")
    if num_rings < 0:
        raise ValueError(f"num_rings must be >= 0, got {num_rings}")
    if num_rings > MAX_RINGS:
        raise UnsupportedRingCountError(f"num_rings={num_rings} exceeds the supported maximum of {MAX_RINGS}")

    entries = []
    for i, j, d in _lattice_points(num_rings):
        x = isd * (i + 0.5 * j)
        y = isd * (math.sqrt(3.0) / 2.0 * j)
        ang = math.degrees(math.atan2(j * math.sqrt(3.0) / 2.0, i + 0.5 * j)) % 360.0
        entries.append((_ring_index(d), round(ang, 9), x, y))
    entries.sort(key=lambda e: (e[0], e[1]))

    sites = []
    for site_id, (ring, _, x, y) in enumerate(entries):
        site = Site(site_id=site_id, position=(x, y), ring_index=ring)
        for k, bearing in enumerate(SECTOR_BEARINGS_DEG):
            site.cells.append(Cell(cell_id=3 * site_id + k, site_id=site_id, bearing_deg=bearing,
                                   tx_power_dbm=tx_power_dbm, antenna_height_m=antenna_height_m,
                                   array=array, measured=ring in MEASURED_RINGS, position=(x, y)))
        sites.append(site)
    return SitePlan(sites=sites, isd=float(isd), num_rings=int(num_rings))


def ring_of(site_position, isd: float) -> int:
    """Ring index of a lattice site position."""
    x, y = site_position
    j = y / (isd * math.sqrt(3.0) / 2.0)
    i = x / isd - 0.5 * j
    if abs(i - round(i)) > 1e-6 or abs(j - round(j)) > 1e-6:
        raise NotASiteError(f"position {site_position} is not a lattice site for isd={isd}")
    ring = _ring_index(math.hypot(x, y) / isd)
    if ring is None:
        raise NotASiteError(f"position {site_position} is beyond ring {MAX_RINGS}")
    return ring


def sector_basis(isd, bearing_deg):
    """Edge vectors spanning the sector rhombus, relative to the site."""
    radius = isd / math.sqrt(3.0)
    a = math.radians(bearing_deg - 60.0)
    b = math.radians(bearing_deg + 60.0)
    return (np.array([radius * math.cos(a), radius * math.sin(a)]),
            np.array([radius * math.cos(b), radius * math.sin(b)]))


def in_sector(point, site_position, isd, bearing_deg, eps=1e-9):
    e1, e2 = sector_basis(isd, bearing_deg)
    rel = np.asarray(point, dtype=float) - np.asarray(site_position, dtype=float)
    u, v = np.linalg.solve(np.column_stack([e1, e2]), rel)
    return -eps <= u <= 1 + eps and -eps <= v <= 1 + eps


def drop_users(plan: SitePlan, per_sector: int, rng: Streams,
               min_distance_m: float = MIN_BS_UE_DISTANCE_M) -> list:
    """Drop ``per_sector`` UEs uniformly in every sector's service region.

    UE ids are ``cell_id * per_sector + k``. Points closer than ``min_distance_m``
    to their own site are redrawn.
    """
    if per_sector < 1:
        raise ValueError(f"per_sector must be >= 1, got {per_sector}")
    ues = []
    for cell in plan.cells:
        gen = rng.generator("ue_position", cell.cell_id)
        e1, e2 = sector_basis(plan.isd, cell.bearing_deg)
        origin = np.asarray(cell.position)
        for k in range(per_sector):
            while True:
                u, v = gen.random(2)
                offset = u * e1 + v * e2
                if math.hypot(offset[0], offset[1]) >= min_distance_m:
                    break
            p = origin + offset
            ues.append(UserTerminal(ue_id=cell.cell_id * per_sector + k,
                                    position=(float(p[0]), float(p[1])), home_cell=cell.cell_id))
    return ues


def floor_height(n_floor):
    return 3.0 * (n_floor - 1) + 1.5


def assign_indoor_state(ues, indoor_fraction: float, loss_high_fraction: float, height_mode: str,
                        rng: Streams, max_indoor_depth_m: float = 10.0) -> list:
    """Return copies of ``ues`` with indoor flag, loss class, height and depth set.

    Each UE consumes exactly five uniforms from its home cell's ``ue_state``
    stream (indoor, loss class, building floors, floor, depth), whatever the
    outcome, so draws stay aligned across configurations.
    """
    for name, val in (("indoor_fraction", indoor_fraction), ("loss_high_fraction", loss_high_fraction)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {val}")
    if height_mode not in ("fixed_1p5", "random_3d"):
        raise ValueError(f"unknown height_mode {height_mode!r}")

    by_cell = {}
    for ue in ues:
        by_cell.setdefault(ue.home_cell, []).append(ue)
    out = {}
    for cell_id, members in by_cell.items():
        members = sorted(members, key=lambda u: u.ue_id)
        gen = rng.generator("ue_state", cell_id)
        draws = gen.random((len(members), 5))
        for ue, (u_in, u_loss, u_nfl_tot, u_nfl, u_depth) in zip(members, draws):
            indoor = bool(u_in < indoor_fraction)
            if not indoor:
                out[ue.ue_id] = replace(ue, indoor=False, height_m=OUTDOOR_HEIGHT_M, indoor_depth_m=0.0,
                                        loss_class="low")
                continue
            height = OUTDOOR_HEIGHT_M
            if height_mode == "random_3d":
                n_floors = 4 + int(u_nfl_tot * 5)            # uniform {4..8}
                n_floor = 1 + int(u_nfl * n_floors)          # uniform {1..Nfl}
                height = floor_height(n_floor)
            out[ue.ue_id] = replace(ue, indoor=True, height_m=height,
                                    indoor_depth_m=float(u_depth * max_indoor_depth_m),
                                    loss_class="high" if u_loss < loss_high_fraction else "low")
    return [out[ue.ue_id] for ue in ues]
