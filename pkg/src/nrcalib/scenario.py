"""Calibration presets, configuration resolution, drop orchestration and
reference-curve comparison."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, linkbudget, network, propagation, topology
from .antenna import (DEFAULT_BEAM_SET, DENSE_URBAN_BS_ARRAY, RURAL_BS_ARRAY, UE_ARRAY, ArrayDescriptor,
                      BeamSet, load_beam_set)
from .errors import CalibrationError, ConfigError, DropError, ReferenceParseError
from .streams import LinkDraws, Streams

PRESET_NAMES = ("RuralA", "RuralB", "DenseUrbanA", "custom")
HEIGHT_MODES = ("fixed_1p5", "random_3d")


def _parse_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_int(v):
    if isinstance(v, bool):
        raise ValueError("boolean is not an integer")
    if isinstance(v, (int, np.integer)):
        return int(v)
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"not an integer: {v!r}")
    return int(f)


def _parse_float(v):
    s = str(v).strip().lower()
    if s in ("off", "none"):
        return math.inf
    return float(v)


def _parse_floor(v):
    s = str(v).strip().lower()
    if s in ("off", "none"):
        return -math.inf
    return float(v)


def _parse_array(v):
    return v if isinstance(v, ArrayDescriptor) else ArrayDescriptor.from_text(v)


def _parse_beam_set(v):
    if v is None or isinstance(v, BeamSet):
        return v
    s = str(v).strip()
    if s.lower() == "none":
        return None
    if s.lower() == "default":
        return DEFAULT_BEAM_SET
    if s.startswith("@"):
        return load_beam_set(s[1:])
    return BeamSet.from_text(s)


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (ArrayDescriptor, BeamSet)):
        return v.to_text()
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _choice(options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {options}, got {v!r}")
    return check


def _range(lo=-math.inf, hi=math.inf, lo_open=False):
    def check(v):
        if (v <= lo if lo_open else v < lo) or v > hi:
            raise ValueError(f"value {v} outside {'(' if lo_open else '['}{lo}, {hi}]")
    return check


# name -> (parser, validator)
_FIELD_RULES = {
    "propagation": (str, _choice(propagation.KINDS)),
    "carrier_ghz": (_parse_float, _range(0.5, 100.0)),
    "bandwidth_hz": (_parse_float, _range(0.0, lo_open=True)),
    "isd_m": (_parse_float, _range(0.0, lo_open=True)),
    "num_rings": (_parse_int, _range(0, topology.MAX_RINGS)),
    "bs_height_m": (_parse_float, _range(0.0, lo_open=True)),
    "bs_power_dbm": (_parse_float, None),
    "ue_power_dbm": (_parse_float, None),
    "per_sector_ues": (_parse_int, _range(1)),
    "indoor_fraction": (_parse_float, _range(0.0, 1.0)),
    "loss_high_fraction": (_parse_float, _range(0.0, 1.0)),
    "height_mode": (str, _choice(HEIGHT_MODES)),
    "bs_array": (_parse_array, None),
    "ue_array": (_parse_array, None),
    "beam_set": (_parse_beam_set, None),
    "bs_noise_figure_db": (_parse_float, _range(0.0)),
    "ue_noise_figure_db": (_parse_float, _range(0.0)),
    "interference_cutoff_multiple": (_parse_float, _range(0.0, lo_open=True)),
    "sinr_floor_db": (_parse_floor, None),
    "seed": (_parse_int, _range(0)),
    "num_drops": (_parse_int, _range(1)),
    "shadowing": (_parse_bool, None),
    "o2i": (_parse_bool, None),
    "o2i_spread": (_parse_bool, None),
    "beamforming": (_parse_bool, None),
    "los_mode": (str, _choice(propagation.LOS_MODES)),
    "min_distance_m": (_parse_float, _range(0.0)),
    "ue_speed_kmh": (_parse_float, _range(0.0)),
    "avg_building_height_m": (_parse_float, _range(5.0, 50.0)),
    "avg_street_width_m": (_parse_float, _range(5.0, 50.0)),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved parameter set for one calibration configuration.

    ``ue_power_dbm``, ``bs_noise_figure_db`` and ``ue_speed_kmh`` are carried
    for completeness only: the KPIs are downlink, large-scale and per drop.
    ``interference_cutoff_multiple`` and ``sinr_floor_db`` accept ``inf`` /
    ``-inf`` to disable the cutoff and the out-of-coverage filter.
    """

    propagation: str
    carrier_ghz: float
    bandwidth_hz: float
    isd_m: float
    num_rings: int
    bs_height_m: float
    bs_power_dbm: float
    ue_power_dbm: float
    per_sector_ues: int
    indoor_fraction: float
    loss_high_fraction: float
    height_mode: str
    bs_array: ArrayDescriptor
    ue_array: ArrayDescriptor
    beam_set: BeamSet | None
    bs_noise_figure_db: float
    ue_noise_figure_db: float
    interference_cutoff_multiple: float
    sinr_floor_db: float
    seed: int
    num_drops: int
    shadowing: bool
    o2i: bool
    o2i_spread: bool
    beamforming: bool
    los_mode: str
    min_distance_m: float
    ue_speed_kmh: float
    avg_building_height_m: float
    avg_street_width_m: float
    preset: str = field(default="custom", compare=False)
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def propagation_scenario(self):
        return propagation.PropagationScenario(self.propagation, self.carrier_ghz,
                                               self.avg_building_height_m, self.avg_street_width_m)

    @property
    def channel_options(self):
        return propagation.ChannelOptions(shadowing=self.shadowing, o2i=self.o2i, o2i_spread=self.o2i_spread,
                                          los_mode=self.los_mode)

    def items(self):
        """``(name, value)`` pairs of every configuration field, in declaration order."""
        return [(f.name, getattr(self, f.name)) for f in fields(self) if f.name in _FIELD_RULES]

    def replace(self, **overrides):
        """Copy with some fields changed; provenance of the others is kept."""
        unknown = sorted(k for k in overrides if k not in _FIELD_RULES)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}", unknown)
        cfg = resolve(self.preset, {**dict(self.items()), **overrides})
        cfg.provenance.clear()
        cfg.provenance.update(self.provenance)
        cfg.provenance.update({k: "override" for k in overrides})
        return cfg


CONFIG_FIELDS = tuple(f.name for f in fields(ScenarioConfig) if f.name in _FIELD_RULES)

COMMON_DEFAULTS = {
    "num_rings": 5,
    "per_sector_ues": 10,
    "ue_power_dbm": 23.0,
    "ue_array": UE_ARRAY,
    "bs_noise_figure_db": 5.0,
    "ue_noise_figure_db": 7.0,
    "interference_cutoff_multiple": 2.0,
    "sinr_floor_db": linkbudget.DEFAULT_SINR_FLOOR_DB,
    "seed": 1,
    "num_drops": 20,
    "shadowing": True,
    "o2i": True,
    "o2i_spread": True,
    "beamforming": True,
    "los_mode": "random",
    "min_distance_m": topology.MIN_BS_UE_DISTANCE_M,
    "ue_speed_kmh": 3.0,
    "avg_building_height_m": 5.0,
    "avg_street_width_m": 20.0,
}

_RURAL = {
    "propagation": "RMa",
    "carrier_ghz": 0.7,
    "bandwidth_hz": 10e6,
    "isd_m": 1732.0,
    "bs_height_m": 35.0,
    "bs_power_dbm": 46.0,
    "indoor_fraction": 0.5,
    "loss_high_fraction": 0.0,
    "height_mode": "fixed_1p5",
    "bs_array": RURAL_BS_ARRAY,
    "beam_set": None,
}

PRESETS = {
    "RuralA": dict(_RURAL),
    "RuralB": {**_RURAL, "carrier_ghz": 4.0},
    "DenseUrbanA": {
        "propagation": "UMa",
        "carrier_ghz": 4.0,
        "bandwidth_hz": 10e6,
        "isd_m": 200.0,
        "bs_height_m": 25.0,
        "bs_power_dbm": 41.0,
        "indoor_fraction": 0.8,
        "loss_high_fraction": 0.2,
        "height_mode": "random_3d",
        "bs_array": DENSE_URBAN_BS_ARRAY,
        "beam_set": DEFAULT_BEAM_SET,
    },
}


def canonical_preset(name):
    for p in PRESET_NAMES:
        if p.lower() == str(name).strip().lower():
            return p
    raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}", ["preset"])


def resolve(preset, overrides=None) -> ScenarioConfig:
    """Merge common defaults, preset values and overrides into a validated config.

    Override values may be strings (as read from files or ``--set``) or typed
    values. Provenance per field is kept in ``config.provenance``.
    """
    preset = canonical_preset(preset)
    overrides = dict(overrides or {})
    unknown = sorted(k for k in overrides if k not in _FIELD_RULES)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}", unknown)

    values, provenance = {}, {}
    for source, layer in (("default", COMMON_DEFAULTS), ("preset", PRESETS.get(preset, {})),
                          ("override", overrides)):
        for k, v in layer.items():
            values[k] = v
            provenance[k] = source

    missing = [k for k in CONFIG_FIELDS if k not in values]
    if missing:
        raise ConfigError(f"missing mandatory config field(s): {', '.join(missing)}", missing)

    parsed = {}
    for k in CONFIG_FIELDS:
        parser, check = _FIELD_RULES[k]
        try:
            v = parser(values[k])
            if check is not None:
                check(v)
        except (ValueError, TypeError, OSError) as exc:
            raise ConfigError(f"config field {k}: {exc}", [k]) from None
        parsed[k] = v
    cfg = ScenarioConfig(**parsed, preset=preset, provenance=provenance)
    try:
        cfg.propagation_scenario
    except ValueError as exc:
        raise ConfigError(f"config field propagation: {exc}", ["propagation"]) from None
    return cfg


def read_key_values(path):
    """Parse a flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            out[key.strip()] = value.strip()
    return out


def load_config_file(path, overrides=None, preset=None) -> ScenarioConfig:
    """Resolve a config file. A ``preset`` key in the file selects the base preset.

    ``run.*`` keys (run metadata in a manifest) are ignored, so a manifest can
    be fed back as a config to reproduce its run.
    """
    values = {k: v for k, v in read_key_values(path).items() if not k.startswith("run.")}
    file_preset = values.pop("preset", None)
    base = preset or file_preset or "custom"
    return resolve(base, {**values, **(overrides or {})})


def config_from_manifest(path) -> ScenarioConfig:
    return load_config_file(path)


def build_plan(config: ScenarioConfig) -> topology.SitePlan:
    return topology.build_hex_layout(config.isd_m, config.num_rings, tx_power_dbm=config.bs_power_dbm,
                                     antenna_height_m=config.bs_height_m, array=config.bs_array)


# ---------------------------------------------------------------------------
# drops

@dataclass
class DropResult:
    """Per-UE results of one drop (all UEs, measured or not)."""

    drop: int
    ue_ids: np.ndarray
    home_cell: np.ndarray
    measured: np.ndarray
    indoor: np.ndarray
    serving_cell: np.ndarray
    coupling_gain_db: np.ndarray
    sinr_db: np.ndarray
    ues: list | None = None
    eval: network.NetworkEval | None = None


def drop_population(config: ScenarioConfig, plan, drop: int):
    streams = Streams.for_drop(config.seed, drop)
    ues = topology.drop_users(plan, config.per_sector_ues, streams, config.min_distance_m)
    return topology.assign_indoor_state(ues, config.indoor_fraction, config.loss_high_fraction,
                                        config.height_mode, streams,
                                        config.propagation_scenario.max_indoor_depth_m)


def run_drop(config: ScenarioConfig, drop: int, plan=None, keep_details=False) -> DropResult:
    """Simulate one drop: place UEs, draw channels, attach, compute KPIs."""
    plan = plan or build_plan(config)
    streams = Streams.for_drop(config.seed, drop)
    ues = drop_population(config, plan, drop)
    xy = np.array([u.position for u in ues], dtype=float)
    h = np.array([u.height_m for u in ues], dtype=float)
    indoor = np.array([u.indoor for u in ues], dtype=bool)
    depth = np.array([u.indoor_depth_m for u in ues], dtype=float)
    loss = np.array([u.loss_class for u in ues])
    draws = LinkDraws(streams, [c.cell_id for c in plan.cells])
    ev = network.evaluate(config, plan, xy, h, indoor, depth, loss, draws, config.channel_options)

    cells = plan.cells
    home = np.array([u.home_cell for u in ues], dtype=int)
    measured = np.array([cells[c].measured for c in home], dtype=bool)
    serving = np.array([cells[i].cell_id for i in ev.serving_idx], dtype=int)
    if keep_details:
        for ue, s in zip(ues, serving):
            ue.serving_cell = int(s)
    return DropResult(drop=drop, ue_ids=np.array([u.ue_id for u in ues], dtype=int), home_cell=home,
                      measured=measured, indoor=indoor, serving_cell=serving,
                      coupling_gain_db=ev.coupling_gain_db, sinr_db=ev.sinr_db,
                      ues=ues if keep_details else None, eval=ev if keep_details else None)


def _run_drop_worker(args):
    config, drop = args
    try:
        return run_drop(config, drop)
    except CalibrationError as exc:
        raise DropError(drop, exc) from exc


@dataclass
class RunResult:
    config: ScenarioConfig
    drops: list
    samples: linkbudget.KpiSampleSet

    @property
    def filtered_count(self):
        return self.samples.filtered_count

    def measured_rows(self):
        """``(ue_id, drop, serving_cell, coupling_gain_db, sinr_db, indoor)`` sorted by drop, ue."""
        rows = []
        for d in self.drops:
            for i in np.flatnonzero(d.measured):
                rows.append((int(d.ue_ids[i]), d.drop, int(d.serving_cell[i]), float(d.coupling_gain_db[i]),
                             float(d.sinr_db[i]), bool(d.indoor[i])))
        return rows


def collect_samples(config, drops) -> linkbudget.KpiSampleSet:
    cg, sinr, drop_ids = [], [], []
    filtered = 0
    for d in drops:
        m = d.measured
        cg.append(d.coupling_gain_db[m])
        keep = d.sinr_db[m] >= config.sinr_floor_db
        filtered += int(np.count_nonzero(~keep))
        sinr.append(d.sinr_db[m][keep])
        drop_ids.append(np.full(int(m.sum()), d.drop))
    return linkbudget.KpiSampleSet(coupling_gain_db=np.concatenate(cg), geometry_sinr_db=np.concatenate(sinr),
                                   filtered_count=filtered, scenario=config.preset,
                                   drop_ids=np.concatenate(drop_ids))


def run_drops(config: ScenarioConfig, jobs: int = 1, keep_details=False) -> RunResult:
    """Run ``config.num_drops`` independent drops and aggregate measured-cell samples.

    Drops may run in worker processes; results are merged in drop order so the
    output does not depend on ``jobs``.
    """
    drop_ids = list(range(config.num_drops))
    if jobs > 1 and not keep_details and len(drop_ids) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            drops = list(pool.map(_run_drop_worker, [(config, d) for d in drop_ids]))
    else:
        plan = build_plan(config)
        drops = []
        for d in drop_ids:
            try:
                drops.append(run_drop(config, d, plan, keep_details))
            except CalibrationError as exc:
                raise DropError(d, exc) from exc
    return RunResult(config=config, drops=drops, samples=collect_samples(config, drops))


# ---------------------------------------------------------------------------
# output files

def _fmt_value(v):
    return f"{v:.6f}"


def write_cdf_csv(path, cdf: linkbudget.Cdf):
    with open(path, "w", newline="") as fh:
        fh.write("value_db,cum_prob\n")
        for v, p in zip(cdf.values, cdf.probs):
            fh.write(f"{_fmt_value(v)},{p:.12g}\n")


def write_manifest(path, config: ScenarioConfig, extra=None):
    lines = ["# nrcalib run manifest", f"run.artifact_version={__version__}", f"run.root_seed={config.seed}"]
    for k, v in (extra or {}).items():
        lines.append(f"run.{k}={v}")
    for k in CONFIG_FIELDS:
        lines.append(f"run.provenance.{k}={config.provenance.get(k, 'unknown')}")
    lines.append(f"preset={config.preset}")
    lines.extend(f"{k}={format_value(v)}" for k, v in config.items())
    Path(path).write_text("\n".join(lines) + "\n")


def write_run_outputs(result: RunResult, out_dir, sign="gain"):
    """Write kpi.csv, coupling_cdf.csv, sinr_cdf.csv and manifest.txt."""
    if sign not in ("gain", "loss"):
        raise ValueError(f"sign must be 'gain' or 'loss', got {sign!r}")
    flip = -1.0 if sign == "loss" else 1.0
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "kpi.csv", "w", newline="") as fh:
        fh.write("ue_id,drop,serving_cell,coupling_gain_db,sinr_db\n")
        for ue_id, drop, cell, cg, sinr, _ in result.measured_rows():
            fh.write(f"{ue_id},{drop},{cell},{_fmt_value(flip * cg)},{_fmt_value(sinr)}\n")
    s = result.samples
    write_cdf_csv(out / "coupling_cdf.csv", linkbudget.make_cdf(flip * s.coupling_gain_db))
    write_cdf_csv(out / "sinr_cdf.csv", linkbudget.make_cdf(s.geometry_sinr_db))
    write_manifest(out / "manifest.txt", result.config, {
        "sign_convention": sign,
        "samples_coupling_gain": s.coupling_gain_db.size,
        "samples_sinr": s.geometry_sinr_db.size,
        "filtered_count": s.filtered_count,
    })


# ---------------------------------------------------------------------------
# reference curves

@dataclass(frozen=True)
class ReferenceCurve:
    label: str
    values: np.ndarray
    cum_probs: np.ndarray

    def to_cdf(self) -> linkbudget.Cdf:
        return linkbudget.Cdf(values=self.values, probs=self.cum_probs)


def load_reference(path, label=None) -> ReferenceCurve:
    """Read a ``value_db,cum_prob`` CSV (a digitized curve or a CDF written by ``run``)."""
    values, probs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["value_db", "cum_prob"]:
            raise ReferenceParseError(f"{path}:1: header must be 'value_db,cum_prob'", line=1)
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != 2:
                    raise ValueError
                v, p = float(row[0]), float(row[1])
            except ValueError:
                raise ReferenceParseError(f"{path}:{lineno}: malformed row {row!r}", line=lineno) from None
            values.append(v)
            probs.append(p)
    if not values:
        raise ReferenceParseError(f"{path}: no data rows")
    v = np.array(values)
    p = np.array(probs)
    if p[0] <= 0.0 or p[-1] > 1.0 or np.any(np.diff(p) <= 0):
        raise ReferenceParseError(f"{path}: cum_prob must be strictly increasing within (0, 1]")
    if np.any(np.diff(v) < 0):
        raise ReferenceParseError(f"{path}: value_db must be non-decreasing")
    return ReferenceCurve(label=label or os.path.basename(str(path)), values=v, cum_probs=p)


@dataclass(frozen=True)
class ComparisonReport:
    ks: float
    delta_median_db: float
    delta_p5_db: float
    delta_p95_db: float

    def lines(self):
        return [f"ks={self.ks:.6f}", f"delta_median_db={self.delta_median_db:+.6f}",
                f"delta_p5_db={self.delta_p5_db:+.6f}", f"delta_p95_db={self.delta_p95_db:+.6f}"]


def compare(run_cdf, reference) -> ComparisonReport:
    """KS distance and percentile offsets (reference minus run) at 5/50/95 %."""
    ref = reference.to_cdf() if isinstance(reference, ReferenceCurve) else reference
    run = run_cdf.to_cdf() if isinstance(run_cdf, ReferenceCurve) else run_cdf
    pct = linkbudget.percentile
    return ComparisonReport(ks=linkbudget.ks_distance(run, ref),
                            delta_median_db=pct(ref, 0.5) - pct(run, 0.5),
                            delta_p5_db=pct(ref, 0.05) - pct(run, 0.05),
                            delta_p95_db=pct(ref, 0.95) - pct(run, 0.95))
