"""Antenna elements, uniform planar arrays and analog beam steering.

Angles follow the usual zenith/azimuth convention: zenith 0 is straight up,
90 is the horizon. Azimuths passed to array functions are *local*, i.e.
measured from the sector boresight.

Array geometry: ``rows`` elements stacked vertically (spacing ``dv_lambda``)
times ``cols`` elements along the horizontal axis orthogonal to boresight
(spacing ``dh_lambda``). "8x1" is 8 vertical x 1 horizontal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

THREEGPP_HPBW_DEG = 65.0
THREEGPP_MAX_ATT_DB = 30.0
THREEGPP_SLA_DB = 30.0

ELEMENTS = ("threegpp", "isotropic")
POLARIZATIONS = ("single", "dual_model2")


@dataclass(frozen=True)
class ArrayDescriptor:
    rows: int = 1
    cols: int = 1
    dh_lambda: float = 0.5
    dv_lambda: float = 0.5
    element: str = "isotropic"
    element_max_gain_dbi: float = 0.0
    downtilt_deg: float = 90.0
    polarization: str = "single"
    slant_deg: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array needs at least one element, got {self.rows}x{self.cols}")
        if self.element not in ELEMENTS:
            raise ValueError(f"unknown element {self.element!r}")
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"unknown polarization {self.polarization!r}")

    @property
    def n_elements(self):
        return self.rows * self.cols

    def to_text(self):
        return (f"{self.rows}x{self.cols},dh={self.dh_lambda:g},dv={self.dv_lambda:g},"
                f"element={self.element},gain={self.element_max_gain_dbi:g},tilt={self.downtilt_deg:g},"
                f"pol={self.polarization},slant={self.slant_deg:g}")

    @classmethod
    def from_text(cls, text):
        """Parse ``"8x1,dh=0.5,dv=0.8,element=threegpp,gain=8"``; omitted keys keep defaults."""
        parts = [p.strip() for p in str(text).split(",") if p.strip()]
        if not parts:
            raise ValueError("empty array descriptor")
        try:
            rows, cols = (int(v) for v in parts[0].lower().split("x"))
        except ValueError:
            raise ValueError(f"array size must look like RxC, got {parts[0]!r}") from None
        keys = {"dh": ("dh_lambda", float), "dv": ("dv_lambda", float), "element": ("element", str),
                "gain": ("element_max_gain_dbi", float), "tilt": ("downtilt_deg", float),
                "pol": ("polarization", str), "slant": ("slant_deg", float)}
        kwargs = {"rows": rows, "cols": cols}
        for p in parts[1:]:
            k, sep, v = p.partition("=")
            if not sep or k.strip() not in keys:
                raise ValueError(f"bad array descriptor token {p!r}")
            name, conv = keys[k.strip()]
            kwargs[name] = conv(v.strip())
        return cls(**kwargs)


RURAL_BS_ARRAY = ArrayDescriptor(rows=8, cols=1, dh_lambda=0.5, dv_lambda=0.8, element="threegpp",
                                 element_max_gain_dbi=8.0, downtilt_deg=90.0)
DENSE_URBAN_BS_ARRAY = replace(RURAL_BS_ARRAY, rows=4, cols=8)
UE_ARRAY = ArrayDescriptor()


@dataclass(frozen=True)
class BeamSet:
    """Analog steering directions as (azimuth relative to boresight, zenith) pairs."""

    directions: tuple

    def __post_init__(self):
        dirs = tuple((float(a), float(z)) for a, z in self.directions)
        if not dirs:
            raise ValueError("beam set must not be empty")
        if len(set(dirs)) != len(dirs):
            raise ValueError("beam set directions must be unique")
        object.__setattr__(self, "directions", dirs)

    def __len__(self):
        return len(self.directions)

    def to_text(self):
        return ";".join(f"{a:g}:{z:g}" for a, z in self.directions)

    @classmethod
    def from_text(cls, text):
        pairs = []
        for tok in str(text).split(";"):
            if tok.strip():
                a, _, z = tok.partition(":")
                pairs.append((float(a), float(z)))
        return cls(tuple(pairs))


DEFAULT_BEAM_SET = BeamSet(tuple((az, zen) for zen in (90.0, 100.0) for az in (-45.0, -15.0, 15.0, 45.0)))


def load_beam_set(path) -> BeamSet:
    """Read a beam-set file: one ``azimuth_deg,zenith_deg`` pair per line."""
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                az, zen = (float(v) for v in line.split(","))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'azimuth_deg,zenith_deg', got {line!r}") from None
            pairs.append((az, zen))
    return BeamSet(tuple(pairs))


def wrap_azimuth(phi_deg):
    """Wrap to (-180, 180]."""
    phi = np.mod(np.asarray(phi_deg, dtype=float) + 180.0, 360.0) - 180.0
    return np.where(phi == -180.0, 180.0, phi)


def element_gain_db(element, theta_deg, phi_deg, max_gain_dbi=None):
    """Directional gain of a single element in dBi.

    ``element`` is an :class:`ArrayDescriptor` or an element name. The 3GPP
    element is ``G_max - min(-(A_V + A_H), 30)`` with 65 degree beamwidths and
    30 dB side-lobe / front-back limits.
    """
    if isinstance(element, ArrayDescriptor):
        max_gain_dbi = element.element_max_gain_dbi if max_gain_dbi is None else max_gain_dbi
        element = element.element
    theta = np.asarray(theta_deg, dtype=float)
    phi = wrap_azimuth(phi_deg)
    if element == "isotropic":
        return np.zeros(np.broadcast(theta, phi).shape) + (max_gain_dbi or 0.0)
    if max_gain_dbi is None:
        max_gain_dbi = 8.0
    a_v = -np.minimum(12.0 * ((theta - 90.0) / THREEGPP_HPBW_DEG) ** 2, THREEGPP_SLA_DB)
    a_h = -np.minimum(12.0 * (phi / THREEGPP_HPBW_DEG) ** 2, THREEGPP_MAX_ATT_DB)
    return max_gain_dbi - np.minimum(-(a_v + a_h), THREEGPP_MAX_ATT_DB)


def element_positions(array: ArrayDescriptor) -> np.ndarray:
    """(N, 2) element offsets in wavelengths: columns are (horizontal, vertical).

    Element ordering is row-major: index ``m*cols + n``.
    """
    m, n = np.meshgrid(np.arange(array.rows), np.arange(array.cols), indexing="ij")
    return np.column_stack([n.ravel() * array.dh_lambda, m.ravel() * array.dv_lambda])


def _direction_terms(theta_deg, phi_deg):
    th = np.radians(theta_deg)
    ph = np.radians(phi_deg)
    return np.sin(th) * np.sin(ph), np.cos(th)


def array_response(array: ArrayDescriptor, theta_deg, phi_deg) -> np.ndarray:
    """Plane-wave response, shape ``angles.shape + (N,)``."""
    horiz, vert = _direction_terms(np.asarray(theta_deg, float), np.asarray(phi_deg, float))
    pos = element_positions(array)
    phase = 2j * np.pi * (horiz[..., None] * pos[:, 0] + vert[..., None] * pos[:, 1])
    return np.exp(phase)


def steering_weights(array: ArrayDescriptor, az_deg, zen_deg) -> np.ndarray:
    """Unit-norm phase-only weights matched to the direction (az, zen)."""
    v = array_response(array, zen_deg, az_deg)
    return np.conj(v) / math.sqrt(array.n_elements)


def array_gain_db(array: ArrayDescriptor, weights, theta_deg, phi_deg):
    """Array-factor gain ``|sum w_i v_i|^2`` in dB for arbitrary weights."""
    v = array_response(array, theta_deg, phi_deg)
    return 10.0 * np.log10(np.abs(v @ np.asarray(weights)) ** 2)


def _uniform_line_power(n, spacing, u):
    # |(1/sqrt n) sum_k exp(j 2 pi k d u)|^2, u = direction cosine difference
    if n == 1:
        return np.ones_like(u)
    k = np.arange(n)
    s = np.exp(2j * np.pi * spacing * u[..., None] * k).sum(axis=-1)
    return np.abs(s) ** 2 / n


def steered_array_power(array: ArrayDescriptor, beam_az_deg, beam_zen_deg, theta_deg, phi_deg):
    """Linear array-factor power toward (theta, phi) with the beam at (az, zen).

    Uses the row/column separability of phase-only URA steering, which is much
    cheaper than forming the full response for large link batches. Arguments
    broadcast against each other.
    """
    h, v = _direction_terms(np.asarray(theta_deg, float), np.asarray(phi_deg, float))
    hs, vs = _direction_terms(np.asarray(beam_zen_deg, float), np.asarray(beam_az_deg, float))
    h, hs = np.broadcast_arrays(h, hs)
    v, vs = np.broadcast_arrays(v, vs)
    return (_uniform_line_power(array.rows, array.dv_lambda, v - vs)
            * _uniform_line_power(array.cols, array.dh_lambda, h - hs))


def polarization_factor(tx: ArrayDescriptor, rx: ArrayDescriptor):
    """Power coupling between the transmit TXRU and the receiver, Model-2 ideal.

    A slanted element radiates ``F = sqrt(A) * (cos z, sin z)`` in the local
    (theta, phi) basis with no cross-polar leakage; the coupling between two
    linear polarizations is ``cos^2`` of their slant difference. In dual mode the
    port best matched to the other end carries the link.
    """
    tx_slants = [tx.slant_deg] + ([tx.slant_deg + 90.0] if tx.polarization == "dual_model2" else [])
    rx_slants = [rx.slant_deg] + ([rx.slant_deg + 90.0] if rx.polarization == "dual_model2" else [])
    return max(math.cos(math.radians(a - b)) ** 2 for a in tx_slants for b in rx_slants)


def polarized_element_gain_db(element, theta_deg, phi_deg, tx_slant_deg, rx_slant_deg, max_gain_dbi=None):
    g = element_gain_db(element, theta_deg, phi_deg, max_gain_dbi)
    c2 = math.cos(math.radians(tx_slant_deg - rx_slant_deg)) ** 2
    with np.errstate(divide="ignore"):
        return g + 10.0 * np.log10(c2 if c2 > 1e-30 else 0.0)


def txru_gain_db(tx_array: ArrayDescriptor, tx_bearing_deg, beam, zod_deg, aod_deg,
                 rx_array: ArrayDescriptor = UE_ARRAY, rx_beam=None, zoa_deg=None, aoa_deg=None,
                 rx_bearing_deg=0.0, beamforming=True):
    """End-to-end antenna gain in dB for one TXRU at each end.

    ``zod/aod`` are the global departure angles from the transmitter; ``beam`` is
    an (azimuth relative to boresight, zenith) steering pair, or None for the
    array's fixed beam (boresight azimuth, ``downtilt_deg`` zenith). Receiver
    angles default to the reciprocal direction.
    """
    if beam is None:
        beam = (0.0, tx_array.downtilt_deg)
    zod = np.asarray(zod_deg, dtype=float)
    aod_local = wrap_azimuth(np.asarray(aod_deg, dtype=float) - tx_bearing_deg)
    gain = element_gain_db(tx_array, zod, aod_local)
    if beamforming and tx_array.n_elements > 1:
        gain = gain + 10.0 * np.log10(steered_array_power(tx_array, beam[0], beam[1], zod, aod_local))

    zoa = 180.0 - zod if zoa_deg is None else np.asarray(zoa_deg, dtype=float)
    aoa = np.asarray(aod_deg, dtype=float) + 180.0 if aoa_deg is None else np.asarray(aoa_deg, dtype=float)
    aoa_local = wrap_azimuth(aoa - rx_bearing_deg)
    gain = gain + element_gain_db(rx_array, zoa, aoa_local)
    if beamforming and rx_array.n_elements > 1:
        rb = (0.0, rx_array.downtilt_deg) if rx_beam is None else rx_beam
        gain = gain + 10.0 * np.log10(steered_array_power(rx_array, rb[0], rb[1], zoa, aoa_local))

    pf = polarization_factor(tx_array, rx_array)
    if pf != 1.0:
        with np.errstate(divide="ignore"):
            gain = gain + 10.0 * np.log10(pf)
    return gain


def beam_gains_db(array: ArrayDescriptor, beam_set: BeamSet, bearing_deg, zod_deg, aod_deg, beamforming=True):
    """Transmit-side gain per beam, shape ``angles.shape + (n_beams,)``."""
    zod = np.asarray(zod_deg, dtype=float)[..., None]
    aod_local = wrap_azimuth(np.asarray(aod_deg, dtype=float) - np.asarray(bearing_deg, dtype=float))[..., None]
    az = np.array([b[0] for b in beam_set.directions])
    zen = np.array([b[1] for b in beam_set.directions])
    gain = element_gain_db(array, zod, aod_local) + np.zeros(az.shape)
    if beamforming and array.n_elements > 1:
        gain = gain + 10.0 * np.log10(steered_array_power(array, az, zen, zod, aod_local))
    return gain


def beam_search(array: ArrayDescriptor, beam_set: BeamSet, bearing_deg, zod_deg, aod_deg, beamforming=True):
    """Best beam toward the given direction(s); ties go to the lowest index.

    Returns ``(beam_index, gain_db)``; arrays when the angles are arrays.
    """
    gains = beam_gains_db(array, beam_set, bearing_deg, zod_deg, aod_deg, beamforming)
    idx = np.argmax(gains, axis=-1)
    best = np.take_along_axis(gains, idx[..., None], axis=-1)[..., 0]
    if np.ndim(idx) == 0:
        return int(idx), float(best)
    return idx, best
