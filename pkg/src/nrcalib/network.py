"""Received-power bookkeeping shared by end-to-end drops and REM probes.

For every receiver and every cell this computes the large-scale link state,
the transmit/receive antenna gains, the attachment (best received power) and
the downlink geometry.

Beam semantics: a cell without a beam set radiates its fixed beam (boresight
azimuth, ``downtilt_deg`` zenith). A cell with a beam set serves with the best
beam toward its UE; as an interferer under full buffer it cycles through the
whole set, so its interference gain is the linear mean over the beams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import antenna, linkbudget, propagation


@dataclass
class NetworkEval:
    links: propagation.LinkStateArrays
    gain_serving_db: np.ndarray       # (n_rx, n_cells), gain with the beam a cell would serve with
    gain_interf_db: np.ndarray        # (n_rx, n_cells), gain seen when the cell interferes
    beam_idx: np.ndarray | None       # (n_rx, n_cells) selected beam, None for fixed beams
    rx_power_dbm: np.ndarray          # (n_rx, n_cells) attachment metric
    interference_dbm: np.ndarray      # (n_rx, n_cells)
    cutoff_mask: np.ndarray           # (n_rx, n_cells) cells allowed to interfere
    serving_idx: np.ndarray           # (n_rx,)
    signal_dbm: np.ndarray            # (n_rx,)
    noise_dbm: float
    sinr_db: np.ndarray               # (n_rx,)
    coupling_gain_db: np.ndarray      # (n_rx,) P_R - P_T on the serving link


def antenna_gains(config, plan, zod, aod):
    """``(gain_serving_db, gain_interf_db, beam_idx)`` for (n_rx, n_cells) angles."""
    bearings = plan.cell_bearings()[None, :]
    bs = config.bs_array
    searching = config.beam_set is not None and config.beamforming
    beams = config.beam_set if searching else antenna.BeamSet(((0.0, bs.downtilt_deg),))
    per_beam = antenna.beam_gains_db(bs, beams, bearings, zod, aod, beamforming=config.beamforming)
    if searching:
        beam_idx = np.argmax(per_beam, axis=-1)
        g_serv = np.take_along_axis(per_beam, beam_idx[..., None], axis=-1)[..., 0]
        g_int = linkbudget.linear_to_db(linkbudget.db_to_linear(per_beam).mean(axis=-1))
    else:
        beam_idx = None
        g_serv = g_int = per_beam[..., 0]

    # receive side at the reciprocal angles; isotropic 1x1 for every preset
    ue = config.ue_array
    zoa = 180.0 - zod
    aoa = antenna.wrap_azimuth(aod + 180.0)
    rx = antenna.element_gain_db(ue, zoa, aoa)
    if config.beamforming and ue.n_elements > 1:
        rx = rx + 10.0 * np.log10(antenna.steered_array_power(ue, 0.0, ue.downtilt_deg, zoa, aoa))
    pol = antenna.polarization_factor(bs, ue)
    if pol != 1.0:
        rx = rx + float(linkbudget.linear_to_db(pol))
    return g_serv + rx, g_int + rx, beam_idx


def evaluate(config, plan, rx_xy, rx_h, indoor, depth_m, loss_class, draws, options) -> NetworkEval:
    cell_xy = plan.cell_positions()
    cell_h = plan.cell_heights()
    scenario = config.propagation_scenario
    d2d, d3d, zod, aod = propagation.link_geometry(cell_xy, cell_h, rx_xy, rx_h, config.min_distance_m)
    links = propagation.compose_links(scenario, d2d, d3d, cell_h, rx_h, indoor, depth_m, loss_class,
                                      draws, options)
    g_serv, g_int, beam_idx = antenna_gains(config, plan, zod, aod)
    p_tx = plan.cell_powers()[None, :]
    rx_power = linkbudget.received_power_dbm(p_tx, g_serv, 0.0, links.total_pl_db)
    interference = linkbudget.received_power_dbm(p_tx, g_int, 0.0, links.total_pl_db)

    serving = linkbudget.attach(rx_power)
    rows = np.arange(len(serving))
    signal = rx_power[rows, serving]
    noise = linkbudget.noise_power_dbm(config.bandwidth_hz, config.ue_noise_figure_db)

    cutoff = config.interference_cutoff_multiple * plan.isd
    raw_d2d = np.hypot(np.asarray(rx_xy, float).reshape(-1, 2)[:, None, 0] - cell_xy[None, :, 0],
                       np.asarray(rx_xy, float).reshape(-1, 2)[:, None, 1] - cell_xy[None, :, 1])
    cutoff_mask = raw_d2d <= cutoff if np.isfinite(cutoff) else np.ones(raw_d2d.shape, dtype=bool)
    sinr = linkbudget.sinr_from_matrix(serving, signal, interference, noise, cutoff_mask)
    return NetworkEval(links=links, gain_serving_db=g_serv, gain_interf_db=g_int, beam_idx=beam_idx,
                       rx_power_dbm=rx_power, interference_dbm=interference, cutoff_mask=cutoff_mask,
                       serving_idx=serving, signal_dbm=signal, noise_dbm=noise, sinr_db=sinr,
                       coupling_gain_db=signal - p_tx[0, serving])
