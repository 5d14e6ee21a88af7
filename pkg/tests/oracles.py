"""Independent scalar reference evaluations used as test oracles.

Written directly from the published model expressions with plain ``math`` and
no code shared with the package, so a transcription slip in either place shows
up as a mismatch. The RMa LOS second slope here is the literal form
``PL1(d_BP) + 40 log10(d3D / d_BP)``.
"""

import math

C = 3.0e8


def rma_pl1(d3d, fc, h=5.0):
    return (20 * math.log10(40 * math.pi * d3d * fc / 3) + min(0.03 * h ** 1.72, 10) * math.log10(d3d)
            - min(0.044 * h ** 1.72, 14.77) + 0.002 * math.log10(h) * d3d)


def rma_los(d2d, h_bs, h_ut, fc, h=5.0):
    d3d = math.hypot(d2d, h_bs - h_ut)
    d_bp = 2 * math.pi * h_bs * h_ut * fc * 1e9 / C
    if d2d <= d_bp:
        return rma_pl1(d3d, fc, h)
    return rma_pl1(d_bp, fc, h) + 40 * math.log10(d3d / d_bp)


def rma_nlos(d2d, h_bs, h_ut, fc, h=5.0, w=20.0):
    d3d = math.hypot(d2d, h_bs - h_ut)
    prime = (161.04 - 7.1 * math.log10(w) + 7.5 * math.log10(h)
             - (24.37 - 3.7 * (h / h_bs) ** 2) * math.log10(h_bs)
             + (43.42 - 3.1 * math.log10(h_bs)) * (math.log10(d3d) - 3)
             + 20 * math.log10(fc) - (3.2 * math.log10(11.75 * h_ut) ** 2 - 4.97))
    return max(rma_los(d2d, h_bs, h_ut, fc, h), prime)


def uma_los(d2d, h_bs, h_ut, fc):
    d3d = math.hypot(d2d, h_bs - h_ut)
    d_bp = 4 * (h_bs - 1) * (h_ut - 1) * fc * 1e9 / C
    if d2d <= d_bp:
        return 28 + 22 * math.log10(d3d) + 20 * math.log10(fc)
    return 28 + 40 * math.log10(d3d) + 20 * math.log10(fc) - 9 * math.log10(d_bp ** 2 + (h_bs - h_ut) ** 2)


def uma_nlos(d2d, h_bs, h_ut, fc):
    d3d = math.hypot(d2d, h_bs - h_ut)
    prime = 13.54 + 39.08 * math.log10(d3d) + 20 * math.log10(fc) - 0.6 * (h_ut - 1.5)
    return max(uma_los(d2d, h_bs, h_ut, fc), prime)


def wall_loss(fc, high=False):
    l_glass = 2 + 0.2 * fc
    l_irr = 23 + 0.3 * fc
    l_conc = 5 + 4 * fc
    if high:
        return 5 - 10 * math.log10(0.7 * 10 ** (-l_irr / 10) + 0.3 * 10 ** (-l_conc / 10))
    return 5 - 10 * math.log10(0.3 * 10 ** (-l_glass / 10) + 0.7 * 10 ** (-l_conc / 10))


def threegpp_element(theta, phi, g_max=8.0):
    a_v = -min(12 * ((theta - 90) / 65) ** 2, 30)
    a_h = -min(12 * (phi / 65) ** 2, 30)
    return g_max - min(-(a_v + a_h), 30)


def coherent_gain_db(n):
    return 10 * math.log10(n)
