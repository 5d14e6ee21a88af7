"""Drop-based downlink calibration simulator for IMT-2020 outdoor eMBB scenarios."""

__version__ = "0.1.0"
