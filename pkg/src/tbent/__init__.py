"""Simulation and analysis toolkit for parallel time-bin-to-polarization
entangled photon pairs from a periodically poled waveguide."""

__version__ = "0.1.0"
