"""Implicit CSI feedback for beamforming: channels, networks, oracles, experiments."""

__version__ = "0.1.0"
