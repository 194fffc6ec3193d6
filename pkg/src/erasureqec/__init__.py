"""Erasure-qubit QEC simulation: dual-rail channels, frame sampling, erasure-aware decoding."""

__version__ = "0.1.0"
