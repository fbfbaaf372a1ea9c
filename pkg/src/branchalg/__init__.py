"""Computations in self-similar groups and their enveloping algebras."""

from __future__ import annotations

__version__ = "0.1.0"
