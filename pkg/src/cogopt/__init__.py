"""cogopt: script-driven cooperative-group optimization for constrained problems.

A group of agents, each holding a portfolio of embedded search heuristics,
cooperates through a declared memory protocol to minimize box-bounded
problems with interval constraints.  The group composition, memory layout,
and operator portfolio are all configured by a plain-text script; a
benchmark harness runs repeated seeded experiments and reports aggregate
statistics, run-length distributions, and optional figures.
"""
from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
