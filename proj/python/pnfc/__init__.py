"""Simulation and verification toolkit for decentralized per-node balance
frequency control: closed-loop integration, an independent equilibrium
solver, and optimality/stability certification."""

from ._core import oracle, run, solve_node, verify

__all__ = ["oracle", "run", "solve_node", "verify"]
