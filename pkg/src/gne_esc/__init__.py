"""Distributed, model-free GNE seeking with extremum-seeking control."""

from .dynamics import AgentState, SeekerParams, SeekerSystem, SwarmState
from .game_model import GameSpec, QuadraticGame, cournot_game, cournot_spec, to_game_spec
from .graph import CommGraph, laplacian
from .integrator import IntegratorConfig, Trajectory, integrate, integrate_averaged
from .oracle import solve_quadratic_gne

__all__ = [
    "AgentState",
    "CommGraph",
    "GameSpec",
    "IntegratorConfig",
    "QuadraticGame",
    "SeekerParams",
    "SeekerSystem",
    "SwarmState",
    "Trajectory",
    "cournot_game",
    "cournot_spec",
    "integrate",
    "integrate_averaged",
    "laplacian",
    "solve_quadratic_gne",
    "to_game_spec",
]

__version__ = "0.1.0"
