"""Compilers from planning and game models to bilinear programs."""

from .decmdp import (
    AgentModel,
    DecMdp,
    Policy,
    agent_from_edges,
    compile_average_reward,
    compile_decmdp,
    example4,
    extract_policy,
    occupancy_of_policy,
    oracle_enumerate,
    policy_count,
)
from .game import GameSpec, compile_game, dual_values, game_residual, normal_form_game, strategies
from .rover import RoverConfig, duration_pmf, generate_rover

__all__ = [
    "AgentModel", "DecMdp", "Policy", "agent_from_edges", "compile_average_reward",
    "compile_decmdp", "example4", "extract_policy", "occupancy_of_policy",
    "oracle_enumerate", "policy_count", "GameSpec", "compile_game", "dual_values",
    "game_residual", "normal_form_game", "strategies", "RoverConfig", "duration_pmf", "generate_rover",
]
