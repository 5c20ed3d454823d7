"""Entanglement distribution policies for linear quantum repeater chains.

Simulate, solve exactly and learn (tabular Q-learning) policies that decide,
at every moment, which elementary links to (re)generate and where to swap.
"""

__version__ = "0.1.0"

from .actions import GlobalAction, enumerate_actions, validate_action
from .chain import ChainConfig, ChainState, PauliChannelParams, enumerate_states, is_terminal, validate_state
from .exact import build_policy_matrix, evaluate_exact, expected_waiting_exact, value_iteration_optimal
from .montecarlo import BatchedEstimate, evaluate_policy, simulate_episode
from .policies import RandomPolicy, SwapAsapPolicy, TabularPolicy, WaitForAllPolicy
from .qlearning import Hyperparams, QTable, train
from .transitions import branch_outcomes, step

__all__ = [
    "__version__",
    "GlobalAction",
    "enumerate_actions",
    "validate_action",
    "ChainConfig",
    "ChainState",
    "PauliChannelParams",
    "enumerate_states",
    "is_terminal",
    "validate_state",
    "build_policy_matrix",
    "evaluate_exact",
    "expected_waiting_exact",
    "value_iteration_optimal",
    "BatchedEstimate",
    "evaluate_policy",
    "simulate_episode",
    "RandomPolicy",
    "SwapAsapPolicy",
    "TabularPolicy",
    "WaitForAllPolicy",
    "Hyperparams",
    "QTable",
    "train",
    "branch_outcomes",
    "step",
]
