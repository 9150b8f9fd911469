"""Hybrid inference and tree search for asymmetric distributed constraint optimization."""

from .baselines import brute_force_solve, solve_sabb
from .inference import run_inference, run_inference_local, subtree_lb
from .model import AdcopInstance, evaluate, generate_max_dcsp, generate_random_adcop, read_instance, write_instance
from .pseudo_tree import PseudoTree, build_pseudo_tree
from .search import Solution, solve_pt_isabb
from .sim import Metrics

__all__ = [
    "AdcopInstance",
    "Metrics",
    "PseudoTree",
    "Solution",
    "brute_force_solve",
    "build_pseudo_tree",
    "evaluate",
    "generate_max_dcsp",
    "generate_random_adcop",
    "read_instance",
    "run_inference",
    "run_inference_local",
    "solve_pt_isabb",
    "solve_sabb",
    "subtree_lb",
    "write_instance",
]
