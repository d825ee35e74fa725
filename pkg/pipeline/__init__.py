"""Pipeline modules for the Steiner Forest approximation."""
from .instance import (
    Instance,
    SolutionForest,
    generate_random,
    parse_instance,
    read_instance,
    serialize_instance,
    shortest_path,
    steiner_tree_exact,
    validate,
)
from .moat import extract_forest, run_extended_moat, run_timed_moat
from .gain import enumerate_restricted_sets, gain_of, maximize_profit
from .autarkic import build_f3, enumerate_tuples, max_profit_collection
from .oracle import OracleLimits, brute_force_max_profit, exact_steiner_forest, verify_ledgers
from .solve import PipelineParams, Report, compare_with_exact, solve

__all__ = [
    'Instance',
    'SolutionForest',
    'generate_random',
    'parse_instance',
    'read_instance',
    'serialize_instance',
    'shortest_path',
    'steiner_tree_exact',
    'validate',
    'extract_forest',
    'run_extended_moat',
    'run_timed_moat',
    'enumerate_restricted_sets',
    'gain_of',
    'maximize_profit',
    'build_f3',
    'enumerate_tuples',
    'max_profit_collection',
    'OracleLimits',
    'brute_force_max_profit',
    'exact_steiner_forest',
    'verify_ledgers',
    'PipelineParams',
    'Report',
    'compare_with_exact',
    'solve',
]
