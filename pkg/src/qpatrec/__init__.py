"""Simulated quantum multi-pattern recognition over a padded pattern database."""
from .bbht_search import SearchConfig, SearchReport, run_search
from .instance import Instance, load_instance
from .pattern_model import (
    CodebookEntry,
    FeatureMode,
    PatternClass,
    PatternDatabase,
    build_database,
    distance,
    feature_of,
    marked_set,
)
from .quantum_engine import QueryContext
from .recognizer import brute_force_recognize, diff_reports, recognize_all, recognize_feature

__version__ = "0.1.0"
