"""Bayesian preference elicitation with gradient-based EVOI slate optimization."""

from .belief import ParticleBelief, PriorSpec, ResponseModel
from .catalog import Catalog, SynthSpec, load_catalog, synth_catalog, top_k_by_direction
from .continuous import ContinuousConfig, optimize
from .evoi import QuerySlate, RecSlate, deep_retr_uniq, deep_retrieval, evoi, peu
from .harness import ExperimentConfig, run_experiment, run_trial

__all__ = [
    "Catalog", "SynthSpec", "load_catalog", "synth_catalog", "top_k_by_direction",
    "ParticleBelief", "PriorSpec", "ResponseModel",
    "QuerySlate", "RecSlate", "deep_retrieval", "deep_retr_uniq", "peu", "evoi",
    "ContinuousConfig", "optimize",
    "ExperimentConfig", "run_trial", "run_experiment",
]
