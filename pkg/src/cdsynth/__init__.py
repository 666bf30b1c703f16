"""Synthesis of fine-grained concurrent code for linked data structures from
declarative knowledge about their sequential operations."""

from .codegen import (CodeIR, OpResult, RcuRecommendation, SynthConfig, SynthesisReport,
                      generate_concurrent_code, render_op, render_report, render_text, synthesize)
from .dsl import (BUNDLES, DSLError, KnowledgeBase, Theory, builtin_bundle, parse_knowledge,
                  parse_theory)
from .engine import apply_step, derive, holds, model, search, trajectories
from .heap import Binding, HeapState
from .instances import Delta, DeltaNotFound, least_delta, match_pre, unfold_instances
from .interference import build_interference, enabled_actions, window_heuristic
from .oracle import Verdict, explore, linearization_exists, run_schedule
from .tasks import task1_unfalsify, task2_adequacy, task3_program_order, task4_keymove

__version__ = "0.1.0"

__all__ = [
    "CodeIR", "OpResult", "RcuRecommendation", "SynthConfig", "SynthesisReport",
    "generate_concurrent_code", "render_op", "render_report", "render_text", "synthesize",
    "BUNDLES", "DSLError", "KnowledgeBase", "Theory", "builtin_bundle", "parse_knowledge",
    "parse_theory", "apply_step", "derive", "holds", "model", "search", "trajectories",
    "Binding", "HeapState", "Delta", "DeltaNotFound", "least_delta", "match_pre",
    "unfold_instances", "build_interference", "enabled_actions", "window_heuristic",
    "Verdict", "explore", "linearization_exists", "run_schedule", "task1_unfalsify",
    "task2_adequacy", "task3_program_order", "task4_keymove",
]
