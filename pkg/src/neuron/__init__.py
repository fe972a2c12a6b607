"""Narrate PostgreSQL execution plans and answer questions about them.

The pipeline: parse EXPLAIN (FORMAT JSON) output, reduce the operator
tree to the nodes worth talking about, render numbered narration steps
from templates, and answer five kinds of natural-language questions
against the narrated plan. An HTTP service and a CLI expose the same
behavior; see neuron.service and neuron.cli.
"""

from .answer_generator import Answer, PlanContext, dispatch
from .errors import NeuronError
from .narration import NarrationScript, NarrationStep, narrate
from .operator_tree import (
    build_operator_tree,
    merge_noncritical,
    remove_result_nodes,
    resolve_subplans,
)
from .plan_ingest import RawPlan, fetch_plan, parse_explain_json

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "NarrationScript",
    "NarrationStep",
    "NeuronError",
    "PlanContext",
    "RawPlan",
    "__version__",
    "build_operator_tree",
    "dispatch",
    "fetch_plan",
    "merge_noncritical",
    "narrate",
    "parse_explain_json",
    "remove_result_nodes",
    "resolve_subplans",
]
