"""Answer the five supported question categories about a narrated plan.

Each submodule reads from a PlanContext: the narration script, the
reduced tree behind it, and the raw plan it all came from. Errors carry
the message shown to the user.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .config import load_templates
from .definition_index import InvertedIndex, search
from .errors import (
    NoDefinitionFound,
    NoRuntimeStats,
    UnknownStep,
)
from .narration import NarrationScript, fmt_ms, narrate, render_template
from .operator_tree import (
    ReducedNode,
    ReducedTree,
    build_operator_tree,
    merge_noncritical,
    node_exclusive_ms,
    node_inclusive_ms,
    remove_result_nodes,
    resolve_subplans,
)
from .plan_ingest import RawPlan
from .question_processor import (
    NBModel,
    QuestionCategory,
    classify,
    extract_keywords,
    extract_step_id,
)


@dataclass
class DefinitionPayload:
    term: str
    body: str
    source: str


@dataclass
class RowCountPayload:
    step_id: int
    rows: int
    loops: int


@dataclass
class OperatorListPayload:
    operators: list[str]


@dataclass
class StepTimePayload:
    step_id: int
    inclusive_ms: float
    exclusive_ms: float
    clamped: bool = False


@dataclass
class DominantPayload:
    node_type: str
    total_exclusive_ms: float
    step_ids: list[int]


AnswerPayload = Union[
    DefinitionPayload,
    RowCountPayload,
    OperatorListPayload,
    StepTimePayload,
    DominantPayload,
]


@dataclass
class Answer:
    category: QuestionCategory
    text: str
    payload: AnswerPayload


@dataclass
class PlanContext:
    script: NarrationScript
    tree: ReducedTree
    raw: RawPlan

    @classmethod
    def from_raw(cls, raw: RawPlan) -> "PlanContext":
        tree = merge_noncritical(remove_result_nodes(build_operator_tree(raw)))
        tree, _catalog = resolve_subplans(tree)
        return cls(script=narrate(tree), tree=tree, raw=raw)

    def step(self, step_id: int) -> ReducedNode:
        if step_id < 1 or step_id > len(self.script.steps):
            raise UnknownStep(
                f"This plan has {len(self.script.steps)} steps;"
                f" there is no step {step_id}."
            )
        return self.script.steps[step_id - 1].node


def _answer_template(key: str) -> list[str]:
    return load_templates().get(key, [])


def _render_answer(key: str, values: dict[str, str]) -> str:
    for template in _answer_template(key):
        rendered = render_template(template, values)
        if rendered is not None:
            return rendered
    raise KeyError(f"no usable answer template for {key}")


_NO_STATS = (
    "The plan was collected without ANALYZE, so runtime statistics"
    " are not available."
)


def display_node_type(node: ReducedNode) -> str:
    """Operator name as the server would print it in text format.

    Join nodes fold their join type in ("Hash Join" + Semi -> "Hash Semi
    Join"); inner joins keep the bare name.
    """
    join_type = node.join_type
    if not join_type or join_type == "Inner":
        return node.node_type
    if node.node_type == "Hash Join":
        return f"Hash {join_type} Join"
    if node.node_type == "Merge Join":
        return f"Merge {join_type} Join"
    if node.node_type == "Nested Loop":
        return f"Nested Loop {join_type} Join"
    return node.node_type


def answer_definition(keywords: list[str], index: InvertedIndex) -> Answer:
    if not keywords:
        raise ValueError("keywords must be nonempty")
    ranked = search(index, keywords)
    if not ranked:
        raise NoDefinitionFound(
            "I have no definition matching those words; try the operator's name."
        )
    doc = index.docs[ranked[0][0]]
    payload = DefinitionPayload(term=doc.term, body=doc.body, source=doc.source)
    text = _render_answer("answer.definition", {"term": doc.term, "body": doc.body})
    return Answer(category=QuestionCategory.DEFINITION, text=text, payload=payload)


def answer_row_count(step_id: int, ctx: PlanContext) -> Answer:
    node = ctx.step(step_id)
    if node.actual_rows is None:
        raise NoRuntimeStats(_NO_STATS)
    loops = node.actual_loops if node.actual_loops else 1
    values = {"step_id": str(step_id), "rows": str(node.actual_rows)}
    if loops > 1:
        values["loops"] = str(loops)
    return Answer(
        category=QuestionCategory.ROW_COUNT,
        text=_render_answer("answer.row_count", values),
        payload=RowCountPayload(step_id=step_id, rows=node.actual_rows, loops=loops),
    )


def answer_operator_list(ctx: PlanContext) -> Answer:
    operators: list[str] = []
    seen: set[str] = set()
    for step in ctx.script.steps:
        merged = [display_node_type(m) for m in step.node.merged_from]
        for name in [*merged, display_node_type(step.node)]:
            if name not in seen:
                seen.add(name)
                operators.append(name)
    return Answer(
        category=QuestionCategory.OPERATOR_LIST,
        text=_render_answer("answer.operator_list", {"operators": ", ".join(operators)}),
        payload=OperatorListPayload(operators=operators),
    )


def step_times(step_id: int, ctx: PlanContext) -> tuple[float, float]:
    node = ctx.step(step_id)
    inclusive = node_inclusive_ms(node)
    exclusive = node_exclusive_ms(node)
    if inclusive is None or exclusive is None:
        raise NoRuntimeStats(_NO_STATS)
    return inclusive, exclusive[0]


def answer_step_time(step_id: int, ctx: PlanContext) -> Answer:
    inclusive, exclusive = step_times(step_id, ctx)
    clamped = bool(node_exclusive_ms(ctx.step(step_id))[1])
    text = _render_answer(
        "answer.step_time",
        {
            "step_id": str(step_id),
            "exclusive": fmt_ms(exclusive),
            "inclusive": fmt_ms(inclusive),
        },
    )
    return Answer(
        category=QuestionCategory.STEP_TIME,
        text=text,
        payload=StepTimePayload(
            step_id=step_id,
            inclusive_ms=inclusive,
            exclusive_ms=exclusive,
            clamped=clamped,
        ),
    )


def _steps_phrase(step_ids: list[int]) -> str:
    labels = [str(s) for s in step_ids]
    if len(labels) == 1:
        return f"step {labels[0]}"
    return "steps " + ", ".join(labels[:-1]) + " and " + labels[-1]


def answer_dominant(ctx: PlanContext) -> Answer:
    totals: dict[str, float] = {}
    steps_by_type: dict[str, list[int]] = {}
    first_step: dict[str, int] = {}
    for step in ctx.script.steps:
        exclusive = node_exclusive_ms(step.node)
        if exclusive is None:
            raise NoRuntimeStats(_NO_STATS)
        name = step.node.node_type
        totals[name] = totals.get(name, 0.0) + exclusive[0]
        steps_by_type.setdefault(name, []).append(step.step_id)
        first_step.setdefault(name, step.step_id)
    if not totals:
        raise NoRuntimeStats(_NO_STATS)
    best = max(totals, key=lambda name: (totals[name], -first_step[name]))
    payload = DominantPayload(
        node_type=best,
        total_exclusive_ms=totals[best],
        step_ids=steps_by_type[best],
    )
    text = _render_answer(
        "answer.dominant",
        {
            "op": best,
            "total": fmt_ms(totals[best]),
            "steps": _steps_phrase(steps_by_type[best]),
        },
    )
    return Answer(
        category=QuestionCategory.DOMINANT_OPERATOR, text=text, payload=payload
    )


def dispatch(
    question: str, ctx: PlanContext, model: NBModel, index: InvertedIndex
) -> Answer:
    """Classify the question and route it to the matching submodule."""
    category, _ = classify(model, question)
    if category is QuestionCategory.DEFINITION:
        keywords = extract_keywords(question)
        if not keywords:
            raise NoDefinitionFound(
                "I could not find anything to look up in that question."
            )
        return answer_definition(keywords, index)
    if category is QuestionCategory.ROW_COUNT:
        return answer_row_count(extract_step_id(question), ctx)
    if category is QuestionCategory.OPERATOR_LIST:
        return answer_operator_list(ctx)
    if category is QuestionCategory.STEP_TIME:
        return answer_step_time(extract_step_id(question), ctx)
    return answer_dominant(ctx)
