"""Turn a reduced operator tree into numbered plain-English steps.

Traversal is postorder, so every step only refers to intermediate tables
produced by earlier steps. Sentence skeletons live in a config file
(templates.cfg); each node type may list several alternatives and the
first one whose placeholders all resolve is used.

Template syntax: ``{name}`` is a placeholder; ``{ ... }`` (brace followed
by a space) is an optional clause, dropped when a placeholder inside it
has no value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .config import load_templates
from .operator_tree import (
    ReducedNode,
    ReducedTree,
    node_exclusive_ms,
    node_inclusive_ms,
)


@dataclass
class NarrationStep:
    step_id: int
    text: str
    output_label: str
    node: ReducedNode
    actual_rows: Optional[int] = None
    inclusive_time_ms: Optional[float] = None
    exclusive_time_ms: Optional[float] = None
    exclusive_clamped: bool = False


@dataclass
class NarrationScript:
    steps: list[NarrationStep] = field(default_factory=list)
    final_label: str = ""


def fmt_ms(value: float) -> str:
    """Format milliseconds without trailing zeros: 12.500 -> "12.5"."""
    text = ("%.3f" % value).rstrip("0").rstrip(".")
    return text or "0"


# Multi-word type names must go before the generic cast pattern would
# otherwise leave their tails ("without time zone") in the text.
_MULTIWORD_TYPES = [
    "timestamp without time zone",
    "timestamp with time zone",
    "time without time zone",
    "time with time zone",
    "character varying",
    "double precision",
]
_CAST_RE = re.compile(
    "::(?:"
    + "|".join(re.escape(t) for t in _MULTIWORD_TYPES)
    + r"|[A-Za-z_][A-Za-z0-9_]*)(?:\[\])?"
)
_LITERAL_SPLIT_RE = re.compile(r"('(?:[^']|'')*')")


def strip_casts(expr: str) -> str:
    parts = _LITERAL_SPLIT_RE.split(expr)
    return "".join(
        part if i % 2 else _CAST_RE.sub("", part) for i, part in enumerate(parts)
    )


def _is_wrapped(text: str) -> bool:
    """True when the first "(" closes only at the very end."""
    if len(text) < 2 or text[0] != "(" or text[-1] != ")":
        return False
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return i == len(text) - 1
    return False


def _strip_outer_parens(text: str) -> str:
    text = text.strip()
    while _is_wrapped(text):
        text = text[1:-1].strip()
    return text


def light_condition(expr: str) -> str:
    """Condition as shown inside step text: casts gone, one paren pair."""
    if not expr:
        return ""
    core = _strip_outer_parens(strip_casts(expr))
    if not core:
        return ""
    return f"({core})"


_OPERATOR_WORDS = [
    ("<=", " is at most "),
    (">=", " is at least "),
    ("<>", " does not equal "),
    ("~~", " matches pattern "),
    ("<", " is less than "),
    (">", " is greater than "),
    ("=", " equals "),
]


def render_condition(expr: str) -> str:
    """Fully worded condition, for standalone display.

    Strips casts and redundant outer parentheses, then replaces comparison
    operators with words and lowercases AND/OR/NOT. String literals pass
    through untouched; anything unrecognized stays verbatim.
    """
    if not expr:
        return ""
    text = _strip_outer_parens(strip_casts(expr))
    parts = _LITERAL_SPLIT_RE.split(text)
    out = []
    for i, part in enumerate(parts):
        if i % 2:
            out.append(part)
            continue
        for symbol, word in _OPERATOR_WORDS:
            part = re.sub(r"\s*" + re.escape(symbol) + r"\s*", word, part)
        part = re.sub(r"\bAND\b", "and", part)
        part = re.sub(r"\bOR\b", "or", part)
        part = re.sub(r"\bNOT\b", "not", part)
        out.append(part)
    return "".join(out).strip()


# --- template rendering ---------------------------------------------------

_NAME_RE = re.compile(r"[a-z_][a-z0-9_]*")


class _Group:
    __slots__ = ("tokens",)

    def __init__(self, tokens):
        self.tokens = tokens


def _parse_template(text: str, start: int = 0, nested: bool = False):
    tokens: list = []
    i = start
    while i < len(text):
        ch = text[i]
        if ch == "}" and nested:
            return tokens, i
        if ch == "{":
            if i + 1 < len(text) and text[i + 1] == " ":
                # the marker space doubles as the clause's leading space
                inner, close = _parse_template(text, i + 1, nested=True)
                tokens.append(_Group(inner))
                i = close + 1
                continue
            match = _NAME_RE.match(text, i + 1)
            if match and match.end() < len(text) and text[match.end()] == "}":
                tokens.append(("ph", match.group()))
                i = match.end() + 1
                continue
        j = i
        while j < len(text) and text[j] != "{" and not (text[j] == "}" and nested):
            j += 1
        tokens.append(("lit", text[i:j]))
        i = j
    if nested:
        return tokens, len(text)
    return tokens, i


def _render_tokens(tokens, values: dict[str, str]) -> Optional[str]:
    out = []
    for token in tokens:
        if isinstance(token, _Group):
            rendered = _render_tokens(token.tokens, values)
            out.append(rendered if rendered is not None else "")
            continue
        kind, payload = token
        if kind == "lit":
            out.append(payload)
        else:
            value = values.get(payload)
            if value is None:
                return None
            out.append(value)
    return "".join(out)


def render_template(template: str, values: dict[str, str]) -> Optional[str]:
    """Instantiate one skeleton; None when a required value is missing."""
    tokens, _ = _parse_template(template)
    return _render_tokens(tokens, values)


_FINAL_FALLBACK = "Perform {op} operation to get intermediate table {out}."


def _placeholder_values(
    node: ReducedNode, child_labels: list[str], output_label: str
) -> dict[str, str]:
    values = {"out": output_label, "op": node.node_type.lower()}
    if node.relation_name:
        values["rel"] = node.relation_name
        if node.alias and node.alias != node.relation_name:
            values["alias"] = node.alias
    if node.index_name:
        values["index"] = node.index_name
    for cond_field in ("filter", "index_cond", "hash_cond", "merge_cond", "recheck_cond"):
        raw = getattr(node, cond_field)
        if raw:
            values[cond_field] = light_condition(raw)
    if node.sort_key:
        values["sort_key"] = ", ".join(node.sort_key)
    if node.group_key:
        values["group_key"] = ", ".join(node.group_key)
    if node.join_type:
        values["join_type"] = node.join_type.lower()
    if child_labels:
        values["children"] = ", ".join(child_labels)
        if len(child_labels) == 1:
            values["child"] = child_labels[0]
    if len(child_labels) >= 2:
        values["left"] = child_labels[0]
        values["right"] = child_labels[1]
        for side, child in (("keys_l", node.children[0]), ("keys_r", node.children[1])):
            keys = getattr(child, "inherited_sort_key", None)
            if keys:
                values[side] = ", ".join(keys)
    return values


def template_for(
    node: ReducedNode,
    child_labels: list[str],
    output_label: str,
    templates: Optional[dict[str, list[str]]] = None,
) -> str:
    """Step sentence for one node; first fully resolving skeleton wins."""
    if templates is None:
        templates = load_templates()
    values = _placeholder_values(node, child_labels, output_label)
    candidates = templates.get(node.node_type, []) + templates.get("DEFAULT", [])
    for template in candidates:
        rendered = render_template(template, values)
        if rendered is not None:
            return rendered
    rendered = render_template(_FINAL_FALLBACK, values)
    assert rendered is not None
    return rendered


def narrate(
    tree: ReducedTree, templates: Optional[dict[str, list[str]]] = None
) -> NarrationScript:
    """Number the reduced nodes in postorder and write one step for each."""
    if templates is None:
        templates = load_templates()
    script = NarrationScript()
    if tree is None:
        return script

    def visit(node: ReducedNode) -> str:
        child_labels = [visit(child) for child in node.children]
        step_id = len(script.steps) + 1
        label = f"T{step_id}"
        node.step_id = step_id
        step = NarrationStep(
            step_id=step_id,
            text=template_for(node, child_labels, label, templates),
            output_label=label,
            node=node,
        )
        if node.actual_rows is not None:
            step.actual_rows = node.actual_rows
        step.inclusive_time_ms = node_inclusive_ms(node)
        exclusive = node_exclusive_ms(node)
        if exclusive is not None:
            step.exclusive_time_ms, step.exclusive_clamped = exclusive
        script.steps.append(step)
        return label

    script.final_label = visit(tree)
    return script
