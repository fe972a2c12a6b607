"""Curate raw plans into operator trees and reduce them for narration.

Three pure transforms, applied in order:

1. ``build_operator_tree`` copies only the attributes that matter for
   narration and question answering, dropping planner noise (plan width,
   parallel-aware flags, cost estimates).
2. ``remove_result_nodes`` deletes Result nodes, splicing their children
   into the parent.
3. ``merge_noncritical`` folds helper nodes (Hash under Hash Join, Sort
   under Merge Join / Aggregate / Unique, Bitmap Index Scan under Bitmap
   Heap Scan) into the neighbouring critical node.

``resolve_subplans`` then rewrites subplan labels and their ``$k``
parameter references into phrases naming the underlying relations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import UnsupportedShape
from .plan_ingest import RawPlan, RawPlanNode


@dataclass
class OperatorNode:
    """A plan node carrying only the curated attributes."""

    node_type: str
    relation_name: Optional[str] = None
    alias: Optional[str] = None
    index_name: Optional[str] = None
    subplan_name: Optional[str] = None
    join_type: Optional[str] = None
    strategy: Optional[str] = None
    hash_cond: Optional[str] = None
    merge_cond: Optional[str] = None
    index_cond: Optional[str] = None
    recheck_cond: Optional[str] = None
    filter: Optional[str] = None
    sort_key: list[str] = field(default_factory=list)
    group_key: list[str] = field(default_factory=list)
    actual_rows: Optional[int] = None
    actual_total_time_ms: Optional[float] = None  # per-loop average
    actual_loops: Optional[int] = None
    parent_relationship: Optional[str] = None
    children: list["OperatorNode"] = field(default_factory=list)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class ReducedNode(OperatorNode):
    """An operator node after Result removal and merging.

    ``merged_from`` lists the absorbed helper nodes. Children adopted from
    an absorbed node record which helper they came through
    (``absorbed_via``) and, for Sort helpers, the sort keys that applied to
    their side (``inherited_sort_key``).
    """

    merged_from: list[OperatorNode] = field(default_factory=list)
    step_id: Optional[int] = None
    absorbed_via: Optional[str] = None
    inherited_sort_key: list[str] = field(default_factory=list)


@dataclass
class SubplanCatalog:
    """Subplan labels mapped to the base relations their subtrees scan."""

    entries: dict[str, list[str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


OperatorTree = Optional[OperatorNode]
ReducedTree = Optional[ReducedNode]

# Bit-exact EXPLAIN keys -> OperatorNode fields.
_SCALAR_KEYS = {
    "Relation Name": "relation_name",
    "Alias": "alias",
    "Index Name": "index_name",
    "Subplan Name": "subplan_name",
    "Join Type": "join_type",
    "Strategy": "strategy",
    "Hash Cond": "hash_cond",
    "Merge Cond": "merge_cond",
    "Index Cond": "index_cond",
    "Recheck Cond": "recheck_cond",
    "Filter": "filter",
    "Parent Relationship": "parent_relationship",
}
_LIST_KEYS = {
    "Sort Key": "sort_key",
    "Group Key": "group_key",
}

# (absorber node type, absorbable child node type)
MERGE_RULES = frozenset(
    {
        ("Hash Join", "Hash"),
        ("Merge Join", "Sort"),
        ("Bitmap Heap Scan", "Bitmap Index Scan"),
        ("Aggregate", "Sort"),
        ("Unique", "Sort"),
    }
)

# Children hanging off a node as subqueries are not structural inputs and
# must never be merged into it.
_NONSTRUCTURAL = ("SubPlan", "InitPlan")


def build_operator_tree(raw: RawPlan) -> OperatorNode:
    """Build the curated operator tree for a parsed plan."""
    return _curate(raw.root)


def _curate(node: RawPlanNode) -> OperatorNode:
    out = OperatorNode(node_type=node.node_type)
    attrs = node.attributes
    for key, field_name in _SCALAR_KEYS.items():
        value = attrs.get(key)
        if value is not None:
            setattr(out, field_name, str(value))
    for key, field_name in _LIST_KEYS.items():
        value = attrs.get(key)
        if value is None:
            continue
        if isinstance(value, str):
            value = [value]
        setattr(out, field_name, [str(v) for v in value])
    if attrs.get("Actual Rows") is not None:
        out.actual_rows = int(attrs["Actual Rows"])
    if attrs.get("Actual Total Time") is not None:
        out.actual_total_time_ms = float(attrs["Actual Total Time"])
    if attrs.get("Actual Loops") is not None:
        out.actual_loops = int(attrs["Actual Loops"])
    out.children = [_curate(child) for child in node.children]
    return out


def _copy_node(node: OperatorNode, children: list[OperatorNode]) -> OperatorNode:
    out = OperatorNode(node_type=node.node_type)
    for f in fields(OperatorNode):
        if f.name == "children":
            continue
        value = getattr(node, f.name)
        setattr(out, f.name, list(value) if isinstance(value, list) else value)
    out.children = children
    return out


def remove_result_nodes(tree: OperatorTree) -> OperatorTree:
    """Delete Result nodes, splicing their children into the parent.

    A root Result with one child is replaced by that child; a root Result
    with two or more children has no parent to splice into and raises
    UnsupportedShape.
    """
    if tree is None:
        return None
    spliced = _splice_results(tree)
    if not spliced:
        return None
    if len(spliced) > 1:
        raise UnsupportedShape(
            f"root Result with {len(spliced)} children cannot be spliced"
        )
    return spliced[0]


def _splice_results(node: OperatorNode) -> list[OperatorNode]:
    children: list[OperatorNode] = []
    for child in node.children:
        children.extend(_splice_results(child))
    if node.node_type == "Result":
        return children
    return [_copy_node(node, children)]


def count_result_nodes(tree: OperatorTree) -> int:
    if tree is None:
        return 0
    return sum(1 for node in tree.walk() if node.node_type == "Result")


def merge_noncritical(tree: OperatorTree) -> ReducedTree:
    """Fold non-critical helper nodes into their critical neighbours.

    Applies the merge rules bottom-up until no rule matches anywhere.
    Absorbed nodes land in the absorber's ``merged_from`` and their
    children are adopted in place.
    """
    if tree is None:
        return None
    return _merge_node(tree)


def _to_reduced(node: OperatorNode) -> ReducedNode:
    out = ReducedNode(node_type=node.node_type)
    for f in fields(OperatorNode):
        if f.name == "children":
            continue
        value = getattr(node, f.name)
        setattr(out, f.name, list(value) if isinstance(value, list) else value)
    return out


def _merge_node(node: OperatorNode) -> ReducedNode:
    reduced = _to_reduced(node)
    reduced.children = [_merge_node(child) for child in node.children]
    while True:
        absorbed_any = False
        for i, child in enumerate(reduced.children):
            if (reduced.node_type, child.node_type) not in MERGE_RULES:
                continue
            if child.parent_relationship in _NONSTRUCTURAL:
                continue
            _absorb(reduced, i, child)
            absorbed_any = True
            break
        if not absorbed_any:
            return reduced


def _absorb(absorber: ReducedNode, index: int, child: ReducedNode) -> None:
    adopted = child.children
    for grandchild in adopted:
        grandchild.absorbed_via = child.node_type
        if child.node_type == "Sort" and child.sort_key:
            grandchild.inherited_sort_key = list(child.sort_key)
    absorber.children[index:index + 1] = adopted
    if child.sort_key and not absorber.sort_key:
        absorber.sort_key = list(child.sort_key)
    if child.index_name and not absorber.index_name:
        absorber.index_name = child.index_name
    if child.index_cond and not absorber.index_cond:
        absorber.index_cond = child.index_cond
    absorber.merged_from.append(child)


_EXPR_FIELDS = ("hash_cond", "merge_cond", "index_cond", "recheck_cond", "filter")

_PARAM_RE = re.compile(r"\$\d+")
_RETURNS_RE = re.compile(r"returns (\$\d+(?:,\s*\$\d+)*)")


def _subtree_relations(node: ReducedNode) -> list[str]:
    names: set[str] = set()
    for n in node.walk():
        if n.relation_name:
            names.add(n.relation_name)
        for absorbed in n.merged_from:  # type: ignore[attr-defined]
            if absorbed.relation_name:
                names.add(absorbed.relation_name)
    return sorted(names)


def resolve_subplans(tree: ReducedTree) -> tuple[ReducedTree, SubplanCatalog]:
    """Replace subplan labels and bound ``$k`` tokens with relation phrases.

    Builds the catalog from every node carrying a subplan name, then
    rewrites all expression fields in place of the returned copy. Unknown
    ``$k`` tokens survive verbatim and are reported in the catalog's
    warnings.
    """
    catalog = SubplanCatalog()
    if tree is None:
        return None, catalog

    replacements: list[tuple[re.Pattern[str], str]] = []
    for node in tree.walk():
        label = node.subplan_name
        if not label:
            continue
        relations = _subtree_relations(node)  # type: ignore[arg-type]
        if not relations:
            relations = ["(subquery)"]
        catalog.entries[label] = relations
        phrase = "the result of the subquery on " + ", ".join(relations)
        base_label = label.split(" (returns", 1)[0]
        replacements.append(
            (re.compile(r"(?:hashed )?" + re.escape(base_label) + r"(?!\d)"), phrase)
        )
        bound = _RETURNS_RE.search(label)
        if bound:
            for param in re.split(r",\s*", bound.group(1)):
                replacements.append(
                    (re.compile(re.escape(param) + r"(?!\d)"), phrase)
                )

    for node in tree.walk():
        targets = [node, *node.merged_from]  # type: ignore[attr-defined]
        for target in targets:
            for field_name in _EXPR_FIELDS:
                text = getattr(target, field_name)
                if not text:
                    continue
                for pattern, phrase in replacements:
                    text = pattern.sub(phrase, text)
                setattr(target, field_name, text)
                for leftover in _PARAM_RE.findall(text):
                    catalog.warnings.append(
                        f"unresolved parameter {leftover} in {field_name}"
                        f" of {target.node_type} node"
                    )
    return tree, catalog


def count_nodes(tree: OperatorTree) -> int:
    if tree is None:
        return 0
    return sum(1 for _ in tree.walk())


def count_merged(tree: ReducedTree) -> int:
    if tree is None:
        return 0
    return sum(len(node.merged_from) for node in tree.walk())  # type: ignore[attr-defined]


def node_inclusive_ms(node: OperatorNode) -> Optional[float]:
    """Total time attributable to a node's subtree, loops included."""
    if node.actual_total_time_ms is None:
        return None
    loops = node.actual_loops if node.actual_loops else 1
    return node.actual_total_time_ms * loops


def node_exclusive_ms(node: OperatorNode) -> Optional[tuple[float, bool]]:
    """Time spent in the node itself: inclusive minus children's inclusive.

    Returns (value, clamped); clamped is set when the raw difference was
    negative (parallel workers, shared CTE scans) and got clamped to 0.
    None when the node or any child lacks runtime statistics.
    """
    inclusive = node_inclusive_ms(node)
    if inclusive is None:
        return None
    child_total = 0.0
    for child in node.children:
        child_inclusive = node_inclusive_ms(child)
        if child_inclusive is None:
            return None
        child_total += child_inclusive
    raw = inclusive - child_total
    if raw < 0:
        return 0.0, True
    return raw, False
