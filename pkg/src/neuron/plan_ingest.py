"""Obtain raw execution plans from EXPLAIN JSON files or a live PostgreSQL.

The parse is deliberately lossless: every attribute of every plan object is
kept verbatim (key order included) so later stages can decide what matters.
Typing of attribute values happens downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .errors import ConnectionFailure, EmptyInput, MalformedPlan, QueryError


class PlanSource(Enum):
    FILE = "file"
    LIVE_DATABASE = "live_database"


@dataclass
class RawPlanNode:
    """One plan object, verbatim.

    ``attributes`` holds every key except "Node Type" and "Plans", in the
    order the server printed them.
    """

    node_type: str
    attributes: dict[str, Any] = field(default_factory=dict)
    children: list["RawPlanNode"] = field(default_factory=list)

    def to_plan_obj(self) -> dict[str, Any]:
        """Rebuild the EXPLAIN plan-object shape for this subtree."""
        obj: dict[str, Any] = {"Node Type": self.node_type}
        obj.update(self.attributes)
        if self.children:
            obj["Plans"] = [child.to_plan_obj() for child in self.children]
        return obj

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class RawPlan:
    root: RawPlanNode
    planning_time_ms: Optional[float] = None
    execution_time_ms: Optional[float] = None
    source: PlanSource = PlanSource.FILE
    # Top-level keys other than "Plan" and the two times (e.g. "Triggers").
    extras: dict[str, Any] = field(default_factory=dict)
    # Verbatim text of the EXPLAIN JSON this plan came from.
    plan_text: str = ""

    def to_explain_obj(self) -> list[dict[str, Any]]:
        """Rebuild the top-level EXPLAIN JSON shape."""
        entry: dict[str, Any] = {"Plan": self.root.to_plan_obj()}
        if self.planning_time_ms is not None:
            entry["Planning Time"] = self.planning_time_ms
        entry.update(self.extras)
        if self.execution_time_ms is not None:
            entry["Execution Time"] = self.execution_time_ms
        return [entry]


@dataclass
class ColumnInfo:
    name: str
    type_name: str


@dataclass
class TableInfo:
    name: str
    columns: list[ColumnInfo] = field(default_factory=list)


@dataclass
class SchemaInfo:
    tables: list[TableInfo] = field(default_factory=list)

    def to_payload(self) -> dict[str, Any]:
        return {
            "tables": [
                {
                    "name": t.name,
                    "columns": [{"name": c.name, "type": c.type_name} for c in t.columns],
                }
                for t in self.tables
            ]
        }


def _build_node(obj: Any) -> RawPlanNode:
    if not isinstance(obj, dict):
        raise MalformedPlan("plan node is not a JSON object")
    node_type = obj.get("Node Type")
    if not isinstance(node_type, str) or not node_type:
        raise MalformedPlan("plan node has no Node Type")
    attributes: dict[str, Any] = {}
    children: list[RawPlanNode] = []
    for key, value in obj.items():
        if key == "Node Type":
            continue
        if key == "Plans":
            if not isinstance(value, list):
                raise MalformedPlan('"Plans" is not an array')
            children = [_build_node(child) for child in value]
            continue
        attributes[key] = value
    return RawPlanNode(node_type=node_type, attributes=attributes, children=children)


def parse_explain_json(data: bytes | str, source: PlanSource = PlanSource.FILE) -> RawPlan:
    """Parse the output of PostgreSQL EXPLAIN (FORMAT JSON).

    Expects a top-level array whose first element carries a "Plan" object.
    Raises EmptyInput for blank input and MalformedPlan for anything that is
    not valid EXPLAIN JSON.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedPlan(f"not UTF-8 text: {exc}") from exc
    else:
        text = data
    text = text.strip()
    if not text:
        raise EmptyInput("no plan data given")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedPlan(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, list) or not doc:
        raise MalformedPlan("expected a top-level array of plan entries")
    entry = doc[0]
    if not isinstance(entry, dict) or "Plan" not in entry:
        raise MalformedPlan('first array element has no "Plan" key')

    root = _build_node(entry["Plan"])
    planning = entry.get("Planning Time")
    execution = entry.get("Execution Time")
    extras = {
        k: v
        for k, v in entry.items()
        if k not in ("Plan", "Planning Time", "Execution Time")
    }
    for label, value in (("Planning Time", planning), ("Execution Time", execution)):
        if value is not None and (not isinstance(value, (int, float)) or value < 0):
            raise MalformedPlan(f'"{label}" is not a nonnegative number')
    return RawPlan(
        root=root,
        planning_time_ms=float(planning) if planning is not None else None,
        execution_time_ms=float(execution) if execution is not None else None,
        source=source,
        extras=extras,
        plan_text=text,
    )


def _check_open(conn: Any) -> None:
    if getattr(conn, "closed", False):
        raise ConnectionFailure("connection is closed")


def fetch_plan(conn: Any, sql: str, analyze: bool = True, timeout_s: float = 60.0) -> RawPlan:
    """Run EXPLAIN (FORMAT JSON) for ``sql`` on an open DB-API connection.

    With ``analyze`` the statement is actually executed, so runtime statistics
    (Actual Rows, Actual Total Time) are present; a statement timeout guards
    against runaway queries.
    """
    _check_open(conn)
    try:
        cursor = conn.cursor()
    except Exception as exc:
        raise ConnectionFailure(str(exc)) from exc
    try:
        try:
            cursor.execute("SET statement_timeout = %d" % int(timeout_s * 1000))
        except Exception:
            pass  # non-PostgreSQL backends may not support it
        options = "ANALYZE, FORMAT JSON" if analyze else "FORMAT JSON"
        try:
            cursor.execute(f"EXPLAIN ({options}) {sql}")
            row = cursor.fetchone()
        except Exception as exc:
            if getattr(conn, "closed", False):
                raise ConnectionFailure(str(exc)) from exc
            raise QueryError(str(exc)) from exc
        if not row:
            raise QueryError("EXPLAIN returned no rows")
        reply = row[0]
        # psycopg returns the json column pre-parsed; other drivers return text
        text = reply if isinstance(reply, str) else json.dumps(reply)
        return parse_explain_json(text, source=PlanSource.LIVE_DATABASE)
    finally:
        try:
            cursor.close()
        except Exception:
            pass


_SCHEMA_SQL = """
SELECT t.table_name, c.column_name, c.data_type
FROM information_schema.tables t
JOIN information_schema.columns c
  ON c.table_schema = t.table_schema AND c.table_name = t.table_name
WHERE t.table_schema NOT IN ('pg_catalog', 'information_schema')
  AND t.table_type = 'BASE TABLE'
ORDER BY t.table_name, c.ordinal_position
""".strip()


def fetch_schema(conn: Any) -> SchemaInfo:
    """List user tables and their columns, in ordinal order."""
    _check_open(conn)
    try:
        cursor = conn.cursor()
        cursor.execute(_SCHEMA_SQL)
        rows = cursor.fetchall()
    except Exception as exc:
        raise ConnectionFailure(str(exc)) from exc
    tables: list[TableInfo] = []
    by_name: dict[str, TableInfo] = {}
    for table_name, column_name, type_name in rows:
        table = by_name.get(table_name)
        if table is None:
            table = TableInfo(name=table_name)
            by_name[table_name] = table
            tables.append(table)
        table.columns.append(ColumnInfo(name=column_name, type_name=type_name))
    return SchemaInfo(tables=tables)


def connect(dsn: str) -> Any:
    """Open a PostgreSQL connection from a URI/DSN.

    Uses whichever of psycopg (v3) or psycopg2 is installed.
    """
    driver = None
    try:
        import psycopg as driver  # type: ignore[no-redef]
    except ImportError:
        try:
            import psycopg2 as driver  # type: ignore[no-redef]
        except ImportError:
            pass
    if driver is None:
        raise ConnectionFailure(
            "no PostgreSQL driver installed (pip install psycopg or psycopg2-binary)"
        )
    try:
        return driver.connect(dsn)
    except Exception as exc:
        raise ConnectionFailure(str(exc)) from exc
