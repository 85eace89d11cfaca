"""Domain types for belief networks and influence diagrams.

Nodes are frozen dataclasses. Conditional tables are keyed by the tuple of
parent states, in the order the parents are declared; a parentless node has a
single row keyed by ``()``.

Validation never raises: :func:`validate_bn` and :func:`validate_id` return a
:class:`ValidationReport` listing every violated rule, so that a malformed
file can be diagnosed in one pass.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import EvidenceError, StructureError

ROW_SUM_TOLERANCE = 1e-9

Assignment = Mapping[str, str]


def _freeze_table(table: Mapping) -> dict:
    return {tuple(k): (tuple(float(x) for x in v) if isinstance(v, (list, tuple)) else float(v))
            for k, v in table.items()}


@dataclass(frozen=True)
class ChanceNode:
    name: str
    states: tuple[str, ...]
    parents: tuple[str, ...] = ()
    cpt: Mapping[tuple[str, ...], tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "cpt", _freeze_table(self.cpt))

    def row(self, parent_states: Sequence[str]) -> tuple[float, ...]:
        return self.cpt[tuple(parent_states)]


@dataclass(frozen=True)
class DecisionNode:
    name: str
    alternatives: tuple[str, ...]
    observes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        object.__setattr__(self, "observes", tuple(self.observes))

    @property
    def states(self) -> tuple[str, ...]:
        return self.alternatives


@dataclass(frozen=True)
class ValueNode:
    name: str
    parents: tuple[str, ...]
    table: Mapping[tuple[str, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", _freeze_table(self.table))


@dataclass(frozen=True)
class BeliefNetwork:
    """A DAG of chance nodes, kept in declaration order."""

    nodes: tuple[ChanceNode, ...]
    name: str = "network"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @cached_property
    def _index(self) -> dict[str, ChanceNode]:
        index: dict[str, ChanceNode] = {}
        for node in self.nodes:
            index.setdefault(node.name, node)
        return index

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(node.name for node in self.nodes)

    def __getitem__(self, name: str) -> ChanceNode:
        return self._index[name]

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[ChanceNode]:
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def states(self, name: str) -> tuple[str, ...]:
        return self._index[name].states

    def cardinality(self, name: str) -> int:
        return len(self._index[name].states)

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        kids: dict[str, list[str]] = {n: [] for n in self.names}
        for node in self.nodes:
            for p in node.parents:
                if p in kids:
                    kids[p].append(node.name)
        return {k: tuple(v) for k, v in kids.items()}

    @cached_property
    def _arrays(self) -> dict[str, np.ndarray]:
        return {}

    def cpt_array(self, name: str) -> np.ndarray:
        """CPT of ``name`` as an array with axes (parents..., node)."""
        arrays = self._arrays
        if name not in arrays:
            node = self._index[name]
            shape = [self.cardinality(p) for p in node.parents] + [len(node.states)]
            table = np.empty(shape)
            parent_states = [self.states(p) for p in node.parents]
            for idx in itertools.product(*(range(n) for n in shape[:-1])):
                key = tuple(s[i] for s, i in zip(parent_states, idx))
                table[idx] = node.cpt[key]
            table.setflags(write=False)
            arrays[name] = table
        return arrays[name]

    def replace(self, nodes: Iterable[ChanceNode]) -> "BeliefNetwork":
        return BeliefNetwork(tuple(nodes), self.name)


@dataclass(frozen=True)
class InfluenceDiagram:
    """Chance nodes, decisions in their total order D1..Dn, and a value node.

    ``values`` is a tuple so that a malformed document with several value nodes
    can still be represented and reported by :func:`validate_id`.
    """

    chance: tuple[ChanceNode, ...]
    decisions: tuple[DecisionNode, ...]
    values: tuple[ValueNode, ...]
    name: str = "diagram"

    def __post_init__(self):
        object.__setattr__(self, "chance", tuple(self.chance))
        object.__setattr__(self, "decisions", tuple(self.decisions))
        values = self.values
        if isinstance(values, ValueNode):
            values = (values,)
        object.__setattr__(self, "values", tuple(values))

    @property
    def value(self) -> ValueNode:
        if len(self.values) != 1:
            raise StructureError(f"expected exactly one value node, found {len(self.values)}")
        return self.values[0]

    @cached_property
    def _index(self) -> dict[str, ChanceNode | DecisionNode | ValueNode]:
        index: dict = {}
        for node in (*self.chance, *self.decisions, *self.values):
            index.setdefault(node.name, node)
        return index

    def __getitem__(self, name: str):
        return self._index[name]

    def __contains__(self, name: object) -> bool:
        return name in self._index

    @cached_property
    def decision_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.decisions)

    @cached_property
    def chance_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.chance)

    def states(self, name: str) -> tuple[str, ...]:
        node = self._index[name]
        if isinstance(node, ValueNode):
            raise KeyError(name)
        return node.states

    def parents_of(self, name: str) -> tuple[str, ...]:
        node = self._index[name]
        if isinstance(node, DecisionNode):
            return node.observes
        return node.parents

    def replace_decisions(self, decisions: Iterable[DecisionNode]) -> "InfluenceDiagram":
        return InfluenceDiagram(self.chance, tuple(decisions), self.values, self.name)


@dataclass(frozen=True)
class Violation:
    node: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        tail = f": {self.detail}" if self.detail else ""
        return f"{self.node}: {self.rule}{tail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


# -- graph utilities ---------------------------------------------------------

def _toposort(names: Sequence[str], parents: Mapping[str, Sequence[str]]) -> list[str] | None:
    """Kahn's algorithm picking the earliest-declared ready node; None on a cycle."""
    placed: set[str] = set()
    order: list[str] = []
    remaining = list(names)
    known = set(names)
    while remaining:
        for i, n in enumerate(remaining):
            if all(p in placed or p not in known for p in parents.get(n, ())):
                break
        else:
            return None
        order.append(remaining.pop(i))
        placed.add(n)
    return order


def _cycle_members(names: Sequence[str], parents: Mapping[str, Sequence[str]]) -> list[str]:
    """Nodes lying on, or downstream of, a directed cycle."""
    known = set(names)
    placed: set[str] = set()
    changed = True
    while changed:
        changed = False
        for n in names:
            if n not in placed and all(p in placed or p not in known for p in parents.get(n, ())):
                placed.add(n)
                changed = True
    return [n for n in names if n not in placed]


def topological_order(network: BeliefNetwork) -> list[str]:
    """Parents-before-children order; ties go to declaration order."""
    order = _toposort(network.names, {n.name: n.parents for n in network})
    if order is None:
        stuck = _cycle_members(network.names, {n.name: n.parents for n in network})
        raise StructureError(f"cycle detected among {', '.join(stuck)}")
    return order


def ancestors(parents: Mapping[str, Sequence[str]], nodes: Iterable[str]) -> set[str]:
    """The given nodes together with all of their ancestors."""
    seen: set[str] = set()
    stack = list(nodes)
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(parents.get(n, ()))
    return seen


def descendants(children: Mapping[str, Sequence[str]], nodes: Iterable[str]) -> set[str]:
    """The given nodes together with all of their descendants."""
    return ancestors(children, nodes)


# -- validation --------------------------------------------------------------

def _check_chance(node: ChanceNode, states_of: Mapping[str, tuple[str, ...]],
                  tol: float) -> list[Violation]:
    out: list[Violation] = []
    if len(node.states) < 2:
        out.append(Violation(node.name, "too few states", f"{len(node.states)} < 2"))
    if len(set(node.states)) != len(node.states):
        out.append(Violation(node.name, "duplicate state"))
    if len(set(node.parents)) != len(node.parents):
        out.append(Violation(node.name, "duplicate parent"))
    missing = [p for p in node.parents if p not in states_of]
    for p in missing:
        out.append(Violation(node.name, "unknown parent", p))
    if missing:
        return out
    expected = set(itertools.product(*(states_of[p] for p in node.parents)))
    rows = set(node.cpt)
    for key in sorted(expected - rows):
        out.append(Violation(node.name, "missing cpt row", ", ".join(key) or "()"))
    for key in sorted(rows - expected):
        out.append(Violation(node.name, "extra cpt row", ", ".join(key) or "()"))
    for key in node.cpt:
        row = node.cpt[key]
        label = ", ".join(key) or "()"
        if len(row) != len(node.states):
            out.append(Violation(node.name, "row arity", f"{label}: {len(row)} values for "
                                 f"{len(node.states)} states"))
            continue
        if any(not math.isfinite(p) or p < 0.0 or p > 1.0 for p in row):
            out.append(Violation(node.name, "probability range", label))
        elif abs(math.fsum(row) - 1.0) > tol:
            out.append(Violation(node.name, "row sum ≠ 1", f"{label}: {math.fsum(row):.12g}"))
    return out


def validate_bn(network: BeliefNetwork, tol: float = ROW_SUM_TOLERANCE) -> ValidationReport:
    out: list[Violation] = []
    seen: set[str] = set()
    for node in network:
        if node.name in seen:
            out.append(Violation(node.name, "duplicate node"))
        seen.add(node.name)
    states_of = {n.name: n.states for n in network}
    for node in network:
        out.extend(_check_chance(node, states_of, tol))
    parents = {n.name: n.parents for n in network}
    for name in _cycle_members(network.names, parents):
        out.append(Violation(name, "cycle"))
    return ValidationReport(tuple(out))


def closure_observes(diagram: InfluenceDiagram) -> dict[str, tuple[str, ...]]:
    """Information predecessors of each decision once no-forgetting arcs are added.

    For decision j the list is D1, observes(D1), D2, observes(D2), ..., then
    observes(Dj), with later repeats dropped.
    """
    closed: dict[str, tuple[str, ...]] = {}
    prefix: list[str] = []
    for d in diagram.decisions:
        merged = list(dict.fromkeys([*prefix, *d.observes]))
        closed[d.name] = tuple(merged)
        prefix.extend([d.name, *d.observes])
    return closed


def validate_id(diagram: InfluenceDiagram, tol: float = ROW_SUM_TOLERANCE) -> ValidationReport:
    out: list[Violation] = []
    seen: set[str] = set()
    for node in (*diagram.chance, *diagram.decisions, *diagram.values):
        if node.name in seen:
            out.append(Violation(node.name, "duplicate node"))
        seen.add(node.name)

    if len(diagram.values) != 1:
        out.append(Violation(diagram.name, "exactly one value node",
                             f"found {len(diagram.values)}"))

    states_of = {n.name: n.states for n in (*diagram.chance, *diagram.decisions)}
    value_names = {v.name for v in diagram.values}
    for node in diagram.chance:
        out.extend(_check_chance(node, states_of, tol))
        for p in node.parents:
            if p in value_names:
                out.append(Violation(node.name, "value successor", f"{p} -> {node.name}"))

    position = {d.name: i for i, d in enumerate(diagram.decisions)}
    for i, d in enumerate(diagram.decisions):
        if len(d.alternatives) < 2:
            out.append(Violation(d.name, "too few alternatives", f"{len(d.alternatives)} < 2"))
        if len(set(d.alternatives)) != len(d.alternatives):
            out.append(Violation(d.name, "duplicate alternative"))
        for o in d.observes:
            if o in value_names:
                out.append(Violation(d.name, "value successor", f"{o} -> {d.name}"))
            elif o not in states_of:
                out.append(Violation(d.name, "unknown reference", o))
            elif o in position and position[o] >= i:
                out.append(Violation(d.name, "order inconsistent",
                                     f"observes {o}, which is not an earlier decision"))

    for v in diagram.values:
        missing = [p for p in v.parents if p not in states_of]
        for p in missing:
            out.append(Violation(v.name, "unknown reference", p))
        if len(set(v.parents)) != len(v.parents):
            out.append(Violation(v.name, "duplicate parent"))
        if missing:
            continue
        expected = set(itertools.product(*(states_of[p] for p in v.parents)))
        rows = set(v.table)
        for key in sorted(expected - rows):
            out.append(Violation(v.name, "missing value row", ", ".join(key) or "()"))
        for key in sorted(rows - expected):
            out.append(Violation(v.name, "extra value row", ", ".join(key) or "()"))
        if any(not math.isfinite(x) for x in v.table.values()):
            out.append(Violation(v.name, "non-finite value"))

    names = [n.name for n in (*diagram.chance, *diagram.decisions, *diagram.values)]
    parents = {n.name: n.parents for n in (*diagram.chance, *diagram.values)}
    parents.update({d.name: d.observes for d in diagram.decisions})
    cyclic = _cycle_members(names, parents)
    for name in cyclic:
        out.append(Violation(name, "cycle"))
    if not cyclic and not any(v.rule == "order inconsistent" for v in out):
        # no-forgetting arcs must not close a loop: a decision may not observe
        # anything downstream of a later decision
        closed = dict(parents)
        closed.update(closure_observes(diagram))
        for name in _cycle_members(names, closed):
            if name in position:
                out.append(Violation(name, "no-forgetting cycle",
                                     "observes a descendant of a later decision"))
    return ValidationReport(tuple(out))


# -- evidence ----------------------------------------------------------------

def check_evidence(model: BeliefNetwork | InfluenceDiagram, evidence: Assignment) -> dict[str, str]:
    """Return ``evidence`` as a plain dict after checking names and labels."""
    checked: dict[str, str] = {}
    for name, state in evidence.items():
        try:
            states = model.states(name)
        except KeyError:
            raise EvidenceError(f"unknown node {name!r} in evidence") from None
        if state not in states:
            raise EvidenceError(f"{state!r} is not a state of {name} (expected one of "
                                f"{', '.join(states)})")
        checked[name] = state
    return checked


def merge_evidence(base: Assignment, extra: Assignment) -> dict[str, str]:
    """Union of two assignments; a node bound to two different states is an error."""
    merged = dict(base)
    for name, state in extra.items():
        if name in merged and merged[name] != state:
            raise EvidenceError(f"{name} bound to both {merged[name]!r} and {state!r}")
        merged[name] = state
    return merged
