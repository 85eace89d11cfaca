"""Compile an influence diagram into a belief network.

Decision nodes become root chance nodes with a strictly positive prior, and
the value node becomes a binary chance node ``V`` with

    P(V=T | parents) = (v(parents) - min v) / (max v - min v)

so that an expected value is recovered as ``k1 * P(V=T | ...) - k2`` with
``k1 = max v - min v`` and ``k2 = -min v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import StructureError
from .model import (ROW_SUM_TOLERANCE, BeliefNetwork, ChanceNode, InfluenceDiagram,
                    closure_observes, validate_bn, validate_id)

TRUE, FALSE = "T", "F"


@dataclass(frozen=True)
class DecisionEntry:
    """One element of the decision list: a decision and what is known when it is made."""

    decision: str
    info: tuple[str, ...]
    chance_info: tuple[str, ...]

    def format(self) -> str:
        return f"({self.decision} ({' '.join(self.info)}) ({' '.join(self.chance_info)}))"


DecisionList = tuple[DecisionEntry, ...]


def format_decision_list(entries: Sequence[DecisionEntry]) -> str:
    """Render as ``((D1 (C) (C)) ...)``."""
    return "(" + " ".join(e.format() for e in entries) + ")"


@dataclass(frozen=True)
class CompiledDecisionProblem:
    network: BeliefNetwork
    decisions: DecisionList
    k1: float
    k2: float
    value_node: str

    @property
    def decision_names(self) -> tuple[str, ...]:
        return tuple(e.decision for e in self.decisions)

    def alternatives(self, decision: str) -> tuple[str, ...]:
        return self.network.states(decision)

    def to_value(self, probability: float) -> float:
        """Map P(V=T | ...) back to value units."""
        return self.k1 * probability - self.k2


def no_forgetting_closure(diagram: InfluenceDiagram) -> InfluenceDiagram:
    """Make every decision observe all earlier decisions and what they observed."""
    closed = closure_observes(diagram)
    return diagram.replace_decisions(
        d.__class__(d.name, d.alternatives, closed[d.name]) for d in diagram.decisions)


def build_decision_list(diagram: InfluenceDiagram) -> DecisionList:
    decisions = set(diagram.decision_names)
    return tuple(
        DecisionEntry(d.name, d.observes, tuple(o for o in d.observes if o not in decisions))
        for d in diagram.decisions)


def value_to_probability(table: Mapping[tuple[str, ...], float]
                         ) -> tuple[dict[tuple[str, ...], float], float, float]:
    """Linearly map a value table onto [0, 1].

    Returns ``(probabilities, k1, k2)``. A constant table has no range to map;
    every probability is then 1, with ``k1 = 0`` and ``k2 = -v`` so that
    ``k1 * p - k2`` still reproduces ``v``.
    """
    if not table:
        raise StructureError("value table is empty")
    lo = min(table.values())
    hi = max(table.values())
    k1 = hi - lo
    k2 = -lo
    if k1 == 0:
        return {key: 1.0 for key in table}, 0.0, k2
    # (v - lo) rather than (v + k2): identical in exact arithmetic, and the
    # subtraction is exact for the common case of dyadic inputs
    return {key: (v - lo) / k1 for key, v in table.items()}, k1, k2


def id_to_bn(diagram: InfluenceDiagram,
             decision_priors: Mapping[str, Sequence[float]] | None = None,
             tol: float = ROW_SUM_TOLERANCE) -> CompiledDecisionProblem:
    """Compile ``diagram``; decision priors default to uniform."""
    report = validate_id(diagram, tol)
    if not report.ok:
        raise StructureError(f"invalid influence diagram:\n{report}")
    value = diagram.value
    if value.name in diagram.chance_names or value.name in diagram.decision_names:
        raise StructureError(f"value node name {value.name!r} collides with another node")

    closed = no_forgetting_closure(diagram)
    entries = build_decision_list(closed)

    priors = dict(decision_priors or {})
    nodes: list[ChanceNode] = []
    for d in closed.decisions:
        prior = priors.pop(d.name, None)
        if prior is None:
            prior = [1.0 / len(d.alternatives)] * len(d.alternatives)
        if len(prior) != len(d.alternatives) or any(p <= 0 for p in prior):
            raise StructureError(f"prior for {d.name} must be strictly positive over "
                                 f"{len(d.alternatives)} alternatives")
        # information arcs are dropped: decisions enter the network as roots
        nodes.append(ChanceNode(d.name, d.alternatives, (), {(): tuple(prior)}))
    if priors:
        raise StructureError(f"priors given for non-decisions: {', '.join(priors)}")
    nodes.extend(closed.chance)

    probs, k1, k2 = value_to_probability(value.table)
    nodes.append(ChanceNode(value.name, (TRUE, FALSE), value.parents,
                            {key: (p, 1.0 - p) for key, p in probs.items()}))

    # keep declaration order for chance nodes; decisions first since they are roots
    network = BeliefNetwork(tuple(nodes), diagram.name)
    report = validate_bn(network, tol)
    if not report.ok:
        raise StructureError(f"compiled network is invalid:\n{report}")
    return CompiledDecisionProblem(network, entries, k1, k2, value.name)


def with_decision_priors(problem: CompiledDecisionProblem,
                         priors: Mapping[str, Sequence[float]]) -> CompiledDecisionProblem:
    """Same problem with the given decision priors substituted."""
    nodes = []
    for node in problem.network:
        if node.name in priors:
            node = ChanceNode(node.name, node.states, (), {(): tuple(priors[node.name])})
        nodes.append(node)
    return CompiledDecisionProblem(problem.network.replace(nodes), problem.decisions,
                                   problem.k1, problem.k2, problem.value_node)
