"""Exact posterior queries on belief networks.

Two independent engines share one contract:

* :func:`query_enumeration` sums the full joint distribution. It is
  exponential in the number of nodes and serves as the reference oracle.
* :func:`query_ve` prunes barren nodes, slices evidence into the factors and
  eliminates the remaining hidden variables in greedy min-fill order.

Both return a :class:`QueryResult` carrying the posterior and ``P(E)``, and
raise :class:`ImpossibleEvidenceError` when ``P(E) == 0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ImpossibleEvidenceError, UsageError
from .model import Assignment, BeliefNetwork, check_evidence, topological_order


@dataclass(frozen=True)
class QueryResult:
    distribution: tuple[float, ...]
    evidence_probability: float
    states: tuple[str, ...] = ()

    def __getitem__(self, state: str) -> float:
        return self.distribution[self.states.index(state)]


Engine = Callable[[BeliefNetwork, str, Assignment], QueryResult]


class Factor:
    """A nonnegative table over an ordered scope, stored as an ndarray.

    Axis ``i`` of ``values`` ranges over the states of ``scope[i]``.
    """

    __slots__ = ("scope", "values")

    def __init__(self, scope: Sequence[str], values: np.ndarray):
        self.scope = tuple(scope)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != len(self.scope):
            raise ValueError(f"scope {self.scope} does not match table of rank {self.values.ndim}")

    def __repr__(self) -> str:
        return f"Factor({self.scope}, shape={self.values.shape})"

    def __mul__(self, other: "Factor") -> "Factor":
        scope = list(dict.fromkeys(self.scope + other.scope))
        ids = {v: i for i, v in enumerate(scope)}
        values = np.einsum(self.values, [ids[v] for v in self.scope],
                           other.values, [ids[v] for v in other.scope],
                           list(range(len(scope))))
        return Factor(scope, values)

    def sum_out(self, var: str) -> "Factor":
        axis = self.scope.index(var)
        return Factor(self.scope[:axis] + self.scope[axis + 1:], self.values.sum(axis=axis))

    def reduce(self, network: BeliefNetwork, evidence: Assignment) -> "Factor":
        """Slice out the evidence variables in scope."""
        index: list = []
        scope: list[str] = []
        for var in self.scope:
            if var in evidence:
                index.append(network.states(var).index(evidence[var]))
            else:
                index.append(slice(None))
                scope.append(var)
        return Factor(scope, self.values[tuple(index)])

    def transpose(self, scope: Sequence[str]) -> "Factor":
        return Factor(scope, np.transpose(self.values, [self.scope.index(v) for v in scope]))

    def total(self) -> float:
        return float(self.values.sum())


def cpt_factor(network: BeliefNetwork, name: str) -> Factor:
    node = network[name]
    return Factor(node.parents + (name,), network.cpt_array(name))


# -- enumeration oracle ------------------------------------------------------

def _joint_configurations(network: BeliefNetwork, evidence: Assignment):
    """Yield (assignment, probability) over all full configurations consistent with evidence."""
    order = topological_order(network)
    domains = [(evidence[n],) if n in evidence else network.states(n) for n in order]
    for states in itertools.product(*domains):
        config = dict(zip(order, states))
        p = 1.0
        for name in order:
            node = network[name]
            row = node.cpt[tuple(config[q] for q in node.parents)]
            p *= row[node.states.index(config[name])]
            if p == 0.0:
                break
        yield config, p


def query_enumeration(network: BeliefNetwork, target: str,
                      evidence: Assignment | None = None) -> QueryResult:
    evidence = check_evidence(network, evidence or {})
    if target in evidence:
        raise UsageError(f"target {target} is also in the evidence")
    states = network.states(target)
    sums = dict.fromkeys(states, 0.0)
    for config, p in _joint_configurations(network, evidence):
        sums[config[target]] += p
    total = math.fsum(sums.values())
    if total <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {evidence} has probability zero")
    return QueryResult(tuple(sums[s] / total for s in states), total, states)


def joint_enumeration(network: BeliefNetwork, config: Assignment,
                      evidence: Assignment | None = None) -> float:
    """P(config | evidence) by summing the full joint."""
    evidence = check_evidence(network, evidence or {})
    config = check_evidence(network, config)
    num = den = 0.0
    for full, p in _joint_configurations(network, evidence):
        den += p
        if all(full[k] == v for k, v in config.items()):
            num += p
    if den <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {evidence} has probability zero")
    return num / den


# -- structure helpers -------------------------------------------------------

def prune_barren(network: BeliefNetwork, targets: Iterable[str],
                 evidence: Assignment | Iterable[str] = ()) -> BeliefNetwork:
    """Repeatedly drop leaves that are neither targets nor evidence."""
    keep = set(targets) | set(evidence)
    alive = set(network.names)
    child_count = {n: 0 for n in network.names}
    for node in network:
        for p in node.parents:
            child_count[p] += 1
    stack = [n for n in network.names if child_count[n] == 0 and n not in keep]
    while stack:
        n = stack.pop()
        alive.discard(n)
        for p in network[n].parents:
            child_count[p] -= 1
            if child_count[p] == 0 and p not in keep:
                stack.append(p)
    if len(alive) == len(network):
        return network
    return network.replace(node for node in network if node.name in alive)


def requisite_evidence(network: BeliefNetwork, targets: Iterable[str],
                       evidence: Assignment) -> dict[str, str]:
    """The part of ``evidence`` that can influence the posterior of ``targets``.

    Moralise the ancestral graph of targets and evidence, delete the evidence
    nodes, and keep only evidence adjacent to the component holding the
    targets. Everything else is separated from the targets by the kept
    evidence, so dropping it leaves every posterior over ``targets`` unchanged.
    """
    targets = set(targets)
    relevant = prune_barren(network, targets, evidence)
    adjacency: dict[str, set[str]] = {n: set() for n in relevant.names}
    for node in relevant:
        family = (*node.parents, node.name)
        for a, b in itertools.combinations(family, 2):
            adjacency[a].add(b)
            adjacency[b].add(a)
    seen = set(targets)
    stack = list(targets)
    kept: set[str] = set()
    while stack:
        n = stack.pop()
        for m in adjacency[n]:
            if m in evidence:
                kept.add(m)
            elif m not in seen:
                seen.add(m)
                stack.append(m)
    return {k: v for k, v in evidence.items() if k in kept}


def min_fill_order(factors: Sequence[Factor], hidden: Sequence[str]) -> list[str]:
    """Greedy min-fill elimination order over ``hidden``; ties go to ``hidden`` order."""
    graph: dict[str, set[str]] = {}
    for f in factors:
        for v in f.scope:
            graph.setdefault(v, set()).update(u for u in f.scope if u != v)
    rank = {v: i for i, v in enumerate(hidden)}
    pending = [v for v in hidden]
    order: list[str] = []
    while pending:
        best = None
        best_fill = None
        for v in pending:
            nbrs = list(graph.get(v, ()))
            fill = sum(1 for a, b in itertools.combinations(nbrs, 2) if b not in graph[a])
            if best_fill is None or fill < best_fill or (fill == best_fill and rank[v] < rank[best]):
                best, best_fill = v, fill
        nbrs = graph.pop(best, set())
        for a in nbrs:
            graph[a].discard(best)
            graph[a].update(b for b in nbrs if b != a)
        pending.remove(best)
        order.append(best)
    return order


# -- variable elimination ----------------------------------------------------

def posterior_factor(network: BeliefNetwork, targets: Sequence[str],
                     evidence: Assignment) -> Factor:
    """Unnormalised P(targets, E) over ``targets``; its total is P(E)."""
    net = prune_barren(network, targets, evidence)
    factors = [cpt_factor(net, n).reduce(net, evidence) for n in net.names]
    hidden = [n for n in net.names if n not in evidence and n not in targets]
    for var in min_fill_order(factors, hidden):
        touching = [f for f in factors if var in f.scope]
        if not touching:
            continue
        factors = [f for f in factors if var not in f.scope]
        product = touching[0]
        for f in touching[1:]:
            product = product * f
        factors.append(product.sum_out(var))
    result = Factor((), np.array(1.0))
    for f in factors:
        result = result * f
    return result.transpose(list(targets))


def query_ve(network: BeliefNetwork, target: str,
             evidence: Assignment | None = None) -> QueryResult:
    evidence = check_evidence(network, evidence or {})
    if target in evidence:
        raise UsageError(f"target {target} is also in the evidence")
    factor = posterior_factor(network, [target], evidence)
    total = factor.total()
    if total <= 0.0:
        raise ImpossibleEvidenceError(f"evidence {evidence} has probability zero")
    states = network.states(target)
    return QueryResult(tuple(float(x) for x in factor.values / total), total, states)


def joint_config_probability(network: BeliefNetwork, config: Assignment,
                             evidence: Assignment | None = None,
                             engine: Engine | None = query_ve,
                             ) -> float:
    """P(config | evidence) for a partial assignment ``config``.

    With an ``engine`` the probability is a chain of single-variable queries,
    each conditioning on the previously fixed variables; the chain stops at
    the first zero factor. With ``engine=None`` a single elimination over the
    joint target is used instead.
    """
    evidence = check_evidence(network, evidence or {})
    config = check_evidence(network, config)
    overlap = set(config) & set(evidence)
    if overlap:
        raise UsageError(f"variables {sorted(overlap)} are both queried and observed")
    if not config:
        if posterior_factor(network, [], evidence).total() <= 0.0:
            raise ImpossibleEvidenceError(f"evidence {evidence} has probability zero")
        return 1.0
    if engine is None:
        names = list(config)
        factor = posterior_factor(network, names, evidence)
        total = factor.total()
        if total <= 0.0:
            raise ImpossibleEvidenceError(f"evidence {evidence} has probability zero")
        idx = tuple(network.states(n).index(config[n]) for n in names)
        return float(factor.values[idx]) / total
    p = 1.0
    acc = dict(evidence)
    for name, state in config.items():
        result = engine(network, name, acc)
        p *= result.distribution[network.states(name).index(state)]
        if p == 0.0:
            return 0.0
        acc[name] = state
    return p
