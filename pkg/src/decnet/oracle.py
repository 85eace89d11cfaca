"""Decision-tree evaluation straight on the influence diagram.

This is the reference the compiled solver is checked against, so it shares
none of its machinery: no value-to-probability transform, no decision list,
no elimination engine and no memoisation. The tree alternates decision
layers (max over alternatives) with observation layers (sum over what the
next decision gets to see), and every probability comes from summing a
dense joint table over the chance nodes.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Mapping

import numpy as np

from .decide import DecisionOutcome, Policy
from .errors import EvidenceError, ImpossibleEvidenceError, StructureError, UsageError
from .model import Assignment, InfluenceDiagram, validate_id


class _Tree:
    def __init__(self, diagram: InfluenceDiagram):
        self.d = diagram
        self.chance = list(diagram.chance_names)
        self.axis = {n: i for i, n in enumerate(self.chance)}
        self.order = list(diagram.decision_names)
        self.value = diagram.value
        self._joint = lru_cache(maxsize=None)(self._build_joint)
        self._v = lru_cache(maxsize=None)(self._build_values)

        # what each decision knows: every earlier decision and everything any
        # decision up to and including it observes
        self.sees: dict[str, set[str]] = {}
        acc: set[str] = set()
        for i, dec in enumerate(diagram.decisions):
            acc |= set(dec.observes)
            self.sees[dec.name] = acc | set(self.order[:i])

        kids: dict[str, set[str]] = {n: set() for n in (*self.chance, *self.order)}
        for node in diagram.chance:
            for p in node.parents:
                kids[p].add(node.name)
        self.kids = kids
        v = self.value.table.values()
        self.scale = max(v) - min(v)

    def downstream(self, roots) -> set[str]:
        out: set[str] = set()
        stack = list(roots)
        while stack:
            for k in self.kids[stack.pop()]:
                if k not in out:
                    out.add(k)
                    stack.append(k)
        return out

    def _build_joint(self, decisions: tuple[str, ...]) -> np.ndarray:
        fixed = dict(zip(self.order, decisions))
        ops: list = []
        for node in self.d.chance:
            shape = []
            table = np.empty([len(self.d.states(p)) for p in node.parents] + [len(node.states)])
            for idx in itertools.product(*(range(n) for n in table.shape[:-1])):
                key = tuple(self.d.states(p)[i] for p, i in zip(node.parents, idx))
                table[idx] = node.cpt[key]
            index: list = []
            for p in node.parents:
                if p in fixed:
                    index.append(self.d.states(p).index(fixed[p]))
                else:
                    index.append(slice(None))
                    shape.append(self.axis[p])
            ops += [table[tuple(index)], shape + [self.axis[node.name]]]
        if not ops:
            return np.array(1.0)
        return np.einsum(*ops, list(range(len(self.chance))))

    def _build_values(self, decisions: tuple[str, ...]) -> np.ndarray:
        fixed = dict(zip(self.order, decisions))
        shape = [len(self.d.states(c)) for c in self.chance]
        out = np.empty(shape)
        for idx in itertools.product(*(range(n) for n in shape)):
            config = {c: self.d.states(c)[i] for c, i in zip(self.chance, idx)}
            config.update(fixed)
            out[idx] = self.value.table[tuple(config[p] for p in self.value.parents)]
        return out

    def _slice(self, known: Mapping[str, str]) -> tuple:
        return tuple(self.d.states(c).index(known[c]) if c in known else slice(None)
                     for c in self.chance)

    def _decisions(self, known: Mapping[str, str]) -> tuple[str, ...]:
        # unmade decisions are pinned to their first alternative; every caller
        # only asks about nodes that are not downstream of them
        return tuple(known.get(d, self.d.states(d)[0]) for d in self.order)

    def mass(self, known: Mapping[str, str]) -> float:
        return float(self._joint(self._decisions(known))[self._slice(known)].sum())

    def expected_value(self, known: Mapping[str, str]) -> float:
        dec = self._decisions(known)
        cut = self._slice(known)
        joint = self._joint(dec)[cut]
        return float((joint * self._v(dec)[cut]).sum() / joint.sum())


def oracle_decision_tree(diagram: InfluenceDiagram, evidence: Assignment | None = None,
                         hypotheticals: Assignment | None = None
                         ) -> tuple[DecisionOutcome, Policy]:
    """Exact MEV and policy by brute-force decision-tree expansion, in value units."""
    report = validate_id(diagram)
    if not report.ok:
        raise StructureError(f"invalid influence diagram:\n{report}")
    evidence = dict(evidence or {})
    hypotheticals = dict(hypotheticals or {})
    for name, state in (*evidence.items(), *hypotheticals.items()):
        if name not in diagram or name == diagram.value.name or state not in diagram.states(name):
            raise EvidenceError(f"bad evidence {name}={state}")
    tree = _Tree(diagram)

    remaining = [d for d in tree.order if d not in evidence]
    if not remaining:
        raise UsageError("no remaining decision")
    made = tree.order[:len(tree.order) - len(remaining)]
    if any(d not in evidence for d in made) or any(d in evidence for d in remaining):
        raise UsageError("decisions in evidence must be a prefix of the decision order")
    first = remaining[0]
    for name in hypotheticals:
        if name not in tree.sees[first] or name in tree.order:
            raise UsageError(f"hypothetical {name} is not observed by {first}")
        if name in evidence and evidence[name] != hypotheticals[name]:
            raise EvidenceError(f"{name} bound twice")
    known0 = {**evidence, **hypotheticals}
    if tree.downstream(remaining) & set(known0):
        raise UsageError("evidence depends on an unmade decision")
    if tree.mass(known0) <= 0.0:
        raise ImpossibleEvidenceError("evidence has probability zero")

    # the first remaining decision sees only what is actually known now
    seen = {first: {x for x in tree.sees[first] if x in known0 or x in tree.order}}
    for d in remaining[1:]:
        seen[d] = tree.sees[d]
    chance_order = {c: i for i, c in enumerate(tree.chance)}
    policy = Policy()
    tol = 1e-12 * tree.scale

    def solve(j: int, known: dict[str, str]) -> tuple[str, float, dict[str, float]]:
        dec = remaining[j]
        values: dict[str, float] = {}
        for alt in diagram.states(dec):
            h = {**known, dec: alt}
            if j == len(remaining) - 1:
                values[alt] = tree.expected_value(h)
                continue
            unseen = sorted((x for x in seen[remaining[j + 1]]
                             if x not in h and x in chance_order), key=chance_order.get)
            denom = tree.mass(h)
            total = 0.0
            for states in itertools.product(*(diagram.states(x) for x in unseen)):
                w = dict(zip(unseen, states))
                p = tree.mass({**h, **w}) / denom
                if p > 0.0:
                    total += p * solve(j + 1, {**h, **w})[1]
            values[alt] = total
        top = max(values.values())
        best = next(a for a, v in values.items() if v >= top - tol)
        key_vars = tuple(sorted((x for x in seen[dec] if x not in known0),
                                key=lambda x: (x in chance_order, chance_order.get(x, 0),
                                               tree.order.index(x) if x in tree.order else 0)))
        policy.record(dec, key_vars, tuple(known[x] for x in key_vars), (best, values[best]))
        return best, values[best], values

    best, value, values = solve(0, known0)
    return DecisionOutcome(first, best, value, values), policy
