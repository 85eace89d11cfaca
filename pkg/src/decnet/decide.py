"""Maximum-expected-value decisions on a compiled decision problem.

Every quantity is computed in probability space: ``f`` is the largest
attainable P(V=T | ...) and expected values are recovered once, at the end,
as ``k1 * f - k2``.

For the remaining decisions D_i..D_n the recursion is

    f(i, e) = max_a  sum_w  P(w | a, e) * f(i+1, e + a + w)
    f(n, e) = max_a  P(V=T | a, e)

where ``w`` ranges over the unobserved chance predecessors of the next
decision and zero-probability branches are skipped. Ties between alternatives
go to the first one declared.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import UsageError
from .exact import Engine, QueryResult, joint_config_probability, query_ve, requisite_evidence
from .model import Assignment, check_evidence, descendants, merge_evidence
from .transform import TRUE, CompiledDecisionProblem, DecisionEntry, DecisionList

# alternatives whose f-values differ by less than this are tied
TIE_TOLERANCE = 1e-12


def first_best(values: Mapping[str, float], tol: float = TIE_TOLERANCE) -> str:
    """Key of the largest value; near-ties go to the earliest key."""
    top = max(values.values())
    for key, value in values.items():
        if value >= top - tol:
            return key
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class DecisionOutcome:
    decision: str
    first_decision: str
    mev: float
    per_alternative: dict[str, float]
    probability: float = float("nan")

    def __str__(self) -> str:
        return f"decision {self.decision} = {self.first_decision}, MEV = {self.mev:.6f}"


@dataclass
class Policy:
    """Optimal alternative per information state, for each remaining decision.

    ``variables[d]`` names the predecessors of ``d`` that were not fixed in
    the initial evidence; ``rules[d]`` maps a tuple of their states to
    ``(alternative, expected value)``.
    """

    variables: dict[str, tuple[str, ...]] = field(default_factory=dict)
    rules: dict[str, dict[tuple[str, ...], tuple[str, float]]] = field(default_factory=dict)

    def lookup(self, decision: str, assignment: Assignment) -> tuple[str, float]:
        key = tuple(assignment[v] for v in self.variables[decision])
        return self.rules[decision][key]

    def normalized(self) -> dict[str, dict[frozenset, tuple[str, float]]]:
        """Rules keyed by frozensets of (variable, state) pairs, independent of variable order."""
        return {d: {frozenset(zip(self.variables[d], key)): rule for key, rule in table.items()}
                for d, table in self.rules.items()}

    def record(self, decision: str, variables: tuple[str, ...], key: tuple[str, ...],
               rule: tuple[str, float]) -> None:
        known = self.variables.setdefault(decision, variables)
        if known != variables:
            raise AssertionError(f"inconsistent policy variables for {decision}")
        self.rules.setdefault(decision, {})[key] = rule


@dataclass(frozen=True)
class StageResult:
    f: float
    choice: str
    per_alternative: dict[str, float]


@dataclass
class MemoTable:
    """Dynamic-programming caches for one solve.

    ``stages`` maps (decision index, states of the unfixed predecessors) to the
    stage result. ``queries`` maps an engine query, with its evidence cut down
    to the requisite part, to the engine's answer; this is where different
    histories share work. ``engine_calls`` counts actual engine invocations.
    """

    enabled: bool = True
    stages: dict[tuple[int, tuple[str, ...]], StageResult] = field(default_factory=dict)
    queries: dict[tuple[str, frozenset], QueryResult] = field(default_factory=dict)
    engine_calls: int = 0


def prepare_decision(problem: CompiledDecisionProblem, evidence: Assignment | None = None,
                     hypotheticals: Assignment | None = None) -> tuple[DecisionList, dict[str, str]]:
    """Adjust the decision list to what is known now and merge hypotheticals.

    Decisions already made must form a prefix D1..D(r-1) of the order and be
    in the evidence. Unobserved chance predecessors of the first remaining
    decision are dropped from its lists; ``hypotheticals`` may instead fix
    some of them. Evidence may not touch anything downstream of an unmade
    decision.
    """
    net = problem.network
    evidence = check_evidence(net, evidence or {})
    hypotheticals = check_evidence(net, hypotheticals or {})
    names = problem.decision_names
    made = [d in evidence for d in names]
    if all(made):
        raise UsageError("no remaining decision: every decision is already in the evidence")
    r = made.index(False)
    if any(made[r:]):
        late = [d for d, m in zip(names[r:], made[r:]) if m]
        raise UsageError(f"decisions {', '.join(late)} are in the evidence but "
                         f"{names[r]} has not been made")
    entry = problem.decisions[r]
    for name in hypotheticals:
        if name not in entry.chance_info:
            raise UsageError(f"hypothetical {name} is not an information predecessor of "
                             f"{entry.decision}")
    merged = merge_evidence(evidence, hypotheticals)

    downstream = descendants(net.children, names[r:]) - set(names[r:])
    future = sorted(set(merged) & downstream, key=net.names.index)
    if future:
        raise UsageError(f"evidence on {', '.join(future)}, which depends on an unmade decision")

    adjusted = DecisionEntry(entry.decision,
                             tuple(x for x in entry.info if x in merged),
                             tuple(x for x in entry.chance_info if x in merged))
    entries = problem.decisions[:r] + (adjusted,) + problem.decisions[r + 1:]
    return entries, merged


def _remaining(entries: DecisionList, evidence: Assignment) -> list[DecisionEntry]:
    return [e for e in entries if e.decision not in evidence]


class _Solver:
    def __init__(self, problem: CompiledDecisionProblem, remaining: Sequence[DecisionEntry],
                 evidence: Assignment, engine: Engine, memo: MemoTable,
                 policy: Policy | None = None, policy_base: Assignment | None = None):
        self.problem = problem
        self.net = problem.network
        self.remaining = list(remaining)
        self.initial = dict(evidence)
        self.engine = engine
        self.memo = memo
        self.policy = policy
        base = self.initial if policy_base is None else policy_base
        self.memo_vars = [tuple(x for x in e.info if x not in self.initial) for e in self.remaining]
        self.policy_vars = [tuple(x for x in e.info if x not in base) for e in self.remaining]

    def query(self, target: str, evidence: Assignment) -> QueryResult:
        if not self.memo.enabled:
            self.memo.engine_calls += 1
            return self.engine(self.net, target, evidence)
        reduced = requisite_evidence(self.net, [target], evidence)
        key = (target, frozenset(reduced.items()))
        hit = self.memo.queries.get(key)
        if hit is None:
            self.memo.engine_calls += 1
            hit = self.memo.queries[key] = self.engine(self.net, target, reduced)
        return hit

    def joint(self, config: Mapping[str, str], evidence: Assignment) -> float:
        if not config:
            return 1.0
        return joint_config_probability(self.net, config, evidence,
                                        engine=lambda _net, t, e: self.query(t, e))

    def stage(self, i: int, evidence: dict[str, str]) -> StageResult:
        entry = self.remaining[i]
        key = (i, tuple(evidence[x] for x in self.memo_vars[i]))
        if self.memo.enabled and key in self.memo.stages:
            return self.memo.stages[key]

        per_alt: dict[str, float] = {}
        last = i == len(self.remaining) - 1
        for alt in self.problem.alternatives(entry.decision):
            chosen = {**evidence, entry.decision: alt}
            if last:
                per_alt[alt] = self.query(self.problem.value_node, chosen)[TRUE]
                continue
            nxt = self.remaining[i + 1]
            unseen = [x for x in nxt.chance_info if x not in chosen]
            total = 0.0
            for states in itertools.product(*(self.net.states(x) for x in unseen)):
                w = dict(zip(unseen, states))
                p = self.joint(w, chosen)
                if p == 0.0:
                    continue
                total += p * self.stage(i + 1, {**chosen, **w}).f
            per_alt[alt] = total
        choice = first_best(per_alt)
        result = StageResult(per_alt[choice], choice, per_alt)

        if self.memo.enabled:
            self.memo.stages[key] = result
        if self.policy is not None:
            self.policy.record(entry.decision, self.policy_vars[i],
                               tuple(evidence[x] for x in self.policy_vars[i]),
                               (choice, self.problem.to_value(result.f)))
        return result


def _check_possible(problem: CompiledDecisionProblem, evidence: Assignment) -> None:
    # raises ImpossibleEvidenceError when P(E) = 0
    joint_config_probability(problem.network, {}, evidence)


def mev_single(problem: CompiledDecisionProblem, evidence: Assignment | None = None,
               engine: Engine = query_ve) -> DecisionOutcome:
    """Solve the last remaining decision by direct P(V=T | d, E) queries."""
    entries, merged = prepare_decision(problem, evidence)
    remaining = _remaining(entries, merged)
    if len(remaining) != 1:
        raise UsageError(f"mev_single needs exactly one remaining decision, "
                         f"found {len(remaining)}")
    _check_possible(problem, merged)
    decision = remaining[0].decision
    probs = {alt: engine(problem.network, problem.value_node, {**merged, decision: alt})[TRUE]
             for alt in problem.alternatives(decision)}
    best = first_best(probs)
    return DecisionOutcome(decision, best, problem.to_value(probs[best]),
                           {a: problem.to_value(p) for a, p in probs.items()}, probs[best])


def mev_recursive(problem: CompiledDecisionProblem, remaining: Sequence[DecisionEntry],
                  evidence: Assignment, memo: MemoTable | None = None,
                  engine: Engine = query_ve) -> float:
    """f(remaining, evidence): the best attainable P(V=T) over the remaining decisions."""
    evidence = check_evidence(problem.network, evidence)
    if not remaining:
        raise UsageError("no remaining decisions")
    _check_possible(problem, evidence)
    solver = _Solver(problem, remaining, evidence, engine, memo or MemoTable())
    return solver.stage(0, dict(evidence)).f


def _solve(problem, evidence, hypotheticals, engine, memo, policy=None, policy_base=None):
    entries, merged = prepare_decision(problem, evidence, hypotheticals)
    _check_possible(problem, merged)
    remaining = _remaining(entries, merged)
    solver = _Solver(problem, remaining, merged, engine, memo, policy, policy_base)
    result = solver.stage(0, dict(merged))
    decision = remaining[0].decision
    outcome = DecisionOutcome(decision, result.choice, problem.to_value(result.f),
                              {a: problem.to_value(f) for a, f in result.per_alternative.items()},
                              result.f)
    return outcome, merged


def mev(problem: CompiledDecisionProblem, evidence: Assignment | None = None,
        hypotheticals: Assignment | None = None, engine: Engine = query_ve,
        memo: bool | MemoTable = True) -> DecisionOutcome:
    """Best first decision and its maximum expected value, in value units."""
    if not isinstance(memo, MemoTable):
        memo = MemoTable(enabled=bool(memo))
    return _solve(problem, evidence, hypotheticals, engine, memo)[0]


def extract_policy(problem: CompiledDecisionProblem, evidence: Assignment | None = None,
                   hypotheticals: Assignment | None = None, engine: Engine = query_ve,
                   contingent: bool = False) -> Policy:
    """Policy over every reachable information state of the remaining decisions.

    With ``contingent=True`` the unobserved predecessors of the first
    decision are not dropped; each of their positive-probability
    configurations is solved as a hypothetical and becomes part of the key.
    """
    policy = Policy()
    if not contingent:
        _solve(problem, evidence, hypotheticals, engine, MemoTable(), policy)
        return _in_order(problem, policy)

    entries, base = prepare_decision(problem, evidence, hypotheticals)
    first = _remaining(entries, base)[0]
    full = next(e for e in problem.decisions if e.decision == first.decision)
    unseen = [x for x in full.chance_info if x not in base]
    _check_possible(problem, base)
    net = problem.network
    for states in itertools.product(*(net.states(x) for x in unseen)):
        c = dict(zip(unseen, states))
        if joint_config_probability(net, c, base, engine=engine) == 0.0:
            continue
        _solve(problem, base, c, engine, MemoTable(), policy, policy_base=base)
    return _in_order(problem, policy)


def _in_order(problem: CompiledDecisionProblem, policy: Policy) -> Policy:
    # rules are recorded innermost stage first; present them in decision order,
    # each table in the declaration order of the states
    net = problem.network
    out = Policy()
    for d in problem.decision_names:
        if d not in policy.rules:
            continue
        names = policy.variables[d]
        rank = [{s: i for i, s in enumerate(net.states(n))} for n in names]
        out.variables[d] = names
        out.rules[d] = dict(sorted(policy.rules[d].items(),
                                   key=lambda kv: [r[s] for r, s in zip(rank, kv[0])]))
    return out


@dataclass(frozen=True)
class QueryCountReport:
    with_memo: int
    without_memo: int
    mev_with_memo: float
    mev_without_memo: float

    @property
    def ratio(self) -> float:
        return self.without_memo / self.with_memo if self.with_memo else float("inf")


def query_count_report(problem: CompiledDecisionProblem, evidence: Assignment | None = None,
                       hypotheticals: Assignment | None = None,
                       engine: Engine = query_ve) -> QueryCountReport:
    """Solve twice, with and without memoisation, counting engine invocations."""
    on, off = MemoTable(enabled=True), MemoTable(enabled=False)
    a = _solve(problem, evidence, hypotheticals, engine, on)[0]
    b = _solve(problem, evidence, hypotheticals, engine, off)[0]
    return QueryCountReport(on.engine_calls, off.engine_calls, a.mev, b.mev)
