"""Logic sampling: forward sampling with rejection of draws that contradict the evidence.

All randomness comes from :func:`numpy.random.default_rng`, so results are a
pure function of (network, query, evidence, draw count, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Mapping

import numpy as np

from .decide import first_best, prepare_decision
from .errors import NoAcceptedSamplesError, UsageError
from .model import Assignment, BeliefNetwork, check_evidence, topological_order
from .transform import TRUE, CompiledDecisionProblem

# draws are generated in chunks of this size to bound memory; changing it
# changes the random stream
CHUNK = 1 << 16


@dataclass(frozen=True)
class EstimateWithSE:
    estimate: float
    standard_error: float
    drawn: int
    accepted: int
    seed: int

    def interval(self, z: float) -> tuple[float, float]:
        return self.estimate - z * self.standard_error, self.estimate + z * self.standard_error


def _estimate(hits: int, accepted: int, drawn: int, seed: int) -> EstimateWithSE:
    p = hits / accepted
    return EstimateWithSE(p, math.sqrt(p * (1.0 - p) / accepted), drawn, accepted, seed)


class ForwardSampler:
    """Vectorised ancestral sampler for one network.

    Nodes named in ``clamp`` must be roots; they are set to their evidence
    state instead of being drawn, which leaves the distribution of accepted
    samples unchanged while avoiding pointless rejections.
    """

    def __init__(self, network: BeliefNetwork, evidence: Assignment,
                 clamp: Iterable[str] = ()):
        self.network = network
        self.order = topological_order(network)
        self.evidence = {n: network.states(n).index(s) for n, s in evidence.items()}
        self.clamp = set(clamp)
        for name in self.clamp:
            if network[name].parents or name not in self.evidence:
                raise UsageError(f"can only clamp observed root nodes, not {name}")
        self.tables = {}
        for name in self.order:
            node = network[name]
            cum = np.cumsum(network.cpt_array(name).reshape(-1, len(node.states)), axis=1)
            dims = tuple(network.cardinality(p) for p in node.parents)
            self.tables[name] = (cum, dims)

    def draw(self, n: int, rng: np.random.Generator) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """``n`` forward samples and the mask of those consistent with the evidence."""
        values: dict[str, np.ndarray] = {}
        keep = np.ones(n, dtype=bool)
        for name in self.order:
            if name in self.clamp:
                values[name] = np.full(n, self.evidence[name])
                continue
            cum, dims = self.tables[name]
            node = self.network[name]
            if node.parents:
                rows = np.ravel_multi_index([values[p] for p in node.parents], dims)
            else:
                rows = np.zeros(n, dtype=np.intp)
            u = rng.random(n)
            idx = (u[:, None] >= cum[rows]).sum(axis=1)
            values[name] = np.minimum(idx, cum.shape[1] - 1)
            if name in self.evidence:
                keep &= values[name] == self.evidence[name]
        return values, keep


class _Stream:
    """Running counts for one (target = state | evidence) estimate."""

    def __init__(self, sampler: ForwardSampler, target: str, state: str,
                 rng: np.random.Generator, seed: int):
        self.sampler = sampler
        self.target = target
        self.state = sampler.network.states(target).index(state)
        self.rng = rng
        self.seed = seed
        self.drawn = self.accepted = self.hits = 0

    def advance(self, n: int) -> None:
        while n > 0:
            k = min(n, CHUNK)
            values, keep = self.sampler.draw(k, self.rng)
            self.drawn += k
            self.accepted += int(keep.sum())
            self.hits += int((values[self.target][keep] == self.state).sum())
            n -= k

    def result(self) -> EstimateWithSE:
        if self.accepted == 0:
            raise NoAcceptedSamplesError(self.drawn)
        return _estimate(self.hits, self.accepted, self.drawn, self.seed)


def logic_sample(network: BeliefNetwork, target: str, state: str,
                 evidence: Assignment | None = None, n: int = 10_000,
                 seed: int = 0) -> EstimateWithSE:
    """Estimate P(target = state | evidence) from ``n`` forward draws."""
    if n < 1:
        raise UsageError("n must be at least 1")
    evidence = check_evidence(network, evidence or {})
    check_evidence(network, {target: state})
    if target in evidence:
        raise UsageError(f"target {target} is also in the evidence")
    stream = _Stream(ForwardSampler(network, evidence), target, state,
                     np.random.default_rng(seed), seed)
    stream.advance(n)
    return stream.result()


@dataclass(frozen=True)
class SampleDecision:
    decision: str
    choice: str
    estimates: dict[str, EstimateWithSE]
    values: dict[str, tuple[float, float]]
    separated: bool
    confidence: float

    @property
    def mev(self) -> float:
        return self.values[self.choice][0]


def z_value(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise UsageError("confidence must lie strictly between 0 and 1")
    return NormalDist().inv_cdf(0.5 + confidence / 2.0)


def separated_alternative(estimates: Mapping[str, EstimateWithSE], z: float) -> str | None:
    """The alternative whose lower bound beats every other upper bound, if any."""
    for alt, est in estimates.items():
        lower = est.interval(z)[0]
        if all(lower > other.interval(z)[1] for o, other in estimates.items() if o != alt):
            return alt
    return None


def sample_decide(problem: CompiledDecisionProblem, evidence: Assignment | None = None,
                  batch: int = 1024, max_samples: int = 1_000_000, confidence: float = 0.95,
                  seed: int = 0, hypotheticals: Assignment | None = None) -> SampleDecision:
    """Choose the last remaining decision by sampling P(V=T | alternative, E).

    Each alternative has its own random stream seeded from ``(seed, index)``.
    Streams advance ``batch`` draws at a time until one alternative's
    confidence interval lies wholly above all the others, or until each has
    drawn ``max_samples``. Expected values are ``k1 * estimate - k2`` with
    standard error ``k1 * SE``.
    """
    if batch < 1 or max_samples < 1:
        raise UsageError("batch and max_samples must be positive")
    if seed < 0:
        raise UsageError("seed must be nonnegative")
    z = z_value(confidence)
    entries, merged = prepare_decision(problem, evidence, hypotheticals)
    remaining = [e.decision for e in entries if e.decision not in merged]
    if len(remaining) != 1:
        raise UsageError(f"sampling solves a single remaining decision, found {len(remaining)}")
    decision = remaining[0]
    alternatives = problem.alternatives(decision)

    if problem.k1 == 0:
        # constant value function: every alternative is worth -k2 exactly
        ests = {a: EstimateWithSE(1.0, 0.0, 0, 0, seed) for a in alternatives}
        vals = {a: (-problem.k2, 0.0) for a in alternatives}
        return SampleDecision(decision, alternatives[0], ests, vals, True, confidence)

    net = problem.network
    clamp = [d for d in problem.decision_names if not net[d].parents]
    streams = {}
    for i, alt in enumerate(alternatives):
        ev = {**merged, decision: alt}
        sampler = ForwardSampler(net, ev, clamp=[d for d in clamp if d in ev])
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        streams[alt] = _Stream(sampler, problem.value_node, TRUE, rng, seed)

    separated = False
    drawn = 0
    while drawn < max_samples:
        step = min(batch, max_samples - drawn)
        for s in streams.values():
            s.advance(step)
        drawn += step
        if any(s.accepted == 0 for s in streams.values()):
            continue
        ests = {a: s.result() for a, s in streams.items()}
        if separated_alternative(ests, z) is not None:
            separated = True
            break
    ests = {a: s.result() for a, s in streams.items()}
    choice = first_best({a: e.estimate for a, e in ests.items()}, tol=0.0)
    vals = {a: (problem.to_value(e.estimate), problem.k1 * e.standard_error)
            for a, e in ests.items()}
    return SampleDecision(decision, choice, ests, vals, separated, confidence)
