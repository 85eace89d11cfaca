"""Random networks, diagrams and evidence for property tests."""

from __future__ import annotations

import itertools

import numpy as np

from decnet.errors import ImpossibleEvidenceError
from decnet.exact import joint_enumeration
from decnet.model import BeliefNetwork, ChanceNode, DecisionNode, InfluenceDiagram, ValueNode


def random_row(rng: np.random.Generator, k: int, zero_rate: float = 0.15) -> tuple[float, ...]:
    p = rng.dirichlet(np.ones(k))
    if k > 1 and rng.random() < zero_rate:
        p[rng.integers(k)] = 0.0
        p = p / p.sum()
    return tuple(float(x) for x in p)


def random_cpt(rng, states, parent_domains, zero_rate=0.15):
    return {key: random_row(rng, len(states), zero_rate)
            for key in itertools.product(*parent_domains)}


def random_network(rng: np.random.Generator, n_nodes: int, max_states: int = 2,
                   max_parents: int = 3, zero_rate: float = 0.15) -> BeliefNetwork:
    nodes: list[ChanceNode] = []
    for i in range(n_nodes):
        k = int(rng.integers(2, max_states + 1))
        states = tuple(f"s{j}" for j in range(k))
        m = int(rng.integers(0, min(i, max_parents) + 1))
        parents = tuple(nodes[j].name for j in sorted(rng.choice(i, size=m, replace=False))) if m else ()
        domains = [nodes[int(p[1:])].states for p in parents]
        nodes.append(ChanceNode(f"X{i}", states, parents, random_cpt(rng, states, domains, zero_rate)))
    # shuffle declaration order so topological sorting is exercised
    order = rng.permutation(n_nodes)
    return BeliefNetwork(tuple(nodes[i] for i in order), "random")


def possible(network: BeliefNetwork, evidence) -> bool:
    try:
        joint_enumeration(network, {}, evidence)
    except ImpossibleEvidenceError:
        return False
    return True


def random_evidence(rng: np.random.Generator, network: BeliefNetwork, candidates=None,
                    max_size: int | None = None, tries: int = 20) -> dict[str, str]:
    """Random evidence with positive probability (possibly empty)."""
    names = list(candidates if candidates is not None else network.names)
    for _ in range(tries):
        size = int(rng.integers(0, (max_size if max_size is not None else len(names)) + 1))
        size = min(size, len(names))
        chosen = [names[i] for i in rng.choice(len(names), size=size, replace=False)] if size else []
        ev = {n: network.states(n)[int(rng.integers(network.cardinality(n)))] for n in chosen}
        if not ev or possible(network, ev):
            return ev
    return {}


def random_diagram(rng: np.random.Generator, max_nodes: int = 9, max_decisions: int = 3,
                   max_states: int = 3, max_parents: int = 2, dyadic: bool = False,
                   zero_rate: float = 0.15) -> InfluenceDiagram:
    """A valid diagram with at most ``max_nodes`` nodes including the value node."""
    n_dec = int(rng.integers(1, max_decisions + 1))
    n_chance = int(rng.integers(0, max_nodes - n_dec))  # leaves room for the value node
    kinds = ["d"] * n_dec + ["c"] * n_chance
    rng.shuffle(kinds)
    domains: dict[str, tuple[str, ...]] = {}
    earlier: list[str] = []
    chance: list[ChanceNode] = []
    decisions: list[DecisionNode] = []
    for kind in kinds:
        k = int(rng.integers(2, max_states + 1))
        if kind == "d":
            name = f"D{len(decisions) + 1}"
            alts = tuple(f"a{j}" for j in range(k))
            pool = [n for n in earlier if rng.random() < 0.5]
            decisions.append(DecisionNode(name, alts, tuple(pool)))
            domains[name] = alts
        else:
            name = f"C{len(chance) + 1}"
            states = tuple(f"s{j}" for j in range(k))
            m = int(rng.integers(0, min(len(earlier), max_parents) + 1))
            parents = tuple(earlier[i] for i in sorted(rng.choice(len(earlier), size=m,
                                                                  replace=False))) if m else ()
            chance.append(ChanceNode(name, states, parents,
                                     random_cpt(rng, states, [domains[p] for p in parents],
                                                zero_rate)))
            domains[name] = states
        earlier.append(name)

    m = int(rng.integers(1, min(len(earlier), 3) + 1))
    vparents = tuple(earlier[i] for i in sorted(rng.choice(len(earlier), size=m, replace=False)))
    table = {}
    for key in itertools.product(*(domains[p] for p in vparents)):
        if dyadic:
            table[key] = float(rng.integers(-40, 41)) / 4.0
        else:
            table[key] = float(rng.uniform(-10, 10))
    return InfluenceDiagram(tuple(chance), tuple(decisions), (ValueNode("V", vparents, table),),
                            "random")


def diagram_descendants(diagram: InfluenceDiagram, roots) -> set[str]:
    kids: dict[str, set[str]] = {}
    for node in diagram.chance:
        for p in node.parents:
            kids.setdefault(p, set()).add(node.name)
    out: set[str] = set()
    stack = list(roots)
    while stack:
        for k in kids.get(stack.pop(), ()):
            if k not in out:
                out.add(k)
                stack.append(k)
    return out


def random_decision_evidence(rng: np.random.Generator, diagram: InfluenceDiagram,
                             network: BeliefNetwork) -> dict[str, str]:
    """Evidence for a solve: a prefix of made decisions plus observations that
    do not depend on any unmade decision."""
    names = diagram.decision_names
    made = int(rng.integers(0, len(names)))
    ev = {d: diagram.states(d)[int(rng.integers(len(diagram.states(d))))] for d in names[:made]}
    blocked = diagram_descendants(diagram, names[made:])
    candidates = [c for c in diagram.chance_names if c not in blocked]
    for _ in range(20):
        extra = random_evidence(rng, network, candidates, max_size=3, tries=1)
        trial = {**ev, **extra}
        if possible(network, trial):
            return trial
    return ev


def decision_chain(rng: np.random.Generator, k: int) -> InfluenceDiagram:
    """Binary chain D1 -> X1 -> D2 -> X2 ... -> Xk -> V, each decision seeing the last X.

    Each X_i depends only on X_(i-1) and D_i, so histories that end in the
    same state share their downstream queries.
    """
    binary = ("s0", "s1")
    chance, decisions = [], []
    prev = None
    for i in range(1, k + 1):
        d = f"D{i}"
        decisions.append(DecisionNode(d, ("a", "b"), (prev,) if prev else ()))
        parents = ((prev,) if prev else ()) + (d,)
        domains = [binary] * (len(parents) - 1) + [("a", "b")]
        chance.append(ChanceNode(f"X{i}", binary, parents,
                                 random_cpt(rng, binary, domains, zero_rate=0.0)))
        prev = f"X{i}"
    table = {key: float(rng.uniform(-10, 10))
             for key in itertools.product(binary, ("a", "b"))}
    return InfluenceDiagram(tuple(chance), tuple(decisions),
                            (ValueNode("V", (prev, f"D{k}"), table),), f"chain{k}")
