"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 parse or validation error,
3 impossible evidence, 4 the sampler accepted nothing or failed to separate.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib.resources import files
from pathlib import Path
from typing import Sequence, TextIO

from . import __version__
from .decide import Policy, extract_policy, mev
from .errors import (EvidenceError, ImpossibleEvidenceError, NoAcceptedSamplesError, ParseError,
                     StructureError, UsageError)
from .exact import query_enumeration, query_ve
from .model import (ROW_SUM_TOLERANCE, BeliefNetwork, InfluenceDiagram, check_evidence,
                    validate_bn, validate_id)
from .sampling import logic_sample, sample_decide
from .textformat import format_number, parse_document, serialize_document
from .transform import CompiledDecisionProblem, format_decision_list, id_to_bn

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_IMPOSSIBLE, EXIT_SAMPLER = 0, 1, 2, 3, 4

ENGINES = {"ve": query_ve, "enum": query_enumeration}


def fmt(x: float) -> str:
    return f"{x:.6f}"


def num(x: float) -> float:
    """The value as printed, so that text and JSON output agree."""
    return float(fmt(x))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_binding(text: str) -> tuple[str, str]:
    name, sep, state = text.partition("=")
    name, state = name.strip(), state.strip()
    if not sep or not name or not state:
        raise UsageError(f"expected Name=state, got {text!r}")
    return name, state


def bind(pairs: Sequence[tuple[str, str]], into: dict[str, str] | None = None) -> dict[str, str]:
    out = dict(into or {})
    for name, state in pairs:
        if name in out:
            raise UsageError(f"{name} is bound more than once")
        out[name] = state
    return out


def read_evidence_file(path: str) -> list[tuple[str, str]]:
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            pairs.append(parse_binding(line))
    return pairs


def gather_evidence(args) -> dict[str, str]:
    pairs = [parse_binding(e) for e in args.evidence or []]
    if getattr(args, "evidence_file", None):
        pairs += read_evidence_file(args.evidence_file)
    return bind(pairs)


def load_text(ref: str) -> str:
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    bundled = files("decnet.fixtures").joinpath(f"{ref}.net")
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise UsageError(f"no such file or bundled fixture: {ref}")


def load_model(ref: str, tol: float = ROW_SUM_TOLERANCE) -> BeliefNetwork | InfluenceDiagram:
    model = parse_document(load_text(ref))
    report = validate_bn(model, tol) if isinstance(model, BeliefNetwork) else validate_id(model, tol)
    if not report.ok:
        raise StructureError(f"{ref} is invalid:\n{report}")
    return model


def load_problem(ref: str, tol: float = ROW_SUM_TOLERANCE) -> CompiledDecisionProblem:
    model = load_model(ref, tol)
    if not isinstance(model, InfluenceDiagram):
        raise UsageError(f"{ref} is a belief network; this command needs an influence diagram")
    return id_to_bn(model, tol=tol)


def load_network(ref: str, tol: float = ROW_SUM_TOLERANCE) -> BeliefNetwork:
    model = load_model(ref, tol)
    if isinstance(model, InfluenceDiagram):
        return id_to_bn(model, tol=tol).network
    return model


def describe(evidence: dict[str, str]) -> str:
    return ", ".join(f"{k}={v}" for k, v in evidence.items())


def conditional(event: str, evidence: dict[str, str]) -> str:
    return f"P({event} | {describe(evidence)})" if evidence else f"P({event})"


def policy_lines(policy: Policy) -> list[str]:
    lines = []
    for decision, table in policy.rules.items():
        variables = policy.variables[decision]
        lines.append(f"{decision} [{', '.join(variables)}]:")
        for key, (alt, value) in table.items():
            cond = ", ".join(f"{v}={s}" for v, s in zip(variables, key)) or "(always)"
            lines.append(f"  {cond} -> {alt} (EV {fmt(value)})")
    return lines


def policy_json(policy: Policy) -> dict:
    return {d: {"variables": list(policy.variables[d]),
                "rules": [{"assignment": dict(zip(policy.variables[d], key)),
                           "alternative": alt, "value": num(value)}
                          for key, (alt, value) in table.items()]}
            for d, table in policy.rules.items()}


# -- subcommands -------------------------------------------------------------

def cmd_validate(args, out: TextIO) -> int:
    model = parse_document(load_text(args.file))
    if isinstance(model, BeliefNetwork):
        kind, report = "network", validate_bn(model, args.tolerance)
    else:
        kind, report = "diagram", validate_id(model, args.tolerance)
    if args.json:
        json.dump({"kind": kind, "ok": report.ok,
                   "violations": [{"node": v.node, "rule": v.rule, "detail": v.detail}
                                  for v in report.violations]}, out, indent=2)
        out.write("\n")
    else:
        out.write(f"{kind} {model.name}: {report}\n")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_infer(args, out: TextIO) -> int:
    net = load_network(args.file, args.tolerance)
    evidence = check_evidence(net, gather_evidence(args))
    target, _, state = args.target.partition("=")
    check_evidence(net, {target: state} if state else {})
    if target not in net:
        raise EvidenceError(f"unknown target {target!r}")
    result = ENGINES[args.engine](net, target, evidence)
    states = [state] if state else list(result.states)
    if args.json:
        json.dump({"target": target, "evidence": evidence, "engine": args.engine,
                   "distribution": {s: num(result[s]) for s in states},
                   "evidence_probability": num(result.evidence_probability)}, out, indent=2)
        out.write("\n")
    else:
        for s in states:
            out.write(f"{conditional(f'{target}={s}', evidence)} = {fmt(result[s])}\n")
    return EXIT_OK


def cmd_transform(args, out: TextIO) -> int:
    problem = load_problem(args.file, args.tolerance)
    text = serialize_document(problem.network)
    k1, k2 = format_number(problem.k1), format_number(problem.k2)
    L = format_decision_list(problem.decisions)
    if args.json:
        json.dump({"network": text, "k1": problem.k1, "k2": problem.k2,
                   "value_node": problem.value_node,
                   "decision_list": [{"decision": e.decision, "info": list(e.info),
                                      "chance_info": list(e.chance_info)}
                                     for e in problem.decisions]}, out, indent=2)
        out.write("\n")
    else:
        out.write(text)
        out.write(f"\n# k1 = {k1}, k2 = {k2}, L = {L}\n")
    return EXIT_OK


def outcome_lines(outcome) -> list[str]:
    lines = [str(outcome)]
    lines += [f"  {alt}: {fmt(v)}" for alt, v in outcome.per_alternative.items()]
    return lines


def cmd_solve(args, out: TextIO) -> int:
    problem = load_problem(args.file, args.tolerance)
    evidence = gather_evidence(args)
    hyp = bind([parse_binding(h) for h in args.hypothetical or []])
    outcome = mev(problem, evidence, hyp, engine=ENGINES[args.engine])
    if args.json:
        json.dump({"decision": outcome.decision, "choice": outcome.first_decision,
                   "mev": num(outcome.mev), "probability": num(outcome.probability),
                   "per_alternative": {a: num(v) for a, v in outcome.per_alternative.items()}},
                  out, indent=2)
        out.write("\n")
    else:
        out.write("\n".join(outcome_lines(outcome)) + "\n")
        out.write(f"  P({problem.value_node}=T) = {fmt(outcome.probability)}\n")
    return EXIT_OK


def cmd_policy(args, out: TextIO) -> int:
    problem = load_problem(args.file, args.tolerance)
    policy = extract_policy(problem, gather_evidence(args),
                            bind([parse_binding(h) for h in args.hypothetical or []]),
                            engine=ENGINES[args.engine], contingent=not args.current)
    if args.json:
        json.dump(policy_json(policy), out, indent=2)
        out.write("\n")
    else:
        out.write("\n".join(policy_lines(policy)) + "\n")
    return EXIT_OK


def cmd_sample(args, out: TextIO) -> int:
    net = load_network(args.file, args.tolerance)
    target, state = parse_binding(args.target)
    evidence = gather_evidence(args)
    est = logic_sample(net, target, state, evidence, args.n, args.seed)
    if args.json:
        json.dump({"target": target, "state": state, "evidence": evidence,
                   "estimate": num(est.estimate), "standard_error": num(est.standard_error),
                   "drawn": est.drawn, "accepted": est.accepted, "seed": est.seed}, out, indent=2)
        out.write("\n")
    else:
        out.write(f"{conditional(f'{target}={state}', evidence)} ~ {fmt(est.estimate)} "
                  f"+/- {fmt(est.standard_error)} (accepted {est.accepted} of {est.drawn}, "
                  f"seed {est.seed})\n")
    return EXIT_OK


def cmd_sample_solve(args, out: TextIO) -> int:
    problem = load_problem(args.file, args.tolerance)
    result = sample_decide(problem, gather_evidence(args), batch=args.batch,
                           max_samples=args.max_samples, confidence=args.confidence,
                           seed=args.seed,
                           hypotheticals=bind([parse_binding(h) for h in args.hypothetical or []]))
    if args.json:
        json.dump({"decision": result.decision, "choice": result.choice,
                   "mev": num(result.mev), "separated": result.separated,
                   "confidence": result.confidence,
                   "alternatives": {a: {"value": num(v), "standard_error": num(se),
                                        "estimate": num(result.estimates[a].estimate),
                                        "accepted": result.estimates[a].accepted,
                                        "drawn": result.estimates[a].drawn}
                                    for a, (v, se) in result.values.items()}}, out, indent=2)
        out.write("\n")
    else:
        status = "separated" if result.separated else "NOT separated"
        out.write(f"decision {result.decision} = {result.choice}, MEV ~ {fmt(result.mev)} "
                  f"({status} at {result.confidence:g} confidence)\n")
        for a, (v, se) in result.values.items():
            e = result.estimates[a]
            out.write(f"  {a}: {fmt(v)} +/- {fmt(se)} (accepted {e.accepted} of {e.drawn})\n")
    return EXIT_OK if result.separated else EXIT_SAMPLER


def cmd_session(args, out: TextIO) -> int:
    from .session import Session

    problem = load_problem(args.file, args.tolerance)
    session = Session(problem, out, engine=ENGINES[args.engine])
    stream = args.input or sys.stdin
    session.run(stream, prompt="decnet> " if stream.isatty() else None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tolerance", type=float, default=ROW_SUM_TOLERANCE,
                        help="CPT row-sum tolerance (default %(default)g)")

    def with_evidence(p):
        p.add_argument("--evidence", "-e", action="append", metavar="NAME=STATE")
        p.add_argument("--evidence-file", metavar="PATH")

    parser = _Parser(prog="decnet", description="Solve influence diagrams with belief-network "
                     "inference.")
    parser.add_argument("--version", action="version", version=f"decnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a network or diagram")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("infer", parents=[common], help="posterior of one node")
    p.add_argument("file")
    p.add_argument("--target", required=True, metavar="NAME[=STATE]")
    p.add_argument("--engine", choices=sorted(ENGINES), default="ve")
    with_evidence(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("transform", parents=[common], help="compile a diagram to a network")
    p.add_argument("file")
    p.set_defaults(func=cmd_transform)

    for name, func, helptext in (("solve", cmd_solve, "best first decision (exact)"),
                                 ("policy", cmd_policy, "contingent policy table")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("file")
        p.add_argument("--engine", choices=sorted(ENGINES), default="ve")
        p.add_argument("--hypothetical", action="append", metavar="NAME=STATE")
        with_evidence(p)
        p.set_defaults(func=func)
    p.add_argument("--current", action="store_true",
                   help="drop unobserved predecessors instead of enumerating them")

    p = sub.add_parser("sample", parents=[common], help="logic-sampling estimate")
    p.add_argument("file")
    p.add_argument("--target", required=True, metavar="NAME=STATE")
    p.add_argument("-n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    with_evidence(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sample-solve", parents=[common], help="best decision by sampling")
    p.add_argument("file")
    p.add_argument("--max-samples", type=int, default=1_000_000)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hypothetical", action="append", metavar="NAME=STATE")
    with_evidence(p)
    p.set_defaults(func=cmd_sample_solve)

    p = sub.add_parser("session", parents=[common], help="interactive sequential decisions")
    p.add_argument("file")
    p.add_argument("--engine", choices=sorted(ENGINES), default="ve")
    p.add_argument("--input", type=argparse.FileType("r"), help="read commands from a file")
    p.set_defaults(func=cmd_session)
    return parser


def run_cli(argv: Sequence[str] | None = None, out: TextIO | None = None,
            err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ParseError, StructureError, EvidenceError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID
    except ImpossibleEvidenceError as exc:
        err.write(f"impossible evidence: {exc}\n")
        return EXIT_IMPOSSIBLE
    except NoAcceptedSamplesError as exc:
        err.write(f"sampler: {exc}\n")
        return EXIT_SAMPLER


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
