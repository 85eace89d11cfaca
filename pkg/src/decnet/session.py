"""Read-eval loop for making a sequence of decisions as evidence arrives."""

from __future__ import annotations

import shlex
from typing import Iterable, TextIO

from .cli import outcome_lines, parse_binding, policy_lines
from .decide import extract_policy, mev
from .errors import DecnetError
from .exact import Engine, query_ve
from .model import check_evidence
from .transform import CompiledDecisionProblem

HELP = """\
commands:
  set NAME=STATE     record an observation
  unset NAME         forget an observation
  solve              best alternative for the next decision
  policy             contingent policy for the remaining decisions
  commit ALTERNATIVE make the next decision and move on
  show               evidence and remaining decisions
  help               this text
  quit               leave the session"""


class Session:
    def __init__(self, problem: CompiledDecisionProblem, out: TextIO, engine: Engine = query_ve):
        self.problem = problem
        self.out = out
        self.engine = engine
        self.evidence: dict[str, str] = {}

    def remaining(self) -> list[str]:
        return [d for d in self.problem.decision_names if d not in self.evidence]

    def say(self, *lines: str) -> None:
        for line in lines:
            self.out.write(line + "\n")

    def execute(self, line: str) -> bool:
        """Run one command line; False once the session should end."""
        words = shlex.split(line, comments=True)
        if not words:
            return True
        cmd, rest = words[0].lower(), words[1:]
        try:
            if cmd in ("quit", "exit"):
                return False
            handler = getattr(self, f"do_{cmd}", None)
            if handler is None:
                self.say(f"error: unknown command {cmd!r} (try 'help')")
            else:
                handler(rest)
        except DecnetError as exc:
            self.say(f"error: {exc}")
        return True

    def run(self, lines: Iterable[str], prompt: str | None = None) -> None:
        for line in lines:
            if prompt:
                self.out.write(prompt)
            if not self.execute(line):
                break

    def do_help(self, args) -> None:
        self.say(HELP)

    def do_show(self, args) -> None:
        ev = ", ".join(f"{k}={v}" for k, v in self.evidence.items()) or "(none)"
        self.say(f"evidence: {ev}",
                 f"remaining decisions: {', '.join(self.remaining()) or '(none)'}")

    def do_set(self, args) -> None:
        if len(args) != 1:
            self.say("error: usage: set NAME=STATE")
            return
        name, state = parse_binding(args[0])
        if name in self.problem.decision_names:
            self.say(f"error: {name} is a decision; use 'commit'")
            return
        if name in self.evidence:
            self.say(f"error: {name} is already {self.evidence[name]}; unset it first")
            return
        self.evidence.update(check_evidence(self.problem.network, {name: state}))
        self.say(f"{name} = {state}")

    def do_unset(self, args) -> None:
        if len(args) != 1 or args[0] not in self.evidence:
            self.say("error: usage: unset NAME, for a node that is set")
            return
        if args[0] in self.problem.decision_names:
            self.say(f"error: {args[0]} has been committed")
            return
        del self.evidence[args[0]]
        self.say(f"{args[0]} unset")

    def do_solve(self, args) -> None:
        if not self.remaining():
            self.say("all decisions have been made")
            return
        self.say(*outcome_lines(mev(self.problem, self.evidence, engine=self.engine)))

    def do_policy(self, args) -> None:
        if not self.remaining():
            self.say("all decisions have been made")
            return
        policy = extract_policy(self.problem, self.evidence, engine=self.engine, contingent=True)
        self.say(*policy_lines(policy))

    def do_commit(self, args) -> None:
        remaining = self.remaining()
        if not remaining:
            self.say("all decisions have been made")
            return
        if len(args) != 1:
            self.say("error: usage: commit ALTERNATIVE")
            return
        decision = remaining[0]
        check_evidence(self.problem.network, {decision: args[0]})
        self.evidence[decision] = args[0]
        nxt = remaining[1] if len(remaining) > 1 else None
        self.say(f"committed {decision} = {args[0]}" +
                 (f"; next decision: {nxt}" if nxt else "; all decisions made"))
