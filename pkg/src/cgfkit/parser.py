"""Text format for programs: parser with positioned errors, canonical printer.

Line-oriented grammar, ``#`` comments::

    program  := defn* "init" solution
    defn     := NAME "=" molecule
    molecule := "0" | choice ("+" choice)*
    choice   := prefix "." cont
    prefix   := "tau" rate? | "?" NAME rate? | "!" NAME rate?
    rate     := "@" positive-decimal
    cont     := "0" | NAME | "(" solution ")"
    solution := item ("|" item)*      item := [INT "*"] NAME | "0"

``NAME = fix X . molecule`` is accepted as sugar: it defines the fresh
reagent ``X`` with the same molecule, so continuations inside the body may
recurse through ``X``.
"""

from __future__ import annotations

import re
from collections import Counter

from .cgf import (
    IN,
    OUT,
    TAU,
    CgfError,
    CgfProgram,
    DuplicateDefinitionError,
    Molecule,
    Prefix,
    Solution,
)

__all__ = ["CgfSyntaxError", "parse_cgf", "print_cgf"]

KEYWORDS = frozenset({"init", "fix", "tau"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[=@.+?!|*()])
    """,
    re.VERBOSE,
)


class CgfSyntaxError(CgfError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class _Line:
    """Token cursor over one source line."""

    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            match = _TOKEN_RE.match(text, pos)
            if match is None:
                raise CgfSyntaxError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
            pos = match.end()
            kind = match.lastgroup or ""
            if kind != "ws":
                self.tokens.append((kind, match.group(), match.start() + 1))
        self.at = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.at] if self.at < len(self.tokens) else None

    def next(self, expected: str | None = None) -> tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise self.error(f"expected {expected or 'more input'} at end of line")
        self.at += 1
        return token

    def accept(self, text: str) -> bool:
        token = self.peek()
        if token is not None and token[1] == text:
            self.at += 1
            return True
        return False

    def expect(self, text: str) -> None:
        token = self.peek()
        if token is None or token[1] != text:
            raise self.error(f"expected {text!r}")
        self.at += 1

    def name(self, what: str = "name") -> str:
        kind, text, _ = self.next(what)
        if kind != "name" or text in KEYWORDS:
            raise self.error(f"expected {what}, got {text!r}", back=1)
        return text

    def error(self, message: str, back: int = 0) -> CgfSyntaxError:
        at = self.at - back
        column = self.tokens[at][2] if at < len(self.tokens) else (self.tokens[-1][2] + len(self.tokens[-1][1]) if self.tokens else 1)
        return CgfSyntaxError(message, self.lineno, column)

    @property
    def done(self) -> bool:
        return self.at >= len(self.tokens)


def _parse_rate(line: _Line) -> float:
    if not line.accept("@"):
        return 1.0
    kind, text, _ = line.next("rate")
    if kind != "number":
        raise line.error("expected a rate after '@'", back=1)
    rate = float(text)
    if rate <= 0:
        raise line.error(f"rate must be positive, got {text}", back=1)
    return rate


def _parse_solution(line: _Line, stop: frozenset[str] = frozenset()) -> Solution:
    counts: Counter[str] = Counter()
    while True:
        kind, text, _ = line.next("species")
        if kind == "number":
            if text == "0":
                pass  # inert item contributes nothing
            elif text.isdigit():
                line.expect("*")
                counts[line.name("species")] += int(text)
            else:
                raise line.error(f"expected an integer multiplicity, got {text!r}", back=1)
        elif kind == "name" and text not in KEYWORDS:
            counts[text] += 1
        else:
            raise line.error(f"expected a solution item, got {text!r}", back=1)
        token = line.peek()
        if token is None or token[1] in stop:
            return Solution.from_counts(counts)
        line.expect("|")


def _parse_continuation(line: _Line) -> Solution:
    token = line.peek()
    if token is None:
        raise line.error("expected a continuation")
    if token[1] == "0":
        line.next()
        return Solution()
    if token[1] == "(":
        line.next()
        solution = _parse_solution(line, stop=frozenset(")"))
        line.expect(")")
        return solution
    return Solution.of(line.name("continuation species"))


def _parse_choice(line: _Line) -> tuple[Prefix, Solution]:
    kind, text, _ = line.next("prefix")
    if text == "tau":
        prefix = Prefix(TAU, None, _parse_rate(line))
    elif text == "?":
        prefix = Prefix(IN, line.name("channel"), _parse_rate(line))
    elif text == "!":
        prefix = Prefix(OUT, line.name("channel"), _parse_rate(line))
    else:
        raise line.error(f"expected 'tau', '?' or '!', got {text!r}", back=1)
    line.expect(".")
    return prefix, _parse_continuation(line)


def _parse_molecule(line: _Line) -> Molecule:
    token = line.peek()
    if token is not None and token[1] == "0" and line.at + 1 == len(line.tokens):
        line.next()
        return Molecule.inert()
    choices = [_parse_choice(line)]
    while line.accept("+"):
        choices.append(_parse_choice(line))
    return Molecule(tuple(choices))


def parse_cgf(text: str) -> CgfProgram:
    """Parse program text, raising positioned errors on malformed input."""
    env: dict[str, Molecule] = {}
    defined_at: dict[str, int] = {}
    init: Solution | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        source = raw.split("#", 1)[0]
        if not source.strip():
            continue
        line = _Line(source, lineno)
        if init is not None:
            raise line.error("nothing may follow the init line")
        head = line.peek()
        if head is not None and head[1] == "init":
            line.next()
            init = _parse_solution(line) if not line.done else None
            if init is None:
                raise line.error("expected a solution after 'init'")
            if not line.done:
                raise line.error("trailing input after the init solution")
            continue
        name = line.name("species name")
        line.expect("=")
        if line.peek() is not None and line.peek()[1] == "fix":
            line.next()
            fix_name = line.name("fix-bound name")
            line.expect(".")
            molecule = _parse_molecule(line)
            if fix_name in env:
                raise DuplicateDefinitionError(
                    f"line {lineno}: fix-bound name {fix_name!r} already defined on line {defined_at[fix_name]}"
                )
            env[fix_name] = molecule
            defined_at[fix_name] = lineno
        else:
            molecule = _parse_molecule(line)
        if not line.done:
            raise line.error("trailing input after the molecule")
        if name in env:
            raise DuplicateDefinitionError(
                f"line {lineno}: species {name!r} already defined on line {defined_at[name]}"
            )
        env[name] = molecule
        defined_at[name] = lineno
    if init is None:
        raise CgfError("missing 'init' line")
    return CgfProgram(env, init)


def _format_rate(rate: float) -> str:
    return repr(rate) if not rate.is_integer() or abs(rate) >= 1e16 else f"{rate:.1f}"


def _format_prefix(prefix: Prefix) -> str:
    rate = _format_rate(prefix.rate)
    if prefix.kind == TAU:
        return f"tau@{rate}"
    mark = "?" if prefix.kind == IN else "!"
    return f"{mark}{prefix.channel}@{rate}"


def _format_continuation(solution: Solution) -> str:
    if not solution:
        return "0"
    if solution.size == 1:
        return solution.species[0]
    return f"( {solution} )"


def _format_molecule(molecule: Molecule) -> str:
    if molecule.is_inert:
        return "0"
    return " + ".join(
        f"{_format_prefix(prefix)} . {_format_continuation(cont)}" for prefix, cont in molecule.choices
    )


def print_cgf(program: CgfProgram) -> str:
    """Canonical text: name-sorted definitions, explicit rates, one init line."""
    lines = [f"{name} = {_format_molecule(program.env[name])}" for name in sorted(program.env)]
    lines.append(f"init {program.init}")
    return "\n".join(lines) + "\n"
