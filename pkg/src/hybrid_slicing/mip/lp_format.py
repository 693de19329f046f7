"""CPLEX LP text export of a MipModel, and a reader for the same dialect."""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from jinja2 import Environment, StrictUndefined

from hybrid_slicing.mip.builder import MipModel, Sense

logger = logging.getLogger(__name__)

LINE_WIDTH = 200

_LP_TEMPLATE = """\\ {{ header }}
Minimize
{{ objective }}
Subject To
{% for row in rows %}{{ row }}
{% endfor %}Bounds
{% for bound in bounds %} {{ bound }}
{% endfor %}Binaries
{% for line in binaries %} {{ line }}
{% endfor %}End
"""

_env = Environment(undefined=StrictUndefined, keep_trailing_newline=True, autoescape=False)
_template = _env.from_string(_LP_TEMPLATE)

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_LABEL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*):(.*)$")
_SECTIONS = {
    "minimize": "objective",
    "subject to": "rows",
    "bounds": "bounds",
    "binaries": "binaries",
    "binary": "binaries",
    "end": "end",
}


class LpFormatError(ValueError):
    """An LP file could not be read."""


def _num(value: float) -> str:
    return format(float(value), ".17g")


def _term_tokens(terms: Iterable[tuple[str, float]]) -> list[str]:
    tokens = []
    for n, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        body = name if magnitude == 1.0 else f"{_num(magnitude)} {name}"
        if n == 0:
            tokens.append(body if sign == "+" else f"- {body}")
        else:
            tokens.append(f"{sign} {body}")
    return tokens


def _wrap(head: str, tokens: list[str]) -> str:
    lines = [head]
    for token in tokens:
        if len(lines[-1]) + len(token) + 1 > LINE_WIDTH:
            lines.append("  " + token)
        else:
            lines[-1] = f"{lines[-1]} {token}"
    return "\n".join(lines)


def render_lp(model: MipModel) -> str:
    """LP text of ``model``; identical models give identical text."""
    rows = []
    for row in model.constraints:
        tokens = _term_tokens(row.terms) + [row.sense.value, _num(row.rhs)]
        rows.append(_wrap(f" {row.name}:", tokens))

    bounds = []
    for var in model.variables:
        if var.binary:
            continue
        if var.lower == var.upper:
            bounds.append(f"{var.name} = {_num(var.lower)}")
        elif var.lower != 0.0 and math.isinf(var.upper):
            bounds.append(f"{var.name} >= {_num(var.lower)}")
        elif var.lower != 0.0 or not math.isinf(var.upper):
            bounds.append(f"{_num(var.lower)} <= {var.name} <= {_num(var.upper)}")

    binaries: list[str] = []
    for name in model.binaries:
        if binaries and len(binaries[-1]) + len(name) + 1 <= LINE_WIDTH:
            binaries[-1] = f"{binaries[-1]} {name}"
        else:
            binaries.append(name)

    counts = model.counts
    return _template.render(
        header=(
            f"{model.kind.value} model, {counts.variables} variables, "
            f"{counts.binaries} binaries, {counts.constraints} constraints, "
            f"big_m={_num(model.big_m)}, epsilon={_num(model.epsilon)}"
        ),
        objective=_wrap(" obj:", _term_tokens(model.objective)),
        rows=rows,
        bounds=bounds,
        binaries=binaries,
    )


def export_lp(model: MipModel, path: str | Path) -> Path:
    """Write ``model`` to ``path`` in LP format."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_lp(model), encoding="utf-8")
    logger.info(f"Wrote {model.kind.value} model to {out}")
    return out


@dataclass(frozen=True)
class ParsedConstraint:
    name: str
    terms: dict[str, float]
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class ParsedLp:
    """What ``parse_lp`` recovers from a file."""

    objective: dict[str, float]
    constraints: tuple[ParsedConstraint, ...]
    variables: frozenset[str]
    binaries: tuple[str, ...]
    bounds: tuple[str, ...]

    @property
    def constraint_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constraints)


def _parse_terms(tokens: list[str], where: str) -> tuple[dict[str, float], Sense | None, float]:
    terms: dict[str, float] = {}
    sign = 1.0
    coef: float | None = None
    sense: Sense | None = None
    rhs = 0.0
    it = iter(tokens)
    for token in it:
        if token in ("+", "-"):
            sign = -1.0 if token == "-" else 1.0
        elif token in ("<=", ">=", "=", "=<", "=>"):
            sense = Sense({"=<": "<=", "=>": ">="}.get(token, token))
            try:
                rhs = float(next(it))
            except (StopIteration, ValueError) as exc:
                raise LpFormatError(f"{where}: missing right-hand side") from exc
        elif _NAME.match(token):
            terms[token] = terms.get(token, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        else:
            try:
                coef = float(token)
            except ValueError as exc:
                raise LpFormatError(f"{where}: unexpected token {token!r}") from exc
    return terms, sense, rhs


def parse_lp(path: str | Path) -> ParsedLp:
    """Read an LP file written by ``export_lp``."""
    text = Path(path).read_text(encoding="utf-8")
    section = None
    chunks: dict[str, list[tuple[str, list[str]]]] = {"objective": [], "rows": []}
    bounds: list[str] = []
    binaries: list[str] = []

    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS and not raw.startswith(" "):
            section = _SECTIONS[key]
            continue
        if section in ("objective", "rows"):
            label = _LABEL.match(line)
            if label:
                chunks[section].append((label.group(1), label.group(2).split()))
            elif chunks[section]:
                chunks[section][-1][1].extend(line.split())
            else:
                raise LpFormatError(f"{path}: expression without a label: {line!r}")
        elif section == "bounds":
            bounds.append(line.strip())
        elif section == "binaries":
            binaries.extend(line.split())
        elif section is None:
            raise LpFormatError(f"{path}: content before the objective section")

    if not chunks["objective"]:
        raise LpFormatError(f"{path}: no objective")
    objective, _, _ = _parse_terms(chunks["objective"][0][1], f"{path}: objective")
    constraints = []
    for name, tokens in chunks["rows"]:
        terms, sense, rhs = _parse_terms(tokens, f"{path}: {name}")
        if sense is None:
            raise LpFormatError(f"{path}: {name} has no sense")
        constraints.append(ParsedConstraint(name, terms, sense, rhs))

    names: set[str] = set(objective) | set(binaries)
    for row in constraints:
        names.update(row.terms)
    for bound in bounds:
        names.update(token for token in bound.split() if _NAME.match(token) and token != "inf")
    return ParsedLp(
        objective=objective,
        constraints=tuple(constraints),
        variables=frozenset(names),
        binaries=tuple(binaries),
        bounds=tuple(bounds),
    )
