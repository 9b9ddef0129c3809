"""Plain-text reaction network format.

One reaction per line::

    @species X1, X2, X3      # optional; fixes species order
    X1 + X2 -> 0
    X1 -> 2 X3 @ 0.58
    @fully_open              # append missing inflow/outflow reactions

``#`` starts a comment. Coefficients may be glued to the species name
(``2X3``). Either every reaction carries an ``@ rate`` or none does.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .model import (
    Complex,
    Network,
    NetworkError,
    Reaction,
    ZERO,
    canonical_order,
    fully_open_extension,
)

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_TERM_RE = re.compile(r"\s*(?:(\d+)\s*)?([A-Za-z][A-Za-z0-9_]*)\s*$")
_NUMBER_RE = re.compile(r"[+]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
DIRECTIVES = ("fully_open", "species")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column is not None else "") if line else ""
        super().__init__(f"{where}: {message}" if where else message)


@dataclass
class NetworkDocument:
    species_declared: list[str] = field(default_factory=list)
    reaction_lines: list[tuple[dict[str, int], dict[str, int], float | None]] = field(default_factory=list)
    directives: set[str] = field(default_factory=set)


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _parse_complex(text: str, lineno: int, col: int) -> dict[str, int]:
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty complex", lineno, col)
    if stripped == "0":
        return {}
    coeffs: dict[str, int] = {}
    offset = col
    for part in text.split("+"):
        match = _TERM_RE.match(part)
        if not match or not part.strip():
            raise ParseError(f"bad term {part.strip()!r}", lineno, offset)
        coeff = int(match.group(1)) if match.group(1) else 1
        if coeff <= 0:
            raise ParseError(f"coefficient must be positive in {part.strip()!r}", lineno, offset)
        name = match.group(2)
        coeffs[name] = coeffs.get(name, 0) + coeff
        offset += len(part) + 1
    return coeffs


def _parse_rate(text: str, lineno: int, col: int) -> float:
    token = text.strip()
    if not _NUMBER_RE.match(token):
        raise ParseError(f"bad rate {token!r}", lineno, col)
    value = float(token)
    if not value > 0 or not np.isfinite(value):
        raise ParseError(f"rate must be positive and finite, got {token}", lineno, col)
    return value


def parse_document(text: str) -> NetworkDocument:
    doc = NetworkDocument()
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        body = line.strip()
        if body.startswith("@") and "->" not in body:
            word, _, rest = body[1:].partition(" ")
            word = word.strip()
            if word == "fully_open":
                if rest.strip():
                    raise ParseError("@fully_open takes no arguments", lineno)
                doc.directives.add("fully_open")
            elif word == "species":
                if doc.species_declared:
                    raise ParseError("species declared twice", lineno)
                names = [t for t in re.split(r"[\s,]+", rest.strip()) if t]
                for name in names:
                    if not NAME_RE.fullmatch(name):
                        raise ParseError(f"bad species name {name!r}", lineno)
                if len(set(names)) != len(names):
                    raise ParseError("duplicate species in declaration", lineno)
                doc.species_declared = names
                doc.directives.add("species")
            else:
                raise ParseError(f"unknown directive @{word}", lineno, line.find("@") + 1)
            continue
        arrow = line.find("->")
        if arrow < 0:
            raise ParseError("expected '->'", lineno, len(line) - len(line.lstrip()) + 1)
        lhs, rhs = line[:arrow], line[arrow + 2:]
        rate = None
        at = rhs.find("@")
        if at >= 0:
            rate = _parse_rate(rhs[at + 1:], lineno, arrow + 3 + at + 1)
            rhs = rhs[:at]
        reactant = _parse_complex(lhs, lineno, 1)
        product = _parse_complex(rhs, lineno, arrow + 3)
        if reactant == product:
            raise ParseError("reactant equals product", lineno, 1)
        doc.reaction_lines.append((reactant, product, rate))
    return doc


def parse_network(text: str, strict: bool = False) -> tuple[Network, np.ndarray | None]:
    """Parse network text into a :class:`Network` and optional rate vector.

    With ``strict`` every species must appear in an ``@species`` line.
    """
    doc = parse_document(text)
    names = list(doc.species_declared)
    if strict and not names:
        raise ParseError("strict mode needs an @species declaration")
    index = {name: i for i, name in enumerate(names)}
    for reactant, product, _ in doc.reaction_lines:
        for name in (*reactant, *product):
            if name not in index:
                if strict:
                    raise ParseError(f"unknown species {name!r}")
                index[name] = len(names)
                names.append(name)
    if not names:
        raise ParseError("network has no species")

    rated = [rate is not None for *_, rate in doc.reaction_lines]
    if any(rated) and not all(rated):
        raise ParseError("either every reaction has a rate or none does")

    reactions = []
    for reactant, product, _ in doc.reaction_lines:
        to_complex = lambda c: Complex.of({index[s]: v for s, v in c.items()}) if c else ZERO
        try:
            reactions.append(Reaction(to_complex(reactant), to_complex(product)))
        except NetworkError as exc:
            raise ParseError(str(exc)) from exc
    net = Network(len(names), tuple(reactions), tuple(names))
    rates = np.array([rate for *_, rate in doc.reaction_lines], dtype=float) if all(rated) and rated else None

    if "fully_open" in doc.directives:
        extended = fully_open_extension(net)
        if rates is not None:
            if extended.reaction_count != net.reaction_count:
                raise ParseError("@fully_open would add reactions without rates")
            rates = rates[canonical_order(net)]
        net = extended
    return net, rates


def format_complex(c: Complex, names) -> str:
    if c.is_zero:
        return "0"
    return " + ".join(names[s] if k == 1 else f"{k} {names[s]}" for s, k in c.terms)


def format_rate(value: float) -> str:
    return format(float(value), ".17g")


def serialize_network(net: Network, rates=None) -> str:
    """Text that :func:`parse_network` reads back to the same network and rates."""
    if rates is not None:
        rates = np.asarray(rates, dtype=float)
        if rates.shape != (net.reaction_count,):
            raise ValueError(f"expected {net.reaction_count} rates")
    names = net.species_names
    lines = ["@species " + ", ".join(names)]
    for k, rxn in enumerate(net.reactions):
        line = f"{format_complex(rxn.reactant, names)} -> {format_complex(rxn.product, names)}"
        if rates is not None:
            line += f" @ {format_rate(rates[k])}"
        lines.append(line)
    return "\n".join(lines) + "\n"
