"""Reaction networks under mass-action kinetics.

Species are indexed from 0 internally. Names (``X1``, ``X2``, ...) only
matter for text formats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class NetworkError(ValueError):
    """Malformed network, reaction, or evaluation input."""


class NotFullyOpenError(NetworkError):
    """The network lacks an inflow or outflow for some species."""


@dataclass(frozen=True)
class Complex:
    """Non-negative integer combination of species.

    ``terms`` holds ``(species, coefficient)`` pairs sorted by species, with
    zero coefficients dropped. The empty complex is the zero complex.
    """

    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        seen = set()
        for species, coeff in self.terms:
            if not isinstance(coeff, (int, np.integer)) or coeff <= 0:
                raise NetworkError(f"coefficient must be a positive integer, got {coeff!r}")
            if species < 0:
                raise NetworkError(f"negative species index {species}")
            if species in seen:
                raise NetworkError(f"species {species} repeated in complex")
            seen.add(species)
        object.__setattr__(self, "terms", tuple(sorted((int(s), int(c)) for s, c in self.terms)))

    @classmethod
    def of(cls, coefficients: Mapping[int, int] | None = None) -> "Complex":
        coefficients = coefficients or {}
        return cls(tuple((s, c) for s, c in coefficients.items() if c != 0))

    @classmethod
    def species(cls, index: int, coeff: int = 1) -> "Complex":
        return cls(((index, coeff),))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_single(self) -> bool:
        """True for a lone species with coefficient 1."""
        return len(self.terms) == 1 and self.terms[0][1] == 1

    def as_dict(self) -> dict[int, int]:
        return dict(self.terms)

    def vector(self, n: int) -> np.ndarray:
        v = np.zeros(n, dtype=np.int64)
        for s, c in self.terms:
            v[s] = c
        return v

    def max_species(self) -> int:
        return max((s for s, _ in self.terms), default=-1)


ZERO = Complex()


class ReactionKind(enum.Enum):
    INTERNAL = "internal"
    OUTFLOW = "outflow"
    INFLOW = "inflow"


def classify(reactant: Complex, product: Complex) -> ReactionKind:
    if product.is_zero and reactant.is_single:
        return ReactionKind.OUTFLOW
    if reactant.is_zero and product.is_single:
        return ReactionKind.INFLOW
    return ReactionKind.INTERNAL


@dataclass(frozen=True)
class Reaction:
    """A reaction ``reactant -> product``; the kind follows from its shape."""

    reactant: Complex
    product: Complex
    kind: ReactionKind = field(init=False)

    def __post_init__(self):
        if self.reactant == self.product:
            raise NetworkError("reactant equals product")
        object.__setattr__(self, "kind", classify(self.reactant, self.product))

    @classmethod
    def outflow(cls, i: int) -> "Reaction":
        return cls(Complex.species(i), ZERO)

    @classmethod
    def inflow(cls, i: int) -> "Reaction":
        return cls(ZERO, Complex.species(i))

    @property
    def flow_species(self) -> int | None:
        """Species carried by a flow reaction, ``None`` for internal ones."""
        if self.kind is ReactionKind.OUTFLOW:
            return self.reactant.terms[0][0]
        if self.kind is ReactionKind.INFLOW:
            return self.product.terms[0][0]
        return None


def default_names(n: int) -> tuple[str, ...]:
    return tuple(f"X{i + 1}" for i in range(n))


@dataclass(frozen=True)
class Network:
    species_count: int
    reactions: tuple[Reaction, ...] = ()
    species_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.species_count < 1:
            raise NetworkError("a network needs at least one species")
        object.__setattr__(self, "reactions", tuple(self.reactions))
        names = tuple(self.species_names) or default_names(self.species_count)
        if len(names) != self.species_count:
            raise NetworkError("species_names length differs from species_count")
        if len(set(names)) != len(names):
            raise NetworkError("duplicate species names")
        object.__setattr__(self, "species_names", names)
        for k, rxn in enumerate(self.reactions):
            top = max(rxn.reactant.max_species(), rxn.product.max_species())
            if top >= self.species_count:
                raise NetworkError(f"reaction {k + 1} uses species index {top} "
                                   f"but the network has {self.species_count} species")

    @property
    def reaction_count(self) -> int:
        return len(self.reactions)

    def indices(self, *kinds: ReactionKind) -> list[int]:
        return [k for k, r in enumerate(self.reactions) if r.kind in kinds]

    @property
    def internal(self) -> list[int]:
        return self.indices(ReactionKind.INTERNAL)

    @property
    def outflows(self) -> list[int]:
        return self.indices(ReactionKind.OUTFLOW)

    @property
    def inflows(self) -> list[int]:
        return self.indices(ReactionKind.INFLOW)

    @property
    def non_inflow(self) -> list[int]:
        """Internal and outflow reactions in network order (the eta index set)."""
        return self.indices(ReactionKind.INTERNAL, ReactionKind.OUTFLOW)

    def flow_index(self, kind: ReactionKind) -> dict[int, int]:
        """Map species -> reaction index of its (first) flow of ``kind``."""
        out: dict[int, int] = {}
        for k in self.indices(kind):
            out.setdefault(self.reactions[k].flow_species, k)
        return out

    @property
    def is_fully_open(self) -> bool:
        n = self.species_count
        return (len(self.flow_index(ReactionKind.OUTFLOW)) == n
                and len(self.flow_index(ReactionKind.INFLOW)) == n)

    def reactant_matrix(self) -> np.ndarray:
        """Species x reactions matrix of reactant coefficients."""
        return np.array([r.reactant.vector(self.species_count) for r in self.reactions],
                        dtype=np.int64).reshape(-1, self.species_count).T

    def with_names(self, names: Sequence[str]) -> "Network":
        return Network(self.species_count, self.reactions, tuple(names))


def canonical_order(net: Network) -> list[int]:
    """Permutation putting internal reactions first, then outflows by species,
    then inflows by species."""
    by_species = lambda ks: sorted(ks, key=lambda k: (net.reactions[k].flow_species, k))
    return net.internal + by_species(net.outflows) + by_species(net.inflows)


def fully_open_extension(net: Network) -> Network:
    """Add ``Xi -> 0`` and ``0 -> Xi`` for every species lacking them.

    The result is in canonical order. Flows already present are kept (and
    moved into place), so applying this twice gives the same network.
    """
    extended = list(net.reactions)
    have_out = net.flow_index(ReactionKind.OUTFLOW)
    have_in = net.flow_index(ReactionKind.INFLOW)
    for i in range(net.species_count):
        if i not in have_out:
            extended.append(Reaction.outflow(i))
    for i in range(net.species_count):
        if i not in have_in:
            extended.append(Reaction.inflow(i))
    tmp = Network(net.species_count, tuple(extended), net.species_names)
    return Network(net.species_count, tuple(tmp.reactions[k] for k in canonical_order(tmp)),
                   net.species_names)


def build_sequestration(m: int, n: int) -> Network:
    """The fully open sequestration network with ``3n`` reactions.

    Internal reactions are ``X1+X2 -> 0, ..., X(n-1)+Xn -> 0, X1 -> m Xn``.
    """
    if int(m) != m or m < 1:
        raise NetworkError(f"m must be an integer >= 1, got {m!r}")
    if int(n) != n or n < 2:
        raise NetworkError(f"n must be an integer >= 2, got {n!r}")
    m, n = int(m), int(n)
    internal = [Reaction(Complex(((i, 1), (i + 1, 1))), ZERO) for i in range(n - 1)]
    internal.append(Reaction(Complex.species(0), Complex.species(n - 1, m)))
    return fully_open_extension(Network(n, tuple(internal)))


def stoichiometric_matrix(net: Network) -> np.ndarray:
    n = net.species_count
    cols = [r.product.vector(n) - r.reactant.vector(n) for r in net.reactions]
    if not cols:
        return np.zeros((n, 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def _monomial(x: Sequence[float], terms: Iterable[tuple[int, int]], skip: int = -1) -> float:
    # integer powers by repeated multiplication; `skip` lowers that species' exponent by one
    value = 1.0
    for s, c in terms:
        if s == skip:
            c -= 1
        for _ in range(c):
            value *= x[s]
    return value


def _check_dims(net: Network, rates, x) -> tuple[np.ndarray, np.ndarray]:
    rates = np.asarray(rates, dtype=float)
    x = np.asarray(x, dtype=float)
    if rates.shape != (net.reaction_count,):
        raise NetworkError(f"expected {net.reaction_count} rates, got shape {rates.shape}")
    if x.shape != (net.species_count,):
        raise NetworkError(f"expected {net.species_count} concentrations, got shape {x.shape}")
    return rates, x


def reaction_fluxes(net: Network, rates, x) -> np.ndarray:
    """Reactant vector R(x): rate times reactant monomial, per reaction."""
    rates, x = _check_dims(net, rates, x)
    return np.array([rates[k] * _monomial(x, r.reactant.terms)
                     for k, r in enumerate(net.reactions)])


def ode_rhs(net: Network, rates, x) -> np.ndarray:
    """Mass-action right-hand side ``Gamma @ R(x)``."""
    flux = reaction_fluxes(net, rates, x)
    return stoichiometric_matrix(net).astype(float) @ flux


def jacobian(net: Network, rates, x) -> np.ndarray:
    """Analytic Jacobian of :func:`ode_rhs` with respect to concentrations."""
    rates, x = _check_dims(net, rates, x)
    n = net.species_count
    gamma = stoichiometric_matrix(net).astype(float)
    jac = np.zeros((n, n))
    for k, rxn in enumerate(net.reactions):
        for j, c in rxn.reactant.terms:
            jac[:, j] += gamma[:, k] * (c * rates[k] * _monomial(x, rxn.reactant.terms, skip=j))
    return jac


def jacobian_determinant(net: Network, rates, x) -> float:
    return float(np.linalg.det(jacobian(net, rates, x)))


def hadamard_bound(mat) -> float:
    """Product of row 2-norms, an upper bound on ``|det(mat)|``."""
    mat = np.asarray(mat, dtype=float)
    return float(np.prod(np.linalg.norm(mat, axis=1)))


def equilibrated_hadamard_bound(mat, sweeps: int = 4) -> float:
    """Hadamard bound after power-of-two row/column equilibration, scaled back.

    Still an upper bound on ``|det(mat)|``, but unchanged by diagonal rescaling
    of rows or columns. Jacobians at concentrations spanning many orders of
    magnitude need this; the plain bound overshoots by dozens of decades there.
    """
    a = np.array(mat, dtype=float)
    log2_scale = 0
    for _ in range(sweeps):
        for axis in (1, 0):
            peak = np.abs(a).max(axis=axis)
            if np.any(peak == 0):
                return 0.0
            _, exps = np.frexp(peak)
            a = np.ldexp(a, -np.expand_dims(exps, axis))
            log2_scale += int(exps.sum())
    return float(np.ldexp(hadamard_bound(a), log2_scale))


def is_singular(mat, tol: float) -> bool:
    """Scale-aware zero test: ``|det| <= tol * equilibrated_hadamard_bound``."""
    bound = equilibrated_hadamard_bound(mat)
    if bound == 0.0:
        return True
    return abs(np.linalg.det(np.asarray(mat, dtype=float))) <= tol * bound


def is_nondegenerate(net: Network, rates, x, tol: float = 1e-9) -> bool:
    """Whether the Jacobian at ``x`` is nonsingular, relative to its Hadamard bound.

    Only defined for fully open networks, where the stoichiometric matrix has
    full row rank and nondegeneracy reduces to a nonzero determinant.
    """
    if not net.is_fully_open:
        raise NotFullyOpenError("nondegeneracy test needs a fully open network "
                                "(conservation laws are not handled)")
    return not is_singular(jacobian(net, rates, x), tol)
