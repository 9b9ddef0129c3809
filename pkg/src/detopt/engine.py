"""Constructive determinant optimization.

Given a fully open network and ``n`` internal/outflow reactions meeting the
sign and positivity hypotheses, build rates plus two positive steady states:
``x* = (1, ..., 1)`` and ``x# = exp(delta)``.

Weight vectors (``eta``) are indexed by ``net.non_inflow``, i.e. internal and
outflow reactions in network order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .model import (
    Network,
    NotFullyOpenError,
    ReactionKind,
    hadamard_bound,
    is_singular,
    jacobian,
    reaction_fluxes,
    stoichiometric_matrix,
)


class MethodError(Exception):
    """A stage of the construction could not complete.

    ``stage`` is filled in by :func:`run_method`.
    """

    stage: str | None = None

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class Inconclusive(MethodError):
    """The method did not apply; says nothing about multistationarity."""


class HypothesisFailed(Inconclusive):
    pass


class NoEtaMinusFound(Inconclusive):
    pass


class NoEtaPlusFound(Inconclusive):
    pass


class BisectionFailed(Inconclusive):
    def __init__(self, msg, bracket=None):
        super().__init__(msg)
        self.bracket = bracket


class NonPositiveSolution(Inconclusive):
    pass


class InflowNotPositive(Inconclusive):
    pass


class RankDeficiencyError(MethodError):
    pass


class CertificateRejected(MethodError):
    """Construction finished but the certificate failed verification."""

    def __init__(self, msg, certificate=None):
        super().__init__(msg)
        self.certificate = certificate


@dataclass(frozen=True)
class HypothesisWitness:
    """``n`` internal/outflow reactions (network indices) and their weights."""

    reaction_indices: tuple[int, ...]
    eta_tilde: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "reaction_indices", tuple(int(k) for k in self.reaction_indices))
        object.__setattr__(self, "eta_tilde", tuple(float(v) for v in self.eta_tilde))
        if len(set(self.reaction_indices)) != len(self.reaction_indices):
            raise ValueError("witness reaction indices must be distinct")
        if len(self.eta_tilde) != len(self.reaction_indices):
            raise ValueError("eta_tilde length differs from the number of witness reactions")
        if any(not v > 0 for v in self.eta_tilde):
            raise ValueError("eta_tilde entries must be strictly positive")

    def validate(self, net: Network) -> None:
        allowed = set(net.non_inflow)
        bad = [k for k in self.reaction_indices if k not in allowed]
        if bad:
            raise ValueError(f"witness reactions {[k + 1 for k in bad]} are not internal or outflow")
        if len(self.reaction_indices) != net.species_count:
            raise ValueError(f"witness needs {net.species_count} reactions, "
                             f"got {len(self.reaction_indices)}")


def _reaction_vectors(net: Network, indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Columns ``y`` and ``y - y'`` for the given reactions."""
    n = net.species_count
    ys = np.array([net.reactions[k].reactant.vector(n) for k in indices], dtype=float).reshape(-1, n).T
    ps = np.array([net.reactions[k].product.vector(n) for k in indices], dtype=float).reshape(-1, n).T
    return ys, ys - ps


def check_condition_i(net: Network, witness: HypothesisWitness) -> tuple[bool, float, float]:
    """Sign test ``det(y_1..y_n) * det(y_1-y_1', ..., y_n-y_n') < 0``.

    Returns ``(holds, det_reactants, det_reaction_vectors)``. The weights in
    the witness play no part.
    """
    witness.validate(net)
    ys, diffs = _reaction_vectors(net, witness.reaction_indices)
    d_y = float(np.linalg.det(ys))
    d_diff = float(np.linalg.det(diffs))
    # both matrices are integral, so the determinants are integers
    d_y, d_diff = float(round(d_y)), float(round(d_diff))
    return d_y * d_diff < 0, d_y, d_diff


def check_condition_ii(net: Network, witness: HypothesisWitness) -> tuple[bool, np.ndarray]:
    witness.validate(net)
    _, diffs = _reaction_vectors(net, witness.reaction_indices)
    total = diffs @ np.asarray(witness.eta_tilde)
    return bool(np.all(total > 0)), total


def weighted_sum(net: Network, eta) -> np.ndarray:
    """``sum eta_k (y_k - y_k')`` over internal and outflow reactions."""
    idx = net.non_inflow
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (len(idx),):
        raise ValueError(f"eta must have {len(idx)} entries, got shape {eta.shape}")
    _, diffs = _reaction_vectors(net, idx)
    return diffs @ eta


def build_t_eta(net: Network, eta) -> np.ndarray:
    """Matrix of ``delta -> sum eta (y . delta)(y - y')``.

    Equals minus the Jacobian at the all-ones point with rates ``eta`` on the
    internal and outflow reactions.
    """
    idx = net.non_inflow
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (len(idx),):
        raise ValueError(f"eta must have {len(idx)} entries, got shape {eta.shape}")
    ys, diffs = _reaction_vectors(net, idx)
    return (diffs * eta) @ ys.T


def det_t_eta(net: Network, eta) -> float:
    return float(np.linalg.det(build_t_eta(net, eta)))


def eta_as_rates(net: Network, eta, inflow: float = 1.0) -> np.ndarray:
    """Full rate vector with ``eta`` on internal/outflow reactions."""
    rates = np.full(net.reaction_count, float(inflow))
    rates[net.non_inflow] = eta
    return rates


DEFAULT_LAMBDA_GRID = tuple(10.0 ** k for k in range(0, 7))
DEFAULT_EPS_GRID = tuple(10.0 ** -k for k in range(0, 7))


def construct_eta_minus(net: Network, witness: HypothesisWitness,
                        lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                        eps_grid: Sequence[float] = DEFAULT_EPS_GRID) -> np.ndarray:
    """Scan ``lambda`` (outer, ascending) and ``eps`` (inner, descending) for a
    weight vector with ``det(T) < 0`` and positive weighted sum.

    Witness reactions get ``lambda * eta_tilde``, all others ``eps``.
    """
    ok_i, *_ = check_condition_i(net, witness)
    if not ok_i:
        raise HypothesisFailed("condition I fails for this witness")
    ok_ii, _ = check_condition_ii(net, witness)
    if not ok_ii:
        raise HypothesisFailed("condition II fails for this witness")
    position = {k: j for j, k in enumerate(net.non_inflow)}
    for lam in lambda_grid:
        for eps in eps_grid:
            eta = np.full(len(position), float(eps))
            for k, w in zip(witness.reaction_indices, witness.eta_tilde):
                eta[position[k]] = lam * w
            if det_t_eta(net, eta) < 0 and np.all(weighted_sum(net, eta) > 0):
                return eta
    raise NoEtaMinusFound("no (lambda, eps) grid point gave det(T) < 0 with positive weighted sum")


def construct_eta_plus(net: Network, lambda_plus: float = 1e3, eps_plus: float = 1e-3,
                       max_tries: int = 12) -> np.ndarray:
    """Large weights on outflows, small on internal reactions, until ``det(T) > 0``.

    The ratio between the two grows tenfold per try.
    """
    if not net.is_fully_open:
        raise NotFullyOpenError("eta+ construction needs every outflow reaction")
    outflow = set(net.outflows)
    kinds = np.array([k in outflow for k in net.non_inflow])
    lam, eps = float(lambda_plus), float(eps_plus)
    for _ in range(max_tries):
        eta = np.where(kinds, lam, eps)
        if det_t_eta(net, eta) > 0 and np.all(weighted_sum(net, eta) > 0):
            return eta
        lam *= 10.0
        eps /= 10.0
    raise NoEtaPlusFound(f"det(T) stayed non-positive after {max_tries} tries")


def interpolate_eta_zero(net: Network, eta_minus, eta_plus, tol: float = 1e-10,
                         max_iter: int = 200) -> np.ndarray:
    """Bisect along the segment from ``eta_minus`` to ``eta_plus`` for ``det(T) = 0``.

    Stops once ``|det| <= tol * hadamard_bound``. Both ends satisfy the
    positivity condition, and so does every convex combination.
    """
    lo = np.asarray(eta_minus, dtype=float)
    hi = np.asarray(eta_plus, dtype=float)
    if lo.shape != hi.shape:
        raise ValueError("eta vectors differ in length")
    if np.array_equal(lo, hi):
        raise ValueError("eta_minus and eta_plus coincide")
    d_lo, d_hi = det_t_eta(net, lo), det_t_eta(net, hi)
    if not (d_lo < 0 < d_hi):
        raise ValueError(f"need det(T(eta-)) < 0 < det(T(eta+)), got {d_lo:g} and {d_hi:g}")
    for name, vec in (("eta_minus", lo), ("eta_plus", hi)):
        if not np.all(weighted_sum(net, vec) > 0):
            raise ValueError(f"{name} violates the positivity condition")

    # Keep halving past `tol` while the bracket still shrinks: the certificate's
    # second steady-state residual is proportional to the leftover determinant.
    a, b = 0.0, 1.0
    best, best_ratio = None, math.inf
    for _ in range(max_iter):
        t = 0.5 * (a + b)
        if t in (a, b):
            break
        eta = (1.0 - t) * lo + t * hi
        t_mat = build_t_eta(net, eta)
        d = float(np.linalg.det(t_mat))
        ratio = abs(d) / hadamard_bound(t_mat)
        if ratio < best_ratio:
            best, best_ratio = eta, ratio
        if d == 0:
            break
        if d < 0:
            a = t
        else:
            b = t
    if best_ratio <= tol:
        return best
    raise BisectionFailed(f"tolerance {tol:g} not reached in {max_iter} iterations",
                          bracket=((1.0 - a) * lo + a * hi, (1.0 - b) * lo + b * hi))


def solve_eta_zero_free_variable(net: Network, eta_base, free_index: int) -> np.ndarray:
    """Make ``det(T) = 0`` by solving for one weight, others fixed.

    ``free_index`` is a network reaction index whose reaction vector
    ``y - y'`` is non-negative (an outflow, typically). The determinant is
    affine in a weight that enters only through a rank-one term, so two
    evaluations pin the line down.
    """
    idx = net.non_inflow
    if free_index not in idx:
        raise ValueError(f"reaction {free_index + 1} is not internal or outflow")
    j = idx.index(free_index)
    _, diffs = _reaction_vectors(net, [free_index])
    if np.any(diffs < 0):
        raise ValueError(f"reaction {free_index + 1} has a negative reaction-vector entry")
    eta = np.array(eta_base, dtype=float)
    rest = eta.copy()
    rest[j] = 0.0
    if not np.all(weighted_sum(net, rest) > 0):
        raise ValueError("weights without the free reaction violate the positivity condition")

    # det(T_rest + w * outer(d, y)) = det(T_rest) + w * (y . adj(T_rest) d): affine in w
    at0, at1 = rest.copy(), rest.copy()
    at1[j] = 1.0
    d0, d1 = det_t_eta(net, at0), det_t_eta(net, at1)
    slope = d1 - d0
    scale = max(abs(d0), abs(d1), hadamard_bound(build_t_eta(net, at1)))
    if abs(slope) <= 1e-14 * scale:
        raise NonPositiveSolution(f"determinant does not depend on reaction {free_index + 1}")
    w = -d0 / slope
    if not w > 0:
        raise NonPositiveSolution(f"free weight solves to {w:g}, not positive")
    eta[j] = w
    return eta


def null_space_delta(t_mat, tol: float = 1e-8) -> np.ndarray:
    """Unit nullvector of a matrix with a one-dimensional kernel.

    The first coordinate that is not negligible is made positive.
    """
    t_mat = np.asarray(t_mat, dtype=float)
    if t_mat.ndim != 2 or t_mat.shape[0] != t_mat.shape[1]:
        raise ValueError("expected a square matrix")
    _, s, vt = np.linalg.svd(t_mat)
    top = s[0]
    deficiency = int(np.sum(s <= tol * top)) if top > 0 else len(s)
    if deficiency != 1:
        raise RankDeficiencyError(f"expected rank deficiency 1, found {deficiency} "
                                  f"(singular values {s})")
    v = vt[-1] / np.linalg.norm(vt[-1])
    lead = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0]
    if v[lead] < 0:
        v = -v
    if np.linalg.norm(t_mat @ v) > tol * np.linalg.norm(t_mat, 2):
        raise RankDeficiencyError("residual of the computed nullvector exceeds tolerance")
    return v


_SERIES_CUTOFF = 1e-4


def phi(u: float) -> float:
    """``u / (exp(u) - 1)``, continuous through ``u = 0`` where it equals 1."""
    if abs(u) < _SERIES_CUTOFF:
        return 1.0 / (1.0 + u / 2.0 + u * u / 6.0 + u * u * u / 24.0)
    if u > 700.0:
        # expm1 overflows; the difference from exp is far below double precision here
        return u * math.exp(-u)
    return u / math.expm1(u)


@dataclass
class Diagnostics:
    residual_star: float
    residual_sharp: float
    det_star: float
    det_sharp: float
    nondegenerate_star: bool
    nondegenerate_sharp: bool
    distinct: bool = True
    rates_positive: bool = True
    scaling: float = 1.0
    tol_residual: float = 1e-10
    tol_det: float = 1e-9

    @property
    def steady(self) -> bool:
        return self.residual_star <= self.tol_residual and self.residual_sharp <= self.tol_residual

    @property
    def passed(self) -> bool:
        """Two distinct positive steady states; nondegeneracy is reported separately."""
        return self.steady and self.distinct and self.rates_positive

    @property
    def nondegenerate(self) -> bool:
        return self.nondegenerate_star and self.nondegenerate_sharp


VerificationReport = Diagnostics


@dataclass(frozen=True)
class Certificate:
    network: Network
    rates: np.ndarray
    x_star: np.ndarray
    x_sharp: np.ndarray
    delta: np.ndarray
    eta_zero: np.ndarray
    diagnostics: Diagnostics | None = field(default=None, compare=False)


def _assemble(net: Network, eta_zero: np.ndarray, delta_hat: np.ndarray) -> np.ndarray:
    idx = net.non_inflow
    ys, diffs = _reaction_vectors(net, idx)
    inner = ys.T @ delta_hat
    r_known = np.array([phi(u) for u in inner]) * eta_zero
    inflow = diffs @ r_known
    rates = np.empty(net.reaction_count)
    rates[idx] = r_known
    inflow_at = net.flow_index(ReactionKind.INFLOW)
    for i in range(net.species_count):
        rates[inflow_at[i]] = inflow[i]
    return rates


def build_certificate(net: Network, eta_zero, delta, scaling: float = 1.0,
                      max_halvings: int = 60, null_tol: float = 1e-8) -> Certificate:
    """Rates and steady states from a degenerate weight vector and its nullvector.

    Internal/outflow rate ``k`` is ``phi(<y_k, d>) * eta_zero_k`` with
    ``d = scaling * delta``. Inflow ``i`` is the ``i``-th entry of
    ``sum r_k (y_k - y_k')`` using those rates, which makes ``(1, ..., 1)``
    an exact steady state. ``scaling`` is halved until every rate is positive.
    """
    if not net.is_fully_open:
        raise NotFullyOpenError("certificate assembly needs an inflow for every species")
    if len(net.inflows) != net.species_count:
        raise ValueError("expected exactly one inflow reaction per species")
    if not scaling > 0:
        raise ValueError("scaling must be positive")
    eta_zero = np.asarray(eta_zero, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if np.any(eta_zero <= 0):
        raise ValueError("eta_zero must be strictly positive")
    if not np.any(delta != 0):
        raise ValueError("delta is zero, so both steady states would coincide")
    t_mat = build_t_eta(net, eta_zero)
    scale = np.abs(t_mat).sum(axis=1).max() * np.abs(delta).max()
    if np.abs(t_mat @ delta).max() > null_tol * scale:
        raise ValueError("delta is not a nullvector of T(eta_zero)")

    s = float(scaling)
    inflow_idx = net.inflows
    for _ in range(max_halvings + 1):
        delta_hat = s * delta
        rates = _assemble(net, eta_zero, delta_hat)
        if np.all(rates[inflow_idx] > 0) and np.all(rates > 0):
            x_sharp = np.exp(delta_hat)
            if np.array_equal(x_sharp, np.ones_like(x_sharp)):
                break
            cert = Certificate(net, rates, np.ones(net.species_count), x_sharp,
                               delta_hat, eta_zero.copy())
            diag = verify_certificate(cert)
            diag.scaling = s
            return replace(cert, diagnostics=diag)
        s *= 0.5
    raise InflowNotPositive(f"inflow rates not all positive after {max_halvings} halvings")


def relative_residual(net: Network, rates, x) -> float:
    """``||Gamma R(x)||_inf`` over the largest single term ``|Gamma_ik R_k(x)|``."""
    gamma = stoichiometric_matrix(net).astype(float)
    terms = gamma * reaction_fluxes(net, rates, x)
    scale = np.abs(terms).max() if terms.size else 0.0
    resid = np.abs(terms.sum(axis=1)).max()
    return float(resid / scale) if scale > 0 else float(resid)


def verify_certificate(cert: Certificate, tol_residual: float = 1e-10,
                       tol_det: float = 1e-9) -> Diagnostics:
    """Recompute residuals and Jacobian determinants at both points.

    Never raises on a bad certificate; every failure shows up in the report.
    """
    net = cert.network
    rates = np.asarray(cert.rates, dtype=float)
    jac_star = jacobian(net, rates, cert.x_star)
    jac_sharp = jacobian(net, rates, cert.x_sharp)
    fully_open = net.is_fully_open
    return Diagnostics(
        residual_star=relative_residual(net, rates, cert.x_star),
        residual_sharp=relative_residual(net, rates, cert.x_sharp),
        det_star=float(np.linalg.det(jac_star)),
        det_sharp=float(np.linalg.det(jac_sharp)),
        nondegenerate_star=fully_open and not is_singular(jac_star, tol_det),
        nondegenerate_sharp=fully_open and not is_singular(jac_sharp, tol_det),
        distinct=bool(np.abs(np.asarray(cert.x_star) - np.asarray(cert.x_sharp)).max() > 0),
        rates_positive=bool(np.all(rates > 0) and np.all(np.asarray(cert.x_star) > 0)
                            and np.all(np.asarray(cert.x_sharp) > 0)),
        scaling=cert.diagnostics.scaling if cert.diagnostics else 1.0,
        tol_residual=tol_residual,
        tol_det=tol_det,
    )


@dataclass
class MethodConfig:
    strategy: str = "bisect"  # or "free-variable"
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID
    lambda_plus: float = 1e3
    eps_plus: float = 1e-3
    free_index: int | None = None
    det_tol: float = 1e-10
    rank_tol: float = 1e-8
    scaling: float = 1.0
    tol_residual: float = 1e-10
    tol_det: float = 1e-9


def default_free_index(net: Network, eta_base) -> int:
    """Last outflow whose removal keeps the weighted sum positive."""
    idx = net.non_inflow
    for k in reversed(net.outflows):
        rest = np.array(eta_base, dtype=float)
        rest[idx.index(k)] = 0.0
        if np.all(weighted_sum(net, rest) > 0):
            return k
    raise NonPositiveSolution("no outflow can serve as the free variable")


def run_method(net: Network, witness: HypothesisWitness,
               config: MethodConfig | None = None) -> Certificate:
    """Full pipeline from hypothesis checks to a verified certificate.

    Errors carry the failing stage in their ``stage`` attribute.
    """
    cfg = config or MethodConfig()
    stage = "input"
    try:
        if not net.is_fully_open:
            raise NotFullyOpenError("the method needs a fully open network")
        witness.validate(net)
        stage = "condition-I"
        if not check_condition_i(net, witness)[0]:
            raise HypothesisFailed("determinant sign condition fails")
        stage = "condition-II"
        if not check_condition_ii(net, witness)[0]:
            raise HypothesisFailed("weighted reaction-vector sum is not positive")
        stage = "eta-minus"
        eta_minus = construct_eta_minus(net, witness, cfg.lambda_grid, cfg.eps_grid)
        stage = "eta-zero"
        if cfg.strategy == "bisect":
            stage = "eta-plus"
            eta_plus = construct_eta_plus(net, cfg.lambda_plus, cfg.eps_plus)
            stage = "eta-zero"
            eta_zero = interpolate_eta_zero(net, eta_minus, eta_plus, tol=cfg.det_tol)
        elif cfg.strategy == "free-variable":
            free = cfg.free_index if cfg.free_index is not None else default_free_index(net, eta_minus)
            eta_zero = solve_eta_zero_free_variable(net, eta_minus, free)
        else:
            raise ValueError(f"unknown strategy {cfg.strategy!r}")
        stage = "nullspace"
        delta = null_space_delta(build_t_eta(net, eta_zero), cfg.rank_tol)
        stage = "certificate"
        cert = build_certificate(net, eta_zero, delta, cfg.scaling)
        stage = "verification"
        diag = verify_certificate(cert, cfg.tol_residual, cfg.tol_det)
        diag.scaling = cert.diagnostics.scaling
        cert = replace(cert, diagnostics=diag)
        if not diag.passed:
            raise CertificateRejected("certificate failed verification", certificate=cert)
        return cert
    except MethodError as exc:
        exc.stage = stage
        raise
    except ValueError as exc:
        err = MethodError(str(exc))
        err.stage = stage
        raise err from exc
