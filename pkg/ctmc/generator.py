"""Generator matrix, embedded jump chain and stationary distribution."""

import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.linalg import expm

from errors import (
    ConsistencyError,
    InvalidInputError,
    NotApplicableError,
    ReducibilityError,
    SingularStateError,
)
from quantizer.state_space import StateSpace

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9
RESIDUAL_TOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GeneratorMatrix:
    """Transition-rate matrix in 1/s; rows sum to zero and the exit rate of
    state m is mu_m = -lambda_mm."""

    entries: np.ndarray
    unvisited: frozenset = frozenset()
    row_sum_tol: float = field(default=ROW_SUM_TOL, compare=False)

    def __post_init__(self):
        entries = _readonly(self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "unvisited", frozenset(int(s) for s in self.unvisited))
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise InvalidInputError(f"generator must be a non-empty square matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InvalidInputError("generator has non-finite entries")
        off = entries[~np.eye(entries.shape[0], dtype=bool)]
        if np.any(off < 0):
            raise InvalidInputError("generator has negative off-diagonal rates")
        if np.any(np.diag(entries) > 0):
            raise InvalidInputError("generator has positive diagonal entries")
        sums = entries.sum(axis=1)
        worst = int(np.argmax(np.abs(sums)))
        if abs(sums[worst]) > self.row_sum_tol:
            raise InvalidInputError(f"generator row {worst} sums to {sums[worst]:.3e}, not 0")

    @classmethod
    def from_off_diagonal(cls, rates, unvisited=frozenset()) -> "GeneratorMatrix":
        """Build from off-diagonal rates; the diagonal is set so rows sum to zero."""
        rates = np.array(rates, dtype=float)
        np.fill_diagonal(rates, 0.0)
        np.fill_diagonal(rates, -rates.sum(axis=1))
        return cls(rates, frozenset(unvisited))

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.entries)


@dataclass(frozen=True)
class EmbeddedChain:
    """Jump probabilities q_mn = lambda_mn / mu_m with zero diagonal."""

    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probabilities", _readonly(self.probabilities))


@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        pi = _readonly(self.probabilities)
        object.__setattr__(self, "probabilities", pi)
        if abs(pi.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"stationary distribution sums to {pi.sum()}")


def embedded_chain(gen: GeneratorMatrix) -> EmbeddedChain:
    mu = gen.exit_rates
    for state in range(gen.n_states):
        if not mu[state] > 0:
            raise SingularStateError(state)
    q = gen.entries / mu[:, np.newaxis]
    np.fill_diagonal(q, 0.0)
    return EmbeddedChain(q)


def communicating_classes(gen: GeneratorMatrix, states=None) -> list[list[int]]:
    """Strongly connected components of the off-diagonal support graph."""
    states = list(range(gen.n_states)) if states is None else list(states)
    graph = nx.DiGraph()
    graph.add_nodes_from(states)
    for m in states:
        for n in states:
            if m != n and gen.entries[m, n] > 0:
                graph.add_edge(m, n)
    return sorted(sorted(c) for c in nx.strongly_connected_components(graph))


def _solve_normalized(sub: np.ndarray) -> np.ndarray:
    # pi Lambda = 0 with the last balance equation replaced by sum(pi) = 1
    a = sub.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(sub.shape[0])
    b[-1] = 1.0
    return np.linalg.solve(a, b)


def _solve_gth(sub: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman state reduction on the off-diagonal rates."""
    a = sub.copy()
    np.fill_diagonal(a, 0.0)
    n = a.shape[0]
    for k in range(n - 1, 0, -1):
        scale = a[k, :k].sum()
        a[:k, k] /= scale
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def stationary(gen: GeneratorMatrix, method: str = "solve", allow_partial: bool = False) -> StationaryDistribution:
    """Unique pi with pi Lambda = 0 and sum(pi) = 1.

    With `allow_partial`, states listed as unvisited are left out of the
    irreducibility check and receive zero probability.
    """
    states = [s for s in range(gen.n_states) if not (allow_partial and s in gen.unvisited)]
    classes = communicating_classes(gen, states)
    if len(classes) != 1:
        raise ReducibilityError(classes)
    sub = gen.entries[np.ix_(states, states)]
    if method == "solve":
        pi_sub = _solve_normalized(sub)
    elif method == "gth":
        pi_sub = _solve_gth(sub) if len(states) > 1 else np.ones(1)
    else:
        raise InvalidInputError(f"unknown stationary method {method!r}")
    pi = np.zeros(gen.n_states)
    pi[states] = pi_sub
    residual = float(np.max(np.abs(pi @ gen.entries)))
    if residual > RESIDUAL_TOL:
        logger.warning("stationary residual %.2e exceeds %.0e", residual, RESIDUAL_TOL)
    return StationaryDistribution(pi)


def strip_movement_state(gen: GeneratorMatrix, ss: StateSpace) -> tuple[GeneratorMatrix, StateSpace]:
    """Drop the movement state's row and column and rebalance the diagonal."""
    if not ss.has_movement:
        raise NotApplicableError("state space has no movement state to strip")
    if gen.n_states != ss.n_states:
        raise ConsistencyError(f"generator has {gen.n_states} states, state space {ss.n_states}")
    last = gen.n_states - 1
    stripped = GeneratorMatrix.from_off_diagonal(
        gen.entries[:last, :last], unvisited={s for s in gen.unvisited if s != last}
    )
    return stripped, ss.without_movement()


def transition_matrix(gen: GeneratorMatrix, t: float) -> np.ndarray:
    """P(t) = exp(Lambda t)."""
    return expm(gen.entries * t)


def mean_sojourn_times(gen: GeneratorMatrix) -> np.ndarray:
    mu = gen.exit_rates
    with np.errstate(divide="ignore"):
        return np.where(mu > 0, 1.0 / np.where(mu > 0, mu, 1.0), np.inf)
