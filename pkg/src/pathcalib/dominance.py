"""Dominance thresholds for the blended score, with a brute-force oracle.

For two paths j and k scored under d = alpha*n/N + (1-alpha)*m/M there
are two regimes worth bounding:

* step dominance: whenever path j has strictly more verified steps than
  path k (m_j > m_k) but a strictly less frequent answer (n_j < n_k,
  with n_j + n_k <= N since answer groups are disjoint), j still
  outranks k for every admissible count tuple iff

      alpha < N / (M*(N-2) + N)

  The extreme pair is m_j - m_k = 1 against n_k - n_j = N - 2.

* path dominance: whenever path j has the more frequent answer
  (n_j > n_k) but fewer verified steps (m_j < m_k), j outranks k for
  every admissible tuple iff

      alpha > N / (N + 1)

  driven by n_j - n_k = 1 against m_k - m_j = M. The admissible set
  here carries no sum constraint; ``check_dominance`` exposes it as a
  parameter so both readings can be enumerated.

``check_dominance`` verifies the claim by exhaustive enumeration using
exact rational arithmetic. Tightness tests sit exactly at equality
points, where double precision could flip a verdict, so alpha is carried
as a Fraction throughout the oracle; the closed-form thresholds report
both an exact Fraction and a float.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DegenerateEnsemble, InvalidShape

MODE_STEP = "step"
MODE_PATH = "path"


@dataclass(frozen=True)
class DominanceThreshold:
    """A closed-form alpha bound; exact value alongside its float form."""

    value: float
    exact: Fraction
    degenerate: bool = False


def step_dominance_threshold(n_paths: int, step_budget: int) -> DominanceThreshold:
    """Largest alpha below which the step signal decides every admissible pair.

    Vacuous for fewer than 3 paths (no admissible pair exists); the bound
    is then reported as 1 with the degenerate flag set.
    """
    if step_budget < 1:
        raise InvalidShape(f"step budget must be >= 1, got {step_budget}")
    if n_paths < 3:
        return DominanceThreshold(1.0, Fraction(1), degenerate=True)
    exact = Fraction(n_paths, step_budget * (n_paths - 2) + n_paths)
    return DominanceThreshold(float(exact), exact)


def path_dominance_threshold(n_paths: int) -> DominanceThreshold:
    """Smallest alpha above which the path signal decides every admissible pair."""
    if n_paths < 2:
        raise DegenerateEnsemble(f"path dominance needs >= 2 paths, got {n_paths}")
    exact = Fraction(n_paths, n_paths + 1)
    return DominanceThreshold(float(exact), exact)


@dataclass(frozen=True)
class DominancePair:
    """A count tuple witnessing a dominance violation."""

    n_j: int
    n_k: int
    m_j: int
    m_k: int
    d_j: Fraction
    d_k: Fraction


@dataclass(frozen=True)
class DominanceReport:
    holds: bool
    mode: str
    alpha: Fraction
    pairs_checked: int
    counterexample: DominancePair | None = None


def _as_fraction(alpha) -> Fraction:
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, str):
        return Fraction(alpha)
    return Fraction(alpha)  # int and float convert exactly


def check_dominance(
    n_paths: int,
    step_budget: int,
    alpha,
    mode: str,
    *,
    require_sum: bool | None = None,
) -> DominanceReport:
    """Exhaustively test whether d_j > d_k for every admissible count tuple.

    step mode enumerates 1 <= n_j < n_k with n_j + n_k <= N and
    0 <= m_k < m_j <= M; path mode enumerates 1 <= n_k < n_j <= N and
    0 <= m_j < m_k <= M, without a sum constraint unless requested.
    Enumeration is ascending in (n_j, n_k, m_j, m_k) and stops at the
    first violation, which is returned as the counterexample.
    """
    if mode not in (MODE_STEP, MODE_PATH):
        raise ValueError(f"mode must be 'step' or 'path', got {mode!r}")
    if n_paths < 1 or step_budget < 1:
        raise ValueError("n_paths and step_budget must be >= 1")
    a = _as_fraction(alpha)
    if not 0 <= a <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if require_sum is None:
        require_sum = mode == MODE_STEP

    def score(n: int, m: int) -> Fraction:
        return a * Fraction(n, n_paths) + (1 - a) * Fraction(m, step_budget)

    pairs = 0
    if mode == MODE_STEP:
        tuples = (
            (n_j, n_k, m_j, m_k)
            for n_j in range(1, n_paths + 1)
            for n_k in range(n_j + 1, n_paths + 1)
            if not require_sum or n_j + n_k <= n_paths
            for m_j in range(1, step_budget + 1)
            for m_k in range(0, m_j)
        )
    else:
        tuples = (
            (n_j, n_k, m_j, m_k)
            for n_j in range(2, n_paths + 1)
            for n_k in range(1, n_j)
            if not require_sum or n_j + n_k <= n_paths
            for m_j in range(0, step_budget)
            for m_k in range(m_j + 1, step_budget + 1)
        )

    for n_j, n_k, m_j, m_k in tuples:
        pairs += 1
        d_j = score(n_j, m_j)
        d_k = score(n_k, m_k)
        if not d_j > d_k:
            return DominanceReport(
                holds=False,
                mode=mode,
                alpha=a,
                pairs_checked=pairs,
                counterexample=DominancePair(n_j, n_k, m_j, m_k, d_j, d_k),
            )
    return DominanceReport(holds=True, mode=mode, alpha=a, pairs_checked=pairs)
