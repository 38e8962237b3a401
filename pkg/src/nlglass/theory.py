"""Closed-form quantities: level amplitudes, concentration constants, interval
counts, the low-temperature lower bound on the hierarchical order parameter,
and the high-temperature correlation-sum bound for the long-range chain.

All logarithms are natural. Everything here is a deterministic pure function
of (alpha, beta, N); repeated evaluation is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .model import level_amplitude, level_variance  # re-exported closed forms

__all__ = [
    "level_amplitude", "level_variance", "concentration_R", "num_intervals",
    "lipschitz_prefactor", "lemma8_correction", "lemma7_rhs",
    "f1_pair_expectation", "thm1_lower_bound", "Theorem1Report",
    "LevelQuantities", "level_quantities", "zeta_partial", "ZetaBracket",
    "thm3_threshold", "thm3_correlation_sum_bound", "merge_level",
    "effective_pair_variance",
]

SQRT_2PI_E = math.sqrt(2.0 * math.pi * math.e)


def concentration_R(N: int | None, alpha: float) -> float:
    """R_N = 2(1 - 2^((1-alpha)N)) / (2^alpha - 2); N=None gives the limit R.

    R_N is the squared-Lipschitz budget of the half-to-half log-ratio seen as a
    function of the standardized couplings, summed over levels; it increases in
    N towards R = 2 / (2^alpha - 2).
    """
    if alpha <= 1:
        raise ValueError("alpha must be > 1")
    denom = 2.0 ** alpha - 2.0
    if N is None:
        return 2.0 / denom
    if N < 1:
        raise ValueError("N must be >= 1")
    return 2.0 * (1.0 - 2.0 ** ((1.0 - alpha) * N)) / denom


def num_intervals(N: int, beta: float, alpha: float) -> int:
    """Interval count r_N: the unique integer with sqrt(beta^2 b_N) < r <= 1 + sqrt(beta^2 b_N)."""
    if beta <= 0:
        raise ValueError("interval count undefined at beta = 0")
    s = beta * math.sqrt(level_amplitude(N, alpha))
    return int(math.floor(s)) + 1


def lipschitz_prefactor(N: int, beta: float, alpha: float) -> float:
    """C'_N = beta * 2^(N/2) * R_N^(1/2), the concentration scale of the max term."""
    return beta * 2.0 ** (N / 2.0) * math.sqrt(concentration_R(N, alpha))


def lemma7_rhs(N: int, beta: float, alpha: float) -> float:
    """Upper bound on E[max_k log(Z1_k / Z2_k)]: C'_N * log(r_N * (1 + sqrt(2 pi e)))."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    r = num_intervals(N, beta, alpha)
    return lipschitz_prefactor(N, beta, alpha) * math.log(r * (1.0 + SQRT_2PI_E))


def lemma8_correction(N: int, beta: float, alpha: float) -> float:
    """Per-step loss Delta_N in the order-parameter recursion.

    Delta_N = (2 / (beta^2 b_N)) * (1 + (1 + C'_N) log r_N + C'_N log(1 + sqrt(2 pi e))).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    bN = level_amplitude(N, alpha)
    r = num_intervals(N, beta, alpha)
    c = lipschitz_prefactor(N, beta, alpha)
    return (2.0 / (beta * beta * bN)) * (
        1.0 + (1.0 + c) * math.log(r) + c * math.log(1.0 + SQRT_2PI_E)
    )


@dataclass(frozen=True)
class LevelQuantities:
    """All per-level scalars used by the recursion checks."""

    N: int
    alpha: float
    beta: float
    b_N: float
    x_N: float
    R_N: float
    r_N: int
    C_N: float
    delta_N: float | None  # None for N = 1 (no recursion step into N = 1)


def level_quantities(N: int, beta: float, alpha: float) -> LevelQuantities:
    return LevelQuantities(
        N=N, alpha=alpha, beta=beta,
        b_N=level_amplitude(N, alpha),
        x_N=level_variance(N, beta, alpha),
        R_N=concentration_R(N, alpha),
        r_N=num_intervals(N, beta, alpha),
        C_N=lipschitz_prefactor(N, beta, alpha),
        delta_N=lemma8_correction(N, beta, alpha) if N >= 2 else None,
    )


@lru_cache(maxsize=8)
def _hermite_rule(nodes):
    return roots_hermite(nodes)


def f1_pair_expectation(beta: float, alpha: float, nodes: int = 512) -> float:
    """Disorder-averaged two-spin correlation of the one-level model.

    The two-spin thermal average is tanh of the summed pair couplings, and the
    sum is N(m, m) with m = 2 x_1 = beta^2 * 2^(1-alpha), so this is
    E_{g ~ N(m, m)}[tanh g], evaluated with Gauss-Hermite quadrature. The
    default order keeps the absolute error below 1e-10 over the whole coupling
    range (the integrand's imaginary-axis poles slow convergence most around
    m ~ 10, where 512 nodes still leave < 1e-11).
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if nodes < 64:
        raise ValueError("use at least 64 quadrature nodes")
    m = 2.0 * level_variance(1, beta, alpha)
    if m == 0.0:
        return 0.0
    t, w = _hermite_rule(nodes)
    # g = m + sqrt(2 m) t maps the e^{-t^2} weight onto N(m, m)
    g = m + math.sqrt(2.0 * m) * t
    return float(np.sum(w * np.tanh(g)) / math.sqrt(math.pi))


@dataclass(frozen=True)
class Theorem1Report:
    """Low-temperature lower bound on the hierarchical order parameter.

    total = base - (loss_entropy + loss_geometry + loss_fluct_geometry +
    loss_fluct_scale); valid only for 1 < alpha < 3/2 and
    beta >= 2^((alpha-2)/2) (flag valid_beta).
    """

    alpha: float
    beta: float
    base: float
    loss_entropy: float
    loss_geometry: float
    loss_fluct_geometry: float
    loss_fluct_scale: float
    total: float
    valid_alpha: bool
    valid_beta: bool

    @property
    def valid(self) -> bool:
        return self.valid_alpha and self.valid_beta

    def terms(self) -> tuple:
        return (self.loss_entropy, self.loss_geometry,
                self.loss_fluct_geometry, self.loss_fluct_scale)


def thm1_lower_bound(beta: float, alpha: float) -> Theorem1Report:
    """Evaluate the explicit lower bound m^2 >= base - four loss terms.

    Raises for alpha outside (1, 3/2), where the underlying series diverges
    and two denominators change sign. A beta below 2^((alpha-2)/2) only clears
    the valid_beta flag; the terms are still evaluated verbatim.
    """
    if not 1.0 < alpha < 1.5:
        raise ValueError(f"bound defined only for 1 < alpha < 3/2, got alpha={alpha}")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    R = concentration_R(None, alpha)
    sqrtR = math.sqrt(R)
    log2 = math.log(2.0)
    two_a = 2.0 ** alpha

    base = 0.5 + 0.5 * f1_pair_expectation(beta, alpha)
    loss_entropy = 2.0 ** (2.0 * alpha - 1.0) / (beta * beta * (4.0 - two_a)) \
        * (1.0 + math.log(beta))
    loss_geometry = 4.0 ** (alpha - 1.0) * (two_a * (alpha - 4.0) - 8.0 * (alpha - 3.0)) \
        * log2 / (beta * beta * (4.0 - two_a) ** 2)
    loss_fluct_geometry = 2.0 ** (2.0 * alpha - 1.5) \
        * (two_a * (alpha - 4.0) - 2.0 ** 2.5 * (alpha - 3.0)) * sqrtR * log2 \
        / (beta * (2.0 ** 1.5 - two_a) ** 2)
    loss_fluct_scale = 4.0 ** alpha * sqrtR * math.log(beta + beta * SQRT_2PI_E) \
        / (beta * (4.0 - 2.0 ** (alpha + 0.5)))
    total = base - loss_entropy - loss_geometry - loss_fluct_geometry - loss_fluct_scale
    return Theorem1Report(
        alpha=alpha, beta=beta, base=base,
        loss_entropy=loss_entropy, loss_geometry=loss_geometry,
        loss_fluct_geometry=loss_fluct_geometry, loss_fluct_scale=loss_fluct_scale,
        total=total, valid_alpha=True,
        valid_beta=beta >= 2.0 ** ((alpha - 2.0) / 2.0),
    )


@dataclass(frozen=True)
class ZetaBracket:
    """Certified two-sided estimate of sum_{i>=1} i^(-alpha)."""

    value: float
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


def zeta_partial(alpha: float, tol: float = 1e-10) -> ZetaBracket:
    """Partial sum plus an integral tail bracket of width <= tol.

    Summing i <= m leaves a tail in [(m+1)^(1-alpha), m^(1-alpha)] / (alpha-1);
    m is chosen so the bracket is narrower than tol.
    """
    if alpha <= 1:
        raise ValueError("alpha must be > 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    m = 64
    while _tail_width(m, alpha) > tol:
        m *= 2
        if m > 1 << 34:
            raise ValueError("tol unreachable for this alpha")
    partial = 0.0
    chunk = 1 << 22
    for start in range(1, m + 1, chunk):
        stop = min(m, start + chunk - 1)
        i = np.arange(start, stop + 1, dtype=np.float64)
        partial += float(np.sum(i ** (-alpha)))
    lo = partial + (m + 1.0) ** (1.0 - alpha) / (alpha - 1.0)
    hi = partial + float(m) ** (1.0 - alpha) / (alpha - 1.0)
    return ZetaBracket(value=0.5 * (lo + hi), lo=lo, hi=hi)


def _tail_width(m: int, alpha: float) -> float:
    return (float(m) ** (1.0 - alpha) - (m + 1.0) ** (1.0 - alpha)) / (alpha - 1.0)


def thm3_threshold(alpha: float, tol: float = 1e-10) -> float:
    """High-temperature threshold beta*(alpha) = (32 * zeta(alpha))^(-1/2)."""
    m0 = zeta_partial(alpha, tol).value
    return 1.0 / math.sqrt(32.0 * m0)


def thm3_correlation_sum_bound(beta: float, alpha: float, tol: float = 1e-10) -> float:
    """Bound on max_j sum_i E<s_i s_j> below threshold: 16 b^2 M0 / (1 - 32 b^2 M0)."""
    m0 = zeta_partial(alpha, tol).value
    gap = 1.0 - 32.0 * beta * beta * m0
    if gap <= 0:
        raise ValueError("bound requires 32 beta^2 M0 < 1")
    return 16.0 * beta * beta * m0 / gap


def merge_level(i: int, j: int, N: int) -> int:
    """Smallest level p whose 2^p-blocks contain both sites (1-based, i != j)."""
    if not (1 <= i <= 2 ** N and 1 <= j <= 2 ** N):
        raise ValueError(f"site indices must lie in 1..2^{N}")
    if i == j:
        raise ValueError("merge level needs two distinct sites")
    return ((i - 1) ^ (j - 1)).bit_length()


def effective_pair_variance(N: int, p: int, alpha: float, beta: float = 1.0) -> float:
    """beta^2 R_N(p) with R_N(p) = 2 sum_{q=p..N} b_q / 2^(2q).

    The total hierarchical interaction between a pair that first meets at
    level p is Gaussian with this variance (and this mean times 1/beta).
    """
    if not 1 <= p <= N:
        raise ValueError("need 1 <= p <= N")
    q = np.arange(p, N + 1, dtype=np.float64)
    total = 2.0 * float(np.sum(2.0 ** ((2.0 - alpha) * q) / 4.0 ** q))
    return beta * beta * total
