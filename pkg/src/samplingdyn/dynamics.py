"""Response functions for sampling and logit dynamics.

The sampling response gives the probability that a revising agent plays
the first action when she best-replies to a random sample of opponent
actions: a weighted sum of binomial upper tails, one per sample size.
The logit response is a mixture of logistic curves, one per noise group.
Both are strictly increasing on [0, 1], differentiable, and invertible,
which is what the stability analysis relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np
from scipy import special

from .games import CoordinationGame

# Above this sample size, exact term summation of the binomial tail gives
# way to the regularized incomplete beta identity.
EXACT_TAIL_MAX_K = 60

# Absolute snap applied before integrality-sensitive comparisons, so that
# thresholds like k/(u+1) with u = 1 land on the intended tie branch.
INTEGER_SNAP = 1e-12

_MASS_TOL = 1e-12
_P_TOL = 1e-9


class TieBreak(str, Enum):
    """Best-response tie rule when a sample makes both actions equally good."""

    FAVOR_A = "favor-a"
    FAVOR_B = "favor-b"


def _as_prob_array(p, clip_tol: float = _P_TOL):
    """Validate p in [0, 1] (within clip_tol) and return (array, is_scalar)."""
    arr = np.asarray(p, dtype=float)
    if arr.size == 0:
        return arr, False
    mn, mx = arr.min(), arr.max()
    # NaN propagates into min/max and fails these comparisons
    if not (mn >= -clip_tol and mx <= 1.0 + clip_tol):
        raise ValueError(f"probability input must be finite and in [0, 1]: {p!r}")
    if mn < 0.0 or mx > 1.0:
        arr = np.clip(arr, 0.0, 1.0)
    return arr, np.ndim(p) == 0


def binomial_tail(k: int, m: int, p):
    """Upper tail Pr(X >= m) for X ~ Binomial(k, p).

    Parameters
    ----------
    k : int
        Number of trials, k >= 1.
    m : int
        Tail cutoff, 0 <= m <= k.  m = 0 returns 1.
    p : float or ndarray
        Success probability in [0, 1].

    Notes
    -----
    For k <= 60 the tail is summed term by term (compensated summation for
    scalars, pairwise accumulation for arrays), which is cancellation-free
    because every term is nonnegative.  Larger k uses the regularized
    incomplete beta identity Pr(X >= m) = I_p(m, k - m + 1), which stays
    accurate for p near 0 or 1.
    """
    if k < 1 or k != int(k):
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if m < 0 or m > k or m != int(m):
        raise ValueError(f"m must be an integer in [0, {k}], got {m!r}")
    k, m = int(k), int(m)
    arr, scalar = _as_prob_array(p, clip_tol=0.0)
    if m == 0:
        out = np.ones_like(arr)
        return float(out) if scalar else out
    if k <= EXACT_TAIL_MAX_K:
        if scalar:
            pf = float(arr)
            qf = 1.0 - pf
            return math.fsum(
                math.comb(k, l) * pf**l * qf ** (k - l) for l in range(m, k + 1)
            )
        return _tail_terms_array(k, m, arr)
    out = special.betainc(m, k - m + 1, arr)
    return float(out) if scalar else out


def _int_power(base: np.ndarray, k: int) -> np.ndarray:
    """base**k by binary exponentiation (multiplies beat pow on arrays)."""
    result = None
    acc = base
    e = k
    while e:
        if e & 1:
            result = acc.copy() if result is None else result * acc
        e >>= 1
        if e:
            acc = acc * acc
    return result


def _tail_terms_array(k: int, m: int, p: np.ndarray) -> np.ndarray:
    """Exact nonnegative-term evaluation of the tail on an array.

    m = 1 uses the cancellation-free geometric factorization
    p * (1 + q + ... + q^(k-1)); m = k is a plain power; the general case
    runs a Horner recurrence over the terms C(k,l) p^(l-m) q^(k-l).  All
    accumulated quantities are nonnegative, so precision matches the
    scalar fsum path to a few ulps.
    """
    if m == 1 and k == 1:
        return p.copy()
    q = 1.0 - p
    if m == 1:
        s = np.ones_like(p)
        for _ in range(k - 1):
            s = s * q + 1.0
        return p * s
    if m == k:
        return _int_power(p, k)
    combs = [float(math.comb(k, l)) for l in range(m, k + 1)]
    s = np.full_like(p, combs[-1])
    qpow = np.ones_like(p)
    for l in range(k - 1, m - 1, -1):
        qpow = qpow * q
        s = s * p + combs[l - m] * qpow
    return s * _int_power(p, m)


def binomial_tail_derivative(k: int, m: int, p):
    """Derivative in p of the binomial upper tail: m*C(k,m)*p^(m-1)*(1-p)^(k-m)."""
    if k < 1 or m < 0 or m > k:
        raise ValueError(f"invalid tail parameters k={k!r}, m={m!r}")
    k, m = int(k), int(m)
    arr, scalar = _as_prob_array(p, clip_tol=0.0)
    if m == 0:
        out = np.zeros_like(arr)
        return float(out) if scalar else out
    if k <= EXACT_TAIL_MAX_K:
        coeff = m * math.comb(k, m)
        out = coeff * arr ** (m - 1) * (1.0 - arr) ** (k - m)
        return float(out) if scalar else out
    # exp-log form; the coefficient overflows a float well below k = 1000
    log_coeff = (
        math.log(m)
        + math.lgamma(k + 1)
        - math.lgamma(m + 1)
        - math.lgamma(k - m + 1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = log_coeff + (m - 1) * np.log(arr) + (k - m) * np.log(1.0 - arr)
        out = np.where(np.isfinite(logs), np.exp(logs), 0.0)
    # interior formula degenerates at the endpoints: only m = 1 (resp. m = k)
    # keeps a nonzero slope k at p = 0 (resp. p = 1)
    out = np.where(arr == 0.0, k if m == 1 else 0.0, out)
    out = np.where(arr == 1.0, k if m == k else 0.0, out)
    return float(out) if scalar else out


def snap_to_integer(x: float, tol: float = INTEGER_SNAP) -> float:
    """Round x to the nearest integer when within tol of it."""
    r = round(x)
    return float(r) if abs(x - r) <= tol else x


def sampling_threshold(k: int, u: float, rule: TieBreak = TieBreak.FAVOR_A) -> int:
    """Minimal count of first-action observations that makes it a best reply.

    In a sample of size k, the first action is weakly optimal iff the count
    X satisfies X >= k/(u+1).  Under ``favor-a`` ties go to the first
    action; under ``favor-b`` an exact tie (integral k/(u+1)) goes to the
    second action, raising the threshold by one.
    """
    if k < 1 or k != int(k):
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if u <= 0.0:
        raise ValueError(f"u must be positive, got {u!r}")
    x = snap_to_integer(k / (u + 1.0))
    if x == int(x) and x >= 1.0:
        m = int(x)
        if rule == TieBreak.FAVOR_B:
            m += 1
        return m
    return math.ceil(x)


@dataclass(frozen=True)
class SampleSizeDistribution:
    """Finite-support distribution of sample sizes, stored as (k, mass) atoms."""

    atoms: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("sample size distribution needs at least one atom")
        seen = set()
        total = 0.0
        for k, mass in self.atoms:
            if k < 1 or k != int(k):
                raise ValueError(f"sample sizes must be positive integers, got {k!r}")
            if k in seen:
                raise ValueError(f"duplicate sample size {k}")
            seen.add(k)
            if not (0.0 < mass <= 1.0):
                raise ValueError(f"mass of k={k} must lie in (0, 1], got {mass!r}")
            total += mass
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"masses must sum to 1 within {_MASS_TOL:g}, got {total!r}")
        object.__setattr__(
            self, "atoms", tuple(sorted((int(k), float(w)) for k, w in self.atoms))
        )

    @classmethod
    def of(cls, masses: Mapping[int, float]) -> "SampleSizeDistribution":
        return cls(tuple(masses.items()))

    @classmethod
    def point(cls, k: int) -> "SampleSizeDistribution":
        """Homogeneous distribution: every agent samples exactly k actions."""
        return cls(((k, 1.0),))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.atoms)

    @property
    def max_support(self) -> int:
        return self.atoms[-1][0]

    @property
    def is_unit(self) -> bool:
        """True when every agent has sample size 1 (identity dynamics)."""
        return len(self.atoms) == 1 and self.atoms[0][0] == 1

    @property
    def degenerate_k(self) -> int | None:
        """The single sample size of a homogeneous distribution, else None."""
        return self.atoms[0][0] if len(self.atoms) == 1 else None

    def mass(self, k: int) -> float:
        for kk, w in self.atoms:
            if kk == k:
                return w
        return 0.0

    def mean(self) -> float:
        return math.fsum(k * w for k, w in self.atoms)

    def mix_with(self, alpha: float, big_k: int) -> "SampleSizeDistribution":
        """Mixture keeping mass alpha on this distribution and 1-alpha on big_k."""
        if not (0.0 < alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
        if big_k in self.support:
            raise ValueError(f"big_k={big_k} already in the support")
        atoms = tuple((k, alpha * w) for k, w in self.atoms) + ((big_k, 1.0 - alpha),)
        return SampleSizeDistribution(atoms)

    def as_dict(self) -> dict[int, float]:
        return dict(self.atoms)


def truncated_expectation(theta: SampleSizeDistribution, m: float, mode: str = "weak") -> float:
    """Expected sample size counting only sizes up to m.

    ``weak`` sums k*theta(k) over k <= m, ``strict`` over k < m.  A bound m
    within 1e-12 of an integer is snapped to it before comparing, so tie
    cases like m = u + 1 with integral u land on the intended side.
    """
    if m <= 0:
        raise ValueError(f"truncation bound must be positive, got {m!r}")
    if mode not in ("weak", "strict"):
        raise ValueError(f"mode must be 'weak' or 'strict', got {mode!r}")
    bound = snap_to_integer(float(m))
    if mode == "weak":
        return math.fsum(k * w for k, w in theta.atoms if k <= bound)
    return math.fsum(k * w for k, w in theta.atoms if k < bound)


class SamplingResponse:
    """Sampling best-response function w(p) for one population.

    ``w(p)`` is the probability that a revising agent with own
    coordination payoff ``u`` and sample size drawn from ``theta`` plays
    the first action when the opposing share playing it is ``p``:
    a theta-weighted sum of binomial tails with per-size thresholds.
    It is a strictly increasing polynomial of degree ``max(support)``
    with w(0) = 0 and w(1) = 1.
    """

    kind = "sampling"

    def __init__(
        self,
        u: float,
        theta: SampleSizeDistribution,
        tie_break: TieBreak = TieBreak.FAVOR_A,
    ) -> None:
        if u <= 0.0 or not math.isfinite(u):
            raise ValueError(f"u must be a positive finite number, got {u!r}")
        self.u = float(u)
        self.theta = theta
        self.tie_break = TieBreak(tie_break)
        atoms = []
        for k, w in theta.atoms:
            m = sampling_threshold(k, self.u, self.tie_break)
            combs = (
                tuple(math.comb(k, l) for l in range(m, k + 1))
                if m <= k <= EXACT_TAIL_MAX_K
                else None
            )
            atoms.append((k, w, m, combs))
        self._atoms = tuple(atoms)

    def __repr__(self) -> str:
        return (
            f"SamplingResponse(u={self.u!r}, theta={self.theta.as_dict()!r}, "
            f"tie_break={self.tie_break.value!r})"
        )

    @property
    def degree(self) -> int:
        return self.theta.max_support

    def __call__(self, p):
        if isinstance(p, (float, int)) and not isinstance(p, bool):
            return self._value_scalar(float(p))
        arr, scalar = _as_prob_array(p)
        out = np.zeros_like(arr)
        for k, w, m, _ in self._atoms:
            if m > k:  # favor-b tie pushed the threshold past the sample size
                continue
            out = out + w * binomial_tail(k, m, arr)
        return float(out) if scalar else out

    def _value_scalar(self, pf: float) -> float:
        if not (-_P_TOL <= pf <= 1.0 + _P_TOL):
            raise ValueError(f"probability input must be finite and in [0, 1]: {pf!r}")
        pf = min(max(pf, 0.0), 1.0)
        qf = 1.0 - pf
        parts = []
        for k, w, m, combs in self._atoms:
            if m > k:
                continue
            if combs is not None:
                tail = math.fsum(
                    c * pf ** (m + i) * qf ** (k - m - i) for i, c in enumerate(combs)
                )
            else:
                tail = float(special.betainc(m, k - m + 1, pf))
            parts.append(w * tail)
        return math.fsum(parts)

    def derivative(self, p):
        if isinstance(p, (float, int)) and not isinstance(p, bool):
            p = float(p)
            if not (-_P_TOL <= p <= 1.0 + _P_TOL):
                raise ValueError(f"probability input must be in [0, 1]: {p!r}")
            p = min(max(p, 0.0), 1.0)
            return math.fsum(
                w * float(binomial_tail_derivative(k, m, p))
                for k, w, m, _ in self._atoms
                if m <= k
            )
        arr, scalar = _as_prob_array(p)
        out = np.zeros_like(arr)
        for k, w, m, _ in self._atoms:
            if m > k:
                continue
            out = out + w * binomial_tail_derivative(k, m, arr)
        return float(out) if scalar else out

    def inverse(self, y):
        """Preimage of y under w, by bisection; exact at the endpoints."""
        return _monotone_inverse(self, y, lo_value=0.0, hi_value=1.0)

    def polynomial_coefficients(self) -> tuple[Fraction, ...]:
        """Exact power-basis coefficients of w as Fractions.

        Intended for identity checks at desk scale; the coefficients of a
        degree-k tail grow like C(k, k/2), so evaluate them in exact
        arithmetic rather than floats.
        """
        degree = self.degree
        coeffs = [Fraction(0)] * (degree + 1)
        for k, w, m, _ in self._atoms:
            if m > k:
                continue
            wf = Fraction(w)
            for l in range(m, k + 1):
                c_kl = math.comb(k, l)
                for i in range(0, k - l + 1):
                    coeffs[l + i] += wf * c_kl * math.comb(k - l, i) * (-1) ** i
        return tuple(coeffs)


class LogitResponse:
    """Noisy best-response function: mixture of logistic curves.

    Each group (mass mu, noise eta) plays the first action with
    probability 1/(1 + exp(((1-p) - p*u)/eta)), where ``u`` is the
    deciding player's own payoff for coordinating on the first action.
    Unlike the sampling response, w(0) > 0 and w(1) < 1.
    """

    kind = "logit"

    def __init__(self, u: float, groups: Sequence[tuple[float, float]]) -> None:
        if u <= 0.0 or not math.isfinite(u):
            raise ValueError(f"u must be a positive finite number, got {u!r}")
        groups = tuple((float(mu), float(eta)) for mu, eta in groups)
        if not groups:
            raise ValueError("logit response needs at least one noise group")
        for mu, eta in groups:
            if eta <= 0.0:
                raise ValueError(f"noise level must be positive, got {eta!r}")
            if mu <= 0.0:
                raise ValueError(f"group mass must be positive, got {mu!r}")
        total = math.fsum(mu for mu, _ in groups)
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"group masses must sum to 1, got {total!r}")
        self.u = float(u)
        self.groups = groups

    def __repr__(self) -> str:
        return f"LogitResponse(u={self.u!r}, groups={self.groups!r})"

    def __call__(self, p):
        if isinstance(p, (float, int)) and not isinstance(p, bool):
            pf = float(p)
            if not (-_P_TOL <= pf <= 1.0 + _P_TOL):
                raise ValueError(f"probability input must be in [0, 1]: {pf!r}")
            pf = min(max(pf, 0.0), 1.0)
            total = 0.0
            for mu, eta in self.groups:
                z = (1.0 - pf * (1.0 + self.u)) / eta
                total += mu * (0.0 if z > 709.0 else 1.0 / (1.0 + math.exp(z)))
            return total
        arr, scalar = _as_prob_array(p)
        out = np.zeros_like(arr)
        for mu, eta in self.groups:
            # payoff difference (first minus second action) is p*u - (1-p)
            out = out + mu * special.expit((arr * (1.0 + self.u) - 1.0) / eta)
        return float(out) if scalar else out

    def derivative(self, p):
        arr, scalar = _as_prob_array(p)
        out = np.zeros_like(arr)
        for mu, eta in self.groups:
            s = special.expit((arr * (1.0 + self.u) - 1.0) / eta)
            out = out + mu * s * (1.0 - s) * (1.0 + self.u) / eta
        return float(out) if scalar else out

    def inverse(self, y):
        lo, hi = self(0.0), self(1.0)
        return _monotone_inverse(self, y, lo_value=lo, hi_value=hi)


ResponseFunction = Union[SamplingResponse, LogitResponse]


def _monotone_inverse(f, y, lo_value: float, hi_value: float):
    """Invert a strictly increasing f: [0,1] -> [lo_value, hi_value] by bisection."""
    arr, scalar = np.asarray(y, dtype=float), np.ndim(y) == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < lo_value - 1e-12) or np.any(arr > hi_value + 1e-12):
        raise ValueError(
            f"value outside the response range [{lo_value:g}, {hi_value:g}]"
        )
    lo = np.zeros_like(arr)
    hi = np.ones_like(arr)
    # 80 halvings shrink the bracket below 1e-24, so f(mid) is within
    # machine noise of y for any polynomially bounded slope
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        high = f(mid) >= arr
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    out = 0.5 * (lo + hi)
    out = np.where(arr <= lo_value, 0.0, out)
    out = np.where(arr >= hi_value, 1.0, out)
    return float(out[0]) if scalar else out


def sampling_response(f: SamplingResponse, p):
    """Functional form of ``f(p)`` for the sampling kind."""
    return f(p)


def logit_response(f: LogitResponse, p):
    """Functional form of ``f(p)`` for the logit kind."""
    return f(p)


def response_derivative(f, p):
    return f.derivative(p)


def response_inverse(f, y):
    return f.inverse(y)


@dataclass(frozen=True)
class Environment:
    """A coordination game together with per-population sample size distributions."""

    game: CoordinationGame
    theta1: SampleSizeDistribution
    theta2: SampleSizeDistribution
    tie_break: TieBreak = TieBreak.FAVOR_A

    @classmethod
    def of(
        cls,
        game: CoordinationGame,
        theta1: SampleSizeDistribution,
        theta2: SampleSizeDistribution | None = None,
        tie_break: TieBreak = TieBreak.FAVOR_A,
    ) -> "Environment":
        return cls(game, theta1, theta2 if theta2 is not None else theta1, tie_break)

    @classmethod
    def symmetric(
        cls,
        u: float,
        theta: SampleSizeDistribution,
        tie_break: TieBreak = TieBreak.FAVOR_A,
    ) -> "Environment":
        """One-population environment: same payoff and sampling for both roles."""
        return cls(CoordinationGame.symmetric(u), theta, theta, tie_break)

    @property
    def is_symmetric(self) -> bool:
        return self.game.is_symmetric and self.theta1 == self.theta2

    def response(self, population: int) -> SamplingResponse:
        if population == 1:
            return SamplingResponse(self.game.u1, self.theta1, self.tie_break)
        if population == 2:
            return SamplingResponse(self.game.u2, self.theta2, self.tie_break)
        raise ValueError(f"population must be 1 or 2, got {population!r}")

    def single_response(self) -> SamplingResponse:
        """The shared response function of a one-population environment."""
        if not self.is_symmetric:
            raise ValueError("one-population analysis needs a symmetric environment")
        return self.response(1)

    def pair(self) -> "ResponsePair":
        return ResponsePair(self.response(1), self.response(2))


@dataclass(frozen=True)
class ResponsePair:
    """Two response functions driving the two-population dynamics
    dp1/dt = w1(p2) - p1, dp2/dt = w2(p1) - p2."""

    w1: ResponseFunction
    w2: ResponseFunction

    @classmethod
    def sampling(cls, env: Environment) -> "ResponsePair":
        return env.pair()

    @classmethod
    def logit(
        cls,
        game: CoordinationGame,
        groups1: Sequence[tuple[float, float]],
        groups2: Sequence[tuple[float, float]] | None = None,
    ) -> "ResponsePair":
        if groups2 is None:
            groups2 = groups1
        return cls(LogitResponse(game.u1, groups1), LogitResponse(game.u2, groups2))
