"""Hermite and Laguerre machinery used by the overlap and spectral layers.

Two Hermite normalizations are supported. The default "ladder" convention is
the one generated by repeated application of the raising operator
(x - d/dx)/sqrt(2) to the Gaussian, i.e. 2^(-N/2) times the physicists'
polynomial, with recurrence

    H_{N+1}(x) = sqrt(2) x H_N(x) - N H_{N-1}(x).

In this convention the weighted L2 norm of degree N is sqrt(sqrt(pi) N!).

The alternating finite sums (p_polynomial and friends) are evaluated in exact
integer arithmetic over a dyadic representation of the float argument, with a
single rounding at the end. Doing these sums in floating point loses all
significance long before the supported degree cap; see the module tests.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DegenerateInput, NumericError, PrecisionError

LADDER = "ladder"
PHYSICISTS = "physicists"

# Cap on N + k for the exact alternating sums. Kept as a hard contract
# boundary so callers cannot wander into multi-second big-integer territory
# by accident.
MAX_COMBINED_DEGREE = 120

ZERO_PROXIMITY_TOL = 1e-10


def hermite_poly(N, x, convention=LADDER):
    """Hermite polynomial of degree N at x (scalar or array).

    convention is "ladder" (default, 2^(-N/2) scaling) or "physicists".
    """
    if N < 0:
        raise ValueError("degree must be nonnegative")
    if convention not in (LADDER, PHYSICISTS):
        raise ValueError("unknown convention %r" % (convention,))
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    if convention == LADDER:
        sx = math.sqrt(2.0) * x
        for n in range(N):
            prev, cur = cur, sx * cur - n * prev
    else:
        tx = 2.0 * x
        for n in range(N):
            prev, cur = cur, tx * cur - 2.0 * n * prev
    return cur if cur.ndim else float(cur)


def laguerre_poly(N, x):
    """Laguerre polynomial L_N at x (scalar or array), standard normalization."""
    if N < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for n in range(N):
        prev, cur = cur, ((2 * n + 1 - x) * cur - n * prev) / (n + 1)
    return cur if cur.ndim else float(cur)


def _laguerre_pair_scaled(N, x):
    """(L_N, L_{N-1}, logscale) with true values L * exp(logscale), vectorized.

    Laguerre values blow past double range near the largest zeros once the
    degree is in the hundreds, so the recurrence renormalizes per lane and
    tracks the discarded magnitude in log space. Ratios of the returned pair
    are unaffected.
    """
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    logscale = np.zeros_like(x)
    for n in range(N):
        prev, cur = cur, ((2 * n + 1 - x) * cur - n * prev) / (n + 1)
        big = np.abs(cur) > 1e250
        if np.any(big):
            f = np.where(big, np.abs(cur), 1.0)
            cur = cur / f
            prev = prev / f
            logscale = logscale + np.log(f)
    return cur, prev, logscale


def laguerre_zeros(N):
    """All N zeros of L_N, ascending.

    Golub-Welsch on the Jacobi matrix (diagonal 2i+1, off-diagonal i), then
    Newton polish. Each zero is certified by a residual check
    |L_N(x)| <= 1e-12 * max(1, |L_N'(x)|); failure raises NumericError.
    """
    if N < 1:
        raise ValueError("degree must be at least 1")
    diag = 2.0 * np.arange(N) + 1.0
    off = np.arange(1.0, N)
    z = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    z = np.sort(z)
    for _ in range(2):
        L, Lm1, _ = _laguerre_pair_scaled(N, z)
        # x L_N' = N (L_N - L_{N-1}), so the Newton step is scale free
        deriv = N * (L - Lm1) / z
        z = z - L / deriv
    L, Lm1, logscale = _laguerre_pair_scaled(N, z)
    deriv = N * (L - Lm1) / z
    # residual test split by whether |L'| is representable: where the scale
    # is huge, |L'| >= 1 certainly holds and the test reduces to a ratio
    log_deriv = logscale + np.log(np.maximum(np.abs(deriv), 1e-300))
    with np.errstate(over="ignore"):
        small = log_deriv < 700.0
        true_L = np.abs(L) * np.exp(np.where(small, logscale, 0.0))
        true_d = np.abs(deriv) * np.exp(np.where(small, logscale, 0.0))
    bad_small = small & (true_L > 1e-12 * np.maximum(1.0, true_d))
    bad_big = (~small) & (np.abs(L) > 1e-12 * np.abs(deriv))
    if np.any(bad_small | bad_big):
        raise NumericError(
            "Laguerre zero refinement failed residual check at degree %d" % N
        )
    return z


@dataclass
class LaguerreZeroSet:
    """Zeros of L_1 .. L_degree_max, keyed by degree."""

    degree_max: int
    zeros: dict = field(default_factory=dict)

    def all_zeros(self):
        out = []
        for k in range(1, self.degree_max + 1):
            for i, z in enumerate(self.zeros[k]):
                out.append((z, k, i))
        out.sort()
        return out


def laguerre_zero_set(degree_max):
    zs = {k: laguerre_zeros(k) for k in range(1, degree_max + 1)}
    return LaguerreZeroSet(degree_max=degree_max, zeros=zs)


def _dyadic(z):
    # exact representation z = mant / 2**texp for a finite float
    if not math.isfinite(z):
        raise ValueError("argument must be finite")
    num, den = float(z).as_integer_ratio()
    return num, den.bit_length() - 1


def _alternating_series(N, k, mant, texp, sign_parity, half_powers):
    """Exact integer numerator of sum_j (-1)^(sign_parity-j) C(N,j) C(k,j) j! z^P,

    P = N+k-2j, z = mant/2^texp, over the common denominator 2^(texp*(N+k)).
    With half_powers, each term gains an extra 2^(P//2) (used when the base
    carries a factor sqrt(2) whose integer part is folded in here).
    """
    total = 0
    for j in range(min(N, k) + 1):
        P = N + k - 2 * j
        term = math.comb(N, j) * math.comb(k, j) * math.factorial(j)
        term *= mant ** P
        term <<= texp * 2 * j
        if half_powers:
            term <<= P // 2
        if (sign_parity - j) & 1:
            term = -term
        total += term
    return total


def p_polynomial(N, k, Z):
    """The overlap kernel polynomial sum_j (-1)^(k-j) C(N,j) C(k,j) j! Z^(N+k-2j).

    Evaluated exactly over integers and rounded once. On the diagonal,
    p(N, N, c) equals N! L_N(c^2), so p(N, N, -sqrt(Z)) = N! L_N(Z).
    Degrees with N + k above MAX_COMBINED_DEGREE are refused.
    """
    if N < 0 or k < 0:
        raise ValueError("degrees must be nonnegative")
    if N + k > MAX_COMBINED_DEGREE:
        raise PrecisionError(
            "combined degree %d exceeds supported cap %d"
            % (N + k, MAX_COMBINED_DEGREE)
        )
    mant, texp = _dyadic(Z)
    numer = _alternating_series(N, k, mant, texp, k, half_powers=False)
    return float(Fraction(numer, 1 << (texp * (N + k))))


class ZeroDistance(NamedTuple):
    distance: float
    degree: int
    index: int


def zero_set_distance(x0, kmax):
    """Distance from x0 to the nearest zero of any L_k, k <= kmax, with witness."""
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    best = ZeroDistance(math.inf, 0, 0)
    for k in range(1, kmax + 1):
        z = laguerre_zeros(k)
        i = int(np.argmin(np.abs(z - x0)))
        d = abs(z[i] - x0)
        if d < best.distance:
            best = ZeroDistance(d, k, i)
    return best


def _cumulative_sturm_counts(t, kmax):
    """counts[k-1] = number of zeros of L_k strictly below t, for k = 1..kmax.

    One Sturm-sequence sweep of the order-kmax Jacobi matrix serves every
    degree at once, because J_k is the leading principal submatrix of J_kmax.
    """
    counts = np.empty(kmax, dtype=np.int64)
    d = 1.0
    neg = 0
    tiny = 1e-300
    for i in range(kmax):
        a = 2.0 * i + 1.0
        b2 = float(i * i)
        d = (a - t) - b2 / d
        if d == 0.0:
            d = tiny
        if d < 0.0:
            neg += 1
        counts[i] = neg
    return counts


def _first_degree_with_zero_in(x0, delta, kmax):
    lo = _cumulative_sturm_counts(x0 - delta, kmax)
    hi = _cumulative_sturm_counts(x0 + delta, kmax)
    inside = hi - lo
    hits = np.nonzero(inside > 0)[0]
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


class AvoidanceEntry(NamedTuple):
    k: int
    delta: float
    nearest_zero: float
    distance: float


@dataclass
class AvoidanceSequence:
    x0: float
    entries: list
    exhausted: bool
    kcap: int


def nondegenerate_sequence(x0, jmax, kcap=4000):
    """Shrinking-window avoidance sequence for x0 against the Laguerre zero sets.

    Window j has half-width delta_j, starting at 1/10. k_j is the least degree
    with a zero inside the window; the next half-width is a tenth of the
    distance to that nearest zero. Stops early with the exhausted flag set if
    no degree up to kcap enters the current window.

    Raises DegenerateInput if x0 sits within 1e-10 of a zero of any L_k with
    k <= kcap.
    """
    if jmax < 1:
        raise ValueError("jmax must be at least 1")
    if x0 <= 0:
        # zeros all live on the positive axis, nothing to avoid
        raise ValueError("x0 must be positive")
    if _first_degree_with_zero_in(x0, ZERO_PROXIMITY_TOL, kcap) is not None:
        raise DegenerateInput(
            "x0 = %.17g is within %g of a Laguerre zero" % (x0, ZERO_PROXIMITY_TOL)
        )
    entries = []
    delta = 1.0 / 10.0
    exhausted = False
    for _ in range(jmax):
        kj = _first_degree_with_zero_in(x0, delta, kcap)
        if kj is None:
            exhausted = True
            break
        z = laguerre_zeros(kj)
        i = int(np.argmin(np.abs(z - x0)))
        dist = abs(float(z[i]) - x0)
        entries.append(AvoidanceEntry(kj, delta, float(z[i]), dist))
        delta = dist / 10.0
    return AvoidanceSequence(x0=x0, entries=entries, exhausted=exhausted, kcap=kcap)
