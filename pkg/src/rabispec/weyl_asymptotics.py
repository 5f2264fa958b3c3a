"""Two-term eigenvalue counting asymptotics for the multilevel oscillator
families, empirical counting comparisons, and pointwise gap checks of the
perturbed matrix symbol on the energy sphere.

The counting function of such an operator grows like

    N_A(lambda) = leading * lambda^n - subleading * lambda^(n - 1/2) + ...

with n the number of modes. The leading coefficient only sees the phase
space volume of {p2 <= 1} and the number of internal levels; the subleading
one integrates the trace of the order-one symbol a1 over the sphere p2 = 1.
All three coupling configurations have off-diagonal a1, so their subleading
coefficient vanishes; the quadrature here confirms that rather than
assuming it.

Phase space points are X = (x_1..x_n, xi_1..xi_n) and p2 = |X|^2 / 2, so
the energy sphere p2 = 1 is |X| = sqrt(2) and |grad p2| = |X| is constant
on it.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .fock_ops import (QR, QRABI, TruncatedOperator, build, coupling_pattern)
from .spectral_analysis import count_below

SPHERE_RADIUS = math.sqrt(2.0)
DEFAULT_RELIABLE_FRACTION = 0.5
DEFAULT_MC_SAMPLES = 200000


@dataclass
class WeylPrediction:
    n: int
    Nlev: int
    leading_coeff: float
    subleading_coeff: float

    def evaluate(self, lam):
        return (self.leading_coeff * lam ** self.n
                - self.subleading_coeff * lam ** (self.n - 0.5))


@dataclass
class SymbolSample:
    X: np.ndarray
    a1_matrix: np.ndarray
    b1_matrix: np.ndarray
    eigenvalues: np.ndarray
    min_gap: float


def _couplings(spec):
    """(alpha_k, row, col) for each coupling, rows below cols."""
    if spec.family in (QR, QRABI):
        return [(spec.alphas[0], 0, 1)]
    out = []
    for k, ak in enumerate(spec.alphas, start=1):
        i, j = coupling_pattern(spec.family, spec.spin_dim, k)
        out.append((ak, min(i, j), max(i, j)))
    return out


def a1_matrix(spec, X):
    """Order-one symbol: sum over couplings of alpha_k x_k on the pattern.

    Coupling k reads the position coordinate of mode k, so X[k-1] in the
    (x_1..x_n, xi_1..xi_n) layout.
    """
    X = np.asarray(X, dtype=float)
    m = np.zeros((spec.spin_dim, spec.spin_dim))
    for k, (ak, i, j) in enumerate(_couplings(spec)):
        v = ak * X[k]
        m[i, j] += v
        m[j, i] += v
    return m


def b1_matrix(spec, X, eps=1.0):
    """Perturbing symbol with entries following the a1 coupling graph.

    Built so that a1 + eps*b1 has entry sqrt(2) alpha_k psi_k at each
    coupling slot, psi_k = (x_k + i eps xi_k)/sqrt(2); the eps-linear part
    is therefore +-i alpha_k xi_k, upper slot positive.
    """
    X = np.asarray(X, dtype=float)
    n = spec.modes
    m = np.zeros((spec.spin_dim, spec.spin_dim), dtype=complex)
    for k, (ak, i, j) in enumerate(_couplings(spec)):
        xi = X[n + k]
        m[i, j] += 1j * ak * xi
        m[j, i] += -1j * ak * xi
    return m


def symbol_sample(spec, X, eps):
    a1 = a1_matrix(spec, X)
    b1 = b1_matrix(spec, X)
    s = a1 + eps * b1
    ev = np.sort(np.linalg.eigvalsh(s))
    gaps = np.diff(ev)
    min_gap = float(gaps.min()) if gaps.size else math.inf
    return SymbolSample(X, a1, b1, ev, min_gap)


def _sphere_area(d, r):
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0) * r ** (d - 1)


def ball_volume_numeric(n, nodes=200):
    """vol{p2 <= 1} in 2n dimensions by a radial quadrature.

    Reduces to the radial integral of the sphere-area function out to
    radius sqrt(2); used as a cross-check of the closed form (2 pi)^n / n!.
    """
    t, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * SPHERE_RADIUS * (t + 1.0)
    return float(np.sum(w * _sphere_area(2 * n, r)) * 0.5 * SPHERE_RADIUS)


def _sphere_quadrature(n, nodes=60):
    """Deterministic points and weights covering the sphere |X| = sqrt(2)
    in 2n dimensions, for n <= 2. Weights sum to the sphere area."""
    r = SPHERE_RADIUS
    if n == 1:
        m = 4 * nodes
        theta = 2.0 * math.pi * np.arange(m) / m
        pts = r * np.stack((np.cos(theta), np.sin(theta)), axis=1)
        wts = np.full(m, 2.0 * math.pi * r / m)
        return pts, wts
    if n == 2:
        # hyperspherical product rule on S^3: Gauss-Legendre in the two
        # polar angles, uniform in the azimuthal one
        tc, wc = np.polynomial.legendre.leggauss(nodes)
        chi = 0.5 * math.pi * (tc + 1.0)
        wchi = 0.5 * math.pi * wc * np.sin(chi) ** 2
        phi = 0.5 * math.pi * (tc + 1.0)
        wphi = 0.5 * math.pi * wc * np.sin(phi)
        m = 2 * nodes
        psi = 2.0 * math.pi * np.arange(m) / m
        wpsi = np.full(m, 2.0 * math.pi / m)
        pts = []
        wts = []
        for c, wcv in zip(chi, wchi):
            for f, wfv in zip(phi, wphi):
                for p, wpv in zip(psi, wpsi):
                    pts.append((r * math.cos(c),
                                r * math.sin(c) * math.cos(f),
                                r * math.sin(c) * math.sin(f) * math.cos(p),
                                r * math.sin(c) * math.sin(f) * math.sin(p)))
                    wts.append(wcv * wfv * wpv * r ** 3)
        return np.array(pts), np.array(wts)
    raise ValueError("deterministic sphere rule only for one or two modes")


def weyl_prediction(spec, nodes=24, mc_samples=DEFAULT_MC_SAMPLES, seed=0):
    """Two-term counting coefficients for the model.

    leading = Nlev * (2 pi)^{-n} * vol{p2 <= 1} = Nlev / n!. The subleading
    coefficient integrates Tr(a1) over the sphere p2 = 1 against
    1/|grad p2|, by deterministic product quadrature for n <= 2 and seeded
    Monte Carlo otherwise.
    """
    spec.validate()
    n = spec.modes
    nlev = spec.spin_dim
    leading = nlev / math.factorial(n)
    if n <= 2:
        pts, wts = _sphere_quadrature(n, nodes)
        traces = np.array([np.trace(a1_matrix(spec, x)) for x in pts])
        integral = float(np.sum(wts * traces))
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((mc_samples, 2 * n))
        g *= SPHERE_RADIUS / np.linalg.norm(g, axis=1)[:, None]
        traces = np.array([np.trace(a1_matrix(spec, x)) for x in g])
        integral = float(np.mean(traces)) * _sphere_area(2 * n, SPHERE_RADIUS)
    subleading = (2.0 * math.pi) ** (-n) * integral / SPHERE_RADIUS
    return WeylPrediction(n, nlev, leading, subleading)


class CountRow(NamedTuple):
    lam: float
    count: int
    prediction: float
    rel_err: float
    flagged: bool


def empirical_counting(spec, lambdas, cutoffs=None,
                       reliable_fraction=DEFAULT_RELIABLE_FRACTION, jobs=1):
    """Counting function versus the two-term prediction on a lambda grid.

    Counts come from inertia factorizations of the truncated operator, so
    the matrix is assembled once and refactored per threshold. Thresholds
    above reliable_fraction * min(cutoff) land in rows flagged as
    truncation-suspect; they are reported, never silently dropped. With
    jobs > 1 the factorizations run on worker threads (each owns its
    workspace); rows always come back in input order.
    """
    if cutoffs is not None:
        spec = spec.with_cutoffs(cutoffs)
    pred = weyl_prediction(spec)
    op = build(spec)
    m = op.matrix
    if sp.issparse(m):
        m = m.toarray()
    op = TruncatedOperator(op.basis, m)
    bound = reliable_fraction * min(spec.cutoffs)
    lambdas = [float(x) for x in lambdas]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(lambda t: count_below(op, t), lambdas))
    else:
        counts = [count_below(op, t) for t in lambdas]
    rows = []
    for lam, c in zip(lambdas, counts):
        p = pred.evaluate(lam)
        rel = (c - p) / p if p != 0 else math.inf
        rows.append(CountRow(lam, c, p, rel, lam > bound))
    return rows


def nonpositive_count(spec, cutoffs=None):
    """Number of nonpositive eigenvalues of the truncated operator.

    The two-term law is stated for positive operators; diagonal level
    shifts can push low eigenvalues to zero or below, so this reports the
    offending count instead of assuming positivity.
    """
    if cutoffs is not None:
        spec = spec.with_cutoffs(cutoffs)
    op = build(spec)
    m = op.matrix
    if sp.issparse(m):
        m = m.toarray()
    return count_below(TruncatedOperator(op.basis, m), 0.0)


class GapCheck(NamedTuple):
    min_gap: float
    X: np.ndarray
    sample: SymbolSample


def _grid_points(n, samples):
    r = SPHERE_RADIUS
    if n == 1:
        theta = 2.0 * math.pi * np.arange(samples) / samples
        return r * np.stack((np.cos(theta), np.sin(theta)), axis=1)
    # generalized Fibonacci lattice on S^3, deterministic in the sample count
    g1 = 1.0 / 1.2207440846057596  # plastic-number offsets
    g2 = 1.0 / 1.4902959105489326
    i = np.arange(samples) + 0.5
    u = i / samples
    v = (i * g1) % 1.0
    w = (i * g2) % 1.0
    chi = np.arccos(1.0 - 2.0 * u)
    phi = np.arccos(1.0 - 2.0 * v)
    psi = 2.0 * math.pi * w
    pts = np.stack((
        np.cos(chi),
        np.sin(chi) * np.cos(phi),
        np.sin(chi) * np.sin(phi) * np.cos(psi),
        np.sin(chi) * np.sin(phi) * np.sin(psi),
    ), axis=1)
    return r * pts / np.linalg.norm(pts, axis=1)[:, None]


def smges_gap_check(spec, eps, samples, seed=0, grid=False):
    """Minimum eigenvalue gap of a1 + eps b1 over points on the sphere.

    Uniform seeded sampling by default; with grid=True (one or two modes)
    the points come from a fixed deterministic lattice, making the result
    independent of the seed.
    """
    spec.validate()
    if samples < 1:
        raise ValueError("need at least one sample")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = spec.modes
    if grid:
        if n > 2:
            raise ValueError("deterministic grid mode only for n <= 2")
        pts = _grid_points(n, samples)
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((samples, 2 * n))
        pts = g * (SPHERE_RADIUS / np.linalg.norm(g, axis=1)[:, None])
    best = None
    for x in pts:
        s = symbol_sample(spec, x, eps)
        if best is None or s.min_gap < best.min_gap:
            best = s
    return GapCheck(best.min_gap, best.X, best)
