"""Closed-form detector design and traffic calculators.

Under the absent-user hypothesis each pairwise statistic is the absolute
real part of an inner product of two independent complex Gaussian
L-vectors, i.e. |sum of 2L independent products of N(0, sigma^2/2)
variables|. Its density is

    f(x) = (2x/s2)^(L-1/2) K_{L-1/2}(2x/s2) / ((s2/2) 2^(L-3/2) sqrt(pi) Gamma(L))

for x >= 0, with K the modified Bessel function of the second kind. The
half-integer order admits an exact finite sum, so no special-function
dependency is needed. Thresholds come from inverting the tail of this
density; the M-out-of-n false-alarm combinatorics use the (exact)
binomial tail, equal to a regularized incomplete beta function.

The distribution depends on x only through x/sigma^2, so a threshold
solved at one noise variance rescales linearly to any other - which is
how estimated-noise thresholds are applied per frame without re-solving.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from math import comb, exp, lgamma, log, pi, sqrt

import numpy as np
from scipy import integrate, optimize

from .errors import NumericalError

__all__ = [
    "bessel_k_half",
    "H0Pdf",
    "h0_pdf",
    "h0_cdf",
    "solve_threshold",
    "pfa_from_p0",
    "p0_from_pfa",
    "cf_inversion_oracle",
    "DetectorDesign",
    "design_detector",
    "write_threshold_table",
    "occupancy_fraction",
    "processing_gain_db",
    "interference_rise_db",
]

THRESHOLD_TABLE_COLUMNS = ["L", "sigma2", "K", "M", "n", "p0", "eta", "target_pfa"]


@lru_cache(maxsize=128)
def _log_half_order_coeffs(a: int) -> tuple[float, ...]:
    # log of (a+k)! / (k! (a-k)!) for k = 0..a
    return tuple(
        lgamma(a + k + 1) - lgamma(k + 1) - lgamma(a - k + 1) for k in range(a + 1)
    )


def _log_bessel_k_half(a: int, x: np.ndarray) -> np.ndarray:
    """log K_{a+1/2}(x), vectorized over a 1-D array of x > 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    coeffs = np.asarray(_log_half_order_coeffs(a))
    k = np.arange(a + 1)
    terms = coeffs[:, None] - k[:, None] * np.log(2.0 * x)[None, :]
    m = terms.max(axis=0)
    lse = m + np.log(np.exp(terms - m[None, :]).sum(axis=0))
    return 0.5 * np.log(pi / (2.0 * x)) - x + lse


def bessel_k_half(order_minus_half: int, x: float) -> float:
    """Modified Bessel function of the second kind at half-integer order a + 1/2.

    Uses the exact closed form
    K_{a+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_k (a+k)! / (k!(a-k)!) (2x)^{-k},
    evaluated in log space so large orders stay accurate at small arguments.
    """
    a = int(order_minus_half)
    if a < 0:
        raise ValueError("order_minus_half must be >= 0")
    if x <= 0:
        raise ValueError(f"argument must be positive, got {x}")
    return float(np.exp(_log_bessel_k_half(a, np.asarray([x])))[0])


@dataclass(frozen=True)
class H0Pdf:
    """Density of the pairwise statistic when the user is silent (noise only)."""

    l_taps: int
    noise_var: float

    def __post_init__(self):
        if self.l_taps < 1:
            raise ValueError("l_taps must be >= 1")
        if self.noise_var <= 0:
            raise ValueError("noise_var must be positive")

    @property
    def _log_norm(self) -> float:
        ll = self.l_taps
        return (
            log(self.noise_var / 2.0)
            + (ll - 1.5) * log(2.0)
            + 0.5 * log(pi)
            + lgamma(ll)
        )

    @property
    def _density_at_zero(self) -> float:
        # small-argument limit of the Bessel form: finite for L >= 1
        ll = self.l_taps
        return 2.0 * exp(lgamma(ll - 0.5) - lgamma(ll)) / (self.noise_var * sqrt(pi))


def h0_pdf(pdf: H0Pdf, x) -> np.ndarray | float:
    """Evaluate the noise-only density at x >= 0 (scalar or array)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("density is defined for x >= 0")
    ll, s2 = pdf.l_taps, pdf.noise_var
    out = np.full(x_arr.shape, pdf._density_at_zero, dtype=float)
    big = x_arr >= 1e-8 * s2
    if np.any(big):
        z = 2.0 * x_arr[big] / s2
        logf = (ll - 0.5) * np.log(z) + _log_bessel_k_half(ll - 1, z) - pdf._log_norm
        out[big] = np.exp(logf)
    if np.isscalar(x) or x_arr.shape == ():
        return float(out)
    return out


def h0_cdf(pdf: H0Pdf, x: float) -> float:
    """Integral of the density from 0 to x by adaptive quadrature (abs tol 1e-10)."""
    if x <= 0:
        return 0.0
    val, _ = integrate.quad(
        lambda t: h0_pdf(pdf, t), 0.0, x, epsabs=1e-10, epsrel=1e-11, limit=400
    )
    return float(min(max(val, 0.0), 1.0))


def solve_threshold(pdf: H0Pdf, p0: float) -> float:
    """Threshold eta with tail probability p0: solves 1 - F(eta) - p0 = 0.

    Brackets the root by geometric growth of the upper end, then runs a
    bracketed bisection/secant solve.
    """
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must be in (0, 1), got {p0}")

    def g(eta):
        return 1.0 - h0_cdf(pdf, eta) - p0

    hi = pdf.noise_var
    for _ in range(200):
        if g(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericalError("failed to bracket the threshold")
    eta = optimize.brentq(g, 0.0, hi, xtol=1e-13 * pdf.noise_var, rtol=8.9e-16, maxiter=200)
    if abs(g(eta)) > 1e-8:
        raise NumericalError(f"threshold residual {g(eta):.3e} exceeds 1e-8")
    return float(eta)


def pfa_from_p0(p0: float, n: int, m: int) -> float:
    """False-alarm rate of the M-out-of-n rule assuming independent statistics.

    Exact binomial tail sum_{i=M}^{n} C(n,i) p0^i (1-p0)^{n-i}; equals the
    regularized incomplete beta I_{p0}(M, n-M+1).
    """
    if n < 1 or not 1 <= m <= n:
        raise ValueError(f"need 1 <= M <= n, got M={m}, n={n}")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must be in [0, 1], got {p0}")
    q = 1.0 - p0
    return float(sum(comb(n, i) * p0**i * q ** (n - i) for i in range(m, n + 1)))


def p0_from_pfa(pfa: float, n: int, m: int) -> float:
    """Invert :func:`pfa_from_p0` in p0 by bisection with Newton acceleration.

    The map is strictly increasing in p0, and the derivative is the scaled
    beta density M*C(n,M) p0^(M-1) (1-p0)^(n-M), so Newton steps are cheap;
    any step leaving the bracket falls back to bisection.
    """
    if n < 1 or not 1 <= m <= n:
        raise ValueError(f"need 1 <= M <= n, got M={m}, n={n}")
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"target false-alarm rate must be in (0, 1), got {pfa}")
    lo, hi = 0.0, 1.0
    p = pfa  # decent start: exact for n = m = 1
    dcoef = m * comb(n, m)
    for _ in range(300):
        f = pfa_from_p0(p, n, m) - pfa
        if abs(f) <= 1e-13 * pfa:  # relative: pfa may be arbitrarily small
            for _ in range(3):  # Newton polish toward the rounding floor
                deriv = dcoef * p ** (m - 1) * (1.0 - p) ** (n - m)
                if deriv <= 0 or not math.isfinite(deriv):
                    break
                cand = p - (pfa_from_p0(p, n, m) - pfa) / deriv
                if not 0.0 < cand < 1.0:
                    break
                p = cand
            return float(p)
        if f > 0:
            hi = p
        else:
            lo = p
        if hi - lo < 1e-16:
            return float(0.5 * (lo + hi))
        deriv = dcoef * p ** (m - 1) * (1.0 - p) ** (n - m)
        if deriv > 0 and math.isfinite(deriv) and lo < p - f / deriv < hi:
            p = p - f / deriv
        else:
            p = 0.5 * (lo + hi)
    raise NumericalError("p0 inversion did not converge")


def _log_cf(l_taps: int, noise_var: float, t: np.ndarray) -> np.ndarray:
    # characteristic function of the pre-folding statistic:
    # (2/s2)^(2L) / (t^2 + 4/s2^2)^L, evaluated in log space
    return 2.0 * l_taps * log(2.0 / noise_var) - l_taps * np.log(
        t * t + 4.0 / noise_var**2
    )


def cf_inversion_oracle(l_taps: int, noise_var: float, x_grid, fold: bool = True) -> np.ndarray:
    """Slow independent density estimate by Fourier inversion of the CF.

    Computes the symmetric pre-folding density at +x and -x by oscillatory
    quadrature of the characteristic function, then folds the two onto the
    nonnegative half line. ``fold=False`` returns the raw pre-folding
    density instead (any sign allowed). Intended for cross-validation in
    tests only.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if fold and np.any(x_grid < 0):
        raise ValueError("x grid must be nonnegative")

    def phi(t):
        return exp(_log_cf(l_taps, noise_var, np.asarray(t)))

    def prefold(u: float) -> float:
        if u == 0.0:
            val, _ = integrate.quad(phi, 0.0, np.inf, epsabs=1e-12, epsrel=1e-11)
        else:
            val, _ = integrate.quad(
                phi, 0.0, np.inf, weight="cos", wvar=u, epsabs=1e-12, limlst=200
            )
        return val / pi

    if not fold:
        return np.array([prefold(x) for x in x_grid])
    return np.array([prefold(x) + prefold(-x) for x in x_grid])


@dataclass(frozen=True)
class DetectorDesign:
    """A solved CFAR operating point binding (PFA, p0, eta, M, n, L, sigma^2)."""

    target_pfa: float
    p0: float
    eta: float
    m_of_n: int
    n_pairs: int
    l_taps: int
    noise_var: float

    def eta_for(self, noise_var: float) -> float:
        """Rescale the threshold to another noise variance (the statistic is pivotal in x/sigma^2)."""
        return self.eta * noise_var / self.noise_var


def design_detector(
    target_pfa: float, k_bits: int, m_of_n: int, l_taps: int, noise_var: float
) -> DetectorDesign:
    """Fix the false-alarm rate and derive (p0, eta) for K bits and the M-of-n rule."""
    if k_bits < 1:
        raise ValueError("detector design needs K >= 1 (pairwise statistics)")
    n_pairs = k_bits * (k_bits + 1) // 2
    if not 1 <= m_of_n <= n_pairs:
        raise ValueError(f"M must be in [1, {n_pairs}], got {m_of_n}")
    p0 = p0_from_pfa(target_pfa, n_pairs, m_of_n)
    eta = solve_threshold(H0Pdf(l_taps, noise_var), p0)
    return DetectorDesign(
        target_pfa=target_pfa,
        p0=p0,
        eta=eta,
        m_of_n=m_of_n,
        n_pairs=n_pairs,
        l_taps=l_taps,
        noise_var=noise_var,
    )


def write_threshold_table(path, entries: list[tuple[int, DetectorDesign]]) -> None:
    """Write (K, design) rows as CSV with the documented column set, atomically."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(THRESHOLD_TABLE_COLUMNS)
            for k_bits, d in entries:
                writer.writerow(
                    [
                        d.l_taps,
                        format(d.noise_var, ".12g"),
                        k_bits,
                        d.m_of_n,
                        d.n_pairs,
                        format(d.p0, ".12g"),
                        format(d.eta, ".12g"),
                        format(d.target_pfa, ".12g"),
                    ]
                )
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def occupancy_fraction(num_ues: int, sr_rate_per_ue: float, symbol_rate: float) -> float:
    """Fraction of symbol slots carrying at least one request, capped at 1."""
    if num_ues < 0 or sr_rate_per_ue < 0:
        raise ValueError("counts and rates must be nonnegative")
    if symbol_rate <= 0:
        raise ValueError("symbol_rate must be positive")
    return min(1.0, num_ues * sr_rate_per_ue / symbol_rate)


def processing_gain_db(n_len: int) -> float:
    """Despreading gain of a length-N spreading sequence, in dB."""
    if n_len < 1:
        raise ValueError("n_len must be >= 1")
    return 10.0 * math.log10(n_len)


def interference_rise_db(occupancy: float, usr_to_noise_power_ratio: float) -> float:
    """Average rise of the interference floor from underlay traffic, in dB."""
    if occupancy < 0 or usr_to_noise_power_ratio < 0:
        raise ValueError("inputs must be nonnegative")
    return 10.0 * math.log10(1.0 + occupancy * usr_to_noise_power_ratio)
