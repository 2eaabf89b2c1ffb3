"""Independent oracles shared by the test modules.

Everything here is deliberately written on a different arithmetic path
from the package code: dense matrix products instead of FFTs, incomplete
gamma mixtures instead of Bessel quadrature, explicit loops instead of
vectorized kernels.
"""

from __future__ import annotations

from math import exp, lgamma, log

import numpy as np
from scipy.special import gammainc

from cpdsss.zc import ZcBasis, cyclic_shift


def dense_despread(basis: ZcBasis, y: np.ndarray) -> np.ndarray:
    """O(N^2) despreading: row n of the matrix is conj(shift n)."""
    rows = np.stack([np.conj(cyclic_shift(basis, n)) for n in range(basis.n_len)])
    return rows @ y


def circular_convolve_oracle(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Circular convolution by explicit summation."""
    n = len(x)
    out = np.zeros(n, dtype=complex)
    for m in range(n):
        for l, hv in enumerate(h):
            out[m] += hv * x[(m - l) % n]
    return out


def erlang_mixture_cdf(l_taps: int, noise_var: float, x) -> np.ndarray:
    """Closed-form CDF of the noise-only pairwise statistic.

    The statistic is |sum of 2L products of independent N(0, s2/2)
    variables|; expanding the half-integer Bessel density termwise gives a
    negative-binomial mixture of Erlang CDFs:

        F(x) = sum_{k=0}^{L-1} C(L-1+k, k) 2^-(L-1+k) P(L-k, 2x/s2)

    with P the regularized lower incomplete gamma function. Weights sum
    to 1 by the binomial identity sum_k C(a+k, k) 2^-k = 2^a.
    """
    a = l_taps - 1
    z = 2.0 * np.asarray(x, dtype=float) / noise_var
    out = np.zeros_like(z)
    for k in range(l_taps):
        log_w = lgamma(a + k + 1) - lgamma(k + 1) - lgamma(a + 1) - (a + k) * log(2.0)
        out = out + exp(log_w) * gammainc(l_taps - k, z)
    return out


def sample_h0_statistic(rng: np.random.Generator, l_taps: int, noise_var: float, n: int,
                        chunk: int = 50_000) -> np.ndarray:
    """Direct draws of the noise-only statistic from its defining product form."""
    out = np.empty(n)
    sigma = np.sqrt(noise_var / 2.0)
    done = 0
    while done < n:
        b = min(chunk, n - done)
        p = sigma * rng.standard_normal((b, 2 * l_taps))
        q = sigma * rng.standard_normal((b, 2 * l_taps))
        out[done : done + b] = np.abs((p * q).sum(axis=1))
        done += b
    return out


def crossing_snr_db(snrs, values, target: float) -> float:
    """SNR where a decreasing curve crosses ``target``, log-linear interpolation."""
    snrs = list(snrs)
    logs = [np.log10(max(v, 1e-12)) for v in values]
    lt = np.log10(target)
    for i in range(len(snrs) - 1):
        a, b = logs[i], logs[i + 1]
        if (a - lt) * (b - lt) <= 0 and a != b:
            frac = (a - lt) / (a - b)
            return snrs[i] + frac * (snrs[i + 1] - snrs[i])
    raise AssertionError(f"curve never crosses {target}: {list(zip(snrs, values))}")


def binomial_tail_oracle(p0: float, n: int, m: int) -> float:
    """Same tail as the package computes, but via scipy's incomplete beta."""
    from scipy.special import betainc

    return float(betainc(m, n - m + 1, p0))
