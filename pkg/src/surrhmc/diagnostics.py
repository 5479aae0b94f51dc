"""Chain quality metrics: effective sample size, running-mean error, summaries.

All functions are pure; per-dimension work is independent and safe to
parallelize by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .hmc import EXPLOITATION


def _autocorrelations(x):
    """Normalized sample autocorrelations of a centered series via FFT."""
    n = x.shape[0]
    m = next_fast_len(2 * n)
    f = rfft(x, m)
    acov = irfft(f * np.conj(f), m)[:n]
    return acov / acov[0]


def ess(series):
    """Effective sample size of one scalar series.

    B / (1 + 2 * sum of autocorrelations), truncated by the initial
    monotone positive sequence rule: autocorrelations are summed in
    adjacent pairs, the sum stops at the first non-positive pair, and the
    kept pairs are forced non-increasing.  The result is clamped to (0, B]
    (a noisy estimate on anticorrelated series can otherwise exceed B).
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = x.shape[0]
    if n < 10:
        raise ValueError("need at least 10 samples for an ESS estimate")
    x = x - x.mean()
    if np.max(np.abs(x)) == 0.0:
        raise ValueError("constant series has undefined autocorrelation")
    rho = _autocorrelations(x)
    # Pair sums rho(2m) + rho(2m+1); an odd tail contributes alone.
    n_pairs = (n + 1) // 2
    padded = np.zeros(2 * n_pairs)
    padded[:n] = rho
    pair_sums = padded[0::2] + padded[1::2]
    total = 0.0
    running_min = np.inf
    for gamma in pair_sums:
        if gamma <= 0.0:
            break
        running_min = min(running_min, gamma)
        total += running_min
    tau = 2.0 * total - 1.0
    if tau <= 0.0:
        return float(n)
    return float(min(n, max(n / tau, np.finfo(float).tiny)))


def ess_per_dimension(samples):
    """ESS of each coordinate series of an (n, d) sample matrix."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must be a 2-d matrix")
    return np.array([ess(samples[:, j]) for j in range(samples.shape[1])])


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-chain efficiency summary (ESS triple, acceptance, timing)."""

    ess_per_dim: np.ndarray
    min_ess: float
    median_ess: float
    max_ess: float
    acceptance_rate: float
    seconds_per_iteration: float
    total_seconds: float
    min_ess_per_second: float
    divergences: int

    def to_dict(self, speedup_vs_baseline=None):
        payload = {
            "acceptance_rate": self.acceptance_rate,
            "seconds_per_iteration": self.seconds_per_iteration,
            "ess": {
                "min": self.min_ess,
                "median": self.median_ess,
                "max": self.max_ess,
            },
            "min_ess_per_second": self.min_ess_per_second,
            "divergences": self.divergences,
        }
        if speedup_vs_baseline is not None:
            payload["speedup_vs_baseline"] = speedup_vs_baseline
        return payload


def summarize(chain):
    """Diagnostics over the exploitation phase of a chain.

    Position series only; exploration iterations are excluded by the usual
    burn-in convention.  Acceptance and divergences cover the whole run.
    """
    mask = chain.phase == EXPLOITATION
    samples = chain.samples[mask]
    if samples.shape[0] < 10:
        raise ValueError("exploitation phase must have at least 10 samples")
    per_dim = ess_per_dimension(samples)
    seconds = chain.seconds[mask]
    total = float(np.sum(seconds))
    min_ess = float(np.min(per_dim))
    return DiagnosticsReport(
        ess_per_dim=per_dim,
        min_ess=min_ess,
        median_ess=float(np.median(per_dim)),
        max_ess=float(np.max(per_dim)),
        acceptance_rate=chain.acceptance_rate,
        seconds_per_iteration=float(np.mean(seconds)),
        total_seconds=total,
        min_ess_per_second=min_ess / total,
        divergences=chain.divergences,
    )


def speedup(report, baseline):
    """Time-normalized efficiency ratio min(ESS)/s over a baseline report."""
    return report.min_ess_per_second / baseline.min_ess_per_second


@dataclass(frozen=True)
class REMTrace:
    """Relative error of the running mean against a declared reference."""

    times: np.ndarray
    rem: np.ndarray
    reference_mean: np.ndarray

    def at_time(self, budget):
        """REM of the last sample recorded no later than ``budget`` seconds."""
        idx = np.searchsorted(self.times, budget, side="right") - 1
        if idx < 0:
            raise ValueError(f"no samples recorded by t={budget}")
        return float(self.rem[idx])


def rem_trace(chain, reference_mean, seconds=None, include_exploration=False):
    """Running ||mean(q_1..t) - ref|| / ||ref|| against cumulative time.

    Uses exploitation samples by default.  ``seconds`` overrides the
    chain's recorded per-iteration times (e.g. to use an external clock).
    """
    reference_mean = np.asarray(reference_mean, dtype=float)
    ref_norm = np.linalg.norm(reference_mean)
    if ref_norm == 0.0:
        raise ValueError("reference mean must have non-zero norm")
    mask = (
        np.ones(len(chain), dtype=bool)
        if include_exploration
        else chain.phase == EXPLOITATION
    )
    samples = chain.samples[mask]
    if samples.shape[0] < 1:
        raise ValueError("chain has no samples in the requested phase")
    if reference_mean.shape != (samples.shape[1],):
        raise ValueError("reference mean dimension does not match samples")
    per_iter = chain.seconds[mask] if seconds is None else np.asarray(seconds, float)
    if per_iter.shape[0] != samples.shape[0]:
        raise ValueError("seconds length does not match sample count")
    running = np.cumsum(samples, axis=0) / np.arange(1, samples.shape[0] + 1)[:, None]
    rem = np.linalg.norm(running - reference_mean, axis=1) / ref_norm
    return REMTrace(
        times=np.cumsum(per_iter), rem=rem, reference_mean=reference_mean
    )
