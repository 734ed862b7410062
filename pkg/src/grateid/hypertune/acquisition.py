"""Acquisition functions for minimization."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm


def expected_improvement(mu, sigma, best):
    """Expected improvement below ``best`` for a normal posterior N(mu, sigma^2).

    Reduces to max(best - mu, 0) where sigma is zero.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    imp = best - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = imp * norm.cdf(z) + sigma * norm.pdf(z)
    ei = np.where(sigma > 0, ei, np.maximum(imp, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def probability_of_feasibility(mu, sigma):
    """P(g > 0) for a latent feasibility score g ~ N(mu, sigma^2)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(sigma > 0, norm.cdf(mu / np.where(sigma > 0, sigma, 1.0)),
                     (mu > 0).astype(float))
    return p
