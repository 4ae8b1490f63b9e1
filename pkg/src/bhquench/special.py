"""Bessel function J0: power series for |x| < 12, Hankel asymptotics beyond."""

import math

import numpy as np

SERIES_LIMIT = 12.0
FIRST_ZERO = 2.404825557695773


def _j0_series(x):
    # sum_k (-x^2/4)^k / (k!)^2, truncated once terms drop below 1e-17 of the peak
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 80):
        term = term * q / (k * k)
        total = total + term
        if np.all(np.abs(term) < 1e-17):
            break
    return total


def _j0_asymptotic(x):
    # J0(x) ~ sqrt(2/(pi x)) (P cos(x - pi/4) - Q sin(x - pi/4)), mu = 0
    z = 8.0 * x
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    # a_k(0) = prod_{j=1..k} -(2j-1)^2 / (j z); even k feed P, odd k feed Q
    for k in range(1, 60):
        nxt = term * (-((2 * k - 1) ** 2)) / (k * z)
        active &= np.abs(nxt) < np.abs(term)
        if not active.any():
            break
        term = np.where(active, nxt, 0.0)
        if k % 2 == 1:
            q = q + term * (-1) ** ((k - 1) // 2)
        else:
            p = p + term * (-1) ** (k // 2)
    phase = x - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(phase) - q * np.sin(phase))


def j0(x):
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < SERIES_LIMIT
    out[small] = _j0_series(x[small])
    if np.any(~small):
        out[~small] = _j0_asymptotic(x[~small])
    return out if out.ndim else float(out)
