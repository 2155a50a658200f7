"""Stationary Ornstein-Uhlenbeck processes driven by a sampled Levy path.

z(theta_t omega) = -int_{-inf}^0 e^s theta_t omega(s) ds solves dz + z dt = dL.
The improper integral is truncated at ``trunc_T`` and evaluated with the
composite trapezoid rule on the path grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, InsufficientDataError, OverflowDiagnostic
from .stable import StablePath

DEFAULT_TRUNC_T = 40.0
XI_GUARD = 700.0


@dataclass(frozen=True)
class OUValue:
    value: float
    truncation_bound: float


def _window(path: StablePath, idx: int, trunc_T: float) -> int:
    if trunc_T < 30.0:
        raise DomainError(f"trunc_T must be >= 30, got {trunc_T}")
    n = int(math.ceil(trunc_T / path.dt - 1e-9))
    if idx - n < 0:
        raise DomainError(
            f"quadrature window [t - {trunc_T}, t] leaves the sampled path"
        )
    return n


def _ou_quadrature(vals: np.ndarray, idx: int, n: int, dt: float):
    # vals: one channel of raw-ish values; integrand uses vals - vals[idx]
    seg = vals[idx - n : idx + 1] - vals[idx]
    s = np.arange(-n, 1) * dt
    f = np.exp(s) * seg
    integral = dt * (f.sum() - 0.5 * (f[0] + f[-1]))
    # linear-growth envelope |theta_t omega(s)| <= C (1 + |s|) on the window,
    # extended beyond it: tail <= C e^{-T} (2 + T)
    c = float(np.max(np.abs(seg) / (1.0 + np.abs(s)))) if n else 0.0
    T = n * dt
    return -float(integral), c * math.exp(-T) * (2.0 + T)


def ou_at(path: StablePath, channel: int, t: float, trunc_T: float = DEFAULT_TRUNC_T):
    """z_j(theta_t omega) by truncated trapezoid quadrature.

    Returns an :class:`OUValue` carrying the truncation error bound.
    """
    idx = path.index_of(t)
    n = _window(path, idx, trunc_T)
    val, bound = _ou_quadrature(path.raw[channel], idx, n, path.dt)
    return OUValue(val, bound)


def ou_series(
    path: StablePath,
    channel: int,
    trunc_T: float = DEFAULT_TRUNC_T,
    t_first: float | None = None,
) -> np.ndarray:
    """z_j on every node from ``t_first`` (default: earliest admissible) to the end.

    The first node comes from quadrature, later nodes from
    z(t + dt) = e^{-dt} z(t) + (L(t + dt) - L(t)).
    """
    n = _window(path, path.n_nodes - 1, trunc_T)
    first = n if t_first is None else path.index_of(t_first)
    _window(path, first, trunc_T)
    raw = path.raw[channel]
    z = np.empty(path.n_nodes - first)
    z[0], _ = _ou_quadrature(raw, first, n, path.dt)
    decay = math.exp(-path.dt)
    inc = np.diff(raw[first:])
    if len(inc):
        z[1:], _ = lfilter([1.0], [1.0, -decay], inc, zi=[decay * z[0]])
    return z


def xi_series(z: np.ndarray, epsilons) -> np.ndarray:
    """xi[k] = sum_j eps_j z_j[k]; ``z`` has shape (channels, nodes)."""
    z = np.asarray(z, dtype=float)
    eps = np.asarray(epsilons, dtype=float)
    if z.ndim != 2 or z.shape[0] != eps.shape[0]:
        raise DomainError(
            f"{z.shape[0] if z.ndim == 2 else '?'} OU channels but {eps.shape[0]} epsilons"
        )
    if eps.shape[0] == 0:
        return np.zeros(z.shape[1])
    out = eps[0] * z[0]
    for j in range(1, eps.shape[0]):
        out = out + eps[j] * z[j]
    return out


def lambda_factor(xi):
    """e^{xi}; the conjugacy factor Lambda as a scalar."""
    _guard(xi)
    return np.exp(xi)


def lambda_inverse(xi):
    _guard(xi)
    return np.exp(-xi)


def _guard(xi):
    m = np.max(np.abs(xi)) if np.ndim(xi) else abs(xi)
    if not m <= XI_GUARD:
        raise OverflowDiagnostic(
            f"|xi| = {m:.3g} exceeds {XI_GUARD}: pathological path or trunc_T"
        )


@dataclass(frozen=True, eq=False)
class OUSeries:
    """z_j(theta_{t_k} omega) and xi on the grid t_k = t_start + k dt."""

    t_start: float
    dt: float
    z: np.ndarray
    xi: np.ndarray
    epsilons: tuple[float, ...]
    trunc_T: float = DEFAULT_TRUNC_T

    @property
    def n_steps(self) -> int:
        return len(self.xi) - 1

    @property
    def times(self) -> np.ndarray:
        k0 = round(self.t_start / self.dt)
        return (np.arange(len(self.xi)) + k0) * self.dt

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_steps * self.dt

    def index_of(self, t: float) -> int:
        k = round((t - self.t_start) / self.dt)
        if abs(self.t_start + k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"t={t} is not on the OU grid")
        if not 0 <= k < len(self.xi):
            raise DomainError(
                f"t={t} outside OU window [{self.t_start}, {self.t_end}]"
            )
        return int(k)

    def to_csv(self, dest) -> None:
        t = self.times
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *[f"z_{j + 1}" for j in range(self.z.shape[0])], "xi"])
            for k in range(len(self.xi)):
                w.writerow(
                    [repr(float(t[k]))]
                    + [repr(float(v)) for v in self.z[:, k]]
                    + [repr(float(self.xi[k]))]
                )


def build_ou(
    path: StablePath,
    epsilons,
    trunc_T: float = DEFAULT_TRUNC_T,
    t_first: float | None = None,
    guard: bool = True,
) -> OUSeries:
    """OU series for every channel of ``path`` plus the aggregate xi."""
    eps = tuple(float(e) for e in epsilons)
    if len(eps) != path.channels:
        raise DomainError(f"{path.channels} channels but {len(eps)} epsilons")
    if t_first is None:
        first = int(math.ceil(trunc_T / path.dt - 1e-9))
    else:
        first = path.index_of(t_first)
    _window(path, first, trunc_T)
    t0 = (first - path.origin) * path.dt
    n = path.n_nodes - first
    if path.channels:
        z = np.vstack(
            [ou_series(path, j, trunc_T, t_first=t0) for j in range(path.channels)]
        )
    else:
        z = np.zeros((0, n))
    xi = xi_series(z, eps)
    if guard:
        _guard(xi)
    return OUSeries(t0, path.dt, z, xi, eps, trunc_T)


@dataclass(frozen=True)
class TemperednessReport:
    t: np.ndarray
    decayed: np.ndarray
    verdict: bool


def temperedness_stat(t, r, gamma: float) -> TemperednessReport:
    """e^{-gamma t} r(theta_{-t} omega) and a decreasing-trend verdict.

    Verdict: max over the last decile < min over the first decile / 10.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if t.size < 10 or t.max() - t.min() < 100.0:
        raise InsufficientDataError("temperedness needs a t-grid spanning >= 100")
    decayed = np.exp(-gamma * t) * r
    d = max(1, len(t) // 10)
    verdict = bool(decayed[-d:].max() < decayed[:d].min() / 10.0)
    return TemperednessReport(t, decayed, verdict)
