"""Alpha-stable sampling and two-sided Levy sample paths.

Variates follow the S_alpha(sigma, beta, nu) parameterisation with
characteristic function

    exp(-sigma^alpha |t|^alpha (1 - i beta sign(t) tan(pi alpha / 2)) + i nu t)

for alpha != 1, so that S_2(sigma, 0, mu) = N(mu, 2 sigma^2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, GridAlignmentError, InsufficientDataError

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0
    sigma: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not -1.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.sigma >= 0.0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if not math.isfinite(self.nu):
            raise DomainError(f"nu must be finite, got {self.nu}")


def sample_stable(p: StableParams, rng: np.random.Generator, size=None):
    """Draw S_alpha(sigma, beta, nu) variates (Chambers-Mallows-Stuck).

    Returns a float when ``size`` is None, otherwise an array.
    """
    if p.sigma == 0.0:
        if size is None:
            return float(p.nu)
        return np.full(size, p.nu, dtype=float)

    a, b = p.alpha, p.beta
    # one (uniform, uniform) pair per draw, so a longer request extends a
    # shorter one from the same stream instead of reshuffling it
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    pair = rng.random(shape + (2,))
    v = np.pi * (pair[..., 0] - 0.5)
    w = -np.log1p(-pair[..., 1])
    if a == 1.0:
        half_pi = np.pi / 2
        bv = half_pi + b * v
        x = (bv * np.tan(v) - b * np.log(half_pi * w * np.cos(v) / bv)) / half_pi
        y = p.sigma * x + (2 / np.pi) * b * p.sigma * math.log(p.sigma) + p.nu
    else:
        tan_term = b * math.tan(np.pi * a / 2)
        shift = math.atan(tan_term) / a
        scale = (1.0 + tan_term**2) ** (1 / (2 * a))
        arg = a * (v + shift)
        x = (
            scale
            * np.sin(arg)
            / np.cos(v) ** (1 / a)
            * (np.cos(v - arg) / w) ** ((1 - a) / a)
        )
        y = p.sigma * x + p.nu
    if size is None:
        return float(y)
    return y


def _side_rng(seed: int, channel: int, side: int) -> np.random.Generator:
    # side 0 = t > 0 increments, side 1 = t < 0 increments
    return np.random.default_rng(np.random.SeedSequence([seed, channel, side]))


def _grid_count(span: float, dt: float, what: str) -> int:
    n = round(span / dt)
    if abs(n * dt - span) > _GRID_TOL * max(1.0, abs(span)):
        raise GridAlignmentError(f"{what}={span} is not a multiple of dt={dt}")
    return int(n)


@dataclass(frozen=True, eq=False)
class StablePath:
    """Grid-valued two-sided path of independent Levy motions.

    ``raw`` holds one row per channel; the path value at node k is
    ``raw[:, k] - raw[:, origin]`` so that shifting only moves ``origin``.
    """

    raw: np.ndarray
    dt: float
    origin: int
    seed: int | None = None
    alpha: float | None = None
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        if raw.ndim != 2:
            raise DomainError("raw path array must be 2-D (channels, nodes)")
        if not 0 <= self.origin < raw.shape[1]:
            raise GridAlignmentError("time 0 is not a node of the path grid")
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        vals = raw - raw[:, self.origin : self.origin + 1]
        vals.setflags(write=False)
        object.__setattr__(self, "_values", vals)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def channels(self) -> int:
        return self.raw.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.raw.shape[1]

    @property
    def n_steps(self) -> int:
        return self.n_nodes - 1

    @property
    def t_start(self) -> float:
        return -self.origin * self.dt

    @property
    def t_end(self) -> float:
        return (self.n_nodes - 1 - self.origin) * self.dt

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.n_nodes) - self.origin) * self.dt

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; raises if ``t`` is off-grid or outside."""
        k = round(t / self.dt)
        if abs(k * self.dt - t) > _GRID_TOL * max(1.0, abs(t)):
            raise GridAlignmentError(f"t={t} is not a grid node (dt={self.dt})")
        idx = k + self.origin
        if not 0 <= idx < self.n_nodes:
            raise DomainError(
                f"t={t} outside path window [{self.t_start}, {self.t_end}]"
            )
        return int(idx)

    def increments(self) -> np.ndarray:
        return np.diff(self.raw, axis=1)

    def coarsen(self, factor: int) -> "StablePath":
        """Keep every ``factor``-th node (still exact in distribution)."""
        if factor < 1:
            raise DomainError("coarsening factor must be >= 1")
        start = self.origin % factor
        return StablePath(
            self.raw[:, start::factor],
            self.dt * factor,
            self.origin // factor,
            self.seed,
            self.alpha,
        )

    def to_csv(self, path) -> None:
        write_path_csv(self, path)


def gen_path(
    p: StableParams,
    channels: int,
    t_start: float,
    t_end: float,
    dt: float,
    seed: int,
) -> StablePath:
    """Sample a two-sided path with exact S_alpha(dt^(1/alpha), beta, 0) increments.

    Each channel and each side of t = 0 draws from its own seeded stream, so
    widening the window never changes the values already sampled.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if not t_start <= 0.0 <= t_end:
        raise GridAlignmentError("window must contain t = 0")
    n_neg = _grid_count(-t_start, dt, "t_start")
    n_pos = _grid_count(t_end, dt, "t_end")
    inc = StableParams(p.alpha, p.beta, dt ** (1 / p.alpha), 0.0)

    raw = np.zeros((channels, n_neg + n_pos + 1))
    for j in range(channels):
        fwd = sample_stable(inc, _side_rng(seed, j, 0), n_pos)
        bwd = sample_stable(inc, _side_rng(seed, j, 1), n_neg)
        raw[j, n_neg + 1 :] = np.cumsum(fwd)
        # omega(-m dt) = -(X_1 + ... + X_m)
        raw[j, :n_neg] = -np.cumsum(bwd)[::-1]
    return StablePath(raw, dt, n_neg, seed, p.alpha)


def shift_path(path: StablePath, t: float) -> StablePath:
    """Return theta_t omega: s -> omega(s + t) - omega(t) on the same raw grid."""
    return StablePath(path.raw, path.dt, path.index_of(t), path.seed, path.alpha)


@dataclass(frozen=True)
class GrowthReport:
    stat: float
    per_channel: tuple[float, ...]
    band: tuple[float, float]


def sublinear_growth_stat(
    path: StablePath, band: tuple[float, float] | None = None
) -> GrowthReport:
    """Max of |omega(t)/t| over the outer half of the window (or over ``band``).

    ``band`` = (lo, hi) restricts to lo <= |t| <= hi.
    """
    span = max(-path.t_start, path.t_end)
    if span < 100.0:
        raise InsufficientDataError(f"window length {span} < 100 time units")
    if band is None:
        band = (span / 2, span)
    lo, hi = band
    t = path.times
    mask = (np.abs(t) >= lo) & (np.abs(t) <= hi) & (t != 0)
    if not mask.any():
        raise InsufficientDataError(f"no grid nodes with |t| in {band}")
    if path.channels == 0:
        return GrowthReport(0.0, (), band)
    ratios = np.abs(path.values[:, mask] / t[mask])
    per = tuple(float(r) for r in ratios.max(axis=1))
    return GrowthReport(max(per), per, band)


def write_path_csv(path: StablePath, dest) -> None:
    t = path.times
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "channel", "value"])
        for j in range(path.channels):
            vals = path.values[j]
            for k in range(path.n_nodes):
                w.writerow([repr(float(t[k])), j, repr(float(vals[k]))])


def read_path_csv(src, dt: float | None = None) -> StablePath:
    """Load a path written by :func:`write_path_csv`."""
    rows: dict[int, list[tuple[float, float]]] = {}
    with open(Path(src), newline="") as fh:
        reader = csv.DictReader(fh)
        for r in reader:
            rows.setdefault(int(r["channel"]), []).append(
                (float(r["t"]), float(r["value"]))
            )
    if not rows:
        raise InsufficientDataError("empty path file")
    chans = sorted(rows)
    times = np.array([t for t, _ in rows[chans[0]]])
    raw = np.array([[v for _, v in rows[j]] for j in chans])
    if dt is None:
        dt = float(times[1] - times[0]) if len(times) > 1 else 1.0
    origin = int(np.argmin(np.abs(times)))
    if times[origin] != 0.0:
        raise GridAlignmentError("loaded path has no node at t = 0")
    return StablePath(raw, dt, origin)
