"""Absorbing balls, temperedness, tail estimates and pullback clouds."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, DomainError, HorizonError
from .lattice import SystemParams, StateE, norm2
from .ou import OUSeries, TemperednessReport, build_ou, temperedness_stat
from .solver import integrate_transformed, pullback_forcing_integral
from .stable import StablePath

C0 = 1.5


def cutoff(s):
    """Smoothstep: 0 on [0, 1], 3(s-1)^2 - 2(s-1)^3 on (1, 2), 1 beyond."""
    x = np.clip(np.asarray(s, dtype=float) - 1.0, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def cutoff_derivative(s):
    x = np.asarray(s, dtype=float) - 1.0
    inside = (x > 0) & (x < 1)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


@dataclass(frozen=True)
class AbsorbingEstimate:
    R2: float
    quad_horizon: float
    tail: float
    c1: float
    delta: float
    c2: float


def c2_constant(params: SystemParams) -> float:
    return 4.0 * C0 / min(1.0, 1.0 / params.rho)


def absorbing_radius(
    ou: OUSeries,
    params: SystemParams,
    quad_horizon: float = 40.0,
    at: float = 0.0,
    tail_tol: float = 1e-12,
    max_horizon: float | None = None,
) -> AbsorbingEstimate:
    """R^2(theta_at omega) = 1 + c1 (||h||^2 + ||g||^2) int_{-H}^0 (...) ds.

    The integrand is e^{-2 xi(s) + delta s + 2 int_s^0 xi}, integrated exactly
    cell by cell for the piecewise-constant xi.  With ``max_horizon`` the
    horizon H is doubled (capped at ``max_horizon``) until the integrand at
    -H drops below ``tail_tol``.
    """
    k1 = ou.index_of(at)
    H = quad_horizon
    while True:
        k0 = ou.index_of(at - H)
        G, tail = pullback_forcing_integral(ou.xi[k0:k1], ou.dt, params.delta)
        tail = float(tail)
        if params.forcing_norm2 == 0 or tail <= tail_tol:
            break
        if max_horizon is None or H >= max_horizon:
            raise HorizonError(
                f"integrand at horizon {H} is {tail:.3g} > {tail_tol:g}", tail=tail
            )
        H = min(2.0 * H, max_horizon)
    R2 = 1.0 + params.c1 * params.forcing_norm2 * float(G)
    return AbsorbingEstimate(R2, H, tail, params.c1, params.delta, c2_constant(params))


def _available_horizon(ou: OUSeries, at: float) -> float:
    # whole number of grid steps back to the start of the OU window
    return round((at - ou.t_start) / ou.dt) * ou.dt


def _sphere_directions(m: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.standard_normal((m, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def ball_points(
    m: int, I: int, radius: float, rng: np.random.Generator, on_sphere: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform directions times a radius uniform in [0, R] (or R on the sphere)."""
    n = 2 * I + 1
    d = _sphere_directions(m, 2 * n, rng)
    r = np.full(m, radius) if on_sphere else rng.uniform(0.0, radius, m)
    pts = d * r[:, None]
    return pts[:, :n], pts[:, n:]


@dataclass
class AbsorptionReport:
    seed: int | None
    R2: float
    t_grid: list[float]
    terminal: list[float]
    absorbed: list[bool]
    t_B: float | None

    def rows(self):
        for t, e, a in zip(self.t_grid, self.terminal, self.absorbed):
            yield (t, self.seed, e, self.R2, a)


def _first_persistent(t_grid, ok) -> float | None:
    t_B = None
    for t, good in zip(reversed(t_grid), reversed(ok)):
        if not good:
            break
        t_B = t
    return t_B


def pullback_absorption_experiment(
    params: SystemParams,
    path: StablePath,
    B_radius: float,
    t_grid,
    m_dirs: int = 8,
    dt: float | None = None,
    quad_horizon: float = 40.0,
    trunc_T: float = 40.0,
    dir_seed: int = 0,
    ou: OUSeries | None = None,
) -> AbsorptionReport:
    """Pull back the sphere of radius ``B_radius`` from each t and compare
    ||phi(t, theta_{-t} omega, e^{-xi(theta_{-t} omega)} Psi0)||^2 with R^2(omega)."""
    t_grid = sorted(float(t) for t in t_grid)
    if ou is None:
        ou = build_ou(path, params.epsilons, trunc_T)
    R2 = absorbing_radius(
        ou, params, quad_horizon, max_horizon=_available_horizon(ou, 0.0)
    ).R2
    rng = np.random.default_rng(np.random.SeedSequence([dir_seed, 0xAB5]))
    U0, V0 = ball_points(m_dirs, params.I, B_radius, rng, on_sphere=True)
    terminal, absorbed = [], []
    for t in t_grid:
        if t == 0.0:
            e = float(np.max(norm2(U0) + norm2(V0)))
        else:
            x = ou.xi[ou.index_of(-t)]
            s = math.exp(-x)
            tr = integrate_transformed(
                params, ou, (s * U0, s * V0), (-t, 0.0), dt, seed=path.seed, auto_refine=True
            )
            e = float(np.max(tr.norm2[-1]))
        terminal.append(e)
        absorbed.append(e <= R2)
    return AbsorptionReport(
        path.seed, R2, t_grid, terminal, absorbed, _first_persistent(t_grid, absorbed)
    )


@dataclass
class TemperednessOfK:
    seed: int | None
    t: np.ndarray
    R2: np.ndarray
    report: TemperednessReport

    @property
    def decayed(self) -> np.ndarray:
        return self.report.decayed

    @property
    def verdict(self) -> bool:
        return self.report.verdict


def radius_series(
    ou: OUSeries, params: SystemParams, t_grid, quad_horizon: float = 40.0
) -> np.ndarray:
    """R^2(theta_{-t} omega) for each t in ``t_grid``."""
    return np.array(
        [
            absorbing_radius(
                ou, params, quad_horizon, at=-float(t),
                max_horizon=_available_horizon(ou, -float(t)),
            ).R2
            for t in t_grid
        ]
    )


def temperedness_of_K(
    params: SystemParams,
    paths: list[StablePath],
    gamma: float,
    t_grid,
    quad_horizon: float = 40.0,
    trunc_T: float = 40.0,
) -> list[TemperednessOfK]:
    t_grid = np.asarray(t_grid, dtype=float)
    out = []
    for path in paths:
        need = float(t_grid.max()) + quad_horizon + trunc_T
        if -path.t_start < need - 1e-9:
            raise DomainError(
                f"path window starts at {path.t_start}, need {-need} for t up to {t_grid.max()}"
            )
        ou = build_ou(path, params.epsilons, trunc_T)
        R2 = radius_series(ou, params, t_grid, quad_horizon)
        out.append(TemperednessOfK(path.seed, t_grid, R2, temperedness_stat(t_grid, R2, gamma)))
    return out


def _check_N(N: int, I: int):
    if N >= I:
        raise DomainError(f"tail index N={N} must be below the truncation radius I={I}")
    if N < 0:
        raise DomainError("N must be nonnegative")


def tail_mass(U, V, N: int):
    """sum_{|i| > N} (U_i^2 + V_i^2); batch axes allowed."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    I = (U.shape[-1] - 1) // 2
    _check_N(N, I)
    far = np.abs(np.arange(-I, I + 1)) > N
    return np.sum(U[..., far] ** 2 + V[..., far] ** 2, axis=-1)


def cutoff_mass(U, V, N: int):
    """sum_i rho(|i|/N) (U_i^2 + V_i^2)."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    I = (U.shape[-1] - 1) // 2
    _check_N(N, I)
    if N == 0:
        raise DomainError("cutoff needs N >= 1")
    w = cutoff(np.abs(np.arange(-I, I + 1)) / N)
    return np.sum(w * (U * U + V * V), axis=-1)


@dataclass
class NullnessReport:
    t_grid: list[float]
    N_grid: list[int]
    eps: float
    table: np.ndarray  # (t, N, seed) -> max over points of tail_mass(phi, 2N)
    seeds: list
    T_tilde: float | None
    N_tilde: int | None
    achieved_min: float
    blowups: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.N_tilde is not None

    @property
    def monotone_in_N(self) -> bool:
        d = np.diff(self.table, axis=1)
        return bool(np.all(d <= 0.0))

    def rows(self):
        for a, t in enumerate(self.t_grid):
            for b, N in enumerate(self.N_grid):
                for c, s in enumerate(self.seeds):
                    yield (t, N, s, float(self.table[a, b, c]))


def asymptotic_null_experiment(
    params: SystemParams,
    paths: list[StablePath] | StablePath,
    t_grid,
    N_grid,
    eps: float,
    m_points: int = 4,
    dt: float | None = None,
    quad_horizon: float = 40.0,
    trunc_T: float = 40.0,
    point_seed: int = 0,
) -> NullnessReport:
    """Tabulate sup over K(theta_{-t} omega) samples of tail_mass(phi, 2N).

    (T~, N~): smallest N for which some grid time T~ has tail <= eps^2 at
    every tested t >= T~, uniformly over all points and paths.
    """
    if isinstance(paths, StablePath):
        paths = [paths]
    t_grid = sorted(float(t) for t in t_grid)
    N_grid = sorted(int(n) for n in N_grid)
    for N in N_grid:
        _check_N(2 * N, params.I)
    table = np.zeros((len(t_grid), len(N_grid), len(paths)))
    blowups = []
    for c, path in enumerate(paths):
        ou = build_ou(path, params.epsilons, trunc_T)
        rng = np.random.default_rng(np.random.SeedSequence([point_seed, 0x7A11, c]))
        for a, t in enumerate(t_grid):
            R = math.sqrt(
                absorbing_radius(
                    ou, params, quad_horizon, at=-t,
                    max_horizon=_available_horizon(ou, -t),
                ).R2
            )
            U0, V0 = ball_points(m_points, params.I, R, rng)
            try:
                tr = integrate_transformed(params, ou, (U0, V0), (-t, 0.0), dt, seed=path.seed, auto_refine=True)
            except BlowUpError as exc:
                blowups.append(exc.seed)
                table[a, :, c] = np.nan
                continue
            for b, N in enumerate(N_grid):
                table[a, b, c] = float(np.max(tail_mass(tr.U[-1], tr.V[-1], 2 * N)))
    worst = np.nanmax(table, axis=2) if len(paths) else table[..., 0]
    T_tilde = N_tilde = None
    for b, N in enumerate(N_grid):
        ok = [bool(v <= eps * eps) for v in worst[:, b]]
        T = _first_persistent(t_grid, ok)
        if T is not None:
            T_tilde, N_tilde = T, N
            break
    return NullnessReport(
        t_grid, N_grid, eps, table, [p.seed for p in paths], T_tilde, N_tilde,
        float(np.nanmin(worst)), blowups,
    )


def hausdorff_semidist(X, Y) -> float:
    """sup_{x in X} inf_{y in Y} ||x - y|| by exhaustive pairing."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0 or Y.shape[0] == 0 or X.size == 0 or Y.size == 0:
        raise DomainError("Hausdorff semi-distance needs nonempty sets")
    if X.shape[1] != Y.shape[1]:
        raise DomainError("point sets live in different windows")
    best = np.array([np.min(np.sum((Y - x) ** 2, axis=1)) for x in X])
    return float(np.sqrt(np.max(best)))


@dataclass
class AttractorCloud:
    t_pullback: float
    U: np.ndarray
    V: np.ndarray
    seed: int | None
    R2_start: float

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([self.U, self.V], axis=-1)

    @property
    def diameter(self) -> float:
        P = self.points
        if len(P) < 2:
            return 0.0
        d = P[:, None, :] - P[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))

    @property
    def center(self) -> StateE:
        return StateE(self.U.mean(axis=0), self.V.mean(axis=0))

    def rows(self):
        I = (self.U.shape[-1] - 1) // 2
        for p in range(self.U.shape[0]):
            for j in range(self.U.shape[-1]):
                yield (self.t_pullback, p, j - I, float(self.U[p, j]), float(self.V[p, j]))


def attractor_cloud(
    params: SystemParams,
    path: StablePath,
    t_pullback: float,
    m_points: int,
    dt: float | None = None,
    quad_horizon: float = 40.0,
    trunc_T: float = 40.0,
    point_seed: int = 0,
    ou: OUSeries | None = None,
) -> AttractorCloud:
    """Push m points of K(theta_{-t} omega) forward by phi(t, theta_{-t} omega, .)."""
    if m_points < 1:
        raise DomainError("need at least one point")
    if ou is None:
        ou = build_ou(path, params.epsilons, trunc_T)
    R2 = absorbing_radius(
        ou, params, quad_horizon, at=-t_pullback,
        max_horizon=_available_horizon(ou, -t_pullback),
    ).R2
    rng = np.random.default_rng(
        np.random.SeedSequence([point_seed, 0xC10D, int(round(t_pullback * 1000))])
    )
    U0, V0 = ball_points(m_points, params.I, math.sqrt(R2), rng)
    tr = integrate_transformed(params, ou, (U0, V0), (-t_pullback, 0.0), dt, seed=path.seed, auto_refine=True)
    return AttractorCloud(t_pullback, tr.U[-1], tr.V[-1], path.seed, R2)


def nesting_distances(clouds: list[AttractorCloud]) -> list[float]:
    """d(cloud(t_k), cloud(t_{k+1})) along an increasing schedule."""
    clouds = sorted(clouds, key=lambda c: c.t_pullback)
    return [
        hausdorff_semidist(a.points, b.points) for a, b in zip(clouds, clouds[1:])
    ]


def write_rows(dest, header, rows) -> None:
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
