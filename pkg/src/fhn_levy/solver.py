"""Integrators for the lattice system.

The transformed random ODE for Psi = (U, V) is

    dU/dt = -AU - (lam - xi) U + f_sign e^{-xi} f(e^{xi} U) - V + e^{-xi} h
    dV/dt = rho U - (varpi - xi) V + e^{-xi} g

with xi frozen at its left grid node inside each path cell.  The original
Marcus system is recovered by psi(t) = e^{xi(theta_t omega)} Psi(t) or
integrated directly by drift/jump splitting.

States carry arbitrary leading batch axes; an ensemble of paths is run in
one loop by passing a ``(nodes, *batch)`` xi table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, DomainError, StepSizeError
from .lattice import SystemParams, StateE, energy, norm2, op_A
from .ou import OUSeries, _guard
from .stable import StablePath

BLOWUP_ENERGY = 1e12


def drift_transformed(U, V, xi, params: SystemParams):
    """Right-hand side of the transformed system at one instant."""
    _guard(xi)
    xi = np.asarray(xi, dtype=float)[..., None]
    return _drift(U, V, xi, np.exp(-xi), np.exp(2.0 * xi), params)


def _drift(U, V, xi, emx, e2x, p: SystemParams):
    # e^{-xi} f(e^{xi} U) = kappa e^{2 xi} U^3 for the cubic nonlinearity
    dU = -op_A(U) - (p.lam - xi) * U - V + emx * p.h
    if p.f_sign and np.any(p.kappa):
        dU += p.f_sign * p.kappa * e2x * U * U * U
    dV = p.rho * U - (p.varpi - xi) * V + emx * p.g
    return dU, dV


def energy_rate(U, V, xi, params: SystemParams):
    """Exact d/dt of E_rho along the transformed vector field."""
    dU, dV = drift_transformed(U, V, xi, params)
    return 2.0 * np.sum(U * dU, axis=-1) + 2.0 / params.rho * np.sum(V * dV, axis=-1)


def energy_bound_rhs(E, xi, params: SystemParams):
    """Right side of the energy inequality:
    -(delta - 2 xi) E + (||h||^2 + ||g||^2/rho) e^{-2 xi} / delta."""
    p = params
    forcing = float(norm2(p.h) + norm2(p.g) / p.rho) / p.delta
    return -(p.delta - 2.0 * xi) * E + forcing * np.exp(-2.0 * xi)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on grid nodes t[0..K]; U and V have shape (K+1, *batch, n)."""

    t: np.ndarray
    U: np.ndarray
    V: np.ndarray
    params: SystemParams
    integrator: str
    seed: int | tuple | None = None
    dt: float = 0.0

    @property
    def norm2(self) -> np.ndarray:
        return norm2(self.U) + norm2(self.V)

    @property
    def energy(self) -> np.ndarray:
        return energy(self.U, self.V, self.params.rho)

    def state(self, k: int) -> StateE:
        return StateE(self.U[k], self.V[k])

    @property
    def final(self) -> StateE:
        return self.state(-1)

    def to_csv(self, dest) -> None:
        """`t,E,norm2_U,norm2_V` for an unbatched trajectory."""
        if self.U.ndim != 2:
            raise DomainError("summary CSV needs an unbatched trajectory")
        E = self.energy
        nu, nv = norm2(self.U), norm2(self.V)
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "E", "norm2_U", "norm2_V"])
            for k in range(len(self.t)):
                w.writerow([repr(float(x)) for x in (self.t[k], E[k], nu[k], nv[k])])

    def states_to_csv(self, dest) -> None:
        if self.U.ndim != 2:
            raise DomainError("state CSV needs an unbatched trajectory")
        I = (self.U.shape[-1] - 1) // 2
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "i", "U_i", "V_i"])
            for k in range(len(self.t)):
                tk = repr(float(self.t[k]))
                for j in range(self.U.shape[-1]):
                    w.writerow(
                        [tk, j - I, repr(float(self.U[k, j])), repr(float(self.V[k, j]))]
                    )


def _refine_factor(grid_dt: float, dt: float | None) -> int:
    if dt is None:
        return 1
    r = round(grid_dt / dt)
    if r < 1 or abs(r * dt - grid_dt) > 1e-9 * grid_dt:
        raise DomainError(f"dt={dt} must divide the grid step {grid_dt}")
    return int(r)


def _stiffness(U, xk, e2x, p: SystemParams) -> float:
    # Jacobian of the cubic term is 3 kappa e^{2 xi} U_i^2, per batch member
    if not U.size:
        return 0.0
    cubic = 3.0 * p.kappa_max * np.max(U * U, axis=-1, keepdims=True) * e2x
    return float(np.max(4.0 + p.lam + np.abs(xk) + cubic))


def _substeps(U, xk, e2x, dt, p: SystemParams, auto_refine: bool) -> int:
    """1 if dt is stable on this cell; otherwise a subdivision or an error."""
    stiff = _stiffness(U, xk, e2x, p)
    if dt * stiff < 2.0:
        return 1
    if not auto_refine:
        raise StepSizeError(
            f"dt={dt} violates explicit stability bound (need dt < {2.0 / stiff:.3g})",
            suggested_dt=1.9 / stiff,
        )
    return int(math.ceil(dt * stiff / 1.9))


def _run(
    p: SystemParams,
    U: np.ndarray,
    V: np.ndarray,
    xi_cells: np.ndarray,
    jumps: np.ndarray | None,
    dt: float,
    refine: int,
    seed,
    t_nodes: np.ndarray,
    check_stability: bool,
    auto_refine: bool = False,
):
    """Core RK4 loop over K cells of ``refine`` substeps each.

    xi_cells[k] is the frozen xi on cell k, shape ``batch``; jumps[k], if
    given, multiplies the state after the drift substeps of cell k.  With
    ``auto_refine`` a cell violating the stability bound is split further.
    """
    K = len(xi_cells)
    out_U = np.empty((K + 1,) + U.shape)
    out_V = np.empty((K + 1,) + V.shape)
    out_U[0], out_V[0] = U, V
    cell_dt = dt * refine
    for k in range(K):
        xk = np.asarray(xi_cells[k], dtype=float)[..., None]
        emx = np.exp(-xk)
        e2x = np.exp(2.0 * xk)
        n_sub = refine
        if check_stability:
            n_sub *= _substeps(U, xk, e2x, dt, p, auto_refine)
        h = cell_dt / n_sub
        half = 0.5 * h
        sixth = h / 6.0
        # a blow-up inside the cell surfaces as inf/nan at the node check below
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(n_sub):
                k1u, k1v = _drift(U, V, xk, emx, e2x, p)
                k2u, k2v = _drift(U + half * k1u, V + half * k1v, xk, emx, e2x, p)
                k3u, k3v = _drift(U + half * k2u, V + half * k2v, xk, emx, e2x, p)
                k4u, k4v = _drift(U + h * k3u, V + h * k3v, xk, emx, e2x, p)
                U = U + sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
                V = V + sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if jumps is not None:
            jf = np.asarray(jumps[k])[..., None]
            U = U * jf
            V = V * jf
        e = norm2(U) + norm2(V)
        if not np.all(e <= BLOWUP_ENERGY):
            raise BlowUpError(
                f"energy exceeded {BLOWUP_ENERGY:g} at t={t_nodes[k + 1]:.6g}",
                seed=seed,
                t=float(t_nodes[k + 1]),
            )
        out_U[k + 1], out_V[k + 1] = U, V
    return out_U, out_V


def _as_state(psi0) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(psi0, StateE):
        return psi0.U.copy(), psi0.V.copy()
    U, V = psi0
    return np.array(U, dtype=float), np.array(V, dtype=float)


def integrate_transformed(
    params: SystemParams,
    ou: OUSeries | list[OUSeries],
    psi0,
    t_span: tuple[float, float],
    dt: float | None = None,
    seed=None,
    check_stability: bool = True,
    auto_refine: bool = False,
) -> Trajectory:
    """Classical RK4 for the transformed system, recorded on the OU grid.

    ``ou`` may be a list of aligned series; their xi values then form a
    trailing batch axis matched against ``psi0`` of shape (len(ou), n).
    """
    ous = ou if isinstance(ou, (list, tuple)) else [ou]
    ref = ous[0]
    k0, k1 = ref.index_of(t_span[0]), ref.index_of(t_span[1])
    if k1 < k0:
        raise DomainError("t_span must be increasing")
    if any(o.dt != ref.dt for o in ous):
        raise DomainError("OU series are not aligned")
    refine = _refine_factor(ref.dt, dt)
    h = ref.dt / refine
    if isinstance(ou, (list, tuple)):
        starts = [o.index_of(t_span[0]) for o in ous]
        xi = np.stack([o.xi[i : i + k1 - k0] for o, i in zip(ous, starts)], axis=-1)
    else:
        xi = ref.xi[k0:k1]
    if xi.size:
        _guard(xi)
    U, V = _as_state(psi0)
    t_nodes = ref.times[k0 : k1 + 1]
    out_U, out_V = _run(
        params, U, V, xi, None, h, refine, seed, t_nodes, check_stability, auto_refine
    )
    return Trajectory(t_nodes, out_U, out_V, params, "rk4-transformed", seed, h)


def map_to_original(traj: Trajectory, ou: OUSeries | list[OUSeries]) -> Trajectory:
    """psi(t_k) = e^{xi[k]} Psi(t_k) at every recorded node."""
    ous = ou if isinstance(ou, (list, tuple)) else [ou]
    try:
        idx = [o.index_of(float(traj.t[0])) for o in ous]
    except DomainError as exc:
        raise DomainError(f"trajectory and OU grids do not align: {exc}") from exc
    K = len(traj.t)
    if isinstance(ou, (list, tuple)):
        xi = np.stack([o.xi[i : i + K] for o, i in zip(ous, idx)], axis=-1)
    else:
        xi = ou.xi[idx[0] : idx[0] + K]
    if xi.shape[0] != K:
        raise DomainError("OU series too short for the trajectory")
    fac = np.exp(xi)
    fac = fac.reshape(fac.shape + (1,) * (traj.U.ndim - fac.ndim))
    return Trajectory(
        traj.t, fac * traj.U, fac * traj.V, traj.params, "lambda-mapped", traj.seed, traj.dt
    )


def integrate_marcus_direct(
    params: SystemParams,
    path: StablePath | list[StablePath],
    psi0,
    t_span: tuple[float, float],
    dt: float | None = None,
    seed=None,
    check_stability: bool = True,
    auto_refine: bool = False,
) -> Trajectory:
    """Drift/jump splitting for the Marcus system.

    Per path step: one RK4 step of the noise-free drift, then the exact
    Marcus map for linear noise, multiplication by exp(sum_j eps_j dL_j).
    """
    paths = path if isinstance(path, (list, tuple)) else [path]
    ref = paths[0]
    if dt is not None and abs(dt - ref.dt) > 1e-12 * ref.dt:
        raise DomainError("direct Marcus integration requires dt == path grid step")
    eps = np.asarray(params.epsilons, dtype=float)
    logs = []
    for pth in paths:
        if pth.channels != eps.size:
            raise DomainError(f"{pth.channels} channels but {eps.size} epsilons")
        k0, k1 = pth.index_of(t_span[0]), pth.index_of(t_span[1])
        dL = np.diff(pth.raw[:, k0 : k1 + 1], axis=1)
        logs.append(eps @ dL if eps.size else np.zeros(k1 - k0))
    log_jump = np.stack(logs, axis=-1) if isinstance(path, (list, tuple)) else logs[0]
    if log_jump.size:
        _guard(log_jump)
    jumps = np.exp(log_jump)
    U, V = _as_state(psi0)
    zero_xi = np.zeros(log_jump.shape)
    k0 = ref.index_of(t_span[0])
    t_nodes = ref.times[k0 : k0 + len(log_jump) + 1]
    out_U, out_V = _run(
        params, U, V, zero_xi, jumps, ref.dt, 1, seed, t_nodes, check_stability,
        auto_refine,
    )
    return Trajectory(t_nodes, out_U, out_V, params, "marcus-split", seed, ref.dt)


@dataclass(frozen=True)
class ContinuityReport:
    ratio: float
    bound: float
    kappa: float
    lipschitz: float
    xi_max: float
    holds: bool


def continuity_modulus(
    params: SystemParams, ou: OUSeries, psi0, phi0, T: float, t0: float = 0.0, dt=None
) -> ContinuityReport:
    """sup ||Phi - Psi||^2 / ||Phi0 - Psi0||^2 against e^{kappa T}."""
    a = _as_state(psi0)
    b = _as_state(phi0)
    d0 = float(norm2(a[0] - b[0]) + norm2(a[1] - b[1]))
    if not d0 > 0:
        raise DomainError("initial states must differ")
    tr_a = integrate_transformed(params, ou, a, (t0, t0 + T), dt, auto_refine=True)
    tr_b = integrate_transformed(params, ou, b, (t0, t0 + T), dt, auto_refine=True)
    diff = norm2(tr_a.U - tr_b.U) + norm2(tr_a.V - tr_b.V)
    ratio = float(np.max(diff)) / d0
    k0 = ou.index_of(t0)
    xi_max = float(np.max(np.abs(ou.xi[k0 : k0 + len(tr_a.t)])))
    r2 = max(float(np.max(tr_a.U**2)), float(np.max(tr_b.U**2)))
    lip = 3.0 * params.kappa_max * r2 * math.exp(2.0 * xi_max)
    kappa = 2.0 * (lip + xi_max)
    bound = math.exp(kappa * T)
    return ContinuityReport(ratio, bound, kappa, lip, xi_max, ratio <= bound)


def pullback_forcing_integral(xi_cells: np.ndarray, dt: float, delta: float):
    """G = int_0^t e^{-delta (t - s) + 2 int_s^t xi} e^{-2 xi(s)} ds over the cells.

    xi is piecewise constant (left-node value on each cell), so each cell
    integral is evaluated in closed form.  Returns (G, tail) where ``tail``
    is the integrand at the left end of the window.  Accepts leading batch
    axes after the cell axis.
    """
    xi = np.asarray(xi_cells, dtype=float)
    if xi.shape[0] == 0:
        return np.zeros(xi.shape[1:]), np.ones(xi.shape[1:])
    b = 2.0 * xi - delta
    # int_0^dt e^{b (dt - s)} ds
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(b == 0.0, dt, np.expm1(b * dt) / np.where(b == 0.0, 1.0, b))
    c = np.exp(-2.0 * xi) * phi
    # decay from the end of cell m to the end of the window
    logs = b * dt
    after = np.cumsum(logs[::-1], axis=0)[::-1] - logs
    G = np.sum(c * np.exp(after), axis=0)
    tail = np.exp(-2.0 * xi[0] + after[0] + logs[0])
    return G, tail


@dataclass(frozen=True)
class GrowthBounds:
    a_omega: float
    b_omega: float
    rho_ratio: float

    def bound(self, psi0_norm2):
        return self.rho_ratio * psi0_norm2 * math.exp(self.a_omega) + self.b_omega


def growth_bounds(
    ou: OUSeries, params: SystemParams, T: float, t0: float = 0.0
) -> GrowthBounds:
    """a(omega) = 2 int_0^T |xi| and the max-over-[0, T] forcing bound b(omega)."""
    k0 = ou.index_of(t0)
    k1 = ou.index_of(t0 + T)
    xi = ou.xi[k0:k1]
    a = 2.0 * ou.dt * float(np.sum(np.abs(xi)))
    G = 0.0
    best = 0.0
    delta = params.delta
    for x in xi:
        bb = 2.0 * x - delta
        phi = ou.dt if bb == 0 else math.expm1(bb * ou.dt) / bb
        G = math.exp(bb * ou.dt) * G + math.exp(-2.0 * x) * phi
        best = max(best, G)
    b = params.c1 * params.forcing_norm2 * best
    lo, hi = min(1.0, 1.0 / params.rho), max(1.0, 1.0 / params.rho)
    return GrowthBounds(a, b, hi / lo)


def check_growth_bound(traj: Trajectory, gb: GrowthBounds) -> np.ndarray:
    """Boolean per node: ||Psi(t)||^2 <= ratio ||Psi0||^2 e^a + b."""
    n2 = traj.norm2
    return n2 <= gb.bound(n2[0]) * (1 + 1e-12) + 1e-300
