"""Truncated l^2 lattice: vectors, the discrete Laplacian A = B*B, the cubic
Nemytskii nonlinearity and the product space E = l^2 x l^2.

Vectors are numpy arrays whose last axis indexes sites -I..I; entries
outside the window are taken to be zero.  Leading axes are batch axes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def op_A(u: np.ndarray) -> np.ndarray:
    """(Au)_i = -u_{i-1} + 2u_i - u_{i+1} with zero padding."""
    u = np.asarray(u, dtype=float)
    out = 2.0 * u
    out[..., 1:] -= u[..., :-1]
    out[..., :-1] -= u[..., 1:]
    return out


def op_B(u: np.ndarray) -> np.ndarray:
    """(Bu)_i = u_{i+1} - u_i on the 2I+2 bonds i = -I-1..I.

    The truncated window has one more bond than sites; keeping the bond to
    the zero site at -I-1 is what makes A = B*B hold exactly.
    """
    u = np.asarray(u, dtype=float)
    pad = np.zeros(u.shape[:-1] + (1,))
    return np.diff(np.concatenate([pad, u, pad], axis=-1), axis=-1)


def op_Bstar(w: np.ndarray) -> np.ndarray:
    """(B*w)_i = w_{i-1} - w_i, mapping 2I+2 bond values back to 2I+1 sites."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1] % 2:
        raise DomainError(f"B* acts on bond vectors of even length, got {w.shape[-1]}")
    return -np.diff(w, axis=-1)


def inner(u, w) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if u.shape[-1] != w.shape[-1]:
        raise DomainError(f"window mismatch: {u.shape[-1]} vs {w.shape[-1]} sites")
    return np.sum(u * w, axis=-1)


def norm2(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.sum(u * u, axis=-1)


def energy(U, V, rho: float) -> np.ndarray:
    """E_rho(U, V) = ||U||^2 + ||V||^2 / rho."""
    return norm2(U) + norm2(V) / rho


def nemytskii_f(u, kappa) -> np.ndarray:
    """f_i(u_i) = kappa_i u_i^3 (kappa scalar or per-site array)."""
    u = np.asarray(u, dtype=float)
    return kappa * u * u * u


def sites(I: int) -> np.ndarray:
    return np.arange(-I, I + 1)


def exponential_profile(I: int, amplitude: float = 1.0, scale: float = 8.0):
    """c e^{-|i|/scale}, the default square-summable forcing."""
    return amplitude * np.exp(-np.abs(sites(I)) / scale)


@dataclass(frozen=True, eq=False)
class LatticeVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size % 2 == 0:
            raise DomainError("lattice vector needs an odd number (2I+1) of sites")
        object.__setattr__(self, "values", v)

    @property
    def I(self) -> int:
        return (self.values.size - 1) // 2

    @classmethod
    def zeros(cls, I: int) -> "LatticeVector":
        return cls(np.zeros(2 * I + 1))

    @classmethod
    def basis(cls, I: int, i: int, scale: float = 1.0) -> "LatticeVector":
        if abs(i) > I:
            raise DomainError(f"site {i} outside window |i| <= {I}")
        v = np.zeros(2 * I + 1)
        v[i + I] = scale
        return cls(v)

    def norm2(self) -> float:
        return float(norm2(self.values))

    def to_csv(self, dest) -> None:
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "value"])
            for i, v in zip(sites(self.I), self.values):
                w.writerow([int(i), repr(float(v))])

    @classmethod
    def from_csv(cls, src) -> "LatticeVector":
        with open(src, newline="") as fh:
            rows = sorted((int(r["i"]), float(r["value"])) for r in csv.DictReader(fh))
        idx = [i for i, _ in rows]
        I = max(abs(i) for i in idx)
        if idx != list(range(-I, I + 1)):
            raise DomainError("lattice CSV must list every site -I..I")
        return cls(np.array([v for _, v in rows]))


@dataclass(frozen=True, eq=False)
class StateE:
    """Psi = (U, V) in E with ||Psi||^2 = ||U||^2 + ||V||^2."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if U.shape != V.shape:
            raise DomainError(f"U and V windows differ: {U.shape} vs {V.shape}")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @classmethod
    def zeros(cls, I: int) -> "StateE":
        return cls(np.zeros(2 * I + 1), np.zeros(2 * I + 1))

    @property
    def I(self) -> int:
        return (self.U.shape[-1] - 1) // 2

    def norm2(self):
        return norm2(self.U) + norm2(self.V)

    def energy(self, rho: float):
        return energy(self.U, self.V, rho)

    def scaled(self, c) -> "StateE":
        c = np.asarray(c, dtype=float)[..., None]
        return StateE(c * self.U, c * self.V)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.U, self.V], axis=-1)


@dataclass(frozen=True, eq=False)
class SystemParams:
    """All model constants.

    ``f_sign`` multiplies f in the drift; -1 makes the cubic term dissipative.
    """

    I: int
    lam: float = 1.0
    rho: float = 1.0
    varpi: float = 1.0
    kappa: float | np.ndarray = 1.0
    h: np.ndarray | None = None
    g: np.ndarray | None = None
    epsilons: tuple[float, ...] = ()
    alpha: float = 1.5
    f_sign: int = -1
    delta: float = field(init=False)
    c1: float = field(init=False)

    def __post_init__(self):
        for name in ("lam", "rho", "varpi"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 1.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.f_sign not in (1, -1):
            raise DomainError("f_sign must be +1 or -1")
        if self.I < 1:
            raise DomainError("truncation radius I must be >= 1")
        n = 2 * self.I + 1
        for name in ("h", "g"):
            v = getattr(self, name)
            v = np.zeros(n) if v is None else np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise DomainError(f"{name} must have 2I+1 = {n} entries")
            object.__setattr__(self, name, v)
        kappa = np.asarray(self.kappa, dtype=float)
        if np.any(kappa < 0):
            raise DomainError("cubic coefficients must be >= 0")
        if kappa.ndim and kappa.shape != (n,):
            raise DomainError("per-site kappa must have 2I+1 entries")
        object.__setattr__(self, "kappa", float(kappa) if kappa.ndim == 0 else kappa)
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        delta = min(self.lam, self.varpi)
        lo, hi = min(1.0, 1.0 / self.rho), max(1.0, 1.0 / self.rho)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "c1", hi / (delta * lo))

    @property
    def n_sites(self) -> int:
        return 2 * self.I + 1

    @property
    def kappa_max(self) -> float:
        return float(np.max(self.kappa))

    @property
    def forcing_norm2(self) -> float:
        """||h||^2 + ||g||^2."""
        return float(norm2(self.h) + norm2(self.g))

    def replace(self, **changes) -> "SystemParams":
        kw = dict(
            I=self.I, lam=self.lam, rho=self.rho, varpi=self.varpi,
            kappa=self.kappa, h=self.h, g=self.g, epsilons=self.epsilons,
            alpha=self.alpha, f_sign=self.f_sign,
        )
        kw.update(changes)
        return SystemParams(**kw)


def default_params(
    I: int = 64,
    amplitude: float = 1.0,
    scale: float = 8.0,
    **kw,
) -> SystemParams:
    """Experiment defaults: kappa = 1 and h = g = amplitude * e^{-|i|/scale}."""
    prof = exponential_profile(I, amplitude, scale)
    kw.setdefault("h", prof)
    kw.setdefault("g", prof.copy())
    return SystemParams(I=I, **kw)


def linear_fixed_point(params: SystemParams) -> StateE:
    """Equilibrium of the noise-free system with f = 0.

    Solves (A + lam + rho/varpi) U = h - g/varpi, V = (rho U + g)/varpi.
    """
    n = params.n_sites
    diag = np.full(n, 2.0 + params.lam + params.rho / params.varpi)
    off = -np.ones(n - 1)
    M = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    U = np.linalg.solve(M, params.h - params.g / params.varpi)
    V = (params.rho * U + params.g) / params.varpi
    return StateE(U, V)
