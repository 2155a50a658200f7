"""Experiment configuration: ``[section]`` headers, ``key = value`` lines, ``#`` comments.

Every key has a default; an empty file yields the defaults listed by
``fhn-levy --print-defaults``.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, replace

from .errors import ConfigError


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


_PARSE = {
    "float": float,
    "int": int,
    "str": str,
    "floats": _floats,
    "ints": _ints,
}


def _fmt(kind: str, v) -> str:
    if kind == "float":
        return repr(float(v))
    if kind == "floats":
        return ", ".join(repr(float(x)) for x in v)
    if kind == "ints":
        return ", ".join(str(int(x)) for x in v)
    return str(v)


# (section, key, attribute, kind, default, help)
SCHEMA = [
    ("system", "lambda", "lam", "float", 1.0, "lambda > 0"),
    ("system", "rho", "rho", "float", 1.0, "rho > 0"),
    ("system", "varpi", "varpi", "float", 1.0, "varpi > 0"),
    ("system", "kappa", "kappa", "float", 1.0, "cubic coefficient >= 0"),
    ("system", "forcing_amplitude", "forcing_amplitude", "float", 1.0, "h_i = g_i = c e^{-|i|/scale}"),
    ("system", "forcing_scale", "forcing_scale", "float", 8.0, "forcing decay length > 0"),
    ("noise", "alpha", "alpha", "float", 1.5, "stability index in (1, 2)"),
    ("noise", "epsilons", "epsilons", "floats", (0.1, 0.1), "noise intensities, one per channel"),
    ("noise", "dt", "noise_dt", "float", 0.01, "path grid step > 0"),
    ("noise", "seeds", "seeds", "ints", (1, 2, 3, 4, 5), "explicit seed list"),
    ("noise", "trunc_T", "trunc_T", "float", 40.0, "OU quadrature truncation >= 30"),
    ("lattice", "I", "I", "int", 64, "truncation radius >= 1"),
    ("solver", "dt", "solver_dt", "float", 0.01, "integrator step; divides noise dt"),
    ("solver", "t_span", "t_span", "floats", (0.0, 20.0), "simulate window t0, t1"),
    ("solver", "f_sign", "f_sign", "int", -1, "+1 or -1 in front of f"),
    ("solver", "init_radius", "init_radius", "float", 1.0, "||Psi0|| for simulate"),
    ("conjugacy", "T", "conj_T", "float", 5.0, "conjugacy horizon > 0"),
    ("absorb", "B_radius", "B_radius", "float", 10.0, "radius of pulled-back sphere"),
    ("absorb", "t_grid", "absorb_t_grid", "floats", (1.0, 2.0, 5.0, 10.0, 20.0, 40.0), "pullback times"),
    ("absorb", "m_dirs", "m_dirs", "int", 8, "sphere directions >= 1"),
    ("absorb", "quad_horizon", "quad_horizon", "float", 40.0, "initial R^2 quadrature horizon > 0"),
    ("tempered", "gamma", "gamma", "float", 0.1, "gamma > 0"),
    ("tempered", "t_max", "tempered_t_max", "float", 200.0, "largest pullback time >= 100"),
    ("tempered", "n_t", "tempered_n_t", "int", 41, "t-grid size >= 10"),
    ("tails", "t_grid", "tails_t_grid", "floats", (5.0, 10.0, 20.0, 40.0), "pullback times"),
    ("tails", "N_grid", "N_grid", "ints", (4, 8, 16, 24), "cutoff radii; tail index 2N < I"),
    ("tails", "eps", "eps", "float", 0.01, "tail tolerance eps > 0"),
    ("tails", "m_points", "tails_m_points", "int", 4, "points sampled in K >= 1"),
    ("attractor", "t_grid", "attractor_t_grid", "floats", (5.0, 10.0, 20.0, 40.0), "doubling schedule"),
    ("attractor", "m_points", "m_points", "int", 8, "cloud size >= 1"),
    ("output", "dir", "out_dir", "str", "out", "output directory"),
]

_BY_KEY = {(s, k): (a, kind) for s, k, a, kind, _, _ in SCHEMA}


@dataclass(frozen=True)
class ExperimentConfig:
    lam: float = 1.0
    rho: float = 1.0
    varpi: float = 1.0
    kappa: float = 1.0
    forcing_amplitude: float = 1.0
    forcing_scale: float = 8.0
    alpha: float = 1.5
    epsilons: tuple[float, ...] = (0.1, 0.1)
    noise_dt: float = 0.01
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    trunc_T: float = 40.0
    I: int = 64
    solver_dt: float = 0.01
    t_span: tuple[float, ...] = (0.0, 20.0)
    f_sign: int = -1
    init_radius: float = 1.0
    conj_T: float = 5.0
    B_radius: float = 10.0
    absorb_t_grid: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0, 40.0)
    m_dirs: int = 8
    quad_horizon: float = 40.0
    gamma: float = 0.1
    tempered_t_max: float = 200.0
    tempered_n_t: int = 41
    tails_t_grid: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    N_grid: tuple[int, ...] = (4, 8, 16, 24)
    eps: float = 0.01
    tails_m_points: int = 4
    attractor_t_grid: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    m_points: int = 8
    out_dir: str = "out"

    def with_seeds(self, seeds) -> "ExperimentConfig":
        return replace(self, seeds=tuple(int(s) for s in seeds))

    def digest(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and "=" in line:
            if line.split("=", 1)[0].strip() == key:
                return n
    return None


def _where(text, section, key=None) -> str:
    n = _line_of(text, section, key)
    return f"line {n}: " if n else ""


def validate(c: ExperimentConfig, text: str = "") -> None:
    def bad(section, key, constraint):
        raise ConfigError(f"{_where(text, section, key)}[{section}] {key}: {constraint}")

    for key, attr in (("lambda", "lam"), ("rho", "rho"), ("varpi", "varpi")):
        if not getattr(c, attr) > 0:
            bad("system", key, "must be > 0")
    if c.kappa < 0:
        bad("system", "kappa", "must be >= 0")
    if not c.forcing_scale > 0:
        bad("system", "forcing_scale", "must be > 0")
    if not 1.0 < c.alpha < 2.0:
        bad("noise", "alpha", f"must lie in the open interval (1, 2), got {c.alpha}")
    if not c.noise_dt > 0:
        bad("noise", "dt", "must be > 0")
    if c.trunc_T < 30:
        bad("noise", "trunc_T", "must be >= 30")
    if not c.seeds:
        bad("noise", "seeds", "at least one seed required")
    if c.I < 1:
        bad("lattice", "I", "must be >= 1")
    if not c.solver_dt > 0:
        bad("solver", "dt", "must be > 0")
    r = round(c.noise_dt / c.solver_dt)
    if r < 1 or abs(r * c.solver_dt - c.noise_dt) > 1e-9 * c.noise_dt:
        bad("solver", "dt", f"must divide the noise grid step {c.noise_dt}")
    if len(c.t_span) != 2 or not c.t_span[0] < c.t_span[1]:
        bad("solver", "t_span", "must be two increasing times")
    for t in c.t_span:
        k = round(t / c.noise_dt)
        if abs(k * c.noise_dt - t) > 1e-9 * max(1.0, abs(t)):
            bad("solver", "t_span", "endpoints must lie on the noise grid")
    if c.f_sign not in (1, -1):
        bad("solver", "f_sign", "must be +1 or -1")
    if c.init_radius < 0:
        bad("solver", "init_radius", "must be >= 0")
    if not c.conj_T > 0:
        bad("conjugacy", "T", "must be > 0")
    if c.B_radius < 0:
        bad("absorb", "B_radius", "must be >= 0")
    if c.m_dirs < 1:
        bad("absorb", "m_dirs", "must be >= 1")
    if not c.quad_horizon > 0:
        bad("absorb", "quad_horizon", "must be > 0")
    if not c.absorb_t_grid or min(c.absorb_t_grid) < 0:
        bad("absorb", "t_grid", "nonempty, nonnegative times")
    if not c.gamma > 0:
        bad("tempered", "gamma", "must be > 0")
    if c.tempered_t_max < 100:
        bad("tempered", "t_max", "must be >= 100")
    if c.tempered_n_t < 10:
        bad("tempered", "n_t", "must be >= 10")
    if not c.N_grid or min(c.N_grid) < 1:
        bad("tails", "N_grid", "nonempty, N >= 1")
    if 2 * max(c.N_grid) >= c.I:
        bad("tails", "N_grid", f"tail index 2N must be < I = {c.I}")
    if not c.eps > 0:
        bad("tails", "eps", "must be > 0")
    if c.tails_m_points < 1:
        bad("tails", "m_points", "must be >= 1")
    if not c.tails_t_grid or min(c.tails_t_grid) <= 0:
        bad("tails", "t_grid", "nonempty, positive times")
    if c.m_points < 1:
        bad("attractor", "m_points", "must be >= 1")
    if not c.attractor_t_grid or min(c.attractor_t_grid) <= 0:
        bad("attractor", "t_grid", "nonempty, positive times")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(
        interpolation=None,
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        default_section="__unused__",
    )
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = {}
    for section in cp.sections():
        if not any(s == section for s, *_ in SCHEMA):
            raise ConfigError(f"{_where(text, section)}unknown section [{section}]")
        for key, raw in cp.items(section):
            if (section, key) not in _BY_KEY:
                raise ConfigError(f"{_where(text, section, key)}unknown key '{key}' in [{section}]")
            attr, kind = _BY_KEY[(section, key)]
            try:
                values[attr] = _PARSE[kind](raw)
            except ValueError:
                raise ConfigError(
                    f"{_where(text, section, key)}[{section}] {key}: expected {kind}, got {raw!r}"
                ) from None
    cfg = ExperimentConfig(**values)
    validate(cfg, text)
    return cfg


def serialize(cfg: ExperimentConfig) -> str:
    out = []
    current = None
    for section, key, attr, kind, _, help_ in SCHEMA:
        if section != current:
            if current is not None:
                out.append("")
            out.append(f"[{section}]")
            current = section
        out.append(f"{key} = {_fmt(kind, getattr(cfg, attr))}  # {help_}")
    return "\n".join(out) + "\n"


def defaults_text() -> str:
    return serialize(ExperimentConfig())


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())

