import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fhn_levy.attractor import (
    C0,
    absorbing_radius,
    asymptotic_null_experiment,
    attractor_cloud,
    ball_points,
    cutoff,
    cutoff_derivative,
    cutoff_mass,
    hausdorff_semidist,
    nesting_distances,
    pullback_absorption_experiment,
    tail_mass,
    temperedness_of_K,
    write_rows,
)
from fhn_levy.errors import DomainError, HorizonError
from fhn_levy.lattice import SystemParams, default_params, linear_fixed_point
from fhn_levy.ou import OUSeries, build_ou
from fhn_levy.stable import StableParams, gen_path

from conftest import constant_path


def flat_ou(t_start, t_end, dt=0.01):
    n = round((t_end - t_start) / dt)
    return OUSeries(t_start, dt, np.zeros((0, n + 1)), np.zeros(n + 1), ())


def test_cutoff_shape():
    s = np.linspace(0, 3, 30001)
    r = cutoff(s)
    assert cutoff(1.0) == 0 and cutoff(2.0) == 1
    assert np.all(r[s <= 1] == 0) and np.all(r[s >= 2] == 1)
    assert np.all(np.diff(r) >= 0)
    assert np.max(np.abs(cutoff_derivative(s))) == pytest.approx(C0, abs=1e-6)
    assert np.max(np.abs(np.diff(r) / np.diff(s))) <= C0 + 1e-6


def test_radius_noise_free_closed_form():
    p = default_params(I=16)
    H = 40.0
    est = absorbing_radius(flat_ou(-100.0, 0.0), p, quad_horizon=H, tail_tol=1.0)
    want = 1 + p.c1 * p.forcing_norm2 * (1 - math.exp(-p.delta * H)) / p.delta
    assert est.R2 == pytest.approx(want, abs=1e-8)


def test_radius_zero_forcing():
    assert absorbing_radius(flat_ou(-50.0, 0.0), SystemParams(I=4)).R2 == 1.0


def test_radius_horizon_converged():
    p = default_params(I=16, epsilons=(0.1, 0.1))
    path = gen_path(StableParams(1.5), 2, -400.0, 0.0, 0.01, seed=2)
    ou = build_ou(path, p.epsilons)
    a = absorbing_radius(ou, p, 40.0, max_horizon=160.0)
    b = absorbing_radius(ou, p, 80.0, max_horizon=160.0)
    assert abs(a.R2 - b.R2) < 1e-9 * max(1.0, a.R2)


def test_radius_horizon_error():
    p = default_params(I=4)
    with pytest.raises(HorizonError):
        absorbing_radius(flat_ou(-5.0, 0.0), p, quad_horizon=5.0)


def test_ball_points(rng):
    U, V = ball_points(200, 5, 3.0, rng)
    r = np.sqrt(np.sum(U**2, 1) + np.sum(V**2, 1))
    assert U.shape == (200, 11) and np.all(r <= 3.0 + 1e-12)
    U, V = ball_points(5, 5, 3.0, rng, on_sphere=True)
    np.testing.assert_allclose(np.sum(U**2, 1) + np.sum(V**2, 1), 9.0)


def test_absorption_trivial():
    p = SystemParams(I=4)
    path = constant_path(0.01, -100.0, 0.0)
    rep = pullback_absorption_experiment(p.replace(epsilons=(0.0,)), path, 0.0, [0.0, 1.0], m_dirs=2)
    assert rep.t_B == 0.0 and rep.R2 == 1.0 and rep.terminal[0] == 0.0


def test_absorption_deterministic():
    p = default_params(I=8, epsilons=(0.0,))
    path = constant_path(0.01, -150.0, 0.0)
    B = 10.0
    grid = [1.0, 2.0, 5.0, 10.0, 20.0]
    rep = pullback_absorption_experiment(p, path, B, grid, m_dirs=4)
    for t, e in zip(grid, rep.terminal):
        assert e <= math.exp(-p.delta * t) * B**2 + rep.R2 - 1 + 1e-9
    assert rep.t_B is not None and rep.t_B <= math.log(B**2) / p.delta


def test_absorption_noisy():
    p = default_params(I=16, epsilons=(0.1, 0.1))
    path = gen_path(StableParams(1.5), 2, -240.0, 0.0, 0.01, seed=4)
    rep = pullback_absorption_experiment(p, path, 10.0, [1.0, 2.0, 5.0, 10.0, 20.0, 40.0], m_dirs=4)
    assert rep.t_B is not None
    rows = list(rep.rows())
    assert rows[0][1] == 4 and len(rows) == 6


def test_tempered_noise_free():
    p = default_params(I=8, epsilons=(0.0,))
    path = constant_path(0.01, -300.0, 0.0)
    t = np.linspace(0, 200, 21)
    rep = temperedness_of_K(p, [path], 0.1, t, quad_horizon=40.0)[0]
    np.testing.assert_allclose(rep.decayed, rep.R2[0] * np.exp(-0.1 * t), rtol=1e-12)
    assert rep.verdict


def test_tempered_small_gamma():
    p = default_params(I=8, epsilons=(0.1, 0.1))
    path = gen_path(StableParams(1.5), 2, -400.0, 0.0, 0.01, seed=1)
    rep = temperedness_of_K(p, [path], 1e-3, np.linspace(0, 200, 21))[0]
    assert rep.decayed[-1] < rep.decayed[0]


def test_tempered_window_check():
    p = default_params(I=8, epsilons=(0.0,))
    with pytest.raises(DomainError):
        temperedness_of_K(p, [constant_path(0.01, -100.0, 0.0)], 0.1, np.linspace(0, 200, 21))


def test_tail_mass_examples():
    I, N = 10, 3
    U = np.zeros(21)
    U[I - N : I + N + 1] = 1.0
    assert tail_mass(U, np.zeros(21), N) == 0.0
    U = np.zeros(21)
    U[I + 2 * N + 1] = 1.0
    assert tail_mass(U, np.zeros(21), N) == 1.0
    assert cutoff_mass(U, np.zeros(21), N) == 1.0


def test_tail_mass_window():
    with pytest.raises(DomainError):
        tail_mass(np.zeros(9), np.zeros(9), 4)
    with pytest.raises(DomainError):
        cutoff_mass(np.zeros(9), np.zeros(9), 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 7))
def test_tail_vs_cutoff(seed, N):
    U, V = np.random.default_rng(seed).standard_normal((2, 33))
    assert tail_mass(U, V, 2 * N) <= cutoff_mass(U, V, N) + 1e-12
    assert cutoff_mass(U, V, N) <= tail_mass(U, V, N) + 1e-12


def test_tail_monotone(rng):
    U, V = rng.standard_normal((2, 41))
    t = [tail_mass(U, V, N) for N in range(20)]
    assert np.all(np.diff(t) <= 0)
    assert t[0] == pytest.approx(np.sum(U**2 + V**2) - U[20] ** 2 - V[20] ** 2)


def test_null_zero_state():
    from fhn_levy.solver import integrate_transformed

    p = SystemParams(I=16, epsilons=(0.0,))
    ou = flat_ou(-10.0, 0.0)
    tr = integrate_transformed(p, ou, (np.zeros((3, 33)), np.zeros((3, 33))), (-10.0, 0.0))
    for N in (0, 4, 8, 15):
        assert np.all(tail_mass(tr.U, tr.V, N) == 0.0)


def test_null_deterministic_local_forcing():
    I = 32
    h = np.zeros(2 * I + 1)
    h[I - 4 : I + 5] = 1.0
    p = SystemParams(I=I, kappa=0.0, h=h, g=h.copy(), epsilons=(0.0,))
    fp = linear_fixed_point(p)
    assert tail_mass(fp.U, fp.V, 8) < 1e-6
    path = constant_path(0.01, -300.0, 0.0)
    rep = asymptotic_null_experiment(p, path, [40.0], [8], 1e-3, m_points=2)
    assert rep.table[0, 0, 0] < 1e-6


def test_null_monotone_noisy():
    p = default_params(I=32, epsilons=(0.1, 0.1))
    paths = [gen_path(StableParams(1.5), 2, -240.0, 0.0, 0.01, seed=s) for s in (1, 2)]
    rep = asymptotic_null_experiment(p, paths, [5.0, 10.0], [2, 4, 8, 15], 1e-2, m_points=2)
    assert rep.monotone_in_N
    assert rep.table.shape == (2, 4, 2)


def test_null_reports_failure():
    p = default_params(I=16, epsilons=(0.0,))
    rep = asymptotic_null_experiment(p, constant_path(0.01, -200.0, 0.0), [1.0], [2], 1e-9, m_points=1)
    assert not rep.found and rep.achieved_min > 1e-18


def test_hausdorff_examples():
    X = np.random.default_rng(1).standard_normal((5, 6))
    assert hausdorff_semidist(X, X) == 0.0
    e0 = np.zeros((1, 6))
    e0[0, 0] = 1
    assert hausdorff_semidist(np.zeros((1, 6)), e0) == 1.0
    Y = np.vstack([X, np.full((1, 6), 100.0)])
    assert hausdorff_semidist(X, Y) == 0.0 and hausdorff_semidist(Y, X) > 0


def test_hausdorff_errors():
    with pytest.raises(DomainError):
        hausdorff_semidist(np.zeros((0, 3)), np.zeros((1, 3)))
    with pytest.raises(DomainError):
        hausdorff_semidist(np.zeros((1, 3)), np.zeros((1, 4)))


def test_cloud_linear_fixed_point():
    p = SystemParams(I=16, kappa=0.0, h=np.exp(-np.abs(np.arange(-16, 17)) / 8.0),
                     g=np.exp(-np.abs(np.arange(-16, 17)) / 8.0), epsilons=(0.0,))
    path = constant_path(0.01, -200.0, 0.0)
    c = attractor_cloud(p, path, 40.0, 4)
    fp = linear_fixed_point(p)
    assert c.diameter < 1e-6
    d = np.sqrt(np.sum((c.center.U - fp.U) ** 2) + np.sum((c.center.V - fp.V) ** 2))
    assert d < 1e-6


def test_cloud_single_point():
    p = default_params(I=8, epsilons=(0.0,))
    c = attractor_cloud(p, constant_path(0.01, -100.0, 0.0), 5.0, 1)
    assert c.diameter == 0.0 and c.points.shape == (1, 34)


def test_nesting_noisy():
    p = default_params(I=16, epsilons=(0.1, 0.1))
    path = gen_path(StableParams(1.5), 2, -240.0, 0.0, 0.01, seed=6)
    ou = build_ou(path, p.epsilons)
    clouds = [attractor_cloud(p, path, t, 4, ou=ou, point_seed=1) for t in (5.0, 10.0, 20.0, 40.0)]
    d = nesting_distances(clouds)
    assert all(b <= a + 0.1 for a, b in zip(d, d[1:]))


def test_write_rows(tmp_path):
    write_rows(tmp_path / "r.csv", ["a", "b", "c"], [(1.0, True, None), (0.1, False, 3)])
    assert (tmp_path / "r.csv").read_text() == "a,b,c\n1.0,true,\n0.1,false,3\n"
