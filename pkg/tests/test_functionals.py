import numpy as np
import pytest

from logsp.grid import integrate, l2_inner, make_field, mass, riesz_convolution
from logsp.functionals import (
    ModelParams,
    StatePair,
    eval_I,
    eval_breakdown,
    l2_gradient,
    make_state,
    multipliers,
)
from conftest import DEFAULT_PARAMS, gaussian, random_smooth, random_state


def test_params_validation():
    with pytest.raises(ValueError, match="p must exceed 1"):
        ModelParams(p=1.0, mu1=0, mu2=0, beta=0, c1=1, c2=1)
    with pytest.raises(ValueError):
        ModelParams(p=2.0, mu1=0, mu2=0, beta=0, c1=-1, c2=1)


def test_state_masses_exact(grid64):
    rng = np.random.default_rng(0)
    s = random_state(grid64, DEFAULT_PARAMS, rng)
    assert mass(s.u) == pytest.approx(DEFAULT_PARAMS.c1, rel=1e-12)
    assert mass(s.v) == pytest.approx(DEFAULT_PARAMS.c2, rel=1e-12)


def test_gaussian_breakdown_diagnostic(grid256, table256):
    # unnormalized u = v = exp(-|x|^2/2) at p = 2: Q = pi, P = P0 = pi/2
    prm = ModelParams(p=2.0, mu1=1.0, mu2=1.0, beta=1.0, c1=1.0, c2=1.0)
    g = make_field(grid256, gaussian(grid256))
    s = make_state(g, g, prm, renormalize=False)
    bd = eval_breakdown(s, table256)
    assert bd.Q_u == pytest.approx(np.pi, abs=1e-8)
    assert bd.Q_v == pytest.approx(np.pi, abs=1e-8)
    assert bd.P_u == pytest.approx(np.pi / 2, abs=1e-8)
    assert bd.P_v == pytest.approx(np.pi / 2, abs=1e-8)
    assert bd.P0 == pytest.approx(np.pi / 2, abs=1e-8)


def test_zero_coefficients(grid64, table64):
    prm = ModelParams(p=2.5, mu1=0.0, mu2=0.0, beta=0.0, c1=1.0, c2=1.0)
    rng = np.random.default_rng(1)
    s = random_state(grid64, prm, rng)
    bd = eval_breakdown(s, table64)
    assert bd.R == 0.0
    assert bd.I == pytest.approx(0.5 * (bd.Q_u + bd.Q_v) + 0.25 * bd.W0, rel=1e-14)


def test_breakdown_invariants(grid128, table128):
    rng = np.random.default_rng(2)
    for _ in range(5):
        s = random_state(grid128, DEFAULT_PARAMS, rng)
        bd = eval_breakdown(s, table128)
        assert abs(bd.W0 - (bd.W1 - bd.W2)) <= 1e-10 * max(abs(bd.W1), abs(bd.W2))
        assert bd.W1 >= 0.0 and bd.W2 >= 0.0
        assert bd.R == pytest.approx(
            DEFAULT_PARAMS.mu1 * bd.P_u + DEFAULT_PARAMS.mu2 * bd.P_v
            + 2 * DEFAULT_PARAMS.beta * bd.P0, rel=1e-15)
        expected_I = 0.5 * (bd.Q_u + bd.Q_v) + 0.25 * bd.W0 - bd.R / (2 * DEFAULT_PARAMS.p)
        assert bd.I == pytest.approx(expected_I, rel=1e-12)
        assert bd.norm0_u > 0 and bd.norm0_v > 0


def test_w0_against_dense_double_sum(grid64, table64):
    rng = np.random.default_rng(3)
    s = random_state(grid64, DEFAULT_PARAMS, rng)
    bd = eval_breakdown(s, table64)
    n, h = grid64.n, grid64.h
    rho = s.u.values ** 2 + s.v.values ** 2
    idx = np.arange(n)
    K = table64.log_kernel
    w_dense = np.zeros((n, n))
    for i1 in range(n):
        rows = K[(i1 - idx) % (2 * n), :]
        for i2 in range(n):
            w_dense[i1, i2] = np.sum(rows[:, (i2 - idx) % (2 * n)] * rho)
    W0_dense = h ** 4 * np.sum(rho * w_dense)
    assert abs(bd.W0 - W0_dense) <= 1e-6 * abs(W0_dense)


def test_hls_domination(grid64, table64):
    rng = np.random.default_rng(4)
    for _ in range(5):
        s = random_state(grid64, DEFAULT_PARAMS, rng)
        bd = eval_breakdown(s, table64)
        rho = make_field(grid64, s.u.values ** 2 + s.v.values ** 2)
        riesz = integrate(make_field(grid64, rho.values * riesz_convolution(rho, table64).values))
        assert 0.0 <= bd.W2 <= riesz


def test_gradient_matches_finite_differences(grid64, table64):
    rng = np.random.default_rng(5)
    for _ in range(3):
        s = random_state(grid64, DEFAULT_PARAMS, rng)
        gu, gv = l2_gradient(s, table64)
        phi = make_field(grid64, random_smooth(grid64, rng))
        psi = make_field(grid64, random_smooth(grid64, rng))
        eps = 1e-5

        def I_shift(sign):
            u = make_field(grid64, s.u.values + sign * eps * phi.values)
            v = make_field(grid64, s.v.values + sign * eps * psi.values)
            return eval_I(StatePair(u, v, DEFAULT_PARAMS), table64)

        fd = (I_shift(+1) - I_shift(-1)) / (2 * eps)
        an = l2_inner(gu, phi) + l2_inner(gv, psi)
        assert abs(fd - an) <= 1e-5 * abs(an)


def test_gradient_vanishing_component(grid64, table64):
    # every term of g_v carries a factor of v
    u = make_field(grid64, gaussian(grid64))
    v = make_field(grid64, np.zeros((64, 64)))
    s = make_state(u, v, DEFAULT_PARAMS, renormalize=False)
    _, gv = l2_gradient(s, table64)
    assert np.all(gv.values == 0.0)


def test_gradient_kinetic_isolation(grid64, table64):
    from logsp.grid import spectral_laplacian

    prm = ModelParams(p=2.5, mu1=0.0, mu2=0.0, beta=0.0, c1=1.0, c2=1.0)
    rng = np.random.default_rng(6)
    s = random_state(grid64, prm, rng)
    gu, _ = l2_gradient(s, table64, include_potential=False)
    assert np.array_equal(gu.values, -spectral_laplacian(s.u).values)


def test_multiplier_orthogonality(grid64, table64):
    rng = np.random.default_rng(7)
    for _ in range(5):
        s = random_state(grid64, DEFAULT_PARAMS, rng)
        lam1, lam2 = multipliers(s, table64)
        gu, gv = l2_gradient(s, table64)
        r1 = l2_inner(gu, s.u) + lam1 * DEFAULT_PARAMS.c1
        r2 = l2_inner(gv, s.v) + lam2 * DEFAULT_PARAMS.c2
        assert abs(r1) <= 1e-12 * max(abs(lam1) * DEFAULT_PARAMS.c1, 1e-3)
        assert abs(r2) <= 1e-12 * max(abs(lam2) * DEFAULT_PARAMS.c2, 1e-3)


def test_multiplier_symmetry(grid64, table64):
    prm = ModelParams(p=2.5, mu1=0.8, mu2=0.8, beta=0.3, c1=1.5, c2=1.5)
    f = make_field(grid64, gaussian(grid64, (0.3, -0.2), 0.9))
    s = make_state(f, f, prm)
    lam1, lam2 = multipliers(s, table64)
    assert lam1 == lam2


def test_eval_I_swap_symmetry(grid64, table64):
    prm = ModelParams(p=2.5, mu1=0.8, mu2=0.8, beta=0.3, c1=1.0, c2=1.0)
    rng = np.random.default_rng(8)
    u = make_field(grid64, random_smooth(grid64, rng))
    v = make_field(grid64, random_smooth(grid64, rng))
    s = make_state(u, v, prm)
    swapped = StatePair(u=s.v, v=s.u, params=prm)
    assert eval_I(s, table64) == eval_I(swapped, table64)


def test_breakdown_serializes_flat(grid64, table64):
    rng = np.random.default_rng(9)
    s = random_state(grid64, DEFAULT_PARAMS, rng)
    d = eval_breakdown(s, table64).as_dict()
    assert set(d) == {"Q_u", "Q_v", "P_u", "P_v", "P0", "R", "W0", "W1", "W2",
                      "norm0_u", "norm0_v", "I"}
    assert all(isinstance(v, float) for v in d.values())
