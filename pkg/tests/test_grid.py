import numpy as np
import pytest
from scipy.integrate import dblquad

from logsp.grid import (
    BoundaryDecayWarning,
    check_boundary_decay,
    coercive_convolution,
    integrate,
    log_convolution,
    make_field,
    make_grid,
    make_log_kernel_table,
    mass,
    radial_profile,
    read_field,
    renormalized,
    riesz_convolution,
    singular_convolution,
    spectral_laplacian,
    write_field,
    write_radial_csv,
)
from conftest import gaussian, random_smooth


def test_make_grid_examples():
    g = make_grid(4, 2.0)
    assert g.h == 1.0
    assert np.allclose(g.coords(), [-1.5, -0.5, 0.5, 1.5])
    assert make_grid(256, 8.0).h == pytest.approx(1.0 / 16.0, abs=0)
    with pytest.raises(ValueError):
        make_grid(3, 1.0)
    with pytest.raises(ValueError):
        make_grid(0, 1.0)
    with pytest.raises(ValueError):
        make_grid(64, -1.0)


def test_grid_spacing_identity():
    for n, L in [(4, 2.0), (64, 12.0), (256, 8.0)]:
        g = make_grid(n, L)
        assert g.h * g.n == 2 * g.L


def test_integrate_examples(grid256):
    zero = make_field(grid256, np.zeros((256, 256)))
    assert integrate(zero) == 0.0

    g4 = make_grid(64, 4.0)
    ones = make_field(g4, np.ones((64, 64)))
    assert integrate(ones) == pytest.approx(64.0, rel=1e-14)

    X, Y = grid256.meshgrid()
    f = make_field(grid256, np.exp(-(X ** 2 + Y ** 2)))
    assert integrate(f) == pytest.approx(np.pi, abs=1e-10)


def test_renormalization_exact(grid128):
    rng = np.random.default_rng(0)
    f = make_field(grid128, random_smooth(grid128, rng))
    for c in (0.3, 1.0, 7.5):
        assert mass(renormalized(f, c)) == pytest.approx(c, rel=1e-14)


def test_laplacian_constant(grid128):
    f = make_field(grid128, np.full((128, 128), 3.7))
    assert np.max(np.abs(spectral_laplacian(f).values)) < 1e-12


def test_laplacian_fourier_mode(grid128):
    # sin(k x1) with a grid-commensurate k is an exact eigenfunction
    X, _ = grid128.meshgrid()
    k = 2 * np.pi * 3 / (2 * grid128.L)
    f = make_field(grid128, np.sin(k * X))
    lap = spectral_laplacian(f)
    assert np.max(np.abs(lap.values + k ** 2 * f.values)) < 1e-11


def test_laplacian_gaussian(grid256):
    X, Y = grid256.meshgrid()
    r2 = X ** 2 + Y ** 2
    f = make_field(grid256, np.exp(-r2 / 2))
    lap = spectral_laplacian(f)
    assert np.max(np.abs(lap.values - (r2 - 2) * np.exp(-r2 / 2))) < 1e-8


def test_log_convolution_zero(grid64, table64):
    zero = make_field(grid64, np.zeros((64, 64)))
    assert np.all(log_convolution(zero, table64).values == 0.0)


def test_log_convolution_newton(grid64, table64):
    # unit-mass radial density: the potential equals log|x| outside the mass
    X, Y = grid64.meshgrid()
    rho = make_field(grid64, np.exp(-(X ** 2 + Y ** 2)) / np.pi)
    w = log_convolution(rho, table64)
    r = np.hypot(X, Y)
    ring = (r > 5.5) & (r < 6.5)
    assert np.max(np.abs(w.values[ring] - np.log(r[ring]))) < 1e-6


def test_log_convolution_shift_invariance(grid64, table64):
    rng = np.random.default_rng(1)
    rho = random_smooth(grid64, rng)
    w = log_convolution(make_field(grid64, rho), table64).values
    shifted = np.roll(rho, (3, -2), axis=(0, 1))
    w_s = log_convolution(make_field(grid64, shifted), table64).values
    inner = (slice(8, -8), slice(8, -8))
    assert np.max(np.abs(w_s[inner] - np.roll(w, (3, -2), axis=(0, 1))[inner])) < 1e-12


def test_log_convolution_linearity(grid64, table64):
    rng = np.random.default_rng(2)
    r1 = make_field(grid64, random_smooth(grid64, rng))
    r2 = make_field(grid64, random_smooth(grid64, rng))
    a, b = 1.7, -0.4
    combo = make_field(grid64, a * r1.values + b * r2.values)
    w = log_convolution(combo, table64).values
    w_ab = a * log_convolution(r1, table64).values + b * log_convolution(r2, table64).values
    assert np.max(np.abs(w - w_ab)) < 1e-12 * max(1.0, np.max(np.abs(w)))


def test_quadratic_form_symmetry(grid64, table64):
    rng = np.random.default_rng(3)
    for conv in (log_convolution, coercive_convolution, singular_convolution):
        rho = make_field(grid64, random_smooth(grid64, rng) ** 2)
        sig = make_field(grid64, random_smooth(grid64, rng) ** 2)
        a = integrate(make_field(grid64, sig.values * conv(rho, table64).values))
        b = integrate(make_field(grid64, rho.values * conv(sig, table64).values))
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b))


def test_grid_mismatch_rejected(grid64, table64):
    other = make_grid(64, 6.0)
    rho = make_field(other, np.zeros((64, 64)))
    with pytest.raises(ValueError):
        log_convolution(rho, table64)


def test_kernel_split_identity(table64, table128):
    for tab in (table64, table128):
        diff = tab.coercive_kernel - tab.singular_kernel - tab.log_kernel
        assert np.max(np.abs(diff)) <= 1e-14 * np.max(np.abs(tab.log_kernel))


def test_kernel_cell_averages_match_quadrature(grid64, table64):
    h = grid64.h
    # the origin cell of the singular kernels is covered by the closed forms
    cases = {
        "log": (lambda y, x: np.log(np.hypot(x, y)), table64.log_kernel,
                [(1, 0), (2, 3), (15, 9)]),
        "coercive": (lambda y, x: np.log1p(np.hypot(x, y)), table64.coercive_kernel,
                     [(0, 0), (1, 0), (2, 3), (15, 9)]),
        "riesz": (lambda y, x: 1.0 / np.hypot(x, y), table64.riesz_kernel,
                  [(1, 0), (2, 3), (15, 9)]),
    }
    for name, (f, kernel, offsets) in cases.items():
        for (i, j) in offsets:
            val, _ = dblquad(f, i * h - h / 2, i * h + h / 2,
                             j * h - h / 2, j * h + h / 2,
                             epsabs=1e-13, epsrel=1e-12)
            assert kernel[i, j] == pytest.approx(val / h ** 2, rel=1e-9, abs=1e-10), name


def test_kernel_origin_closed_forms(grid64, table64):
    a = grid64.h / 2
    log_origin = 0.5 * (np.log(2 * a * a) - 3.0 + np.pi / 2)
    assert table64.log_kernel[0, 0] == pytest.approx(log_origin, rel=1e-13)
    riesz_origin = 2.0 / a * np.log(1.0 + np.sqrt(2.0))
    assert table64.riesz_kernel[0, 0] == pytest.approx(riesz_origin, rel=1e-13)


def test_riesz_dominates_singular_kernel(table64):
    assert np.all(table64.singular_kernel >= 0.0)
    assert np.all(table64.singular_kernel <= table64.riesz_kernel)


def test_field_io_roundtrip(tmp_path, grid64):
    rng = np.random.default_rng(4)
    f = make_field(grid64, random_smooth(grid64, rng))
    path = tmp_path / "f.lspf"
    write_field(path, f)
    g = read_field(path)
    assert g.grid == grid64
    assert np.array_equal(g.values, f.values)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    bad = tmp_path / "bad.lspf"
    bad.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        read_field(bad)


def test_radial_profile(tmp_path, grid128):
    f = make_field(grid128, gaussian(grid128, width=1.0))
    radii, values = radial_profile(f)
    assert np.all(np.diff(radii) > 0)
    inside = radii < 4.0
    assert np.allclose(values[inside], np.exp(-radii[inside] ** 2 / 2), atol=1e-2)
    path = tmp_path / "radial.csv"
    write_radial_csv(path, f)
    header, first = path.read_text().splitlines()[:2]
    assert header == "r,value"
    r0, v0 = map(float, first.split(","))
    assert r0 == pytest.approx(radii[0])
    assert v0 == pytest.approx(values[0])


def test_boundary_decay_warning(grid64):
    wide = make_field(grid64, gaussian(grid64, width=8.0))
    with pytest.warns(BoundaryDecayWarning):
        check_boundary_decay(wide)
    narrow = make_field(grid64, gaussian(grid64, width=1.0))
    check_boundary_decay(narrow)  # no warning


def test_finiteness_enforced(grid64):
    bad = np.zeros((64, 64))
    bad[3, 3] = np.nan
    with pytest.raises(ValueError):
        make_field(grid64, bad)
