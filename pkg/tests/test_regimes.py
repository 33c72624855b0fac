import mpmath
import numpy as np
import pytest

from logsp.grid import make_grid
from logsp.functionals import ModelParams
from logsp.regimes import (
    RegimeKind,
    classify_regime,
    gn_battery_max_ratio,
    gn_constant,
    gn_quotient,
    mass_threshold,
)
from conftest import gaussian


@pytest.fixture(scope="session")
def gn4():
    return gn_constant(4.0)


@pytest.fixture(scope="session")
def gn6():
    return gn_constant(6.0)


def test_gn4_two_methods_agree(gn4):
    assert gn4.agreement <= 0.01
    # the quartic maximizer mass is a classical reference value
    assert gn4.K_shooting == pytest.approx(2.0 / 11.7009, rel=1e-3)
    assert gn4.K == max(gn4.K_ascent, gn4.K_shooting)
    assert gn4.K > 0 and gn4.residual >= 0


def test_gn6_two_methods_agree(gn6):
    assert gn6.agreement <= 0.01
    assert gn6.K > 0


def test_gn_rejects_small_exponent():
    with pytest.raises(ValueError):
        gn_constant(2.0)


def test_quotient_scale_invariance():
    # u -> a u(b x) leaves the quotient unchanged
    g = make_grid(128, 10.0)
    base = gn_quotient(gaussian(g, width=1.0), g, 4.0)
    for a, width in [(3.0, 1.0), (1.0, 0.8), (0.2, 1.3)]:
        other = gn_quotient(a * gaussian(g, width=width), g, 4.0)
        assert abs(other - base) <= 1e-10 * base


def test_gn_battery_never_violates(gn4):
    g = make_grid(64, 10.0)
    worst = gn_battery_max_ratio(4.0, g, count=1000, seed=11)
    assert worst <= gn4.K * (1 + 1e-6)


def test_mass_threshold_p3_simplification(gn6):
    prm = ModelParams(p=3.0, mu1=1.0, mu2=1.0, beta=1.0, c1=1.0, c2=1.0)
    thr = mass_threshold(prm, gn6.K)
    mu0 = 2.0
    assert thr == pytest.approx((3.0 / (2.0 * gn6.K * mu0)) ** (1.0 / 3.0), rel=1e-14)


def test_mass_threshold_high_precision():
    # spot-check the closed formula against arbitrary-precision arithmetic
    p, K, mu1, mu2, beta = 2.7, 0.093, 0.8, 0.55, 0.4
    prm = ModelParams(p=p, mu1=mu1, mu2=mu2, beta=beta, c1=1.0, c2=1.0)
    got = mass_threshold(prm, K)
    mp = mpmath.mpf
    mu0 = mp(mu1) + mp(beta)
    e = 1 / (2 * mp(p) - 3)
    expected = mp(4) ** ((mp(p) - 2) * e) * (
        mp(p) * (mp(p) - 2) ** (mp(p) - 2) / (mp(K) * mu0 * (mp(p) - 1) ** mp(p))
    ) ** e
    assert got == pytest.approx(float(expected), rel=1e-13)


def test_mass_threshold_scaling_and_monotonicity(gn6):
    p = 3.0
    base = ModelParams(p=p, mu1=1.0, mu2=1.0, beta=1.0, c1=1.0, c2=1.0)
    thr = mass_threshold(base, gn6.K)
    doubled = ModelParams(p=p, mu1=3.0, mu2=3.0, beta=1.0, c1=1.0, c2=1.0)  # mu0 4
    assert mass_threshold(doubled, gn6.K) == pytest.approx(
        thr * 2.0 ** (-1.0 / (2 * p - 3)), rel=1e-12)
    ks = np.linspace(0.5 * gn6.K, 2.0 * gn6.K, 7)
    vals = [mass_threshold(base, k) for k in ks]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    mus = np.linspace(0.5, 4.0, 8)
    vals = [mass_threshold(
        ModelParams(p=p, mu1=m, mu2=m, beta=0.1, c1=1, c2=1), gn6.K) for m in mus]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_mass_threshold_preconditions(gn6):
    with pytest.raises(ValueError):
        mass_threshold(ModelParams(p=2.0, mu1=1, mu2=1, beta=1, c1=1, c2=1), gn6.K)
    with pytest.raises(ValueError):
        mass_threshold(ModelParams(p=3.0, mu1=-2, mu2=-2, beta=1, c1=1, c2=1), gn6.K)
    with pytest.raises(ValueError):
        mass_threshold(ModelParams(p=3.0, mu1=1, mu2=1, beta=1, c1=1, c2=1), -0.1)


def test_classify_thm1_cases(gn4):
    r = classify_regime(ModelParams(p=2.5, mu1=-2, mu2=-1, beta=1, c1=1, c2=1))
    assert r.kind == RegimeKind.THM1_I and r.slack == 0.0

    r = classify_regime(ModelParams(p=1.5, mu1=1, mu2=1, beta=1, c1=1, c2=1))
    assert r.kind == RegimeKind.THM1_II and r.slack == pytest.approx(0.5)

    prm = ModelParams(p=2.0, mu1=0.5, mu2=0.5, beta=0.5, c1=1.0, c2=1.0)
    r = classify_regime(prm, K4=gn4.K)
    assert r.kind == RegimeKind.THM1_III
    assert r.slack == pytest.approx(2.0 - gn4.K, rel=1e-12)


def test_classify_thm2(gn6):
    prm = ModelParams(p=3.0, mu1=1.0, mu2=1.0, beta=1.0, c1=1.0, c2=1.0)
    r = classify_regime(prm, K2p=gn6.K)
    assert r.kind == RegimeKind.THM2
    assert r.threshold == pytest.approx(mass_threshold(prm, gn6.K), rel=1e-14)
    assert r.slack == pytest.approx(r.threshold - 2.0, rel=1e-12)

    heavy = ModelParams(p=3.0, mu1=1.0, mu2=1.0, beta=1.0, c1=3.0, c2=3.0)
    r = classify_regime(heavy, K2p=gn6.K)
    assert r.kind == RegimeKind.UNCLASSIFIED and r.slack < 0


def test_classify_ordered_match():
    # negative couplings with p < 2 satisfy both (i) and (ii); (i) wins
    r = classify_regime(ModelParams(p=1.5, mu1=-2, mu2=-2, beta=1, c1=1, c2=1))
    assert r.kind == RegimeKind.THM1_I


def test_classify_beta_nonpositive():
    r = classify_regime(ModelParams(p=2.5, mu1=1, mu2=1, beta=-0.5, c1=1, c2=1))
    assert r.kind == RegimeKind.UNCLASSIFIED
    r = classify_regime(ModelParams(p=2.5, mu1=1, mu2=1, beta=0.0, c1=1, c2=1))
    assert r.kind == RegimeKind.UNCLASSIFIED


def test_classify_missing_constants():
    with pytest.raises(ValueError, match="K4"):
        classify_regime(ModelParams(p=2.0, mu1=0.5, mu2=0.5, beta=0.5, c1=1, c2=1))
    with pytest.raises(ValueError, match="K2p"):
        classify_regime(ModelParams(p=3.0, mu1=1, mu2=1, beta=1, c1=1, c2=1))


def test_classify_total_and_deterministic(gn4, gn6):
    rng = np.random.default_rng(0)
    for _ in range(50):
        prm = ModelParams(
            p=float(rng.uniform(1.01, 4.0)),
            mu1=float(rng.uniform(-2, 2)), mu2=float(rng.uniform(-2, 2)),
            beta=float(rng.uniform(0.01, 2)),
            c1=float(rng.uniform(0.1, 2)), c2=float(rng.uniform(0.1, 2)),
        )
        K2p = gn_constant(2 * prm.p).K if (
            prm.p > 2 and prm.mu1 > 0 and prm.mu2 > 0) else None
        r1 = classify_regime(prm, K4=gn4.K, K2p=K2p)
        r2 = classify_regime(prm, K4=gn4.K, K2p=K2p)
        assert r1 == r2
        assert r1.kind in RegimeKind
