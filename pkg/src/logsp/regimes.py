"""Parameter-regime classification and the Gagliardo-Nirenberg constant.

The planar inequality ||u||_q^q <= K_q ||grad u||_2^(q-2) ||u||_2^2 (q > 2)
enters both the p = 2 boundedness condition and the mass-supercritical
admissible-mass threshold.  K_q is estimated two independent ways:

* normalized gradient ascent on the scale-invariant Weinstein quotient
  J(u) = ||u||_q^q / (||grad u||_2^(q-2) ||u||_2^2) on a grid, and
* shooting for the positive radial ground state of -lap(Phi) + Phi =
  Phi^(q-1), whose squared L2 mass M gives the sharp constant through

      K_q = (q/2) * (2/(q-2))^((q-2)/2) * M^(-(q-2)/2).

The certified constant is the larger of the two (an under-estimate would
wrongly enlarge the admissible mass region); the estimates must agree to 1%.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft as sfft
from scipy.integrate import solve_ivp

from logsp.grid import Grid2D, make_grid
from logsp.functionals import ModelParams

__all__ = [
    "Regime",
    "RegimeKind",
    "GNConstant",
    "gn_constant",
    "gn_quotient",
    "gn_battery_max_ratio",
    "mass_threshold",
    "classify_regime",
]


class RegimeKind(str, Enum):
    THM1_I = "Thm1_i"
    THM1_II = "Thm1_ii"
    THM1_III = "Thm1_iii"
    THM2 = "Thm2"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class Regime:
    """Which existence regime the parameters fall in, with the margin
    (slack) of the defining inequality; negative slack on Unclassified
    reports the nearest failed case."""

    kind: RegimeKind
    mu0: float
    threshold: float | None
    slack: float


@dataclass(frozen=True)
class GNConstant:
    """Certified best constant for one exponent q, with both estimates."""

    q: float
    K: float
    method: str
    residual: float
    K_ascent: float
    K_shooting: float
    agreement: float


# ---------------------------------------------------------------------------
# Weinstein quotient on a grid
# ---------------------------------------------------------------------------

def _parseval_weights(n: int) -> np.ndarray:
    w = np.full((n, n // 2 + 1), 2.0)
    w[:, 0] = 1.0
    w[:, -1] = 1.0
    return w


def _batch_kinetic(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Gradient energies of a (..., n, n) stack via Parseval."""
    n = grid.n
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.h)
    k2 = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.h)
    k2sq = k1[:, None] ** 2 + k2[None, :] ** 2
    uh = sfft.rfft2(values, axes=(-2, -1))
    q = np.sum(_parseval_weights(n) * k2sq * np.abs(uh) ** 2, axis=(-2, -1))
    return grid.h ** 2 * q / n ** 2


def gn_quotient(values: np.ndarray, grid: Grid2D, q: float) -> np.ndarray:
    """Weinstein quotient of one field or a stack of fields."""
    h2 = grid.h ** 2
    N = h2 * np.sum(np.abs(values) ** q, axis=(-2, -1))
    m = h2 * np.sum(values ** 2, axis=(-2, -1))
    Q = _batch_kinetic(values, grid)
    return N / (Q ** ((q - 2.0) / 2.0) * m)


def _ascent(q: float, grid: Grid2D, max_iters: int = 4000, tol: float = 1e-13):
    h2 = grid.h ** 2
    X, Y = grid.meshgrid()
    u = np.exp(-(X ** 2 + Y ** 2) / 2.0)
    u /= np.sqrt(h2 * np.sum(u ** 2))

    k1 = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    k2 = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h)
    k2sq = k1[:, None] ** 2 + k2[None, :] ** 2

    def lap(w):
        return sfft.irfft2(-k2sq * sfft.rfft2(w), s=w.shape)

    def quotient(w):
        N = h2 * np.sum(np.abs(w) ** q)
        m = h2 * np.sum(w ** 2)
        Q = h2 * np.sum(-w * lap(w))
        return N / (Q ** ((q - 2.0) / 2.0) * m), N, m, Q

    J, N, m, Q = quotient(u)
    step, residual, stall = 0.5, np.inf, 0
    for _ in range(max_iters):
        lap_u = lap(u)
        dN = q * np.abs(u) ** (q - 2.0) * u
        dD = (q - 2.0) / 2.0 * Q ** ((q - 4.0) / 2.0) * m * (-2.0 * lap_u) \
            + Q ** ((q - 2.0) / 2.0) * 2.0 * u
        grad = (dN - J * dD) / (Q ** ((q - 2.0) / 2.0) * m)
        gnorm = np.sqrt(h2 * np.sum(grad ** 2))
        residual = gnorm / J
        if not np.isfinite(J) or not np.isfinite(gnorm):
            raise RuntimeError("quotient ascent diverged")
        if residual < 1e-12:
            break
        trial = u + step * grad / gnorm
        trial /= np.sqrt(h2 * np.sum(trial ** 2))
        J_t, N_t, m_t, Q_t = quotient(trial)
        if J_t >= J:
            if J_t - J < tol * abs(J):
                stall += 1
                if stall > 5:
                    u, J, N, m, Q = trial, J_t, N_t, m_t, Q_t
                    break
            else:
                stall = 0
            u, J, N, m, Q = trial, J_t, N_t, m_t, Q_t
            step = min(step * 1.2, 4.0)
        else:
            step *= 0.5
            if step < 1e-14:
                break
    return float(J), float(residual)


# ---------------------------------------------------------------------------
# Radial shooting for the ground state of -lap(Phi) + Phi = Phi^(q-1)
# ---------------------------------------------------------------------------

def _shoot_once(s: float, q: float, r_max: float = 30.0):
    """Integrate out from the regular series start; returns the outcome tag,
    the stopping radius and the state there, and the accumulated mass."""

    def rhs(r, y):
        phi, dphi, _ = y
        return [dphi, -dphi / r + phi - np.abs(phi) ** (q - 2.0) * phi,
                2.0 * np.pi * r * phi ** 2]

    def crossed(r, y):
        return y[0]
    crossed.terminal = True
    crossed.direction = -1

    def turned_up(r, y):
        return y[1]
    turned_up.terminal = True
    turned_up.direction = 1

    r0 = 1e-8
    curv = 0.5 * (s - s ** (q - 1.0))
    y0 = [s + 0.25 * curv * r0 ** 2, 0.5 * curv * r0, 0.0]
    sol = solve_ivp(
        rhs, (r0, r_max), y0, method="DOP853",
        events=[crossed, turned_up], rtol=1e-11, atol=1e-13, dense_output=False,
    )
    if sol.t_events[0].size:
        tag = "over"
    elif sol.t_events[1].size:
        tag = "under"
    else:
        tag = "end"
    return tag, sol.t[-1], sol.y[0, -1], sol.y[2, -1]


def _shooting_mass(q: float) -> float:
    """Squared L2 mass of the positive radial ground state, by bisection on
    the center amplitude between node-forming and turning-up launches."""
    amps = [0.25 * 2 ** k for k in range(12)]
    tags = [_shoot_once(s, q)[0] for s in amps]
    lo = hi = None
    for a, b, ta, tb in zip(amps, amps[1:], tags, tags[1:]):
        if ta == "under" and tb == "over":
            lo, hi = a, b
            break
    if lo is None:
        raise RuntimeError(f"no shooting bracket found for q={q}")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        tag, r_stop, phi_stop, mass_stop = _shoot_once(mid, q)
        if tag == "over":
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    tag, r_stop, phi_stop, mass_stop = _shoot_once(0.5 * (lo + hi), q)
    # exponential tail Phi ~ c r^(-1/2) e^(-r) beyond the tracked range
    return float(mass_stop + np.pi * phi_stop ** 2 * r_stop)


def _k_from_mass(q: float, M: float) -> float:
    return (q / 2.0) * (2.0 / (q - 2.0)) ** ((q - 2.0) / 2.0) * M ** (-(q - 2.0) / 2.0)


_GN_CACHE: dict[tuple[float, int, float], GNConstant] = {}


def gn_constant(q: float, grid: Grid2D | None = None) -> GNConstant:
    """Certified Gagliardo-Nirenberg constant for exponent q > 2.

    Runs both estimators, requires 1% cross-agreement, and certifies the
    larger value.  Raises RuntimeError on ascent divergence or disagreement.
    """
    if not q > 2:
        raise ValueError(f"Gagliardo-Nirenberg exponent must exceed 2, got {q}")
    if grid is None:
        grid = make_grid(128, 10.0)
    key = (float(q), grid.n, grid.L)
    hit = _GN_CACHE.get(key)
    if hit is not None:
        return hit
    K_ascent, residual = _ascent(q, grid)
    K_shooting = _k_from_mass(q, _shooting_mass(q))
    agreement = abs(K_ascent - K_shooting) / K_shooting
    if agreement > 0.01:
        raise RuntimeError(
            f"GN estimates disagree by {agreement:.2%} for q={q}: "
            f"ascent {K_ascent}, shooting {K_shooting}"
        )
    if K_ascent >= K_shooting:
        K, method = K_ascent, "quotient-ascent"
    else:
        K, method = K_shooting, "radial-shooting"
    out = GNConstant(
        q=float(q), K=float(K), method=method, residual=float(residual),
        K_ascent=float(K_ascent), K_shooting=float(K_shooting),
        agreement=float(agreement),
    )
    _GN_CACHE[key] = out
    return out


def gn_battery_max_ratio(
    q: float,
    grid: Grid2D,
    count: int = 10000,
    seed: int = 0,
    chunk: int = 500,
) -> float:
    """Largest Weinstein quotient over a battery of random smooth decaying
    fields (sums of anisotropic Gaussians with random centers and signs)."""
    rng = np.random.default_rng(seed)
    X, Y = grid.meshgrid()
    best = 0.0
    done = 0
    while done < count:
        m = min(chunk, count - done)
        amp = rng.uniform(-1.0, 1.0, size=(m, 3, 1, 1))
        cx = rng.uniform(-grid.L / 4, grid.L / 4, size=(m, 3, 1, 1))
        cy = rng.uniform(-grid.L / 4, grid.L / 4, size=(m, 3, 1, 1))
        wx = rng.uniform(0.5, 1.5, size=(m, 3, 1, 1))
        wy = rng.uniform(0.5, 1.5, size=(m, 3, 1, 1))
        fields = np.sum(
            amp * np.exp(-((X - cx) ** 2 / wx ** 2 + (Y - cy) ** 2 / wy ** 2)),
            axis=1,
        )
        best = max(best, float(np.max(gn_quotient(fields, grid, q))))
        done += m
    return best


# ---------------------------------------------------------------------------
# Regime classification
# ---------------------------------------------------------------------------

def mass_threshold(params: ModelParams, K2p: float) -> float:
    """Admissible total-mass bound for the mass-supercritical regime:

        4^((p-2)/(2p-3)) * [p (p-2)^(p-2) / (K_2p mu0 (p-1)^p)]^(1/(2p-3)).
    """
    p = params.p
    mu0 = max(params.mu1 + params.beta, params.mu2 + params.beta)
    if not p > 2:
        raise ValueError(f"mass threshold needs p > 2, got p={p}")
    if not mu0 > 0:
        raise ValueError(f"mass threshold needs mu0 > 0, got mu0={mu0}")
    if not K2p > 0:
        raise ValueError(f"K2p must be positive, got {K2p}")
    e = 1.0 / (2.0 * p - 3.0)
    return 4.0 ** ((p - 2.0) * e) * (
        p * (p - 2.0) ** (p - 2.0) / (K2p * mu0 * (p - 1.0) ** p)
    ) ** e


def classify_regime(
    params: ModelParams,
    K4: float | None = None,
    K2p: float | None = None,
) -> Regime:
    """First matching case in the order Thm1_i, Thm1_ii, Thm1_iii, Thm2.

    All cases assume beta > 0; otherwise the result is Unclassified.  K4 is
    consumed only by the p = 2 case, K2p only by the supercritical case; a
    missing constant raises ValueError when its case must be decided.
    """
    p, beta = params.p, params.beta
    mu0 = max(params.mu1 + params.beta, params.mu2 + params.beta)
    if beta <= 0:
        return Regime(kind=RegimeKind.UNCLASSIFIED, mu0=mu0, threshold=None, slack=beta)

    failed: list[float] = []

    slack_i = -mu0
    if slack_i >= 0:
        return Regime(kind=RegimeKind.THM1_I, mu0=mu0, threshold=None, slack=slack_i)
    failed.append(slack_i)

    if 1.0 < p < 2.0:
        return Regime(
            kind=RegimeKind.THM1_II, mu0=mu0, threshold=None,
            slack=min(p - 1.0, 2.0 - p),
        )

    if p == 2.0:
        if K4 is None:
            raise ValueError("K4 is required to classify p = 2 parameters")
        slack_iii = min(
            2.0 - K4 * (params.mu1 + beta) * params.c1,
            2.0 - K4 * (params.mu2 + beta) * params.c2,
        )
        if slack_iii > 0:
            return Regime(
                kind=RegimeKind.THM1_III, mu0=mu0, threshold=None, slack=slack_iii
            )
        failed.append(slack_iii)

    if p > 2.0 and params.mu1 > 0 and params.mu2 > 0:
        if K2p is None:
            raise ValueError("K2p is required to classify supercritical parameters")
        thr = mass_threshold(params, K2p)
        slack_2 = thr - (params.c1 + params.c2)
        if slack_2 > 0:
            return Regime(kind=RegimeKind.THM2, mu0=mu0, threshold=thr, slack=slack_2)
        failed.append(slack_2)

    return Regime(
        kind=RegimeKind.UNCLASSIFIED, mu0=mu0, threshold=None, slack=max(failed)
    )
