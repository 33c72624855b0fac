"""Energy functionals of the two-component state and their L2 gradients.

For a pair (u, v) with masses (c1, c2) the energy is

    I(u,v) = (Q(u)+Q(v))/2 + W0(u,v)/4 - R(u,v)/(2p),

with Q the gradient energy, R = mu1*P(u) + mu2*P(v) + 2*beta*P0(u,v) built
from the 2p-norms, and W0 the logarithmic interaction energy.  W0 splits as
W1 - W2 against the kernels log(1+|x|) and log(1+1/|x|); both parts are
evaluated with their own cell-averaged kernel tables so the split is exact at
the sample level.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from logsp.grid import (
    Field,
    Grid2D,
    LogKernelTable,
    check_boundary_decay,
    coercive_convolution,
    kinetic_energy,
    log_convolution,
    make_field,
    mass,
    renormalized,
    singular_convolution,
    spectral_laplacian,
)

__all__ = [
    "ModelParams",
    "StatePair",
    "FunctionalBreakdown",
    "make_state",
    "state_potential",
    "eval_breakdown",
    "eval_I",
    "l2_gradient",
    "multipliers",
]


@dataclass(frozen=True)
class ModelParams:
    """Exponent p > 1, self-interaction strengths, coupling, target masses."""

    p: float
    mu1: float
    mu2: float
    beta: float
    c1: float
    c2: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("target masses c1, c2 must be positive")


@dataclass(frozen=True)
class StatePair:
    """A (u, v) sample pair on the product of mass spheres S(c1) x S(c2)."""

    u: Field
    v: Field
    params: ModelParams


def make_state(
    u: Field,
    v: Field,
    params: ModelParams,
    renormalize: bool = True,
    check_decay: bool = True,
) -> StatePair:
    """Assemble a state, renormalizing each component to its target mass.

    ``renormalize=False`` is a diagnostic mode for evaluating the functionals
    on raw fields; such states do not sit on the constraint manifold.
    """
    if u.grid != v.grid:
        raise ValueError("u and v must share one grid")
    if renormalize:
        u = renormalized(u, params.c1)
        v = renormalized(v, params.c2)
    if check_decay:
        check_boundary_decay(u, "u")
        check_boundary_decay(v, "v")
    return StatePair(u=u, v=v, params=params)


@dataclass(frozen=True)
class FunctionalBreakdown:
    """All scalar functionals of one state, evaluated consistently."""

    Q_u: float
    Q_v: float
    P_u: float
    P_v: float
    P0: float
    R: float
    W0: float
    W1: float
    W2: float
    norm0_u: float
    norm0_v: float
    I: float

    def as_dict(self) -> dict:
        return asdict(self)


_log_weight_cache: dict[tuple[int, float], np.ndarray] = {}


def _log_weight(grid: Grid2D) -> np.ndarray:
    key = (grid.n, grid.L)
    w = _log_weight_cache.get(key)
    if w is None:
        X, Y = grid.meshgrid()
        w = np.log1p(np.hypot(X, Y))
        _log_weight_cache[key] = w
    return w


def _density(s: StatePair) -> Field:
    return make_field(s.u.grid, s.u.values ** 2 + s.v.values ** 2)


def state_potential(s: StatePair, table: LogKernelTable) -> Field:
    """The induced potential w = log|.| * (u^2 + v^2)."""
    return log_convolution(_density(s), table)


def _local_terms(s: StatePair) -> tuple[float, float, float, float]:
    p = s.params.p
    h2 = s.u.grid.h ** 2
    P_u = float(h2 * np.sum(np.abs(s.u.values) ** (2 * p)))
    P_v = float(h2 * np.sum(np.abs(s.v.values) ** (2 * p)))
    P0 = float(h2 * np.sum(np.abs(s.u.values * s.v.values) ** p))
    R = s.params.mu1 * P_u + s.params.mu2 * P_v + 2.0 * s.params.beta * P0
    return P_u, P_v, P0, R


def eval_breakdown(s: StatePair, table: LogKernelTable) -> FunctionalBreakdown:
    """Evaluate every functional once; the convolution energies share one
    density but use the three kernel tables."""
    grid = s.u.grid
    if grid != table.grid:
        raise ValueError("state and kernel table use different grids")
    h2 = grid.h ** 2
    Q_u = kinetic_energy(s.u)
    Q_v = kinetic_energy(s.v)
    P_u, P_v, P0, R = _local_terms(s)
    rho = _density(s)
    W0 = float(h2 * np.sum(rho.values * log_convolution(rho, table).values))
    W1 = float(h2 * np.sum(rho.values * coercive_convolution(rho, table).values))
    W2 = float(h2 * np.sum(rho.values * singular_convolution(rho, table).values))
    lw = _log_weight(grid)
    norm0_u = float(h2 * np.sum(lw * s.u.values ** 2))
    norm0_v = float(h2 * np.sum(lw * s.v.values ** 2))
    I = 0.5 * (Q_u + Q_v) + 0.25 * W0 - R / (2.0 * s.params.p)
    return FunctionalBreakdown(
        Q_u=Q_u, Q_v=Q_v, P_u=P_u, P_v=P_v, P0=P0, R=R,
        W0=W0, W1=W1, W2=W2, norm0_u=norm0_u, norm0_v=norm0_v, I=I,
    )


def eval_I(s: StatePair, table: LogKernelTable, w0: Field | None = None) -> float:
    """Total energy; identical to eval_breakdown(...).I but skips the split
    kernels.  ``w0`` may pass a precomputed potential."""
    if w0 is None:
        w0 = state_potential(s, table)
    rho = _density(s)
    W0 = float(s.u.grid.h ** 2 * np.sum(rho.values * w0.values))
    _, _, _, R = _local_terms(s)
    Q = kinetic_energy(s.u) + kinetic_energy(s.v)
    return 0.5 * Q + 0.25 * W0 - R / (2.0 * s.params.p)


def _power(values: np.ndarray, exponent: float) -> np.ndarray:
    # |w|^exponent * sign(w); exponent > 0 so the limit at w = 0 is 0
    return np.abs(values) ** exponent * np.sign(values)


def l2_gradient(
    s: StatePair,
    table: LogKernelTable,
    w0: Field | None = None,
    include_potential: bool = True,
) -> tuple[Field, Field]:
    """Unconstrained L2 gradient (g_u, g_v) of I:

        g_u = -lap u + w u - mu1 |u|^(2p-2) u - beta |v|^p |u|^(p-2) u

    and symmetrically for v, with w the induced log potential.  The pairing
    d/de I(u+e*phi, v+e*psi) at e=0 equals the L2 inner product of (g_u, g_v)
    with (phi, psi).  ``include_potential=False`` is a diagnostic switch that
    drops the w term.
    """
    p, prm = s.params.p, s.params
    u, v = s.u.values, s.v.values
    g_u = -spectral_laplacian(s.u).values
    g_v = -spectral_laplacian(s.v).values
    if include_potential:
        if w0 is None:
            w0 = state_potential(s, table)
        g_u = g_u + w0.values * u
        g_v = g_v + w0.values * v
    if prm.mu1 != 0.0:
        g_u = g_u - prm.mu1 * _power(u, 2 * p - 1)
    if prm.mu2 != 0.0:
        g_v = g_v - prm.mu2 * _power(v, 2 * p - 1)
    if prm.beta != 0.0:
        g_u = g_u - prm.beta * np.abs(v) ** p * _power(u, p - 1)
        g_v = g_v - prm.beta * np.abs(u) ** p * _power(v, p - 1)
    return make_field(s.u.grid, g_u), make_field(s.v.grid, g_v)


def multipliers(s: StatePair, table: LogKernelTable, w0: Field | None = None) -> tuple[float, float]:
    """Lagrange multipliers as Rayleigh projections:

        lambda_1 = -(1/c1) [Q(u) + B0(u^2+v^2, u^2) - mu1 P(u) - beta P0]

    and symmetrically lambda_2, so that <g_u + lambda_1 u, u> = 0.
    """
    h2 = s.u.grid.h ** 2
    if w0 is None:
        w0 = state_potential(s, table)
    P_u, P_v, P0, _ = _local_terms(s)
    B0_u = float(h2 * np.sum(s.u.values ** 2 * w0.values))
    B0_v = float(h2 * np.sum(s.v.values ** 2 * w0.values))
    lam1 = -(kinetic_energy(s.u) + B0_u - s.params.mu1 * P_u - s.params.beta * P0) / s.params.c1
    lam2 = -(kinetic_energy(s.v) + B0_v - s.params.mu2 * P_v - s.params.beta * P0) / s.params.c2
    return lam1, lam2


def state_mass(s: StatePair) -> tuple[float, float]:
    return mass(s.u), mass(s.v)
