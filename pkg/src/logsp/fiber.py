"""Dilation fiber through a state and the reduced one-dimensional energy.

The mass-preserving map phi(t, u)(x) = t*u(t*x) turns the energy into

    F(t) = (A/2) t^2 - B log t - C/(q+1) t^(q+1) + W,

with A the total gradient energy, B = (c1+c2)^2/4, C = ((p-1)/p) R,
q = 2p-3 and W the quarter interaction energy.  Its derivative
f(t) = A t - B/t - C t^q and g(t) = t^2 f'(t) organize the constrained
geometry: for C > 0 the profile has two positive critical points t_plus
(local minimum of F) and t_minus (local maximum) exactly when

    ((q-1)^((q-1)/2) / (q+1)^((q+1)/2)) * A^((q+1)/2) / B^((q-1)/2) > C/2,

with the zero t_bar of g strictly between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.ndimage import map_coordinates

from logsp.grid import Field, LogKernelTable, kinetic_energy, make_field
from logsp.functionals import (
    StatePair,
    _density,
    _local_terms,
    make_state,
    state_potential,
)

__all__ = [
    "FiberProfile",
    "FiberRoots",
    "SingleRoot",
    "OmegaKind",
    "OmegaLabel",
    "resample",
    "rescale",
    "fiber_profile",
    "profile_from_breakdown",
    "two_root_condition",
    "two_root_lhs",
    "two_root_margin",
    "fiber_roots",
    "classify_omega",
]


@dataclass(frozen=True)
class FiberProfile:
    """Coefficients (A, B, C, q, W) of the reduced fiber energy."""

    A: float
    B: float
    C: float
    q: float
    W: float

    def F(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * self.A * t ** 2 - self.B * np.log(t) \
            - self.C / (self.q + 1.0) * t ** (self.q + 1.0) + self.W

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * t - self.B / t - self.C * t ** self.q

    def g(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * t ** 2 + self.B - self.C * self.q * t ** (self.q + 1.0)

    def scale(self) -> float:
        return max(abs(self.A), abs(self.B))


@dataclass(frozen=True)
class FiberRoots:
    """Ordered critical structure 0 < t_plus < t_bar < t_minus of F."""

    t_plus: float
    t_bar: float
    t_minus: float


@dataclass(frozen=True)
class SingleRoot:
    """Unique zero of the monotone profile derivative (C <= 0 branch)."""

    t: float


class OmegaKind(str, Enum):
    OMEGA_PLUS = "OmegaPlus"
    OMEGA_MINUS = "OmegaMinus"
    OFF_MANIFOLD = "OffManifold"


@dataclass(frozen=True)
class OmegaLabel:
    kind: OmegaKind
    degenerate: bool
    f1: float
    g1: float


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------

def resample(f: Field, t: float) -> Field:
    """Raw dilation t*u(t x) by bicubic spline resampling, zero outside."""
    if not t > 0:
        raise ValueError(f"scale factor must be positive, got {t}")
    grid = f.grid
    idx = (t * grid.coords() + grid.L) / grid.h - 0.5
    rows = np.broadcast_to(idx[:, None], (grid.n, grid.n))
    cols = np.broadcast_to(idx[None, :], (grid.n, grid.n))
    out = map_coordinates(f.values, [rows, cols], order=3, mode="constant", cval=0.0)
    return make_field(grid, t * out)


def rescale(s: StatePair, t: float) -> StatePair:
    """phi(t, .) on both components followed by exact mass renormalization."""
    return make_state(resample(s.u, t), resample(s.v, t), s.params)


# ---------------------------------------------------------------------------
# Profile extraction
# ---------------------------------------------------------------------------

def fiber_profile(s: StatePair, table: LogKernelTable) -> FiberProfile:
    h2 = s.u.grid.h ** 2
    A = kinetic_energy(s.u) + kinetic_energy(s.v)
    _, _, _, R = _local_terms(s)
    rho = _density(s)
    W0 = float(h2 * np.sum(rho.values * state_potential(s, table).values))
    return _profile(A, R, W0, s.params)


def profile_from_breakdown(bd, params) -> FiberProfile:
    """Profile from an existing FunctionalBreakdown (no new convolutions)."""
    return _profile(bd.Q_u + bd.Q_v, bd.R, bd.W0, params)


def _profile(A: float, R: float, W0: float, params) -> FiberProfile:
    p = params.p
    return FiberProfile(
        A=A,
        B=(params.c1 + params.c2) ** 2 / 4.0,
        C=(p - 1.0) / p * R,
        q=2.0 * p - 3.0,
        W=W0 / 4.0,
    )


# ---------------------------------------------------------------------------
# Root structure
# ---------------------------------------------------------------------------

def two_root_condition(pr: FiberProfile) -> bool:
    """Whether f has the two-zero structure (strict inequality); False for
    C <= 0, where callers take the single-root path."""
    lhs = two_root_lhs(pr)
    return pr.C > 0.0 and lhs > pr.C / 2.0


def two_root_lhs(pr: FiberProfile) -> float:
    """Left side of the two-root inequality,

        (q-1)^((q-1)/2) / (q+1)^((q+1)/2) * A^((q+1)/2) / B^((q-1)/2)."""
    q, A, B = pr.q, pr.A, pr.B
    if q <= 1:
        raise ValueError(f"two-root condition needs q > 1, got q={q}")
    if A <= 0 or B <= 0:
        raise ValueError("two-root condition needs A > 0 and B > 0")
    return (
        (q - 1.0) ** ((q - 1.0) / 2.0)
        / (q + 1.0) ** ((q + 1.0) / 2.0)
        * A ** ((q + 1.0) / 2.0)
        / B ** ((q - 1.0) / 2.0)
    )


def two_root_margin(pr: FiberProfile) -> float:
    """two_root_lhs minus C/2; positive means two roots.  For C <= 0 callers
    take the single-root path (margin +inf)."""
    lhs = two_root_lhs(pr)
    if pr.C <= 0:
        return np.inf
    return lhs - pr.C / 2.0


def _newton_bisect(fun, dfun, lo, hi, flo, ftol, max_iter=200):
    """Hybrid scalar root finder on a sign-change bracket [lo, hi]: Newton
    steps clipped to the bracket, bisection otherwise."""
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        ft = fun(t)
        if abs(ft) <= ftol:
            return t
        if (ft < 0) == (flo < 0):
            lo, flo = t, ft
        else:
            hi = t
        d = dfun(t)
        tn = t - ft / d if d != 0 else lo
        t = tn if lo < tn < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            return t
    return t


def fiber_roots(pr: FiberProfile) -> FiberRoots | SingleRoot | None:
    """Critical structure of the profile.

    Returns FiberRoots when the two-root condition holds, the SingleRoot of
    the monotone derivative when C <= 0, and None when C > 0 but the
    condition fails (f stays nonpositive).
    """
    A, B, C, q = pr.A, pr.B, pr.C, pr.q
    ftol = 1e-13 * max(abs(A), abs(B), 1e-300)

    if C <= 0:
        # f' = A + B/t^2 - C q t^(q-1) > 0: one zero, geometric bracket
        lo = hi = 1.0
        while pr.f(lo) > 0:
            lo /= 2.0
        while pr.f(hi) < 0:
            hi *= 2.0
        t = _newton_bisect(pr.f, lambda t: pr.g(t) / t ** 2, lo, hi, pr.f(lo), ftol)
        return SingleRoot(t=float(t))

    if not two_root_condition(pr):
        return None

    # g(0+) = B > 0 and g -> -inf; beyond the dominance scale where
    # C q t^(q+1) exceeds both A t^2 and B the sign is certainly negative
    gtol = 1e-13 * max(abs(A), abs(B))
    log_hi = max(np.log(2.0 * A / (C * q)) / (q - 1.0),
                 0.5 * np.log(max(B / A, 1.0)), 0.0)
    if log_hi > 600.0:
        raise OverflowError(
            "fiber roots exceed floating-point range for this profile"
        )
    hi = float(np.exp(log_hi))
    while pr.g(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0
    while pr.g(lo) <= 0:
        lo /= 2.0
    dg = lambda t: 2.0 * A * t - C * q * (q + 1.0) * t ** q
    t_bar = _newton_bisect(pr.g, dg, lo, hi, pr.g(lo), gtol)

    df = lambda t: pr.g(t) / t ** 2
    # f(t_bar) > 0 by the condition; f < 0 near 0 and near +inf
    lo = t_bar / 2.0
    while pr.f(lo) > 0:
        lo /= 2.0
    t_plus = _newton_bisect(pr.f, df, lo, t_bar, pr.f(lo), ftol)

    hi = t_bar * 2.0
    while pr.f(hi) > 0:
        hi *= 2.0
    t_minus = _newton_bisect(
        lambda t: -pr.f(t), lambda t: -df(t), t_bar, hi, -pr.f(t_bar), ftol
    )
    return FiberRoots(t_plus=float(t_plus), t_bar=float(t_bar), t_minus=float(t_minus))


def classify_omega(s: StatePair, table: LogKernelTable, tol: float = 1e-8) -> OmegaLabel:
    """Locate a state relative to the constrained critical manifold: states
    with f(1) away from zero are OffManifold; on it, the sign of g(1) selects
    the OmegaPlus / OmegaMinus branch.  A vanishing g(1) is flagged degenerate
    and reported OffManifold (the branch split excludes that set)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pr = fiber_profile(s, table)
    f1 = pr.A - pr.B - pr.C
    g1 = pr.A + pr.B - pr.C * pr.q
    scale = pr.scale()
    if abs(f1) > tol * scale:
        return OmegaLabel(kind=OmegaKind.OFF_MANIFOLD, degenerate=False, f1=f1, g1=g1)
    if abs(g1) <= tol * scale:
        return OmegaLabel(kind=OmegaKind.OFF_MANIFOLD, degenerate=True, f1=f1, g1=g1)
    kind = OmegaKind.OMEGA_PLUS if g1 > 0 else OmegaKind.OMEGA_MINUS
    return OmegaLabel(kind=kind, degenerate=False, f1=f1, g1=g1)
