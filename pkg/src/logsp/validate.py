"""Numerical verification of the necessary identities satisfied by critical
points: the dilation (Pohozaev) identity, the Nehari identity obtained by
pairing the equations with the state, the combined functional

    M(u,v) = Q(u) + Q(v) - ((p-1)/p) R(u,v) - (c1+c2)^2/4

whose vanishing is necessary for constrained criticality, the scaling laws of
every functional under the fiber map, and the kernel-level domination of the
singular interaction part by the Riesz energy.

Residuals are reported relative to the largest absolute term of each
identity, so they are meaningful across parameter scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from logsp.grid import LogKernelTable, riesz_convolution, make_field
from logsp.functionals import (
    StatePair,
    _density,
    _local_terms,
    eval_breakdown,
    kinetic_energy,
    multipliers,
)
from logsp.fiber import rescale

__all__ = [
    "IdentityReport",
    "M_value",
    "pohozaev_gap",
    "pohozaev_residual",
    "nehari_gap",
    "nehari_residual",
    "check_transform",
    "check_kernel_bounds",
    "identity_report",
]


@dataclass(frozen=True)
class IdentityReport:
    pohozaev_residual: float
    nehari_residual: float
    M_value: float
    transform_errors: dict = field(default_factory=dict)
    hls_ok: bool = True

    def as_dict(self) -> dict:
        return {
            "pohozaev_residual": self.pohozaev_residual,
            "nehari_residual": self.nehari_residual,
            "M_value": self.M_value,
            "transform_errors": {
                format(t, ".17g"): errs for t, errs in self.transform_errors.items()
            },
            "hls_ok": self.hls_ok,
        }


def M_value(s: StatePair, table: LogKernelTable | None = None) -> float:
    """Q(u) + Q(v) - ((p-1)/p) R - (c1+c2)^2/4; no convolution is needed."""
    prm = s.params
    A = kinetic_energy(s.u) + kinetic_energy(s.v)
    _, _, _, R = _local_terms(s)
    return A - (prm.p - 1.0) / prm.p * R - (prm.c1 + prm.c2) ** 2 / 4.0


def _w0(s: StatePair, table: LogKernelTable) -> float:
    from logsp.functionals import state_potential

    rho = _density(s)
    return float(s.u.grid.h ** 2 * np.sum(rho.values * state_potential(s, table).values))


def pohozaev_gap(
    s: StatePair, lambda1: float, lambda2: float, table: LogKernelTable
) -> tuple[float, float]:
    """Signed defect and term scale of

        lambda1 c1 + lambda2 c2 + W0 + (c1+c2)^2/4 - R/p = 0."""
    prm = s.params
    _, _, _, R = _local_terms(s)
    terms = np.array([
        lambda1 * prm.c1,
        lambda2 * prm.c2,
        _w0(s, table),
        (prm.c1 + prm.c2) ** 2 / 4.0,
        -R / prm.p,
    ])
    return float(terms.sum()), float(np.max(np.abs(terms)))


def pohozaev_residual(
    s: StatePair, lambda1: float, lambda2: float, table: LogKernelTable
) -> float:
    gap, scale = pohozaev_gap(s, lambda1, lambda2, table)
    return abs(gap) / scale


def nehari_gap(
    s: StatePair, lambda1: float, lambda2: float, table: LogKernelTable
) -> tuple[float, float]:
    """Signed defect and term scale of

        Q(u) + Q(v) + lambda1 c1 + lambda2 c2 + W0 - R = 0."""
    prm = s.params
    _, _, _, R = _local_terms(s)
    terms = np.array([
        kinetic_energy(s.u) + kinetic_energy(s.v),
        lambda1 * prm.c1,
        lambda2 * prm.c2,
        _w0(s, table),
        -R,
    ])
    return float(terms.sum()), float(np.max(np.abs(terms)))


def nehari_residual(
    s: StatePair, lambda1: float, lambda2: float, table: LogKernelTable
) -> float:
    gap, scale = nehari_gap(s, lambda1, lambda2, table)
    return abs(gap) / scale


def check_transform(s: StatePair, table: LogKernelTable, t_list) -> dict:
    """Relative errors of the scaling laws under the fiber map: Q scales by
    t^2, the local terms by t^(2p-2), and W0 shifts by -(c1+c2)^2 log t."""
    prm = s.params
    base = eval_breakdown(s, table)
    shift = (prm.c1 + prm.c2) ** 2
    out: dict = {}
    for t in t_list:
        bd = eval_breakdown(rescale(s, float(t)), table)
        tq = float(t) ** 2
        tp = float(t) ** (2.0 * prm.p - 2.0)
        w0_pred = base.W0 - shift * np.log(float(t))
        out[float(t)] = {
            "Q": abs((bd.Q_u + bd.Q_v) - tq * (base.Q_u + base.Q_v))
                 / (tq * (base.Q_u + base.Q_v)),
            "P_u": abs(bd.P_u - tp * base.P_u) / (tp * base.P_u),
            "P_v": abs(bd.P_v - tp * base.P_v) / (tp * base.P_v),
            "P0": abs(bd.P0 - tp * base.P0) / (tp * base.P0),
            "R": abs(bd.R - tp * base.R) / max(abs(tp * base.R), 1e-300),
            "W0": abs(bd.W0 - w0_pred) / abs(base.W0),
        }
    return out


def check_kernel_bounds(s: StatePair, table: LogKernelTable) -> bool:
    """0 <= W2(u,v) <= Riesz energy of the same density (cell-averaged 1/r
    kernel); realizes the pointwise bound log(1+s) <= s at kernel level."""
    from logsp.functionals import eval_breakdown

    h2 = s.u.grid.h ** 2
    rho = _density(s)
    W2 = eval_breakdown(s, table).W2
    riesz = float(h2 * np.sum(rho.values * riesz_convolution(rho, table).values))
    return bool(0.0 <= W2 <= riesz)


def identity_report(
    s: StatePair,
    table: LogKernelTable,
    lambda1: float | None = None,
    lambda2: float | None = None,
    t_list=(0.5, 1.0, 2.0),
) -> IdentityReport:
    """Assemble every check; missing multipliers are extracted by Rayleigh
    projection, which is exact for true solutions."""
    if lambda1 is None or lambda2 is None:
        lambda1, lambda2 = multipliers(s, table)
    return IdentityReport(
        pohozaev_residual=pohozaev_residual(s, lambda1, lambda2, table),
        nehari_residual=nehari_residual(s, lambda1, lambda2, table),
        M_value=M_value(s, table),
        transform_errors=check_transform(s, table, t_list),
        hls_ok=check_kernel_bounds(s, table),
    )
