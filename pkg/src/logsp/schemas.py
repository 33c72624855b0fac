"""JSON Schemas for every document the command-line tools emit.

Kept in one place so tests can validate emitted artifacts and downstream
consumers have a contract to pin against."""

_NUMBER = {"type": "number"}
_STRING = {"type": "string"}

REGIME_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["Thm1_i", "Thm1_ii", "Thm1_iii", "Thm2", "Unclassified"]},
        "mu0": _NUMBER,
        "threshold": {"type": ["number", "null"]},
        "slack": _NUMBER,
    },
    "required": ["kind", "mu0", "threshold", "slack"],
    "additionalProperties": False,
}

GN_CONSTANT_SCHEMA = {
    "type": "object",
    "properties": {
        "q": _NUMBER,
        "K": _NUMBER,
        "method": _STRING,
        "residual": _NUMBER,
        "K_ascent": _NUMBER,
        "K_shooting": _NUMBER,
        "agreement": _NUMBER,
        "n": {"type": "integer"},
        "L": _NUMBER,
    },
    "required": ["q", "K", "method", "residual", "K_ascent", "K_shooting",
                 "agreement", "n", "L"],
    "additionalProperties": False,
}

_PARAMS_SCHEMA = {
    "type": "object",
    "properties": {k: _NUMBER for k in ("p", "mu1", "mu2", "beta", "c1", "c2")},
    "required": ["p", "mu1", "mu2", "beta", "c1", "c2"],
    "additionalProperties": False,
}

_GRID_SCHEMA = {
    "type": "object",
    "properties": {"n": {"type": "integer"}, "L": _NUMBER},
    "required": ["n", "L"],
    "additionalProperties": False,
}

SOLVE_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "branch": {"enum": ["Ground", "Excited"]},
        "converged": {"type": "boolean"},
        "energy": _NUMBER,
        "lambda1": _NUMBER,
        "lambda2": _NUMBER,
        "iterations": {"type": "integer"},
        "residuals": {
            "type": "object",
            "properties": {
                "projected_grad": _NUMBER,
                "M_value": _NUMBER,
                "pohozaev": _NUMBER,
                "nehari": _NUMBER,
                "branch_residual": _NUMBER,
            },
            "required": ["projected_grad", "M_value", "pohozaev", "nehari"],
            "additionalProperties": False,
        },
        "regime": REGIME_SCHEMA,
        "params": _PARAMS_SCHEMA,
        "grid": _GRID_SCHEMA,
        "seed": {"type": "integer"},
        "energy_trace": {"type": "array", "items": _NUMBER},
    },
    "required": ["branch", "converged", "energy", "lambda1", "lambda2",
                 "iterations", "residuals", "regime", "params", "grid",
                 "seed", "energy_trace"],
    "additionalProperties": False,
}

FIBER_SCAN_SCHEMA = {
    "type": "object",
    "properties": {
        "profile": {
            "type": "object",
            "properties": {k: _NUMBER for k in ("A", "B", "C", "q", "W")},
            "required": ["A", "B", "C", "q", "W"],
            "additionalProperties": False,
        },
        "condition": {
            "type": "object",
            "properties": {
                "lhs": _NUMBER,
                "rhs": _NUMBER,
                "two_roots": {"type": "boolean"},
            },
            "required": ["lhs", "rhs", "two_roots"],
            "additionalProperties": False,
        },
        "roots": {
            "type": ["object", "null"],
            "properties": {
                "kind": {"enum": ["two", "single"]},
                "t_plus": _NUMBER,
                "t_bar": _NUMBER,
                "t_minus": _NUMBER,
                "t": _NUMBER,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    },
    "required": ["profile", "condition", "roots"],
    "additionalProperties": False,
}

IDENTITY_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "pohozaev_residual": _NUMBER,
        "nehari_residual": _NUMBER,
        "M_value": _NUMBER,
        "transform_errors": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {k: _NUMBER for k in ("Q", "P_u", "P_v", "P0", "R", "W0")},
                "required": ["Q", "P_u", "P_v", "P0", "R", "W0"],
                "additionalProperties": False,
            },
        },
        "hls_ok": {"type": "boolean"},
        "lambda1": _NUMBER,
        "lambda2": _NUMBER,
    },
    "required": ["pohozaev_residual", "nehari_residual", "M_value",
                 "transform_errors", "hls_ok", "lambda1", "lambda2"],
    "additionalProperties": False,
}

BREAKDOWN_SCHEMA = {
    "type": "object",
    "properties": {k: _NUMBER for k in (
        "Q_u", "Q_v", "P_u", "P_v", "P0", "R", "W0", "W1", "W2",
        "norm0_u", "norm0_v", "I",
    )},
    "required": ["Q_u", "Q_v", "P_u", "P_v", "P0", "R", "W0", "W1", "W2",
                 "norm0_u", "norm0_v", "I"],
    "additionalProperties": False,
}
