"""JSON schemas of the reports written by the command-line tool."""

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}

HJB = {
    "type": "object",
    "required": ["holds", "worst_violation", "location"],
    "properties": {
        "holds": {"type": "boolean"},
        "worst_violation": _num,
        "location": _num,
        "b": _num,
        "x_max": _num,
        "zero_threshold_criterion": {"type": ["boolean", "null"]},
        "v0_decreasing": {"type": ["boolean", "null"]},
    },
}

MODEL = {
    "type": "object",
    "required": ["sigma", "premium", "jumps"],
    "properties": {
        "sigma": _num,
        "premium": _num,
        "jumps": {
            "type": ["object", "null"],
            "required": ["type", "rate", "components"],
            "properties": {
                "type": {"enum": ["hyperexp", "erlang_mixture"]},
                "rate": _num,
                "components": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["weight", "alpha"],
                        "properties": {"weight": _num, "alpha": _num, "shape": {"type": "integer"}},
                    },
                },
            },
        },
    },
}

SOLUTION = {
    "type": "object",
    "required": ["b_star", "case", "a_star", "phi_q", "Phi_q", "h_at_bstar", "hjb", "config"],
    "properties": {
        "b_star": _num,
        "case": {"enum": ["InteriorPositive", "Zero_case_i", "Zero_case_ii"]},
        "a_star": _num,
        "phi_q": _num,
        "Phi_q": _num,
        "h_at_bstar": _num,
        "hjb": HJB,
        "config": {"type": "object", "required": ["model", "q", "delta"], "properties": {"model": MODEL}},
    },
}

SIMULATION = {
    "type": "object",
    "required": ["mean", "stderr", "n_paths", "n_ruined", "T", "bias_bound", "seed"],
    "properties": {
        "mean": _num,
        "stderr": _num,
        "n_paths": {"type": "integer"},
        "n_ruined": {"type": "integer"},
        "T": _num,
        "bias_bound": _num,
        "seed": {"type": "integer"},
        "config": {"type": "object"},
    },
}

GAMMA2 = {
    "type": "object",
    "required": ["checks", "passed", "config"],
    "properties": {
        "checks": {
            "type": "array",
            "items": {"type": "object", "required": ["name", "passed"]},
        },
        "passed": {"type": "boolean"},
        "config": {"type": "object"},
    },
}
