"""Published JSON schemas for every machine-readable output.

Each CLI run writes a JSON document that validates against its entry here;
reports name their schema in the "schema" field.
"""

_ESTIMATE = {
    "type": "object",
    "required": ["value", "ci_half_width", "method", "beta"],
    "properties": {
        "value": {"type": "number"},
        "ci_half_width": {"type": "number"},
        "method": {"type": "string"},
        "beta": {"type": "number"},
        "gamma": {"type": "number"},
    },
}

_COMMON_REQUIRED = ["schema", "version", "config", "seed"]
_COMMON_PROPS = {
    "schema": {"type": "string"},
    "version": {"type": "string"},
    "config": {"type": "object"},
    "seed": {"type": "integer"},
}

SCHEMAS = {
    "deff": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["rows"],
        "properties": {
            **_COMMON_PROPS,
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["gamma", "beta", "D", "gammaD", "residual",
                                 "truncation_estimate"],
                    "properties": {
                        "gamma": {"type": "number"},
                        "beta": {"type": "number"},
                        "D": {"type": "number"},
                        "gammaD": {"type": "number"},
                        "residual": {"type": "number"},
                        "truncation_estimate": {"type": "number"},
                        "gap": {"type": "number"},
                        "l4_norm": {"type": "number"},
                    },
                },
            },
        },
    },
    "mc": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["D", "ci", "tau_diff", "gamma", "beta",
                                        "n_paths", "dt"],
        "properties": {
            **_COMMON_PROPS,
            "D": {"type": "number"},
            "ci": {"type": "number"},
            "tau_diff": {"type": "number"},
            "gamma": {"type": "number"},
            "beta": {"type": "number"},
            "n_paths": {"type": "integer"},
            "dt": {"type": "number"},
        },
    },
    "fw": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["E0", "T0", "S_E0", "Z_beta", "dstar",
                                        "dstar_low_beta", "dstar_high_beta"],
        "properties": {
            **_COMMON_PROPS,
            "E0": {"type": "number"},
            "T0": {"type": "number"},
            "S_E0": {"type": "number"},
            "Z_beta": {"type": "number"},
            "dstar": {"type": "number"},
            "dstar_low_beta": {"type": "number"},
            "dstar_high_beta": {"type": "number"},
        },
    },
    "smol": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["dbar", "Z", "Zhat", "Z1", "expansion"],
        "properties": {
            **_COMMON_PROPS,
            "dbar": {"type": "number"},
            "Z": {"type": "number"},
            "Zhat": {"type": "number"},
            "Z1": {"type": "number"},
            "expansion": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["gamma", "value"],
                    "properties": {
                        "gamma": {"type": "number"},
                        "value": {"type": "number"},
                    },
                },
            },
        },
    },
    "graph-sim": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["estimate", "n_paths", "dt", "t_end"],
        "properties": {
            **_COMMON_PROPS,
            "estimate": _ESTIMATE,
            "n_paths": {"type": "integer"},
            "dt": {"type": "number"},
            "t_end": {"type": "number"},
            "stationary_ks": {"type": "number"},
        },
    },
    "bounds-check": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["rows", "all_ok"],
        "properties": {
            **_COMMON_PROPS,
            "all_ok": {"type": "boolean"},
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["gamma", "lower", "D", "upper", "ok"],
                    "properties": {
                        "gamma": {"type": "number"},
                        "lower": {"type": "number"},
                        "D": {"type": "number"},
                        "upper": {"type": "number"},
                        "ok": {"type": "boolean"},
                    },
                },
            },
        },
    },
    "gap": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["rows"],
        "properties": {
            **_COMMON_PROPS,
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["gamma", "gap"],
                    "properties": {
                        "gamma": {"type": "number"},
                        "gap": {"type": "number"},
                    },
                },
            },
        },
    },
    "sweep": {
        "type": "object",
        "required": _COMMON_REQUIRED + ["rows", "n_failed"],
        "properties": {
            **_COMMON_PROPS,
            "n_failed": {"type": "integer"},
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["gamma"],
                    "properties": {
                        "gamma": {"type": "number"},
                        "error": {"type": "string"},
                    },
                },
            },
        },
    },
}
