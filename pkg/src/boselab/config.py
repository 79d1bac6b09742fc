"""Experiment configuration: a single JSON document, schema-validated.

Physical quantities carry explicit unit tags: energies as
{"value": x, "unit": "E_R"}, real times as {"value": x, "unit":
"hbar_over_E_R"}, imaginary time steps as {"value": x, "unit": "imaginary"}.
Unknown keys anywhere are rejected so typos cannot silently change a run.
"""

from __future__ import annotations

import json

ENERGY_UNIT = "E_R"
TIME_UNIT = "hbar_over_E_R"
IMAG_UNIT = "imaginary"


class ConfigError(ValueError):
    """Schema violation; `field` holds the JSON path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def _expect_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(path, "expected an object")
    return node


def _tagged(node, path, unit):
    node = _expect_mapping(node, path)
    extra = set(node) - {"value", "unit"}
    if extra:
        raise ConfigError(path, f"unknown keys {sorted(extra)}")
    if "value" not in node or "unit" not in node:
        raise ConfigError(path, 'expected {"value": x, "unit": "..."}')
    if node["unit"] != unit:
        raise ConfigError(path + ".unit", f"expected unit {unit!r}")
    val = node["value"]
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise ConfigError(path + ".value", "expected a number")
    return float(val)


class Field:
    def __init__(self, kind, required=True, default=None, check=None, unit=None):
        self.kind = kind
        self.required = required
        self.default = default
        self.check = check
        self.unit = unit

    def parse(self, node, path):
        k = self.kind
        if k == "int":
            if not isinstance(node, int) or isinstance(node, bool):
                raise ConfigError(path, "expected an integer")
            val = node
        elif k == "number":
            if not isinstance(node, (int, float)) or isinstance(node, bool):
                raise ConfigError(path, "expected a number")
            val = float(node)
        elif k == "bool":
            if not isinstance(node, bool):
                raise ConfigError(path, "expected a boolean")
            val = node
        elif k == "string":
            if not isinstance(node, str):
                raise ConfigError(path, "expected a string")
            val = node
        elif k == "energy":
            val = _tagged(node, path, ENERGY_UNIT)
        elif k == "time":
            val = _tagged(node, path, TIME_UNIT)
        elif k == "imaginary_time":
            val = _tagged(node, path, IMAG_UNIT)
        elif k == "number_list":
            if not isinstance(node, list) or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in node):
                raise ConfigError(path, "expected a list of numbers")
            val = [float(x) for x in node]
        elif k == "int_list":
            if not isinstance(node, list) or not all(
                    isinstance(x, int) and not isinstance(x, bool) for x in node):
                raise ConfigError(path, "expected a list of integers")
            val = list(node)
        elif k == "string_list":
            if not isinstance(node, list) or not all(isinstance(x, str) for x in node):
                raise ConfigError(path, "expected a list of strings")
            val = list(node)
        elif isinstance(k, dict):
            val = parse_section(node, k, path)
        else:  # pragma: no cover - schema author error
            raise AssertionError(f"bad schema kind {k}")
        if self.check is not None:
            msg = self.check(val)
            if msg:
                raise ConfigError(path, msg)
        return val


def parse_section(node, schema: dict, path: str) -> dict:
    node = _expect_mapping(node, path)
    unknown = set(node) - set(schema)
    if unknown:
        raise ConfigError(path, f"unknown keys {sorted(unknown)}")
    out = {}
    for key, fld in schema.items():
        sub = f"{path}.{key}" if path else key
        if key in node:
            out[key] = fld.parse(node[key], sub)
        elif fld.required:
            raise ConfigError(sub, "missing required field")
        else:
            out[key] = fld.default
    return out


def positive(val):
    return None if val > 0 else "must be positive"


def non_negative(val):
    return None if val >= 0 else "must be non-negative"


_HOPPING = {
    "kind": Field("string", required=False, default="PTH",
                  check=lambda v: None if v.upper() in ("PTH", "CH") else
                  "must be 'PTH' or 'CH' (or give explicit values)"),
    "lam": Field("number", required=False, default=2.0, check=positive),
    "values": Field("number_list", required=False),
}

_CHAIN = {
    "n_sites": Field("int", check=lambda v: None if v >= 2 else "need >= 2 sites"),
    "n_bosons": Field("int", check=positive),
    "hopping": Field(_HOPPING, required=False,
                     default={"kind": "PTH", "lam": 2.0, "values": None}),
    "repulsion_bulk": Field("energy", required=False, default=0.0),
    "repulsion_ends": Field("energy", required=False, default=0.0),
    "repulsion_values": Field("number_list", required=False),
    "potential_values": Field("number_list", required=False),
}

_GROUND_NUMERICS = {
    "dtau_ladder": Field("number_list", required=False, default=[1e-3],
                         check=lambda v: None if all(x > 0 for x in v) and v
                         else "need positive entries"),
    "tol_ladder": Field("number_list", required=False),
    "tol": Field("number", required=False, default=1e-14, check=positive),
    "max_sweeps": Field("int", required=False, default=200000, check=positive),
    "chi_max": Field("int", required=False),
    "check_every": Field("int", required=False, default=10, check=positive),
}

_REAL_NUMERICS = {
    "dt": Field("time", check=positive),
    "steps": Field("int", check=non_negative),
    "chi_cap": Field("int", required=False),
    "record_every": Field("int", required=False, default=1, check=positive),
    "observers": Field("string_list", required=False,
                       default=["occupation", "fluctuation", "entropy"]),
}

SCHEMAS = {
    "ground-state": {
        "model": Field(_CHAIN),
        "numerics": Field(_GROUND_NUMERICS),
        "measure_entanglement": Field("bool", required=False, default=True),
    },
    "real-time": {
        "model": Field(_CHAIN),
        "init_fock": Field("int_list", required=False),
        "numerics": Field(_REAL_NUMERICS),
    },
    "perturbed-evolution": {
        "model": Field(_CHAIN),
        "perturbation": Field({
            "epsilon": Field("energy"),
            "n0": Field("number", required=False),
        }),
        "ground_numerics": Field(_GROUND_NUMERICS),
        "numerics": Field(_REAL_NUMERICS),
    },
    "quench": {
        "model": Field({
            "n_sites": Field("int", check=lambda v: None if v >= 2 else "need >= 2 sites"),
            "n_bosons": Field("int", check=positive),
            "omega": Field("energy", required=False, default=0.00046),
            "xi": Field("energy", required=False, default=0.3),
            "center": Field("int", required=False),
            "barrier_height": Field("energy", required=False, default=1000.0),
            "barrier_between": Field("int_list", required=False),
            "mode": Field("string",
                          check=lambda v: None if v in ("turn_on", "turn_off")
                          else "must be 'turn_on' or 'turn_off'"),
        }),
        "numerics": Field({
            "t_max": Field("time", check=positive),
            "n_times": Field("int", required=False, default=101, check=positive),
            "entanglement_times": Field("number_list", required=False),
        }),
    },
    "collision": {
        "model": Field({
            "n_sites": Field("int", check=lambda v: None if v >= 2 and v % 2 == 0
                             else "need an even chain"),
            "n_bosons": Field("int", check=lambda v: None if v > 0 and v % 2 == 0
                              else "need an even boson number"),
            "lam": Field("number", required=False, default=1.0, check=positive),
            "mu_over_n_grid": Field("number_list"),
        }),
        "numerics": Field({
            "chi_max": Field("int", required=False),
            "compute_eee": Field("bool", required=False, default=True),
        }),
    },
    "kicked-gp": {
        "model": Field({
            "kick": Field("number"),
            "g": Field("number", check=non_negative),
            "beta": Field("time", check=positive),
            "eps": Field("time", check=positive),
            "pairs": Field("int", check=positive),
        }),
        "numerics": Field({
            "grid": Field("int", required=False, default=128),
            "dt_max": Field("number", required=False, default=1e-3, check=positive),
            "modes": Field("int_list", required=False, default=[-2, -1, 1, 2]),
            "include_analytic": Field("bool", required=False, default=True),
            "snapshots": Field("bool", required=False, default=True),
        }),
    },
    "stability-scan": {
        "model": Field({
            "kick": Field("number"),
            "g_grid": Field("number_list",
                            check=lambda v: None if v and all(x >= 0 for x in v)
                            else "need non-negative entries"),
            "beta": Field("time", check=positive),
            "eps": Field("time", check=positive),
            "pairs": Field("int", check=positive),
        }),
        "numerics": Field({
            "grid": Field("int", required=False, default=128),
            "dt_max": Field("number", required=False, default=1e-3, check=positive),
            "mode_max": Field("int", required=False, default=10, check=positive),
            "window_fraction": Field("number", required=False, default=2.0 / 3.0,
                                     check=lambda v: None if 0 < v <= 1 else
                                     "must be in (0, 1]"),
        }),
    },
}

_TOP = {
    "experiment": Field("string"),
    "units": Field({
        "energy": Field("string", check=lambda v: None if v == ENERGY_UNIT
                        else f"energies are reported in {ENERGY_UNIT}"),
        "time": Field("string", check=lambda v: None if v == TIME_UNIT
                      else f"times are reported in {TIME_UNIT}"),
    }),
    "output": Field({
        "directory": Field("string", required=False, default="out"),
        "checkpoint_every": Field("int", required=False, default=0,
                                  check=non_negative),
    }, required=False, default={"directory": "out", "checkpoint_every": 0}),
}


def validate_config(doc: dict) -> dict:
    """Validate a parsed JSON document; returns the normalized config."""
    _expect_mapping(doc, "")
    name = doc.get("experiment")
    if not isinstance(name, str):
        raise ConfigError("experiment", "missing or not a string")
    if name not in SCHEMAS:
        raise ConfigError("experiment",
                          f"unknown experiment {name!r}; "
                          f"known: {sorted(SCHEMAS)}")
    schema = dict(_TOP)
    schema.update(SCHEMAS[name])
    return parse_section(doc, schema, "")


def load_config(path) -> dict:
    """Read, parse and validate a config file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}", f"invalid JSON: {exc.msg}") from exc
    return validate_config(doc)


def chain_spec_from_model(model: dict):
    """Build a BhChainSpec from the validated chain-model section."""
    import numpy as np

    from .bosehubbard import BhChainSpec, hopping_profile

    n = model["n_sites"]
    hop = model["hopping"]
    if hop.get("values"):
        if len(hop["values"]) != n - 1:
            raise ConfigError("model.hopping.values", f"expected {n-1} entries")
        j = np.asarray(hop["values"], dtype=float)
    else:
        j = hopping_profile(hop["kind"], n, hop["lam"])
    if model.get("repulsion_values") is not None:
        if len(model["repulsion_values"]) != n:
            raise ConfigError("model.repulsion_values", f"expected {n} entries")
        u = np.asarray(model["repulsion_values"], dtype=float)
    else:
        u = np.full(n, model["repulsion_bulk"])
        u[0] = u[-1] = model["repulsion_ends"]
    if model.get("potential_values") is not None:
        if len(model["potential_values"]) != n:
            raise ConfigError("model.potential_values", f"expected {n} entries")
        mu = np.asarray(model["potential_values"], dtype=float)
    else:
        mu = np.zeros(n)
    return BhChainSpec(u, j, mu)
