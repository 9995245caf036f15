"""Flat ``key = value`` run configuration files."""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .cost import CostWeights
from .protocol import SCHEDULERS, STEERING_SETS, ProtocolParams, default_max_steps
from .quantum_state import TargetStateSpec
from .stats import default_bin_width

RECORD_LEVELS = ("none", "summary", "full")
SWEEP_AXES = ("f_star", "dt", "p1", "N")
BUNDLED_SUFFIX = ".cfg"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    name: str
    params: ProtocolParams
    M: int
    bin_width: int
    horizon: int | None
    records: str
    sweep_axis: str | None
    sweep_values: tuple[float, ...]
    explicit: frozenset[str]

    def with_axis_value(self, axis: str, value: float) -> RunConfig:
        """Copy with one sweep axis changed; dependent defaults follow along."""
        p = self.params
        if axis == "f_star":
            return replace(self, params=replace(p, f_star=float(value)))
        if axis == "dt":
            return replace(self, params=replace(p, dt=float(value)))
        if axis == "p1":
            return replace(self, params=replace(p, weights=CostWeights.geometric(p.n_qubits, float(value))))
        if axis == "N":
            n = int(value)
            if n != value:
                raise ConfigError(f"N sweep value {value} is not an integer")
            kw = dict(n_qubits=n, couplings=None, entropy_subset=None)
            kw["weights"] = CostWeights.geometric(n, p.weights.p[0]) if "weights" in self.explicit else None
            if "max_steps" not in self.explicit:
                kw["max_steps"] = default_max_steps(p.target, n)
            if "initial" not in self.explicit:
                kw["initial"] = None
            if "couplings" in self.explicit:
                if len(set(p.couplings)) != 1:
                    raise ConfigError("N sweep needs uniform couplings")
                kw["couplings"] = (p.couplings[0],) * n
            bw = self.bin_width if "bin_width" in self.explicit else default_bin_width(p.target, n)
            return replace(self, params=replace(p, **kw), bin_width=bw)
        raise ConfigError(f"unknown sweep axis {axis!r}")


def bundled_names() -> list[str]:
    root = resources.files("activesteer") / "configs"
    return sorted(f.name[: -len(BUNDLED_SUFFIX)] for f in root.iterdir() if f.name.endswith(BUNDLED_SUFFIX))


def read_config_text(ref: str) -> tuple[str, str]:
    """Return (name, text) for a path or a bundled config name."""
    path = Path(ref)
    if path.is_file():
        return path.stem, path.read_text()
    res = resources.files("activesteer") / "configs" / f"{ref}{BUNDLED_SUFFIX}"
    if res.is_file():
        return ref, res.read_text()
    raise ConfigError(f"no config file {ref!r} and no bundled config of that name (bundled: {', '.join(bundled_names())})")


def parse_pairs(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(key: str, value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {value!r}") from None


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _choice(key: str, value: str, options) -> str:
    v = value.lower()
    if v not in options:
        raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {value!r}")
    return v


KNOWN_KEYS = {
    "n_qubits",
    "target",
    "initial",
    "dt",
    "couplings",
    "weights",
    "f_star",
    "max_steps",
    "scheduler",
    "steering_set",
    "seed",
    "entropy_subset",
    "M",
    "bin_width",
    "horizon",
    "records",
    "sweep_axis",
    "sweep_values",
}


def build_config(name: str, kv: dict[str, str], seed: int | None = None) -> RunConfig:
    unknown = set(kv) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    for key in ("n_qubits", "target", "M"):
        if key not in kv:
            raise ConfigError(f"missing required key {key!r}")
    n = _int("n_qubits", kv["n_qubits"])
    try:
        target = TargetStateSpec.parse(kv["target"])
        initial = TargetStateSpec.parse(kv["initial"]) if "initial" in kv else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    p: dict = dict(n_qubits=n, target=target, initial=initial)
    if "dt" in kv:
        p["dt"] = _float("dt", kv["dt"])
    if "couplings" in kv:
        p["couplings"] = _floats("couplings", kv["couplings"])
    if "weights" in kv and kv["weights"].lower() != "default":
        try:
            p["weights"] = CostWeights(_floats("weights", kv["weights"]))
        except ValueError as exc:
            raise ConfigError(f"weights: {exc}") from None
    if "f_star" in kv:
        p["f_star"] = _float("f_star", kv["f_star"])
    if "max_steps" in kv:
        p["max_steps"] = _int("max_steps", kv["max_steps"])
    if "scheduler" in kv:
        p["scheduler"] = _choice("scheduler", kv["scheduler"], SCHEDULERS)
    if "steering_set" in kv:
        p["steering_set"] = _choice("steering_set", kv["steering_set"], STEERING_SETS)
    if "entropy_subset" in kv:
        p["entropy_subset"] = tuple(_int("entropy_subset", v) for v in kv["entropy_subset"].split(",") if v.strip())
    seed_value = seed if seed is not None else _int("seed", kv.get("seed", "0"))
    if not 0 <= seed_value < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    p["seed"] = seed_value
    try:
        params = ProtocolParams(**p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    M = _int("M", kv["M"])
    if M < 1:
        raise ConfigError("M must be >= 1")
    bin_width = _int("bin_width", kv["bin_width"]) if "bin_width" in kv else default_bin_width(target, n)
    if bin_width < 1:
        raise ConfigError("bin_width must be >= 1")
    horizon = _int("horizon", kv["horizon"]) if "horizon" in kv else None
    if horizon is not None and horizon < 0:
        raise ConfigError("horizon must be >= 0")
    records = _choice("records", kv.get("records", "none"), RECORD_LEVELS)
    axis = kv.get("sweep_axis")
    if axis is not None and axis not in SWEEP_AXES:
        raise ConfigError(f"sweep_axis: expected one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    values = _floats("sweep_values", kv["sweep_values"]) if "sweep_values" in kv else ()
    return RunConfig(name, params, M, bin_width, horizon, records, axis, values, frozenset(kv))


def load_config(ref: str, seed: int | None = None) -> RunConfig:
    name, text = read_config_text(ref)
    return build_config(name, parse_pairs(text), seed)
