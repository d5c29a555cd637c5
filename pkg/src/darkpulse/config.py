"""Experiment configuration: strict JSON ingestion and deterministic emission.

Configs are plain JSON with complex numbers as [re, im] pairs.  Validation is
strict: unknown keys anywhere are rejected, and every error message names the
offending field by its dotted path.  Emission writes floats with 17
significant digits so documents re-parse to the exact in-memory values and
repeated runs produce byte-identical artifacts; anything time-dependent lives
in a separate "meta" block.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .core import Envelope, FieldParams, Mode, TargetState
from .errors import ConfigError
from .liouville import Rates

__all__ = [
    "OptimizerSettings",
    "IntegratorSettings",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "dumps17",
    "atomic_write_text",
]


@dataclass(frozen=True)
class OptimizerSettings:
    seed: int
    restarts: int = 8
    max_iter: int = 2000
    tol: float = 1e-6
    pin_last: bool = False
    test_states: int = 1000


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-9
    atol: float = 1e-12
    residual: float = 1e-10


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; all downstream types are constructed here."""

    target: TargetState
    steps: int
    mode: Mode
    rates: Rates
    omega_peak: float
    envelope: Envelope
    grid_resolution: int
    optimizer: OptimizerSettings
    integrator: IntegratorSettings
    initial_states: np.ndarray | None = None
    weight_list: tuple[float, ...] | None = None
    n_list: tuple[int, ...] | None = None
    field_params: FieldParams | None = None


def _require_keys(doc: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    for key in doc:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}: unknown key '{key}'")
    for key in required:
        if key not in doc:
            raise ConfigError(f"{path}.{key}: missing required key")


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_complex_vector(value, path: str, length: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"{path}: expected a list of {length} [re, im] pairs")
    out = np.empty(length, dtype=complex)
    for i, pair in enumerate(value):
        if (not isinstance(pair, list) or len(pair) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in pair)):
            raise ConfigError(f"{path}[{i}]: expected an [re, im] pair")
        out[i] = complex(pair[0], pair[1])
    return out


def _parse_target(doc, path: str) -> TargetState:
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    _require_keys(doc, path, ("weights", "psi1", "psi2"))
    weights = doc["weights"]
    if (not isinstance(weights, list) or len(weights) != 2
            or any(isinstance(w, bool) or not isinstance(w, (int, float)) for w in weights)):
        raise ConfigError(f"{path}.weights: expected two numbers")
    p1, p2 = float(weights[0]), float(weights[1])
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-9:
        raise ConfigError(f"{path}.weights: must be nonnegative and sum to 1, got {weights}")
    psi1 = _as_complex_vector(doc["psi1"], f"{path}.psi1", 3)
    psi2 = _as_complex_vector(doc["psi2"], f"{path}.psi2", 3)
    try:
        return TargetState(weights=(p1, p2), psi1=psi1, psi2=psi2)
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a parsed JSON document and build the typed configuration.

    Raises
    ------
    ConfigError
        On any structural or semantic problem; the message names the field.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object at the top level")
    _require_keys(doc, "config",
                  ("target", "steps", "mode", "rates", "omega_peak", "envelope",
                   "grid_resolution", "optimizer", "integrator"),
                  ("initial_states", "weight_list", "N_list", "field"))

    target = _parse_target(doc["target"], "target")
    steps = _as_int(doc["steps"], "steps")
    if steps < 1:
        raise ConfigError(f"steps: must be at least 1, got {steps}")
    try:
        mode = Mode(doc["mode"])
    except ValueError:
        raise ConfigError(f"mode: expected 'alpha' or 'beta', got {doc['mode']!r}") from None

    rates_doc = doc["rates"]
    if not isinstance(rates_doc, dict):
        raise ConfigError("rates: expected an object")
    _require_keys(rates_doc, "rates", ("gamma_in",), ("gamma_ext", "r_pump"))
    try:
        rates = Rates(gamma_in=_as_number(rates_doc["gamma_in"], "rates.gamma_in"),
                      gamma_ext=_as_number(rates_doc.get("gamma_ext", 0.0), "rates.gamma_ext"),
                      r_pump=_as_number(rates_doc.get("r_pump", 0.0), "rates.r_pump"),
                      mode=mode)
    except ValueError as exc:
        raise ConfigError(f"rates: {exc}") from exc

    omega_peak = _as_number(doc["omega_peak"], "omega_peak")
    if omega_peak <= 0:
        raise ConfigError(f"omega_peak: must be positive, got {omega_peak}")
    try:
        envelope = Envelope(doc["envelope"])
    except ValueError:
        raise ConfigError(
            f"envelope: expected 'square' or 'sine_squared', got {doc['envelope']!r}") from None
    grid_resolution = _as_int(doc["grid_resolution"], "grid_resolution")
    if grid_resolution < 2:
        raise ConfigError(f"grid_resolution: must be at least 2, got {grid_resolution}")

    opt_doc = doc["optimizer"]
    if not isinstance(opt_doc, dict):
        raise ConfigError("optimizer: expected an object")
    _require_keys(opt_doc, "optimizer", ("seed",),
                  ("restarts", "max_iter", "tol", "pin_last", "test_states"))
    pin_last = opt_doc.get("pin_last", False)
    if not isinstance(pin_last, bool):
        raise ConfigError(f"optimizer.pin_last: expected a boolean, got {pin_last!r}")
    optimizer = OptimizerSettings(
        seed=_as_int(opt_doc["seed"], "optimizer.seed"),
        restarts=_as_int(opt_doc.get("restarts", 8), "optimizer.restarts"),
        max_iter=_as_int(opt_doc.get("max_iter", 2000), "optimizer.max_iter"),
        tol=_as_number(opt_doc.get("tol", 1e-6), "optimizer.tol"),
        pin_last=pin_last,
        test_states=_as_int(opt_doc.get("test_states", 1000), "optimizer.test_states"),
    )
    if optimizer.seed < 0:
        raise ConfigError("optimizer.seed: must be nonnegative")
    if optimizer.restarts < 1 or optimizer.max_iter < 1:
        raise ConfigError("optimizer.restarts and optimizer.max_iter must be at least 1")
    if optimizer.tol <= 0:
        raise ConfigError("optimizer.tol: must be positive")

    int_doc = doc["integrator"]
    if not isinstance(int_doc, dict):
        raise ConfigError("integrator: expected an object")
    _require_keys(int_doc, "integrator", (), ("rtol", "atol", "residual"))
    integrator = IntegratorSettings(
        rtol=_as_number(int_doc.get("rtol", 1e-9), "integrator.rtol"),
        atol=_as_number(int_doc.get("atol", 1e-12), "integrator.atol"),
        residual=_as_number(int_doc.get("residual", 1e-10), "integrator.residual"),
    )
    if integrator.rtol <= 0 or integrator.atol <= 0:
        raise ConfigError("integrator.rtol and integrator.atol must be positive")
    if not (0.0 < integrator.residual < 1.0):
        raise ConfigError("integrator.residual: must lie strictly between 0 and 1")

    initial_states = None
    if "initial_states" in doc:
        raw = doc["initial_states"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("initial_states: expected a nonempty list of state vectors")
        initial_states = np.empty((len(raw), 3), dtype=complex)
        for i, entry in enumerate(raw):
            vecc = _as_complex_vector(entry, f"initial_states[{i}]", 3)
            norm = np.linalg.norm(vecc)
            if abs(norm - 1.0) > 1e-9:
                raise ConfigError(f"initial_states[{i}]: vector norm {norm!r} is not 1")
            initial_states[i] = vecc

    weight_list = None
    if "weight_list" in doc:
        raw = doc["weight_list"]
        if not isinstance(raw, list):
            raise ConfigError("weight_list: expected a list of numbers")
        weight_list = tuple(_as_number(w, f"weight_list[{i}]") for i, w in enumerate(raw))
        if any(w < 0 or w > 1 for w in weight_list):
            raise ConfigError("weight_list: entries must lie in [0, 1]")

    n_list = None
    if "N_list" in doc:
        raw = doc["N_list"]
        if not isinstance(raw, list):
            raise ConfigError("N_list: expected a list of integers")
        n_list = tuple(_as_int(n, f"N_list[{i}]") for i, n in enumerate(raw))
        if any(n < 1 for n in n_list):
            raise ConfigError("N_list: entries must be at least 1")

    field_params = None
    if "field" in doc:
        fdoc = doc["field"]
        if not isinstance(fdoc, dict):
            raise ConfigError("field: expected an object")
        _require_keys(fdoc, "field", ("theta", "phi", "mu_minus", "mu_plus"), ("xi", "delta"))
        field_params = FieldParams(
            theta=_as_number(fdoc["theta"], "field.theta"),
            phi=_as_number(fdoc["phi"], "field.phi"),
            mu_minus=_as_number(fdoc["mu_minus"], "field.mu_minus"),
            mu_plus=_as_number(fdoc["mu_plus"], "field.mu_plus"),
            xi=_as_number(fdoc.get("xi", 0.0), "field.xi"),
            delta=_as_number(fdoc.get("delta", 0.0), "field.delta"),
            omega_peak=omega_peak, envelope=envelope)

    return ExperimentConfig(
        target=target, steps=steps, mode=mode, rates=rates, omega_peak=omega_peak,
        envelope=envelope, grid_resolution=grid_resolution, optimizer=optimizer,
        integrator=integrator, initial_states=initial_states,
        weight_list=weight_list, n_list=n_list, field_params=field_params)


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file; any failure is a ConfigError."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc})") from exc
    return parse_config(doc)


def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    text = format(float(x), ".17g")
    # keep floats recognizably floats so documents round-trip type-exactly
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def dumps17(obj, indent: int = 0) -> str:
    """Serialize to JSON with floats at 17 significant digits.

    Dict insertion order is preserved, so documents built deterministically
    serialize byte-identically.
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {dumps17(v, indent + 2)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{dumps17(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path, text: str) -> None:
    """Write a file atomically (temp file + rename in the same directory)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
