"""`key = value` run configuration: parsing, validation, defaults.

One flat namespace per subcommand, `#` comments, dotted keys for
grouped settings (kernel.radius, g.kind, initial.amplitude, ...).
Unknown keys are rejected; every value is type-checked and range-checked
at parse time with an error naming the key and the violated constraint.
Defaults reproduce the published experiment settings of each family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .errors import ConfigError
from .geometry import TorusGeometry
from .kernels import KernelSpec
from .kinetic import KineticConfig, PhaseField, equilibrium_perturbed_field, uniform_perturbed_field
from .meanfield import DensityField, PdeSimConfig, cosine_field, random_initial_field
from .particles import ParticleSimConfig
from .responses import Response, ResponseFunctions

SUBCOMMANDS = ("particles1", "particles2", "pde1d", "pde2d", "kinetic1d", "stability")


@dataclass(frozen=True)
class Field:
    kind: str  # "int" | "float" | "str"
    default: Any
    check: Callable[[Any], bool] | None = None
    message: str = ""
    choices: tuple[str, ...] | None = None


def _positive(key: str) -> tuple[Callable[[Any], bool], str]:
    return (lambda v: v > 0), f"{key} must be positive"


def _nonnegative(key: str) -> tuple[Callable[[Any], bool], str]:
    return (lambda v: v >= 0), f"{key} must be nonnegative"


def _at_least(key: str, bound: int) -> tuple[Callable[[Any], bool], str]:
    return (lambda v: v >= bound), f"{key} must be at least {bound}"


def _field(kind, default, rule=None, choices=None) -> Field:
    if rule is None:
        return Field(kind, default, None, "", choices)
    return Field(kind, default, rule[0], rule[1], choices)


def _kernel_fields(radius, cos_alpha, normalization) -> dict[str, Field]:
    return {
        "kernel.radius": _field("float", radius, _positive("kernel.radius")),
        "kernel.profile": _field("str", "indicator", choices=("indicator", "bump")),
        "kernel.cos_alpha": _field(
            "float",
            cos_alpha,
            ((lambda v: -1.0 <= v <= 1.0), "kernel.cos_alpha must lie in [-1, 1]"),
        ),
        "kernel.normalization": _field("str", normalization, choices=("raw", "unit")),
    }


def _g_fields(kind, param) -> dict[str, Field]:
    return {
        "g.kind": _field("str", kind, choices=("constant", "exp_decay", "hard_cutoff")),
        "g.param": _field("float", param),
    }


def _h_fields() -> dict[str, Field]:
    return {
        "h.kind": _field("str", "constant", choices=("constant", "exp_decay", "hard_cutoff")),
        "h.param": _field("float", 2.0),
    }


def _output_fields() -> dict[str, Field]:
    return {
        "out": _field("str", "out"),
        "formats": _field("str", "csv,pgm"),
    }


def _common(n_steps_default: int) -> dict[str, Field]:
    fields = {
        "L": _field("float", 1.0, _positive("L")),
        "seed": _field("int", 0, _nonnegative("seed")),
        "n_steps": _field("int", n_steps_default, _nonnegative("n_steps")),
        "snapshot_stride": _field("int", 0, _nonnegative("snapshot_stride")),
    }
    fields.update(_output_fields())
    return fields


def _particle_fields(order: int) -> dict[str, Field]:
    fields: dict[str, Field] = {}
    fields.update(_common(8300 if order == 1 else 1000))
    fields.update(
        {
            "dimension": _field("int", 2, ((lambda v: v in (1, 2)), "dimension must be 1 or 2")),
            "n": _field("int", 400, _at_least("n", 1)),
            "dt": _field("float", 1e-3, _positive("dt")),
            "method": _field("str", "auto", choices=("auto", "naive", "cells")),
            "cluster.radius": _field("float", 0.0, _nonnegative("cluster.radius")),
        }
    )
    if order == 1:
        fields.update(_kernel_fields(0.1, -1.0, "raw"))
        fields.update(_g_fields("exp_decay", 3.0))
    else:
        fields.update(_kernel_fields(0.05, 0.0, "raw"))
        fields.update(_g_fields("exp_decay", 3.0))
        fields.update(_h_fields())
        fields["v_init_scale"] = _field("float", 1.0, _nonnegative("v_init_scale"))
    return fields


def _pde_fields(dimension: int) -> dict[str, Field]:
    fields: dict[str, Field] = {}
    fields.update(_common(120000 if dimension == 1 else 20000))
    fields.update(
        {
            "m": _field("int", 200 if dimension == 1 else 100, _at_least("m", 2)),
            "dt": _field("float", 1e-4, _positive("dt")),
            "tau": _field("float", 1e-12, _positive("tau")),
            "steady.threshold": _field("float", 1e-6, _positive("steady.threshold")),
            "initial.kind": _field("str", "random", choices=("random", "cosine")),
            "initial.base": _field("float", 1.0, _positive("initial.base")),
            "initial.amplitude": _field("float", 0.05),
            "initial.mode": _field("int", 1, _at_least("initial.mode", 1)),
        }
    )
    fields.update(_kernel_fields(0.1 if dimension == 1 else 0.07, -1.0, "raw"))
    fields.update(_g_fields("exp_decay", 3.0))
    return fields


def _kinetic_fields() -> dict[str, Field]:
    fields: dict[str, Field] = {}
    fields.update(_common(2000))
    fields.update(
        {
            "n_x": _field("int", 100, _at_least("n_x", 2)),
            "n_v": _field("int", 100, _at_least("n_v", 2)),
            "v_min": _field("float", -1.0),
            "v_max": _field("float", 1.0),
            "cfl": _field(
                "float", 1.0, ((lambda v: 0.0 < v <= 1.0), "cfl must lie in (0, 1]")
            ),
            "tau": _field("float", 1e-12, _positive("tau")),
            "initial.kind": _field("str", "uniform", choices=("uniform", "equilibrium")),
            "initial.amplitude": _field("float", 0.05),
        }
    )
    fields.update(_kernel_fields(0.07, 0.0, "unit"))
    fields.update(_g_fields("exp_decay", 0.5))
    fields.update(_h_fields())
    return fields


def _stability_fields() -> dict[str, Field]:
    fields: dict[str, Field] = {
        "L": _field("float", 1.0, _positive("L")),
        "seed": _field("int", 0, _nonnegative("seed")),
        "rho0": _field("float", 1.0, _positive("rho0")),
        "max_mode": _field("int", 20, _at_least("max_mode", 1)),
    }
    fields.update(_output_fields())
    fields.update(_kernel_fields(0.1, -1.0, "raw"))
    fields.update(_g_fields("exp_decay", 3.0))
    return fields


SCHEMAS: dict[str, dict[str, Field]] = {
    "particles1": _particle_fields(1),
    "particles2": _particle_fields(2),
    "pde1d": _pde_fields(1),
    "pde2d": _pde_fields(2),
    "kinetic1d": _kinetic_fields(),
    "stability": _stability_fields(),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration for one subcommand."""

    subcommand: str
    values: dict[str, Any]


def _convert(key: str, raw: str, field: Field) -> Any:
    if field.kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if field.kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    if field.choices is not None and raw not in field.choices:
        raise ConfigError(f"{key} must be one of {', '.join(field.choices)}, got {raw!r}")
    return raw


def parse_config_lines(text: str) -> dict[str, str]:
    """Raw `key = value` pairs with # comments and blank lines skipped."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate config key: {key}")
        pairs[key] = value
    return pairs


def parse_config(text: str, subcommand: str | None = None) -> RunConfig:
    """Parse, type-check, default-fill, and cross-validate a config.

    The subcommand may be given as an argument, as a `subcommand = ...`
    line in the text, or both (they must then agree).
    """
    pairs = parse_config_lines(text)
    inline = pairs.pop("subcommand", None)
    if inline is not None:
        if subcommand is not None and inline != subcommand:
            raise ConfigError(
                f"config names subcommand {inline!r} but {subcommand!r} was requested"
            )
        subcommand = inline
    if subcommand is None:
        raise ConfigError("no subcommand given (pass one or add a 'subcommand =' line)")
    if subcommand not in SCHEMAS:
        raise ConfigError(
            f"unknown subcommand: {subcommand!r} (expected one of {', '.join(SUBCOMMANDS)})"
        )
    schema = SCHEMAS[subcommand]
    values: dict[str, Any] = {}
    for key, raw in pairs.items():
        if key not in schema:
            raise ConfigError(f"unknown config key: {key}")
        field = schema[key]
        value = _convert(key, raw, field)
        if field.check is not None and not field.check(value):
            raise ConfigError(field.message)
        values[key] = value
    for key, field in schema.items():
        values.setdefault(key, field.default)
    _cross_validate(subcommand, values)
    return RunConfig(subcommand=subcommand, values=values)


def _check_response_param(values: dict[str, Any], prefix: str) -> None:
    kind = values.get(f"{prefix}.kind")
    if kind is None:
        return
    param = values[f"{prefix}.param"]
    if kind == "constant":
        if param < 0.0:
            raise ConfigError(f"{prefix}.param must be nonnegative for constant")
    elif param <= 0.0:
        raise ConfigError(f"{prefix}.param must be positive for {kind}")


def _cross_validate(subcommand: str, values: dict[str, Any]) -> None:
    if "kernel.radius" in values and 2.0 * values["kernel.radius"] >= values["L"]:
        raise ConfigError("R < L/2 required")
    if subcommand == "kinetic1d" and not values["v_min"] < values["v_max"]:
        raise ConfigError("v_min must be below v_max")
    _check_response_param(values, "g")
    _check_response_param(values, "h")
    tokens = tuple(t.strip() for t in values["formats"].split(",") if t.strip())
    if not tokens or any(t not in ("csv", "pgm") for t in tokens):
        raise ConfigError("formats must be a comma-separated subset of csv, pgm")
    values["formats"] = tokens


def _build_response(values: dict[str, Any], prefix: str) -> Response:
    kind = values[f"{prefix}.kind"]
    param = values[f"{prefix}.param"]
    if kind == "constant":
        return Response.constant(param)
    if kind == "exp_decay":
        return Response.exp_decay(param)
    return Response.hard_cutoff(param)


def _build_kernel(values: dict[str, Any]) -> KernelSpec:
    return KernelSpec(
        radius=values["kernel.radius"],
        profile=values["kernel.profile"],
        cos_alpha=values["kernel.cos_alpha"],
        normalization=values["kernel.normalization"],
    )


def _stride(values: dict[str, Any]) -> int:
    if values["snapshot_stride"] > 0:
        return values["snapshot_stride"]
    return max(1, values["n_steps"])


def build_particles(rc: RunConfig, seed: int | None = None) -> ParticleSimConfig:
    """Assemble the particle-run configuration (order from subcommand)."""
    v = rc.values
    order = 1 if rc.subcommand == "particles1" else 2
    responses = ResponseFunctions(
        g=_build_response(v, "g"),
        h=_build_response(v, "h") if order == 2 else None,
    )
    return ParticleSimConfig(
        n_particles=v["n"],
        geometry=TorusGeometry(dimension=v["dimension"], side=v["L"]),
        kernel=_build_kernel(v),
        responses=responses,
        dt=v["dt"],
        n_steps=v["n_steps"],
        seed=v["seed"] if seed is None else seed,
        order=order,
        v_init_scale=v.get("v_init_scale", 1.0),
        method=v["method"],
        snapshot_stride=_stride(v),
        cluster_radius=v["cluster.radius"] if v["cluster.radius"] > 0.0 else None,
    )


def build_pde(rc: RunConfig, seed: int | None = None) -> tuple[PdeSimConfig, DensityField]:
    """Assemble the density-evolution configuration and initial field."""
    v = rc.values
    dimension = 1 if rc.subcommand == "pde1d" else 2
    geometry = TorusGeometry(dimension=dimension, side=v["L"])
    cfg = PdeSimConfig(
        kernel=_build_kernel(v),
        responses=ResponseFunctions(g=_build_response(v, "g")),
        dt=v["dt"],
        n_steps=v["n_steps"],
        snapshot_stride=_stride(v),
        tau=v["tau"],
        steady_threshold=v["steady.threshold"],
    )
    use_seed = v["seed"] if seed is None else seed
    if v["initial.kind"] == "random":
        initial = random_initial_field(v["m"], use_seed, geometry)
    else:
        initial = cosine_field(
            geometry, v["m"], v["initial.base"], v["initial.amplitude"], v["initial.mode"]
        )
    return cfg, initial


def build_kinetic(rc: RunConfig, seed: int | None = None) -> tuple[KineticConfig, PhaseField]:
    """Assemble the kinetic configuration and initial phase density."""
    v = rc.values
    cfg = KineticConfig(
        geometry=TorusGeometry(dimension=1, side=v["L"]),
        n_x=v["n_x"],
        v_min=v["v_min"],
        v_max=v["v_max"],
        n_v=v["n_v"],
        kernel=_build_kernel(v),
        responses=ResponseFunctions(g=_build_response(v, "g"), h=_build_response(v, "h")),
        n_steps=v["n_steps"],
        tau=v["tau"],
        cfl=v["cfl"],
        snapshot_stride=_stride(v),
    )
    if v["initial.kind"] == "uniform":
        initial = uniform_perturbed_field(cfg, v["initial.amplitude"])
    else:
        initial = equilibrium_perturbed_field(cfg, v["initial.amplitude"])
    return cfg, initial


def build_stability(rc: RunConfig) -> dict[str, Any]:
    """Assemble the stability-report inputs."""
    v = rc.values
    return {
        "rho0": v["rho0"],
        "spec": _build_kernel(v),
        "responses": ResponseFunctions(g=_build_response(v, "g")),
        "geom": TorusGeometry(dimension=1, side=v["L"]),
        "max_mode": v["max_mode"],
    }
