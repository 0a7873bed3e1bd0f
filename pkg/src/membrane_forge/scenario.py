"""Scenario files: TOML descriptions of an experiment setup.

A scenario fixes the computational box, grid, material constants and particle
list, plus optional per-command blocks (scan / flow / derivative).  Parsing is
strict: unknown keys anywhere in the document are errors, so typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .curves import ParticleShape
from .errors import ParseError, ValidationError
from .geometry import Box, Configuration
from .solve import ProblemSpec

__all__ = ["Scenario", "parse_scenario", "serialize_scenario"]

_SHAPE_KEYS = {
    "circle": {"radius"},
    "ellipse": {"a", "b"},
    "implicit": {"levelset"},
}


@dataclass(frozen=True)
class Scenario:
    """Validated experiment description; convertible to solver inputs."""

    box: tuple  # (x0, x1, y0, y1)
    nx: int
    ny: int
    kappa: float
    sigma: float
    beta0: float
    beta1: float
    curve_samples: int
    cut_subdiv: int
    cutoff_fractions: tuple
    shapes: tuple           # ParticleShape per particle
    poses: tuple            # (x1, x2, alpha3) per particle
    freeze_tilt: tuple      # bool per particle
    scan: dict | None = None
    flow: dict | None = None
    derivative: dict | None = None

    def problem(self) -> ProblemSpec:
        return ProblemSpec(
            box=Box(*self.box),
            shapes=self.shapes,
            kappa=self.kappa,
            sigma=self.sigma,
            nx=self.nx,
            ny=self.ny,
            beta0=self.beta0,
            beta1=self.beta1,
            curve_samples=self.curve_samples,
            cut_subdiv=self.cut_subdiv,
            cutoff_fractions=self.cutoff_fractions,
            freeze_tilt=self.freeze_tilt,
        )

    def initial_config(self) -> Configuration:
        return Configuration.from_array(np.array(self.poses, dtype=float).reshape(-1, 3))


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ValidationError(f"unknown key(s) {sorted(unknown)} in [{where}]")


def _direction(value, n: int, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n, 3):
        raise ValidationError(
            f"[{where}] direction must be a list of {n} [e1, e2, e3] triples, got shape {arr.shape}"
        )
    return arr


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"scenario is not valid TOML: {exc}") from exc

    _check_keys(doc, {"domain", "model", "penalty", "particles", "scan", "flow", "derivative"}, "")

    domain = doc.get("domain", {})
    _check_keys(domain, {"box", "nx", "ny", "curve_samples", "cut_subdiv", "cutoff_fractions"}, "domain")
    box = tuple(float(v) for v in domain.get("box", (-10.0, 10.0, -10.0, 10.0)))
    if len(box) != 4 or box[0] >= box[1] or box[2] >= box[3]:
        raise ValidationError(f"[domain] box must be [x0, x1, y0, y1] with x0 < x1, y0 < y1, got {box}")
    nx = int(domain.get("nx", 128))
    ny = int(domain.get("ny", 128))
    if nx <= 0 or ny <= 0:
        raise ValidationError(f"[domain] grid sizes must be positive, got nx={nx}, ny={ny}")
    curve_samples = int(domain.get("curve_samples", 256))
    cut_subdiv = int(domain.get("cut_subdiv", 8))
    fractions = tuple(float(v) for v in domain.get("cutoff_fractions", (0.25, 0.75)))
    if len(fractions) != 2 or not (0.0 < fractions[0] < fractions[1] < 1.0):
        raise ValidationError(f"[domain] cutoff_fractions must satisfy 0 < f1 < f2 < 1, got {fractions}")

    model = doc.get("model", {})
    _check_keys(model, {"kappa", "sigma"}, "model")
    kappa = float(model.get("kappa", 1.0))
    sigma = float(model.get("sigma", 0.0))
    if kappa <= 0.0 or sigma < 0.0:
        raise ValidationError(f"[model] requires kappa > 0 and sigma >= 0, got kappa={kappa}, sigma={sigma}")

    penalty = doc.get("penalty", {})
    _check_keys(penalty, {"beta0", "beta1"}, "penalty")
    beta0 = float(penalty.get("beta0", 1e-4))
    beta1 = float(penalty.get("beta1", 1e-4))
    if beta0 <= 0.0 or beta1 <= 0.0:
        raise ValidationError("[penalty] beta0 and beta1 must be positive")

    shapes, poses, freeze = [], [], []
    for idx, part in enumerate(doc.get("particles", [])):
        where = f"particles[{idx}]"
        kind = part.get("kind")
        if kind not in _SHAPE_KEYS:
            raise ValidationError(
                f"[{where}] unknown shape kind {kind!r}; expected one of {sorted(_SHAPE_KEYS)}"
            )
        _check_keys(part, {"kind", "g0", "g1", "pose", "freeze_tilt"} | _SHAPE_KEYS[kind], where)
        missing = _SHAPE_KEYS[kind] - set(part)
        if missing:
            raise ValidationError(f"[{where}] shape kind {kind!r} requires key(s) {sorted(missing)}")
        kwargs = {k: part[k] for k in _SHAPE_KEYS[kind]}
        shapes.append(
            ParticleShape(kind, g0=str(part.get("g0", "0")), g1=str(part.get("g1", "1")), **kwargs)
        )
        pose = tuple(float(v) for v in part.get("pose", (0.0, 0.0, 0.0)))
        if len(pose) != 3:
            raise ValidationError(f"[{where}] pose must be [x1, x2, alpha3], got {pose}")
        poses.append(pose)
        freeze.append(bool(part.get("freeze_tilt", False)))
    n = len(shapes)

    scan = doc.get("scan")
    if scan is not None:
        _check_keys(scan, {"direction", "start", "stop", "samples", "fd_delta"}, "scan")
        scan = {
            "direction": _direction(scan["direction"], n, "scan"),
            "start": float(scan["start"]),
            "stop": float(scan["stop"]),
            "samples": int(scan.get("samples", 50)),
            "fd_delta": float(scan.get("fd_delta", 1e-3)),
        }
        if scan["samples"] < 2:
            raise ValidationError("[scan] samples must be at least 2")

    flow = doc.get("flow")
    if flow is not None:
        _check_keys(flow, {"tau", "max_steps", "grad_tol"}, "flow")
        flow = {
            "tau": float(flow.get("tau", 0.5)),
            "max_steps": int(flow.get("max_steps", 100)),
            "grad_tol": float(flow.get("grad_tol", 1e-4)),
        }
        if flow["tau"] <= 0.0:
            raise ValidationError("[flow] tau must be positive")

    derivative = doc.get("derivative")
    if derivative is not None:
        _check_keys(derivative, {"directions", "fd_delta"}, "derivative")
        dirs = derivative.get("directions")
        if dirs is None:
            directions = [np.eye(1, 3 * n, k).reshape(n, 3) for k in range(3 * n)]
        else:
            directions = [_direction(d, n, "derivative") for d in dirs]
        derivative = {
            "directions": directions,
            "fd_delta": float(derivative.get("fd_delta", 1e-3)),
        }

    return Scenario(
        box=box,
        nx=nx,
        ny=ny,
        kappa=kappa,
        sigma=sigma,
        beta0=beta0,
        beta1=beta1,
        curve_samples=curve_samples,
        cut_subdiv=cut_subdiv,
        cutoff_fractions=fractions,
        shapes=tuple(shapes),
        poses=tuple(poses),
        freeze_tilt=tuple(freeze),
        scan=scan,
        flow=flow,
        derivative=derivative,
    )


def _toml_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return repr(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def serialize_scenario(sc: Scenario) -> str:
    """Emit a TOML document that parses back to an equal Scenario."""
    lines = ["[domain]"]
    lines.append(f"box = {_toml_value(list(sc.box))}")
    lines.append(f"nx = {sc.nx}")
    lines.append(f"ny = {sc.ny}")
    lines.append(f"curve_samples = {sc.curve_samples}")
    lines.append(f"cut_subdiv = {sc.cut_subdiv}")
    lines.append(f"cutoff_fractions = {_toml_value(list(sc.cutoff_fractions))}")
    lines += ["", "[model]", f"kappa = {sc.kappa!r}", f"sigma = {sc.sigma!r}"]
    lines += ["", "[penalty]", f"beta0 = {sc.beta0!r}", f"beta1 = {sc.beta1!r}"]
    for shape, pose, fr in zip(sc.shapes, sc.poses, sc.freeze_tilt):
        lines += ["", "[[particles]]", f'kind = "{shape.kind}"']
        for key in sorted(_SHAPE_KEYS[shape.kind]):
            lines.append(f"{key} = {_toml_value(getattr(shape, key))}")
        lines.append(f"g0 = {_toml_value(shape.g0)}")
        lines.append(f"g1 = {_toml_value(shape.g1)}")
        lines.append(f"pose = {_toml_value(list(pose))}")
        lines.append(f"freeze_tilt = {_toml_value(fr)}")
    if sc.scan is not None:
        lines += ["", "[scan]"]
        lines.append(f"direction = {_toml_value([list(r) for r in sc.scan['direction']])}")
        for key in ("start", "stop", "samples", "fd_delta"):
            lines.append(f"{key} = {_toml_value(sc.scan[key])}")
    if sc.flow is not None:
        lines += ["", "[flow]"]
        for key in ("tau", "max_steps", "grad_tol"):
            lines.append(f"{key} = {_toml_value(sc.flow[key])}")
    if sc.derivative is not None:
        lines += ["", "[derivative]"]
        lines.append(
            "directions = "
            + _toml_value([[list(r) for r in d] for d in sc.derivative["directions"]])
        )
        lines.append(f"fd_delta = {_toml_value(sc.derivative['fd_delta'])}")
    return "\n".join(lines) + "\n"
