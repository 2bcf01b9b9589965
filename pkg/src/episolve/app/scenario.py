"""Scenario description, config files and synthetic initial data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from episolve.fem import P1Space
from episolve.mesh import read_mesh, rectangle_mesh, refine_uniform
from episolve.seird import ModelParameters, StateFields
from episolve.seird.params import COMPARTMENTS

__all__ = [
    "ConfigError",
    "Scenario",
    "parse_config",
    "load_config",
    "gaussian_ic",
    "multi_gaussian_ic",
    "beta_time_factor",
    "beta_space_factor",
    "beta_field",
    "RegionalBeta",
]

PRESETS = {
    "square": ModelParameters.square_domain,
    "ontario": ModelParameters.southern_ontario,
    "normalized_1d": ModelParameters.normalized_1d,
}


class ConfigError(ValueError):
    pass


# -- initial conditions ------------------------------------------------------


def gaussian_ic(points, center, amplitude, width):
    """amplitude * exp(-|x - center|^2 / (2 width^2)) at the given points."""
    if width <= 0:
        raise ValueError("width must be positive")
    d2 = np.sum((np.asarray(points) - np.asarray(center)) ** 2, axis=-1)
    return amplitude * np.exp(-d2 / (2.0 * width * width))


def multi_gaussian_ic(space, pulses):
    """Sum of Gaussian pulses, each scaled to carry a requested head count.

    ``pulses`` is a list of ``(center, total, width)``.  The scale of each
    pulse is fixed so that its P1 interpolant integrates to ``total`` over
    the mesh.
    """
    x = space.mesh.vertices
    out = np.zeros(space.n)
    for center, total, width in pulses:
        if total <= 0:
            raise ValueError(f"pulse total must be positive, got {total}")
        shape = gaussian_ic(x, center, 1.0, width)
        mass = space.integrate(shape)
        if mass <= 0:
            raise ValueError(f"pulse at {center} has no support on the mesh")
        out += (total / mass) * shape
    return out


# -- transmission rate ----------------------------------------------------------


def beta_time_factor(t):
    """0.101 - 0.05 / (1 + exp(130 - t)): drops around day 130."""
    z = np.clip(130.0 - np.asarray(t, float), -700.0, 700.0)
    return 0.101 - 0.05 / (1.0 + np.exp(z))


def beta_space_factor(x, central, eastern, western, x_eastern, x_western):
    """Two-sided logistic blend of the regional rates along x."""
    x = np.asarray(x, float)
    up = 1.0 / (1.0 + np.exp(np.clip(-5.0 * (x - x_eastern), -700, 700)))
    down = 1.0 / (1.0 + np.exp(np.clip(10.0 * (x - x_western), -700, 700)))
    return central + (eastern - central) * up + (western - central) * down


def beta_field(t, x, central, eastern, western, x_eastern, x_western):
    return beta_time_factor(t) * beta_space_factor(x, central, eastern, western, x_eastern, x_western)


@dataclass(frozen=True)
class RegionalBeta:
    """Callable beta(points, t) varying along the first coordinate."""

    central: float
    eastern: float
    western: float
    x_eastern: float
    x_western: float

    def __call__(self, points, t):
        return beta_field(t, points[..., 0], self.central, self.eastern, self.western,
                          self.x_eastern, self.x_western)


# -- scenarios -------------------------------------------------------------------


@dataclass
class Scenario:
    mesh_kind: str = "square"  # square | rectangle | file
    mesh_n: int = 32
    mesh_width: float = 1.0
    mesh_height: float = 1.0
    mesh_file: str | None = None
    preset: str = "square"
    overrides: dict = field(default_factory=dict)
    beta_kind: str = "constant"  # constant | regional
    beta_regional: dict = field(default_factory=dict)
    ic_kind: str = "center_gaussian"  # center_gaussian | multi_gaussian | uniform
    ic_N: float = 2000.0
    ic_fraction: float = 0.1
    ic_pulses: dict = field(default_factory=dict)  # comp -> [(center, total, width)]
    dt: float = 0.1
    steps: int = 10
    picard_tol: float = 1e-8
    picard_max_iters: int = 50
    pc: str = "ras2-v3"
    subdomains: int = 4
    overlap: int = 1
    threads: int = 1
    rtol: float = 1e-5
    amg_theta: float = 0.08
    amg_max_levels: int = 10
    amg_coarse_size: int = 64
    output_every: int = 0

    def params(self):
        try:
            p = PRESETS[self.preset](**self.overrides)
        except KeyError:
            raise ConfigError(f"unknown parameter preset {self.preset!r}; choose from {sorted(PRESETS)}") from None
        except TypeError as exc:
            raise ConfigError(f"bad model override: {exc}") from None
        if self.beta_kind == "regional":
            need = ("central", "eastern", "western", "x_eastern", "x_western")
            missing = [k for k in need if k not in self.beta_regional]
            if missing:
                raise ConfigError(f"regional beta needs beta.{', beta.'.join(missing)}")
            b = RegionalBeta(**{k: float(self.beta_regional[k]) for k in need})
            p = p.with_(beta_I=b, beta_E=b)
        elif self.beta_kind != "constant":
            raise ConfigError(f"unknown beta.kind {self.beta_kind!r}")
        return p

    def mesh_pair(self):
        """Nested (coarse, fine) pair; the fine mesh is the one simulated."""
        if self.mesh_kind in ("square", "rectangle"):
            if self.mesh_n < 2 or self.mesh_n % 2:
                raise ConfigError("mesh.n must be an even number >= 2 (the coarse grid has n/2 cells)")
            h = self.mesh_height if self.mesh_kind == "rectangle" else self.mesh_width
            ny = max(1, round(self.mesh_n * h / self.mesh_width))
            coarse = rectangle_mesh(self.mesh_n // 2, max(1, ny // 2), self.mesh_width, h)
            return refine_uniform(coarse)
        if self.mesh_kind == "file":
            if not self.mesh_file:
                raise ConfigError("mesh.kind = file needs mesh.file")
            path = Path(self.mesh_file)
            if not path.exists():
                raise ConfigError(f"mesh file not found: {path}")
            # a file mesh is taken as the coarse level and refined once
            return refine_uniform(read_mesh(path))
        raise ConfigError(f"unknown mesh.kind {self.mesh_kind!r}")

    def initial_state(self, space):
        x = space.mesh.vertices
        n = space.n
        if self.ic_kind == "uniform":
            i = np.full(n, self.ic_fraction * self.ic_N)
            return StateFields(s=self.ic_N - i, e=np.zeros(n), i=i, r=np.zeros(n), d=np.zeros(n))
        if self.ic_kind == "center_gaussian":
            lo, hi = space.mesh.bounding_box()
            center = 0.5 * (lo + hi)
            # i = 0.1 N exp(-10 |x - c|^2), i.e. width^2 = 1/20
            i = gaussian_ic(x, center, self.ic_fraction * self.ic_N, math.sqrt(0.05))
            return StateFields(s=self.ic_N - i, e=np.zeros(n), i=i, r=np.zeros(n), d=np.zeros(n))
        if self.ic_kind == "multi_gaussian":
            lo, hi = space.mesh.bounding_box()
            out = {}
            for comp in COMPARTMENTS:
                pulses = self.ic_pulses.get(comp, [])
                for center, _, _ in pulses:
                    if np.any(np.asarray(center) < lo) or np.any(np.asarray(center) > hi):
                        raise ConfigError(f"pulse center {center} lies outside the mesh")
                out[comp] = multi_gaussian_ic(space, pulses) if pulses else np.zeros(n)
            return StateFields.from_dict(out)
        raise ConfigError(f"unknown ic.kind {self.ic_kind!r}")

    def amg_options(self):
        return dict(theta=self.amg_theta, max_levels=self.amg_max_levels, coarse_size=self.amg_coarse_size)


# -- config files ------------------------------------------------------------------

# config key -> Scenario attribute
_KEYS = {
    "mesh.kind": "mesh_kind",
    "mesh.n": "mesh_n",
    "mesh.width": "mesh_width",
    "mesh.height": "mesh_height",
    "mesh.file": "mesh_file",
    "model.preset": "preset",
    "beta.kind": "beta_kind",
    "ic.kind": "ic_kind",
    "ic.N": "ic_N",
    "ic.fraction": "ic_fraction",
    "time.dt": "dt",
    "time.steps": "steps",
    "picard.tol": "picard_tol",
    "picard.max_iters": "picard_max_iters",
    "solver.pc": "pc",
    "solver.subdomains": "subdomains",
    "solver.overlap": "overlap",
    "solver.threads": "threads",
    "solver.rtol": "rtol",
    "amg.theta": "amg_theta",
    "amg.max_levels": "amg_max_levels",
    "amg.coarse_size": "amg_coarse_size",
    "output.every": "output_every",
}

_MODEL_KEYS = {f.name for f in fields(ModelParameters)}


def _convert(attr, raw, lineno):
    kind = {f.name: f.type for f in fields(Scenario)}[attr]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: expected a {kind} for {attr}, got {raw!r}") from None
    return raw


def _parse_pulses(raw, lineno):
    """'x:y:total:width; x:y:total:width' (1D: 'x:total:width')."""
    out = []
    for item in filter(None, (p.strip() for p in raw.split(";"))):
        try:
            nums = [float(v) for v in item.split(":")]
        except ValueError:
            raise ConfigError(f"line {lineno}: bad pulse {item!r}") from None
        if len(nums) < 3:
            raise ConfigError(f"line {lineno}: pulse needs center coordinates, total and width")
        out.append((tuple(nums[:-2]), nums[-2], nums[-1]))
    return out


def parse_config(text):
    """Build a Scenario from ``key = value`` lines; ``#`` starts a comment."""
    sc = Scenario()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in _KEYS:
            setattr(sc, _KEYS[key], _convert(_KEYS[key], raw, lineno))
        elif key.startswith("model.") and key[6:] in _MODEL_KEYS:
            try:
                sc.overrides[key[6:]] = float(raw)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be a number") from None
        elif key.startswith("beta.") and key != "beta.kind":
            try:
                sc.beta_regional[key[5:]] = float(raw)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be a number") from None
        elif key.startswith("ic.pulses."):
            comp = key[len("ic.pulses."):]
            if comp not in COMPARTMENTS:
                raise ConfigError(f"line {lineno}: unknown compartment {comp!r}")
            sc.ic_pulses[comp] = _parse_pulses(raw, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return sc


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())
