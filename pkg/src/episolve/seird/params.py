"""Model parameters and nodal state for the SEIRD reaction-diffusion system."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

COMPARTMENTS = ("s", "e", "i", "r", "d")


@dataclass
class ModelParameters:
    """Rate constants of the five-compartment model.

    ``beta_I`` and ``beta_E`` are either numbers or callables
    ``beta(points, t)`` evaluated on arrays of points with shape (..., dim).
    Diffusion coefficients multiply the total density N, hence their
    km^4 / (people day) units.
    """

    A: float = 0.0
    beta_I: object = 0.0
    beta_E: object = 0.0
    nu_S: float = 0.0
    nu_E: float = 0.0
    nu_I: float = 0.0
    nu_R: float = 0.0
    gamma_R: float = 0.0
    gamma_D: float = 0.0
    gamma_E: float = 0.0
    sigma: float = 0.0
    alpha: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if callable(v):
                continue
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be a finite non-negative number, got {v!r}")

    def diffusion(self, comp):
        return {"s": self.nu_S, "e": self.nu_E, "i": self.nu_I, "r": self.nu_R, "d": 0.0}[comp]

    def beta(self, which, points, t):
        b = self.beta_I if which == "I" else self.beta_E
        if callable(b):
            return np.asarray(b(points, t), float)
        return np.full(points.shape[:-1], float(b))

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def square_domain(cls, **overrides):
        """Unit-square benchmark values."""
        p = dict(
            A=500.0,
            beta_I=3.78e-4,
            beta_E=3.78e-4,
            nu_S=3.94e-6,
            nu_E=3.94e-6,
            nu_I=1e-8,
            nu_R=3.94e-6,
            gamma_R=1 / 24,
            gamma_D=1 / 160,
            sigma=1 / 7,
            gamma_E=1 / 6,
        )
        p.update(overrides)
        return cls(**p)

    @classmethod
    def southern_ontario(cls, **overrides):
        """Regional values; beta is usually replaced by a space-time field."""
        p = dict(
            A=8.9e-3,
            beta_I=0.0,
            beta_E=0.0,
            nu_S=4.5e-7,
            nu_E=4.5e-7,
            nu_I=1e-9,
            nu_R=4.5e-7,
            gamma_R=1 / 11,
            gamma_D=1 / 750,
            sigma=1 / 5,
            gamma_E=1 / 15,
        )
        p.update(overrides)
        return cls(**p)

    @classmethod
    def normalized_1d(cls, **overrides):
        """Values used for the one-dimensional manufactured-solution runs."""
        p = dict(
            A=0.0,
            beta_I=0.01,
            beta_E=0.01,
            nu_S=4.5e-5,
            nu_E=1e-3,
            nu_I=1e-10,
            nu_R=4.5e-5,
            gamma_R=1 / 24,
            gamma_D=1 / 160,
            sigma=1 / 8,
            gamma_E=1 / 6,
        )
        p.update(overrides)
        return cls(**p)


class StateFields:
    """Nodal densities of the five compartments on one mesh."""

    def __init__(self, s, e, i, r, d):
        self.s = np.asarray(s, float)
        self.e = np.asarray(e, float)
        self.i = np.asarray(i, float)
        self.r = np.asarray(r, float)
        self.d = np.asarray(d, float)
        n = len(self.s)
        if any(len(getattr(self, c)) != n for c in COMPARTMENTS):
            raise ValueError("compartment fields differ in length")

    @classmethod
    def from_dict(cls, fields_):
        return cls(*(fields_[c] for c in COMPARTMENTS))

    @classmethod
    def zeros(cls, n):
        return cls(*(np.zeros(n) for _ in COMPARTMENTS))

    def __getitem__(self, comp):
        return getattr(self, comp)

    def as_dict(self):
        return {c: getattr(self, c) for c in COMPARTMENTS}

    def copy(self):
        return StateFields(*(getattr(self, c).copy() for c in COMPARTMENTS))

    @property
    def N(self):
        return self.s + self.e + self.i + self.r + self.d

    def stacked(self):
        return np.concatenate([getattr(self, c) for c in COMPARTMENTS])

    def is_finite(self):
        return all(np.all(np.isfinite(getattr(self, c))) for c in COMPARTMENTS)

    def __len__(self):
        return len(self.s)
