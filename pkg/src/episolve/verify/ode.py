"""Well-mixed (ODE) limit of the SEIRD model and its comparison with the PDE.

The ODE works with proportions.  A spatially uniform PDE state with total
density N0 follows the same equations once the rates are rescaled:
beta -> beta * N0 and A -> A / N0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from episolve.fem import P1Space
from episolve.mesh import unit_square_mesh
from episolve.seird import ModelParameters, PicardConfig, StateFields, run_simulation
from episolve.seird.params import COMPARTMENTS
from episolve.sparsela import KrylovConfig

__all__ = ["OdeState", "ode_rhs", "ode_solve", "ode_parameters", "pde_ode_compare", "OdeComparison"]


@dataclass
class OdeState:
    s: float
    e: float
    i: float
    r: float
    d: float

    def as_array(self):
        return np.array([self.s, self.e, self.i, self.r, self.d], float)

    def total(self):
        return float(self.as_array().sum())


def ode_rhs(y, p):
    """Time derivative of the proportions (s, e, i, r, d).

    ``p`` holds scalar rates; its Allee constant multiplies as (1 - A).
    """
    s, e, i, r, d = y
    a = 1.0 - p.A
    inf = a * p.beta_I * s * i + a * p.beta_E * s * e
    n = s + e + i + r + d
    return np.array([
        p.alpha * n - inf - p.mu * s,
        inf - (p.sigma + p.gamma_E + p.mu) * e,
        p.sigma * e - (p.gamma_R + p.gamma_D + p.mu) * i,
        p.gamma_E * e + p.gamma_R * i - p.mu * r,
        p.gamma_D * i,
    ])


def ode_solve(params, y0, dt, T, substeps=10):
    """Classical RK4 with step ``dt / substeps``, sampled every ``dt``.

    Returns ``(times, Y)`` with ``Y[k]`` the proportions at ``times[k]``.
    """
    y = np.asarray(y0.as_array() if isinstance(y0, OdeState) else y0, float)
    n_out = int(round(T / dt))
    h = dt / substeps
    times = dt * np.arange(n_out + 1)
    Y = np.empty((n_out + 1, 5))
    Y[0] = y
    for k in range(1, n_out + 1):
        for _ in range(substeps):
            k1 = ode_rhs(y, params)
            k2 = ode_rhs(y + 0.5 * h * k1, params)
            k3 = ode_rhs(y + 0.5 * h * k2, params)
            k4 = ode_rhs(y + h * k3, params)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        Y[k] = y
    return times, Y


def ode_parameters(params, N0):
    """Proportion-form rates matching a uniform PDE state of density N0."""
    if callable(params.beta_I) or callable(params.beta_E):
        raise TypeError("the ODE limit needs constant transmission rates")
    return params.with_(A=params.A / N0, beta_I=params.beta_I * N0, beta_E=params.beta_E * N0)


@dataclass
class OdeComparison:
    population: float
    times: np.ndarray
    pde: np.ndarray
    ode: np.ndarray

    @property
    def discrepancy(self):
        """Max-in-time absolute difference per compartment (proportions)."""
        return np.max(np.abs(self.pde - self.ode), axis=0)

    @property
    def max_discrepancy(self):
        return float(self.discrepancy.max())


def pde_ode_compare(N0, T=210.0, dt=0.1, n=32, nu=1e-20, params=None, picard_tol=1e-10,
                    infected_fraction=0.1, solver=None, warm_start=True):
    """Run the PDE with uniform initial densities and compare with the ODE.

    The default rates are the unit-square values with the Allee constant
    set to zero, where the proportion-form factor (1 - A) and the density
    form (1 - A/N) agree.  Krylov solves are warm-started from the previous
    Picard iterate by default; the converged trajectory is unchanged.
    """
    from episolve.schwarz import LinearSolver

    if params is None:
        params = ModelParameters.square_domain(A=0.0)
    params = params.with_(nu_S=nu, nu_E=nu, nu_I=nu, nu_R=nu)
    mesh = unit_square_mesh(n)
    space = P1Space(mesh)
    area = space.integrate(np.ones(mesh.n_vertices))
    density = N0 / area
    one = np.ones(mesh.n_vertices)
    init = StateFields(
        s=(1 - infected_fraction) * density * one, e=0 * one,
        i=infected_fraction * density * one, r=0 * one, d=0 * one,
    )
    pde = [np.array([space.integrate(init[c]) for c in COMPARTMENTS]) / N0]

    def record(k, t, state, step):
        pde.append(np.array([space.integrate(state[c]) for c in COMPARTMENTS]) / N0)

    if solver is None:
        # nearly diffusion-free systems are mass-dominated; plain GMRES with a
        # tight tolerance is cheaper than refactoring every matrix
        solver = LinearSolver(mesh, pc="none", cfg=KrylovConfig(rtol=1e-12))
    cfg = PicardConfig(dt=dt, tol=picard_tol, warm_start=warm_start)
    run_simulation(space, params, init, int(round(T / dt)), cfg, solver, on_step=record)
    y0 = [1 - infected_fraction, 0, infected_fraction, 0, 0]
    times, Y = ode_solve(ode_parameters(params, density), y0, dt, T)
    return OdeComparison(N0, times, np.array(pde), Y)
