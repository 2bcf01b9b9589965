"""Picard-linearised backward-Euler systems, one compartment at a time.

Coefficients frozen at the previous Picard iterate are evaluated at the
quadrature points of the space.  Couplings to other compartments use the
newest value available in the current sweep (compartments are solved in
the order s, e, i, r, d), so e.g. the exposed equation sees the freshly
updated susceptible field.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from episolve.fem import quadrature

log = logging.getLogger(__name__)


class NonPositiveDensityError(ValueError):
    pass


@dataclass
class BoundaryData:
    """Boundary conditions keyed by facet label.

    Each callable has the signature ``f(comp, points, t)``.  Dirichlet
    callables return prescribed values, Neumann callables the normal
    derivative of the compartment density; the natural flux is then
    ``N * nu_c * g``.  Unlisted labels are no-flux.
    """

    dirichlet: dict = field(default_factory=dict)
    neumann: dict = field(default_factory=dict)


@dataclass
class AlleeLog:
    clamped_points: int = 0


def allee_factor(A, N_nodes, N_q, log_=None):
    """(1 - A/N) at quadrature points with the low-density guard."""
    if A == 0.0:
        return np.ones_like(N_q)
    bad = np.flatnonzero(N_nodes <= 0.0)
    if bad.size:
        raise NonPositiveDensityError(
            f"total density N={N_nodes[bad[0]]:.3g} <= 0 at node {bad[0]} where the Allee factor is needed"
        )
    floor = max(A * 1e-6, 1e-12)
    low = N_q < floor
    if np.any(low):
        if log_ is not None:
            log_.clamped_points += int(low.sum())
        log.warning("Allee factor clamped at %d quadrature points", int(low.sum()))
        N_q = np.where(low, floor, N_q)
    return 1.0 - A / N_q


def _latest(comp, prev_iter, partial):
    return partial[comp] if comp in partial else prev_iter[comp]


def assemble_compartment(
    comp,
    space,
    params,
    prev_time,
    prev_iter,
    partial,
    t,
    dt,
    forcing=None,
    boundary=None,
    allee_log=None,
):
    """Linear system (A, b) for compartment ``comp`` at time ``t`` (= t^{n+1}).

    ``prev_time`` is the state at t^n, ``prev_iter`` the previous Picard
    iterate and ``partial`` a dict of compartments already updated in this
    sweep.  ``forcing(comp, points, t)`` adds a volume source.
    """
    p = params
    M = space.mass()
    Nk_nodes = prev_iter.N
    Nk = space.at_quad(Nk_nodes)
    pts = space.quad_points()

    def latest(c):
        return _latest(c, prev_iter, partial)

    def lin(c):
        return space.at_quad(latest(c))

    react = np.zeros_like(Nk)  # reaction coefficient on the unknown (mass-type)
    src = None  # nonlinear source at quadrature points
    lin_src = np.zeros(space.n)  # linear sources, applied through M

    if comp in ("s", "e"):
        a = allee_factor(p.A, Nk_nodes, Nk, allee_log)
        bI = p.beta("I", pts, t)
        bE = p.beta("E", pts, t)

    if comp == "s":
        react = a * bI * lin("i") + a * bE * lin("e") + p.mu
        if p.alpha:
            src = p.alpha * Nk
    elif comp == "e":
        s_new = lin("s")
        react = (p.sigma + p.gamma_E + p.mu) - a * bE * s_new
        src = a * bI * s_new * lin("i")
    elif comp == "i":
        react = np.full_like(Nk, p.gamma_D + p.gamma_R + p.mu)
        lin_src = p.sigma * latest("e")
    elif comp == "r":
        react = np.full_like(Nk, p.mu)
        lin_src = p.gamma_R * latest("i") + p.gamma_E * latest("e")
    elif comp == "d":
        lin_src = p.gamma_D * latest("i")
    else:
        raise KeyError(comp)

    nu = p.diffusion(comp)
    data = space.mass_data().copy()
    if np.any(react != 0.0):
        data += dt * space.mass_data(react)
    if nu != 0.0:
        data += dt * space.stiffness_data(nu * Nk)
    A = space.csr(data)

    b = M @ (prev_time[comp] + dt * lin_src)
    if src is not None:
        b += dt * space.load(src)
    if forcing is not None:
        q5 = quadrature(space.dim, "deg5")
        b += dt * space.load(forcing(comp, space.quad_points(q5), t), q5)

    if boundary is not None:
        if nu != 0.0:
            for label, g in boundary.neumann.items():
                ids = np.flatnonzero(space.mesh.facet_labels == label)
                b += dt * nu * space.facet_load(ids, lambda x: g(comp, x, t), Nk_nodes)
        for label, g in boundary.dirichlet.items():
            nodes = space.mesh.boundary_vertices([label])
            space.apply_dirichlet(A, b, nodes, g(comp, space.mesh.vertices[nodes], t))
    return A, b
