"""Angular-momentum midpoint time stepping for sphere-valued wave fields.

The state is a pair (u, w) of node fields with |u| = 1 and u . w = 0.
One step of size tau solves the implicit midpoint system

    u1 = u0 + tau * (mu x mw),      w1 = w0 + tau * (lap(mu) x mu),

with mu = (u0 + u1)/2 and mw = (w0 + w1)/2, by fixed-point iteration.
At the fixed point the step preserves both node-wise constraints exactly
and conserves the discrete energy

    E = 1/2 * ( ||w||_2^2 + dirichlet_form(u) ),

where the gradient part is the edge-based Dirichlet sum that pairs with
the mirror-ghost Laplacian (see grid.dirichlet_form).  Those invariants
hold up to the stopping tolerance of the iteration.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as gr
from .grid import Grid2D

__all__ = [
    "SolverConfig",
    "StepRecord",
    "NonConvergence",
    "initial_data",
    "constant_data",
    "rotation_data",
    "step",
    "energy",
]


class NonConvergence(Exception):
    """Fixed-point iteration hit the iteration cap; the step size is too large."""

    def __init__(self, iterations):
        super().__init__(f"fixed-point iteration did not converge in {iterations} iterations")
        self.iterations = iterations


@dataclass
class SolverConfig:
    """Nonlinear-solver and estimator constants.

    fp_tol      max-norm change of both iterates at which the iteration stops
    fp_max_iter iteration cap; reaching it raises NonConvergence
    unit_tol    tolerance for the |u| = 1 and u . w = 0 node constraints
    c_q         squared Sobolev embedding constant entering the growth rate
    p_exp       exponent p > 2 used in the growth-rate norms
    """

    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    unit_tol: float = 1e-9
    c_q: float = 4.0
    p_exp: float = 4.0

    def __post_init__(self):
        if self.fp_tol <= 0.0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max_iter < 1:
            raise ValueError("fp_max_iter must be at least 1")
        if self.unit_tol <= 0.0:
            raise ValueError("unit_tol must be positive")
        if self.c_q <= 0.0:
            raise ValueError("c_q must be positive")
        if self.p_exp <= 2.0:
            raise ValueError("p_exp must exceed 2")


@dataclass
class StepRecord:
    """Endpoint data of one accepted time interval.

    Everything downstream (reconstruction, residual sampling, bound
    evaluation) works from this record alone.  The endpoint Laplacians
    are cached because they are reused many times.
    """

    grid: Grid2D
    t_n: float
    t_np1: float
    u_n: np.ndarray
    u_np1: np.ndarray
    w_n: np.ndarray
    w_np1: np.ndarray
    lap_u_n: np.ndarray = field(repr=False, default=None)
    lap_u_np1: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not self.t_np1 > self.t_n:
            raise ValueError(f"need t_np1 > t_n, got [{self.t_n}, {self.t_np1}]")
        if self.lap_u_n is None:
            self.lap_u_n = gr.laplacian(self.u_n, self.grid)
        if self.lap_u_np1 is None:
            self.lap_u_np1 = gr.laplacian(self.u_np1, self.grid)

    @property
    def tau(self) -> float:
        return self.t_np1 - self.t_n

    def validate(self, unit_tol: float):
        """Check unit and orthogonality constraints at both endpoints."""
        for u, w, tag in ((self.u_n, self.w_n, "t_n"), (self.u_np1, self.w_np1, "t_np1")):
            du = gr.unit_deviation(u)
            if du > unit_tol:
                raise ValueError(f"unit constraint violated at {tag}: {du:.3e} > {unit_tol:.3e}")
            dw = gr.orthogonality_deviation(u, w)
            if dw > unit_tol * max(1.0, float(gr.magnitude(w).max())):
                raise ValueError(f"orthogonality violated at {tag}: {dw:.3e}")


def initial_data(g: Grid2D):
    """Stereographic bump initial state: u covers the sphere once, w = 0.

    Inside |x| <= 1/2, with a(x) = (1 - 2|x|)^4,

        u = (2 a x1, 2 a x2, a^2 - |x|^2) / (a^2 + |x|^2),

    and u = (0, 0, -1) outside; the two branches agree at |x| = 1/2.
    The third numerator component makes |u| = 1 node-wise exactly.
    """
    x, y = g.mesh()
    r2 = x * x + y * y
    r = np.sqrt(r2)
    a = (1.0 - 2.0 * r) ** 4
    denom = a * a + r2
    inner = r <= 0.5
    # denom >= 1/4 on the inner branch, but guard the unused outer nodes
    safe = np.where(inner, denom, 1.0)
    u = np.empty(g.shape + (3,))
    u[..., 0] = np.where(inner, 2.0 * a * x / safe, 0.0)
    u[..., 1] = np.where(inner, 2.0 * a * y / safe, 0.0)
    u[..., 2] = np.where(inner, (a * a - r2) / safe, -1.0)
    w = np.zeros_like(u)
    return u, w


def constant_data(g: Grid2D, direction=(0.0, 0.0, 1.0)):
    """Spatially constant unit state with zero momentum (stationary)."""
    d = np.asarray(direction, dtype=float)
    u = gr.constant_field(g, d / np.linalg.norm(d))
    return u, np.zeros_like(u)


def rotation_data(g: Grid2D, u0=(1.0, 0.0, 0.0), omega=(0.0, 0.0, 1.0)):
    """Spatially constant u perpendicular to a constant momentum w.

    The Laplacian terms vanish, so the exact flow is a rigid rotation of
    u about the w axis while w stays fixed.
    """
    u = np.asarray(u0, dtype=float)
    w = np.asarray(omega, dtype=float)
    u = u / np.linalg.norm(u)
    w = w - (w @ u) * u
    return gr.constant_field(g, u), gr.constant_field(g, w)


def step(u_n, w_n, tau, cfg: SolverConfig, g: Grid2D):
    """Advance one interval of length tau; returns (u_np1, w_np1, iterations).

    Both fields are updated Jacobi-style from the previous iterate and the
    iteration stops once the max-norm change of both is <= cfg.fp_tol.
    Negative tau is allowed (the midpoint map is time-symmetric), zero is
    not.  Raises NonConvergence when the cap is hit, which signals that
    |tau| is above the convergence threshold of the iteration.
    """
    if tau == 0.0:
        raise ValueError("tau must be nonzero")
    u, w = u_n, w_n
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, cfg.fp_max_iter + 1):
            mu = 0.5 * (u_n + u)
            mw = 0.5 * (w_n + w)
            u_new = u_n + tau * gr.cross(mu, mw)
            w_new = w_n + tau * gr.cross(gr.laplacian(mu, g), mu)
            du = float(np.abs(u_new - u).max())
            dw = float(np.abs(w_new - w).max())
            u, w = u_new, w_new
            if not (math.isfinite(du) and math.isfinite(dw)):
                raise NonConvergence(it)  # iteration diverged outright
            if du <= cfg.fp_tol and dw <= cfg.fp_tol:
                return u, w, it
    raise NonConvergence(cfg.fp_max_iter)


def energy(u, w, g: Grid2D) -> float:
    """Discrete energy 1/2 (||w||^2 + dirichlet_form(u)) conserved by the scheme."""
    kinetic = gr.integrate(gr.dot(w, w), g)
    return 0.5 * (kinetic + gr.dirichlet_form(u, g))
