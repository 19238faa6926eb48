"""Computable residual bounds and the accumulated error estimate.

From one StepRecord the node-wise quantities

    A_u  = |u1 - u0|          A_u_x  = |grad (u1 - u0)|   A_u_xx = |lap (u1 - u0)|
    A_w  = |w1 - w0|          A_w_x  = |grad (w1 - w0)|
    B_u  = |u1 x w1 - u0 x w0|            (+ _x, _xx variants)
    B_w  = |lap u1 x u1 - lap u0 x u0|    (+ _x variant)
    C_w  = max(|w0|, |w1|)    C_u_x, C_w_x, C_u_xx analogous maxima

are assembled with the grid module's centered/5-point operators.  Under
the smallness condition A_u^2 + tau * B_u < 1/4 they yield point-wise
upper bounds for each residual part of the reconstruction, valid
uniformly on the interval.  The bounds feed two scalar rates:

    alpha_hat = ||bd_rg + bd_ru * W + bd_rw||_2 + ||bd_ru||_2 + ||bd_grad_ru||_2
    delta_hat = 1 + c_q ||G^2 + W^2||_p + 2 c_q ||W||_2p^2
                + 2 c_q ||G||_2p ||W||_2p + 4 ||W||_inf

with the majorants W = C_w + tau * B_w >= |wtilde| (hence >= |utilde x wtilde|)
and G = 2 (C_u_x + tau * B_u_x) >= |grad utilde|.  The total bound obeys
the recurrence

    B_j = (B_{j-1} + int_alpha_j) * exp(int_delta_j / 2),

where the per-interval integrals are tau * alpha_hat and tau * delta_hat
because the bounds are constant on each interval.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as gr
from .grid import Grid2D
from .scheme import SolverConfig, StepRecord

__all__ = [
    "SmallnessViolated",
    "LocalBounds",
    "ResidualBoundFields",
    "EstimatorState",
    "local_quantities",
    "check_smallness",
    "residual_bounds",
    "alpha_hat",
    "delta_hat",
    "accumulate",
]


class SmallnessViolated(Exception):
    """A_u^2 + tau * B_u reached 1/4 somewhere; the step size must be reduced."""


@dataclass
class LocalBounds:
    """Node-wise endpoint-difference magnitudes and endpoint maxima."""

    A_u: np.ndarray
    A_u_x: np.ndarray
    A_u_xx: np.ndarray
    A_w: np.ndarray
    A_w_x: np.ndarray
    B_u: np.ndarray
    B_u_x: np.ndarray
    B_u_xx: np.ndarray
    B_w: np.ndarray
    B_w_x: np.ndarray
    C_w: np.ndarray
    C_u_x: np.ndarray
    C_w_x: np.ndarray
    C_u_xx: np.ndarray


@dataclass
class ResidualBoundFields:
    """Point-wise upper bounds for the residual parts on one interval."""

    bd_ru1: np.ndarray
    bd_grad_ru1: np.ndarray
    bd_ru2: np.ndarray
    bd_grad_ru2: np.ndarray
    bd_ru3: np.ndarray
    bd_grad_ru3: np.ndarray
    bd_rw: np.ndarray
    bd_rg: np.ndarray

    @property
    def bd_ru(self) -> np.ndarray:
        return self.bd_ru1 + self.bd_ru2 + self.bd_ru3

    @property
    def bd_grad_ru(self) -> np.ndarray:
        return self.bd_grad_ru1 + self.bd_grad_ru2 + self.bd_grad_ru3


def local_quantities(rec: StepRecord, g: Grid2D) -> LocalBounds:
    """Assemble every node-wise quantity entering the residual bounds."""
    du = rec.u_np1 - rec.u_n
    dw = rec.w_np1 - rec.w_n
    dlap = rec.lap_u_np1 - rec.lap_u_n
    P = gr.cross(rec.u_np1, rec.w_np1) - gr.cross(rec.u_n, rec.w_n)
    Q = gr.cross(rec.lap_u_np1, rec.u_np1) - gr.cross(rec.lap_u_n, rec.u_n)
    return LocalBounds(
        A_u=gr.magnitude(du),
        A_u_x=gr.grad_magnitude(du, g),
        A_u_xx=gr.magnitude(dlap),
        A_w=gr.magnitude(dw),
        A_w_x=gr.grad_magnitude(dw, g),
        B_u=gr.magnitude(P),
        B_u_x=gr.grad_magnitude(P, g),
        B_u_xx=gr.magnitude(gr.laplacian(P, g)),
        B_w=gr.magnitude(Q),
        B_w_x=gr.grad_magnitude(Q, g),
        C_w=np.maximum(gr.magnitude(rec.w_n), gr.magnitude(rec.w_np1)),
        C_u_x=np.maximum(gr.grad_magnitude(rec.u_n, g), gr.grad_magnitude(rec.u_np1, g)),
        C_w_x=np.maximum(gr.grad_magnitude(rec.w_n, g), gr.grad_magnitude(rec.w_np1, g)),
        C_u_xx=np.maximum(gr.magnitude(rec.lap_u_n), gr.magnitude(rec.lap_u_np1)),
    )


def check_smallness(lb: LocalBounds, tau: float) -> bool:
    """True iff A_u^2 + tau * B_u < 1/4 at every node."""
    return bool(np.all(lb.A_u**2 + tau * lb.B_u < 0.25))


def residual_bounds(lb: LocalBounds, tau: float) -> ResidualBoundFields:
    """Evaluate the point-wise bound formulas; requires the smallness condition."""
    if not check_smallness(lb, tau):
        raise SmallnessViolated("A_u^2 + tau*B_u >= 1/4 at some node")

    A_u, A_u_x, A_u_xx = lb.A_u, lb.A_u_x, lb.A_u_xx
    A_w, A_w_x = lb.A_w, lb.A_w_x
    B_u, B_u_x, B_u_xx = lb.B_u, lb.B_u_x, lb.B_u_xx
    B_w, B_w_x = lb.B_w, lb.B_w_x
    C_w, C_u_x, C_w_x, C_u_xx = lb.C_w, lb.C_u_x, lb.C_w_x, lb.C_u_xx

    bd_ru1 = tau * B_w + C_w * A_u**2 + C_w * tau * B_u + 0.25 * A_u * A_w

    bd_grad_ru1 = (
        (C_u_x + tau * B_u_x) * (tau * B_w + C_w * A_u**2)
        + tau * B_w_x
        + C_w * (A_u_x * A_u + tau * B_u_x + C_u_x * tau * B_u + tau**2 * B_u * B_u_x)
        + A_u**2 * C_w_x
        + tau * B_u_x * C_w
        + tau * B_u * C_w_x
        + A_u_x * A_w
        + A_u * A_w_x
    )

    bd_ru2 = 0.25 * A_u * A_w
    bd_grad_ru2 = 0.25 * (A_u_x * A_w + A_u * A_w_x)

    proj_defect = (4.0 / 3.0) * A_u**2 + (8.0 / 3.0) * tau * B_u
    bd_ru3 = (
        (C_w + 0.25 * A_u * A_w) * proj_defect
        + 4.0 * A_u * A_w * (2.0 + tau * B_u)
        + 4.0 * C_w * tau * B_u
    )

    norm_grad = A_u_x * A_u + tau * B_u_x + C_u_x * tau * B_u + tau**2 * B_u_x * B_u
    bd_grad_ru3 = (
        (C_u_x * C_w + C_w_x + 0.25 * A_u_x * A_w + 0.25 * A_u * A_w_x) * proj_defect
        + 1.5 * A_u_x * A_w
        + 2.0 * A_u * C_u_x * A_w
        + 1.5 * A_u * A_w_x
        + (C_u_x * C_w + C_w_x) * tau * B_u
        + C_w * tau * B_u_x
        + 8.0 * (C_w + 0.25 * A_u * A_w) * norm_grad
    )

    bd_rw = (
        (C_u_xx + tau * B_u_xx) * ((7.0 / 3.0) * A_u**2 + (11.0 / 3.0) * tau * B_u)
        + 2.25 * A_u_xx * A_u
        + A_u_x**2
        + 2.0
        * (C_u_x + tau * B_u_x)
        * (A_u_x * A_u + tau * B_u_x + (1.0 + C_u_x) * tau * B_u + tau**2 * B_u_x * B_u)
    )

    # S bounds |utilde . wtilde| on the interval
    S = tau * B_w + C_w * (A_u**2 + tau * B_u) + A_u * A_w
    bd_rg = (C_w + tau * B_w) * S + S**2

    return ResidualBoundFields(
        bd_ru1=bd_ru1,
        bd_grad_ru1=bd_grad_ru1,
        bd_ru2=bd_ru2,
        bd_grad_ru2=bd_grad_ru2,
        bd_ru3=bd_ru3,
        bd_grad_ru3=bd_grad_ru3,
        bd_rw=bd_rw,
        bd_rg=bd_rg,
    )


def alpha_hat(rbf: ResidualBoundFields, lb: LocalBounds, tau: float, g: Grid2D) -> float:
    """Interval-uniform upper bound for the residual rate alpha."""
    W = lb.C_w + tau * lb.B_w
    bd_ru = rbf.bd_ru
    combined = rbf.bd_rg + bd_ru * W + rbf.bd_rw
    return (
        gr.lp_norm(combined, 2.0, g)
        + gr.lp_norm(bd_ru, 2.0, g)
        + gr.lp_norm(rbf.bd_grad_ru, 2.0, g)
    )


def delta_hat(lb: LocalBounds, tau: float, cfg: SolverConfig, g: Grid2D) -> float:
    """Interval-uniform upper bound for the Gronwall rate delta."""
    W = lb.C_w + tau * lb.B_w
    G = 2.0 * (lb.C_u_x + tau * lb.B_u_x)
    A_hat = G * G + W * W
    p = cfg.p_exp
    norm_W = gr.lp_norm(W, 2.0 * p, g)
    norm_G = gr.lp_norm(G, 2.0 * p, g)
    return (
        1.0
        + cfg.c_q * gr.lp_norm(A_hat, p, g)
        + 2.0 * cfg.c_q * norm_W**2
        + 2.0 * cfg.c_q * norm_G * norm_W
        + 4.0 * gr.lp_norm(W, math.inf, g)
    )


@dataclass
class EstimatorState:
    """Running accumulator for the total error bound.

    B_j bounds the energy-norm distance at t_j; log_B carries the same
    recurrence in log space so runs whose growth factor overflows the
    linear representation still produce comparable numbers.
    """

    b0: float = 0.0
    j: int = 0
    B_j: float = 0.0
    log_B: float = -math.inf
    A_total: float = 0.0
    D_total: float = 0.0
    history: list = field(default_factory=list)  # rows (t_j, int_alpha, int_delta, B_j)

    def __post_init__(self):
        if self.j == 0:
            self.B_j = self.b0
            self.log_B = math.log(self.b0) if self.b0 > 0.0 else -math.inf


def accumulate(state: EstimatorState, int_alpha: float, int_delta: float,
               t_j: float | None = None) -> EstimatorState:
    """Advance the bound recurrence by one interval (mutates and returns state)."""
    if int_alpha < 0.0 or int_delta < 0.0:
        raise ValueError("interval integrals must be nonnegative")
    growth = math.exp(0.5 * int_delta) if int_delta < 1416.0 else math.inf
    state.B_j = (state.B_j + int_alpha) * growth
    log_a = math.log(int_alpha) if int_alpha > 0.0 else -math.inf
    state.log_B = float(np.logaddexp(state.log_B, log_a)) + 0.5 * int_delta
    state.A_total += int_alpha
    state.D_total += int_delta
    state.j += 1
    state.history.append((t_j if t_j is not None else float(state.j),
                          int_alpha, int_delta, state.B_j))
    return state
