"""Model-based restoration by nonlinear conjugate gradient.

Two variants minimize the least-squares data fit
F = sum_l ||g_l_meas - A_l(o)||^2:

* "mb":   unconstrained in o; F is quadratic along any line, so the step
  is the closed-form parabola vertex.
* "mbpc": o = zeta^2 with the iteration running on zeta, which keeps the
  restored object nonnegative by construction.  The predictions along a
  line are quadratic in the step (A is linear and (zeta+alpha*d)^2
  expands into three stack evaluations), so F(alpha) is an exact quartic
  whose derivative cubic is solved analytically and the global minimum
  picked among the real roots and alpha=0.

Directions use the Polak-Ribiere coefficient clamped at zero, with a
periodic reset to steepest descent; a direction is never accepted unless
it points downhill.  With those line searches the cost trace is
nonincreasing on every problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .forward import AcquisitionData, ThreeWaveOperator
from .optics import OpticsParams, generate_psf
from .scheme import AcquisitionScheme, initial_guess
from .volume import Volume

ZETA_FLOOR_FRACTION = 1e-6  # of max(guess); keeps zero voxels trainable


@dataclass(frozen=True)
class SolverConfig:
    method: str = "mbpc"            # "mb" | "mbpc"
    max_iters: int = 150
    cost_rel_tol: float = 1e-9
    restart_every: int = 50
    record_trace: bool = True

    def __post_init__(self):
        if self.method not in ("mb", "mbpc"):
            raise SolverError(f"unknown method '{self.method}'")
        if self.max_iters < 1:
            raise SolverError("max_iters must be >= 1")
        if self.cost_rel_tol < 0:
            raise SolverError("cost_rel_tol must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    cost: float
    alpha: float
    gamma: float
    grad_norm: float
    stop_reason: str = ""


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a.ravel(), b.ravel()))


def _residuals(measured: list[np.ndarray], predictions: list[np.ndarray]
               ) -> list[np.ndarray]:
    return [m - p for m, p in zip(measured, predictions)]


def _cost_of(residuals: list[np.ndarray]) -> float:
    return sum(_dot(r, r) for r in residuals)


def cost(iterate: Volume, data: AcquisitionData, model, method: str = "mb") -> float:
    """F at an iterate (o for mb, zeta for mbpc)."""
    o = iterate.values if method == "mb" else iterate.values ** 2
    preds = model.forward_stack(o)
    return _cost_of(_residuals([im.values for im in data.images], preds))


def grad_mb(o: Volume, data: AcquisitionData, model) -> Volume:
    """-2 * sum_l A_l^T (g_l_meas - A_l o)."""
    preds = model.forward_stack(o.values)
    res = _residuals([im.values for im in data.images], preds)
    return Volume(o.grid, -2.0 * model.adjoint_sum(res))


def grad_mbpc(zeta: Volume, data: AcquisitionData, model) -> Volume:
    """-4 * zeta * sum_l A_l^T (g_l_meas - A_l zeta^2); exactly zero
    wherever zeta is zero."""
    preds = model.forward_stack(zeta.values ** 2)
    res = _residuals([im.values for im in data.images], preds)
    return Volume(zeta.grid, -4.0 * zeta.values * model.adjoint_sum(res))


def cg_direction(grad_n: Volume, grad_prev: Volume | None,
                 dir_prev: Volume | None, iteration: int,
                 restart_every: int = 50) -> tuple[Volume, float]:
    """Descent direction -grad + gamma*dir_prev with Polak-Ribiere gamma
    clamped at zero; resets to steepest descent on iteration 1, every
    `restart_every` iterations, and whenever momentum would point
    uphill."""
    if iteration == 1 or (restart_every and (iteration - 1) % restart_every == 0):
        return Volume(grad_n.grid, -grad_n.values), 0.0
    if grad_prev is None or dir_prev is None:
        raise SolverError("missing CG history for iteration > 1")
    prev_sq = _dot(grad_prev.values, grad_prev.values)
    if prev_sq == 0.0:
        raise SolverError("zero previous gradient; convergence should be "
                          "handled upstream")
    gamma = _dot(grad_n.values, grad_n.values - grad_prev.values) / prev_sq
    gamma = max(gamma, 0.0)
    d = -grad_n.values + gamma * dir_prev.values
    if _dot(d, grad_n.values) >= 0.0:
        return Volume(grad_n.grid, -grad_n.values), 0.0
    return Volume(grad_n.grid, d), gamma


def solve_cubic_real(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of c3*x^3 + c2*x^2 + c1*x + c0 by Cardano (one real
    root) or the trigonometric form (three real roots)."""
    if c3 == 0.0:
        if c2 == 0.0:
            if c1 == 0.0:
                return []
            return [-c0 / c1]
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return []
        sq = math.sqrt(disc)
        return [(-c1 - sq) / (2.0 * c2), (-c1 + sq) / (2.0 * c2)]
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        sq = math.sqrt(disc)
        t = np.cbrt(-q / 2.0 + sq) + np.cbrt(-q / 2.0 - sq)
        return [float(t) - shift]
    if disc == 0.0:
        if p == 0.0:
            return [-shift]
        t1 = 3.0 * q / p
        t2 = -3.0 * q / (2.0 * p)
        return [t1 - shift, t2 - shift]
    # three distinct real roots
    r = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * r)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg)
    return [r * math.cos((theta - 2.0 * math.pi * k) / 3.0) - shift
            for k in range(3)]


def quartic_coefficients(residuals: list[np.ndarray], g1: list[np.ndarray],
                         g2: list[np.ndarray]) -> tuple[float, float, float, float, float]:
    """(c0..c4) of F(alpha) = sum_l ||r_l - alpha*g1_l - alpha^2*g2_l||^2."""
    c0 = c1 = c2 = c3 = c4 = 0.0
    for r, a, b in zip(residuals, g1, g2):
        c0 += _dot(r, r)
        c1 += -2.0 * _dot(r, a)
        c2 += _dot(a, a) - 2.0 * _dot(r, b)
        c3 += 2.0 * _dot(a, b)
        c4 += _dot(b, b)
    return c0, c1, c2, c3, c4


def minimize_quartic(coeffs: tuple[float, float, float, float, float]) -> float:
    """Global minimizer of the quartic over {0} union real critical
    points (alpha=0 is always a candidate, so the value never exceeds
    F(0))."""
    c0, c1, c2, c3, c4 = coeffs

    def value(a: float) -> float:
        return c0 + a * (c1 + a * (c2 + a * (c3 + a * c4)))

    candidates = [0.0] + solve_cubic_real(4.0 * c4, 3.0 * c3, 2.0 * c2, c1)
    best = min(candidates, key=lambda a: (value(a), abs(a)))
    return float(best)


def line_search_mb(o: Volume, d: Volume, data: AcquisitionData, model) -> float:
    """Vertex of the exact parabola F(o + alpha*d)."""
    preds = model.forward_stack(o.values)
    res = _residuals([im.values for im in data.images], preds)
    ad = model.forward_stack(d.values)
    num = sum(_dot(r, a) for r, a in zip(res, ad))
    den = sum(_dot(a, a) for a in ad)
    if den == 0.0:
        return 0.0
    return num / den


def line_search_mbpc(zeta: Volume, d: Volume, data: AcquisitionData, model) -> float:
    """Global minimizer of the exact quartic F((zeta + alpha*d)^2)."""
    preds = model.forward_stack(zeta.values ** 2)
    res = _residuals([im.values for im in data.images], preds)
    g1 = model.forward_stack(2.0 * zeta.values * d.values)
    g2 = model.forward_stack(d.values ** 2)
    return minimize_quartic(quartic_coefficients(res, g1, g2))


def minimize_cg(model, measured: list[np.ndarray], x0: np.ndarray,
                config: SolverConfig, callback=None
                ) -> tuple[np.ndarray, list[TraceRecord]]:
    """Shared CG loop; `x0` is o for mb, zeta for mbpc.

    Model predictions are updated incrementally from the line-search
    stack evaluations, so each iteration costs one adjoint sweep plus
    one (mb) or two (mbpc) forward sweeps.  `callback(n, x)` runs after
    every accepted step.
    """
    mbpc = config.method == "mbpc"
    x = x0.copy()
    preds = model.forward_stack(x ** 2 if mbpc else x)
    res = _residuals(measured, preds)
    f = _cost_of(res)
    trace = [TraceRecord(0, f, 0.0, 0.0, float("nan"))]
    grad_prev: np.ndarray | None = None
    d_prev: np.ndarray | None = None
    stop = "max_iters"

    for n in range(1, config.max_iters + 1):
        adj = model.adjoint_sum(res)
        grad = (-4.0 * x * adj) if mbpc else (-2.0 * adj)
        gnorm = math.sqrt(_dot(grad, grad))
        if gnorm == 0.0:
            if n == 1 and f > 0.0:
                raise SolverError("initial guess orthogonal to data")
            stop = "zero_gradient"
            break

        if n == 1 or (config.restart_every
                      and (n - 1) % config.restart_every == 0):
            d, gamma = -grad, 0.0
        else:
            prev_sq = _dot(grad_prev, grad_prev)
            gamma = max(_dot(grad, grad - grad_prev) / prev_sq, 0.0)
            d = -grad + gamma * d_prev
            if _dot(d, grad) >= 0.0:
                d, gamma = -grad, 0.0

        if mbpc:
            g1 = model.forward_stack(2.0 * x * d)
            g2 = model.forward_stack(d * d)
            alpha = minimize_quartic(quartic_coefficients(res, g1, g2))
        else:
            ad = model.forward_stack(d)
            num = sum(_dot(r, a) for r, a in zip(res, ad))
            den = sum(_dot(a, a) for a in ad)
            alpha = num / den if den > 0.0 else 0.0

        if alpha == 0.0:
            if n == 1:
                raise SolverError("initial guess orthogonal to data")
            stop = "stagnation"
            break

        x = x + alpha * d
        if mbpc:
            preds = [p + alpha * a + alpha * alpha * b
                     for p, a, b in zip(preds, g1, g2)]
        else:
            preds = [p + alpha * a for p, a in zip(preds, ad)]
        res = _residuals(measured, preds)
        f_new = _cost_of(res)
        if f_new > f:
            # exact line searches cannot increase the cost beyond rounding;
            # treat it as numerical stagnation and keep the previous iterate
            x = x - alpha * d
            stop = "stagnation"
            break
        trace.append(TraceRecord(n, f_new, float(alpha), float(gamma), gnorm))
        if callback is not None:
            callback(n, x)

        if f > 0.0 and (f - f_new) / f < config.cost_rel_tol:
            f = f_new
            stop = "cost_tolerance"
            break
        f = f_new
        grad_prev, d_prev = grad, d

    if trace:
        last = trace[-1]
        trace[-1] = TraceRecord(last.iteration, last.cost, last.alpha,
                                last.gamma, last.grad_norm, stop)
    return x, trace


def run_solver(data: AcquisitionData, scheme: AcquisitionScheme,
               optics: OpticsParams, config: SolverConfig
               ) -> tuple[Volume, list[TraceRecord]]:
    """End-to-end restoration: widefield-style initial guess, CG on o or
    zeta, returns the restored object (zeta^2 for mbpc, so it carries no
    negative voxel) plus the cost trace."""
    if optics.grid != data.fine_grid:
        raise SolverError("optics grid does not match the acquisition fine grid")
    h = generate_psf(optics)
    model = ThreeWaveOperator(h, data.specs, data.binning)
    guess = initial_guess(data, scheme, model)
    if not np.any(guess.values):
        raise SolverError("initial guess orthogonal to data")

    if config.method == "mbpc":
        base = np.maximum(guess.values, 0.0)
        x0 = np.sqrt(base + ZETA_FLOOR_FRACTION * base.max())
    else:
        x0 = guess.values

    measured = [im.values for im in data.images]
    x, trace = minimize_cg(model, measured, x0, config)
    restored = x ** 2 if config.method == "mbpc" else x
    return Volume(data.fine_grid, restored), trace
