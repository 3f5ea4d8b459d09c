"""
Fixed-point iteration engine.

    ishikawa   y = (1 - beta_n) u + beta_n T(u);  u+ = (1 - alpha_n) u + alpha_n T(y)
    mann       u+ = (1 - alpha) u + alpha T(u)
    picard     u+ = T(u)

Iteration stops after ``max_iters`` steps or as soon as ||T(u) - u|| / ||u|| <= tol.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import pandas as pd

from app.config import FP_TOL, TRACE_COLUMNS
from app.core.metrics import psnr
from app.errors import DivergenceError, DomainError
from app.solvers.schedule import Schedule

logger = logging.getLogger(__name__)

_TINY = 1e-300


@dataclass
class IterRecord:
    n: int
    fp_residual: float
    step_residual: float
    psnr: float
    alpha: float
    beta: float
    rel_residual: float = 0.0


@dataclass
class IterTrace:
    records: list = field(default_factory=list)
    final: Optional[np.ndarray] = None
    initial_residual: float = 0.0
    final_residual: float = 0.0
    final_rel_residual: float = 0.0
    stopped: str = "max_iters"
    report: Optional[object] = None

    def __len__(self):
        return len(self.records)

    @property
    def fp_residuals(self):
        return [r.fp_residual for r in self.records]

    def to_frame(self):
        rows = [{c: getattr(r, c) for c in TRACE_COLUMNS} for r in self.records]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def box_project(u):
    return np.clip(u, 0.0, 1.0)


def _finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def fixed_point_iterate(
    T: Callable,
    u0,
    step: Callable,
    max_iters,
    tol=FP_TOL,
    ground_truth=None,
    operator_for: Optional[Callable] = None,
    project_box=False,
    log_every=50,
    label="fixed-point",
):
    """Shared loop. ``step(n, Tn, u, Tu)`` returns (u_next, alpha_n, beta_n)."""
    u = np.array(u0, dtype=np.float64)
    trace = IterTrace()

    def current(n):
        return operator_for(n) if operator_for is not None else T

    def fail(msg):
        trace.final = u
        trace.stopped = "diverged"
        return DivergenceError(f"{label}: {msg} at iteration {len(trace.records)}", trace=trace)

    def residual(Tn):
        try:
            tu = Tn(u)
        except DomainError as exc:
            raise fail(str(exc)) from exc
        if not _finite(tu):
            raise fail("non-finite operator output")
        fp = float(np.linalg.norm(tu - u))
        return tu, fp, fp / max(float(np.linalg.norm(u)), _TINY)

    for n in range(max_iters):
        Tn = current(n)
        tu, fp, rel = residual(Tn)
        if n == 0:
            trace.initial_residual = fp
        if rel <= tol:
            trace.stopped = "tol"
            trace.final_residual, trace.final_rel_residual = fp, rel
            break
        try:
            u_next, alpha, beta = step(n, Tn, u, tu)
        except DomainError as exc:
            raise fail(str(exc)) from exc
        if project_box:
            u_next = box_project(u_next)
        if not _finite(u_next):
            raise fail("non-finite iterate")
        step_res = float(np.linalg.norm(u_next - u))
        quality = psnr(u_next, ground_truth) if ground_truth is not None else float("nan")
        trace.records.append(IterRecord(n, fp, step_res, quality, alpha, beta, rel))
        if log_every and n % log_every == 0:
            logger.debug("%s n=%d fp=%.3e step=%.3e psnr=%.2f", label, n, fp, step_res, quality)
        u = u_next
    else:
        _, fp, rel = residual(current(max_iters))
        if max_iters == 0:
            trace.initial_residual = fp
        trace.final_residual, trace.final_rel_residual = fp, rel

    trace.final = u
    logger.info("%s stopped (%s) after %d iterations, residual %.3e",
                label, trace.stopped, len(trace.records), trace.final_residual)
    return trace


def ishikawa_iterate(T, u0, schedule: Schedule, max_iters, tol=FP_TOL, **kwargs):
    def step(n, Tn, u, tu):
        alpha, beta = schedule.alpha(n), schedule.beta(n)
        y = (1.0 - beta) * u + beta * tu
        ty = Tn(y)
        return (1.0 - alpha) * u + alpha * ty, alpha, beta

    kwargs.setdefault("label", "ishikawa")
    return fixed_point_iterate(T, u0, step, max_iters, tol, **kwargs)


def mann_iterate(T, u0, relaxation, max_iters, tol=FP_TOL, **kwargs):
    def step(n, Tn, u, tu):
        return (1.0 - relaxation) * u + relaxation * tu, relaxation, 0.0

    kwargs.setdefault("label", "mann")
    return fixed_point_iterate(T, u0, step, max_iters, tol, **kwargs)


def picard_iterate(T, u0, max_iters, tol=FP_TOL, **kwargs):
    kwargs.setdefault("label", "picard")
    return mann_iterate(T, u0, 1.0, max_iters, tol, **kwargs)
