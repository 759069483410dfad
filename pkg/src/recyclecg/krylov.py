"""Preconditioned CG with sampling hooks, and deflated PCG."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SolverBreakdown
from .precond import identity
from .sparse import CsrMatrix, spmv


@dataclass(frozen=True)
class SolverConfig:
    eps: float = 1e-8
    max_iter: int = 10_000
    record_history: bool = True

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    wall_time: float
    history: Optional[np.ndarray] = None
    true_relres: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def time_per_iteration(self) -> float:
        if self.iterations == 0:
            raise ZeroDivisionError("solve took zero iterations")
        return self.wall_time / self.iterations


def _prepare(A, b, x0):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({A.n},)")
    x = np.zeros(A.n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (A.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({A.n},)")
    return b, x


def true_relres(A: CsrMatrix, b, x) -> float:
    bnorm = np.linalg.norm(b)
    r = np.linalg.norm(b - spmv(A, x))
    return r / bnorm if bnorm > 0 else r


def pcg_solve(A: CsrMatrix, b, M=None, x0=None, cfg: SolverConfig = SolverConfig(),
              sampler=None, callback: Optional[Callable] = None, matvec=None):
    """Solve ``A x = b`` with preconditioned CG.

    ``M`` is a callable applying the preconditioner inverse (``None`` for
    the identity). After each non-final iterate the ``sampler`` (if any)
    is offered ``(i, x_i, relres_i, r_i)``; ``callback(i, x_i)`` sees every
    iterate including the last. ``matvec`` overrides the product ``A p``
    and must return the same values as ``spmv``.

    Returns ``(x, SolveReport)``. Stops when ``||r_i|| <= eps ||b||`` or
    at ``cfg.max_iter``; the history holds recurrence residuals.
    """
    b, x = _prepare(A, b, x0)
    M = identity if M is None else M
    matvec = (lambda v: spmv(A, v)) if matvec is None else matvec
    bnorm = np.linalg.norm(b)
    target = cfg.eps * bnorm
    history = []

    t0 = time.perf_counter()
    r = b - spmv(A, x)
    converged = np.linalg.norm(r) <= target
    i = 0
    p = rho_prev = None
    while not converged and i < cfg.max_iter:
        i += 1
        z = M(r)
        rho = r @ z
        if i == 1:
            p = z
        else:
            p = z + (rho / rho_prev) * p
        q = matvec(p)
        pq = p @ q
        if not pq > 0.0:
            raise SolverBreakdown(f"matrix not SPD: (p, Ap) = {pq:.3e} at iteration {i}")
        alpha = rho / pq
        x = x + alpha * p
        r = r - alpha * q
        rnorm = np.linalg.norm(r)
        relres = rnorm / bnorm if bnorm > 0 else rnorm
        if cfg.record_history:
            history.append(relres)
        if callback is not None:
            callback(i, x)
        converged = rnorm <= target
        if not converged and sampler is not None:
            sampler.offer(i, x, relres, r)
        rho_prev = rho
    wall = time.perf_counter() - t0

    report = SolveReport(i, bool(converged), wall,
                         np.array(history) if cfg.record_history else None)
    report.true_relres = true_relres(A, b, x)
    return x, report


def deflated_pcg_solve(A: CsrMatrix, b, M=None, D=None, x0=None,
                       cfg: SolverConfig = SolverConfig(), callback: Optional[Callable] = None):
    """Deflated PCG on ``P^T A z = P^T b`` followed by the coarse recombination.

    ``D`` is a deflation operator exposing ``pt``, ``p`` and ``coarse``
    (see ``recycling.DeflationOperator``); the projector is only ever
    applied, never formed. The returned ``x`` is ``P x_i + W (W^T A W)^{-1} W^T b``.
    """
    if D is None:
        raise ValueError("deflated_pcg_solve needs a deflation operator")
    b, x = _prepare(A, b, x0)
    M = identity if M is None else M
    bnorm = np.linalg.norm(b)
    target = cfg.eps * bnorm
    history = []

    t0 = time.perf_counter()
    r = D.pt(b - spmv(A, x))
    converged = np.linalg.norm(r) <= target
    i = 0
    p = rho_prev = None
    while not converged and i < cfg.max_iter:
        i += 1
        z = M(r)
        rho = r @ z
        if i == 1:
            p = z
        else:
            # positive ratio; a leading minus here would break conjugacy
            p = z + (rho / rho_prev) * p
        q = D.pt(spmv(A, p))
        pq = p @ q
        if not pq > 0.0:
            raise SolverBreakdown(f"matrix not SPD: (p, P^T A p) = {pq:.3e} at iteration {i}")
        alpha = rho / pq
        x = x + alpha * p
        r = r - alpha * q
        rnorm = np.linalg.norm(r)
        if cfg.record_history:
            history.append(rnorm / bnorm if bnorm > 0 else rnorm)
        if callback is not None:
            callback(i, x)
        converged = rnorm <= target
        rho_prev = rho
    x = D.p(x) + D.coarse(b)
    wall = time.perf_counter() - t0

    report = SolveReport(i, bool(converged), wall,
                         np.array(history) if cfg.record_history else None)
    report.true_relres = true_relres(A, b, x)
    return x, report
