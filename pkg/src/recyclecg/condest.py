"""Condition-number estimate obtained alongside a PCG solve.

The largest eigenvalue comes from a power iteration whose product shares
the CG SpMV pass (``spmv_dual``); the smallest is the lowest Ritz value
over the error vectors sampled during the same solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import mgs_orthonormalize
from .krylov import SolverConfig, pcg_solve
from .recycling import DEFAULT_SLOTS, RitzSpectrum, SamplerA, harvest_errors, rayleigh_ritz
from .sparse import CsrMatrix, spmv, spmv_dual

DEFAULT_SEED = 42
SETTLE_WINDOW = 5
SETTLE_RTOL = 1e-4


@dataclass
class CondEstimate:
    lambda_max: float
    lambda_min: float
    kappa: float
    power_iterations: int
    ritz_spectrum: RitzSpectrum = field(repr=False)
    power_unsettled: bool = False
    available: bool = True

    def to_dict(self):
        return {
            "lambda_max": float(self.lambda_max),
            "lambda_min": float(self.lambda_min),
            "kappa": float(self.kappa),
            "power_unsettled": bool(self.power_unsettled),
            "available": bool(self.available),
        }


class _PowerIteration:
    """Normalized power iteration riding on the CG products."""

    def __init__(self, A, v0):
        self.A = A
        self.v = v0 / np.linalg.norm(v0)
        self.steps = 0
        self.quotients = []

    def matvec(self, p):
        q, w = spmv_dual(self.A, p, self.v)
        self.quotients.append(self.v @ w)
        self.v = w / np.linalg.norm(w)
        self.steps += 1
        return q

    def settled(self):
        tail = self.quotients[-(SETTLE_WINDOW + 1):]
        if len(tail) < SETTLE_WINDOW + 1:
            return False
        return abs(tail[-1] - tail[0]) <= SETTLE_RTOL * abs(tail[-1])


def pcg_with_condest(A: CsrMatrix, b, M=None, m: int = DEFAULT_SLOTS,
                     cfg: SolverConfig = SolverConfig(), seed: int = DEFAULT_SEED,
                     x0=None, drop_tol: float = 1e-12):
    """PCG solve returning ``(x, SolveReport, CondEstimate)``.

    The CG iterates are exactly those of ``pcg_solve`` with the same
    inputs. The estimate is one-sided: both extremal estimates are
    Rayleigh quotients, so ``kappa`` never exceeds the true condition number
    (up to rounding).
    """
    rng = np.random.default_rng(seed)
    power = _PowerIteration(A, rng.uniform(-1.0, 1.0, A.n))
    sampler = SamplerA(m, n_max=cfg.max_iter)
    x, report = pcg_solve(A, b, M=M, x0=x0, cfg=cfg, sampler=sampler, matvec=power.matvec)

    spectrum = rayleigh_ritz(A, mgs_orthonormalize(harvest_errors(x, sampler), drop_tol))
    lam_max = float(power.v @ spmv(A, power.v))
    available = spectrum.size > 0 and spectrum.values[0] > 0
    lam_min = float(spectrum.values[0]) if spectrum.size else float("nan")
    kappa = lam_max / lam_min if available else float("nan")
    est = CondEstimate(lam_max, lam_min, kappa, power.steps, spectrum,
                       power_unsettled=not power.settled(), available=bool(available))
    return x, report, est
