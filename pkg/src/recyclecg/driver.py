"""Solve a sequence of systems with one matrix, recycling the first solve.

Protocol: read and diagonally scale the matrix, factor the preconditioner,
solve system 1 while sampling iterates, build the auxiliary matrix ``W``
from the sampled error vectors, then solve systems 2..k_t with subspace
correction (``es-sc-iccg``), deflation (``es-d-iccg``) or the plain
solver (``iccg``/``cg`` baselines). Solves happen in scaled variables;
everything reported refers to the original ones.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import List, Optional

import numpy as np

from .condest import pcg_with_condest
from .cost_model import DEFAULT_BANDWIDTH, CostParams, compare_measured, t_iccg, t_sciccg
from .krylov import SolveReport, SolverConfig, deflated_pcg_solve, pcg_solve, true_relres
from .precond import ic0_factorize, make_sc_operator
from .recycling import build_aux_matrix, build_deflation_operator, harvest_errors, make_sampler
from .sparse import CsrMatrix, diagonal_scale, read_matrix_market

log = logging.getLogger(__name__)

METHODS = ("iccg", "es-sc-iccg", "es-d-iccg", "cg", "condest")
ACCELERATED = ("es-sc-iccg", "es-d-iccg")


@dataclass
class RunConfig:
    matrix_path: Optional[str] = None
    method: str = "iccg"
    k_t: int = 6
    m: int = 20
    theta: float = 1e-3
    sampling: str = "A"
    rhs: str = "ones"
    rhs_seed: int = 1
    eps: float = 1e-8
    max_iter: int = 10_000
    blocks: int = 1
    b_m: float = DEFAULT_BANDWIDTH
    record_history: bool = False
    drop_tol: float = 1e-12
    condest_seed: int = 42

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.method in ACCELERATED and self.k_t < 2:
            raise ValueError("accelerated methods need k_t >= 2")
        if self.k_t < 1:
            raise ValueError("k_t must be >= 1")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.rhs not in ("ones", "random"):
            raise ValueError("rhs must be 'ones' or 'random'")
        if self.sampling.upper() not in ("A", "B"):
            raise ValueError("sampling must be A or B")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        SolverConfig(self.eps, self.max_iter)

    @property
    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.eps, self.max_iter, self.record_history)


@dataclass
class SequenceReport:
    config: RunConfig
    n: int
    nnz: int
    solves: List[SolveReport] = field(default_factory=list)
    m_bar: int = 0
    m_tilde: int = 0
    ritz_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    acceleration_active: bool = False
    w_build_time: float = 0.0
    cost_model: Optional[dict] = None
    condest: Optional[dict] = None
    solutions: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def nnz_av(self) -> float:
        return self.nnz / self.n

    @property
    def later(self) -> List[SolveReport]:
        return self.solves[1:]

    def average_iterations(self) -> float:
        return float(np.mean([s.iterations for s in self.later])) if self.later else float("nan")

    def average_time(self) -> float:
        return float(np.mean([s.wall_time for s in self.later])) if self.later else float("nan")

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "n": self.n,
            "nnz": self.nnz,
            "nnz_av": self.nnz_av,
            "m_bar": self.m_bar,
            "m_tilde": self.m_tilde,
            "acceleration_active": self.acceleration_active,
            "ritz_values": [float(v) for v in self.ritz_values],
            "solves": [
                {
                    "k": k,
                    "iterations": s.iterations,
                    "converged": s.converged,
                    "wall_time_s": s.wall_time,
                    "true_relres": s.true_relres,
                }
                for k, s in enumerate(self.solves, start=1)
            ],
            "averages": {"iterations": self.average_iterations(),
                         "wall_time_s": self.average_time()},
            "cost_model": self.cost_model,
            "w_build_time_s": self.w_build_time,
            **({"condest": self.condest} if self.condest is not None else {}),
        }


def make_rhs(kind: str, n: int, seed: int = 1, count: int = 1) -> np.ndarray:
    """``count`` right-hand sides as rows of a ``(count, n)`` array.

    ``random`` draws uniform[-1, 1) entries from one seeded generator, so
    row ``k`` is the same for a given seed whatever ``count`` is.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "ones":
        return np.ones((count, n))
    if kind == "random":
        rng = np.random.default_rng(seed)
        return np.stack([rng.uniform(-1.0, 1.0, n) for _ in range(count)]) if count else np.zeros((0, n))
    raise ValueError(f"unknown rhs kind {kind!r}")


def _finish(report, A_orig, b_orig, x_hat, d_inv_sqrt):
    x = d_inv_sqrt * x_hat
    report.true_relres = true_relres(A_orig, b_orig, x)
    return x


def run_sequence(cfg: RunConfig, A: Optional[CsrMatrix] = None) -> SequenceReport:
    """Run the solve sequence described by ``cfg``; ``A`` overrides ``cfg.matrix_path``."""
    if A is None:
        if cfg.matrix_path is None:
            raise ValueError("no matrix given")
        A = read_matrix_market(cfg.matrix_path)
    A_hat, d = diagonal_scale(A)
    scfg = cfg.solver_config
    rep = SequenceReport(cfg, A.n, A.nnz)

    k_t = 1 if cfg.method == "condest" else cfg.k_t
    B = make_rhs(cfg.rhs, A.n, cfg.rhs_seed, k_t)

    if cfg.method == "condest":
        x_hat, report, est = pcg_with_condest(A_hat, d * B[0], m=cfg.m, cfg=scfg,
                                              seed=cfg.condest_seed, drop_tol=cfg.drop_tol)
        rep.solutions.append(_finish(report, A, B[0], x_hat, d))
        rep.solves.append(report)
        rep.condest = {**est.to_dict(), "iterations": report.iterations}
        rep.m_bar = est.ritz_spectrum.size
        rep.ritz_values = est.ritz_spectrum.values
        return rep

    M = None if cfg.method == "cg" else ic0_factorize(A_hat, blocks=cfg.blocks)
    if M is not None and M.shift:
        log.warning("IC(0) needed a diagonal shift of %g", M.shift)

    sampler = make_sampler(cfg.sampling, cfg.m, eps=cfg.eps, n_max=cfg.max_iter)
    b_hat = d * B[0]
    x_hat, first = pcg_solve(A_hat, b_hat, M=M, cfg=scfg, sampler=sampler)
    rep.solutions.append(_finish(first, A, B[0], x_hat, d))
    rep.solves.append(first)

    t0 = time.perf_counter()
    W, spectrum = build_aux_matrix(A_hat, harvest_errors(x_hat, sampler), cfg.theta, cfg.drop_tol)
    rep.m_bar = spectrum.size
    rep.m_tilde = W.shape[1]
    rep.ritz_values = spectrum.values
    rep.acceleration_active = cfg.method in ACCELERATED and rep.m_tilde > 0
    solve = partial(pcg_solve, A_hat, M=M, cfg=scfg)
    if rep.acceleration_active and cfg.method == "es-sc-iccg":
        solve = partial(pcg_solve, A_hat, M=make_sc_operator(A_hat, W, inner=M), cfg=scfg)
    elif rep.acceleration_active:
        D = build_deflation_operator(A_hat, W)
        solve = partial(deflated_pcg_solve, A_hat, M=M, D=D, cfg=scfg)
    elif cfg.method in ACCELERATED:
        log.info("m_tilde = 0, acceleration inactive")
    rep.w_build_time = time.perf_counter() - t0

    for k in range(1, k_t):
        x_hat, report = solve(d * B[k])
        rep.solutions.append(_finish(report, A, B[k], x_hat, d))
        rep.solves.append(report)

    iters = sum(s.iterations for s in rep.later)
    if first.iterations > 0 and iters > 0:
        pooled = SolveReport(iters, True, sum(s.wall_time for s in rep.later))
        m_eff = rep.m_tilde if rep.acceleration_active else 0
        rep.cost_model = compare_measured(first, pooled, m_eff, rep.nnz_av)
        params = CostParams(A.n, A.nnz, m_eff, cfg.b_m)
        rep.cost_model["t_iccg_model_s"] = t_iccg(params)
        rep.cost_model["t_sciccg_model_s"] = t_sciccg(params)
    return rep


def emit_reports(rep: SequenceReport, out_dir) -> List[str]:
    """Write ``summary.json`` and, with history on, ``solve_<k>.csv`` (lines ``iter,relres``)."""
    out_dir = os.fspath(out_dir)
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "summary.json")
        with open(path, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2, default=_json_default)
        written.append(path)
        for k, s in enumerate(rep.solves, start=1):
            if s.history is None:
                continue
            path = os.path.join(out_dir, f"solve_{k}.csv")
            with open(path, "w") as fh:
                for it, rr in enumerate(s.history, start=1):
                    fh.write(f"{it},{rr:.17g}\n")
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write report to {out_dir}: {exc}") from exc
    return written


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
