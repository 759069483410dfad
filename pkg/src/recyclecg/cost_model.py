"""Memory-traffic model of the per-iteration cost.

Every kernel is assumed memory bound, so time is bytes moved divided by
the effective bandwidth ``b_m``. Byte counts assume 8-byte values and
4-byte column indices with full symmetric storage.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_BANDWIDTH = 1e10


@dataclass(frozen=True)
class CostParams:
    n: int
    nnz: int
    m_tilde: int = 0
    b_m: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        if self.n <= 0 or self.nnz < 0 or self.m_tilde < 0 or self.b_m <= 0:
            raise ValueError("cost parameters must be positive")

    @property
    def nnz_av(self) -> float:
        return self.nnz / self.n


def t_cg(p: CostParams) -> float:
    """Unpreconditioned CG: SpMV (20n + 12nnz) plus 56n for dots and updates."""
    return (76 * p.n + 12 * p.nnz) / p.b_m


def t_iccg(p: CostParams) -> float:
    return (100 * p.n + 24 * p.nnz) / p.b_m


def t_sciccg(p: CostParams) -> float:
    """IC-preconditioned CG with subspace correction (also used for deflation)."""
    return (116 * p.n + 16 * p.m_tilde * p.n + 24 * p.nnz) / p.b_m


def gamma_sciccg(m_tilde, nnz_av) -> float:
    """Predicted per-iteration time ratio of the accelerated solver to plain ICCG."""
    if nnz_av <= 0:
        raise ValueError("nnz_av must be positive")
    if m_tilde < 0:
        raise ValueError("m_tilde must be >= 0")
    return (116 + 16 * m_tilde + 24 * nnz_av) / (100 + 24 * nnz_av)


def compare_measured(report_base, report_acc, m_tilde, nnz_av) -> dict:
    """Measured vs predicted per-iteration time ratio of two solve reports."""
    if report_base.iterations <= 0 or report_acc.iterations <= 0:
        raise ValueError("both reports need at least one iteration")
    predicted = gamma_sciccg(m_tilde, nnz_av)
    measured = report_acc.time_per_iteration / report_base.time_per_iteration
    return {
        "gamma_predicted": predicted,
        "gamma_measured": measured,
        "rel_error": abs(measured - predicted) / predicted,
    }
