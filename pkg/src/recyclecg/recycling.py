"""Error-vector sampling and auxiliary-subspace construction.

During the first solve of a sequence a sampler keeps ``m`` approximate
solutions. Once the solve finishes, the differences to the final
solution (error vectors) are orthonormalized and a Rayleigh-Ritz
projection picks out approximate eigenvectors with small eigenvalues.
Those with Ritz value below ``theta`` form the auxiliary matrix ``W``
used for subspace correction or deflation in later solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dense import (SmallChol, as_tall, chol_factor, chol_solve, empty_tall,
                    mgs_orthonormalize, sym_eig, tall_apply, tall_t_apply)
from .sparse import CsrMatrix

DEFAULT_SLOTS = 20


class _Slots:
    """Fixed set of ``m`` vector slots, filled by the sampling schedule."""

    def __init__(self, m, record):
        if m < 1:
            raise ValueError("slot count m must be >= 1")
        if record not in ("solution", "residual"):
            raise ValueError("record must be 'solution' or 'residual'")
        self.m = m
        self.record = record
        self.slots = [None] * m
        self.iteration_of = [None] * m

    def _store(self, slot, i, x, r):
        v = r if self.record == "residual" else x
        if v is None:
            raise ValueError("residual sampling needs the residual vector")
        self.slots[slot] = np.array(v, dtype=np.float64)
        self.iteration_of[slot] = i

    @property
    def occupied(self):
        return [s for s in range(self.m) if self.slots[s] is not None]

    def stored_iterations(self):
        return {self.iteration_of[s] for s in self.occupied}


class SamplerA(_Slots):
    """Stride-doubling slot schedule.

    Every ``h``-th iterate goes to slot ``(i_t mod m) + 1`` where ``i_t``
    is the alternating sum of ``floor((i-1) / m**l)`` for ``l = 0..l_max``;
    ``h`` doubles each time ``i`` reaches ``h*m``. The stored iterates stay
    spread over the whole run without knowing its length in advance.
    """

    method = "A"

    def __init__(self, m=DEFAULT_SLOTS, n_max=10_000, record="solution"):
        if m < 2:
            raise ValueError("sampling method A needs m >= 2")
        super().__init__(m, record)
        self.h = 1
        self.l_max = 1
        while m ** self.l_max <= n_max:
            self.l_max += 1

    def slot_for(self, i):
        it = sum((-1) ** l * ((i - 1) // self.m ** l) for l in range(self.l_max + 1))
        return it % self.m

    def offer(self, i, x, relres=None, r=None):
        if i % self.h:
            return
        self._store(self.slot_for(i), i, x, r)
        if i == self.h * self.m:
            self.h *= 2


class SamplerB(_Slots):
    """Keep the iterate at which the relative residual first drops below
    ``10**(-s * alpha / (m + 1))`` for ``s = 1..m``.

    An iterate crossing several thresholds at once fills each of them.
    """

    method = "B"

    def __init__(self, m=DEFAULT_SLOTS, alpha=8.0, record="solution"):
        super().__init__(m, record)
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha
        self.s = 1

    def threshold(self, s):
        return 10.0 ** (-s * self.alpha / (self.m + 1))

    def offer(self, i, x, relres, r=None):
        while self.s <= self.m and relres <= self.threshold(self.s):
            self._store(self.s - 1, i, x, r)
            self.s += 1


def make_sampler(method, m=DEFAULT_SLOTS, eps=1e-8, n_max=10_000, record="solution"):
    method = method.upper()
    if method == "A":
        return SamplerA(m, n_max=n_max, record=record)
    if method == "B":
        return SamplerB(m, alpha=-math.log10(eps), record=record)
    raise ValueError(f"unknown sampling method {method!r}")


def harvest_errors(x_final, state) -> np.ndarray:
    """Columns ``x_final - x_s`` over occupied slots, in slot order; zero columns skipped."""
    x_final = np.asarray(x_final, dtype=np.float64)
    cols = []
    for s in state.occupied:
        e = x_final - state.slots[s]
        if np.any(e):
            cols.append(e)
    if not cols:
        return empty_tall(x_final.shape[0])
    return np.asfortranarray(np.column_stack(cols))


def harvest_residuals(state, n) -> np.ndarray:
    """Stored residual vectors of a ``record='residual'`` sampler, in slot order."""
    cols = [state.slots[s] for s in state.occupied if np.any(state.slots[s])]
    if not cols:
        return empty_tall(n)
    return np.asfortranarray(np.column_stack(cols))


@dataclass(frozen=True)
class RitzSpectrum:
    values: np.ndarray
    vectors: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]


def rayleigh_ritz(A: CsrMatrix, E) -> RitzSpectrum:
    """Ritz pairs of ``A`` on the span of the orthonormal columns of ``E``."""
    E = as_tall(E, A.n)
    if E.shape[1] == 0:
        return RitzSpectrum(np.zeros(0), empty_tall(A.n))
    S = E.T @ (A @ E)
    values, T = sym_eig(0.5 * (S + S.T))
    return RitzSpectrum(values, np.asfortranarray(E @ T))


def build_aux_matrix(A: CsrMatrix, errors, theta: float, drop_tol: float = 1e-12):
    """Orthonormalize ``errors``, project, and keep Ritz vectors with value < ``theta``.

    Returns ``(W, spectrum)``; ``W`` may have zero columns.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    E = mgs_orthonormalize(as_tall(errors, A.n), drop_tol)
    spectrum = rayleigh_ritz(A, E)
    keep = spectrum.values < theta
    return np.asfortranarray(spectrum.vectors[:, keep]), spectrum


@dataclass(frozen=True, eq=False)
class DeflationOperator:
    """Applies P = I - W (W^T A W)^{-1} (AW)^T and its transpose without forming them."""

    W: np.ndarray
    AW: np.ndarray
    waw_chol: SmallChol = field(repr=False)

    @property
    def k(self) -> int:
        return self.W.shape[1]

    def pt(self, y):
        """P^T y = y - AW (W^T A W)^{-1} W^T y."""
        y = np.asarray(y, dtype=np.float64)
        if self.k == 0:
            return y.copy()
        return y - tall_apply(self.AW, chol_solve(self.waw_chol, tall_t_apply(self.W, y)))

    def p(self, x):
        """P x = x - W (W^T A W)^{-1} (AW)^T x."""
        x = np.asarray(x, dtype=np.float64)
        if self.k == 0:
            return x.copy()
        return x - tall_apply(self.W, chol_solve(self.waw_chol, tall_t_apply(self.AW, x)))

    def coarse(self, b):
        """W (W^T A W)^{-1} W^T b, the component of the solution in range(W)."""
        if self.k == 0:
            return np.zeros(self.W.shape[0])
        return tall_apply(self.W, chol_solve(self.waw_chol, tall_t_apply(self.W, b)))


def build_deflation_operator(A: CsrMatrix, W) -> DeflationOperator:
    W = as_tall(W, A.n)
    AW = np.asfortranarray(A @ W)
    return DeflationOperator(W, AW, chol_factor(W.T @ AW))
