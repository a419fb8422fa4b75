"""Entropy functionals, all in bits.

Relative entropies that diverge are returned as ``math.inf``; every other
quantity is a finite float.
"""

from __future__ import annotations

import math

import numpy as np

from . import qmath
from .errors import DimMismatch, NotDistribution, NotPure, NotState
from .states import BasisSet, Povm, QState, measure_stats

SUPPORT_LEAK = 1e-10
PROB_FLOOR = 1e-15


def shannon(p) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-8:
        raise NotDistribution(f"not a probability vector (sum={p.sum()!r})")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def _entropy_of_eigs(vals: np.ndarray) -> float:
    vals = np.clip(vals, 0.0, None)
    vals = vals / vals.sum()
    nz = vals[vals > 0]
    return float(-np.sum(nz * np.log2(nz)))


def von_neumann(rho) -> float:
    m = rho.matrix if isinstance(rho, QState) else qmath.as_cmatrix(rho)
    tr = np.trace(m).real
    if abs(tr - 1.0) > 1e-8:
        raise NotState(f"trace {tr!r} differs from 1")
    vals, _ = qmath.psd_eig(m)
    return shannon(np.clip(vals, 0.0, None) / vals.sum())


def _unnormalized_entropy(block: np.ndarray, p: float) -> float:
    """``p * S(block / p)`` for a PSD block of trace ``p``."""
    vals = np.linalg.eigvalsh(0.5 * (block + block.conj().T))
    return p * _entropy_of_eigs(vals)


def relative_entropy(rho, sigma) -> float:
    """``Tr rho log2 rho - Tr rho log2 sigma``; ``inf`` if supp rho is not in supp sigma.

    ``sigma`` may be any PSD operator (its trace is not normalized).
    """
    r = rho.matrix if isinstance(rho, QState) else qmath.as_cmatrix(rho)
    s = sigma.matrix if isinstance(sigma, QState) else qmath.as_cmatrix(sigma)
    if r.shape != s.shape:
        raise DimMismatch(f"shapes differ: {r.shape} vs {s.shape}")
    rv, _ = qmath.psd_eig(r)
    sv, svec = qmath.psd_eig(s)
    supp = qmath.support_mask(sv)
    # diagonal of rho in sigma's eigenbasis
    weights = np.einsum("ij,ik,kj->j", svec.conj(), r, svec).real
    if np.sum(np.clip(weights[~supp], 0.0, None)) > SUPPORT_LEAK:
        return math.inf
    nz = rv[rv > 0]
    first = float(np.sum(nz * np.log2(nz)))
    second = float(np.sum(weights[supp] * np.log2(sv[supp])))
    return first - second


def conditional_ensemble(povm: Povm, state: QState, measured=0, side=1):
    return measure_stats(state, povm, measured, side)


def holevo(povm: Povm, state: QState, measured=0, side=1) -> float:
    """``S(rho_side) - sum_j p_j S(rho_side|j)``, skipping zero-probability outcomes."""
    stats = measure_stats(state, povm, measured, side)
    s_side = von_neumann(state.marginal(side))
    avg = sum(_unnormalized_entropy(b, p) for p, b in zip(stats.probs, stats.blocks)
              if p > PROB_FLOOR)
    return s_side - avg


def _as_povm(m) -> Povm:
    return m.as_povm() if isinstance(m, BasisSet) else m


def cond_entropy_meas(povm, state: QState, measured=0, side=1) -> float:
    """Measured conditional entropy ``H(P|side) = H(P) - chi(P, side)``.

    ``povm`` may be a :class:`Povm` or a :class:`BasisSet`. With ``side=None``
    this is the plain Shannon entropy of the outcome distribution.
    """
    povm = _as_povm(povm)
    if side is None:
        return shannon(_normalized(measure_stats(state, povm, measured).probs))
    stats = measure_stats(state, povm, measured, side)
    h = shannon(_normalized(stats.probs))
    return h - holevo(povm, state, measured, side)


def _normalized(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def measured_entropy(povm, state: QState, measured=0) -> float:
    """``H(P)`` of the outcome distribution on one subsystem."""
    return cond_entropy_meas(povm, state, measured, None)


def cond_entropy_vn(state: QState, a=0, b=1) -> float:
    """``S(a|b) = S(rho_ab) - S(rho_b)``; may be negative."""
    return von_neumann(state.marginal(a, b)) - von_neumann(state.marginal(b))


def pinch(rho: np.ndarray, ops, dims, sys: int = 0) -> np.ndarray:
    """``sum_j (K_j (x) I) rho (K_j (x) I)^dag`` with ``K_j`` acting on factor ``sys``."""
    out = np.zeros_like(rho)
    for k in ops:
        full = _embed(k, dims, sys)
        out = out + full @ rho @ full.conj().T
    return out


def _embed(op: np.ndarray, dims, sys: int) -> np.ndarray:
    mats = [np.eye(d) for d in dims]
    mats[sys] = op
    return qmath.kron(*mats)


def rel_entropy_identity(v: BasisSet, state: QState, tol: float = 1e-8):
    """Both sides of ``H(v|c) = S(rho_ab || sum_j [v_j] rho_ab [v_j])`` for pure ``rho_abc``."""
    if len(state.dims) != 3:
        raise DimMismatch("identity needs a tripartite state")
    if not state.is_pure(tol):
        raise NotPure("identity holds for pure tripartite states only")
    lhs = cond_entropy_meas(v, state, 0, 2)
    rho_ab = state.marginal(0, 1)
    sigma = pinch(rho_ab.matrix, v.projectors(), rho_ab.dims, 0)
    return lhs, relative_entropy(rho_ab.matrix, sigma)


def povm_rel_entropy_bound(povm: Povm, state: QState):
    """``(H(P|b), S(rho_ac || sum_j P_j rho_ac P_j))``; the first dominates for any state."""
    if len(state.dims) != 3:
        raise DimMismatch("bound needs a tripartite state")
    lhs = cond_entropy_meas(povm, state, 0, 1)
    rho_ac = state.marginal(0, 2)
    sigma = pinch(rho_ac.matrix, povm.elements, rho_ac.dims, 0)
    return lhs, relative_entropy(rho_ac.matrix, sigma)
