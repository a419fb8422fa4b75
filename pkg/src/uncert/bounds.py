"""Overlap constants and evaluation of the uncertainty relations.

Each relation is evaluated through :func:`eval_relation`, which returns an
:class:`UncertaintyReport` holding the individual entropy terms, the bound
and the gap ``sum(lhs_terms) - rhs``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import entropy, qmath
from .errors import (ArityMismatch, DimMismatch, NotCoprime, NotMub, NotProjector,
                     NotPure, SupportNotContained)
from .states import (BasisSet, Povm, QState, fourier_pair, measure_stats, pairwise_coprime,
                     qubit_mub_triple, tensor_basis)

TOL_EQ = 1e-8
TOL_VIOLATION = 1e-9


class Relation(str, enum.Enum):
    EQ3 = "EQ3"
    EQ10 = "EQ10"
    EQ12 = "EQ12"
    EQ13 = "EQ13"
    EQ14 = "EQ14"
    EQ15 = "EQ15"
    EQ16 = "EQ16"
    EQ20 = "EQ20"
    EQ21 = "EQ21"
    EQ22 = "EQ22"
    EQ23 = "EQ23"
    EQ24 = "EQ24"
    EQ26 = "EQ26"


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    EQUALITY = "equality"


@dataclass(frozen=True)
class OverlapBound:
    value: float
    arg_max: tuple[int, int]

    @property
    def neg_log(self) -> float:
        return -math.log2(self.value)


@dataclass(frozen=True)
class UncertaintyReport:
    relation_id: Relation
    lhs_terms: Mapping[str, float]
    rhs: float
    tol_eq: float = TOL_EQ
    gap: float = field(init=False)
    holds: Verdict = field(init=False)

    def __post_init__(self):
        gap = float(sum(self.lhs_terms.values()) - self.rhs)
        if abs(gap) <= self.tol_eq:
            verdict = Verdict.EQUALITY
        elif gap < 0:
            verdict = Verdict.VIOLATED
        else:
            verdict = Verdict.HOLDS
        object.__setattr__(self, "gap", gap)
        object.__setattr__(self, "holds", verdict)

    @property
    def lhs(self) -> float:
        return float(sum(self.lhs_terms.values()))

    def to_dict(self) -> dict:
        return {
            "relation": self.relation_id.value,
            "lhs_terms": {k: float(v) for k, v in self.lhs_terms.items()},
            "rhs": float(self.rhs),
            "gap": self.gap,
            "holds": self.holds.value,
        }


def _argmax(table: np.ndarray) -> OverlapBound:
    # first maximal entry in row-major order; ties within 1e-15 go to the smaller index
    top = float(table.max())
    j, k = np.argwhere(table >= top - 1e-15)[0]
    return OverlapBound(min(top, 1.0), (int(j), int(k)))


def overlap_r(v: BasisSet, w: BasisSet) -> OverlapBound:
    """``max_{j,k} |<v_j|w_k>|^2``."""
    if v.d != w.d:
        raise DimMismatch("bases act on different dimensions")
    return _argmax(np.abs(v.kets.conj().T @ w.kets) ** 2)


def _as_povm(m) -> Povm:
    return m.as_povm() if isinstance(m, BasisSet) else m


def _check_projector(proj: np.ndarray) -> np.ndarray:
    proj = qmath.as_cmatrix(proj)
    if not qmath.is_hermitian(proj) or qmath.max_abs(proj @ proj - proj) > 1e-10:
        raise NotProjector("operator is not an orthogonal projector")
    return proj


def r_projected(p, q, proj=None) -> OverlapBound:
    """``max_{j,k} || sqrt(Q_k) Pi sqrt(P_j) ||_inf^2``; ``Pi=None`` means the identity."""
    p, q = _as_povm(p), _as_povm(q)
    if p.d != q.d:
        raise DimMismatch("POVMs act on different dimensions")
    proj = np.eye(p.d) if proj is None else _check_projector(proj)
    if proj.shape[0] != p.d:
        raise DimMismatch("projector dimension mismatch")
    sp, sq = p.sqrt_elements(), q.sqrt_elements()
    table = np.array([[qmath.sup_norm(b @ proj @ a) ** 2 for b in sq] for a in sp])
    return _argmax(table)


def r_povm(p, q) -> OverlapBound:
    """``max_{j,k} || sqrt(Q_k) sqrt(P_j) ||_inf^2``."""
    return r_projected(p, q, None)


def single_povm_bound(p, proj=None) -> OverlapBound:
    """``max_j || Pi sqrt(P_j) ||_inf^2``; ``arg_max`` is ``(j, 0)``."""
    p = _as_povm(p)
    proj = np.eye(p.d) if proj is None else _check_projector(proj)
    vals = np.array([[qmath.sup_norm(proj @ a) ** 2] for a in p.sqrt_elements()])
    return _argmax(vals)


def witness_bound(h_xb: float, h_zb: float, d: int) -> float:
    """Lower bound ``log d - H(x|b) - H(z|b)`` on ``-S(a|b)``; positive certifies entanglement."""
    return math.log2(d) - h_xb - h_zb


def is_mub(v: BasisSet, w: BasisSet, tol: float = 1e-10) -> bool:
    return qmath.max_abs(np.abs(v.kets.conj().T @ w.kets) ** 2 - 1.0 / v.d) <= tol


# -- relation evaluation ----------------------------------------------------

_ARITY = {
    Relation.EQ3: 3, Relation.EQ10: 3, Relation.EQ12: 3, Relation.EQ14: 3,
    Relation.EQ16: 3, Relation.EQ13: (2, 3), Relation.EQ15: (2, 3),
    Relation.EQ20: 1, Relation.EQ21: 1, Relation.EQ24: 1,
    Relation.EQ22: 2, Relation.EQ23: 2, Relation.EQ26: 2,
}


def _require(name: str, value):
    if value is None:
        raise ArityMismatch(f"relation needs input {name!r}")
    return value


def _support_proj(state: QState, proj) -> np.ndarray:
    rho_a = state.marginal(0).matrix
    if proj is None:
        return qmath.support_projector(rho_a)
    proj = _check_projector(proj)
    if qmath.max_abs(proj @ rho_a @ proj - rho_a) > 1e-9:
        raise SupportNotContained("projector does not contain the support of rho_a")
    return proj


def eval_relation(relation, state: QState, *, v: BasisSet | None = None,
                  w: BasisSet | None = None, P=None, Q=None, N: Povm | None = None,
                  projector=None, subdims: Sequence[int] | None = None,
                  tol_eq: float = TOL_EQ) -> UncertaintyReport:
    """Evaluate one uncertainty relation on ``state``.

    Subsystems are taken positionally as ``a, b, c``. Inputs by relation:

    - EQ3 / EQ10: bases ``v`` and ``w``; ``H(v|c) + H(w|b)``
    - EQ12 / EQ14: POVMs ``P`` and ``Q``; ``H(P|b) + H(Q|c)``; EQ14 takes
      ``projector`` (default: support projector of ``rho_a``)
    - EQ13 / EQ15: POVM ``P``; ``H(P|b)``
    - EQ16: pure ``rho_abc``, POVM ``P`` and rank-1 POVM ``N``
    - EQ20 / EQ21 / EQ24: single-system state; the Fourier pair (or qubit MUB triple)
    - EQ22 / EQ23: bipartite ``rho_ab`` with the Fourier pair on ``a``
    - EQ26: bipartite ``rho_ab`` with ``a`` split into pairwise coprime ``subdims``
    """
    rel = Relation(relation)
    arity = _ARITY[rel]
    n = len(state.dims)
    if (n not in arity) if isinstance(arity, tuple) else (n != arity):
        raise ArityMismatch(f"{rel.value} expects {arity} subsystems, state has {n}")
    d = state.dims[0]
    H = entropy.cond_entropy_meas

    if rel in (Relation.EQ3, Relation.EQ10):
        v, w = _require("v", v), _require("w", w)
        if v.d != d or w.d != d:
            raise DimMismatch("basis dimension differs from subsystem a")
        if rel is Relation.EQ3:
            if not is_mub(v, w):
                raise NotMub("EQ3 requires mutually unbiased bases")
            rhs = math.log2(d)
        else:
            rhs = overlap_r(v, w).neg_log
        terms = {"H(v|c)": H(v, state, 0, 2), "H(w|b)": H(w, state, 0, 1)}

    elif rel in (Relation.EQ12, Relation.EQ14):
        P, Q = _as_povm(_require("P", P)), _as_povm(_require("Q", Q))
        proj = _support_proj(state, projector) if rel is Relation.EQ14 else None
        rhs = r_projected(P, Q, proj).neg_log
        terms = {"H(P|b)": H(P, state, 0, 1), "H(Q|c)": H(Q, state, 0, 2)}

    elif rel in (Relation.EQ13, Relation.EQ15):
        P = _as_povm(_require("P", P))
        if rel is Relation.EQ13:
            # max_j ||P_j||_inf, written through the same routine
            rhs = single_povm_bound(P, None).neg_log
        else:
            rhs = single_povm_bound(P, _support_proj(state, projector)).neg_log
        terms = {"H(P|b)": H(P, state, 0, 1)}

    elif rel is Relation.EQ16:
        P, N = _as_povm(_require("P", P)), _as_povm(_require("N", N))
        if not state.is_pure():
            raise NotPure("EQ16 requires a pure tripartite state")
        if not N.is_rank_one():
            raise ArityMismatch("EQ16 requires N to be a rank-1 POVM")
        proj = _support_proj(state, projector)
        rhs = r_projected(P, N, proj).neg_log + entropy.cond_entropy_vn(state, 0, 1)
        terms = {"H(P|b)": H(P, state, 0, 1), "H(N|b)": H(N, state, 0, 1)}

    elif rel in (Relation.EQ20, Relation.EQ21):
        z, x = fourier_pair(d)
        terms = {"H(x)": H(x, state, 0, None), "H(z)": H(z, state, 0, None)}
        rhs = math.log2(d)
        if rel is Relation.EQ21:
            rhs += entropy.von_neumann(state)

    elif rel is Relation.EQ24:
        if d != 2:
            raise DimMismatch("EQ24 is a qubit relation")
        x, y, z = qubit_mub_triple()
        terms = {"H(x)": H(x, state, 0, None), "H(y)": H(y, state, 0, None),
                 "H(z)": H(z, state, 0, None)}
        rhs = 2.0 + entropy.von_neumann(state)

    elif rel in (Relation.EQ22, Relation.EQ23):
        z, x = fourier_pair(d)
        s_ab = entropy.cond_entropy_vn(state, 0, 1)
        if rel is Relation.EQ22:
            terms = {"H(x)": H(x, state, 0, None), "H(z|b)": H(z, state, 0, 1)}
        else:
            terms = {"H(x|b)": H(x, state, 0, 1), "H(z|b)": H(z, state, 0, 1)}
        rhs = math.log2(d) + s_ab

    elif rel is Relation.EQ26:
        subdims = tuple(_require("subdims", subdims))
        if int(np.prod(subdims)) != d:
            raise DimMismatch(f"subdims {subdims} do not multiply to {d}")
        if not pairwise_coprime(subdims):
            raise NotCoprime(f"subdims {subdims} are not pairwise coprime")
        pairs = [fourier_pair(k) if k > 1 else (None, None) for k in subdims]
        xs = tensor_basis([p[1] for p in pairs if p[1] is not None])
        zs = tensor_basis([p[0] for p in pairs if p[0] is not None])
        terms = {"H(X)": H(xs, state, 0, None), "H(Z|b)": H(zs, state, 0, 1)}
        rhs = math.log2(d) + entropy.cond_entropy_vn(state, 0, 1)

    else:  # pragma: no cover
        raise ArityMismatch(f"unsupported relation {rel}")

    return UncertaintyReport(rel, {k: float(val) for k, val in terms.items()},
                             float(rhs), tol_eq)


# -- data-processing trace --------------------------------------------------

@dataclass(frozen=True)
class DpTrace:
    """Stage values of the monotonicity argument for ``H(v|c) + H(w|b) >= log d``.

    ``step8_form`` is the literal right-hand side of the scalar pull-out
    step, ``log d + S(X || I (x) rho_b)``; ``step8_rel`` is the relative
    entropy inside it.
    """

    step5: float
    step6: float
    step7: float
    step8_form: float
    step8_rel: float
    step9_equiv: float
    h_vc: float
    is_mub: bool

    def violations(self, tol: float = 1e-9) -> list[str]:
        bad = []
        if self.step5 < self.step6 - tol:
            bad.append("step5 < step6")
        if self.is_mub and abs(self.step6 - self.step7) > tol:
            bad.append("step6 != step7")
        if abs(self.step7 - self.step9_equiv) > tol:
            bad.append("step7 != step9")
        return bad

    def to_dict(self) -> dict:
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in self.__dict__.items()}


def _classical_quantum(basis_kets, blocks) -> np.ndarray:
    return sum(qmath.kron(np.outer(k, k.conj()), b) for k, b in zip(basis_kets, blocks))


def dp_trace(state: QState, v: BasisSet, w: BasisSet, require_mub: bool = False) -> DpTrace:
    if len(state.dims) != 3:
        raise ArityMismatch("dp_trace needs a tripartite state")
    if not state.is_pure():
        raise NotPure("dp_trace needs a pure tripartite state")
    mub = is_mub(v, w)
    if require_mub and not mub:
        raise NotMub("bases are not mutually unbiased")
    d = state.dims[0]
    rho_ab = state.marginal(0, 1)
    vb = measure_stats(rho_ab, v.as_povm(), 0, 1).blocks
    wb = measure_stats(rho_ab, w.as_povm(), 0, 1).blocks
    vk = [v.ket(j) for j in range(d)]
    wk = [w.ket(k) for k in range(d)]
    rho_b = state.marginal(1).matrix

    sigma5 = _classical_quantum(vk, vb)
    step5 = entropy.relative_entropy(rho_ab.matrix, sigma5)

    overlaps = np.abs(v.kets.conj().T @ w.kets) ** 2
    after = _classical_quantum(wk, wb)
    sigma6 = _classical_quantum(wk, [sum(overlaps[j, k] * vb[j] for j in range(d))
                                     for k in range(d)])
    step6 = entropy.relative_entropy(after, sigma6)
    step7 = entropy.relative_entropy(after, qmath.kron(np.eye(d) / d, rho_b))
    step8_rel = entropy.relative_entropy(after, qmath.kron(np.eye(d), rho_b))
    step9 = math.log2(d) - entropy.cond_entropy_meas(w, state, 0, 1)
    h_vc = entropy.cond_entropy_meas(v, state, 0, 2)
    return DpTrace(step5, step6, step7, math.log2(d) + step8_rel, step8_rel, step9, h_vc, mub)
