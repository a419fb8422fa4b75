"""Seeded random instances of each relation, for fuzz campaigns."""

from __future__ import annotations

import numpy as np

from . import qmath
from .bounds import Relation
from .errors import ArityMismatch
from .states import (BasisSet, QState, fourier_pair, random_basis, random_isometry,
                     random_povm, random_rank_one_povm, random_state, random_unitary)

MASK64 = (1 << 64) - 1

DEFAULT_DIMS = {
    Relation.EQ3: (2, 2, 2), Relation.EQ10: (2, 2, 2), Relation.EQ12: (2, 2, 2),
    Relation.EQ14: (4, 2, 2), Relation.EQ16: (2, 2, 2), Relation.EQ13: (2, 2),
    Relation.EQ15: (4, 2, 2), Relation.EQ20: (2,), Relation.EQ21: (2,),
    Relation.EQ24: (2,), Relation.EQ22: (2, 2), Relation.EQ23: (2, 2),
    Relation.EQ26: (2, 3, 2),
}


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(master: int, i: int) -> int:
    """Per-trial seed ``master XOR splitmix64(i)``."""
    return (int(master) & MASK64) ^ splitmix64(i)


def random_mub_pair(d: int, rng: np.random.Generator) -> tuple[BasisSet, BasisSet]:
    """Fourier pair rotated by a random unitary."""
    z, x = fourier_pair(d)
    u = random_unitary(d, rng)
    return BasisSet.from_columns(u @ z.kets, "Uz"), BasisSet.from_columns(u @ x.kets, "Ux")


def rank_deficient_pure(dims, rank: int, seed: int) -> QState:
    """Pure ``rho_abc`` whose marginal on ``a`` has the given rank.

    A random rank-``rank`` ``rho_a`` is purified and the purifying register
    is spread over ``b (x) c`` by a random isometry.
    """
    rng = np.random.default_rng(seed)
    da, db, dc = dims
    rho_a = random_state((da,), rank, int(rng.integers(2**63))).matrix
    psi = qmath.purify(rho_a).reshape(da, -1)
    iso = random_isometry(psi.shape[1], db * dc, rng)
    full = psi @ iso.T
    return QState.from_ket(full.reshape(-1), (da, db, dc))


def random_instance(relation, dims=None, seed: int = 0) -> tuple[QState, dict]:
    """``(state, kwargs)`` ready for :func:`uncert.bounds.eval_relation`."""
    rel = Relation(relation)
    dims = tuple(dims) if dims else DEFAULT_DIMS[rel]
    rng = np.random.default_rng(seed)
    sub = lambda: int(rng.integers(2**63))  # noqa: E731
    d = dims[0]
    if rel in (Relation.EQ3, Relation.EQ10, Relation.EQ12, Relation.EQ14,
               Relation.EQ16) and len(dims) != 3:
        raise ArityMismatch(f"{rel.value} needs three subsystem dims")
    if rel is Relation.EQ3:
        v, w = random_mub_pair(d, rng)
        return random_state(dims, 1, sub()), {"v": v, "w": w}
    if rel is Relation.EQ10:
        return random_state(dims, 1, sub()), {"v": random_basis(d, sub()),
                                              "w": random_basis(d, sub())}
    if rel is Relation.EQ12:
        return random_state(dims, None, sub()), {"P": random_povm(d, d + 1, sub()),
                                                 "Q": random_povm(d, d + 1, sub())}
    if rel in (Relation.EQ14, Relation.EQ15):
        if len(dims) != 3:
            raise ArityMismatch(f"{rel.value} needs three subsystem dims")
        state = rank_deficient_pure(dims, max(1, d // 2), sub())
        kw = {"P": random_povm(d, d + 1, sub())}
        if rel is Relation.EQ14:
            kw["Q"] = random_povm(d, d + 1, sub())
        return state, kw
    if rel is Relation.EQ13:
        return random_state(dims, None, sub()), {"P": random_povm(d, d + 1, sub())}
    if rel is Relation.EQ16:
        return random_state(dims, 1, sub()), {"P": random_povm(d, d + 1, sub()),
                                              "N": random_rank_one_povm(d, d + 1, sub())}
    if rel in (Relation.EQ20, Relation.EQ21, Relation.EQ24):
        return random_state(dims[:1], None, sub()), {}
    if rel in (Relation.EQ22, Relation.EQ23):
        return random_state(dims[:2], None, sub()), {}
    if rel is Relation.EQ26:
        subdims, db = dims[:-1], dims[-1]
        a = int(np.prod(subdims))
        return random_state((a, db), None, sub()), {"subdims": subdims}
    raise ArityMismatch(f"no generator for {rel.value}")
