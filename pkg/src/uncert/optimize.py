"""Numerical search for minimum-uncertainty states, and the qubit Bloch-ball scan."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qmath
from .bounds import Relation, eval_relation
from .errors import BadStep, UnsupportedRelation
from .states import QState, factors, fourier_pair, qubit_mub_triple, w_basis

SUPPORTED = (Relation.EQ20, Relation.EQ21, Relation.EQ22, Relation.EQ23, Relation.EQ24)


@dataclass(frozen=True)
class GapObjective:
    """Gap of ``relation`` as a function of the free state on ``a`` (and ``b`` if ``d_b > 1``)."""

    relation: Relation
    d: int
    d_b: int = 1

    def __post_init__(self):
        rel = Relation(self.relation)
        if rel not in SUPPORTED:
            raise UnsupportedRelation(f"search does not support {rel.value}")
        if rel in (Relation.EQ22, Relation.EQ23) and self.d_b < 1:
            raise UnsupportedRelation("bipartite relation needs d_b >= 1")
        if rel in (Relation.EQ20, Relation.EQ21, Relation.EQ24) and self.d_b != 1:
            raise UnsupportedRelation(f"{rel.value} acts on a single system")
        if rel is Relation.EQ24 and self.d != 2:
            raise UnsupportedRelation("EQ24 is a qubit relation")
        object.__setattr__(self, "relation", rel)

    @property
    def total_dim(self) -> int:
        return self.d * self.d_b

    @property
    def n_params(self) -> int:
        return 2 * self.total_dim ** 2

    def state(self, params: np.ndarray) -> QState:
        """``rho = M M^dag / tr`` where ``M`` is the purification vector reshaped."""
        n = self.total_dim
        half = n * n
        m = (params[:half] + 1j * params[half:]).reshape(n, n)
        rho = m @ m.conj().T
        rho = 0.5 * (rho + rho.conj().T) / np.trace(rho).real
        if self.relation in (Relation.EQ22, Relation.EQ23):
            return QState(rho, (self.d, self.d_b), ("a", "b"))
        return QState(rho, (self.d,), ("a",))

    def __call__(self, params: np.ndarray) -> float:
        return eval_relation(self.relation, self.state(params)).gap


@dataclass(frozen=True)
class SearchResult:
    best_state: QState
    best_gap: float
    iterations: int
    restarts_used: int
    converged: bool
    best_params: np.ndarray


def nelder_mead(f: Callable[[np.ndarray], float], x0: np.ndarray, step: float = 0.5,
                max_iter: int = 5000, xtol: float = 1e-9):
    """Plain downhill simplex (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

    Stops when every vertex lies within ``xtol`` of the best one or after
    ``max_iter`` iterations. Returns ``(x, fx, iterations, converged)``.
    """
    n = x0.size
    pts = np.vstack([x0] + [x0 + step * e for e in np.eye(n)])
    vals = np.array([f(p) for p in pts])
    it = 0
    converged = False
    while it < max_iter:
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        if np.max(np.linalg.norm(pts[1:] - pts[0], axis=1)) < xtol:
            converged = True
            break
        it += 1
        centroid = pts[:-1].mean(axis=0)
        xr = centroid + (centroid - pts[-1])
        fr = f(xr)
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - pts[-1])
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (pts[-1] - centroid)
        fc = f(xc)
        if fc < min(fr, vals[-1]):
            pts[-1], vals[-1] = xc, fc
            continue
        pts[1:] = pts[0] + 0.5 * (pts[1:] - pts[0])
        vals[1:] = [f(p) for p in pts[1:]]
    best = int(np.argmin(vals))
    return pts[best], float(vals[best]), it, converged


def minimize_gap(obj: GapObjective, seed: int = 0, restarts: int = 20, max_iter: int = 5000,
                 xtol: float = 1e-9, target: float | None = None) -> SearchResult:
    """Multistart simplex descent of the relation gap.

    Restart ``i`` starts from a Gaussian point drawn with seed ``(seed, i)``.
    With ``target`` set, the search stops after the first restart whose gap
    reaches it. Ties in gap go to the earlier restart.
    """
    best = None
    used = 0
    for i in range(restarts):
        rng = np.random.default_rng([seed, i])
        x0 = rng.standard_normal(obj.n_params)
        x, fx, it, conv = nelder_mead(obj, x0, max_iter=max_iter, xtol=xtol)
        used = i + 1
        if best is None or fx < best[1]:
            best = (x, fx, it, conv)
        if target is not None and best[1] <= target:
            break
    x, fx, it, conv = best
    return SearchResult(obj.state(x), fx, it, used, conv, x)


# -- Bloch ball ---------------------------------------------------------------


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    out = np.zeros_like(p)
    for q in (p, 1.0 - p):
        nz = q > 0
        out[nz] -= q[nz] * np.log2(q[nz])
    return out


def bloch_zeta(r: np.ndarray) -> np.ndarray:
    """``H(x) + H(y) + H(z) - 2 - S(rho)`` for Bloch vectors ``r`` (shape ``(..., 3)``)."""
    r = np.asarray(r, dtype=float)
    norm = np.minimum(np.linalg.norm(r, axis=-1), 1.0)
    h = sum(_binary_entropy((1.0 + r[..., i]) / 2.0) for i in range(3))
    return h - 2.0 - _binary_entropy((1.0 + norm) / 2.0)


def bloch_grid_scan(step: float = 0.02) -> np.ndarray:
    """Rows ``(r_x, r_y, r_z, zeta)`` over the cubic grid of spacing ``step`` inside the ball."""
    if not 0 < step <= 0.1:
        raise BadStep("step must lie in (0, 0.1]")
    n = int(math.floor(1.0 / step + 1e-9))
    axis = np.arange(-n, n + 1) * step
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) <= 1.0 + 1e-12]
    return np.column_stack([pts, bloch_zeta(pts)])


def axis_distance(r: np.ndarray) -> np.ndarray:
    """Euclidean distance from each Bloch vector to the nearest of the x, y, z axes."""
    r = np.asarray(r, dtype=float)
    return np.min(np.stack([np.hypot(r[..., 1], r[..., 2]), np.hypot(r[..., 0], r[..., 2]),
                            np.hypot(r[..., 0], r[..., 1])]), axis=0)


def bloch_state(r) -> QState:
    x, y, z = r
    m = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
    return QState(m, (2,), ("a",))


# -- distance to analytic families -------------------------------------------


def _basis_members(d: int, divisors) -> list[tuple[str, np.ndarray]]:
    out = []
    for s in divisors:
        basis = w_basis(d, s)
        for j in range(d):
            out.append((f"w[s={s}] ket {j}", np.outer(basis.ket(j), basis.ket(j).conj())))
    return out


def nearest_family(state: QState, family: str) -> tuple[float, str]:
    """Minimum trace distance from ``state`` to a family of analytic minimizers.

    ``family`` is one of

    - ``"thm2"``: z and x basis projectors (prime ``d``)
    - ``"thm4"``: basis projectors of every w-basis
    - ``"thm4_diag"``: states diagonal in some w-basis (distance to the dephased state)
    - ``"corollary3"``: qubit states diagonal in x, y or z
    """
    rho = state.marginal(0).matrix if len(state.dims) > 1 else state.matrix
    d = rho.shape[0]
    if family == "thm2":
        z, x = fourier_pair(d)
        members = [(f"z ket {j}", p) for j, p in enumerate(z.projectors())]
        members += [(f"x ket {j}", p) for j, p in enumerate(x.projectors())]
    elif family == "thm4":
        members = _basis_members(d, factors(d).factors)
    elif family in ("thm4_diag", "corollary3"):
        if family == "corollary3":
            bases = list(zip("xyz", qubit_mub_triple()))
        else:
            bases = [(f"w[s={s}]", w_basis(d, s)) for s in factors(d).factors]
        members = []
        for name, b in bases:
            deph = sum(p @ rho @ p for p in b.projectors())
            members.append((f"diagonal in {name}", deph))
    else:
        raise ValueError(f"unknown family {family!r}")
    dists = [(qmath.trace_distance(rho, m), name) for name, m in members]
    return min(dists, key=lambda t: t[0])
