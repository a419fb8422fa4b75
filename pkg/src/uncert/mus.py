"""Minimum-uncertainty states: recovery channels, analytic families, classification."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import entropy, qmath
from .bounds import TOL_EQ, Relation, UncertaintyReport
from .errors import (BadSpec, DimMismatch, NotCoprime, NotMus, NotOrthogonal, NotPure,
                     RealityViolated, UncertError)
from .states import (BasisSet, QState, factors, fourier_pair, pairwise_coprime,
                     tensor_basis, w_basis, w_tensor_permutation)

# -- channels ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Channel:
    """Completely positive trace-preserving map given by operator elements ``K_i``."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ks = tuple(qmath.as_cmatrix(k) for k in self.kraus)
        if not ks:
            raise UncertError("channel needs at least one operator element")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise DimMismatch("operator elements differ in shape")
        tp = sum(k.conj().T @ k for k in ks)
        if qmath.max_abs(tp - np.eye(shape[1])) > 1e-10:
            raise UncertError("operator elements are not trace preserving")
        object.__setattr__(self, "kraus", ks)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]


def measurement_channel(w: BasisSet) -> Channel:
    """Dephasing in the basis ``w``: ``rho -> sum_k [w_k] rho [w_k]``."""
    return Channel(tuple(w.projectors()))


def identity_channel(d: int) -> Channel:
    return Channel((np.eye(d, dtype=complex),))


def extend_channel(ch: Channel, dims: Sequence[int], sys: int) -> Channel:
    """``ch`` acting on factor ``sys`` of a register with ``dims``, identity elsewhere."""
    if dims[sys] != ch.d_in:
        raise DimMismatch("channel input does not match the subsystem")
    ks = []
    for k in ch.kraus:
        mats = [np.eye(d) for d in dims]
        mats[sys] = k
        ks.append(qmath.kron(*mats))
    return Channel(tuple(ks))


def _mat(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, QState) else qmath.as_cmatrix(rho)


def apply_channel(ch: Channel, rho):
    m = _mat(rho)
    if m.shape[0] != ch.d_in:
        raise DimMismatch("state dimension does not match channel input")
    out = sum(k @ m @ k.conj().T for k in ch.kraus)
    out = 0.5 * (out + out.conj().T)
    if isinstance(rho, QState) and ch.d_in == ch.d_out:
        return QState(out, rho.dims, rho.labels)
    return out


def adjoint_apply(ch: Channel, x) -> np.ndarray:
    m = _mat(x)
    if m.shape[0] != ch.d_out:
        raise DimMismatch("operator dimension does not match channel output")
    return sum(k.conj().T @ m @ k for k in ch.kraus)


def petz_map(ch: Channel, sigma) -> Channel:
    """Recovery channel ``sqrt(s) E^dag(E(s)^{-1/2} . E(s)^{-1/2}) sqrt(s)``.

    Inverse square roots act on supports. Outside the support of ``E(sigma)``
    the map is completed with elements sending everything to ``|0><0|`` so the
    result stays trace preserving; this does not affect inputs supported on
    ``supp E(sigma)``.
    """
    s = _mat(sigma)
    qmath.psd_eig(s)
    es = apply_channel(ch, s)
    isq = qmath.matrix_func(es, "inv_sqrt")
    sq = qmath.matrix_func(s, "sqrt")
    ks = [sq @ k.conj().T @ isq for k in ch.kraus]
    vals, vecs = qmath.psd_eig(es)
    null = vecs[:, ~qmath.support_mask(vals)]
    e0 = np.zeros(ch.d_in, dtype=complex)
    e0[0] = 1.0
    ks.extend(np.outer(e0, null[:, i].conj()) for i in range(null.shape[1]))
    return Channel(tuple(ks))


def recovery_check(rho, sigma, ch: Channel) -> tuple[float, float]:
    """Trace distances ``(|R E rho - rho|, |R E sigma - sigma|)`` for ``R = petz_map(ch, sigma)``."""
    r, s = _mat(rho), _mat(sigma)
    if r.shape != s.shape:
        raise DimMismatch("rho and sigma differ in shape")
    rec = petz_map(ch, s)
    back_r = apply_channel(rec, apply_channel(ch, r))
    back_s = apply_channel(rec, apply_channel(ch, s))
    return qmath.trace_distance(back_r, r), qmath.trace_distance(back_s, s)


def mus_recovery_residual(state: QState, subdims: Sequence[int] | None = None) -> float:
    """Residual of the recovery test behind the equality case of EQ22/EQ23/EQ26.

    Uses ``rho = rho_ab``, ``sigma = sum_j [x_j] rho_ab [x_j]`` and ``E`` the
    z-basis dephasing on ``a``. With ``subdims`` the tensor-product x and z
    bases over those factors replace the Fourier pair.
    """
    d = state.dims[0]
    if subdims is None:
        z, x = fourier_pair(d)
    else:
        if int(np.prod(subdims)) != d:
            raise DimMismatch(f"subdims {tuple(subdims)} do not multiply to {d}")
        pairs = [fourier_pair(k) for k in subdims]
        z, x = tensor_basis([p[0] for p in pairs]), tensor_basis([p[1] for p in pairs])
    sigma = entropy.pinch(state.matrix, x.projectors(), state.dims, 0)
    ch = extend_channel(measurement_channel(z), state.dims, 0)
    return recovery_check(state.matrix, sigma, ch)[0]


# -- analytic families ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MusFamilySpec:
    """Parameters of ``d sum p_gamma (x)_nu [w^{s_nu}_{beta_nu, gamma_nu}] (x) sigma_beta``.

    ``dims`` lists the tensor factors of ``a`` (a single entry for one
    system), ``s`` the chosen divisor of each. ``p`` is indexed by the
    flattened gamma vector and ``side_blocks`` by the flattened beta vector
    (row-major over the factors).
    """

    dims: tuple[int, ...]
    s: tuple[int, ...]
    p: np.ndarray
    side_blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = tuple(int(k) for k in self.dims)
        s = tuple(int(k) for k in self.s)
        if len(dims) != len(s) or not dims:
            raise BadSpec("dims and s must have the same non-zero length")
        if any(k < 1 or dk % k for dk, k in zip(dims, s)):
            raise BadSpec(f"s={s} is not a vector of divisors of {dims}")
        p = np.asarray(self.p, dtype=float).reshape(-1)
        blocks = tuple(qmath.as_cmatrix(b) for b in self.side_blocks)
        n_gamma = int(np.prod(s))
        n_beta = int(np.prod([dk // k for dk, k in zip(dims, s)]))
        if p.size != n_gamma or len(blocks) != n_beta:
            raise BadSpec(f"need {n_gamma} weights and {n_beta} side blocks")
        if np.any(p < -1e-12):
            raise BadSpec("weights must be non-negative")
        db = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (db, db):
                raise BadSpec("side blocks differ in shape")
            try:
                qmath.psd_eig(b)
            except UncertError as exc:
                raise BadSpec(f"side block not PSD: {exc}") from exc
        total = int(np.prod(dims)) * p.sum() * sum(np.trace(b).real for b in blocks)
        if abs(total - 1.0) > 1e-10:
            raise BadSpec(f"normalization d*sum(p)*sum(tr sigma) = {total!r} != 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "side_blocks", blocks)

    @property
    def d(self) -> int:
        return int(np.prod(self.dims))

    @property
    def d_b(self) -> int:
        return self.side_blocks[0].shape[0]

    def to_dict(self) -> dict:
        from .io import matrix_to_json
        return {"dims": list(self.dims), "s": list(self.s), "p": self.p.tolist(),
                "side_blocks": [matrix_to_json(b) for b in self.side_blocks]}

    @classmethod
    def from_dict(cls, data: dict) -> "MusFamilySpec":
        from .io import matrix_from_json
        try:
            return cls(tuple(data["dims"]), tuple(data["s"]), np.asarray(data["p"]),
                       tuple(matrix_from_json(b) for b in data["side_blocks"]))
        except (KeyError, TypeError) as exc:
            raise BadSpec(f"malformed family spec: {exc}") from exc


def random_family_spec(dims: Sequence[int], s: Sequence[int], d_b: int = 2,
                       seed: int = 0, block_rank: int | None = None) -> MusFamilySpec:
    """Random weights and random PSD side blocks, normalized to unit total trace."""
    rng = np.random.default_rng(seed)
    dims, s = tuple(dims), tuple(s)
    n_gamma = int(np.prod(s))
    n_beta = int(np.prod([dk // k for dk, k in zip(dims, s)]))
    d = int(np.prod(dims))
    p = rng.uniform(0.05, 1.0, n_gamma)
    p *= n_gamma / d / p.sum()
    rank = d_b if block_rank is None else block_rank
    blocks = []
    for _ in range(n_beta):
        g = rng.standard_normal((d_b, rank)) + 1j * rng.standard_normal((d_b, rank))
        blocks.append(g @ g.conj().T)
    scale = sum(np.trace(b).real for b in blocks) * n_gamma
    return MusFamilySpec(dims, s, p, tuple(b / scale for b in blocks))


def _w_kets(dims, s):
    """Per-factor w-bases as lists indexed [beta][gamma]."""
    out = []
    for dk, sk in zip(dims, s):
        basis = w_basis(dk, sk)
        t = dk // sk
        out.append([[basis.ket(b * sk + g) for g in range(sk)] for b in range(t)])
    return out


def construct_family(spec: MusFamilySpec) -> QState:
    """``d sum_{beta, gamma} p_gamma (x)_nu [w_{beta_nu, gamma_nu}] (x) sigma_beta``."""
    kets = _w_kets(spec.dims, spec.s)
    t = [dk // sk for dk, sk in zip(spec.dims, spec.s)]
    d = spec.d
    rho = np.zeros((d * spec.d_b,) * 2, dtype=complex)
    betas = list(itertools.product(*(range(k) for k in t)))
    gammas = list(itertools.product(*(range(k) for k in spec.s)))
    for bi, beta in enumerate(betas):
        sigma = spec.side_blocks[bi]
        a_op = np.zeros((d, d), dtype=complex)
        for gi, gamma in enumerate(gammas):
            if spec.p[gi] == 0:
                continue
            ket = qmath.kron(*(kets[nu][beta[nu]][gamma[nu]][:, None]
                               for nu in range(len(spec.dims)))).reshape(-1)
            a_op += spec.p[gi] * np.outer(ket, ket.conj())
        rho += d * qmath.kron(a_op, sigma)
    rho = 0.5 * (rho + rho.conj().T)
    if spec.d_b == 1:
        return QState(rho, (d,), ("a",))
    return QState(rho, (d, spec.d_b), ("a", "b"))


def construct_thm4_iii(spec: MusFamilySpec) -> QState:
    if len(spec.dims) != 1:
        raise BadSpec("single-system family expects one factor")
    return construct_family(spec)


def construct_thm5(spec: MusFamilySpec) -> QState:
    if not pairwise_coprime(spec.dims):
        raise NotCoprime(f"factor dims {spec.dims} are not pairwise coprime")
    return construct_family(spec)


def _is_prime(n: int) -> bool:
    return n >= 2 and factors(n).factors == (1, n)


def construct_thm2(spec: MusFamilySpec) -> QState:
    """Prime ``d`` families: ``s = 1`` (z-diagonal) or ``s = d`` (product with x-diagonal ``a``)."""
    if len(spec.dims) != 1 or not _is_prime(spec.dims[0]):
        raise BadSpec("prime-dimension family needs a single prime factor")
    if spec.s[0] not in (1, spec.dims[0]):
        raise BadSpec("prime-dimension family uses s = 1 or s = d")
    return construct_family(spec)


def construct_thm4_ii(d: int, s: int, p, q) -> QState:
    """Single-system state ``d sum p_gamma q_beta [w_{beta, gamma}]``.

    ``p`` has ``s`` entries summing to ``s/d``, ``q`` has ``d/s`` entries
    summing to ``1/s``.
    """
    blocks = tuple(np.array([[qb]], dtype=complex) for qb in np.asarray(q, dtype=float))
    return construct_family(MusFamilySpec((d,), (s,), np.asarray(p, dtype=float), blocks))


def thm4_ii_tensor_form(d: int, s: int, p, q) -> np.ndarray:
    """``d (sum q_beta [z_beta]) (x) (sum p_gamma [x_gamma])`` mapped back onto ``a``."""
    left = np.diag(np.asarray(q, dtype=complex))
    if s > 1:
        _, xs = fourier_pair(s)
        right = sum(pg * np.outer(xs.ket(g), xs.ket(g).conj()) for g, pg in enumerate(p))
    else:
        right = np.array([[p[0]]], dtype=complex)
    w = w_tensor_permutation(d, s)
    return w @ (d * qmath.kron(left, right)) @ w.T


# -- Omega and Lambda classes -------------------------------------------------


@dataclass(frozen=True, eq=False)
class OmegaTerm:
    s: int
    beta: int
    gamma: int
    g: float
    side: np.ndarray


def construct_omega(d: int, terms: Sequence[OmegaTerm]) -> QState:
    """``sum g [w^s_{beta, gamma}] (x) rho_term`` with mutually orthogonal side states."""
    if not terms:
        raise BadSpec("need at least one term")
    sides = [qmath.as_cmatrix(t.side) for t in terms]
    for i, a in enumerate(sides):
        if abs(np.trace(a).real - 1.0) > 1e-10:
            raise BadSpec("side states must have unit trace")
        for b in sides[i + 1:]:
            if abs(np.trace(a @ b)) > 1e-10:
                raise NotOrthogonal("side states are not mutually orthogonal")
    gs = np.array([t.g for t in terms], dtype=float)
    if np.any(gs < 0) or np.any(gs > 1) or abs(gs.sum() - 1.0) > 1e-10:
        raise BadSpec("weights must lie in [0, 1] and sum to 1")
    rho = 0
    for t, side in zip(terms, sides):
        ket = w_basis(d, t.s).ket(t.beta * t.s + t.gamma)
        rho = rho + t.g * qmath.kron(np.outer(ket, ket.conj()), side)
    return QState(rho, (d, sides[0].shape[0]), ("a", "b"))


def omega_predicted(d: int, terms: Sequence[OmegaTerm]) -> tuple[float, float]:
    """``(H(z|b), H(x|b)) = (sum g log s, sum g log(d/s))``."""
    hz = sum(t.g * math.log2(t.s) for t in terms)
    hx = sum(t.g * math.log2(d / t.s) for t in terms)
    return hz, hx


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def construct_lambda(kind: str, phi_b=None, phi_c=None, vphi_b=None, vphi_c=None,
                     tol: float = 1e-10) -> QState:
    """Pure tripartite states whose two-party marginals are both entangled.

    ``kind`` is ``"z"`` (qubit ``a`` in the z basis), ``"x"`` (same in the x
    basis) or ``"qutrit"`` (the fixed three-term example; kets ignored).
    For ``"z"``/``"x"``, ``<phi_b|vphi_b><phi_c|vphi_c>`` must be real.
    """
    s2 = 1 / math.sqrt(2)
    if kind == "qutrit":
        zero = np.array([1, 0])
        plus = s2 * np.array([1, 1])
        yp, ym = s2 * np.array([1, 1j]), s2 * np.array([1, -1j])
        z = np.eye(3)
        psi = (qmath.kron(z[0], zero, zero) + qmath.kron(z[1], plus, plus)
               + qmath.kron(z[2], yp, ym)) / math.sqrt(3)
        return QState.from_ket(psi, (3, 2, 2))
    if kind not in ("z", "x"):
        raise BadSpec(f"unknown Lambda kind {kind!r}")
    pb, pc, vb, vc = (_unit(k) for k in (phi_b, phi_c, vphi_b, vphi_c))
    if pb.size != vb.size or pc.size != vc.size:
        raise BadSpec("kets on the same subsystem must share a dimension")
    prod = np.vdot(pb, vb) * np.vdot(pc, vc)
    if abs(prod.imag) > tol:
        raise RealityViolated(f"overlap product {prod} is not real")
    if kind == "z":
        a0, a1 = np.array([1, 0]), np.array([0, 1])
    else:
        a0, a1 = s2 * np.array([1, 1]), s2 * np.array([1, -1])
    psi = (qmath.kron(a0, pb, pc) + qmath.kron(a1, vb, vc)) * s2
    return QState.from_ket(psi, (2, pb.size, pc.size))


def random_lambda_kets(seed: int, d_b: int = 2, d_c: int = 2):
    """Four random kets with the last rephased so the overlap product is real."""
    rng = np.random.default_rng(seed)
    kets = [_unit(rng.standard_normal(n) + 1j * rng.standard_normal(n))
            for n in (d_b, d_c, d_b, d_c)]
    prod = np.vdot(kets[0], kets[2]) * np.vdot(kets[1], kets[3])
    if abs(prod) > 0:
        kets[3] = kets[3] * (prod.conjugate() / abs(prod))
    return tuple(kets)


# -- f / g system -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FgSystem:
    mus: list
    f_ops: list[np.ndarray]
    g_vals: np.ndarray
    residuals: np.ndarray = field(init=False)

    def __post_init__(self):
        res = np.array([qmath.sup_norm(f) * abs(g) for f, g in zip(self.f_ops, self.g_vals)])
        object.__setattr__(self, "residuals", res)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0


def _shift_op(z: BasisSet) -> np.ndarray:
    d = z.d
    omega = np.exp(2j * np.pi * np.arange(d) / d)
    return (z.kets * omega) @ z.kets.conj().T


def _side_trace(op: np.ndarray, state: QState) -> np.ndarray:
    da, db = state.dims[0], state.dims[1]
    t = state.matrix.reshape(da, db, da, db)
    return np.einsum("ij,jbic->bc", op, t)


def fg_system(state: QState, z: BasisSet | None = None, x: BasisSet | None = None) -> FgSystem:
    """``f_mu = Tr_a(Z^mu rho_ab)`` and ``g_mu = 1 - sum_j sqrt(p_j p_{j+mu})``, mu = 1..d-1."""
    if len(state.dims) != 2:
        raise DimMismatch("f/g system needs a bipartite state")
    d = state.dims[0]
    if z is None or x is None:
        z, x = fourier_pair(d)
    zop = _shift_op(z)
    p = x.probs(state.marginal(0).matrix)
    sq = np.sqrt(p)
    f_ops, g_vals, mus = [], [], []
    for mu in range(1, d):
        f_ops.append(_side_trace(np.linalg.matrix_power(zop, mu), state))
        g_vals.append(1.0 - float(np.dot(sq, np.roll(sq, -mu))))
        mus.append(mu)
    return FgSystem(mus, f_ops, np.array(g_vals))


def fg_system_vector(state: QState, subdims: Sequence[int]) -> FgSystem:
    """Vector-indexed version for ``a`` split into tensor factors ``subdims``."""
    if len(state.dims) != 2 or int(np.prod(subdims)) != state.dims[0]:
        raise DimMismatch("subdims must multiply to the dimension of a")
    pairs = [fourier_pair(k) if k > 1 else (None, None) for k in subdims]
    zops = [_shift_op(zp) if zp is not None else np.eye(1) for zp, _ in pairs]
    xk = qmath.kron(*(xp.kets if xp is not None else np.eye(1) for _, xp in pairs))
    rho_a = state.marginal(0).matrix
    p = np.clip(np.einsum("ij,ik,kj->j", xk.conj(), rho_a, xk).real, 0, None)
    sq = np.sqrt(p).reshape(subdims)
    f_ops, g_vals, mus = [], [], []
    for mu in itertools.product(*(range(k) for k in subdims)):
        if not any(mu):
            continue
        op = qmath.kron(*(np.linalg.matrix_power(zo, m) for zo, m in zip(zops, mu)))
        f_ops.append(_side_trace(op, state))
        shifted = np.roll(sq, [-m for m in mu], axis=tuple(range(len(subdims))))
        g_vals.append(1.0 - float(np.sum(sq * shifted)))
        mus.append(mu)
    return FgSystem(mus, f_ops, np.array(g_vals))


def fourier_reconstruction(state: QState) -> np.ndarray:
    """``sum_{j,j'} sqrt(p_j p_j') |x_j><x_j'| (x) Tr_a(Z^{j-j'} rho_ab)``.

    Equals ``rho_ab`` exactly when ``rho_ab`` is recoverable and ``chi(x, b) = 0``.
    """
    d = state.dims[0]
    z, x = fourier_pair(d)
    zop = _shift_op(z)
    sq = np.sqrt(x.probs(state.marginal(0).matrix))
    powers = [_side_trace(np.linalg.matrix_power(zop, m), state) for m in range(d)]
    out = np.zeros_like(state.matrix)
    for j in range(d):
        for jp in range(d):
            out = out + sq[j] * sq[jp] * qmath.kron(np.outer(x.ket(j), x.ket(jp).conj()),
                                                    powers[(j - jp) % d])
    return out


# -- equality checks and classification ---------------------------------------


def check_mus_equality(state: QState, tol_eq: float = TOL_EQ):
    """Both orderings of the tripartite equality condition, as EQ3-type reports.

    Returns ``(H(x|b) + H(z|c) vs log d, H(x|c) + H(z|b) vs log d)``.
    """
    if len(state.dims) != 3:
        raise DimMismatch("needs a tripartite state")
    if not state.is_pure():
        raise NotPure("needs a pure tripartite state")
    d = state.dims[0]
    z, x = fourier_pair(d)
    H = entropy.cond_entropy_meas
    first = UncertaintyReport(Relation.EQ3, {"H(x|b)": H(x, state, 0, 1),
                                             "H(z|c)": H(z, state, 0, 2)},
                              math.log2(d), tol_eq)
    second = UncertaintyReport(Relation.EQ3, {"H(x|c)": H(x, state, 0, 2),
                                              "H(z|b)": H(z, state, 0, 1)},
                               math.log2(d), tol_eq)
    return first, second


class MusClass(str, enum.Enum):
    UPSILON = "Upsilon"
    OMEGA = "Omega"
    LAMBDA = "Lambda"
    NOT_MUS = "NotMus"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ClassLabel:
    label: MusClass
    evidence: dict

    def to_dict(self) -> dict:
        return {"label": self.label.value, "evidence": self.evidence}


def _candidate_kets(d: int) -> list[tuple[int, int, np.ndarray]]:
    """All w-basis kets for every divisor of d, duplicates removed."""
    out: list[tuple[int, int, np.ndarray]] = []
    for s in factors(d).factors:
        basis = w_basis(d, s)
        for j in range(d):
            k = basis.ket(j)
            if all(abs(np.vdot(k, o[2])) ** 2 < 1 - 1e-9 for o in out):
                out.append((s, j, k))
    return out


def detect_omega_form(rho_ab: np.ndarray, d: int, tol: float = 1e-8):
    """Look for ``rho_ab = sum_t [w_t] (x) A_t`` with w-basis kets and orthogonal ``A_t``.

    Works cluster by cluster over the eigenspaces of ``rho_ab``: inside each
    eigenspace the product vectors ``|w>|e>`` are located for every candidate
    ket. Returns ``(found, residual, divisors_used)`` where ``residual`` is
    the trace distance between ``rho_ab`` and its dephasing by the block
    measurement ``{[w_t] (x) Pi_t}``.
    """
    rho_ab = qmath.as_cmatrix(rho_ab)
    db = rho_ab.shape[0] // d
    vals, vecs = np.linalg.eigh(0.5 * (rho_ab + rho_ab.conj().T))
    keep = vals > 1e-10
    vals, vecs = vals[keep], vecs[:, keep]
    cands = _candidate_kets(d)
    proj_b: dict[int, np.ndarray] = {}
    order = np.argsort(vals)
    clusters: list[list[int]] = []
    for i in order:
        if clusters and abs(vals[i] - vals[clusters[-1][-1]]) <= 1e-8:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    for cl in clusters:
        u = vecs[:, cl].reshape(d, db, len(cl))
        found = 0
        for ci, (_, _, ket) in enumerate(cands):
            c = np.einsum("i,ibm->bm", ket.conj(), u)
            bvals, bvecs = np.linalg.eigh(c @ c.conj().T)
            sel = bvecs[:, bvals > 1 - 1e-7]
            if sel.shape[1]:
                found += sel.shape[1]
                proj_b[ci] = proj_b.get(ci, 0) + sel @ sel.conj().T
        if found != len(cl):
            return False, math.inf, ()
    keys = list(proj_b)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            if qmath.max_abs(proj_b[a] @ proj_b[b]) > 1e-6:
                return False, math.inf, ()
    deph = 0
    for ci, pb in proj_b.items():
        k = cands[ci][2]
        op = qmath.kron(np.outer(k, k.conj()), pb)
        deph = deph + op @ rho_ab @ op
    resid = qmath.trace_distance(deph, rho_ab)
    used = tuple(sorted({cands[ci][0] for ci in proj_b}))
    return resid <= tol, resid, used


def classify_mus(state: QState, tol: float = TOL_EQ, strict: bool = True) -> ClassLabel:
    """Sort an equality state into the Upsilon / Omega / Lambda classes.

    Upsilon: some w-basis measurement has zero conditional entropy given b or
    c. Lambda: both two-party marginals fail the PPT test. Omega: both
    marginals are PPT and are left invariant by a block measurement over
    w-basis kets with orthogonal side blocks. Anything else is Indeterminate.
    """
    first, second = check_mus_equality(state, tol)
    ok = abs(first.gap) <= tol and abs(second.gap) <= tol
    evidence: dict = {"gaps": [float(first.gap), float(second.gap)]}
    if not ok:
        if strict:
            raise NotMus(f"equality fails: gaps {first.gap:.3e}, {second.gap:.3e}")
        return ClassLabel(MusClass.NOT_MUS, evidence)
    d = state.dims[0]
    zero = []
    for s in factors(d).factors:
        basis = w_basis(d, s)
        hb = entropy.cond_entropy_meas(basis, state, 0, 1)
        hc = entropy.cond_entropy_meas(basis, state, 0, 2)
        evidence[f"H(w[s={s}]|b)"] = float(hb)
        evidence[f"H(w[s={s}]|c)"] = float(hc)
        if hb <= tol:
            zero.append(f"w[s={s}]|b")
        if hc <= tol:
            zero.append(f"w[s={s}]|c")
    evidence["zero_entropy"] = zero
    rho_ab, rho_ac = state.marginal(0, 1), state.marginal(0, 2)
    npt_ab = qmath.is_npt(rho_ab.matrix, rho_ab.dims, 1, 1e-9)
    npt_ac = qmath.is_npt(rho_ac.matrix, rho_ac.dims, 1, 1e-9)
    evidence["npt_ab"], evidence["npt_ac"] = bool(npt_ab), bool(npt_ac)
    if zero:
        return ClassLabel(MusClass.UPSILON, evidence)
    if npt_ab and npt_ac:
        return ClassLabel(MusClass.LAMBDA, evidence)
    if not (npt_ab or npt_ac):
        ok_ab, res_ab, used_ab = detect_omega_form(rho_ab.matrix, d, tol)
        ok_ac, res_ac, used_ac = detect_omega_form(rho_ac.matrix, d, tol)
        evidence["omega_residuals"] = [float(res_ab), float(res_ac)]
        evidence["omega_divisors"] = [list(used_ab), list(used_ac)]
        if ok_ab and ok_ac:
            return ClassLabel(MusClass.OMEGA, evidence)
    return ClassLabel(MusClass.INDETERMINATE, evidence)
