"""States, bases and POVMs, plus the seeded random ensembles used by the fuzzers."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import NamedTuple, Sequence

import numpy as np

from . import qmath
from .errors import BadDim, BadRank, DimMismatch, NotDivisor, NotState, UncertError

ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QState:
    """Density operator with ordered tensor factors.

    ``dims[i]`` is the dimension of the subsystem named ``labels[i]``; the
    matrix index is row-major over ``dims``.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = qmath.as_cmatrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(self.labels) or tuple("abcdefghijklmnop"[: len(dims)])
        if len(labels) != len(dims):
            raise DimMismatch("labels and dims differ in length")
        if m.shape != (int(np.prod(dims)),) * 2:
            raise DimMismatch(f"dims {dims} do not match matrix shape {m.shape}")
        if not qmath.is_hermitian(m):
            raise NotState("state is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise NotState(f"trace {np.trace(m).real!r} differs from 1")
        vals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if vals[0] < -qmath.PSD_REL * max(abs(vals[-1]), 1e-300):
            raise NotState("state is not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_ket(cls, psi, dims: Sequence[int], labels: Sequence[str] = ()) -> "QState":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(qmath.ket_to_dm(psi), tuple(dims), tuple(labels))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, sub) -> int:
        if isinstance(sub, str):
            try:
                return self.labels.index(sub)
            except ValueError:
                raise DimMismatch(f"no subsystem labelled {sub!r}") from None
        sub = int(sub)
        if not 0 <= sub < len(self.dims):
            raise DimMismatch(f"subsystem index {sub} out of range")
        return sub

    def marginal(self, *subs) -> "QState":
        """Reduced state on ``subs``, in the order given."""
        order = [self.index(s) for s in subs]
        m = qmath.reduce_state(self.matrix, self.dims, order)
        m = 0.5 * (m + m.conj().T)
        return QState(m / np.trace(m).real, tuple(self.dims[i] for i in order),
                      tuple(self.labels[i] for i in order))

    def purity_gap(self) -> float:
        return 1.0 - float(np.linalg.eigvalsh(self.matrix)[-1])

    def is_pure(self, tol: float = 1e-8) -> bool:
        return self.purity_gap() < tol


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Orthonormal basis stored as the columns of a unitary matrix."""

    kets: np.ndarray
    name: str = ""

    def __post_init__(self):
        k = qmath.as_cmatrix(self.kets)
        if k.shape[0] != k.shape[1]:
            raise DimMismatch("basis matrix must be square")
        if qmath.max_abs(k.conj().T @ k - np.eye(k.shape[0])) > ORTHO_TOL:
            raise UncertError(f"basis {self.name!r} is not orthonormal")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kets", k)

    @classmethod
    def from_columns(cls, cols, name: str = "") -> "BasisSet":
        """Normalize each column and fix its global phase canonically."""
        cols = np.array(cols, dtype=complex)
        cols = cols / np.linalg.norm(cols, axis=0)
        for j in range(cols.shape[1]):
            cols[:, j] = qmath.canonical_phase(cols[:, j])
        return cls(cols, name)

    @property
    def d(self) -> int:
        return self.kets.shape[0]

    def ket(self, j: int) -> np.ndarray:
        return self.kets[:, j]

    def projectors(self) -> list[np.ndarray]:
        return [np.outer(self.kets[:, j], self.kets[:, j].conj()) for j in range(self.d)]

    def as_povm(self) -> "Povm":
        return Povm(tuple(self.projectors()))

    def probs(self, rho) -> np.ndarray:
        """Outcome distribution of measuring ``rho`` in this basis."""
        p = np.einsum("ij,ik,kj->j", self.kets.conj(), np.asarray(rho), self.kets).real
        return np.clip(p, 0.0, None)


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        els = tuple(qmath.as_cmatrix(e) for e in self.elements)
        if not els:
            raise UncertError("empty POVM")
        d = els[0].shape[0]
        for e in els:
            if e.shape != (d, d):
                raise DimMismatch("POVM elements differ in shape")
            qmath.psd_eig(e)
        if qmath.max_abs(sum(els) - np.eye(d)) > ORTHO_TOL:
            raise UncertError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @property
    def d(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    def sqrt_elements(self) -> list[np.ndarray]:
        return [qmath.matrix_func(e, "sqrt") for e in self.elements]

    def is_rank_one(self) -> bool:
        return all(int(np.sum(qmath.support_mask(np.linalg.eigvalsh(e)))) == 1
                   for e in self.elements)


class FactorSet(NamedTuple):
    d: int
    factors: tuple[int, ...]

    @property
    def eta(self) -> int:
        return len(self.factors)


class MeasStats(NamedTuple):
    probs: np.ndarray
    blocks: list[np.ndarray]


def factors(d: int) -> FactorSet:
    if d < 1:
        raise BadDim("d must be positive")
    small = [k for k in range(1, int(d ** 0.5) + 1) if d % k == 0]
    return FactorSet(d, tuple(sorted(set(small) | {d // k for k in small})))


def pairwise_coprime(dims: Sequence[int]) -> bool:
    return all(gcd(a, b) == 1 for i, a in enumerate(dims) for b in dims[i + 1:])


def computational_basis(d: int) -> BasisSet:
    return BasisSet(np.eye(d, dtype=complex), "z")


def fourier_pair(d: int) -> tuple[BasisSet, BasisSet]:
    """The computational basis z and its discrete Fourier partner x.

    ``|x_j> = sum_k w^{-jk}/sqrt(d) |z_k>`` with ``w = exp(2 pi i/d)``.
    """
    if d < 2:
        raise BadDim("Fourier pair needs d >= 2")
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    x = np.exp(-2j * np.pi * ((j * k) % d) / d).T / np.sqrt(d)
    return computational_basis(d), BasisSet.from_columns(x, "x")


def _check_divisor(d: int, s: int) -> None:
    if d < 1 or s < 1 or d % s:
        raise NotDivisor(f"{s} does not divide {d}")


def w_basis(d: int, s: int) -> BasisSet:
    """Interpolating basis for the divisor ``s`` of ``d``.

    Column ``beta*s + gamma`` holds
    ``sum_n w^{-n gamma d/s}/sqrt(s) |z_{beta + n d/s}>``.
    """
    _check_divisor(d, s)
    t = d // s
    kets = np.zeros((d, d), dtype=complex)
    n = np.arange(s)
    for beta in range(t):
        for gamma in range(s):
            kets[beta + n * t, beta * s + gamma] = np.exp(-2j * np.pi * ((n * gamma) % s) / s)
    return BasisSet.from_columns(kets / np.sqrt(s), f"w[s={s}]")


def w_basis_x_form(d: int, s: int) -> BasisSet:
    """Same basis, built from the expansion over Fourier kets.

    ``sum_m w^{m beta s}/sqrt(d/s) |x_{gamma + m s}>``; agrees with
    :func:`w_basis` after canonical phase fixing.
    """
    _check_divisor(d, s)
    t = d // s
    if d == 1:
        return computational_basis(1)
    _, x = fourier_pair(d)
    kets = np.zeros((d, d), dtype=complex)
    for beta in range(t):
        for gamma in range(s):
            m = np.arange(t)
            coef = np.exp(2j * np.pi * ((m * beta * s) % d) / d) / np.sqrt(t)
            kets[:, beta * s + gamma] = x.kets[:, gamma + m * s] @ coef
    return BasisSet.from_columns(kets, f"w[s={s}]")


def w_tensor_permutation(d: int, s: int) -> np.ndarray:
    """Unitary taking ``|z_beta>_{a1}|n>_{a2}`` (dims d/s, s) to ``|z_{beta + n d/s}>``."""
    _check_divisor(d, s)
    t = d // s
    perm = np.zeros((d, d))
    for beta in range(t):
        for n in range(s):
            perm[beta + n * t, beta * s + n] = 1.0
    return perm


def tensor_basis(parts: Sequence[BasisSet]) -> BasisSet:
    if len(parts) == 1:
        return parts[0]
    kets = qmath.kron(*(p.kets for p in parts))
    return BasisSet.from_columns(kets, "(x)".join(p.name for p in parts))


def qubit_mub_triple() -> tuple[BasisSet, BasisSet, BasisSet]:
    """(x, y, z) for a qubit."""
    s = 1 / np.sqrt(2)
    x = BasisSet.from_columns([[s, s], [s, -s]], "x")
    y = BasisSet.from_columns([[s, s], [1j * s, -1j * s]], "y")
    return x, y, computational_basis(2)


def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_state(dims: Sequence[int], rank: int | None = None, seed: int = 0,
                 labels: Sequence[str] = ()) -> QState:
    """``G G^dag / tr`` with ``G`` a seeded complex Gaussian of shape ``(D, rank)``."""
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    rank = total if rank is None else int(rank)
    if not 1 <= rank <= total:
        raise BadRank(f"rank {rank} not in [1, {total}]")
    g = _gaussian(np.random.default_rng(seed), (total, rank))
    rho = g @ g.conj().T
    return QState(rho / np.trace(rho).real, dims, tuple(labels))


def random_pure_state(dims: Sequence[int], seed: int = 0, labels: Sequence[str] = ()) -> QState:
    return random_state(dims, 1, seed, labels)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(_gaussian(rng, (d, d)))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_basis(d: int, seed: int = 0) -> BasisSet:
    return BasisSet.from_columns(random_unitary(d, np.random.default_rng(seed)), "random")


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(d_out, rng)[:, :d_in]


def random_povm(d: int, n: int, seed: int = 0) -> Povm:
    """``P_j = S^{-1/2} A_j^dag A_j S^{-1/2}`` with ``S = sum A_j^dag A_j``."""
    rng = np.random.default_rng(seed)
    mats = [a.conj().T @ a for a in (_gaussian(rng, (d, d)) for _ in range(n))]
    isq = qmath.matrix_func(sum(mats), "inv_sqrt")
    els = []
    for m in mats:
        e = isq @ m @ isq
        els.append(0.5 * (e + e.conj().T))
    # absorb the rounding residue so the elements sum to I to machine precision
    resid = np.eye(d) - sum(els)
    els[-1] = els[-1] + resid
    return Povm(tuple(els))


def random_rank_one_povm(d: int, n: int, seed: int = 0) -> Povm:
    """Rank-1 POVM ``{|u_j><u_j|}`` from an isometry C^d -> C^n (n >= d)."""
    if n < d:
        raise BadRank("a rank-1 POVM needs at least d elements")
    v = random_isometry(d, n, np.random.default_rng(seed))
    return Povm(tuple(np.outer(v[j].conj(), v[j]) for j in range(n)))


def measure_stats(state: QState, povm: Povm, measured=0, side=None) -> MeasStats:
    """Outcome probabilities and unnormalized conditional side-system operators.

    ``blocks[j] = Tr_measured((P_j (x) I) rho_{measured,side})``. With
    ``side=None`` the blocks are 1x1 and equal the probabilities.
    """
    mi = state.index(measured)
    if povm.d != state.dims[mi]:
        raise DimMismatch(f"POVM dim {povm.d} != subsystem dim {state.dims[mi]}")
    if side is None:
        rho = state.marginal(mi).matrix
        probs = np.array([np.trace(e @ rho).real for e in povm.elements])
        return MeasStats(probs, [np.array([[p]], dtype=complex) for p in probs])
    si = state.index(side)
    if si == mi:
        raise DimMismatch("measured and side subsystems coincide")
    red = qmath.reduce_state(state.matrix, state.dims, [mi, si])
    dm, ds = state.dims[mi], state.dims[si]
    t = red.reshape(dm, ds, dm, ds)
    blocks = [np.einsum("ij,jbic->bc", e, t) for e in povm.elements]
    probs = np.array([np.trace(b).real for b in blocks])
    return MeasStats(probs, blocks)
