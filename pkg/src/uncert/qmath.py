"""Dense complex linear algebra on small density operators.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; nothing
here mutates its arguments.
"""

from __future__ import annotations

from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimMismatch, NotHermitian, NotPSD, NotState

HERM_TOL = 1e-10
PSD_REL = 1e-10
SUPPORT_REL = 1e-12


class HermEig(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # unitary, columns


def as_cmatrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimMismatch(f"expected a 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def within(a: float, b: float, tol: float) -> bool:
    """Absolute-plus-relative comparison ``|a - b| <= tol * (1 + |b|)``."""
    return abs(a - b) <= tol * (1.0 + abs(b))


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return max_abs(m - m.conj().T) <= tol * (1.0 + max_abs(m))


def hermitian_eig(m) -> HermEig:
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimMismatch(f"matrix is not square: {m.shape}")
    if not is_hermitian(m):
        raise NotHermitian("matrix is not Hermitian")
    h = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(h)
    return HermEig(vals, vecs)


def _cutoffs(vals: np.ndarray) -> tuple[float, float]:
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    return PSD_REL * scale, SUPPORT_REL * scale


def psd_eig(m) -> HermEig:
    """Eigendecomposition of a PSD matrix; small negative eigenvalues are zeroed."""
    vals, vecs = hermitian_eig(m)
    eps_psd, _ = _cutoffs(vals)
    if vals.size and vals[0] < -eps_psd:
        raise NotPSD(f"smallest eigenvalue {vals[0]:.3e} is negative")
    return HermEig(np.clip(vals, 0.0, None), vecs)


def support_mask(vals: np.ndarray) -> np.ndarray:
    _, eps_supp = _cutoffs(vals)
    return vals > eps_supp


def matrix_func(m, f: str) -> np.ndarray:
    """Apply ``f`` eigenvalue-wise to a PSD matrix.

    ``f`` is one of ``"sqrt"``, ``"log"`` (natural), ``"log2"`` or
    ``"inv_sqrt"``. The logarithms and the inverse square root act on the
    support only and are zero on the kernel.
    """
    vals, vecs = psd_eig(m)
    if f == "sqrt":
        out = np.sqrt(vals)
    else:
        supp = support_mask(vals)
        out = np.zeros_like(vals)
        if f == "log":
            out[supp] = np.log(vals[supp])
        elif f == "log2":
            out[supp] = np.log2(vals[supp])
        elif f == "inv_sqrt":
            out[supp] = 1.0 / np.sqrt(vals[supp])
        else:
            raise ValueError(f"unknown matrix function {f!r}")
    res = (vecs * out) @ vecs.conj().T
    return 0.5 * (res + res.conj().T)


def kron(*mats) -> np.ndarray:
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> None:
    total = int(np.prod(dims)) if len(dims) else 1
    if m.shape != (total, total):
        raise DimMismatch(f"dims {tuple(dims)} do not match matrix shape {m.shape}")


def permute_subsystems(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of ``m`` so that factor ``order[i]`` comes i-th."""
    m = as_cmatrix(m)
    dims = list(dims)
    _check_dims(m, dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    new = [dims[i] for i in order]
    size = int(np.prod(new))
    return t.reshape(size, size)


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems retain their original relative order.
    """
    m = as_cmatrix(m)
    dims = list(dims)
    _check_dims(m, dims)
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimMismatch(f"keep={keep} out of range for {n} subsystems")
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    size = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(size, size)


def reduce_state(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Marginal on the subsystems in ``order``, tensor factors arranged as given."""
    order = [int(i) for i in order]
    kept = sorted(order)
    red = partial_trace(m, dims, kept)
    pos = [kept.index(i) for i in order]
    return permute_subsystems(red, [dims[i] for i in kept], pos)


def partial_transpose(m, dims: Sequence[int], sys: int) -> np.ndarray:
    m = as_cmatrix(m)
    dims = list(dims)
    _check_dims(m, dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[sys], axes[n + sys] = axes[n + sys], axes[sys]
    return t.transpose(axes).reshape(m.shape)


def is_npt(m, dims: Sequence[int], sys: int = 1, tol: float = 1e-10) -> bool:
    """True when the partial transpose has an eigenvalue below ``-tol``."""
    pt = partial_transpose(m, dims, sys)
    return bool(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))[0] < -tol)


def sup_norm(a) -> float:
    """Largest singular value."""
    a = as_cmatrix(a)
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def support_projector(rho) -> np.ndarray:
    vals, vecs = psd_eig(rho)
    v = vecs[:, support_mask(vals)]
    return v @ v.conj().T


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first largest-magnitude entry is real positive."""
    mags = np.abs(v)
    top = mags.max()
    if top == 0:
        return v
    idx = int(np.flatnonzero(mags >= top - 1e-12 * (1.0 + top))[0])
    return v * (abs(v[idx]) / v[idx])


def purify(rho) -> np.ndarray:
    """Ket on ``a (x) r`` whose marginal on ``a`` is ``rho``; ``dim r = rank(rho)``.

    The Schmidt coefficients are the non-negative square roots of the
    eigenvalues (largest first) and each eigenvector carries the canonical
    phase, so the output is reproducible.
    """
    rho = as_cmatrix(rho)
    if abs(np.trace(rho).real - 1.0) > 1e-10 or not is_hermitian(rho):
        raise NotState("purify expects a unit-trace Hermitian matrix")
    try:
        vals, vecs = psd_eig(rho)
    except NotPSD as exc:
        raise NotState(str(exc)) from exc
    supp = np.flatnonzero(support_mask(vals))[::-1]
    r = len(supp)
    psi = np.zeros((rho.shape[0], r), dtype=complex)
    for i, k in enumerate(supp):
        psi[:, i] = np.sqrt(vals[k]) * canonical_phase(vecs[:, k])
    return psi.reshape(-1)


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def trace_distance(rho, sigma) -> float:
    rho = as_cmatrix(rho)
    sigma = as_cmatrix(sigma)
    if rho.shape != sigma.shape:
        raise DimMismatch(f"shapes differ: {rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
