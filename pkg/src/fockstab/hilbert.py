"""Dense Hilbert-space plumbing for the cavity-qubit-resonator stack.

Subsystems are ordered (cavity, qubit, resonator) everywhere; a composite
operator is a plain dense complex matrix with its layout carried alongside.
Everything is deliberately dense: the largest space the simulator touches is
of order one hundred dimensions, where dense LAPACK beats any sparse detour.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .numerics import TOL, DomainError, NumericalError, TruncationWarning


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions of a tensor-product space."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise DomainError(f"subsystem dimensions must be >= 1, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))


def single(dim: int) -> SpaceLayout:
    return SpaceLayout((dim,))


def _as_array(op) -> np.ndarray:
    data = op.data if hasattr(op, "data") else op
    return np.asarray(data, dtype=complex)


@dataclass(frozen=True)
class Operator:
    """Dense complex operator on a laid-out space."""

    layout: SpaceLayout
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=complex)
        n = self.layout.total_dim
        if data.shape != (n, n):
            raise DomainError(f"operator shape {data.shape} does not match layout dim {n}")
        object.__setattr__(self, "data", data)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.data.conj().T)

    def is_hermitian(self, tol: float = TOL.hermiticity) -> bool:
        return float(np.abs(self.data - self.data.conj().T).max()) <= tol

    def _check_layout(self, other: "Operator") -> None:
        if self.layout != other.layout:
            raise DomainError(f"layout mismatch: {self.layout.dims} vs {other.layout.dims}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_layout(other)
        return Operator(self.layout, self.data + other.data)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_layout(other)
        return Operator(self.layout, self.data - other.data)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_layout(other)
        return Operator(self.layout, self.data @ other.data)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.layout, self.data * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.data)


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix with its layout; validity is checked by check_density.

    The integrator constructs snapshots directly (their trace may have
    drifted by more than the constructor-grade tolerance, which the run
    diagnostics report), so the type itself only enforces the shape.
    """

    layout: SpaceLayout
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=complex)
        n = self.layout.total_dim
        if data.shape != (n, n):
            raise DomainError(f"state shape {data.shape} does not match layout dim {n}")
        object.__setattr__(self, "data", data)


def check_density(state: DensityMatrix,
                  trace_tol: float = TOL.state_trace,
                  eig_floor: float = TOL.state_eig_floor) -> None:
    """Raise DomainError unless Hermitian, unit trace and positive within tolerance."""
    a = state.data
    herm = float(np.abs(a - a.conj().T).max())
    if herm > TOL.hermiticity:
        raise DomainError(f"state not Hermitian: max deviation {herm:.2e}")
    tr = complex(np.trace(a))
    if abs(tr - 1.0) > trace_tol:
        raise DomainError(f"state trace {tr:.12f} differs from 1 beyond {trace_tol:.0e}")
    wmin = float(np.linalg.eigvalsh(a).min())
    if wmin < eig_floor:
        raise DomainError(f"state has eigenvalue {wmin:.2e} below floor {eig_floor:.0e}")


# ---------------------------------------------------------------- builders

def identity(dim: int) -> Operator:
    return Operator(single(dim), np.eye(dim, dtype=complex))


def ketbra(dim: int, i: int, j: int) -> Operator:
    """|i><j| on a single subsystem."""
    if not (0 <= i < dim and 0 <= j < dim):
        raise DomainError(f"ketbra indices ({i},{j}) outside dim {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return Operator(single(dim), m)


def fock_ket(dim: int, n: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise DomainError(f"Fock index {n} outside truncation dim {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def fock_state(dim: int, n: int) -> DensityMatrix:
    """Pure Fock state |n><n| on a single mode."""
    v = fock_ket(dim, n)
    return DensityMatrix(single(dim), np.outer(v, v.conj()))


def pure_state(layout: SpaceLayout, ket: np.ndarray) -> DensityMatrix:
    """Density matrix of a (normalized on entry) ket on the given layout."""
    v = np.asarray(ket, dtype=complex).ravel()
    if v.shape != (layout.total_dim,):
        raise DomainError(f"ket length {v.shape[0]} does not match layout dim {layout.total_dim}")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DomainError("cannot normalize the zero ket")
    v = v / norm
    return DensityMatrix(layout, np.outer(v, v.conj()))


def annihilation(dim: int) -> Operator:
    """Single-mode lowering operator: a[n-1, n] = sqrt(n)."""
    if dim < 2:
        raise DomainError(f"annihilation needs dim >= 2, got {dim}")
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return Operator(single(dim), a)


def number_op(dim: int) -> Operator:
    return Operator(single(dim), np.diag(np.arange(dim, dtype=complex)))


def parity(dim: int) -> Operator:
    """Photon-number parity diag((-1)^n)."""
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    return Operator(single(dim), np.diag(signs).astype(complex))


def tensor(*ops: Operator) -> Operator:
    """Kronecker product; layouts concatenate in the given order."""
    if not ops:
        raise DomainError("tensor needs at least one factor")
    data = ops[0].data
    dims = list(ops[0].layout.dims)
    for op in ops[1:]:
        data = np.kron(data, op.data)
        dims.extend(op.layout.dims)
    return Operator(SpaceLayout(tuple(dims)), data)


def partial_trace(state: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of subsystem `keep`, tracing out all others."""
    dims = state.layout.dims
    nd = len(dims)
    if not 0 <= keep < nd:
        raise DomainError(f"subsystem index {keep} outside layout {dims}")
    if nd == 1:
        return DensityMatrix(state.layout, state.data.copy())
    t = state.data.reshape(dims + dims)
    # kept ket/bra axes first, the remaining ket axes then bra axes in
    # matching order so they flatten to a traceable square block
    rest = [i for i in range(nd) if i != keep]
    perm = [keep, keep + nd] + rest + [i + nd for i in rest]
    t = np.transpose(t, perm)
    d = dims[keep]
    other = state.layout.total_dim // d
    t = t.reshape(d, d, other, other)
    out = np.einsum("abii->ab", t)
    return DensityMatrix(single(d), out)


# ------------------------------------------------------- linear algebra

def hermitian_eig(op) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator; raises if not Hermitian.

    Returns (eigenvalues ascending, eigenvector columns). Reconstruction is
    verified against the input.
    """
    a = _as_array(op)
    dev = float(np.abs(a - a.conj().T).max())
    if dev > TOL.hermiticity:
        raise DomainError(f"matrix not Hermitian: max deviation {dev:.2e}")
    w, v = np.linalg.eigh(a)
    recon = float(np.abs((v * w) @ v.conj().T - a).max())
    scale = max(1.0, float(np.abs(a).max()))
    if recon > TOL.hermitian_eig_residual * scale:
        raise NumericalError(f"eigendecomposition reconstruction error {recon:.2e}")
    return w, v


def general_eig(op) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a general square matrix with residual check.

    Residuals ||A v - eta v|| are required below the configured tolerance
    per unit matrix norm; no defectiveness handling here (callers decide).
    """
    a = _as_array(op)
    w, v = np.linalg.eig(a)
    resid = np.abs(a @ v - v * w).max(axis=0)
    scale = max(1.0, float(np.abs(a).max()))
    worst = float(resid.max()) if resid.size else 0.0
    if worst > TOL.general_eig_residual * scale:
        raise NumericalError(f"eigenpair residual {worst:.2e} exceeds tolerance")
    return w, v


def expm(op):
    """Matrix exponential (scaling-and-squaring)."""
    a = _as_array(op)
    e = scipy.linalg.expm(a)
    if not np.all(np.isfinite(e)):
        raise NumericalError("matrix exponential overflowed")
    if isinstance(op, Operator):
        return Operator(op.layout, e)
    return e


def displacement(alpha: complex, dim: int) -> Operator:
    """Coherent displacement exp(alpha a^dag - conj(alpha) a) on one mode.

    Computed through the eigenbasis of the (anti-Hermitian) generator, which
    keeps the result unitary to machine precision. When |alpha|^2 + 3|alpha|
    reaches the truncation dim the top of the ladder participates and a
    TruncationWarning is issued for callers to record.
    """
    a = annihilation(dim).data
    amag = abs(alpha)
    if amag * amag + 3.0 * amag >= dim:
        warnings.warn(
            f"displacement with |alpha| = {amag:.3f} is poorly supported at dim = {dim}",
            TruncationWarning, stacklevel=2)
    gen = alpha * a.conj().T - np.conjugate(alpha) * a
    w, v = np.linalg.eigh(1j * gen)     # 1j * gen is Hermitian
    d = (v * np.exp(-1j * w)) @ v.conj().T
    return Operator(single(dim), d)
