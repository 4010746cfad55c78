"""Dense and sparse complex linear algebra over labeled product spaces.

Everything downstream (code-space checks, rotor protocols, repetition
pipelines, toric-code brute force) is built on the three value types here:
``StateVector``, ``Operator`` and ``DensityMatrix``, all living on a
``ProductSpace`` of finite-dimensional factors.  Index order is row-major
over factors with the first factor most significant; that convention is
fixed once here and never revisited.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

DEFAULT_NORM_TOL = 1e-9


class DimensionMismatchError(ValueError):
    """Operands live on incompatible spaces."""


class NormalizationError(ValueError):
    """A state failed its normalization check."""


@dataclass(frozen=True)
class ProductSpace:
    """An ordered tensor product of finite-dimensional factors."""

    factor_dims: tuple[int, ...]
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        object.__setattr__(self, "factor_dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"every factor dim must be >= 1, got {dims}")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(dims):
                raise ValueError("labels must match factor_dims in length")
            object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def tensor(self, other: "ProductSpace") -> "ProductSpace":
        labels = None
        if self.labels is not None and other.labels is not None:
            labels = self.labels + other.labels
        return ProductSpace(self.factor_dims + other.factor_dims, labels)


@dataclass(frozen=True)
class StateVector:
    """Dense complex amplitudes on a product space, row-major over factors."""

    space: ProductSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.space.dim:
            raise DimensionMismatchError(
                f"amplitude length {amps.shape[0]} != space dim {self.space.dim}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = DEFAULT_NORM_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def require_normalized(self, tol: float = DEFAULT_NORM_TOL) -> "StateVector":
        if not self.is_normalized(tol):
            raise NormalizationError(
                f"state norm^2 = {self.norm()**2!r} outside tolerance {tol}")
        return self

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def dagger_apply(self, other: "StateVector") -> complex:
        return inner(self, other)


def basis_state(space: ProductSpace, index: int) -> StateVector:
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(space, amps)


@dataclass(frozen=True)
class Operator:
    """A square operator, stored dense or sparse (CSR) per instance.

    Sparse and dense instances are interchangeable in every operation; the
    representation is an efficiency choice only.
    """

    space: ProductSpace
    matrix: Union[np.ndarray, sp.csr_matrix]

    def __post_init__(self):
        m = self.matrix
        d = self.space.dim
        if sp.issparse(m):
            m = m.tocsr().astype(np.complex128)
        else:
            m = np.asarray(m, dtype=np.complex128)
            if m.ndim != 2:
                raise ValueError("operator matrix must be 2-dimensional")
        if m.shape != (d, d):
            raise DimensionMismatchError(
                f"operator shape {m.shape} != ({d}, {d})")
        object.__setattr__(self, "matrix", m)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.matrix.todense())
        return self.matrix

    def to_sparse(self) -> "Operator":
        if self.is_sparse:
            return self
        return Operator(self.space, sp.csr_matrix(self.matrix))

    def adjoint(self) -> "Operator":
        if self.is_sparse:
            return Operator(self.space, self.matrix.conjugate().transpose().tocsr())
        return Operator(self.space, self.matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if self.space.dim != other.space.dim:
            raise DimensionMismatchError("operator product: dimension mismatch")
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if self.space.dim != other.space.dim:
            raise DimensionMismatchError("operator sum: dimension mismatch")
        return Operator(self.space, self.matrix + other.matrix)

    def __rmul__(self, scalar) -> "Operator":
        return Operator(self.space, scalar * self.matrix)


def identity(space: ProductSpace, sparse: bool = False) -> Operator:
    if sparse:
        return Operator(space, sp.identity(space.dim, dtype=np.complex128, format="csr"))
    return Operator(space, np.eye(space.dim, dtype=np.complex128))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on a product space."""

    space: ProductSpace
    matrix: np.ndarray
    tol: float = DEFAULT_NORM_TOL
    validate: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        d = self.space.dim
        if m.shape != (d, d):
            raise DimensionMismatchError(f"density matrix shape {m.shape} != ({d}, {d})")
        object.__setattr__(self, "matrix", m)
        if self.validate:
            if np.max(np.abs(m - m.conj().T)) > self.tol:
                raise ValueError("density matrix is not Hermitian within tolerance")
            if abs(np.trace(m) - 1.0) > self.tol:
                raise ValueError("density matrix trace differs from 1 beyond tolerance")
            if np.min(np.linalg.eigvalsh(m)) < -self.tol:
                raise ValueError("density matrix has a negative eigenvalue beyond tolerance")

    @classmethod
    def from_state(cls, psi: StateVector, tol: float = DEFAULT_NORM_TOL) -> "DensityMatrix":
        psi.require_normalized(tol)
        a = psi.amplitudes
        return cls(psi.space, np.outer(a, a.conj()), tol=tol)


# ---------------------------------------------------------------------------
# Operations


def tensor_product(a, b):
    """Kronecker product of two states or two operators; a's factors first."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.space.tensor(b.space), np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        space = a.space.tensor(b.space)
        if a.is_sparse or b.is_sparse:
            return Operator(space, sp.kron(a.matrix, b.matrix, format="csr"))
        return Operator(space, np.kron(a.matrix, b.matrix))
    raise TypeError(
        f"tensor_product requires two StateVectors or two Operators, "
        f"got {type(a).__name__} and {type(b).__name__}")


def apply(op: Operator, psi: StateVector) -> StateVector:
    """Matrix-vector product; uses the sparse representation when present."""
    if op.space.dim != psi.space.dim:
        raise DimensionMismatchError(
            f"operator dim {op.space.dim} != state dim {psi.space.dim}")
    return StateVector(psi.space, op.matrix @ psi.amplitudes)


def inner(phi: StateVector, psi: StateVector) -> complex:
    """<phi|psi>, conjugate-linear in the first argument."""
    if phi.space.dim != psi.space.dim:
        raise DimensionMismatchError("inner product: dimension mismatch")
    return complex(np.vdot(phi.amplitudes, psi.amplitudes))


def fidelity(phi: StateVector, psi: StateVector, tol: float = DEFAULT_NORM_TOL) -> float:
    """|<phi|psi>|^2 for normalized states."""
    phi.require_normalized(tol)
    psi.require_normalized(tol)
    return min(abs(inner(phi, psi)) ** 2, 1.0)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every factor not in ``keep``; kept factors retain their order."""
    keep = sorted(set(int(k) for k in keep))
    dims = rho.space.factor_dims
    n = len(dims)
    if not keep:
        raise ValueError("keep set must be nonempty")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    traced = [i for i in range(n) if i not in keep]
    t = rho.matrix.reshape(dims + dims)
    # contract each traced factor's bra and ket index, highest index first
    for i in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=m + i)
    kept_dims = tuple(dims[i] for i in keep)
    d_keep = int(np.prod(kept_dims))
    kept_labels = None
    if rho.space.labels is not None:
        kept_labels = tuple(rho.space.labels[i] for i in keep)
    out_space = ProductSpace(kept_dims, kept_labels)
    return DensityMatrix(out_space, t.reshape(d_keep, d_keep), tol=max(rho.tol, 1e-9),
                         validate=False)


def trace_all(rho: DensityMatrix) -> complex:
    return complex(np.trace(rho.matrix))


# ---------------------------------------------------------------------------
# JSON interchange: {"dims": [...], "re": [...], "im": [...]} with row-major
# flattening.  Vectors carry dim entries, operators dim**2.


def vector_to_json(psi: StateVector) -> dict:
    a = psi.amplitudes
    return {"dims": list(psi.space.factor_dims),
            "re": a.real.tolist(), "im": a.imag.tolist()}


def vector_from_json(obj: dict) -> StateVector:
    space = ProductSpace(tuple(obj["dims"]))
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.shape != im.shape:
        raise ValueError("re and im arrays differ in length")
    return StateVector(space, re + 1j * im)


def operator_to_json(op: Operator) -> dict:
    m = op.dense().reshape(-1)
    return {"dims": list(op.space.factor_dims),
            "re": m.real.tolist(), "im": m.imag.tolist()}


def operator_from_json(obj: dict) -> Operator:
    space = ProductSpace(tuple(obj["dims"]))
    d = space.dim
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.shape != im.shape:
        raise ValueError("re and im arrays differ in length")
    m = (re + 1j * im).reshape(d, d)
    return Operator(space, m)
