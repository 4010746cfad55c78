"""Knill-Laflamme verification and superselection-sector checks.

``kl_check`` evaluates the full matrix M^{ab}_{ij} = <j| E_b^dag E_a |i>
against the closest scalar structure C_ab * delta_ij, where C_ab is taken
as the codeword average of the diagonal elements (that choice minimizes
the Frobenius deviation and keeps the report reproducible).  The raw
max_violation is always reported alongside the binary verdict so that
approximate codes can apply their own thresholds.

``kraus_extract`` pulls the channel operators out of a joint
system-environment unitary by projecting onto environment basis states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hilbert import (DimensionMismatchError, Operator, ProductSpace,
                      StateVector)

DEFAULT_KL_TOL = 1e-10
_ORTHO_TOL = 1e-9
MAX_RECORDED_VIOLATIONS = 100


@dataclass(frozen=True)
class CodeSpace:
    """An ordered orthonormal set of codewords on a common space."""

    codewords: tuple[StateVector, ...]

    def __post_init__(self):
        words = tuple(self.codewords)
        if not words:
            raise ValueError("code space needs at least one codeword")
        dim = words[0].space.dim
        for w in words:
            if w.space.dim != dim:
                raise DimensionMismatchError("codewords live on different spaces")
        g = self.gram()
        if np.max(np.abs(g - np.eye(len(words)))) > _ORTHO_TOL:
            raise ValueError("codewords are not orthonormal within 1e-9")
        object.__setattr__(self, "codewords", words)

    @property
    def n_codewords(self) -> int:
        return len(self.codewords)

    @property
    def space(self) -> ProductSpace:
        return self.codewords[0].space

    def matrix(self) -> np.ndarray:
        """Codewords as columns, dim x K."""
        return np.column_stack([w.amplitudes for w in self.codewords])

    def gram(self) -> np.ndarray:
        m = np.column_stack([w.amplitudes for w in self.codewords])
        return m.conj().T @ m


@dataclass(frozen=True)
class ErrorSet:
    """Error operators with free-text labels, all square on one space."""

    operators: tuple[Operator, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise ValueError("error set needs at least one operator")
        dim = ops[0].space.dim
        for op in ops:
            if op.space.dim != dim:
                raise DimensionMismatchError("error operators on different spaces")
        labels = tuple(self.labels) if self.labels else tuple(
            f"E{k}" for k in range(len(ops)))
        if len(labels) != len(ops):
            raise ValueError("one label per operator required")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.operators)


@dataclass(frozen=True)
class KLReport:
    """Verdict and violation data of a Knill-Laflamme check."""

    c_matrix: np.ndarray
    max_violation: float
    violations: tuple[tuple[int, int, int, int, complex], ...]
    satisfied: bool
    tol: float

    @property
    def verdict(self) -> str:
        return "satisfied" if self.satisfied else "violated"

    def to_json(self) -> dict:
        return {
            "c_matrix": {"re": self.c_matrix.real.tolist(),
                         "im": self.c_matrix.imag.tolist()},
            "max_violation": self.max_violation,
            "verdict": self.verdict,
            "tol": self.tol,
            "violations": [
                {"a": a, "b": b, "i": i, "j": j,
                 "deviation_re": dev.real, "deviation_im": dev.imag}
                for (a, b, i, j, dev) in self.violations],
        }


def report_from_elements(m: np.ndarray, tol: float) -> KLReport:
    """Build a KLReport from M[a, b, i, j] = <j|E_b^dag E_a|i>."""
    n_err = m.shape[0]
    k = m.shape[2]
    c = np.einsum("abii->ab", m) / k
    dev = m - c[:, :, None, None] * np.eye(k)[None, None, :, :]
    absdev = np.abs(dev)
    max_violation = float(absdev.max())
    satisfied = max_violation <= tol
    violations = []
    if not satisfied:
        idx = np.argwhere(absdev > tol)
        order = np.argsort(-absdev[tuple(idx.T)])
        for flat in order[:MAX_RECORDED_VIOLATIONS]:
            a, b, i, j = (int(x) for x in idx[flat])
            violations.append((a, b, i, j, complex(dev[a, b, i, j])))
    return KLReport(c_matrix=c, max_violation=max_violation,
                    violations=tuple(violations), satisfied=satisfied, tol=tol)


def kl_check(code: CodeSpace, errors: ErrorSet, tol: float = DEFAULT_KL_TOL) -> KLReport:
    """Check <j|E_b^dag E_a|i> = C_ab delta_ij over all error pairs."""
    if errors.operators[0].space.dim != code.space.dim:
        raise DimensionMismatchError("errors and code live on different spaces")
    cw = code.matrix()                      # dim x K
    applied = np.stack([op.matrix @ cw for op in errors.operators])  # A x dim x K
    return kl_check_from_applied(applied, tol)


def kl_check_from_applied(applied: np.ndarray, tol: float = DEFAULT_KL_TOL) -> KLReport:
    """KL check from precomputed columns E_a |i>, shape (n_errors, dim, K).

    Sparse callers (toric module) apply their operators without ever
    materializing matrices and hand the results in here.
    """
    n_err, dim, k = applied.shape
    flat = np.transpose(applied, (0, 2, 1)).reshape(n_err * k, dim)
    # gram[a*K+i, b*K+j] = (E_b|j>)^dag (E_a|i>)
    gram = flat @ flat.conj().T
    m = gram.reshape(n_err, k, n_err, k).transpose(0, 2, 1, 3)
    return report_from_elements(np.ascontiguousarray(m), tol)


@dataclass(frozen=True)
class SectorCheckResult:
    respects_ssr: bool
    worst_element: float
    worst_location: Optional[tuple[int, int, int, int, int]]  # (op, sec_i, vec_i, sec_j, vec_j)


def ssr_sector_check(sectors: Sequence[CodeSpace], local_ops: ErrorSet,
                     tol: float = DEFAULT_KL_TOL) -> SectorCheckResult:
    """True iff no local operator connects distinct sectors.

    Evaluates |<psi| A |phi>| for every operator and every pair of basis
    vectors drawn from two different sectors.
    """
    if len(sectors) < 2:
        raise ValueError("at least two sectors required")
    dim = sectors[0].space.dim
    for s in sectors:
        if s.space.dim != dim:
            raise DimensionMismatchError("sectors on different spaces")
    worst = 0.0
    worst_loc = None
    mats = [s.matrix() for s in sectors]
    for a, op in enumerate(local_ops.operators):
        applied = [op.matrix @ m for m in mats]
        for si in range(len(sectors)):
            for sj in range(len(sectors)):
                if si == sj:
                    continue
                block = np.abs(mats[si].conj().T @ applied[sj])
                vi, vj = np.unravel_index(np.argmax(block), block.shape)
                if block[vi, vj] > worst:
                    worst = float(block[vi, vj])
                    worst_loc = (a, si, int(vi), sj, int(vj))
    return SectorCheckResult(worst <= tol, worst, worst_loc)


def kraus_extract(u: Operator, env_state: StateVector,
                  env_basis: Sequence[StateVector],
                  unitary_tol: float = 1e-9) -> ErrorSet:
    """Kraus operators E_k = (I_sys x <e_k|) U (I_sys x |phi>).

    The environment is the trailing block of ``u``'s space; its dimension
    is inferred from ``env_state``.  Operators with no nonzero entry are
    dropped; the survivors satisfy sum_k E_k^dag E_k = I_sys.
    """
    d_tot = u.space.dim
    d_env = env_state.space.dim
    if d_tot % d_env != 0:
        raise DimensionMismatchError("environment dim does not divide joint dim")
    d_sys = d_tot // d_env
    um = u.dense()
    if np.max(np.abs(um.conj().T @ um - np.eye(d_tot))) > unitary_tol:
        raise ValueError("joint operator is not unitary within tolerance")
    env_state.require_normalized()
    phi = env_state.amplitudes
    u4 = um.reshape(d_sys, d_env, d_sys, d_env)
    # keep the leading factor structure for the system when it splits cleanly
    lead, prod = [], 1
    for d in u.space.factor_dims:
        if prod == d_sys:
            break
        lead.append(d)
        prod *= d
    sys_space = ProductSpace(tuple(lead)) if prod == d_sys else ProductSpace((d_sys,))
    ops, labels = [], []
    for k, ek in enumerate(env_basis):
        if ek.space.dim != d_env:
            raise DimensionMismatchError("environment basis vector has wrong dim")
        e_k = np.einsum("m,imjn,n->ij", ek.amplitudes.conj(), u4, phi)
        if np.any(np.abs(e_k) > 0):
            ops.append(Operator(sys_space, e_k))
            labels.append(f"K{k}")
    return ErrorSet(tuple(ops), tuple(labels))
