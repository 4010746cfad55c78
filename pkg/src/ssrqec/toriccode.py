"""Z_n toric code on a small torus: sectors, Wilson loops, KL brute force.

Qudit Paulis are kept symbolic (X/Z power vectors over edges plus a phase
exponent of e^{i pi / N}) so that commutation phases, products and
stabilizer-membership questions are answered by mod-N arithmetic; numeric
application to state vectors is a single permutation-plus-phase pass, so
the 2^18-dimensional (N=2, l=3) lattice stays tractable.

Edge orientation convention: horizontal edges point +x, vertical +y.
Stars put X on outgoing and X^{-1} on incoming edges; plaquettes put
Z^{+/-1} counterclockwise.  For N = 2 the standard toric code is
recovered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from . import klcore
from .hilbert import ProductSpace, StateVector
from .klcore import KLReport

DESK_GUARD_DIM = 2 ** 20
DEFAULT_ERROR_CAP = 10_000


class GuardExceededError(RuntimeError):
    """A desk-scale size guard was exceeded."""


@dataclass(frozen=True)
class TorusLattice:
    """l x l torus with N-dimensional qudits on the 2 l^2 edges."""

    l: int
    n: int

    def __post_init__(self):
        if self.l < 2:
            raise ValueError("linear size l must be >= 2")
        if self.n < 2:
            raise ValueError("qudit dimension N must be >= 2")

    @property
    def n_edges(self) -> int:
        return 2 * self.l * self.l

    @property
    def dim(self) -> int:
        return self.n ** self.n_edges

    def edge(self, direction: str, x: int, y: int) -> int:
        """Edge index; direction 'h' (toward +x) or 'v' (toward +y)."""
        x %= self.l
        y %= self.l
        base = 0 if direction == "h" else self.l * self.l
        if direction not in ("h", "v"):
            raise ValueError("direction must be 'h' or 'v'")
        return base + y * self.l + x

    def space(self) -> ProductSpace:
        return ProductSpace((self.n,) * self.n_edges)


@dataclass(frozen=True)
class QuditPauli:
    """phase_factor * prod_e X_e^{x_e} Z_e^{z_e} with X|j> = |j+1>, Z|j> = w^j |j>.

    ``phase`` is the exponent of e^{i pi / N}, kept mod 2N so products of
    w = e^{2 pi i / N} factors stay exact.
    """

    x_powers: tuple[int, ...]
    z_powers: tuple[int, ...]
    n: int
    phase: int = 0

    def __post_init__(self):
        nn = self.n
        object.__setattr__(self, "x_powers",
                           tuple(int(p) % nn for p in self.x_powers))
        object.__setattr__(self, "z_powers",
                           tuple(int(p) % nn for p in self.z_powers))
        object.__setattr__(self, "phase", int(self.phase) % (2 * nn))

    @property
    def weight(self) -> int:
        return sum(1 for x, z in zip(self.x_powers, self.z_powers)
                   if x != 0 or z != 0)

    def support(self) -> tuple[int, ...]:
        return tuple(e for e, (x, z) in enumerate(zip(self.x_powers, self.z_powers))
                     if x != 0 or z != 0)

    def is_identity_up_to_phase(self) -> bool:
        return self.weight == 0


def pauli_identity(n_edges: int, n: int) -> QuditPauli:
    return QuditPauli((0,) * n_edges, (0,) * n_edges, n)


def single_qudit_pauli(lat: TorusLattice, edge: int, x_pow: int, z_pow: int) -> QuditPauli:
    xs = [0] * lat.n_edges
    zs = [0] * lat.n_edges
    xs[edge] = x_pow
    zs[edge] = z_pow
    return QuditPauli(tuple(xs), tuple(zs), lat.n)


def pauli_mul(a: QuditPauli, b: QuditPauli) -> QuditPauli:
    """a @ b in the canonical X-then-Z ordering; exact phase bookkeeping."""
    if a.n != b.n or len(a.x_powers) != len(b.x_powers):
        raise ValueError("pauli operands are incompatible")
    n = a.n
    # moving Z^{z_a} through X^{x_b} costs w^{z_a . x_b}
    cross = sum(za * xb for za, xb in zip(a.z_powers, b.x_powers))
    x = tuple((xa + xb) % n for xa, xb in zip(a.x_powers, b.x_powers))
    z = tuple((za + zb) % n for za, zb in zip(a.z_powers, b.z_powers))
    return QuditPauli(x, z, n, a.phase + b.phase + 2 * cross)


def pauli_adjoint(a: QuditPauli) -> QuditPauli:
    n = a.n
    cross = sum(za * xa for za, xa in zip(a.z_powers, a.x_powers))
    x = tuple((-xa) % n for xa in a.x_powers)
    z = tuple((-za) % n for za in a.z_powers)
    return QuditPauli(x, z, n, -a.phase + 2 * cross)


def commutation_exponent(a: QuditPauli, b: QuditPauli) -> int:
    """c with a b = w^c b a, from the symplectic form mod N."""
    n = a.n
    c = sum(za * xb for za, xb in zip(a.z_powers, b.x_powers)) \
        - sum(zb * xa for zb, xa in zip(b.z_powers, a.x_powers))
    return c % n


# ---------------------------------------------------------------------------
# Numeric application


@lru_cache(maxsize=8)
def _digits(n: int, n_edges: int) -> np.ndarray:
    """Base-N digits of every basis index, edge 0 most significant; (E, D)."""
    d = n ** n_edges
    if d > DESK_GUARD_DIM:
        raise GuardExceededError(f"total dimension {d} exceeds guard {DESK_GUARD_DIM}")
    idx = np.arange(d, dtype=np.int64)
    out = np.empty((n_edges, d), dtype=np.int8)
    for e in range(n_edges - 1, -1, -1):
        out[e] = idx % n
        idx //= n
    return out


def pauli_permutation(lat: TorusLattice, p: QuditPauli
                      ) -> tuple[np.ndarray, np.ndarray]:
    """(target indices, phases): P|j> = phases[j] |targets[j]>."""
    n, n_edges = lat.n, lat.n_edges
    digits = _digits(n, n_edges)
    d = lat.dim
    targets = np.arange(d, dtype=np.int64)
    expo = np.zeros(d, dtype=np.int64)
    for e in p.support():
        w_e = n ** (n_edges - 1 - e)
        xe, ze = p.x_powers[e], p.z_powers[e]
        de = digits[e].astype(np.int64)
        if xe:
            targets += (((de + xe) % n) - de) * w_e
        if ze:
            expo += ze * de
    omega = np.exp(2j * np.pi * (expo % n) / n)
    global_phase = np.exp(1j * np.pi * p.phase / n)
    return targets, global_phase * omega


def apply_pauli(lat: TorusLattice, p: QuditPauli, vec: np.ndarray) -> np.ndarray:
    targets, phases = pauli_permutation(lat, p)
    out = np.zeros_like(vec, dtype=np.complex128)
    out[targets] = phases.reshape(phases.shape + (1,) * (vec.ndim - 1)) * vec
    return out


def pauli_dense(lat: TorusLattice, p: QuditPauli) -> np.ndarray:
    """Dense matrix, for small-lattice cross-checks only."""
    targets, phases = pauli_permutation(lat, p)
    d = lat.dim
    m = np.zeros((d, d), dtype=np.complex128)
    m[targets, np.arange(d)] = phases
    return m


# ---------------------------------------------------------------------------
# Stabilizers and ground space


def build_stabilizers(lat: TorusLattice) -> list[QuditPauli]:
    """l^2 star operators followed by l^2 plaquette operators."""
    stabs = []
    for y in range(lat.l):
        for x in range(lat.l):
            xs = [0] * lat.n_edges
            xs[lat.edge("h", x, y)] += 1       # outgoing +x
            xs[lat.edge("v", x, y)] += 1       # outgoing +y
            xs[lat.edge("h", x - 1, y)] -= 1   # incoming from -x
            xs[lat.edge("v", x, y - 1)] -= 1   # incoming from -y
            stabs.append(QuditPauli(tuple(xs), (0,) * lat.n_edges, lat.n))
    for y in range(lat.l):
        for x in range(lat.l):
            zs = [0] * lat.n_edges
            zs[lat.edge("h", x, y)] += 1       # bottom, +x
            zs[lat.edge("v", x + 1, y)] += 1   # right, +y
            zs[lat.edge("h", x, y + 1)] -= 1   # top, -x
            zs[lat.edge("v", x, y)] -= 1       # left, -y
            stabs.append(QuditPauli((0,) * lat.n_edges, tuple(zs), lat.n))
    return stabs


@dataclass(frozen=True)
class GroundSpace:
    """Orthonormal basis of the joint +1 eigenspace of all stabilizers."""

    lattice: TorusLattice
    basis: np.ndarray                                   # dim x N^2, columns
    sector_labels: Optional[tuple[tuple[int, int], ...]] = None

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def states(self) -> list[StateVector]:
        space = self.lattice.space()
        return [StateVector(space, self.basis[:, i])
                for i in range(self.dimension)]


def _project_stabilizer(lat: TorusLattice, s: QuditPauli, vec: np.ndarray
                        ) -> np.ndarray:
    acc = vec.copy()
    term = vec
    for _ in range(lat.n - 1):
        term = apply_pauli(lat, s, term)
        acc += term
    return acc / lat.n


def ground_space(lat: TorusLattice, seed: int = 12345) -> GroundSpace:
    """Ground-space basis by projector iteration on seeded random vectors."""
    if lat.dim > DESK_GUARD_DIM:
        raise GuardExceededError(
            f"dimension {lat.dim} exceeds desk-scale guard {DESK_GUARD_DIM}")
    stabs = build_stabilizers(lat)
    expected = lat.n ** 2
    rng = np.random.default_rng(seed)
    collected = []
    attempts = 0
    while len(collected) < expected and attempts < 4 * expected:
        attempts += 1
        v = rng.normal(size=lat.dim) + 1j * rng.normal(size=lat.dim)
        for s in stabs:
            v = _project_stabilizer(lat, s, v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-10:
            continue
        v = v / nrm
        for u in collected:
            v = v - u * np.vdot(u, v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            collected.append(v / nrm)
    if len(collected) != expected:
        raise RuntimeError(
            f"ground-space dimension {len(collected)} != expected N^2 = {expected}")
    basis = np.column_stack(collected)
    return GroundSpace(lat, basis)


# ---------------------------------------------------------------------------
# Wilson loops and the sector basis


def wilson_loop(lat: TorusLattice, cycle: str, charge: int,
                kind: str) -> QuditPauli:
    """Z^a (electric) or X^a (magnetic) along a representative cycle.

    Electric loops follow direct-lattice cycles; magnetic loops follow
    dual-lattice cycles winding in the named direction (crossing vertical
    edges for an x-winding, horizontal edges for a y-winding).
    """
    a = charge % lat.n
    xs = [0] * lat.n_edges
    zs = [0] * lat.n_edges
    if kind == "electric":
        if cycle == "x":
            for x in range(lat.l):
                zs[lat.edge("h", x, 0)] = a
        elif cycle == "y":
            for y in range(lat.l):
                zs[lat.edge("v", 0, y)] = a
        else:
            raise ValueError("cycle must be 'x' or 'y'")
    elif kind == "magnetic":
        if cycle == "x":
            for x in range(lat.l):
                xs[lat.edge("v", x, 0)] = a
        elif cycle == "y":
            for y in range(lat.l):
                xs[lat.edge("h", 0, y)] = a
        else:
            raise ValueError("cycle must be 'x' or 'y'")
    else:
        raise ValueError("kind must be 'electric' or 'magnetic'")
    return QuditPauli(tuple(xs), tuple(zs), lat.n)


def _root_label(value: complex, n: int) -> int:
    ang = np.angle(value) % (2 * np.pi)
    a = int(round(ang * n / (2 * np.pi))) % n
    if abs(value - np.exp(2j * np.pi * a / n)) > 1e-6:
        raise RuntimeError(f"eigenvalue {value} is not close to an N-th root of unity")
    return a


def sector_basis(gs: GroundSpace) -> GroundSpace:
    """Rotate to the joint eigenbasis of the commuting x-cycle Wilson loops.

    The electric and magnetic loops winding in x act within the ground
    space and commute (disjoint supports); their joint eigenvalues
    (w^a, w^b) label the N^2 sectors exactly once.
    """
    lat = gs.lattice
    n = lat.n
    w_e = wilson_loop(lat, "x", 1, "electric")
    w_m = wilson_loop(lat, "x", 1, "magnetic")
    b = gs.basis
    we_r = b.conj().T @ apply_pauli(lat, w_e, b)
    wm_r = b.conj().T @ apply_pauli(lat, w_m, b)
    vals, vecs = np.linalg.eig(we_r)
    labels_a = np.array([_root_label(v, n) for v in vals])
    columns = []
    labels = []
    for a in range(n):
        sel = np.where(labels_a == a)[0]
        if sel.size == 0:
            continue
        q, _ = np.linalg.qr(vecs[:, sel])
        sub = q.conj().T @ wm_r @ q
        vals2, vecs2 = np.linalg.eig(sub)
        for j in range(sel.size):
            bb = _root_label(vals2[j], n)
            col = q @ vecs2[:, j]
            columns.append(col / np.linalg.norm(col))
            labels.append((a, bb))
    if sorted(labels) != sorted((a, bb) for a in range(n) for bb in range(n)):
        raise RuntimeError(f"sector labels {labels} do not exhaust Z_N x Z_N")
    order = np.argsort([a * n + bb for (a, bb) in labels])
    new_basis = np.column_stack([b @ columns[i] for i in order])
    new_labels = tuple(labels[i] for i in order)
    return GroundSpace(lat, new_basis, new_labels)


# ---------------------------------------------------------------------------
# Error enumeration and KL check


def enumerate_pauli_errors(lat: TorusLattice, max_weight: int,
                           cap: int = DEFAULT_ERROR_CAP) -> list[QuditPauli]:
    """Identity plus all qudit Paulis of weight <= max_weight."""
    if max_weight < 1:
        raise ValueError("max_weight must be >= 1")
    if max_weight > 2:
        raise GuardExceededError("error enumeration capped at weight 2")
    n = lat.n
    singles = [(x, z) for x in range(n) for z in range(n) if (x, z) != (0, 0)]
    errors: list[QuditPauli] = [pauli_identity(lat.n_edges, n)]
    for e in range(lat.n_edges):
        for x, z in singles:
            errors.append(single_qudit_pauli(lat, e, x, z))
    if max_weight >= 2:
        for e1 in range(lat.n_edges):
            for e2 in range(e1 + 1, lat.n_edges):
                for x1, z1 in singles:
                    for x2, z2 in singles:
                        errors.append(pauli_mul(
                            single_qudit_pauli(lat, e1, x1, z1),
                            single_qudit_pauli(lat, e2, x2, z2)))
                        if len(errors) > cap:
                            raise GuardExceededError(
                                f"error count exceeds cap {cap}")
    if len(errors) > cap:
        raise GuardExceededError(f"error count {len(errors)} exceeds cap {cap}")
    return errors


def kl_check_paulis(gs: GroundSpace, errors: Sequence[QuditPauli],
                    tol: float = 1e-9) -> KLReport:
    """KL check of a symbolic error set against the (sector) ground basis."""
    lat = gs.lattice
    b = gs.basis
    k = b.shape[1]
    n_err = len(errors)
    flat = np.empty((n_err * k, b.shape[0]), dtype=np.complex128)
    for a, p in enumerate(errors):
        flat[a * k:(a + 1) * k] = apply_pauli(lat, p, b).T
    gram = flat @ flat.conj().T
    m = gram.reshape(n_err, k, n_err, k).transpose(0, 2, 1, 3)
    return klcore.report_from_elements(np.ascontiguousarray(m), tol)


def kl_check_toric(lat: TorusLattice, max_weight: int, tol: float = 1e-9,
                   cap: int = DEFAULT_ERROR_CAP,
                   gs: Optional[GroundSpace] = None) -> KLReport:
    """Enumerate weight-bounded Pauli errors and run the KL check."""
    if gs is None:
        gs = sector_basis(ground_space(lat))
    elif gs.sector_labels is None:
        gs = sector_basis(gs)
    errors = enumerate_pauli_errors(lat, max_weight, cap)
    return kl_check_paulis(gs, errors, tol)


# ---------------------------------------------------------------------------
# Symbolic SSR certificate


def _rank_mod_p(rows: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over GF(p); p must be prime."""
    m = rows % p
    m = m.astype(np.int64).copy()
    rank = 0
    cols = m.shape[1]
    for c in range(cols):
        pivot = None
        for r in range(rank, m.shape[0]):
            if m[r, c] % p:
                pivot = r
                break
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        inv = pow(int(m[rank, c]), p - 2, p)
        m[rank] = (m[rank] * inv) % p
        for r in range(m.shape[0]):
            if r != rank and m[r, c] % p:
                m[r] = (m[r] - m[r, c] * m[rank]) % p
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(math.isqrt(n)) + 1))


def ssr_certificate(lat: TorusLattice, p: QuditPauli,
                    stabilizers: Optional[Sequence[QuditPauli]] = None) -> str:
    """Symbolic proof that every off-diagonal sector element of ``p`` is 0.

    Returns 'detected' when p fails to commute with some stabilizer (then
    every ground-space matrix element vanishes), 'stabilizer' when p lies
    in the stabilizer group up to phase (then it acts as a scalar and all
    off-diagonal elements vanish), or 'logical' otherwise.
    """
    if not _is_prime(lat.n):
        raise ValueError("symbolic membership test requires prime N")
    if stabilizers is None:
        stabilizers = build_stabilizers(lat)
    for s in stabilizers:
        if commutation_exponent(p, s):
            return "detected"
    rows = np.array([list(s.x_powers) + list(s.z_powers) for s in stabilizers],
                    dtype=np.int64)
    vec = np.array(list(p.x_powers) + list(p.z_powers), dtype=np.int64)
    if _rank_mod_p(rows, lat.n) == _rank_mod_p(np.vstack([rows, vec]), lat.n):
        return "stabilizer"
    return "logical"


def ssr_exact_zero_check(lat: TorusLattice, max_weight: Optional[int] = None
                         ) -> bool:
    """Certify <a|P|a'> = 0 (a != a') for every Pauli of weight < l.

    Purely symbolic; weight defaults to l - 1 (the code-distance bound).
    """
    w = max_weight if max_weight is not None else lat.l - 1
    stabs = build_stabilizers(lat)
    for p in enumerate_pauli_errors(lat, max(w, 1)):
        if p.is_identity_up_to_phase():
            continue
        if p.weight > w:
            continue
        if ssr_certificate(lat, p, stabs) == "logical":
            return False
    return True
