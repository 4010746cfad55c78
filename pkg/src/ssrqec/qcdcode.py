"""Proton/neutron code: rate models, scattering errors, repetition recovery.

The logical system is the two-dimensional proton/neutron space; the
environment couples through species-diagonal scattering amplitudes
A^{s,i}_{k,k'}, whose proton/neutron asymmetry acts as an effective
phase error alpha_1 I + alpha_2 Z.  Concatenating with an n-particle
repetition code in the +/- basis, measuring adjacent parity checks and
majority-voting corrects those errors; Monte Carlo estimates of the
logical failure rate are checked against the binomial tail.

Assumption carried over from the protocol being modeled: the auxiliary
environment particle is discarded after the momentum projection.  That
separability assumption is recorded in report metadata by the CLI layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from .hilbert import ProductSpace, StateVector


@dataclass(frozen=True)
class PhysicalConstants:
    """Default energy scales in MeV; dimensionless couplings."""

    lambda_qcd: float = 330.0
    m_pi: float = 140.0
    m_w: float = 80400.0
    b_scale: float = 3000.0
    m_u: float = 3.0
    m_d: float = 3.0
    f_pi: float = 100.0
    lambda1: float = 0.2
    lambda2: float = 0.1
    epsilon: float = 3.0

    def __post_init__(self):
        for name in ("lambda_qcd", "m_pi", "m_w", "b_scale", "m_u", "m_d",
                     "f_pi", "epsilon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULTS = PhysicalConstants()


# ---------------------------------------------------------------------------
# Rate models


def pion_mass(m_u: float, m_d: float, b_scale: float) -> float:
    """sqrt(B (m_u + m_d)); vanishes in the chiral limit."""
    if m_u < 0 or m_d < 0 or b_scale <= 0:
        raise ValueError("masses must be >= 0 and B > 0")
    return math.sqrt(b_scale * (m_u + m_d))


def thermal_flip_suppression(temperature: float, m_pi: float = DEFAULTS.m_pi) -> float:
    """Thermal bit-flip suppression e^{-m_pi / T}."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return math.exp(-m_pi / temperature)


def sm_flip_suppression(energy: float, lambda_qcd: float = DEFAULTS.lambda_qcd,
                        m_w: float = DEFAULTS.m_w) -> float:
    """max(e^{-Lambda/E}, (E/m_W)^2): pion channel vs electroweak capture."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    return max(math.exp(-lambda_qcd / energy), (energy / m_w) ** 2)


def effective_distance(lambda_qcd: float, epsilon: float) -> float:
    """Energy budget of a sector-changing error in units of epsilon."""
    if lambda_qcd <= 0 or epsilon <= 0:
        raise ValueError("both scales must be positive")
    return lambda_qcd / epsilon


# ---------------------------------------------------------------------------
# Scattering amplitude table


SPECIES = ("phi1", "phi2")
LOGICAL = ("p", "n")


@dataclass(frozen=True)
class MomentumGrid:
    """Discrete momentum labels k in -k_max..k_max."""

    k_max: int

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")

    @property
    def indices(self) -> range:
        return range(-self.k_max, self.k_max + 1)

    def check(self, k: int):
        if abs(k) > self.k_max:
            raise ValueError(f"momentum index {k} outside grid |k| <= {self.k_max}")


@dataclass(frozen=True)
class AmplitudeTable:
    """Subnormalized scattering amplitudes A^{s,i}_{k,k'}."""

    grid: MomentumGrid
    entries: Dict[Tuple[str, str, int, int], complex]

    def __post_init__(self):
        rows: Dict[Tuple[str, str, int], float] = {}
        for (s, i, k, kp), a in self.entries.items():
            rows[(s, i, k)] = rows.get((s, i, k), 0.0) + abs(a) ** 2
        for key, total in rows.items():
            if total > 1.0 + 1e-9:
                raise ValueError(f"amplitude row {key} has norm^2 = {total} > 1")

    def amplitude(self, s: str, i: str, k: int, kp: int) -> complex:
        key = (s, i, k, kp)
        if key not in self.entries:
            raise KeyError(f"no amplitude entry for {key}")
        return self.entries[key]

    def row_kprimes(self, s: str, i: str, k: int) -> list[int]:
        return sorted(kp for (ss, ii, kk, kp) in self.entries
                      if (ss, ii, kk) == (s, i, k))


def toy_amplitude_table(lambda1: float, lambda2: float, grid: MomentumGrid,
                        tail_decay: float = 0.5) -> AmplitudeTable:
    """The toy-model table: forward entries fixed, tails a labeled model input.

    Forward (k' = 0) amplitudes: A^{phi1,p} = 1 - lambda1^2/2, A^{phi1,n} = 1,
    A^{phi2,p} = 1, A^{phi2,n} = 1 - lambda2^2/2, for every k.  Entries with
    k' != 0 follow an exponential decay tail_decay^|k'| scaled so each row is
    exactly normalized (zero deficit); the tail shape is explicitly model
    input, not derived content.
    """
    if abs(lambda1) > 1.0 or abs(lambda2) > 1.0:
        raise ValueError("couplings must satisfy |lambda| <= 1")
    if not (0.0 < tail_decay < 1.0):
        raise ValueError("tail_decay must lie in (0, 1)")
    forward = {
        ("phi1", "p"): 1.0 - lambda1 ** 2 / 2.0,
        ("phi1", "n"): 1.0,
        ("phi2", "p"): 1.0,
        ("phi2", "n"): 1.0 - lambda2 ** 2 / 2.0,
    }
    entries: Dict[Tuple[str, str, int, int], complex] = {}
    kmax = grid.k_max
    tail_shape = [tail_decay ** abs(kp) for kp in grid.indices if kp != 0]
    tail_norm2 = sum(t ** 2 for t in tail_shape)
    for (s, i), a0 in forward.items():
        slack = max(0.0, 1.0 - a0 ** 2)
        scale = math.sqrt(slack / tail_norm2) if (tail_norm2 > 0 and slack > 0) else 0.0
        for k in grid.indices:
            entries[(s, i, k, 0)] = complex(a0)
            for kp in grid.indices:
                if kp != 0:
                    entries[(s, i, k, kp)] = complex(scale * tail_decay ** abs(kp))
    return AmplitudeTable(grid, entries)


def alpha_decomposition(table: AmplitudeTable, s: str, k: int, kp: int
                        ) -> tuple[complex, complex]:
    """(alpha_1, alpha_2) of the branch error alpha_1 I + alpha_2 Z.

    alpha_1 = (A^{s,p} + A^{s,n})/2, alpha_2 = (A^{s,p} - A^{s,n})/2, so the
    reconstruction A^{s,p} = alpha_1 + alpha_2, A^{s,n} = alpha_1 - alpha_2
    holds exactly.
    """
    ap = table.amplitude(s, "p", k, kp)
    an = table.amplitude(s, "n", k, kp)
    return (ap + an) / 2.0, (ap - an) / 2.0


def error_operator_pn(table: AmplitudeTable, s: str, k: int, kp: int) -> np.ndarray:
    """The 2x2 species-diagonal error block diag(A^{s,p}, A^{s,n}) in the p/n basis."""
    return np.diag([table.amplitude(s, "p", k, kp),
                    table.amplitude(s, "n", k, kp)]).astype(np.complex128)


def em_phase_error(theta: float) -> tuple[complex, complex]:
    """(alpha_1, alpha_2) of the electromagnetic phase error diag(e^{-i theta}, 1).

    The charged logical branch acquires e^{-i theta}; in the +/- basis this is
    the same alpha_1 I + alpha_2 Z algebra as the scattering errors.
    """
    a1 = np.exp(-1j * theta / 2.0) * np.cos(theta / 2.0)
    a2 = -1j * np.exp(-1j * theta / 2.0) * np.sin(theta / 2.0)
    return complex(a1), complex(a2)


# ---------------------------------------------------------------------------
# Repetition code in the +/- basis


@dataclass(frozen=True)
class RepetitionState:
    """n-particle state in the +/- basis with per-particle momentum labels.

    ``psi`` is the flat 2^n amplitude array, bit 0 meaning |+> and bit 1
    meaning |->, first particle most significant (row-major, matching the
    hilbert convention).  Momenta are classical bookkeeping labels: every
    configuration in the superposition shares them.
    """

    n: int
    psi: np.ndarray
    momenta: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise ValueError("particle count must be odd (decode-time majority vote)")
        psi = np.asarray(self.psi, dtype=np.complex128).reshape(-1)
        if psi.shape[0] != 2 ** self.n:
            raise ValueError("amplitude array must have length 2^n")
        psi = psi.copy()
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        mom = tuple(int(m) for m in self.momenta)
        if len(mom) != self.n:
            raise ValueError("one momentum label per particle required")
        object.__setattr__(self, "momenta", mom)

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def normalized(self) -> "RepetitionState":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize zero state")
        return RepetitionState(self.n, self.psi / nrm, self.momenta)

    def logical_amplitudes(self) -> tuple[complex, complex]:
        """(c_plus, c_minus) components on |+...+> and |-...->."""
        return complex(self.psi[0]), complex(self.psi[-1])

    def to_pn_state_vector(self) -> StateVector:
        """Expand into the p/n product basis (for partial-trace diagnostics)."""
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
        t = self.psi.reshape((2,) * self.n)
        for axis in range(self.n):
            t = np.tensordot(h, t, axes=([1], [axis]))
            t = np.moveaxis(t, 0, axis)
        space = ProductSpace((2,) * self.n,
                             tuple(f"nucleon{i}" for i in range(self.n)))
        return StateVector(space, t.reshape(-1))


def _flip_particle(psi: np.ndarray, n: int, particle: int) -> np.ndarray:
    """Apply the |+> <-> |-> flip (effective Z) on one particle (0-based)."""
    t = psi.reshape((2,) * n)
    return np.flip(t, axis=particle).reshape(-1)


def encode_repetition(c_plus: complex, c_minus: complex, n: int) -> RepetitionState:
    """c+ |+,0>^n + c- |-,0>^n at common momentum 0."""
    if abs(abs(c_plus) ** 2 + abs(c_minus) ** 2 - 1.0) > 1e-9:
        raise ValueError("logical amplitudes must be normalized")
    if n % 2 == 0:
        raise ValueError("even n rejected: majority decode needs odd n")
    psi = np.zeros(2 ** n, dtype=np.complex128)
    psi[0] = c_plus
    psi[-1] = c_minus
    return RepetitionState(n, psi, (0,) * n)


@dataclass(frozen=True)
class ScatterBranch:
    """One momentum branch of a single-particle scattering event."""

    k_out: int                    # measured particle momentum k'
    env_momentum: int             # environment label k - k'
    weight: float                 # Born probability of this branch
    state: RepetitionState        # unnormalized branch state


def apply_scattering_error(state: RepetitionState, particle: int,
                           table: AmplitudeTable, s: str, k: int
                           ) -> list[ScatterBranch]:
    """Branch expansion over k': (alpha_1 I + alpha_2 Z) on one particle.

    Z here is the effective flip |+> <-> |-> of the repetition code's
    qubit.  Branch weights are |alpha_1|^2 + |alpha_2|^2 times the input
    norm; they sum to at most 1 (deficit = unmodeled channels).
    """
    if not 0 <= particle < state.n:
        raise ValueError(f"particle index {particle} out of range")
    table.grid.check(k)
    branches = []
    flipped = _flip_particle(state.psi, state.n, particle)
    for kp in table.row_kprimes(s, "p", k):
        a1, a2 = alpha_decomposition(table, s, k, kp)
        psi_b = a1 * state.psi + a2 * flipped
        w = float(np.linalg.norm(psi_b) ** 2)
        momenta = list(state.momenta)
        momenta[particle] = kp
        branches.append(ScatterBranch(
            kp, k - kp, w, RepetitionState(state.n, psi_b, tuple(momenta))))
    return branches


def momentum_project_and_boost(branches: Sequence[ScatterBranch],
                               particle: int,
                               outcome: Optional[int] = None,
                               rng: Optional[np.random.Generator] = None
                               ) -> tuple[int, RepetitionState, float]:
    """Select one momentum branch, boost the particle back to momentum 0.

    Returns (k', post-state at common momentum, branch probability).  The
    boost is index relabeling on the discrete grid; the environment label
    is discarded afterwards (separability assumption).
    """
    weights = np.array([b.weight for b in branches])
    total = weights.sum()
    if total <= 0:
        raise ValueError("all branches have zero weight")
    probs = weights / total
    if outcome is not None:
        matches = [i for i, b in enumerate(branches) if b.k_out == outcome]
        if not matches or probs[matches[0]] < 1e-15:
            raise ValueError(f"branch k' = {outcome} has vanishing probability")
        idx = matches[0]
    else:
        if rng is None:
            rng = np.random.default_rng()
        idx = int(rng.choice(len(branches), p=probs))
    b = branches[idx]
    momenta = list(b.state.momenta)
    momenta[particle] = 0
    post = RepetitionState(b.state.n, b.state.psi, tuple(momenta)).normalized()
    return b.k_out, post, float(probs[idx])


@dataclass(frozen=True)
class SyndromeResult:
    """Outcomes of the adjacent parity checks X_i X_{i+1}, i = 1..n-1."""

    pattern: tuple[int, ...]

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.pattern):
            raise ValueError("syndrome entries must be +/-1")


def _config_signs(n: int) -> np.ndarray:
    """Per-configuration eigenvalues of each single-particle X, shape (2^n, n)."""
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits  # |+> -> +1, |-> -> -1


def _config_syndromes(n: int) -> np.ndarray:
    signs = _config_signs(n)
    return signs[:, :-1] * signs[:, 1:]  # shape (2^n, n-1)


def syndrome_outcomes(state: RepetitionState
                      ) -> list[tuple[SyndromeResult, float, RepetitionState]]:
    """All syndrome outcomes with Born probabilities and collapsed states."""
    if len(set(state.momenta)) != 1:
        raise ValueError("syndrome measurement requires a definite common momentum")
    syn = _config_syndromes(state.n)
    keys: Dict[tuple[int, ...], np.ndarray] = {}
    for cfg in range(2 ** state.n):
        key = tuple(int(x) for x in syn[cfg])
        mask = keys.setdefault(key, np.zeros(2 ** state.n, dtype=bool))
        mask[cfg] = True
    out = []
    nrm2 = state.norm() ** 2
    for key in sorted(keys):
        mask = keys[key]
        proj = np.where(mask, state.psi, 0.0)
        p = float(np.linalg.norm(proj) ** 2) / nrm2
        if p < 1e-15:
            continue
        post = RepetitionState(state.n, proj, state.momenta).normalized()
        out.append((SyndromeResult(key), p, post))
    return out


def measure_syndrome(state: RepetitionState,
                     rng: Optional[np.random.Generator] = None
                     ) -> tuple[SyndromeResult, RepetitionState]:
    """Projectively measure the n-1 parity checks; collapse accordingly."""
    outcomes = syndrome_outcomes(state)
    if rng is None:
        rng = np.random.default_rng()
    probs = np.array([p for (_, p, _) in outcomes])
    idx = int(rng.choice(len(outcomes), p=probs / probs.sum()))
    syndrome, _, post = outcomes[idx]
    return syndrome, post


def decode_phase_flip(state: RepetitionState, syndrome: SyndromeResult
                      ) -> RepetitionState:
    """Majority-vote correction: flip the minimal set consistent with the syndrome."""
    n = state.n
    if len(syndrome.pattern) != n - 1:
        raise ValueError("syndrome length must be n - 1")
    # chain reconstruction: c_1 = +1, c_{i+1} = c_i * s_i; flip the minority sign
    chain = [1]
    for s in syndrome.pattern:
        chain.append(chain[-1] * s)
    minus = [i for i, c in enumerate(chain) if c == -1]
    flips = minus if len(minus) <= n // 2 else [i for i in range(n) if i not in minus]
    psi = state.psi
    for i in flips:
        psi = _flip_particle(psi, n, i)
    return RepetitionState(n, psi, state.momenta)


def recovery_cycle(state: RepetitionState, particle: int, table: AmplitudeTable,
                   s: str, k: int, branch_outcome: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None
                   ) -> tuple[int, SyndromeResult, RepetitionState]:
    """encode-side error, momentum projection, syndrome, decode, in one pass."""
    branches = apply_scattering_error(state, particle, table, s, k)
    kp, post, _ = momentum_project_and_boost(branches, particle,
                                             outcome=branch_outcome, rng=rng)
    syndrome, collapsed = measure_syndrome(post, rng=rng)
    return kp, syndrome, decode_phase_flip(collapsed, syndrome)


# ---------------------------------------------------------------------------
# Monte Carlo logical error rate


def binomial_tail(n: int, p: float) -> float:
    """Closed-form failure probability: >= ceil(n/2) independent flips."""
    t = math.ceil(n / 2)
    return sum(math.comb(n, j) * p ** j * (1 - p) ** (n - j)
               for j in range(t, n + 1))


def _trial_flips(seed: int, trial: int, n: int, p: float) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=[seed, trial]))
    return rng.random(n) < p


def _decode_failure(flips: np.ndarray) -> bool:
    """Run the syndrome + majority decode on a classical flip pattern."""
    n = flips.shape[0]
    signs = 1 - 2 * flips.astype(int)
    syndrome = signs[:-1] * signs[1:]
    chain = np.empty(n, dtype=int)
    chain[0] = 1
    np.cumprod(syndrome, out=chain[1:])
    minus = chain == -1
    correction = minus if int(minus.sum()) <= n // 2 else ~minus
    residual = flips ^ correction
    return bool(residual.all())


def _count_failures(seed: int, n: int, p: float, start: int, stop: int) -> int:
    failures = 0
    for trial in range(start, stop):
        if _decode_failure(_trial_flips(seed, trial, n, p)):
            failures += 1
    return failures


def logical_error_rate(n: int, p: float, trials: int, seed: int,
                       workers: int = 1) -> tuple[float, float]:
    """Monte Carlo failure frequency of the full syndrome+decode cycle.

    Per-trial randomness is a counter-based stream keyed by (seed, trial),
    so the estimate is bitwise independent of chunking and worker count.
    Returns (estimate, binomial standard error).
    """
    if n < 1 or n % 2 == 0:
        raise ValueError("n must be odd")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if trials < 1:
        raise ValueError("trials must be positive")
    workers = max(1, int(workers))
    if workers == 1:
        failures = _count_failures(seed, n, p, 0, trials)
    else:
        from concurrent.futures import ThreadPoolExecutor

        chunk = (trials + workers - 1) // workers
        ranges = [(c, min(c + chunk, trials)) for c in range(0, trials, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            failures = sum(pool.map(
                lambda r: _count_failures(seed, n, p, r[0], r[1]), ranges))
    est = failures / trials
    stderr = math.sqrt(max(est * (1 - est), 1e-300) / trials)
    return est, stderr
