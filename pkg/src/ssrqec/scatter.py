"""Relativistic 2->2 cross-section engine: Dirac algebra and kinematics.

Natural units (hbar = c = 1), energies in MeV, metric signature +---.
The pion-emission amplitude proton + scalar -> neutron + pion is built
from Dirac spinors in the Dirac representation; the total cross-section
carries the threshold step function explicitly, with theta(0) = 0 so
sigma vanishes exactly at threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DEFAULT_POLE_GUARD = 1.0  # MeV^2


class PropagatorPoleError(ArithmeticError):
    """Kinematics too close to the intermediate-state pole."""


@dataclass(frozen=True)
class FourMomentum:
    e: float
    px: float
    py: float
    pz: float

    @classmethod
    def on_shell(cls, m: float, px: float = 0.0, py: float = 0.0,
                 pz: float = 0.0) -> "FourMomentum":
        return cls(math.sqrt(m * m + px * px + py * py + pz * pz), px, py, pz)

    def dot(self, other: "FourMomentum") -> float:
        return (self.e * other.e - self.px * other.px
                - self.py * other.py - self.pz * other.pz)

    def mass2(self) -> float:
        return self.dot(self)

    def three_norm(self) -> float:
        return math.sqrt(self.px ** 2 + self.py ** 2 + self.pz ** 2)

    def __add__(self, other: "FourMomentum") -> "FourMomentum":
        return FourMomentum(self.e + other.e, self.px + other.px,
                            self.py + other.py, self.pz + other.pz)

    def __sub__(self, other: "FourMomentum") -> "FourMomentum":
        return FourMomentum(self.e - other.e, self.px - other.px,
                            self.py - other.py, self.pz - other.pz)

    def boost_z(self, rapidity: float) -> "FourMomentum":
        ch, sh = math.cosh(rapidity), math.sinh(rapidity)
        return FourMomentum(ch * self.e + sh * self.pz, self.px, self.py,
                            sh * self.e + ch * self.pz)

    def rotate(self, r: np.ndarray) -> "FourMomentum":
        v = r @ np.array([self.px, self.py, self.pz])
        return FourMomentum(self.e, float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.e, self.px, self.py, self.pz])


# ---------------------------------------------------------------------------
# Gamma matrices, Dirac representation


def _build_gammas() -> tuple[np.ndarray, ...]:
    s0 = np.eye(2, dtype=np.complex128)
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    zero = np.zeros((2, 2), dtype=np.complex128)
    g0 = np.block([[s0, zero], [zero, -s0]])
    gs = [np.block([[zero, s], [-s, zero]]) for s in (sx, sy, sz)]
    g5 = np.block([[zero, s0], [s0, zero]])
    return g0, gs[0], gs[1], gs[2], g5


@dataclass(frozen=True)
class GammaBasis:
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g5: np.ndarray

    @property
    def metric(self) -> np.ndarray:
        return np.diag([1.0, -1.0, -1.0, -1.0])

    def gammas(self) -> tuple[np.ndarray, ...]:
        return (self.g0, self.g1, self.g2, self.g3)

    def slash(self, p: FourMomentum) -> np.ndarray:
        return (p.e * self.g0 - p.px * self.g1 - p.py * self.g2
                - p.pz * self.g3)


GAMMA = GammaBasis(*_build_gammas())


def dirac_u(p: FourMomentum, m: float, spin: int,
            shell_tol: float = 1e-6) -> np.ndarray:
    """Positive-energy spinor, Dirac representation, normalized u-bar u = 2m."""
    if spin not in (+1, -1):
        raise ValueError("spin must be +1 or -1")
    if abs(p.mass2() - m * m) > shell_tol * max(m * m, 1.0):
        raise ValueError(f"momentum off shell: p^2 = {p.mass2()}, m^2 = {m*m}")
    xi = np.array([1.0, 0.0], dtype=np.complex128) if spin == +1 \
        else np.array([0.0, 1.0], dtype=np.complex128)
    sigma_p = np.array([[p.pz, p.px - 1j * p.py],
                        [p.px + 1j * p.py, -p.pz]], dtype=np.complex128)
    upper = xi
    lower = sigma_p @ xi / (p.e + m)
    return math.sqrt(p.e + m) * np.concatenate([upper, lower])


def u_bar(u: np.ndarray) -> np.ndarray:
    return u.conj() @ GAMMA.g0


# ---------------------------------------------------------------------------
# Kinematics


def cm_momentum(e_cm: float, m_a: float, m_b: float) -> float:
    """Two-body CM momentum; returns 0 below threshold (physical, not an error)."""
    if e_cm <= 0:
        raise ValueError("e_cm must be positive")
    if e_cm <= m_a + m_b:
        return 0.0
    val = (e_cm ** 2 - (m_a + m_b) ** 2) * (e_cm ** 2 - (m_a - m_b) ** 2)
    return math.sqrt(val) / (2.0 * e_cm)


@dataclass(frozen=True)
class ThresholdEnergy:
    exact: float
    approximate: float


def threshold_incident_energy(m_p: float, m_pi: float, m_phi: float
                              ) -> ThresholdEnergy:
    """Stationary-target threshold energy of the incident scalar.

    Exact: E* with s = m_p^2 + m_phi^2 + 2 m_p E* = (m_p + m_pi)^2 in the
    isospin limit m_n = m_p, i.e. E* = (2 m_p m_pi + m_pi^2 - m_phi^2)/(2 m_p).
    Also returns the approximate form m_pi + m_pi^2 / (2 m_p), which is exact
    at m_phi = 0.
    """
    if m_p <= 0 or m_pi <= 0 or m_phi < 0:
        raise ValueError("masses must be positive (m_phi >= 0)")
    exact = (2.0 * m_p * m_pi + m_pi ** 2 - m_phi ** 2) / (2.0 * m_p)
    approx = m_pi + m_pi ** 2 / (2.0 * m_p)
    return ThresholdEnergy(exact, approx)


def cm_kinematics(e_cm: float, m1: float, m2: float, m3: float, m4: float,
                  cos_theta: float) -> tuple[FourMomentum, ...]:
    """CM-frame momenta with the outgoing pair in the x-z plane."""
    k_in = cm_momentum(e_cm, m1, m2)
    k_out = cm_momentum(e_cm, m3, m4)
    if k_in == 0.0:
        raise ValueError("invalid initial state: e_cm <= m1 + m2")
    st = math.sqrt(max(0.0, 1.0 - cos_theta ** 2))
    k1 = FourMomentum.on_shell(m1, 0.0, 0.0, k_in)
    k2 = FourMomentum.on_shell(m2, 0.0, 0.0, -k_in)
    k3 = FourMomentum.on_shell(m3, k_out * st, 0.0, k_out * cos_theta)
    k4 = FourMomentum.on_shell(m4, -k_out * st, 0.0, -k_out * cos_theta)
    return k1, k2, k3, k4


# ---------------------------------------------------------------------------
# Amplitude


def amplitude_p_to_n(k1: FourMomentum, k2: FourMomentum, k3: FourMomentum,
                     k4: FourMomentum, g1: float, g2: float, lam: float,
                     spins: tuple[int, int] = (+1, +1),
                     m_p: Optional[float] = None,
                     m_n: Optional[float] = None,
                     pole_guard: float = DEFAULT_POLE_GUARD,
                     conservation_tol: float = 1e-6) -> complex:
    """Tree amplitude p + phi -> n + pi with an s-channel proton propagator.

    The propagator is evaluated through the (kslash + m)/(k^2 - m^2)
    identity; no matrix inversion.  Energy-momentum conservation beyond
    ``conservation_tol`` (MeV) is an error, never a silent result.
    """
    total = (k1 + k2) - (k3 + k4)
    if max(abs(x) for x in total.as_array()) > conservation_tol:
        raise ValueError("energy-momentum not conserved at the required tolerance")
    mp = m_p if m_p is not None else math.sqrt(max(k1.mass2(), 0.0))
    mn = m_n if m_n is not None else math.sqrt(max(k3.mass2(), 0.0))
    k = k1 + k2
    den = k.mass2() - mp * mp
    if abs(den) < pole_guard:
        raise PropagatorPoleError(
            f"|k^2 - m_p^2| = {abs(den)} below pole guard {pole_guard}")
    s1, s3 = spins
    u1 = dirac_u(k1, mp, s1)
    u3 = dirac_u(k3, mn, s3)
    vertex = (-1j * g1) * (GAMMA.slash(k4) @ GAMMA.g5) - g2 * GAMMA.g5
    propagator = 1j * (GAMMA.slash(k) + mp * np.eye(4)) / den
    return complex((-1j * lam) * (u_bar(u3) @ vertex @ propagator @ u1))


def spin_summed_amp2(k1: FourMomentum, k2: FourMomentum, k3: FourMomentum,
                     k4: FourMomentum, g1: float, g2: float, lam: float,
                     m_p: Optional[float] = None, m_n: Optional[float] = None,
                     pole_guard: float = DEFAULT_POLE_GUARD) -> float:
    """(1/2) sum over spins of |A|^2: initial-spin averaged, final summed."""
    total = 0.0
    for s1 in (+1, -1):
        for s3 in (+1, -1):
            a = amplitude_p_to_n(k1, k2, k3, k4, g1, g2, lam, (s1, s3),
                                 m_p=m_p, m_n=m_n, pole_guard=pole_guard)
            total += abs(a) ** 2
    return total / 2.0


# ---------------------------------------------------------------------------
# Cross-section


@dataclass(frozen=True)
class CrossSectionResult:
    sigma: float           # MeV^-2
    above_threshold: bool
    e_cm: float

    def __post_init__(self):
        if not self.above_threshold and self.sigma != 0.0:
            raise ValueError("sigma must be exactly 0 below threshold")


def sigma_tot(e_cm: float, masses: tuple[float, float, float, float],
              amp2: Callable[[float], float], n_theta: int = 64
              ) -> CrossSectionResult:
    """Total cross-section with the threshold step function.

    sigma = (1 / (64 pi^2 E^2)) (|k3| / |k1|) theta(E - m3 - m4)
            * 2 pi * int_{-1}^{1} dcos(theta) amp2(cos theta),
    by Gauss-Legendre quadrature in cos(theta).  theta(0) = 0: at and
    below threshold the result is exactly zero with the flag cleared.
    """
    m1, m2, m3, m4 = masses
    if e_cm <= m1 + m2:
        raise ValueError("invalid initial state: e_cm <= m1 + m2")
    if n_theta < 2:
        raise ValueError("n_theta must be >= 2")
    if e_cm <= m3 + m4:
        return CrossSectionResult(0.0, False, e_cm)
    k1 = cm_momentum(e_cm, m1, m2)
    k3 = cm_momentum(e_cm, m3, m4)
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    integral = float(sum(w * amp2(float(x)) for x, w in zip(nodes, weights)))
    sigma = (1.0 / (64.0 * math.pi ** 2 * e_cm ** 2)) * (k3 / k1) \
        * 2.0 * math.pi * integral
    return CrossSectionResult(sigma, True, e_cm)


def make_amp2(e_cm: float, masses: tuple[float, float, float, float],
              g1: float, g2: float, lam: float,
              pole_guard: float = DEFAULT_POLE_GUARD) -> Callable[[float], float]:
    """Spin-summed |A|^2 as a function of cos(theta) at fixed CM energy."""
    m1, m2, m3, m4 = masses

    def amp2(cos_theta: float) -> float:
        k1, k2, k3, k4 = cm_kinematics(e_cm, m1, m2, m3, m4, cos_theta)
        return spin_summed_amp2(k1, k2, k3, k4, g1, g2, lam,
                                m_p=m1, m_n=m3, pole_guard=pole_guard)

    return amp2
