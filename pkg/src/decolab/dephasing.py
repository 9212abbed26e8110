"""Exact pure dephasing of qubits coupled to a bosonic bath.

Discrete-mode coherence suppression factors, continuum decay functions
F_vac and F_th for power-law spectral densities with exponential cutoff,

    J(omega) = a * omega * (omega/omega_c)**(d-1) * exp(-omega/omega_c),

time-regime classification for the Ohmic case d = 1, the super-Ohmic (d = 3)
long-time plateau, and the N-qubit generalization with decoherence-free
subspaces. Natural units hbar = k_B = 1.

The decay functions are

    F_vac(t) = int J(w) (1 - cos wt) / w^2 dw
    F_th(t)  = int J(w) (1 - cos wt) (coth(w/2T) - 1) / w^2 dw

so the total coherence factor is chi(t) = exp(-F_vac) * exp(-F_th); F_th is
the thermal excess on top of the vacuum contribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import PhysicsError, QuadratureError

# coth(x) is 1 to better than 1e-26 beyond this argument; avoids overflow.
_COTH_CUT = 30.0
# below ~4pi radians of accumulated phase the plain adaptive rule handles the
# cosine; above it the cosine part goes to the oscillatory (QAWO) rule.
_OSC_PHASE = 4.0 * math.pi
_EPSREL = 1e-11


@dataclass(frozen=True)
class SpectralDensity:
    """Power-law bath spectral density with exponential cutoff."""

    a: float
    omega_c: float
    d: int = 1

    def __post_init__(self):
        if self.a <= 0 or self.omega_c <= 0:
            raise PhysicsError("spectral density requires a > 0 and omega_c > 0")
        if self.d not in (1, 2, 3):
            raise PhysicsError(f"bath dimension d must be 1, 2 or 3, got {self.d}")

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        x = omega / self.omega_c
        return self.a * omega * x ** (self.d - 1) * np.exp(-x)


@dataclass(frozen=True)
class BathModes:
    """Discrete bath: tuple of (coupling g_k, frequency omega_k) pairs."""

    modes: tuple

    def __post_init__(self):
        for g, w in self.modes:
            if w <= 0:
                raise PhysicsError(f"mode frequency must be positive, got {w}")


def alpha_k(g_k, omega_k, t) -> complex:
    """Displacement amplitude alpha_k(t) = 2 g_k (1 - exp(i omega_k t)) / omega_k."""
    if omega_k <= 0:
        raise PhysicsError("omega_k must be positive")
    if t < 0:
        raise PhysicsError("t must be nonnegative")
    return 2.0 * g_k * (1.0 - np.exp(1j * omega_k * t)) / omega_k


def _coth_minus_one(x: float) -> float:
    """coth(x) - 1 = 2/(e^{2x} - 1); returns exactly 0 beyond the guard."""
    if x >= _COTH_CUT:
        return 0.0
    return 2.0 / math.expm1(2.0 * x)


def _coth(x: float) -> float:
    return 1.0 + _coth_minus_one(x)


def _one_minus_cos_over_w2(w: float, t: float) -> float:
    """(1 - cos wt)/w^2 = (t^2/2) sinc^2(wt/2); finite and stable at w = 0."""
    s = float(np.sinc(0.5 * w * t / np.pi))
    return 0.5 * t * t * s * s


def chi_vacuum_discrete(bath: BathModes, t) -> complex:
    """Zero-temperature coherence factor of a discrete bath.

    Product over modes of exp(-|alpha_k(t)|^2 / 2), which equals
    exp(-sum_k 4|g_k|^2 (1 - cos omega_k t)/omega_k^2).
    """
    if t < 0:
        raise PhysicsError("t must be nonnegative")
    total = 0.0
    for g, w in bath.modes:
        total += 4.0 * abs(g) ** 2 * _one_minus_cos_over_w2(w, t)
    return complex(math.exp(-total))


def chi_thermal_discrete(bath: BathModes, temperature, t) -> complex:
    """Finite-temperature coherence factor; each mode weighted by coth(w/2T)."""
    if temperature < 0:
        raise PhysicsError("temperature must be nonnegative")
    if t < 0:
        raise PhysicsError("t must be nonnegative")
    total = 0.0
    for g, w in bath.modes:
        weight = 1.0 if temperature == 0 else _coth(0.5 * w / temperature)
        total += 4.0 * abs(g) ** 2 * _one_minus_cos_over_w2(w, t) * weight
    return complex(math.exp(-total))


def discretize_spectral_density(j: SpectralDensity, n_modes, omega_max=None) -> BathModes:
    """Linear-grid discretization with 4|g_i|^2 = J(omega_i) * d_omega."""
    if omega_max is None:
        omega_max = 50.0 * j.omega_c
    edges = np.linspace(0.0, omega_max, n_modes + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    dw = edges[1] - edges[0]
    gs = 0.5 * np.sqrt(j(centers) * dw)
    return BathModes(tuple(zip(gs, centers)))


def _omega_max(j: SpectralDensity, temperature=0.0):
    return j.omega_c * max(50.0, 50.0 * temperature / j.omega_c)


def _check_quad(value, err):
    scale = max(abs(value), 1e-300)
    if err > 1e-6 * scale + 1e-13:
        raise QuadratureError(
            f"quadrature error estimate {err:.2e} too large for value {value:.6e}",
            estimate=value)


def _decay_integral(g, t, omega_hi, zero_limit):
    """int_0^omega_hi g(w) (1 - cos wt)/w^2 dw.

    g must be smooth on (0, omega_hi] with g(w)/w^2 integrable away from 0;
    zero_limit is the w -> 0 limit of the full integrand. The oscillatory
    cosine tail is split off once the phase across the window exceeds a few
    periods and handled by the dedicated oscillatory rule.
    """
    def direct(w):
        if w < 1e-100:
            return zero_limit
        return g(w) * _one_minus_cos_over_w2(w, t)

    if t == 0.0:
        return 0.0
    omega_split = _OSC_PHASE / t
    if omega_split >= omega_hi:
        val, err = quad(direct, 0.0, omega_hi, epsabs=0.0, epsrel=_EPSREL, limit=400)
        _check_quad(val, err)
        return val

    def h(w):
        return g(w) / (w * w)

    val_a, err_a = quad(direct, 0.0, omega_split, epsabs=0.0, epsrel=_EPSREL, limit=400)
    val_b, err_b = quad(h, omega_split, omega_hi, epsabs=0.0, epsrel=_EPSREL, limit=400)
    val_c, err_c = quad(h, omega_split, omega_hi, weight="cos", wvar=t,
                        epsabs=1e-14, epsrel=_EPSREL, limit=800)
    total = val_a + val_b - val_c
    _check_quad(total, err_a + err_b + err_c)
    return total


def F_vac(j: SpectralDensity, t) -> float:
    """Vacuum decay function int J(w)(1 - cos wt)/w^2 dw."""
    if t < 0:
        raise PhysicsError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    return _decay_integral(lambda w: float(j(w)), float(t), _omega_max(j), 0.0)


def F_th(j: SpectralDensity, temperature, t) -> float:
    """Thermal excess decay function, weight coth(w/2T) - 1 on top of J/w^2."""
    if temperature < 0:
        raise PhysicsError("temperature must be nonnegative")
    if t < 0:
        raise PhysicsError("t must be nonnegative")
    if t == 0.0 or temperature == 0.0:
        return 0.0
    tt = float(temperature)

    def g(w):
        return float(j(w)) * _coth_minus_one(0.5 * w / tt)

    # w -> 0: J(w)(coth - 1)(1 - cos wt)/w^2 -> a T t^2 for d = 1, else 0
    zero_limit = j.a * tt * float(t) ** 2 if j.d == 1 else 0.0
    return _decay_integral(g, float(t), _omega_max(j, tt), zero_limit)


def trigamma(x) -> float:
    """psi'(x) via the recurrence psi'(x) = psi'(x+1) + 1/x^2 plus an
    asymptotic tail; relative accuracy ~1e-12 for x > 0."""
    if x <= 0:
        raise PhysicsError("trigamma implemented for x > 0 only")
    acc = 0.0
    while x < 8.0:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    # 1/x + 1/2x^2 + 1/6x^3 - 1/30x^5 + 1/42x^7 - 1/30x^9 + 5/66x^11
    tail = inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 + inv2 * (
        -1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * 5.0 / 66.0))))))
    return acc + tail


def F_superohmic_limit(j: SpectralDensity, temperature) -> float:
    """Long-time plateau of F_th for d = 3: 2a (T/omega_c)^2 psi'(1 + T/omega_c).

    Exact for the exponential cutoff, including the T -> 0 falloff.
    """
    if j.d != 3:
        raise PhysicsError(f"plateau exists for d = 3 only, got d = {j.d}")
    if temperature < 0:
        raise PhysicsError("temperature must be nonnegative")
    if temperature == 0.0:
        return 0.0
    r = temperature / j.omega_c
    return 2.0 * j.a * r * r * trigamma(1.0 + r)


def matsubara_time(temperature) -> float:
    """t_T = 1/(pi T), the thermal crossover time."""
    if temperature <= 0:
        raise PhysicsError("temperature must be positive")
    return 1.0 / (math.pi * temperature)


def classify_regime(j: SpectralDensity, temperature, t):
    """Ohmic decay regime at time t: (label, asymptotic F).

    short_time (t < 1/omega_c):              F ~ (a/2) omega_c^2 t^2
    vacuum     (1/omega_c <= t < 1/omega_1): F ~ a log(omega_c t)
    thermal    (t >= 1/omega_1):             F ~ a t/t_T
    with omega_1 = 2/t_T = 2 pi T the first thermal frequency.
    """
    if j.d != 1:
        raise PhysicsError("regime classification applies to the Ohmic case d = 1")
    if t < 0:
        raise PhysicsError("t must be nonnegative")
    t_t = matsubara_time(temperature)
    omega_1 = 2.0 / t_t
    if 1.0 / j.omega_c >= 1.0 / omega_1:
        raise PhysicsError("scales overlap (omega_c <= omega_1): regimes are undefined")
    if t < 1.0 / j.omega_c:
        return "short_time", 0.5 * j.a * (j.omega_c * t) ** 2
    if t < 1.0 / omega_1:
        return "vacuum", j.a * math.log(j.omega_c * t)
    return "thermal", j.a * t / t_t


def _bit_sum(x):
    return bin(x).count("1")


def coherence_weight(m, n, coupling) -> int:
    """Integer exponent weight multiplying F_vac + F_th for the pair (m, n)."""
    if coupling == "same_reservoir":
        return (_bit_sum(m) - _bit_sum(n)) ** 2
    if coupling == "different_reservoirs":
        return _bit_sum(m ^ n)
    raise PhysicsError(f"unknown coupling {coupling!r}")


def n_qubit_coherence(n_qubits, m, n, coupling, decay) -> float:
    """Coherence factor exp(-weight * decay) between basis states m and n.

    coupling = "same_reservoir": weight = (sum_j m_j - sum_j n_j)^2, so pairs
    with equal excitation number are untouched (decoherence-free subspace).
    coupling = "different_reservoirs": weight = Hamming distance, all pairs
    decay and the worst case grows like N instead of N^2.
    """
    if not (0 <= m < 2 ** n_qubits and 0 <= n < 2 ** n_qubits):
        raise PhysicsError("basis indices out of range")
    return math.exp(-coherence_weight(m, n, coupling) * decay)


def dfs_states(n_qubits):
    """Basis-index groups with equal excitation number (collective coupling).

    Superpositions inside one group are decoherence-free; the largest group
    has binomial(N, floor(N/2)) members.
    """
    groups = [[] for _ in range(n_qubits + 1)]
    for idx in range(2 ** n_qubits):
        groups[_bit_sum(idx)].append(idx)
    return groups
