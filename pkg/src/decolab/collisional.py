"""Scattering-environment rates for heavy particles and discrete channels.

Everything here reduces to thermal averages of scattering amplitudes over a
Maxwell gas: the spatial localization rate and momentum-transfer gain rate
of an immobile heavy particle, and the complex rate tensor driving the
channel-basis master equation of a fixed scatterer with internal levels
(populations obey a rate equation, coherences pick up elastic dephasing).
Natural units: hbar = k_B = 1; masses and temperatures in matching units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_legendre, spherical_jn, spherical_yn

from .errors import DimensionError, PhysicsError, QuadratureError

_GL_START = 64
_GL_MAX = 8192
_GL_RTOL = 1e-10
# Maxwell weight exp(-s^2) at s = 8 leaves a relative tail below 1e-12
_SPEED_CUT = 8.0
_QUAD_OPTS = {"epsabs": 1e-13, "epsrel": 1e-11, "limit": 400}


@dataclass(frozen=True)
class GasModel:
    """Ideal Maxwell gas: number density, particle mass, temperature."""

    n_gas: float
    m: float
    temperature: float

    def __post_init__(self):
        if self.n_gas <= 0 or self.m <= 0 or self.temperature <= 0:
            raise PhysicsError("gas density, mass and temperature must be positive")

    @property
    def thermal_speed(self) -> float:
        return math.sqrt(2.0 * self.temperature / self.m)

    @property
    def mean_speed(self) -> float:
        return math.sqrt(8.0 * self.temperature / (math.pi * self.m))


def maxwell_speed_pdf(gas: GasModel, v) -> np.ndarray:
    """3D Maxwell-Boltzmann speed density 4 pi (m/2 pi T)^{3/2} v^2 e^{-mv^2/2T}."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise PhysicsError("speed must be nonnegative")
    pref = 4.0 * math.pi * (gas.m / (2.0 * math.pi * gas.temperature)) ** 1.5
    return pref * v**2 * np.exp(-gas.m * v**2 / (2.0 * gas.temperature))


@dataclass(frozen=True)
class IsotropicAmplitude:
    """Rotationally invariant scattering amplitude f(cos theta; E).

    The callable must accept a cos-theta array and a scalar incoming kinetic
    energy, returning complex amplitudes of dimension length.
    """

    f: object

    def __call__(self, cos_theta, energy):
        return np.asarray(self.f(cos_theta, energy), dtype=complex)


def constant_amplitude(value) -> IsotropicAmplitude:
    """Pure s-wave scatterer: the same complex length at every angle and energy."""
    value = complex(value)
    return IsotropicAmplitude(lambda c, e: np.full(np.shape(c), value, dtype=complex))


def hard_sphere_amplitude(radius: float, mass: float) -> IsotropicAmplitude:
    """Hard-sphere partial-wave sum, truncated once the phase shifts are
    negligible (tail below 1e-8 of the forward amplitude)."""
    if radius <= 0 or mass <= 0:
        raise PhysicsError("radius and mass must be positive")

    def f(cos_theta, energy):
        cos_theta = np.asarray(cos_theta, dtype=float)
        k = math.sqrt(max(2.0 * mass * float(energy), 0.0))
        x = k * radius
        if x < 1e-8:
            # s-wave limit: the scattering length equals the radius
            return np.full(cos_theta.shape, -radius, dtype=complex)
        ell_max = int(x + 8.0 * x ** (1.0 / 3.0) + 12.0)
        ells = np.arange(ell_max + 1)
        tan_delta = spherical_jn(ells, x) / spherical_yn(ells, x)
        t_ell = tan_delta / (1.0 - 1j * tan_delta)
        coeffs = (2 * ells + 1) * t_ell / k
        tail = abs(coeffs[-1])
        if tail > 1e-8 * max(np.abs(coeffs).sum(), 1e-300):
            raise QuadratureError("partial-wave sum did not converge")
        return np.polynomial.legendre.legval(cos_theta, coeffs)

    return IsotropicAmplitude(f)


_GL_CACHE: dict = {}


def _gl_rule(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _angular_integral(g) -> complex:
    """Integral of g over cos theta in [-1, 1], Gauss-Legendre nodes doubled
    until the value settles."""
    nodes, weights = _gl_rule(_GL_START)
    value = np.dot(weights, g(nodes))
    n = _GL_START
    while n < _GL_MAX:
        n *= 2
        nodes, weights = _gl_rule(n)
        refined = np.dot(weights, g(nodes))
        if abs(refined - value) <= _GL_RTOL * max(abs(refined), 1e-300):
            return refined
        value = refined
    raise QuadratureError("angular quadrature did not settle", estimate=value)


def _checked_quad(func, lo, hi, **kwargs):
    opts = dict(_QUAD_OPTS)
    opts.update(kwargs)
    value, abserr = quad(func, lo, hi, full_output=1, **opts)[:2]
    if abserr > 1e-6 * abs(value) + 1e-12:
        raise QuadratureError(
            f"speed quadrature error estimate {abserr:.2e} too large", estimate=value)
    return value


def _speed_average(gas: GasModel, g, s_lo: float = 0.0, complex_valued: bool = False):
    """Thermal average int dv nu(v) g(v), optionally restricted to v above a
    threshold expressed in thermal units s = v/sqrt(2T/m)."""
    vt = gas.thermal_speed
    pref = 4.0 / math.sqrt(math.pi)

    def integrand(s):
        return pref * s * s * math.exp(-s * s) * g(vt * s)

    s_hi = math.sqrt(s_lo * s_lo + _SPEED_CUT * _SPEED_CUT)
    if complex_valued:
        re = _checked_quad(lambda s: integrand(s).real, s_lo, s_hi)
        im = quad(lambda s: integrand(s).imag, s_lo, s_hi, **_QUAD_OPTS)[0]
        return complex(re, im)
    return _checked_quad(integrand, s_lo, s_hi)


def total_cross_section(amp: IsotropicAmplitude, energy: float) -> float:
    """sigma(E) = 2 pi int |f|^2 dcos."""
    value = _angular_integral(lambda c: np.abs(amp(c, energy)) ** 2)
    return 2.0 * math.pi * float(value.real)


def saturation_rate(amp: IsotropicAmplitude, gas: GasModel) -> float:
    """Total collision rate n <sigma v>: the large-distance localization limit."""
    return gas.n_gas * _speed_average(
        gas, lambda v: v * total_cross_section(amp, 0.5 * gas.m * v * v))


def _sinc_weighted_integral(amp: IsotropicAmplitude, energy: float, a: float):
    """int |f(cos)|^2 sinc(a sqrt(2(1-cos))) dcos.

    At a = 0 this must cancel the cross-section term exactly, so the same
    Gauss-Legendre rule is reused; otherwise the substitution
    u = sqrt(2(1-cos)) turns it into a finite sin-transform, which handles
    arbitrarily many oscillations without node explosion.
    """
    if a == 0.0:
        return float(_angular_integral(lambda c: np.abs(amp(c, energy)) ** 2).real)

    def g(u):
        return float(np.abs(amp(np.array([1.0 - 0.5 * u * u]), energy))[0] ** 2)

    value, abserr = quad(g, 0.0, 2.0, weight="sin", wvar=a,
                         epsabs=1e-13, epsrel=1e-11, limit=400, full_output=1)[:2]
    if abserr > 1e-6 * abs(value) + 1e-12:
        raise QuadratureError("oscillatory angular quadrature did not converge",
                              estimate=value / a)
    return value / a


def _osc_speed_average(amp: IsotropicAmplitude, gas: GasModel, x: float,
                       scale: float) -> float:
    """Thermal average of the oscillatory sinc term with the integration
    order swapped: the sin weight sits in the speed variable, so the phase
    m v x can be arbitrarily large without defeating the outer quadrature.
    The outer angle integrand is a Fourier tail of a smooth speed profile
    and decays monotonically."""
    beta = gas.m * gas.thermal_speed * x

    def inner(u):
        cos_theta = np.array([1.0 - 0.5 * u * u])

        def h(s):
            v = gas.thermal_speed * s
            f_val = amp(cos_theta, 0.5 * gas.m * v * v)[0]
            return s * s * math.exp(-s * s) * (abs(f_val) ** 2)

        return quad(h, 0.0, _SPEED_CUT, weight="sin", wvar=beta * u,
                    epsabs=1e-13, epsrel=1e-11, limit=400)[0]

    outer, abserr = quad(inner, 0.0, 2.0, full_output=1, **_QUAD_OPTS)[:2]
    pref = gas.n_gas * (8.0 * math.sqrt(math.pi)) / (gas.m * x)
    if pref * abserr > 1e-8 * abs(scale):
        raise QuadratureError("oscillatory speed quadrature did not converge",
                              estimate=pref * outer)
    return pref * outer


# largest phase m v_typ x handled by per-speed quadrature before switching
# to the swapped-order route
_OSC_PHASE_SPLIT = 40.0


def localization_rate(amp: IsotropicAmplitude, gas: GasModel, x: float) -> float:
    """Decay rate of spatial coherence over separation x: thermal average of
    v [sigma(E) - 2 pi int |f|^2 sinc(2 sin(theta/2) m v x) dcos]; zero at
    x = 0, saturating at the total collision rate for large separation."""
    if x < 0:
        raise PhysicsError("separation must be nonnegative")
    beta = gas.m * gas.thermal_speed * x

    if beta <= _OSC_PHASE_SPLIT:
        def per_speed(v):
            energy = 0.5 * gas.m * v * v
            smooth = _sinc_weighted_integral(amp, energy, 0.0)
            osc = _sinc_weighted_integral(amp, energy, gas.m * v * x)
            return v * 2.0 * math.pi * (smooth - osc)

        return gas.n_gas * _speed_average(gas, per_speed)

    smooth = saturation_rate(amp, gas)
    return smooth - _osc_speed_average(amp, gas, x, scale=smooth)


def momentum_gain_rate(amp: IsotropicAmplitude, gas: GasModel, q_grid):
    """Isotropic momentum-transfer density M_in(Q).

    The energy-shell constraint is eliminated analytically (the incoming
    momentum component along Q is pinned to Q/2), leaving a single radial
    integral over incoming momenta p0 >= Q/2. Returns a callable with the
    supplied grid and its values attached as .grid / .grid_values; integrating
    M_in over all transfers recovers the total collision rate.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    if np.any(q_grid < 0):
        raise PhysicsError("momentum transfer must be nonnegative")
    m, temp, n = gas.m, gas.temperature, gas.n_gas
    p_th = math.sqrt(2.0 * m * temp)
    mu_pref = (2.0 * math.pi * m * temp) ** -1.5

    def m_in(q: float) -> float:
        if q < 0:
            raise PhysicsError("momentum transfer must be nonnegative")
        if q == 0.0:
            return math.inf

        def integrand(u):
            p0 = 0.5 * q + p_th * u
            mu = mu_pref * math.exp(-p0 * p0 / (2.0 * m * temp))
            if mu == 0.0:
                return 0.0
            cos_theta = 1.0 - q * q / (2.0 * p0 * p0)
            f_val = amp(np.array([cos_theta]), p0 * p0 / (2.0 * m))[0]
            return p0 * mu * abs(f_val) ** 2 * p_th

        radial = quad(integrand, 0.0, _SPEED_CUT, **_QUAD_OPTS)[0]
        return 2.0 * math.pi * n / (m * q) * radial

    m_in.grid = q_grid
    m_in.grid_values = np.array([m_in(q) for q in q_grid])
    return m_in


@dataclass(frozen=True)
class ChannelSpec:
    """Internal levels of a fixed scatterer with their transition amplitudes.

    amplitudes maps (final, initial) channel index pairs to amplitudes;
    missing pairs scatter with amplitude zero.
    """

    energies: tuple
    amplitudes: dict

    def __post_init__(self):
        if len(self.energies) < 1:
            raise PhysicsError("need at least one channel")
        if any(isinstance(e, complex) for e in self.energies):
            raise PhysicsError("channel energies must be real")
        n = len(self.energies)
        for pair in self.amplitudes:
            a, b = pair
            if not (0 <= a < n and 0 <= b < n):
                raise DimensionError(f"amplitude key {pair} outside channel range")

    @property
    def n_channels(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class RateTensor:
    """Complex rates M[final_pair, initial_pair] plus real channel shifts."""

    m: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        n = self.eps.size
        if self.m.shape != (n, n, n, n):
            raise DimensionError("rate tensor shape does not match channel count")
        diag = np.einsum("aabb->ab", self.m)
        if np.any(np.abs(diag.imag) > 1e-12) or np.any(diag.real < -1e-12):
            raise PhysicsError("population rates must be real and nonnegative")

    def loss_matrix(self) -> np.ndarray:
        return np.einsum("ggab->ab", self.m)


def energy_shifts(spec: ChannelSpec, gas: GasModel) -> np.ndarray:
    """Forward-scattering energy renormalization per channel:
    eps_a = -(2 pi n/m) <Re f_aa(forward)>."""
    shifts = np.zeros(spec.n_channels)
    for alpha in range(spec.n_channels):
        amp = spec.amplitudes.get((alpha, alpha))
        if amp is None:
            continue
        shifts[alpha] = -2.0 * math.pi * gas.n_gas / gas.m * _speed_average(
            gas, lambda v: float(amp(np.array([1.0]), 0.5 * gas.m * v * v)[0].real))
    return shifts


def _pair_rate(spec: ChannelSpec, gas: GasModel, alpha, beta, alpha0, beta0) -> complex:
    f_a = spec.amplitudes.get((alpha, alpha0))
    f_b = spec.amplitudes.get((beta, beta0))
    if f_a is None or f_b is None:
        return 0.0
    delta_e = spec.energies[alpha] - spec.energies[alpha0]
    s_lo = math.sqrt(max(delta_e, 0.0) / gas.temperature)

    def per_speed(v):
        energy = 0.5 * gas.m * v * v
        v_out = math.sqrt(max(v * v - 2.0 * delta_e / gas.m, 0.0))
        angular = _angular_integral(
            lambda c: f_a(c, energy) * np.conj(f_b(c, energy)))
        return v_out * 2.0 * math.pi * angular

    return gas.n_gas * _speed_average(gas, per_speed, s_lo=s_lo, complex_valued=True)


def dot_rate_tensor(spec: ChannelSpec, gas: GasModel) -> RateTensor:
    """Complex scattering rates between channel pairs.

    The energy selection factor (zero unless both pairs exchange the same
    quantum) is enforced exactly; upward transitions integrate only over gas
    speeds above threshold. Hermiticity under swapping both pairs is built in
    by mirroring conjugate cells."""
    n = spec.n_channels
    energies = np.asarray(spec.energies, dtype=float)
    chi_tol = 1e-9 * max(1.0, float(np.max(np.abs(energies))))
    m = np.zeros((n, n, n, n), dtype=complex)
    for alpha in range(n):
        for beta in range(n):
            for alpha0 in range(n):
                for beta0 in range(n):
                    cell = (alpha, beta, alpha0, beta0)
                    mirror = (beta, alpha, beta0, alpha0)
                    if mirror < cell:
                        m[cell] = np.conj(m[mirror])
                        continue
                    gap = (energies[alpha] - energies[alpha0]) \
                        - (energies[beta] - energies[beta0])
                    if abs(gap) > chi_tol:
                        continue
                    rate = _pair_rate(spec, gas, *cell)
                    # self-mirror cells integrate |f|^2, real up to complex
                    # multiply roundoff; drop the residue so hermiticity and
                    # the reality of population rates hold exactly
                    m[cell] = rate.real if mirror == cell else rate
    return RateTensor(m=m, eps=energy_shifts(spec, gas))


def elastic_dephasing_rate(amp_a: IsotropicAmplitude, amp_b: IsotropicAmplitude,
                           gas: GasModel) -> float:
    """Coherence decay between two elastic channels:
    pi n <v int |f_a - f_b|^2 dcos>. Vanishes only when the gas cannot
    distinguish the two channels."""

    def per_speed(v):
        energy = 0.5 * gas.m * v * v
        diff = _angular_integral(
            lambda c: np.abs(amp_a(c, energy) - amp_b(c, energy)) ** 2)
        return v * math.pi * float(diff.real)

    return gas.n_gas * _speed_average(gas, per_speed)


def dot_master_rhs(rho, spec: ChannelSpec, gas: GasModel,
                   tensor: RateTensor | None = None) -> np.ndarray:
    """Channel-basis master equation right-hand side: shifted-energy rotation,
    rate-tensor gain, and the trace-compensating loss term."""
    rho = np.asarray(rho, dtype=complex)
    n = spec.n_channels
    if rho.shape != (n, n):
        raise DimensionError("state dimension does not match channel count")
    if tensor is None:
        tensor = dot_rate_tensor(spec, gas)
    h = np.diag(np.asarray(spec.energies, dtype=float) + tensor.eps)
    gain = np.einsum("abij,ij->ab", tensor.m, rho)
    loss = tensor.loss_matrix().T
    return -1j * (h @ rho - rho @ h) + gain - 0.5 * (loss @ rho + rho @ loss)
