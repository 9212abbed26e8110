"""Stochastic jump unravelling of Lindblad dynamics.

Piecewise-deterministic trajectories: non-hermitian no-jump evolution
under H_C = H - (i/2) sum_k gamma_k L_k†L_k, waiting times sampled by
inverting the survival probability, jump-channel selection, records with
their probability densities, and ensemble reconstruction of the
deterministic master-equation solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DimensionError, PhysicsError
from .lindblad import LindbladGenerator
from .operator_core import as_operator, dag

_EXPM_DIM_MAX = 64
# eigenbasis evaluation of exp(-i tau H_C) is O(dim^2) per tau instead of a
# fresh matrix exponential, but only trustworthy away from defective spectra
_EIG_COND_MAX = 1e8
_GRID_POINTS = 256
_BISECT_REL = 1e-10
_DARK_WEIGHT = 1e-14


def effective_hamiltonian(gen: LindbladGenerator) -> np.ndarray:
    """Non-hermitian drift H - (i/2) sum_k gamma_k L_k† L_k."""
    h_c = gen.hamiltonian.astype(complex).copy()
    for rate, op in gen.channels:
        h_c -= 0.5j * rate * (dag(op) @ op)
    return h_c


class _NoJumpPropagator:
    """Caches whatever makes exp(-i tau H_C) psi cheapest at this dimension."""

    def __init__(self, gen: LindbladGenerator):
        self.h_c = effective_hamiltonian(gen)
        self.dim = self.h_c.shape[0]
        self.mode = "rk"
        if self.dim <= _EXPM_DIM_MAX:
            self.mode = "expm"
            vals, vecs = np.linalg.eig(self.h_c)
            if np.linalg.cond(vecs) < _EIG_COND_MAX:
                self.mode = "eig"
                self._vals = vals
                self._vecs = vecs
                self._inv = np.linalg.inv(vecs)

    def apply(self, psi, tau: float) -> np.ndarray:
        if tau == 0.0:
            return np.array(psi, dtype=complex)
        if self.mode == "eig":
            return self._vecs @ (np.exp(-1j * tau * self._vals) * (self._inv @ psi))
        if self.mode == "expm":
            return expm(-1j * tau * self.h_c) @ psi
        sol = solve_ivp(lambda _, y: -1j * (self.h_c @ y), (0.0, tau),
                        np.asarray(psi, dtype=complex), method="RK45",
                        rtol=1e-10, atol=1e-13)
        if not sol.success:
            raise PhysicsError(f"no-jump propagation failed: {sol.message}")
        return sol.y[:, -1]

    def norm_sq(self, psi, taus) -> np.ndarray:
        """Survival probabilities |exp(-i tau H_C) psi|^2 on an array of times."""
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        if self.mode == "eig":
            w = self._inv @ psi
            phases = np.exp(-1j * taus[:, None] * self._vals[None, :])
            out = (phases * w[None, :]) @ self._vecs.T
            return np.einsum("ij,ij->i", out, out.conj()).real
        return np.array([float(np.vdot(v, v).real)
                         for v in (self.apply(psi, t) for t in taus)])


def no_jump_propagate(psi, gen: LindbladGenerator, tau: float) -> np.ndarray:
    """Unnormalized conditioned state exp(-i tau H_C) psi; its squared norm
    is the probability that no jump occurred up to tau."""
    if tau < 0:
        raise PhysicsError("tau must be nonnegative")
    return _NoJumpPropagator(gen).apply(np.asarray(psi, dtype=complex), tau)


def _first_crossing(prop: _NoJumpPropagator, psi, u: float, t_max: float):
    """First tau with survival(tau) = u, or None if survival(t_max) > u."""
    grid = np.linspace(0.0, t_max, _GRID_POINTS + 1)
    surv = prop.norm_sq(psi, grid)
    below = np.nonzero(surv <= u)[0]
    if below.size == 0:
        return None
    j = int(below[0])
    if j == 0:
        return 0.0
    lo, hi = grid[j - 1], grid[j]
    while hi - lo > _BISECT_REL * hi:
        mid = 0.5 * (lo + hi)
        if prop.norm_sq(psi, mid)[0] <= u:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def sample_jump_time(psi, gen: LindbladGenerator, u: float, t_max: float):
    """Waiting time by survival inversion: first tau with
    |no_jump_propagate(psi, tau)|^2 = u; None when no jump occurs by t_max."""
    if not 0.0 < u < 1.0:
        raise PhysicsError("u must lie in (0, 1)")
    if t_max <= 0:
        raise PhysicsError("t_max must be positive")
    return _first_crossing(_NoJumpPropagator(gen), np.asarray(psi, dtype=complex),
                           float(u), float(t_max))


def sample_jump_times(psi, gen: LindbladGenerator, us, t_max: float) -> np.ndarray:
    """Vectorized sibling of sample_jump_time; no-jump entries come back inf."""
    us = np.asarray(us, dtype=float)
    if np.any((us <= 0.0) | (us >= 1.0)):
        raise PhysicsError("u must lie in (0, 1)")
    if t_max <= 0:
        raise PhysicsError("t_max must be positive")
    prop = _NoJumpPropagator(gen)
    psi = np.asarray(psi, dtype=complex)
    if prop.mode != "eig":
        return np.array([t if (t := _first_crossing(prop, psi, u, t_max)) is not None
                         else np.inf for u in us])

    grid = np.linspace(0.0, t_max, _GRID_POINTS + 1)
    surv = prop.norm_sq(psi, grid)
    # first grid index where survival drops to u, per sample
    idx = np.searchsorted(-surv, -us, side="left")
    out = np.full(us.shape, np.inf)
    active = idx <= _GRID_POINTS
    lo = np.where(idx >= 1, grid[np.minimum(idx, _GRID_POINTS) - 1], 0.0)
    hi = grid[np.minimum(idx, _GRID_POINTS)]
    work = active & (idx >= 1)
    lo_w, hi_w, u_w = lo[work].copy(), hi[work].copy(), us[work]
    while lo_w.size and np.any(hi_w - lo_w > _BISECT_REL * hi_w):
        mid = 0.5 * (lo_w + hi_w)
        s_mid = prop.norm_sq(psi, mid)
        drop = s_mid <= u_w
        hi_w = np.where(drop, mid, hi_w)
        lo_w = np.where(drop, lo_w, mid)
    out[work] = 0.5 * (lo_w + hi_w)
    out[active & (idx == 0)] = 0.0
    return out


def apply_jump(psi, gen: LindbladGenerator, rng: Generator):
    """Pick channel k with probability gamma_k |L_k psi|^2 / total and collapse."""
    psi = np.asarray(psi, dtype=complex)
    jumps = [np.sqrt(rate) * (op @ psi) for rate, op in gen.channels]
    weights = np.array([float(np.vdot(v, v).real) for v in jumps])
    total = weights.sum()
    if total <= _DARK_WEIGHT:
        raise PhysicsError("all jump amplitudes vanish: dark state cannot jump")
    k = int(np.searchsorted(np.cumsum(weights) / total, rng.random(), side="right"))
    k = min(k, len(jumps) - 1)
    out = jumps[k]
    return k, out / np.linalg.norm(out)


@dataclass(frozen=True)
class JumpRecord:
    """Ordered click times with their channels over a fixed horizon."""

    events: tuple
    horizon: float

    def __post_init__(self):
        if self.horizon < 0:
            raise PhysicsError("horizon must be nonnegative")
        last = 0.0
        for t, _ in self.events:
            if not last < t < self.horizon:
                raise PhysicsError("event times must be strictly ordered inside the horizon")
            last = t


@dataclass
class TrajectoryState:
    """Mutable loop state of one trajectory between normalization points."""

    psi: np.ndarray
    t: float
    events: list

    def normalize(self):
        n = np.linalg.norm(self.psi)
        if n == 0.0:
            raise PhysicsError("trajectory state collapsed to zero")
        self.psi = self.psi / n


def _stream(base_seed: int, index: int) -> Generator:
    # counter-based streams: (seed, index) keys are independent by design,
    # so parallel trajectory order can never change the draws
    return Generator(Philox(key=np.array([base_seed, index], dtype=np.uint64)))


def _run(psi0, gen, horizon, rng, prop=None):
    prop = prop or _NoJumpPropagator(gen)
    state = TrajectoryState(np.asarray(psi0, dtype=complex).copy(), 0.0, [])
    while True:
        remaining = horizon - state.t
        if remaining <= 0:
            break
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        tau = _first_crossing(prop, state.psi, u, remaining)
        # a crossing rounded onto the horizon itself counts as no jump: the
        # record invariant keeps click times strictly inside the window
        if tau is None or state.t + tau >= horizon:
            state.psi = prop.apply(state.psi, remaining)
            state.normalize()
            state.t = horizon
            break
        state.psi = prop.apply(state.psi, tau)
        state.normalize()
        state.t += tau
        k, state.psi = apply_jump(state.psi, gen, rng)
        state.events.append((state.t, k))
    return JumpRecord(tuple(state.events), horizon), state.psi


def run_trajectory(psi0, gen: LindbladGenerator, horizon: float, seed: int):
    """One piecewise-deterministic trajectory; returns (record, final state)."""
    if horizon <= 0:
        raise PhysicsError("horizon must be positive")
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise PhysicsError("initial state must be normalized")
    return _run(psi0, gen, float(horizon), _stream(seed, 0))


def record_operator(record: JumpRecord, gen: LindbladGenerator) -> np.ndarray:
    """Compound conditioning operator M_R: no-jump stretches interleaved with
    the recorded jump operators, ending at the horizon."""
    prop = _NoJumpPropagator(gen)
    ops = [op for _, op in gen.channels]
    m = np.eye(gen.dim, dtype=complex)
    t_prev = 0.0
    for t_i, k_i in record.events:
        m = expm(-1j * (t_i - t_prev) * prop.h_c) @ m if prop.mode != "eig" else \
            prop._vecs @ (np.exp(-1j * (t_i - t_prev) * prop._vals)[:, None] * (prop._inv @ m))
        m = ops[k_i] @ m
        t_prev = t_i
    tail = record.horizon - t_prev
    m = expm(-1j * tail * prop.h_c) @ m if prop.mode != "eig" else \
        prop._vecs @ (np.exp(-1j * tail * prop._vals)[:, None] * (prop._inv @ m))
    return m


def record_probability_density(record: JumpRecord, rho0, gen: LindbladGenerator) -> float:
    """Density tr(M_R rho M_R†) prod_i gamma_{k_i} in the click times; for an
    empty record this is the plain no-jump probability."""
    rho0 = as_operator(rho0)
    if rho0.shape[0] != gen.dim:
        raise DimensionError("state dimension does not match generator")
    m = record_operator(record, gen)
    value = float(np.trace(m @ rho0 @ dag(m)).real)
    for _, k_i in record.events:
        value *= gen.channels[k_i][0]
    return max(value, 0.0)


def ensemble_average(psi0, gen: LindbladGenerator, horizon: float,
                     n_traj: int, base_seed: int) -> np.ndarray:
    """Mean projector over independent trajectories; converges to the
    master-equation state at the Monte-Carlo 1/sqrt(n) rate."""
    if n_traj < 1:
        raise PhysicsError("need at least one trajectory")
    psi0 = np.asarray(psi0, dtype=complex)
    prop = _NoJumpPropagator(gen)
    acc = np.zeros((gen.dim, gen.dim), dtype=complex)
    for i in range(n_traj):
        _, psi = _run(psi0, gen, float(horizon), _stream(base_seed, i), prop)
        acc += np.outer(psi, psi.conj())
    return acc / n_traj
