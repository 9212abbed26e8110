"""Weak-coupling master-equation pipeline.

Decomposes coupling operators into energy-transition (Bohr-frequency)
components, evaluates bath rate and shift matrices at those frequencies,
and assembles the rotating-wave generator: per-frequency rate-matrix
diagonalization yields jump channels, the shift matrix yields a
renormalization hamiltonian commuting with the system one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PhysicsError
from .lindblad import LindbladGenerator
from .operator_core import TAU_HERM, as_operator, dag, herm_part

# eigenvalue noise must not split a rotating-wave block in two
_BOHR_MERGE = 1e-9
_PSD_FLOOR = -1e-10
_BLOCK_DROP = 1e-14


@dataclass(frozen=True)
class BathSpectrum:
    """Rate and shift matrices of the bath, as functions of frequency.

    gamma(omega) must return a hermitian positive-semidefinite KxK matrix,
    S(omega) a hermitian KxK matrix, where K is the number of coupling
    operators. Both are only ever evaluated at Bohr frequencies.
    """

    gamma: object
    shift: object


@dataclass(frozen=True)
class EigenoperatorDecomposition:
    """Coupling operators split by the energy quantum they remove.

    ops maps each Bohr frequency to one component per coupling operator;
    summing a component over all frequencies restores the coupling operator,
    and negating the frequency transposes to the adjoint component.
    """

    bohr_frequencies: tuple
    ops: dict
    hamiltonian: np.ndarray
    degenerate: bool = False
    min_bohr_gap: float = field(default=float("inf"))

    def __post_init__(self):
        freqs = self.bohr_frequencies
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise PhysicsError("bohr frequencies must be sorted and distinct")
        if set(freqs) != set(self.ops):
            raise PhysicsError("ops must be keyed by the bohr frequencies")


def _energy_groups(vals: np.ndarray, tol: float):
    groups = [[0]]
    for i in range(1, vals.size):
        if vals[i] - vals[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def decompose_eigenoperators(h, coupling_ops) -> EigenoperatorDecomposition:
    """Split each coupling operator into fixed-energy-transfer components."""
    h = as_operator(h)
    if np.max(np.abs(h - dag(h))) > TAU_HERM:
        raise PhysicsError("hamiltonian must be hermitian")
    ops = [as_operator(a) for a in coupling_ops]
    if not ops:
        raise PhysicsError("need at least one coupling operator")
    for a in ops:
        if a.shape != h.shape:
            raise DimensionError("coupling operator dimension does not match hamiltonian")
        if np.max(np.abs(a - dag(a))) > TAU_HERM:
            raise PhysicsError("coupling operators must be hermitian")

    vals, vecs = np.linalg.eigh(h)
    tol = _BOHR_MERGE * max(1.0, float(np.linalg.norm(h, 2)))
    groups = _energy_groups(vals, tol)
    projectors = [vecs[:, g] @ vecs[:, g].conj().T for g in groups]
    energies = [float(np.mean(vals[g])) for g in groups]

    drop = _BLOCK_DROP * max(1.0, max(float(np.linalg.norm(a)) for a in ops))
    freqs: list = []
    blocks: list = []
    for gi, (p_low, e_low) in enumerate(zip(projectors, energies)):
        for gj, (p_high, e_high) in enumerate(zip(projectors, energies)):
            omega = e_high - e_low
            parts = [p_low @ a @ p_high for a in ops]
            if max(float(np.linalg.norm(part)) for part in parts) < drop:
                continue
            for idx, known in enumerate(freqs):
                if abs(omega - known) <= tol:
                    blocks[idx] = [b + p for b, p in zip(blocks[idx], parts)]
                    break
            else:
                freqs.append(omega)
                blocks.append(parts)

    order = np.argsort(freqs)
    sorted_freqs = tuple(freqs[i] for i in order)
    op_map = {freqs[i]: tuple(blocks[i]) for i in order}
    gaps = np.diff(sorted_freqs)
    return EigenoperatorDecomposition(
        bohr_frequencies=sorted_freqs,
        ops=op_map,
        hamiltonian=h,
        degenerate=any(len(g) > 1 for g in groups),
        min_bohr_gap=float(gaps.min()) if gaps.size else float("inf"),
    )


def _spectrum_matrix(func, omega: float, dim: int, what: str) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(func(omega), dtype=complex))
    if mat.shape != (dim, dim):
        raise DimensionError(
            f"{what} matrix at bohr frequency {omega:.6g} has shape {mat.shape}, "
            f"expected ({dim}, {dim})")
    if np.max(np.abs(mat - dag(mat))) > TAU_HERM:
        raise PhysicsError(f"{what} matrix not hermitian at bohr frequency {omega:.6g}")
    return mat


def lamb_shift(decomp: EigenoperatorDecomposition, spectrum: BathSpectrum) -> np.ndarray:
    """Energy renormalization sum_{omega,k,l} S_kl(omega) A_k(omega)† A_l(omega)."""
    dim = decomp.hamiltonian.shape[0]
    shift = np.zeros((dim, dim), dtype=complex)
    if not decomp.bohr_frequencies:
        return shift
    n_ops = len(next(iter(decomp.ops.values())))
    for omega in decomp.bohr_frequencies:
        smat = _spectrum_matrix(spectrum.shift, omega, n_ops, "shift")
        parts = decomp.ops[omega]
        for k in range(n_ops):
            for l in range(n_ops):
                if smat[k, l] != 0:
                    shift += smat[k, l] * (dag(parts[k]) @ parts[l])
    return herm_part(shift)


def build_secular_generator(decomp: EigenoperatorDecomposition,
                            spectrum: BathSpectrum) -> LindbladGenerator:
    """Rotating-wave generator: per-frequency rate matrices diagonalized into
    jump channels, shift matrices folded into the hamiltonian."""
    if not decomp.bohr_frequencies:
        return LindbladGenerator(decomp.hamiltonian, ())
    n_ops = len(next(iter(decomp.ops.values())))
    channels = []
    for omega in decomp.bohr_frequencies:
        gmat = _spectrum_matrix(spectrum.gamma, omega, n_ops, "rate")
        rates, modes = np.linalg.eigh(gmat)
        if rates.min() < _PSD_FLOOR * max(1.0, float(rates.max(initial=0.0))):
            raise PhysicsError(
                f"rate matrix not positive semidefinite at bohr frequency {omega:.6g}")
        parts = decomp.ops[omega]
        for j in range(n_ops):
            rate = float(rates[j])
            if rate <= _BLOCK_DROP * max(1.0, float(rates.max())):
                continue
            op = sum(modes[l, j].conjugate() * parts[l] for l in range(n_ops))
            channels.append((rate, op))
    h_total = herm_part(decomp.hamiltonian + lamb_shift(decomp, spectrum))
    return LindbladGenerator(h_total, tuple(channels))


def split_halfline_transform(half_transform):
    """Split a one-sided bath transform into its rate and shift parts:
    gamma = G + G†, S = (G - G†)/2i, so that G = gamma/2 + iS."""

    def gamma(omega):
        g = np.atleast_2d(np.asarray(half_transform(omega), dtype=complex))
        return g + dag(g)

    def shift(omega):
        g = np.atleast_2d(np.asarray(half_transform(omega), dtype=complex))
        return (g - dag(g)) / 2j

    return gamma, shift
