"""Dense linear-algebra substrate for finite-dimensional open quantum systems.

Everything operates on plain complex numpy arrays. Density operators are
hermitian, unit-trace, positive matrices; :func:`check_density` enforces this
at the module tolerances. Superoperators are (d*d, d*d) matrices acting on
column-stacked operators, see :func:`vectorize`.

Natural units hbar = k_B = 1 are assumed throughout the package; conversion
to and from SI happens only at the CLI boundary.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, PhysicsError

# Double-precision dense algebra at dims up to a few hundred.
TAU_HERM = 1e-10
TAU_TRACE = 1e-10
TAU_POS = 1e-8


def as_operator(a) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PhysicsError("operator has non-finite entries")
    return a


def dag(a) -> np.ndarray:
    return np.asarray(a).conj().T


def herm_part(a) -> np.ndarray:
    return 0.5 * (a + dag(a))


def check_density(rho, tau_herm=TAU_HERM, tau_trace=TAU_TRACE, tau_pos=TAU_POS) -> np.ndarray:
    """Validate a density operator and return it unchanged.

    Raises PhysicsError if hermiticity, unit trace, or positivity (smallest
    eigenvalue >= -tau_pos) fails.
    """
    rho = as_operator(rho)
    herm_defect = np.max(np.abs(rho - dag(rho)))
    if herm_defect > tau_herm:
        raise PhysicsError(f"not hermitian: defect {herm_defect:.2e} > {tau_herm:.0e}")
    tr_defect = abs(rho.trace() - 1.0)
    if tr_defect > tau_trace:
        raise PhysicsError(f"trace off unity by {tr_defect:.2e} > {tau_trace:.0e}")
    wmin = np.linalg.eigvalsh(herm_part(rho)).min()
    if wmin < -tau_pos:
        raise PhysicsError(f"negative eigenvalue {wmin:.2e} below -{tau_pos:.0e}")
    return rho


# -- column-stacking vectorization --------------------------------------------
#
# vec(A X B) = (B.T kron A) vec(X) under column stacking; spre/spost/sandwich
# below encode exactly that identity.

def vectorize(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return a.reshape(-1, order="F")


def devectorize(v, dim=None) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionError(f"vector of length {v.size} is not dim^2")
    return v.reshape(dim, dim, order="F")


def spre(a) -> np.ndarray:
    """Superoperator for X -> A X."""
    a = as_operator(a)
    return np.kron(np.eye(a.shape[0]), a)


def spost(b) -> np.ndarray:
    """Superoperator for X -> X B."""
    b = as_operator(b)
    return np.kron(b.T, np.eye(b.shape[0]))


def sandwich(a, b) -> np.ndarray:
    """Superoperator for X -> A X B."""
    a = as_operator(a)
    b = as_operator(b)
    return np.kron(b.T, a)


# -- core operations -----------------------------------------------------------

def partial_trace(rho_tot, dims, keep) -> np.ndarray:
    """Trace out all subsystems except ``keep``.

    Parameters
    ----------
    rho_tot : square matrix on the tensor-product space
    dims : ordered subsystem dimensions, product must match rho_tot
    keep : index into ``dims`` of the subsystem to keep
    """
    rho_tot = as_operator(rho_tot)
    dims = [int(d) for d in dims]
    if any(d <= 0 for d in dims):
        raise DimensionError(f"nonpositive subsystem dimension in {dims}")
    total = int(np.prod(dims))
    if total != rho_tot.shape[0]:
        raise DimensionError(
            f"dims {dims} give total {total}, matrix has dimension {rho_tot.shape[0]}")
    n = len(dims)
    if not 0 <= keep < n:
        raise DimensionError(f"keep={keep} out of range for {n} subsystems")
    t = rho_tot.reshape(dims + dims)
    row = list(range(n))
    col = list(range(n))
    col[keep] = n  # distinct output label; all other axes contract pairwise
    return np.einsum(t, row + col, [keep, n])


def expm_apply(superop, rho, t) -> np.ndarray:
    """Apply exp(superop * t) to a vectorized operator and reshape back.

    Scaling-and-squaring Pade exponential; exact semigroup step for any
    time-independent generator.
    """
    superop = as_operator(superop)
    rho = as_operator(rho)
    if t < 0:
        raise PhysicsError(f"propagation time must be nonnegative, got {t}")
    d = rho.shape[0]
    if superop.shape[0] != d * d:
        raise DimensionError(
            f"superoperator dim {superop.shape[0]} does not match operator dim {d}")
    if t == 0:
        return rho.copy()
    out = expm(superop * t) @ vectorize(rho)
    return devectorize(out, d)


def trace_distance(rho, sigma) -> float:
    """(1/2) tr|rho - sigma| for hermitian arguments."""
    rho = as_operator(rho)
    sigma = as_operator(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    w = np.linalg.eigvalsh(herm_part(rho - sigma))
    return float(0.5 * np.sum(np.abs(w)))


def psd_sqrt(a) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix (eigenvalues clipped at 0)."""
    a = as_operator(a)
    w, u = np.linalg.eigh(herm_part(a))
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ dag(u)


def fidelity(rho, sigma) -> float:
    """Squared Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    For pure states this reduces to the overlap |<psi|phi>|^2.
    """
    rho = as_operator(rho)
    sigma = as_operator(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    f = float(np.sum(s) ** 2)
    return min(max(f, 0.0), 1.0)
