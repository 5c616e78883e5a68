"""Similarity transformation between stochastic generators and symmetric
Hamiltonians, plus exact diagonalization with sign-fixed eigenvectors.

A detailed-balance generator W at inverse temperature beta maps to

    H = -D W D^{-1},   D = diag(exp(beta * E / 2))

which is symmetric, shares W's spectrum up to sign, and annihilates the
square-root-Gibbs vector exp(-beta*E/2). Probability vectors map to wave
vectors through psi = D P (not normalized).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import DegeneracyError, MappingError
from .ising import IsingModel, h0_diagonal
from .markov import family_code, flip_tables

EXP_SAFE = 700.0
SYMMETRY_TOL = 1e-10
DEGENERACY_FLOOR = 1e-8


def _check_exponents(beta: float, h0: np.ndarray, what: str) -> None:
    worst = float(beta) * float(np.abs(h0).max(initial=0.0))
    if worst > EXP_SAFE:
        raise MappingError(f"{what}: |beta*E| reaches {worst:.3g} > {EXP_SAFE}, "
                           "exponentials would overflow")


@dataclass(frozen=True)
class MappedHamiltonian:
    """Symmetric mapped Hamiltonian with the beta it was built at."""

    matrix: np.ndarray
    beta: float
    provenance: str  # from-W | from-rates | closed-form-1d

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """H_total = H_mapped - (beta_dot / (2 tau)) * diag(E); the drive term is O(1/tau)."""

    matrix: np.ndarray
    tau: float
    beta_dot: float


def map_generator(w: np.ndarray, beta: float, h0: np.ndarray) -> MappedHamiltonian:
    """Conjugate a detailed-balance generator into its symmetric form.

    Raises MappingError if the result is not symmetric, which happens exactly
    when detailed balance was broken upstream.
    """
    h0 = np.asarray(h0, dtype=np.float64)
    _check_exponents(beta, h0, "map_generator")
    d = np.exp(0.5 * beta * h0)
    h = -(d[:, None] * w) / d[None, :]
    scale = max(1.0, float(np.abs(h).max()))
    asym = float(np.abs(h - h.T).max())
    if asym > SYMMETRY_TOL * scale:
        raise MappingError(f"mapped matrix asymmetry {asym:.3g} exceeds "
                           f"{SYMMETRY_TOL:.0e} * scale; generator violates detailed balance")
    return MappedHamiltonian(matrix=0.5 * (h + h.T), beta=float(beta), provenance="from-W")


def mapped_from_model(model: IsingModel, beta: float, family: str = "glauber") -> MappedHamiltonian:
    """Build the symmetric mapped Hamiltonian directly from the rate tables
    (exactly symmetric by construction; no large intermediates)."""
    flip_idx, delta_e = flip_tables(model)
    h = _kernels.build_mapped(flip_idx, delta_e, float(beta), family_code(family))
    return MappedHamiltonian(matrix=h, beta=float(beta), provenance="from-rates")


def equilibrium_mode(beta: float, h0: np.ndarray) -> np.ndarray:
    """Normalized zero mode: exp(-beta*E/2) componentwise, unit 2-norm."""
    v = np.exp(-0.5 * beta * np.asarray(h0, dtype=np.float64))
    return v / np.linalg.norm(v)


def psi_from_p(p: np.ndarray, beta: float, h0: np.ndarray) -> np.ndarray:
    """Wave vector exp(beta*E/2) * P; deliberately not normalized."""
    h0 = np.asarray(h0, dtype=np.float64)
    _check_exponents(beta, h0, "psi_from_p")
    return np.exp(0.5 * beta * h0) * np.asarray(p, dtype=np.float64)


def p_from_psi(psi: np.ndarray, beta: float, h0: np.ndarray) -> np.ndarray:
    """Inverse map exp(-beta*E/2) * psi. For a zero-energy configuration the
    probability equals the wave-vector component exactly."""
    h0 = np.asarray(h0, dtype=np.float64)
    _check_exponents(beta, h0, "p_from_psi")
    return np.exp(-0.5 * beta * h0) * np.asarray(psi, dtype=np.float64)


def chain_closed_form(n_spins: int, beta_j: float) -> MappedHamiltonian:
    """Closed-form mapped Hamiltonian of the periodic uniform chain under
    heat-bath rates, assembled from spin operators in the bit basis:

        N/2 - tanh(2x)/2 * sum_j z_j z_{j+1}
            - 1/(2 cosh 2x) * sum_j (cosh^2 x - sinh^2 x * z_{j-1} z_{j+1}) X_j

    with x = beta*J. Needs n >= 3 so the three sites j-1, j, j+1 are distinct.
    """
    if n_spins < 3:
        raise ValueError(f"closed form needs n_spins >= 3, got {n_spins}")
    x = float(beta_j)
    dim = 1 << n_spins
    idx = np.arange(dim)
    z = [(((idx >> j) & 1) * 2 - 1).astype(np.float64) for j in range(n_spins)]

    zz_sum = sum(z[j] * z[(j + 1) % n_spins] for j in range(n_spins))
    h = np.zeros((dim, dim))
    h[idx, idx] = 0.5 * n_spins - 0.5 * np.tanh(2 * x) * zz_sum

    cosh2, sinh2 = np.cosh(x) ** 2, np.sinh(x) ** 2
    inv = 1.0 / (2.0 * np.cosh(2 * x))
    for j in range(n_spins):
        coeff = inv * (cosh2 - sinh2 * z[(j - 1) % n_spins] * z[(j + 1) % n_spins])
        h[idx ^ (1 << j), idx] -= coeff
    return MappedHamiltonian(matrix=h, beta=x, provenance="closed-form-1d")


def chain_closed_form_dbeta(n_spins: int, beta_j: float) -> np.ndarray:
    """Analytic derivative of chain_closed_form with respect to x = beta*J."""
    if n_spins < 3:
        raise ValueError(f"closed form needs n_spins >= 3, got {n_spins}")
    x = float(beta_j)
    dim = 1 << n_spins
    idx = np.arange(dim)
    z = [(((idx >> j) & 1) * 2 - 1).astype(np.float64) for j in range(n_spins)]

    zz_sum = sum(z[j] * z[(j + 1) % n_spins] for j in range(n_spins))
    dh = np.zeros((dim, dim))
    dh[idx, idx] = -(1.0 / np.cosh(2 * x) ** 2) * zz_sum

    grad = np.sinh(2 * x) / (2.0 * np.cosh(2 * x) ** 2)
    for j in range(n_spins):
        dh[idx ^ (1 << j), idx] += grad * (1.0 + z[(j - 1) % n_spins] * z[(j + 1) % n_spins])
    return dh


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues with orthonormal, sign-fixed eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sign_convention: str = "largest-positive"

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    def level_gap(self, j: int, k: int = 0) -> float:
        return float(self.eigenvalues[j] - self.eigenvalues[k])

    def near_degenerate_pairs(self, floor: float = DEGENERACY_FLOOR):
        diffs = np.diff(self.eigenvalues)
        return [(int(i), int(i) + 1) for i in np.flatnonzero(diffs < floor)]

    def require_resolved(self, j: int, floor: float = DEGENERACY_FLOOR) -> None:
        if abs(self.level_gap(j)) < floor:
            raise DegeneracyError(
                f"level {j} sits {self.level_gap(j):.3g} above the ground level, "
                f"below the degeneracy floor {floor:.0e}")


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    pivot = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs[None, :]


def eigendecompose(h, symmetry_tol: float = SYMMETRY_TOL) -> SpectralData:
    """Full symmetric eigendecomposition with the largest-magnitude component
    of each eigenvector made positive."""
    matrix = h.matrix if isinstance(h, MappedHamiltonian) else np.asarray(h, dtype=np.float64)
    scale = max(1.0, float(np.abs(matrix).max()))
    if float(np.abs(matrix - matrix.T).max()) > symmetry_tol * scale:
        raise MappingError("eigendecompose expects a symmetric matrix")
    vals, vecs = scipy.linalg.eigh(matrix)
    return SpectralData(eigenvalues=vals, eigenvectors=_fix_signs(vecs))


def align_signs(spectral: SpectralData, reference: SpectralData):
    """Flip eigenvector signs to continue the reference's convention.

    Returns the aligned data and the per-level overlaps with the reference
    (after flipping); overlaps well below 1 indicate crossing or mixing.
    """
    overlaps = np.einsum("ij,ij->j", reference.eigenvectors, spectral.eigenvectors)
    signs = np.where(overlaps < 0, -1.0, 1.0)
    aligned = SpectralData(
        eigenvalues=spectral.eigenvalues,
        eigenvectors=spectral.eigenvectors * signs[None, :],
        sign_convention="tracked",
    )
    return aligned, overlaps * signs


def spectral_grid(h_of_s, s_values) -> list[SpectralData]:
    """Eigendecompose H(s) along a grid with continuity-tracked signs."""
    out = []
    for s in s_values:
        spec = eigendecompose(h_of_s(float(s)))
        if out:
            spec, _ = align_signs(spec, out[-1])
        out.append(spec)
    return out


def effective_hamiltonian(mapped, h0: np.ndarray, beta_dot: float, tau: float) -> EffectiveHamiltonian:
    """H_total at finite tau: the mapped Hamiltonian minus the cooling drive."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    matrix = mapped.matrix if isinstance(mapped, MappedHamiltonian) else np.asarray(mapped, dtype=np.float64)
    total = matrix.copy()
    shift = (0.5 * beta_dot / tau) * np.asarray(h0, dtype=np.float64)
    total[np.diag_indices_from(total)] -= shift
    return EffectiveHamiltonian(matrix=total, tau=float(tau), beta_dot=float(beta_dot))
