"""Imaginary-time evolution and its first-order slow-driving expansion.

The flow integrated here is -dpsi/ds = tau * H(s) * psi: linear and not
norm-conserving, so no normalization is ever applied. For a driven mapped
Hamiltonian the expansion quantities are

    excitation_coefficient   <j|dH/ds|0> / (E_j - E_0)^2        (per level j)
    depletion_rate           sum_k |<k|dH/ds|0>|^2 / (E_k-E_0)^3
    depletion_rate_mapped    (beta_dot^2/4) sum_j |<j|E|0>|^2 / (E_j-E_0)

and the first-order prediction for the final ground probability is
1 - (integral of the depletion rate) / tau.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import StabilityError
from .ising import GroundSet, IsingModel, h0_diagonal
from .markov import (MasterTrajectory, _plan_grid, _stage_betas, default_steps,
                     family_code, flip_tables, gibbs)
from .qmap import (DEGENERACY_FLOOR, SpectralData, align_signs, eigendecompose,
                   equilibrium_mode, psi_from_p)
from .schedule import Schedule

FD_DELTA = 1e-5


@dataclass(frozen=True)
class MappedFlow:
    """The s-dependent effective Hamiltonian generated by a model, a cooling
    schedule and a rate family; the matrix source fed to the integrator."""

    model: IsingModel
    schedule: Schedule
    family: str = "glauber"

    @property
    def h0(self) -> np.ndarray:
        return h0_diagonal(self.model)

    @property
    def tau(self) -> float:
        return self.schedule.tau

    def beta(self, s: float) -> float:
        return self.schedule.beta(s)

    def beta_dot(self, s: float) -> float:
        return self.schedule.beta_dot(s)

    def mapped_matrix(self, s: float) -> np.ndarray:
        flip_idx, delta_e = flip_tables(self.model)
        return _kernels.build_mapped(flip_idx, delta_e, self.beta(s), family_code(self.family))

    def total_matrix(self, s: float) -> np.ndarray:
        h = self.mapped_matrix(s)
        h[np.diag_indices_from(h)] -= (0.5 * self.beta_dot(s) / self.tau) * self.h0
        return h

    def dh_mapped(self, s: float, delta: float = FD_DELTA) -> np.ndarray:
        """Centered finite difference of the mapped matrix in s (one-sided at
        the interval ends), O(delta^2)."""
        if s - delta >= 0.0 and s + delta <= 1.0:
            return (self.mapped_matrix(s + delta) - self.mapped_matrix(s - delta)) / (2 * delta)
        sgn = 1.0 if s - delta < 0.0 else -1.0
        h0_, h1, h2 = (self.mapped_matrix(s), self.mapped_matrix(s + sgn * delta),
                       self.mapped_matrix(s + 2 * sgn * delta))
        return sgn * (-3.0 * h0_ + 4.0 * h1 - h2) / (2 * delta)

    def spectral(self, s: float) -> SpectralData:
        return eigendecompose(self.mapped_matrix(s))

    def equilibrium_psi(self, s: float = 0.0) -> np.ndarray:
        return psi_from_p(gibbs(self.model, self.beta(s)), self.beta(s), self.h0)

    def norm_bound(self, samples: int = 17) -> float:
        from ._kernels import _ref

        flip_idx, delta_e = flip_tables(self.model)
        code = family_code(self.family)
        worst = 0.0
        for s in np.linspace(0.0, 1.0, samples):
            x = self.beta(float(s)) * delta_e
            row = _ref._rates(x, code).sum(axis=1) + _ref._sym_offdiag(x, code).sum(axis=1)
            drive = abs(self.beta_dot(float(s))) / (2 * self.tau) * float(self.h0.max())
            worst = max(worst, float(row.max()) + drive)
        return worst


@dataclass(frozen=True)
class ImaginaryTimeTrajectory:
    """Unnormalized wave vectors on a uniform grid of scaled times."""

    s: np.ndarray
    psi: np.ndarray
    tau: float
    steps: int

    @property
    def final(self) -> np.ndarray:
        return self.psi[-1]


@dataclass(frozen=True)
class CoefficientTable:
    """Instantaneous-eigenbasis projections c_j(s) = <j(s)|psi(s)> together
    with level energies and the accumulated decay exponents phi_j(s)."""

    s: np.ndarray
    coefficients: np.ndarray
    energies: np.ndarray
    phases: np.ndarray


def integrate_imaginary_time(source, psi0=None, tau=None, steps=None,
                             store_points: int = 201) -> ImaginaryTimeTrajectory:
    """RK4 for -dpsi/ds = tau H(s) psi on s in [0, 1].

    `source` is either a MappedFlow (fast kernel path; psi0 defaults to the
    equilibrium wave vector at s=0 and tau to the schedule's) or a callable
    s -> dense symmetric matrix, in which case psi0 and tau are required.
    """
    if isinstance(source, MappedFlow):
        return _integrate_flow(source, psi0, steps, store_points)
    if psi0 is None or tau is None:
        raise ValueError("callable matrix sources require explicit psi0 and tau")
    return _integrate_dense(source, np.asarray(psi0, dtype=np.float64), float(tau),
                            steps, store_points)


def _integrate_flow(flow: MappedFlow, psi0, steps, store_points) -> ImaginaryTimeTrajectory:
    tau = flow.tau
    if steps is None:
        steps = default_steps(tau)
    steps, store_every = _plan_grid(int(steps), store_points)
    ds = 1.0 / steps

    norm = flow.norm_bound()
    if tau * norm * ds >= 0.5:
        needed = math.ceil(tau * norm / 0.5) + 1
        raise StabilityError(f"tau*||H||*ds = {tau * norm * ds:.3g} >= 0.5; "
                             f"raise steps to at least {needed}")

    if psi0 is None:
        psi0 = flow.equilibrium_psi()
    s_half, betas_half = _stage_betas(flow.schedule, steps)
    bdots_half = np.array([flow.schedule.beta_dot(s) for s in s_half])
    flip_idx, delta_e = flip_tables(flow.model)
    try:
        stored = _kernels.run_imtime_rk4(flip_idx, delta_e, flow.h0, betas_half, bdots_half,
                                         float(tau), ds, np.asarray(psi0, dtype=np.float64),
                                         store_every, family_code(flow.family))
    except FloatingPointError as exc:
        raise StabilityError(str(exc)) from exc
    s_grid = np.arange(stored.shape[0]) * (store_every * ds)
    return ImaginaryTimeTrajectory(s=s_grid, psi=stored, tau=tau, steps=steps)


def _integrate_dense(h_of_s, psi, tau, steps, store_points) -> ImaginaryTimeTrajectory:
    if steps is None:
        steps = default_steps(tau)
    steps, store_every = _plan_grid(int(steps), store_points)
    ds = 1.0 / steps

    probes = [np.abs(h_of_s(s)).sum(axis=1).max() for s in np.linspace(0, 1, 9)]
    if tau * max(probes) * ds >= 0.5:
        raise StabilityError(f"tau*||H||*ds = {tau * max(probes) * ds:.3g} >= 0.5; raise steps")

    n_store = steps // store_every + 1
    out = np.empty((n_store, psi.size))
    out[0] = psi
    h_start = h_of_s(0.0)
    stored = 1
    for step in range(steps):
        s = step * ds
        h_mid = h_of_s(s + 0.5 * ds)
        h_end = h_of_s(s + ds)
        k1 = -tau * (h_start @ psi)
        k2 = -tau * (h_mid @ (psi + 0.5 * ds * k1))
        k3 = -tau * (h_mid @ (psi + 0.5 * ds * k2))
        k4 = -tau * (h_end @ (psi + ds * k3))
        psi = psi + (ds / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        h_start = h_end
        if (step + 1) % store_every == 0:
            if not np.all(np.isfinite(psi)):
                raise StabilityError(f"non-finite wave vector at step {step + 1}")
            out[stored] = psi
            stored += 1
    s_grid = np.arange(n_store) * (store_every * ds)
    return ImaginaryTimeTrajectory(s=s_grid, psi=out, tau=tau, steps=steps)


def project_onto_levels(traj: ImaginaryTimeTrajectory, h_of_s, levels: int) -> CoefficientTable:
    """Project stored wave vectors onto continuity-tracked instantaneous
    eigenvectors; phases are cumulative trapezoid integrals of the energies."""
    coeffs = np.empty((len(traj.s), levels))
    energies = np.empty_like(coeffs)
    previous = None
    for k, s in enumerate(traj.s):
        spec = eigendecompose(h_of_s(float(s)))
        if previous is not None:
            spec, _ = align_signs(spec, previous)
        previous = spec
        coeffs[k] = spec.eigenvectors[:, :levels].T @ traj.psi[k]
        energies[k] = spec.eigenvalues[:levels]
    phases = np.zeros_like(energies)
    ds = np.diff(traj.s)
    phases[1:] = np.cumsum(0.5 * ds[:, None] * (energies[1:] + energies[:-1]), axis=0)
    return CoefficientTable(s=traj.s.copy(), coefficients=coeffs, energies=energies, phases=phases)


def _ground_matrix_elements(spec: SpectralData, operator) -> np.ndarray:
    """<j|A|0> for all j; operator may be a dense matrix or a diagonal vector."""
    v0 = spec.eigenvectors[:, 0]
    av0 = operator * v0 if operator.ndim == 1 else operator @ v0
    return spec.eigenvectors.T @ av0


def excitation_coefficient(spec: SpectralData, dh: np.ndarray, level: int,
                           floor: float = DEGENERACY_FLOOR) -> float:
    """First-order excited-level coefficient per unit 1/tau."""
    if level == 0:
        raise ValueError("level must be nonzero")
    spec.require_resolved(level, floor)
    me = float(spec.eigenvectors[:, level] @ (dh @ spec.eigenvectors[:, 0]))
    return me / spec.level_gap(level) ** 2


def depletion_rate(spec: SpectralData, dh: np.ndarray, floor: float = DEGENERACY_FLOOR) -> float:
    """Ground-coefficient depletion density from the generic expansion."""
    spec.require_resolved(1, floor)
    gaps = spec.eigenvalues[1:] - spec.eigenvalues[0]
    me = _ground_matrix_elements(spec, dh)[1:]
    return float(np.sum(me ** 2 / gaps ** 3))


def depletion_rate_mapped(spec: SpectralData, h0: np.ndarray, beta_dot: float,
                          floor: float = DEGENERACY_FLOOR) -> float:
    """Depletion density via the mapped-Hamiltonian shortcut: only diagonal
    energy matrix elements and first powers of the excitation energies."""
    spec.require_resolved(1, floor)
    gaps = spec.eigenvalues[1:] - spec.eigenvalues[0]
    me = _ground_matrix_elements(spec, np.asarray(h0, dtype=np.float64))[1:]
    return float(0.25 * beta_dot ** 2 * np.sum(me ** 2 / gaps))


def derivative_identity_residual(spec: SpectralData, h0: np.ndarray, beta_dot: float,
                                 dh: np.ndarray) -> float:
    """Max over excited levels of |<j|dH/ds|0> - (E_j beta_dot / 2) <j|E|0>|.

    Zero in exact arithmetic for any mapped flow, because the zero mode is
    known in closed form at every beta.
    """
    me_dh = _ground_matrix_elements(spec, dh)[1:]
    me_h0 = _ground_matrix_elements(spec, np.asarray(h0, dtype=np.float64))[1:]
    energies = spec.eigenvalues[1:] - spec.eigenvalues[0]
    return float(np.abs(me_dh - 0.5 * beta_dot * energies * me_h0).max())


@dataclass(frozen=True)
class DepletionIntegral:
    """Converged quadrature of the depletion rate over s in [0, 1]."""

    value: float
    intervals: int
    s_samples: np.ndarray
    rate_samples: np.ndarray


def integrated_depletion(flow: MappedFlow, tol: float = 1e-6, min_intervals: int = 16,
                         max_intervals: int = 1 << 14) -> DepletionIntegral:
    """Composite-Simpson integral of the mapped depletion rate, doubling the
    grid until the value moves by < tol relative. Rate evaluations are cached
    by node, so each doubling only pays for the new midpoints."""

    @functools.lru_cache(maxsize=None)
    def rate(s: float) -> float:
        return depletion_rate_mapped(flow.spectral(s), flow.h0, flow.beta_dot(s))

    def simpson(n: int) -> float:
        nodes = [k / n for k in range(n + 1)]
        vals = np.array([rate(s) for s in nodes])
        return (vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()) / (3.0 * n)

    n = min_intervals
    previous = simpson(n)
    while n < max_intervals:
        n *= 2
        current = simpson(n)
        if abs(current - previous) <= tol * max(abs(current), 1e-300):
            previous = current
            break
        previous = current
    s_samples = np.array([k / n for k in range(n + 1)])
    return DepletionIntegral(value=float(previous), intervals=n,
                             s_samples=s_samples,
                             rate_samples=np.array([rate(s) for s in s_samples]))


@dataclass(frozen=True)
class PredictedProbability:
    value: float
    extrapolative: bool


def predict_ground_probability(depletion_integral: float, tau: float) -> PredictedProbability:
    """First-order prediction 1 - integral/tau for an equilibrium start.

    Flagged (not clamped) when tau is too small for the first-order result
    to stay inside [0, 1].
    """
    value = 1.0 - depletion_integral / tau
    return PredictedProbability(value=float(value), extrapolative=not 0.0 <= value <= 1.0)


def measure_ground_probability(p_final: np.ndarray, ground: GroundSet) -> float:
    total = float(np.asarray(p_final)[list(ground.indices)].sum())
    return min(1.0, max(0.0, total))


def residual_slope(taus, residuals):
    """Log-log regression slope of residual against tau, with its standard error."""
    x = np.log(np.asarray(taus, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0]))


@dataclass(frozen=True)
class AdiabaticReport:
    """Everything the first-order law sweep produces, ready to serialize."""

    taus: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    residuals: np.ndarray
    slope: float
    slope_stderr: float
    depletion_integral: float
    quadrature_intervals: int
    s_samples: np.ndarray
    rate_samples: np.ndarray
    excitation_samples: np.ndarray  # (levels, n_samples)
    extrapolative: np.ndarray


def run_adiabatic_sweep(model: IsingModel, schedule: Schedule, taus,
                        family: str = "glauber", levels: int = 3,
                        steps: int | None = None, run_tau=None) -> AdiabaticReport:
    """Measure final ground probabilities across a tau sweep and compare with
    the first-order prediction. `run_tau` hooks each tau's master run (used
    for thread pools); defaults to a plain in-process call."""
    from .ising import ground_states
    from .markov import integrate_master

    taus = np.asarray(sorted(float(t) for t in taus))
    if taus.size == 0 or taus[0] <= 0:
        raise ValueError("tau list must be nonempty and strictly positive")
    flow = MappedFlow(model, schedule, family)
    ground = ground_states(model)
    quad = integrated_depletion(flow)

    def one(tau: float) -> float:
        traj = integrate_master(model, schedule.with_tau(tau), steps=steps, family=family)
        return measure_ground_probability(traj.final, ground)

    runner = run_tau if run_tau is not None else lambda f, ts: [f(t) for t in ts]
    measured = np.array(runner(one, list(taus)))
    predictions = [predict_ground_probability(quad.value, t) for t in taus]
    predicted = np.array([p.value for p in predictions])
    residuals = np.abs(measured - predicted)
    slope, stderr = residual_slope(taus, np.maximum(residuals, 1e-300))

    exc = np.empty((levels, quad.s_samples.size))
    for k, s in enumerate(quad.s_samples):
        spec = flow.spectral(float(s))
        dh = flow.dh_mapped(float(s))
        for j in range(levels):
            exc[j, k] = excitation_coefficient(spec, dh, j + 1)
    return AdiabaticReport(
        taus=taus, measured=measured, predicted=predicted, residuals=residuals,
        slope=slope, slope_stderr=stderr,
        depletion_integral=quad.value, quadrature_intervals=quad.intervals,
        s_samples=quad.s_samples, rate_samples=quad.rate_samples,
        excitation_samples=exc,
        extrapolative=np.array([p.extrapolative for p in predictions]),
    )


def psi_trajectory_from_master(traj: MasterTrajectory, model: IsingModel,
                               schedule: Schedule) -> np.ndarray:
    """Map each stored probability vector through the wave-vector transform;
    the cross-check counterpart of the imaginary-time integrator."""
    h0 = h0_diagonal(model)
    return np.stack([psi_from_p(traj.probabilities[k], schedule.beta(float(s)), h0)
                     for k, s in enumerate(traj.s)])
