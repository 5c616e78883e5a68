"""Single-spin-flip dynamics: detailed-balance generators and the master equation.

Generators follow the column convention dP/dt = W P with W[target, source];
off-diagonals are nonnegative, each column sums to zero. Two rate families
are provided: heat-bath (glauber) with flip rate (1 - tanh(beta*dE/2))/2 and
metropolis with min(1, exp(-beta*dE)). Rates carry no 1/N prefactor.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import _ref
from .errors import StabilityError
from .ising import GroundSet, IsingModel, h0_diagonal
from .schedule import Schedule

FAMILIES = {"glauber": _kernels.GLAUBER, "metropolis": _kernels.METROPOLIS}

STABILITY_LIMIT = 0.5


def family_code(family: str) -> int:
    try:
        return FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown rate family {family!r}; expected one of {sorted(FAMILIES)}")


@functools.lru_cache(maxsize=64)
def flip_tables(model: IsingModel):
    """Per-configuration flip targets and energy changes.

    flip_idx[sigma, j] is sigma with spin j flipped; delta_e[sigma, j] is the
    exact energy change of that flip (difference of shifted diagonal entries).
    """
    diag = h0_diagonal(model)
    idx = np.arange(model.dim, dtype=np.int64)
    flip_idx = idx[:, None] ^ (np.int64(1) << np.arange(model.n_spins, dtype=np.int64))[None, :]
    delta_e = diag[flip_idx] - diag[idx][:, None]
    flip_idx = np.ascontiguousarray(flip_idx)
    delta_e = np.ascontiguousarray(delta_e)
    flip_idx.flags.writeable = False
    delta_e.flags.writeable = False
    return flip_idx, delta_e


def build_glauber(model: IsingModel, beta: float) -> np.ndarray:
    """Heat-bath generator at fixed inverse temperature."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    flip_idx, delta_e = flip_tables(model)
    return _kernels.build_generator(flip_idx, delta_e, float(beta), _kernels.GLAUBER)


def build_metropolis(model: IsingModel, beta: float) -> np.ndarray:
    """Metropolis generator at fixed inverse temperature."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    flip_idx, delta_e = flip_tables(model)
    return _kernels.build_generator(flip_idx, delta_e, float(beta), _kernels.METROPOLIS)


def build_generator(model: IsingModel, beta: float, family: str = "glauber") -> np.ndarray:
    flip_idx, delta_e = flip_tables(model)
    return _kernels.build_generator(flip_idx, delta_e, float(beta), family_code(family))


def gibbs(model: IsingModel, beta: float) -> np.ndarray:
    """Normalized Boltzmann distribution over all configurations."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    weights = np.exp(-beta * h0_diagonal(model))
    return weights / weights.sum()


def generator_residuals(w: np.ndarray, model: IsingModel, beta: float) -> dict:
    """Diagnostics for the generator invariants; all values should be tiny."""
    diag = h0_diagonal(model)
    flip_idx, _ = flip_tables(model)
    balanced = w * np.exp(-beta * diag)[None, :]
    support = np.zeros_like(w, dtype=bool)
    cols = np.arange(model.dim)
    support[cols, cols] = True
    for j in range(model.n_spins):
        support[flip_idx[:, j], cols] = True
    off = w.copy()
    off[support] = 0.0
    return {
        "column_sum": float(np.abs(w.sum(axis=0)).max()),
        "detailed_balance": float(np.abs(balanced - balanced.T).max()),
        "detailed_balance_scale": float(np.abs(balanced).max()),
        "off_support": float(np.abs(off).max()),
        "stationarity": float(np.abs(w @ gibbs(model, beta)).max()),
    }


@dataclass(frozen=True)
class MasterTrajectory:
    """Probability vectors stored on a uniform grid of scaled times."""

    s: np.ndarray
    betas: np.ndarray
    probabilities: np.ndarray
    tau: float
    steps: int
    family: str

    @property
    def final(self) -> np.ndarray:
        return self.probabilities[-1]

    def ground_probability(self, ground: GroundSet) -> np.ndarray:
        """Ground-set probability at every stored time."""
        return self.probabilities[:, list(ground.indices)].sum(axis=1)

    def clamped(self) -> np.ndarray:
        """Probabilities with tiny integration-noise negatives set to zero."""
        return np.clip(self.probabilities, 0.0, None)


def default_steps(tau: float) -> int:
    return max(2000, math.ceil(20.0 * tau))


def _plan_grid(steps: int, store_points: int):
    store_every = max(1, round(steps / max(1, store_points - 1)))
    steps = store_every * math.ceil(steps / store_every)
    return steps, store_every


def _stage_betas(schedule: Schedule, steps: int):
    s_half = np.arange(2 * steps + 1) / (2.0 * steps)
    return s_half, np.array([schedule.beta(s) for s in s_half])


def generator_norm_bound(model: IsingModel, schedule: Schedule, family: str, samples: int = 17) -> float:
    """Max 1-norm of tau-free W(beta(s)) over sampled s (exact for sampled points:
    the 1-norm of a zero-column-sum generator is twice the largest exit-rate sum)."""
    flip_idx, delta_e = flip_tables(model)
    code = family_code(family)
    worst = 0.0
    for s in np.linspace(0.0, 1.0, samples):
        rates = _ref._rates(schedule.beta(float(s)) * delta_e, code)
        worst = max(worst, 2.0 * float(rates.sum(axis=1).max()))
    return worst


def integrate_master(model: IsingModel, schedule: Schedule, steps: int | None = None,
                     family: str = "glauber", store_points: int = 201,
                     initial: np.ndarray | None = None) -> MasterTrajectory:
    """Integrate dP/ds = tau W(beta(s)) P over s in [0, 1] with fixed-step RK4.

    Starts from the equilibrium distribution at beta(0) unless `initial` is
    given. Raises StabilityError if tau * ||W|| * ds >= 0.5 or the run goes
    non-finite.
    """
    tau = schedule.tau
    if steps is None:
        steps = default_steps(tau)
    steps, store_every = _plan_grid(int(steps), store_points)
    ds = 1.0 / steps

    norm = generator_norm_bound(model, schedule, family)
    if tau * norm * ds >= STABILITY_LIMIT:
        needed = math.ceil(tau * norm / STABILITY_LIMIT) + 1
        raise StabilityError(
            f"tau*||W||*ds = {tau * norm * ds:.3g} >= {STABILITY_LIMIT}; "
            f"raise steps to at least {needed}")

    if initial is None:
        p0 = gibbs(model, schedule.beta(0.0))
    else:
        p0 = np.asarray(initial, dtype=np.float64)
        if p0.shape != (model.dim,):
            raise ValueError(f"initial vector has shape {p0.shape}, expected ({model.dim},)")

    _, betas_half = _stage_betas(schedule, steps)
    flip_idx, delta_e = flip_tables(model)
    try:
        stored = _kernels.run_master_rk4(flip_idx, delta_e, betas_half, float(tau), ds,
                                         p0, store_every, family_code(family))
    except FloatingPointError as exc:
        raise StabilityError(str(exc)) from exc

    s_grid = np.arange(stored.shape[0]) * (store_every * ds)
    return MasterTrajectory(
        s=s_grid,
        betas=betas_half[::2 * store_every].copy(),
        probabilities=stored,
        tau=tau,
        steps=steps,
        family=family,
    )


def write_trajectory_csv(traj: MasterTrajectory, model: IsingModel, path) -> None:
    """Trajectory dump: full probability columns up to N=6, reduced beyond."""
    ground = sorted(np.flatnonzero(h0_diagonal(model) <= 1e-9))
    with open(path, "w") as fh:
        if model.n_spins <= 6:
            fh.write("s," + ",".join(f"p{i}" for i in range(model.dim)) + "\n")
            for k in range(len(traj.s)):
                row = ",".join(f"{x:.17g}" for x in traj.probabilities[k])
                fh.write(f"{traj.s[k]:.17g},{row}\n")
        else:
            fh.write("s,p_ground,total_p,gibbs_overlap\n")
            for k in range(len(traj.s)):
                p = traj.probabilities[k]
                eq = gibbs(model, traj.betas[k])
                overlap = float(np.sqrt(np.clip(p, 0.0, None) * eq).sum())
                fh.write(f"{traj.s[k]:.17g},{p[ground].sum():.17g},{p.sum():.17g},{overlap:.17g}\n")
