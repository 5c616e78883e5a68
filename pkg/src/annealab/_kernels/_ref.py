"""Pure-numpy kernels: single-flip rate matrices and RK4 sweeps.

Same call signatures as the compiled extension `_core`; the package picks
one at import time. Rates are functions of x = beta * deltaE only:

    glauber     w = (1 - tanh(x/2)) / 2      (heat bath)
    metropolis  w = min(1, exp(-x))

and the symmetrized off-diagonal entries of the mapped Hamiltonian are
w * exp(x/2), which reduces to 1/(2 cosh(x/2)) resp. exp(-|x|/2); both are
evaluated in overflow-free form.
"""

import numpy as np

GLAUBER = 0
METROPOLIS = 1


def _rates(x, family):
    if family == GLAUBER:
        return 0.5 * (1.0 - np.tanh(0.5 * x))
    return np.exp(-np.maximum(x, 0.0))


def _sym_offdiag(x, family):
    ax = np.abs(x)
    e = np.exp(-0.5 * ax)
    if family == GLAUBER:
        return e / (1.0 + e * e)
    return e


def build_generator(flip_idx, delta_e, beta, family):
    """Dense master-equation generator W; W[target, source], columns sum to zero."""
    dim, n = flip_idx.shape
    rates = _rates(beta * delta_e, family)
    w = np.zeros((dim, dim))
    cols = np.arange(dim)
    for j in range(n):
        w[flip_idx[:, j], cols] = rates[:, j]
    w[cols, cols] = -rates.sum(axis=1)
    return w


def build_mapped(flip_idx, delta_e, beta, family):
    """Dense symmetric mapped Hamiltonian built directly from the rate tables."""
    dim, n = flip_idx.shape
    x = beta * delta_e
    g = _sym_offdiag(x, family)
    h = np.zeros((dim, dim))
    cols = np.arange(dim)
    for j in range(n):
        h[flip_idx[:, j], cols] = -g[:, j]
    h[cols, cols] = _rates(x, family).sum(axis=1)
    return h


def apply_generator(flip_idx, delta_e, beta, family, p):
    rates = _rates(beta * delta_e, family)
    return _apply_rates(flip_idx, rates, p)


def apply_mapped(flip_idx, delta_e, beta, family, v):
    x = beta * delta_e
    out = _rates(x, family).sum(axis=1) * v
    g = _sym_offdiag(x, family)
    for j in range(flip_idx.shape[1]):
        out -= g[:, j] * v[flip_idx[:, j]]
    return out


def _apply_rates(flip_idx, rates, p):
    out = -rates.sum(axis=1) * p
    contrib = rates * p[:, None]
    for j in range(flip_idx.shape[1]):
        out[flip_idx[:, j]] += contrib[:, j]
    return out


def run_master_rk4(flip_idx, delta_e, betas_half, tau, ds, p0, store_every, family):
    """Fixed-step RK4 for dP/ds = tau * W(beta(s)) * P.

    betas_half holds beta on the half-step grid s_k = k*ds/2, k = 0..2*steps.
    Returns P at steps 0, store_every, 2*store_every, ..., steps.
    """
    steps = (len(betas_half) - 1) // 2
    n_store = steps // store_every + 1
    out = np.empty((n_store, flip_idx.shape[0]))
    p = np.array(p0, dtype=np.float64)
    out[0] = p
    half = 0.5 * ds
    r0 = _rates(betas_half[0] * delta_e, family)
    stored = 1
    for step in range(steps):
        rm = _rates(betas_half[2 * step + 1] * delta_e, family)
        r1 = _rates(betas_half[2 * step + 2] * delta_e, family)
        k1 = tau * _apply_rates(flip_idx, r0, p)
        k2 = tau * _apply_rates(flip_idx, rm, p + half * k1)
        k3 = tau * _apply_rates(flip_idx, rm, p + half * k2)
        k4 = tau * _apply_rates(flip_idx, r1, p + ds * k3)
        p += (ds / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        r0 = r1
        if (step + 1) % store_every == 0:
            if not np.all(np.isfinite(p)):
                raise FloatingPointError(f"non-finite probabilities at step {step + 1}")
            out[stored] = p
            stored += 1
    return out


def _apply_total(flip_idx, g, diag, scaled_h0, v):
    # (tau*H_tot) v  with  diag = sum of exit rates, scaled_h0 = (beta_dot/2) h0 / tau
    out = (diag - scaled_h0) * v
    for j in range(flip_idx.shape[1]):
        out -= g[:, j] * v[flip_idx[:, j]]
    return out


def run_imtime_rk4(flip_idx, delta_e, h0, betas_half, bdots_half, tau, ds, psi0,
                   store_every, family):
    """Fixed-step RK4 for -dpsi/ds = tau * (H_map(beta(s)) - (beta_dot/(2 tau)) H0) psi."""
    steps = (len(betas_half) - 1) // 2
    n_store = steps // store_every + 1
    out = np.empty((n_store, flip_idx.shape[0]))
    psi = np.array(psi0, dtype=np.float64)
    out[0] = psi
    half = 0.5 * ds

    def stage(k2):
        x = betas_half[k2] * delta_e
        return (_sym_offdiag(x, family), _rates(x, family).sum(axis=1),
                (0.5 * bdots_half[k2] / tau) * h0)

    s0 = stage(0)
    stored = 1
    for step in range(steps):
        sm = stage(2 * step + 1)
        s1 = stage(2 * step + 2)
        k1 = -tau * _apply_total(flip_idx, *s0, psi)
        k2 = -tau * _apply_total(flip_idx, *sm, psi + half * k1)
        k3 = -tau * _apply_total(flip_idx, *sm, psi + half * k2)
        k4 = -tau * _apply_total(flip_idx, *s1, psi + ds * k3)
        psi += (ds / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        s0 = s1
        if (step + 1) % store_every == 0:
            if not np.all(np.isfinite(psi)):
                raise FloatingPointError(f"non-finite wave vector at step {step + 1}")
            out[stored] = psi
            stored += 1
    return out
