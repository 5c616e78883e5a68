"""Independent brute-force oracles, deliberately written against different
code paths than the package (bit strings instead of vectorized tables,
explicit double loops instead of flip tables)."""

import math

import numpy as np


def naive_spins(index, n_spins):
    """Decode via the binary string; bit i set means spin +1."""
    bits = format(index, f"0{n_spins}b")[::-1]
    return [1 if b == "1" else -1 for b in bits]


def naive_unshifted_energy(index, n_spins, couplings, fields):
    spins = naive_spins(index, n_spins)
    total = 0.0
    for i, j, jij in couplings:
        total -= jij * spins[i] * spins[j]
    for i, h in fields:
        total -= h * spins[i]
    return total


def naive_h0(model):
    """Shifted diagonal by exhaustive re-enumeration."""
    raw = [naive_unshifted_energy(k, model.n_spins, model.couplings, model.fields)
           for k in range(2 ** model.n_spins)]
    floor = min(raw)
    return [e - floor for e in raw]


def naive_ground_indices(model, tolerance=1e-9):
    diag = naive_h0(model)
    return sorted(k for k, e in enumerate(diag) if e <= tolerance)


def naive_generator(model, beta, family):
    """Dense W by looping over ordered configuration pairs and testing the
    single-flip condition on the raw indices."""
    n = model.n_spins
    dim = 2 ** n
    diag = naive_h0(model)
    w = np.zeros((dim, dim))
    for src in range(dim):
        for dst in range(dim):
            x = src ^ dst
            if x == 0 or (x & (x - 1)) != 0:
                continue  # not a single-spin flip
            de = diag[dst] - diag[src]
            if family == "glauber":
                rate = 1.0 / (1.0 + math.exp(min(beta * de, 700.0)))
            else:
                rate = min(1.0, math.exp(-beta * de))
            w[dst, src] = rate
    for src in range(dim):
        w[src, src] = -w[:, src].sum()
    return w


def simpson_oracle(f, a, b, n=4096):
    """Plain composite Simpson with a fixed fine grid."""
    xs = np.linspace(a, b, n + 1)
    ys = np.array([f(x) for x in xs])
    h = (b - a) / n
    return h / 3.0 * (ys[0] + ys[-1] + 4 * ys[1:-1:2].sum() + 2 * ys[2:-1:2].sum())
