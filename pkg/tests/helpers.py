"""Direct-definition oracles, deliberately independent of the library paths.

Everything here is written as the plain double/triple loops of the defining
formulas; the test suite compares library outputs against these.
"""

import numpy as np


def direct_shift(L, x, xi, v):
    out = np.zeros(L, complex)
    for t in range(L):
        out[t] = np.exp(2j * np.pi * xi * t / L) * v[(t - x) % L]
    return out


def direct_stft(f, phi):
    L = len(f)
    V = np.zeros((L, L), complex)
    for x in range(L):
        for xi in range(L):
            acc = 0.0 + 0.0j
            for t in range(L):
                acc += f[t] * np.conj(phi[(t - x) % L]) * np.exp(-2j * np.pi * xi * t / L)
            V[x, xi] = acc
    return V


def direct_istft(V, phi):
    L = V.shape[0]
    f = np.zeros(L, complex)
    for t in range(L):
        acc = 0.0 + 0.0j
        for x in range(L):
            for xi in range(L):
                acc += V[x, xi] * np.exp(2j * np.pi * xi * t / L) * phi[(t - x) % L]
        f[t] = acc / L
    return f


def direct_assemble(L, cells, values, phi):
    """H = (1/L) sum_z eta(z) |pi(z)phi><pi(z)phi| via explicit outer products."""
    M = np.zeros((L, L), complex)
    for (x, xi), v in zip(cells, values):
        w = direct_shift(L, int(x), int(xi), phi)
        M += (v / L) * np.outer(w, w.conj())
    return M


def random_signal(rng, L, unit=False):
    v = rng.normal(size=L) + 1j * rng.normal(size=L)
    if unit:
        v = v / np.linalg.norm(v)
    return v


def random_symbol_values(rng, L):
    """Nonnegative random mask over the full grid, as (cells, values)."""
    cells = [(x, xi) for x in range(L) for xi in range(L)]
    values = rng.random(L * L)
    return np.asarray(cells), values


def orthonormal_set(rng, L, n):
    A = rng.normal(size=(L, n)) + 1j * rng.normal(size=(L, n))
    Q, _ = np.linalg.qr(A)
    return Q[:, :n]
