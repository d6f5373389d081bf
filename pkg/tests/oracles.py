"""Independent reference computations used only by the tests."""
import itertools
from math import comb

import numpy as np

from risloc.array import steering


def response(scenario, F, zeta):
    """Noiseless observations ``beta f_t^T a(p)`` at ``zeta = (x, y, z, beta_r, beta_i)``."""
    a = steering(scenario.arr, zeta[:3])
    return (zeta[3] + 1j * zeta[4]) * (F.T @ a)


def fd_cartesian_fim(scenario, F, h_pos=1e-6, h_beta=1e-6):
    """Cartesian FIM by central differences of the observation model."""
    zeta0 = np.concatenate([scenario.p, [scenario.beta.beta_r, scenario.beta.beta_i]])
    steps = np.array([h_pos] * 3 + [h_beta * abs(scenario.beta.value)] * 2)
    cols = []
    for k in range(5):
        e = np.zeros(5)
        e[k] = steps[k]
        cols.append((response(scenario, F, zeta0 + e) - response(scenario, F, zeta0 - e)) / (2 * steps[k]))
    D = np.column_stack(cols)
    return scenario.snr.factor * np.real(D.conj().T @ D)


def direct_fim(scenario, F):
    """Per-transmission sum of ``Re{d mu_t^H d mu_t}`` in spherical coordinates."""
    b = scenario.beta.value
    bd = scenario.bundle
    J = np.zeros((5, 5))
    for t in range(F.shape[1]):
        f = F[:, t]
        g = np.array([b * f @ bd.d_rho, b * f @ bd.d_theta, b * f @ bd.d_phi, f @ bd.a, 1j * f @ bd.a])
        J += np.real(np.outer(g.conj(), g))
    return scenario.snr.factor * J


def batched_peb(J):
    """PEB of a stack of 5x5 FIMs; singular or ill-conditioned entries give inf."""
    d = np.einsum("nii->ni", J)
    out = np.full(J.shape[0], np.inf)
    good = np.all(d > 0, axis=1)
    s = 1.0 / np.sqrt(np.where(good[:, None], d, 1.0))
    Js = J * s[:, :, None] * s[:, None, :]
    ev = np.linalg.eigvalsh(Js)
    good &= (ev[:, 0] > 0) & (ev[:, -1] < 1e12 * np.maximum(ev[:, 0], 1e-300))
    inv = np.linalg.inv(Js[good])
    crb = np.einsum("nii->ni", inv)[:, :3] * s[good, :3] ** 2
    out[good] = np.sqrt(crb.sum(axis=1))
    return out


def quantized_columns(M, symbols=(1, 1j, -1, -1j)):
    """All length-M symbol vectors, one per class modulo a common symbol rotation."""
    symbols = np.asarray(symbols)
    cols = [np.array(c) for c in itertools.product(symbols, repeat=M) if c[0] == symbols[0]]
    return np.array(cols)


def min_peb_multisets(scenario, T, chunk=100_000):
    """Smallest PEB over every T-column profile matrix with entries in {+-1, +-j}.

    The FIM is a sum of per-column terms and each term is unchanged by a
    common phase on the column, so it suffices to visit every multiset of
    T column classes.
    """
    cols = quantized_columns(scenario.arr.M)
    G = cols @ scenario.B_car
    per_col = scenario.snr.factor * np.real(G.conj()[:, :, None] * G[:, None, :])
    n = len(cols)
    best = np.inf
    count = 0
    it = itertools.combinations_with_replacement(range(n), T)
    while True:
        idx = np.array(list(itertools.islice(it, chunk)))
        if idx.size == 0:
            break
        J = per_col[idx].sum(axis=1)
        best = min(best, float(np.min(batched_peb(J))))
        count += len(idx)
    assert count == comb(n + T - 1, T)
    return best, count
