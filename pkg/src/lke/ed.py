"""Exact-diagonalisation reference for small chains (N <= 12).

Basis states are bit strings; bit ``l - 1`` is the Jordan-Wigner occupation of
site ``l`` (1 = spin up).  Everything here is an independent oracle for the
kinetic machinery and deliberately built from the spin Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .fermions import IDENTITY
from .model import ModelParams, BogoliubovTable, momenta, neg, positive_indices

MAX_FOCK_N = 14
MAX_ED_N = 12


def _check_size(N, limit):
    if N > limit:
        raise ValueError(f"N={N} exceeds the exact-diagonalisation limit {limit}")


def _occupations(N):
    s = np.arange(2 ** N)
    return (s[:, None] >> np.arange(N)[None, :]) & 1


def jw_annihilators(N: int) -> list:
    """Jordan-Wigner annihilators mu_l (l = 1..N as list index 0..N-1)."""
    _check_size(N, MAX_FOCK_N)
    occ = _occupations(N)
    dim = 2 ** N
    states = np.arange(dim)
    ops = []
    for l in range(N):
        mask = occ[:, l] == 1
        src = states[mask]
        tgt = src ^ (1 << l)
        string = (-1.0) ** occ[mask, :l].sum(axis=1)
        ops.append(sp.csr_matrix((string, (tgt, src)), shape=(dim, dim)))
    return ops


def spin_operators(N: int):
    """Lists (Sx, Sz) of single-site spin matrices, sparse."""
    _check_size(N, MAX_FOCK_N)
    occ = _occupations(N)
    dim = 2 ** N
    states = np.arange(dim)
    Sx, Sz = [], []
    for l in range(N):
        Sx.append(sp.csr_matrix((np.full(dim, 0.5), (states ^ (1 << l), states)), shape=(dim, dim)))
        Sz.append(sp.diags(occ[:, l] - 0.5).tocsr())
    return Sx, Sz


def spin_hamiltonian(params: ModelParams, Jx=None, h=None) -> sp.csr_matrix:
    """Real sparse matrix of the long-range transverse-field Ising chain."""
    N = params.N
    Jx = params.Jx if Jx is None else Jx
    h = params.h if h is None else h
    _check_size(N, MAX_FOCK_N)
    occ = _occupations(N)
    sz = occ - 0.5
    diag = h * sz.sum(axis=1)
    for m in range(2, N - 1):
        w = params.distance(m) ** (-float(params.alpha))
        diag = diag + 0.5 * params.Jz * w * np.sum(sz * np.roll(sz, -m, axis=1), axis=1)
    dim = 2 ** N
    states = np.arange(dim)
    rows, cols = [], []
    for l in range(N):
        flip = (1 << l) | (1 << ((l + 1) % N))
        rows.append(states ^ flip)
        cols.append(states)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    off = sp.csr_matrix((np.full(len(rows), 0.25 * Jx), (rows, cols)), shape=(dim, dim))
    return (sp.diags(diag) + off).tocsr()


def particle_hole_unitary(N: int) -> sp.csr_matrix:
    """Unitary U with U mu_l U^+ = mu_l^+ (all spins flipped, Z on even sites)."""
    occ = _occupations(N)
    dim = 2 ** N
    states = np.arange(dim)
    flipped = states ^ (dim - 1)
    # phase from Z_l on even sites (1-based), evaluated on the flipped state
    even_sites = np.arange(1, N, 2)
    phase = (-1.0) ** np.sum(1 - occ[:, even_sites], axis=1)
    return sp.csr_matrix((phase, (flipped, states)), shape=(dim, dim))


@dataclass
class FockRep:
    """Explicit operator matrices for one chain (N <= 14)."""

    params: ModelParams

    def __post_init__(self):
        _check_size(self.params.N, MAX_FOCK_N)

    @property
    def N(self):
        return self.params.N

    @property
    def dim(self):
        return 2 ** self.N

    @cached_property
    def table(self) -> BogoliubovTable:
        return BogoliubovTable.build(self.params)

    @cached_property
    def mu(self) -> list:
        return jw_annihilators(self.N)

    @cached_property
    def mu_tilde(self) -> list:
        """Fourier modes mu~_k = N^-1/2 sum_l e^{-ikl} mu_l on the even-parity grid."""
        N = self.N
        ks = momenta(N)
        out = []
        for k in ks:
            op = sp.csr_matrix((self.dim, self.dim), dtype=complex)
            for l in range(N):
                op = op + np.exp(-1j * k * (l + 1)) * self.mu[l]
            out.append((op / np.sqrt(N)).tocsr())
        return out

    @cached_property
    def eta(self) -> list:
        """Bogoliubov annihilators eta_k = u_k mu~_k + i v_k mu~^+_{-k}."""
        t = self.table
        out = []
        for i in range(self.N):
            j = int(neg(i, self.N))
            out.append((t.u[i] * self.mu_tilde[i] + 1j * t.v[i] * self.mu_tilde[j].getH()).tocsr())
        return out

    @cached_property
    def eta_dag(self) -> list:
        return [e.getH().tocsr() for e in self.eta]

    @cached_property
    def parity(self) -> sp.csr_matrix:
        occ = _occupations(self.N)
        return sp.diags((-1.0) ** occ.sum(axis=1)).tocsr()

    @cached_property
    def even_projector(self) -> sp.csr_matrix:
        return ((sp.identity(self.dim) + self.parity) / 2).tocsr()

    @cached_property
    def spin_H(self) -> sp.csr_matrix:
        return spin_hamiltonian(self.params)

    @cached_property
    def spins(self):
        return spin_operators(self.N)

    @cached_property
    def sz_mean(self) -> np.ndarray:
        """Diagonal of (1/N) sum_l S^z_l."""
        return _occupations(self.N).mean(axis=1) - 0.5

    def key_matrix(self, key) -> sp.csr_matrix:
        """Matrix of a canonical monomial in the Bogoliubov modes."""
        m = sp.identity(self.dim, dtype=complex, format="csr")
        for q in key[0]:
            m = m @ self.eta_dag[q]
        for q in key[1]:
            m = m @ self.eta[q]
        return m.tocsr()

    def poly_matrix(self, poly: dict) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for key, c in poly.items():
            if key == IDENTITY:
                out = out + c * sp.identity(self.dim, dtype=complex, format="csr")
            else:
                out = out + c * self.key_matrix(key)
        return out.tocsr()

    @cached_property
    def vacuum(self) -> np.ndarray:
        """Bogoliubov vacuum, phased so that its overlap with all-down is positive."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        for i in range(self.N):
            psi = self.eta[i] @ (self.eta_dag[i] @ psi)
        return psi / np.linalg.norm(psi)

    def truncated_polarized(self, n: int, flavor: str = "down") -> np.ndarray:
        """Fock vector of psi^n (flavor 'down') or chi^n = U psi^n (flavor 'up')."""
        t = self.table
        pos = positive_indices(self.N)
        if not 0 <= n <= len(pos):
            raise ValueError(f"n must lie in [0, {len(pos)}]")
        out = self.vacuum.copy()
        for s in range(1, n + 1):
            for S in combinations(pos, s):
                vec = self.vacuum.copy()
                coef = 1.0 + 0j
                for k in S:
                    mk = int(neg(k, self.N))
                    vec = self.eta_dag[mk] @ (self.eta_dag[k] @ vec)
                    coef *= -1j * t.v[k] / t.u[k]
                out = out + coef * vec
        out = out / np.linalg.norm(out)
        if flavor == "up":
            out = particle_hole_unitary(self.N) @ out
        elif flavor != "down":
            raise ValueError(f"unknown flavor {flavor!r}")
        return out

    def all_down(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi

    def all_up(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[-1] = 1.0
        return psi


class Spectrum:
    """Dense eigendecomposition of the spin Hamiltonian, one parity block at a time."""

    def __init__(self, params: ModelParams, Jx=None, h=None):
        _check_size(params.N, MAX_ED_N)
        self.params = params
        N = params.N
        H = spin_hamiltonian(params, Jx=Jx, h=h)
        occ_par = _occupations(N).sum(axis=1) % 2
        dim = 2 ** N
        self.energies = np.empty(dim)
        self.vectors = np.zeros((dim, dim))
        col = 0
        for par in (0, 1):
            idx = np.flatnonzero(occ_par == par)
            block = H[idx][:, idx].toarray()
            e, v = np.linalg.eigh(block)
            self.energies[col:col + len(idx)] = e
            self.vectors[idx, col:col + len(idx)] = v
            col += len(idx)
        self.sz_mean = _occupations(N).mean(axis=1) - 0.5

    @cached_property
    def sz_eig(self) -> np.ndarray:
        """Diagonal of the mean S^z in the eigenbasis."""
        return np.einsum("ij,i,ij->j", self.vectors, self.sz_mean, self.vectors)

    def thermal(self, beta: float):
        """(energy density, mean S^z) of the Gibbs state at inverse temperature beta."""
        E = self.energies
        w = -beta * E
        w = np.exp(w - w.max())
        Z = w.sum()
        return float(w @ E / Z / self.params.N), float(w @ self.sz_eig / Z)

    def evolve(self, psi0: np.ndarray, times, observables: dict) -> dict:
        """Expectation values of diagonal-in-spin-basis or sparse observables along psi(t)."""
        times = np.asarray(times, dtype=float)
        c = self.vectors.T @ psi0
        out = {name: np.empty(len(times)) for name in observables}
        out["norm"] = np.empty(len(times))
        out["energy"] = np.empty(len(times))
        chunk = 256
        for s in range(0, len(times), chunk):
            ts = times[s:s + chunk]
            coeffs = np.exp(-1j * np.outer(self.energies, ts)) * c[:, None]
            psi_t = self.vectors @ coeffs
            out["norm"][s:s + chunk] = np.sum(np.abs(psi_t) ** 2, axis=0)
            out["energy"][s:s + chunk] = np.real(np.sum(np.abs(coeffs) ** 2 * self.energies[:, None], axis=0))
            for name, op in observables.items():
                if isinstance(op, np.ndarray) and op.ndim == 1:
                    vals = np.sum(np.abs(psi_t) ** 2 * op[:, None], axis=0)
                else:
                    vals = np.sum(psi_t.conj() * (op @ psi_t), axis=0)
                out[name][s:s + chunk] = np.real(vals)
        return out


def ed_evolve(params: ModelParams, psi0, times, observables=None, spectrum: Spectrum | None = None):
    """Exact evolution; returns a dict of arrays including 'times' and 'sz'."""
    spec = spectrum or Spectrum(params)
    obs = {"sz": spec.sz_mean}
    if observables:
        obs.update(observables)
    res = spec.evolve(psi0, times, obs)
    res["times"] = np.asarray(times, dtype=float)
    return res


def zz_correlator_ops(N: int) -> list:
    """Diagonals of (1/N) sum_l S^z_l S^z_{l+m} for m = 0..N-1."""
    sz = _occupations(N) - 0.5
    return [np.mean(sz * np.roll(sz, -m, axis=1), axis=1) for m in range(N)]


def xx_nn_op(N: int) -> sp.csr_matrix:
    """(1/N) sum_l S^x_l S^x_{l+1}."""
    dim = 2 ** N
    states = np.arange(dim)
    rows = np.concatenate([states ^ ((1 << l) | (1 << ((l + 1) % N))) for l in range(N)])
    cols = np.tile(states, N)
    return sp.csr_matrix((np.full(len(rows), 0.25 / N), (rows, cols)), shape=(dim, dim))


def thermal(params: ModelParams, beta: float, spectrum: Spectrum | None = None):
    spec = spectrum or Spectrum(params)
    return spec.thermal(beta)


def match_beta(params: ModelParams, target: float, spectrum: Spectrum | None = None, tol=1e-8) -> float:
    """Inverse temperature with energy density ``target`` (bisection, brentq)."""
    spec = spectrum or Spectrum(params)
    N = params.N
    lo, hi = spec.energies.min() / N, spec.energies.max() / N
    if not lo < target < hi:
        raise ValueError(f"target energy density {target} outside ({lo}, {hi})")
    f = lambda b: spec.thermal(b)[0] - target
    bound = 1.0
    while f(-bound) < 0 or f(bound) > 0:
        bound *= 2
        if bound > 1e4:
            raise ValueError("could not bracket beta")
    return brentq(f, -bound, bound, xtol=1e-13, rtol=1e-13, maxiter=500)


def extrapolate_inverse_size(sizes, values, target_N=None) -> float:
    """Linear fit of values against 1/N, evaluated at 1/target_N (0 if None)."""
    x = 1.0 / np.asarray(sizes, dtype=float)
    slope, icpt = np.polyfit(x, np.asarray(values, dtype=float), 1)
    return float(icpt + slope * (0.0 if target_N is None else 1.0 / target_N))


def accuracy_metric(times, lke, ed) -> np.ndarray:
    """Time-integrated relative Euclidean distance between two trajectories."""
    times = np.asarray(times, dtype=float)
    lke = np.asarray(lke)
    ed = np.asarray(ed)
    if not (len(times) == len(lke) == len(ed)):
        raise ValueError("trajectories must share the time grid")
    num = cumulative_trapezoid(np.abs(lke - ed) ** 2, times, initial=0.0)
    den = 1.0 + cumulative_trapezoid(np.abs(ed) ** 2, times, initial=0.0)
    return np.sqrt(num / den)
