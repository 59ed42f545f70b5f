"""Linear kinetic equations dX/dt = D X over a truncated operator basis."""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .basis import Functional, Truncation, project
from .fermions import IDENTITY, degree, mul_keys, prune
from .model import QUARTIC_SHAPES, HamiltonianCoeffs, momentum_labels, neg

FULL = "full"
QUADRATIC = "quadratic_only"

# generator entries beyond this count are refused before allocation
MAX_NNZ = 200_000_000
DROP_TOL = 1e-13


class FeasibilityError(RuntimeError):
    pass


class IntegratorBlowup(RuntimeError):
    pass


def _canonical_rows(cre: np.ndarray, ann: np.ndarray):
    """Sort rows of mode arrays; return sorted arrays, sign and a validity mask."""
    sign = np.ones(len(cre) if cre.size else len(ann), dtype=np.int64)
    ok = np.ones_like(sign, dtype=bool)
    out = []
    for block in (cre, ann):
        w = block.shape[1]
        for i in range(w):
            for j in range(i + 1, w):
                sign[block[:, i] > block[:, j]] *= -1
                ok &= block[:, i] != block[:, j]
        out.append(np.sort(block, axis=1))
    return out[0], out[1], sign, ok


def assemble_poly(N: int, H0, A_I, A_II, A_III, B=None) -> dict:
    """Canonical polynomial H0 + sum_k (A-terms) + sum_k (B-terms).

    ``B(family, k1, k2, k3, k4)`` is vectorised over grid indices; ``None`` skips
    the quartic part.
    """
    poly: dict = {IDENTITY: complex(H0)}
    for k in range(N):
        mk = int(neg(k, N))
        # eta_{-k} eta_k and eta^+_k eta^+_{-k}: canonical order is ascending
        s = 1 if mk < k else -1
        for key, c in (
            (((), tuple(sorted((mk, k)))), s * A_I[k]),
            (((k,), (k,)), A_II[k]),
            ((tuple(sorted((k, mk))), ()), -s * A_III[k]),
        ):
            poly[key] = poly.get(key, 0) + c
    if B is None:
        return prune(poly)

    lab = momentum_labels(N)
    idx_of_label = np.empty(2 * N, dtype=np.int64)
    idx_of_label[(lab % (2 * N))] = np.arange(N)
    k1, k2, k3 = (a.ravel() for a in np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij"))
    k4 = idx_of_label[(lab[k1] - lab[k2] + lab[k3]) % (2 * N)]
    ks = (k1, k2, k3, k4)
    codes, values = [], []
    for family, shape in QUARTIC_SHAPES.items():
        b = B(family, *ks)
        nz = np.abs(b) > 0
        if not nz.any():
            continue
        modes = [np.where(ngt, N - 1 - q[nz], q[nz]) for (_, ngt), q in zip(shape, ks)]
        empty = np.empty((int(nz.sum()), 0), dtype=np.int64)
        cre_cols = [m for m, (isc, _) in zip(modes, shape) if isc]
        ann_cols = [m for m, (isc, _) in zip(modes, shape) if not isc]
        cre = np.stack(cre_cols, axis=1) if cre_cols else empty
        ann = np.stack(ann_cols, axis=1) if ann_cols else empty
        cre, ann, sign, ok = _canonical_rows(cre, ann)
        code = np.full(ok.sum(), cre.shape[1], dtype=np.int64)
        for col in np.concatenate([cre, ann], axis=1)[ok].T:
            code = code * N + col
        codes.append(code)
        values.append((sign * b[nz])[ok])
    if codes:
        codes = np.concatenate(codes)
        values = np.concatenate(values)
        uniq, inv = np.unique(codes, return_inverse=True)
        summed = np.bincount(inv, values.real) + 1j * np.bincount(inv, values.imag)
        for code, c in zip(uniq.tolist(), summed.tolist()):
            digits = []
            for _ in range(4):
                code, d = divmod(code, N)
                digits.append(d)
            digits.reverse()
            key = (tuple(digits[:code]), tuple(digits[code:]))
            poly[key] = poly.get(key, 0) + c
    return prune(poly)


def hamiltonian_poly(coeffs: HamiltonianCoeffs, mode: str = FULL) -> dict:
    """Normal-ordered fermionic Hamiltonian as a canonical polynomial."""
    if mode not in (FULL, QUADRATIC):
        raise ValueError(f"unknown hamiltonian mode {mode!r}")
    quartic = mode == FULL and coeffs.params.Jz != 0
    return assemble_poly(coeffs.N, coeffs.H0, coeffs.A_I, coeffs.A_II, coeffs.A_III,
                         coeffs.B if quartic else None)


class _RowBuilder:
    """Computes projected commutator rows; picklable for worker processes."""

    def __init__(self, N: int, hpoly: dict, index: dict, max_degree: int):
        self.N = N
        self.hpoly = hpoly
        self.index = index
        self.max_degree = max_degree
        self.h_degrees = sorted({degree(k) for k in hpoly if k != IDENTITY})
        lab = momentum_labels(N)
        self.lab = lab.tolist()
        self.idx_of_label = {int(l % (2 * N)): i for i, l in enumerate(lab)}

    def _min_contractions(self, dO, dh):
        return max(1, math.ceil((dO + dh - self.max_degree) / 2))

    def _completions(self, fixed_cre, fixed_ann, rc, ra):
        N, lab, M = self.N, self.lab, 2 * self.N
        f = rc + ra
        base = sum(lab[q] for q in fixed_cre) - sum(lab[q] for q in fixed_ann)
        if f == 0:
            if base % M == 0:
                yield tuple(fixed_cre), tuple(fixed_ann)
            return
        last_is_cre = ra == 0
        for free in product(range(N), repeat=f - 1):
            cre = list(fixed_cre) + list(free[:rc])
            ann = list(fixed_ann) + list(free[rc:])
            tot = base + sum(lab[q] for q in free[:rc]) - sum(lab[q] for q in free[rc:])
            if last_is_cre:
                cre.append(self.idx_of_label[(-tot) % M])
            else:
                ann.append(self.idx_of_label[tot % M])
            cre.sort()
            ann.sort()
            yield tuple(cre), tuple(ann)

    def candidates(self, O):
        dO = degree(O)
        found = set()
        for dh in self.h_degrees:
            c = self._min_contractions(dO, dh)
            # contractions pair O's annihilators with h's creators or vice versa
            for side, pool in ((0, O[1]), (1, O[0])):
                if c > len(pool):
                    continue
                for fixed in combinations(pool, c):
                    fc, fa = (fixed, ()) if side == 0 else ((), fixed)
                    for n_cre in range(len(fc), dh - len(fa) + 1):
                        rc, ra = n_cre - len(fc), dh - n_cre - len(fa)
                        for key in self._completions(fc, fa, rc, ra):
                            if key in self.hpoly:
                                found.add(key)
        return found

    def row(self, i_and_key):
        i, O = i_and_key
        out: dict = {}
        dO = degree(O)
        for hk in self.candidates(O):
            c = self.hpoly[hk]
            cmin = self._min_contractions(dO, degree(hk))
            for key, s in mul_keys(O, hk, cmin):
                out[key] = out.get(key, 0) + s * c
            for key, s in mul_keys(hk, O, cmin):
                out[key] = out.get(key, 0) - s * c
        cols, vals = [], []
        dropped = 0
        for key, v in out.items():
            if abs(v) <= DROP_TOL:
                continue
            j = self.index.get(key)
            if j is None:
                dropped += 1
            else:
                cols.append(j)
                vals.append(-1j * v)
        return i, cols, vals, dropped


@dataclass
class KineticSystem:
    truncation: Truncation
    D: sp.csr_matrix
    hamiltonian_mode: str
    hpoly: dict = field(repr=False)
    dropped_terms: int = 0
    build_seconds: float = 0.0

    @property
    def size(self) -> int:
        return self.D.shape[0]

    def energy_functional(self) -> Functional:
        """Part of <H> carried by monomials inside the truncation."""
        return project(self.hpoly, self.truncation, strict=False)


def build_generator(coeffs: HamiltonianCoeffs, trunc: Truncation, mode: str = FULL, workers: int = 1,
                    hpoly: dict | None = None) -> KineticSystem:
    """Projected generator of d/dt <O_i> = -i <[O_i, H]> on the truncation."""
    if coeffs.N != trunc.N:
        raise ValueError(f"coefficients for N={coeffs.N} but truncation for N={trunc.N}")
    t0 = time.perf_counter()
    hpoly = hamiltonian_poly(coeffs, mode) if hpoly is None else hpoly
    estimate = len(trunc) * (4 * trunc.N if mode == FULL else 8)
    if estimate > MAX_NNZ:
        raise FeasibilityError(f"generator estimate of {estimate} entries exceeds {MAX_NNZ}")
    builder = _RowBuilder(trunc.N, hpoly, trunc.index, trunc.max_degree)
    tasks = list(enumerate(trunc.basis))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(builder.row, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        rows = [builder.row(t) for t in tasks]
    rows.sort(key=lambda r: r[0])
    indptr = [0]
    indices, data = [], []
    dropped = 0
    for _, cols, vals, nd in rows:
        order = np.argsort(cols, kind="stable")
        indices.extend(np.asarray(cols, dtype=np.int64)[order].tolist())
        data.extend(np.asarray(vals, dtype=complex)[order].tolist())
        indptr.append(len(indices))
        dropped += nd
    n = len(trunc)
    D = sp.csr_matrix((np.array(data, dtype=complex), np.array(indices, dtype=np.int64), np.array(indptr)),
                      shape=(n, n))
    return KineticSystem(trunc, D, mode, hpoly, dropped, time.perf_counter() - t0)


@dataclass(frozen=True)
class TrajectoryConfig:
    t_max: float
    dt: float = 0.01
    sample_every: int = 10
    method: str = "rk4"
    checkpoint_every: int = 0
    halving_tol: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.method not in ("rk4", "rk4_with_halving_check"):
            raise ValueError(f"unknown integration method {self.method!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class TimeSeries:
    times: np.ndarray
    values: dict
    meta: dict = field(default_factory=dict)
    checkpoints: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.values[name]


def _rk4_step(D, X, dt):
    k1 = D @ X
    k2 = D @ (X + 0.5 * dt * k1)
    k3 = D @ (X + 0.5 * dt * k2)
    k4 = D @ (X + dt * k3)
    return X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(sys: KineticSystem, X0, cfg: TrajectoryConfig,
           observables: dict[str, Callable] | None = None) -> TimeSeries:
    """Fixed-step RK4 integration with sampled observables.

    ``observables`` maps names to callables of the expectation vector; their
    complex values are recorded at every sample.
    """
    X = np.array(X0, dtype=complex)
    if X.shape != (sys.size,):
        raise ValueError(f"initial vector has shape {X.shape}, expected ({sys.size},)")
    if abs(X[sys.truncation.index[IDENTITY]] - 1) > 1e-12:
        raise ValueError("initial vector must have <1> = 1")
    observables = observables or {}
    halving = cfg.method == "rk4_with_halving_check"
    Xh = X.copy() if halving else None
    norm0 = np.linalg.norm(X)
    n = cfg.n_steps
    sample_steps = list(range(0, n + 1, cfg.sample_every))
    if sample_steps[-1] != n:
        sample_steps.append(n)
    times = np.array(sample_steps) * cfg.dt
    values = {name: np.empty(len(sample_steps), dtype=complex) for name in observables}
    checkpoints = {}
    residual = 0.0
    s = 0
    D = sys.D
    for step in range(n + 1):
        if step == sample_steps[s]:
            for name, f in observables.items():
                values[name][s] = f(X)
            if halving:
                residual = max(residual, float(np.max(np.abs(X - Xh))))
            if cfg.checkpoint_every and s % cfg.checkpoint_every == 0:
                checkpoints[float(times[s])] = X.copy()
            s += 1
        if step == n:
            break
        X = _rk4_step(D, X, cfg.dt)
        if halving:
            Xh = _rk4_step(D, _rk4_step(D, Xh, 0.5 * cfg.dt), 0.5 * cfg.dt)
        if not np.all(np.isfinite(X)) or np.linalg.norm(X) > 10 * norm0:
            raise IntegratorBlowup(
                f"state norm grew beyond 10x its initial value at t={(step + 1) * cfg.dt:.4g}; reduce dt"
            )
    meta = {"dt": cfg.dt, "method": cfg.method, "n_steps": n, "truncation": sys.truncation.name,
            "basis_size": sys.size}
    if halving:
        meta["halving_residual"] = residual
        if residual >= cfg.halving_tol:
            meta["accuracy_warning"] = f"step-halving residual {residual:.3g} exceeds {cfg.halving_tol:.1g}"
            warnings.warn(meta["accuracy_warning"], RuntimeWarning, stacklevel=2)
    return TimeSeries(times, values, meta, checkpoints)


def paired_momentum_defect(trunc: Truncation) -> Callable:
    """max_k |<n_k> - <n_-k>| as a callable on expectation vectors."""
    N = trunc.N
    pos = [k for k in range(N) if neg(k, N) != k]
    a = np.array([trunc.index[((k,), (k,))] for k in pos])
    b = np.array([trunc.index[((int(neg(k, N)),), (int(neg(k, N)),))] for k in pos])
    return lambda X: float(np.max(np.abs(X[a] - X[b])))
