"""Truncated polarised states and their expectation vectors.

In the Bogoliubov basis the all-down state is a superposition of pair
excitations P_k^+ = eta^+_{-k} eta^+_k (0 < k < pi) on the vacuum with weights
c_k = -i v_k / u_k.  Truncating to at most n pairs gives psi^n.  Pair bilinears
commute, so every expectation value reduces to the few pair modes an operator
touches plus an elementary-symmetric-polynomial weight for the untouched ones.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .basis import Truncation
from .fermions import IDENTITY, Key, mul_keys, normal_order
from .kinetics import TimeSeries
from .model import BogoliubovTable, HamiltonianCoeffs, ModelParams, build_model, neg, positive_indices, zeta

VALIDITY_THRESHOLD = 0.1


def elementary_symmetric(r, order: int) -> np.ndarray:
    """e_0..e_order of the values r (e_j = 0 beyond len(r))."""
    e = np.zeros(order + 1)
    e[0] = 1.0
    for x in r:
        e[1:] = e[1:] + x * e[:-1]
    return e


@dataclass
class TruncatedPolarizedState:
    table: BogoliubovTable
    n: int
    flavor: str = "down"

    def __post_init__(self):
        half = self.table.N // 2
        if not 0 <= self.n <= half:
            raise ValueError(f"n must lie in [0, {half}], got {self.n}")
        if self.flavor not in ("down", "up"):
            raise ValueError(f"flavor must be 'down' or 'up', got {self.flavor!r}")

    @property
    def N(self) -> int:
        return self.table.N

    @cached_property
    def pos(self) -> np.ndarray:
        return positive_indices(self.N)

    @cached_property
    def ratio(self) -> np.ndarray:
        """v_k / u_k on the positive half-zone."""
        return self.table.v[self.pos] / self.table.u[self.pos]

    @cached_property
    def L(self) -> np.ndarray:
        """L_1..L_n."""
        return elementary_symmetric(self.ratio ** 2, self.n)[1:]

    @property
    def W2(self) -> float:
        return 1.0 + float(np.sum(self.L))

    @property
    def W(self) -> float:
        return float(np.sqrt(self.W2))

    @cached_property
    def _e_all(self) -> np.ndarray:
        return elementary_symmetric(self.ratio ** 2, self.n)

    def _weights_without(self, touched: list[int]) -> np.ndarray:
        """Cumulative e_j of the untouched modes: w[m] = sum_{j <= n-m} e_j."""
        e = self._e_all.copy()
        r2 = self.ratio ** 2
        slot = {int(k): i for i, k in enumerate(self.pos)}
        for p in touched:
            x = r2[slot[p]]
            # divide the generating polynomial by (1 + x t)
            for j in range(1, len(e)):
                e[j] -= x * e[j - 1]
        c = np.cumsum(e)
        return np.array([c[self.n - m] if self.n - m >= 0 else 0.0 for m in range(len(touched) + 1)])

    def _pair_key(self, modes) -> tuple[Key, int]:
        """Canonical key and sign of prod_{p in modes} eta^+_{-p} eta^+_p (pairs in given order)."""
        seq = []
        for p in modes:
            seq += [int(neg(p, self.N)), int(p)]
        order = sorted(range(len(seq)), key=lambda i: seq[i])
        # parity of the sorting permutation
        sign, perm, seen = 1, order, [False] * len(order)
        for i in range(len(perm)):
            if not seen[i]:
                j, cyc = i, 0
                while not seen[j]:
                    seen[j] = True
                    j = perm[j]
                    cyc += 1
                if cyc % 2 == 0:
                    sign = -sign
        return (tuple(sorted(seq)), ()), sign

    def expect_key_down(self, key: Key) -> complex:
        """<psi^n| key |psi^n> for a canonical monomial."""
        if key == IDENTITY:
            return 1.0 + 0j
        N = self.N
        modes = set(key[0]) | set(key[1])
        touched = sorted({int(q) if q >= N // 2 else int(neg(q, N)) for q in modes})
        # coefficient c_p of each touched pair
        cp = {p: -1j * self.table.v[p] / self.table.u[p] for p in touched}
        w = self._weights_without(touched)
        total = 0j
        for b in product((0, 1), repeat=len(touched)):
            b_modes = [p for p, x in zip(touched, b) if x]
            if len(b_modes) > self.n:
                continue
            bkey, bsign = self._pair_key(b_modes)
            # key @ P_b^+ |0>: keep only pure-creation terms
            for out, s in mul_keys(key, bkey):
                if out[1]:
                    continue
                cre = out[0]
                if len(cre) % 2:
                    continue
                a_modes = sorted({q for q in cre if q >= N // 2})
                akey, asign = self._pair_key(a_modes)
                if akey != out or len(a_modes) > self.n:
                    continue
                amp = s * bsign * asign
                coef_b = np.prod([cp[p] for p in b_modes]) if b_modes else 1.0
                coef_a = np.prod([cp[p] for p in a_modes]) if a_modes else 1.0
                total += np.conj(coef_a) * coef_b * amp * w[max(len(a_modes), len(b_modes))]
        return total / self.W2

    def expect_key(self, key: Key) -> complex:
        if self.flavor == "down":
            return self.expect_key_down(key)
        # <chi| O |chi> = <psi| U^+ O U |psi>, with U^+ eta_q U = eta^+_{-q}
        total = 0j
        for k2, c in particle_hole_key(key, self.N).items():
            total += c * self.expect_key_down(k2)
        return total

    def expect(self, poly: dict) -> complex:
        return sum(c * self.expect_key(k) for k, c in poly.items())

    def fermion_density(self) -> float:
        """<D> = (1/N) sum_k <eta^+_k eta_k>."""
        s = np.arange(1, self.n + 1)
        down = float(np.sum(2 * s * self.L) / self.W2 / self.N)
        return down if self.flavor == "down" else 1.0 - down


def particle_hole_key(key: Key, N: int) -> dict:
    """Normal-ordered U^+ (key) U as a polynomial."""
    factors = [(False, int(neg(q, N))) for q in key[0]] + [(True, int(neg(q, N))) for q in key[1]]
    return normal_order(factors)


def initial_vector(state: TruncatedPolarizedState, trunc: Truncation) -> np.ndarray:
    if state.N != trunc.N:
        raise ValueError("state and truncation are built for different N")
    return np.array([state.expect_key(k) for k in trunc.basis], dtype=complex)


def few_particle_valid(density: float, threshold: float = VALIDITY_THRESHOLD) -> bool:
    return min(density, 1.0 - density) < threshold


def smallest_converged_n(table: BogoliubovTable, tol: float = 1e-3) -> int:
    """Smallest n with |<D>_n - <D>_{n-1}| < tol."""
    prev = TruncatedPolarizedState(table, 0).fermion_density()
    for n in range(1, table.N // 2 + 1):
        cur = TruncatedPolarizedState(table, n).fermion_density()
        if abs(cur - prev) < tol:
            return n
        prev = cur
    return table.N // 2


def particle_hole(params: ModelParams) -> ModelParams:
    """Parameters of U H U^+: h and J_x reversed."""
    if not 2 * abs(params.h) > abs(params.Jx):
        warnings.warn("particle-hole mapping is only validated for 2|h| > |J_x|", RuntimeWarning, stacklevel=2)
    return params.replace(h=-params.h, Jx=-params.Jx)


@dataclass(frozen=True)
class SuperpositionSpec:
    y1: complex
    y2: complex

    def __post_init__(self):
        if abs(abs(self.y1) ** 2 + abs(self.y2) ** 2 - 1) > 1e-12:
            raise ValueError("superposition amplitudes must satisfy |y1|^2 + |y2|^2 = 1")

    @property
    def w1(self) -> float:
        return abs(self.y1) ** 2

    @property
    def w2(self) -> float:
        return abs(self.y2) ** 2


def decoupled_superposition(spec: SuperpositionSpec, series_down: TimeSeries, series_mirror: TimeSeries,
                            initial_value: float, name: str = "sz") -> TimeSeries:
    """Approximate <phi|S^z|phi>(t) from the decoupled down and mirrored trajectories.

    ``series_mirror`` holds <psi^n|S^z|psi^n> evolved under the field-reversed
    Hamiltonian; its increments enter with a minus sign.
    """
    t1, t2 = np.asarray(series_down.times), np.asarray(series_mirror.times)
    if t1.shape != t2.shape or not np.allclose(t1, t2, rtol=0, atol=1e-12):
        raise ValueError("the two trajectories must share the time grid")
    d = np.real(np.asarray(series_down[name]))
    m = np.real(np.asarray(series_mirror[name]))
    out = initial_value + spec.w1 * (d - d[0]) - spec.w2 * (m - m[0])
    return TimeSeries(t1.copy(), {name: out}, {"decoupled": True, "w1": spec.w1, "w2": spec.w2})


# ---------------------------------------------------------------- energies


def nu_vacuum(coeffs: HamiltonianCoeffs) -> float:
    return coeffs.H0 / coeffs.N


def nu_psi1(coeffs: HamiltonianCoeffs) -> float:
    """Energy density of psi^1 in closed form."""
    t, N = coeffs.table, coeffs.N
    pos = positive_indices(N)
    r = t.v[pos] / t.u[pos]
    W2 = 1.0 + float(np.sum(r ** 2))
    quad = np.sum(2j * r * coeffs.A_I[pos] + r ** 2 * coeffs.A_II[pos])
    L, J = np.meshgrid(pos, pos, indexing="ij")
    mL = neg(L, N)
    b = coeffs.B("III", L, L, J, J) - coeffs.B("III", mL, mL, J, J)
    quart = np.sum(np.outer(r, r) * b)
    return float(np.real(nu_vacuum(coeffs) + 2.0 / (N * W2) * (quad + quart)))


def nu_fully_polarized(params: ModelParams) -> float:
    return -params.h / 2 + params.Jz * zeta(params.N, params.alpha) / 8


def nu_chi1(params: ModelParams) -> float:
    """Energy density of chi^1 = psi^1 under the particle-hole mapped Hamiltonian."""
    return nu_psi1(build_model(params.replace(h=-params.h, Jx=-params.Jx))[2])


def energy_density(descriptor: str, params: ModelParams) -> float:
    """Energy density of a named initial state (see :func:`parse_state`)."""
    st = parse_state(descriptor, params.N)
    coeffs = build_model(params)[2]
    half = params.N // 2
    kind, n = st["kind"], st.get("n")
    if kind == "vacuum":
        return nu_vacuum(coeffs)
    if kind in ("psi", "chi"):
        if n == half:
            nu = nu_fully_polarized(params)
            return nu if kind == "psi" else nu + params.h
        if n == 1:
            return nu_psi1(coeffs) if kind == "psi" else nu_chi1(params)
    if kind == "superposition":
        spec = st["spec"]
        if n == half:
            return params.h * (spec.w2 - spec.w1) / 2 + params.Jz * zeta(params.N, params.alpha) / 8
        if n == 1:
            if params.N <= 8:
                raise ValueError("the psi^1/chi^1 cross term is only known to vanish for N > 8")
            return spec.w1 * nu_psi1(coeffs) + spec.w2 * nu_chi1(params)
    raise ValueError(f"no closed-form energy density for state {descriptor!r}")


# ---------------------------------------------------------------- descriptors

_STATE_RE = re.compile(
    r"(?P<kind>psi|chi):(?P<n>\d+|full)$"
    r"|(?P<vac>vacuum)$"
    r"|superposition:(?P<y>[^:]+):(?P<sn>\d+|full)$"
)


def parse_state(descriptor: str, N: int) -> dict:
    """Parse 'psi:n', 'chi:n', 'vacuum' or 'superposition:y1re,y1im,y2re,y2im:n'.

    ``n`` may be ``full`` for N/2.
    """
    m = _STATE_RE.match(descriptor.strip())
    if not m:
        raise ValueError(f"cannot parse initial state {descriptor!r}")

    def level(text):
        n = N // 2 if text == "full" else int(text)
        if not 1 <= n <= N // 2:
            raise ValueError(f"truncation level must be in [1, {N // 2}], got {n}")
        return n

    if m.group("vac"):
        return {"kind": "vacuum", "n": 0}
    if m.group("kind"):
        return {"kind": m.group("kind"), "n": level(m.group("n"))}
    parts = [float(x) for x in m.group("y").split(",")]
    if len(parts) != 4:
        raise ValueError("superposition needs four numbers y1re,y1im,y2re,y2im")
    spec = SuperpositionSpec(complex(parts[0], parts[1]), complex(parts[2], parts[3]))
    return {"kind": "superposition", "n": level(m.group("sn")), "spec": spec}


def make_state(descriptor: str, table: BogoliubovTable) -> TruncatedPolarizedState:
    """Pure state for a 'psi', 'chi' or 'vacuum' descriptor."""
    st = parse_state(descriptor, table.N)
    if st["kind"] == "superposition":
        raise ValueError("superpositions have no single expectation vector; use the decoupled evolution")
    flavor = "up" if st["kind"] == "chi" else "down"
    return TruncatedPolarizedState(table, st["n"], flavor)
