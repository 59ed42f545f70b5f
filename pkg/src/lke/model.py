"""Chain parameters, Bogoliubov data and the coefficients of the fermionic Hamiltonian.

Momenta live on the even-parity grid ``k_i = pi * (2 i - N + 1) / N`` for grid
index ``i = 0 .. N-1``.  The odd integer ``2 i - N + 1`` is called the momentum
*label*; a product of ladder operators conserves momentum iff the signed sum of
labels vanishes modulo ``2 N``.  The index of ``-k_i`` is ``N - 1 - i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    N: int
    Jx: float = -1.0
    Jz: float = -1.0
    h: float = -1.0
    alpha: float = 3.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 4, got {self.N}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    def distance(self, m):
        """Shortest distance around the ring, d(m) = min(m, N - m)."""
        m = np.asarray(m) % self.N
        return np.minimum(m, self.N - m)

    def replace(self, **changes) -> "ModelParams":
        kw = dict(N=self.N, Jx=self.Jx, Jz=self.Jz, h=self.h, alpha=self.alpha)
        kw.update(changes)
        return ModelParams(**kw)


def sgn(x):
    """Sign with the convention sgn(0) = +1."""
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def momentum_labels(N: int) -> np.ndarray:
    return 2 * np.arange(N) - N + 1


def momenta(N: int) -> np.ndarray:
    return np.pi * momentum_labels(N) / N


def neg(i, N: int):
    """Grid index of -k for grid index i."""
    return N - 1 - np.asarray(i)


def positive_indices(N: int) -> np.ndarray:
    """Grid indices with 0 < k < pi, ascending in k."""
    return np.arange(N // 2, N)


def dispersion(params: ModelParams, k):
    """Quasiparticle energy eps_k = sgn(a_k) sqrt(a_k^2 + b_k^2)."""
    k = np.asarray(k, dtype=float)
    a = params.h + 0.5 * params.Jx * np.cos(k)
    b = 0.5 * params.Jx * np.sin(k)
    return sgn(a) * np.hypot(a, b)


@dataclass(frozen=True)
class BogoliubovTable:
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    eps: np.ndarray

    @classmethod
    def build(cls, params: ModelParams) -> "BogoliubovTable":
        k = momenta(params.N)
        a = params.h + 0.5 * params.Jx * np.cos(k)
        b = 0.5 * params.Jx * np.sin(k)
        s = sgn(a)
        # arctan(b/a) / 2, well defined at a = 0 through the sgn(0) = +1 convention
        x = 0.5 * np.arctan2(s * b, s * a)
        return cls(k=k, a=a, b=b, x=x, u=np.cos(x), v=np.sin(x), eps=s * np.hypot(a, b))

    @property
    def N(self) -> int:
        return len(self.k)

    def X(self, i, j):
        return self.u[i] * self.u[j] - self.v[i] * self.v[j]

    def Y(self, i, j):
        return self.u[i] * self.v[j]

    def Z(self, i, j):
        return self.u[i] * self.u[j]

    def Zp(self, i, j):
        return self.v[i] * self.v[j]


@dataclass(frozen=True)
class CouplingKernel:
    """A translation-invariant pair kernel expressed in momentum space.

    ``c_diff[d]`` holds ``c(k_i, k_j)`` for ``(i - j) mod N == d``; ``zeta`` is the
    total weight ``sum_m w(m)``.  The long-range kernel has ``w(m) = d(m)^-alpha`` on
    ``2 <= m <= N-2``; the correlator kernel is ``gamma(m)``, i.e. ``c -> cos(m dk)``
    and ``zeta -> 1``.
    """

    c_diff: np.ndarray
    zeta: float

    @classmethod
    def long_range(cls, params: ModelParams) -> "CouplingKernel":
        N = params.N
        m = np.arange(2, N - 1)
        w = params.distance(m).astype(float) ** (-params.alpha)
        d = np.arange(N)
        c = np.cos(2 * np.pi * np.outer(d, m) / N) @ w
        return cls(c_diff=c, zeta=float(np.sum(np.sort(w))))

    @classmethod
    def correlator(cls, N: int, m: int) -> "CouplingKernel":
        d = np.arange(N)
        return cls(c_diff=np.cos(2 * np.pi * m * d / N), zeta=1.0)

    @property
    def N(self) -> int:
        return len(self.c_diff)

    def c(self, i, j):
        return self.c_diff[(np.asarray(i) - np.asarray(j)) % self.N]

    def matrix(self) -> np.ndarray:
        i = np.arange(self.N)
        return self.c(i[:, None], i[None, :])


def zeta(N: int, alpha: float) -> float:
    """Truncated zeta function sum_{m=2}^{N-2} d(m)^-alpha."""
    return CouplingKernel.long_range(ModelParams(N=N, alpha=alpha)).zeta


def conserves(labels_c, labels_a, N: int):
    """Momentum conservation for creation/annihilation label sums (mod 2N)."""
    return (np.asarray(labels_c) - np.asarray(labels_a)) % (2 * N) == 0


# Operator shapes of the five quartic families.  Each entry lists, for the four
# momentum arguments (k1..k4), whether the factor is a creation operator and
# whether its momentum enters with a minus sign.
QUARTIC_SHAPES = {
    "I": ((False, True), (False, False), (False, True), (False, False)),
    "II": ((True, False), (False, False), (False, True), (False, False)),
    "III": ((True, False), (True, True), (False, True), (False, False)),
    "IV": ((True, False), (True, True), (True, False), (False, False)),
    "V": ((True, False), (True, True), (True, False), (True, True)),
}


class PerturbationCoeffs:
    """Coefficients contributed by a pair kernel, per unit coupling J_z.

    Everything is linear in the kernel, so the same code yields the Hamiltonian
    (long-range kernel) and the zz-correlator weights (gamma kernel).
    """

    def __init__(self, table: BogoliubovTable, kernel: CouplingKernel):
        self.table = table
        self.kernel = kernel
        self.N = table.N

    @cached_property
    def gamma(self) -> float:
        """Gamma_N = -1/2 + mean(v_k^2), the vacuum value of S^z."""
        return -0.5 + float(np.mean(self.table.v ** 2))

    @cached_property
    def _pair(self):
        t, N = self.table, self.N
        i = np.arange(N)
        I, J = i[:, None], i[None, :]
        return self.kernel.c(I, J), t.X(I, J), t.Y(I, J), t.Y(J, I)

    @cached_property
    def h0(self) -> float:
        c, _, Ykq, Yqk = self._pair
        z = self.kernel.zeta
        return 0.5 * self.N * z * self.gamma ** 2 + np.sum(c * Yqk * (Ykq + Yqk)) / (2 * self.N)

    @cached_property
    def a1(self) -> np.ndarray:
        t = self.table
        c, X, Ykq, Yqk = self._pair
        z = self.kernel.zeta
        return 1j * z * t.Y(np.arange(self.N), np.arange(self.N)) * self.gamma + 1j * np.sum(
            c * X * (Ykq + Yqk), axis=1
        ) / (2 * self.N)

    @cached_property
    def a2(self) -> np.ndarray:
        t = self.table
        c, X, Ykq, Yqk = self._pair
        z = self.kernel.zeta
        i = np.arange(self.N)
        return z * t.X(i, i) * self.gamma + np.sum(c * (X ** 2 - (Ykq + Yqk) ** 2), axis=1) / (2 * self.N)

    def b(self, family: str, k1, k2, k3, k4):
        """Quartic coefficient of one family at grid indices (k1..k4), vectorised."""
        t, N = self.table, self.N
        k1, k2, k3, k4 = (np.asarray(q) for q in (k1, k2, k3, k4))
        lab = momentum_labels(N)
        delta = (lab[k1] - lab[k2] + lab[k3] - lab[k4]) % (2 * N) == 0
        pref = delta / (2 * N)
        c12 = self.kernel.c(k1, k2)
        if family == "I":
            val = -c12 * t.Y(k2, k1) * t.Y(k4, k3)
        elif family == "II":
            val = 2j * c12 * t.X(k1, k2) * t.Y(k4, k3)
        elif family == "III":
            m3 = neg(k3, N)
            val = 2 * c12 * t.Y(k1, k2) * t.Y(k4, k3) - self.kernel.c(k1, m3) * (
                t.Z(k1, k3) + t.Zp(k1, k3)
            ) * (t.Z(k2, k4) + t.Zp(k2, k4))
        elif family == "IV":
            val = -2j * c12 * t.X(k3, k4) * t.Y(k1, k2)
        elif family == "V":
            val = -c12 * t.Y(k1, k2) * t.Y(k3, k4)
        else:
            raise ValueError(f"unknown quartic family {family!r}")
        return pref * val


@dataclass
class HamiltonianCoeffs:
    """All coefficients of the normal-ordered fermionic Hamiltonian."""

    params: ModelParams
    table: BogoliubovTable
    kernel: CouplingKernel
    pert: PerturbationCoeffs = field(repr=False)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def GammaN(self) -> float:
        return self.pert.gamma

    @cached_property
    def H0(self) -> float:
        return -0.5 * float(np.sum(np.sort(self.table.eps))) + self.params.Jz * self.pert.h0

    @cached_property
    def A_I(self) -> np.ndarray:
        return self.params.Jz * self.pert.a1

    @cached_property
    def A_II(self) -> np.ndarray:
        return self.table.eps + self.params.Jz * self.pert.a2

    @property
    def A_III(self) -> np.ndarray:
        return -self.A_I

    def B(self, family: str, k1, k2, k3, k4):
        return self.params.Jz * self.pert.b(family, k1, k2, k3, k4)


def build_model(params: ModelParams):
    """Return (BogoliubovTable, CouplingKernel, HamiltonianCoeffs) for a chain."""
    table = BogoliubovTable.build(params)
    kernel = CouplingKernel.long_range(params)
    coeffs = HamiltonianCoeffs(params, table, kernel, PerturbationCoeffs(table, kernel))
    return table, kernel, coeffs
