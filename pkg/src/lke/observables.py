"""Spin observables as linear functionals of kinetic expectation vectors."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import Functional, Truncation, project
from .fermions import IDENTITY
from .kinetics import assemble_poly
from .model import (BogoliubovTable, CouplingKernel, ModelParams, PerturbationCoeffs, neg,
                    positive_indices, zeta)


def _pair_keys(k: int, N: int):
    """Canonical keys and signs of eta_{-k} eta_k and eta^+_k eta^+_{-k}."""
    mk = int(neg(k, N))
    s = 1 if mk < k else -1
    return ((), tuple(sorted((mk, k)))), s, (tuple(sorted((k, mk))), ()), -s


def quadratic_poly(N: int, const, c_nn, c_ann, c_cre) -> dict:
    """const + sum_k [c_nn n_k + c_ann eta_{-k} eta_k + c_cre eta^+_k eta^+_{-k}]."""
    poly = {IDENTITY: complex(const)}
    for k in range(N):
        ka, sa, kc, sc = _pair_keys(k, N)
        for key, v in ((((k,), (k,)), c_nn[k]), (ka, sa * c_ann[k]), (kc, sc * c_cre[k])):
            poly[key] = poly.get(key, 0) + v
    return poly


def spin_z_poly(table: BogoliubovTable) -> dict:
    N = table.N
    i = np.arange(N)
    Y = table.Y(i, i)
    gamma = -0.5 + float(np.mean(table.v ** 2))
    return quadratic_poly(N, gamma, table.X(i, i) / N, 1j * Y / N, -1j * Y / N)


def spin_z_functional(trunc: Truncation, table: BogoliubovTable) -> Functional:
    return project(spin_z_poly(table), trunc)


def spin_z(X, trunc: Truncation, table: BogoliubovTable, return_imag: bool = False):
    """Site-averaged <S^z> from an expectation vector."""
    val = spin_z_functional(trunc, table)(X)
    return (float(np.real(val)), float(np.imag(val))) if return_imag else float(np.real(val))


def spin_z_psi1_closed_form(params: ModelParams, table: BogoliubovTable | None = None) -> float:
    table = table or BogoliubovTable.build(params)
    pos = positive_indices(params.N)
    r = table.v[pos] / table.u[pos]
    W2 = 1.0 + float(np.sum(r ** 2))
    gamma = -0.5 + float(np.mean(table.v ** 2))
    corr = np.sum(r * (2 * table.Y(pos, pos) - r * table.X(pos, pos)))
    return float(gamma - 2.0 / (W2 * params.N) * corr)


@dataclass
class CorrelatorCoeffs:
    """Coefficients of <S^z_l S^z_{l+m}> for a translation-invariant state."""

    table: BogoliubovTable
    m: int

    @cached_property
    def pert(self) -> PerturbationCoeffs:
        return PerturbationCoeffs(self.table, CouplingKernel.correlator(self.table.N, self.m))

    @property
    def scale(self) -> float:
        return 2.0 / self.table.N

    @property
    def C0(self) -> float:
        return self.scale * self.pert.h0

    @property
    def R_I(self) -> np.ndarray:
        return self.scale * self.pert.a1

    @property
    def R_II(self) -> np.ndarray:
        return self.scale * self.pert.a2

    @property
    def R_III(self) -> np.ndarray:
        return -self.R_I

    def S(self, family, k1, k2, k3, k4):
        return self.scale * self.pert.b(family, k1, k2, k3, k4)

    def poly(self) -> dict:
        return assemble_poly(self.table.N, self.C0, self.R_I, self.R_II, self.R_III, self.S)


def zz_functional(trunc: Truncation, table: BogoliubovTable, m: int) -> Functional:
    """<S^z_l S^z_{l+m}>; pair-unstructured monomials have zero weight and are skipped."""
    N = table.N
    if abs(m) > N // 2:
        raise ValueError(f"|m| must not exceed N/2 = {N // 2}")
    if trunc.max_degree < 4:
        raise ValueError("zz correlations need a truncation containing all quartic pair operators")
    return project(CorrelatorCoeffs(table, abs(m)).poly(), trunc, strict=False)


def corr_zz(X, trunc: Truncation, table: BogoliubovTable, m: int) -> float:
    """Connected <S^z_l S^z_{l+m}> - <S^z_l>^2."""
    return float(np.real(zz_functional(trunc, table, m)(X)) - spin_z(X, trunc, table) ** 2)


def xx_nn_poly(table: BogoliubovTable) -> dict:
    N = table.N
    i = np.arange(N)
    k = table.k
    X, Y, Zp = table.X(i, i), table.Y(i, i), table.Zp(i, i)
    c, s = np.cos(k), np.sin(k)
    p_q0 = c * Zp - s * Y
    p_qI = c * Y - s * X / 2
    p_qII = c * X + 2 * s * Y
    f = 1.0 / (2 * N)
    return quadratic_poly(N, f * np.sum(p_q0), f * p_qII, 1j * f * p_qI, -1j * f * p_qI)


def corr_xx_nn(X, trunc: Truncation, table: BogoliubovTable) -> float:
    return float(np.real(project(xx_nn_poly(table), trunc)(X)))


def observable_functions(trunc: Truncation, table: BogoliubovTable, names=("sz",), m_list=()) -> dict:
    """Callables X -> complex value for evolve(); names from sz, cx1, czz, energy-free."""
    fz = spin_z_functional(trunc, table)
    out = {}
    for name in names:
        if name == "sz":
            out["sz"] = fz
        elif name == "cx1":
            out["cx1"] = project(xx_nn_poly(table), trunc)
        elif name == "czz":
            for m in m_list:
                fzz = zz_functional(trunc, table, m)
                out[f"czz_{m}"] = lambda X, fzz=fzz: fzz(X) - np.real(fz(X)) ** 2
        else:
            raise ValueError(f"unknown observable {name!r}")
    return out


@dataclass(frozen=True)
class ThermalExpansion:
    params: ModelParams

    @property
    def K1(self) -> float:
        p = self.params
        return p.h ** 2 / 4 + p.Jx ** 2 / 16 + p.Jz ** 2 * zeta(p.N, 2 * p.alpha) / 32

    @property
    def K2(self) -> float:
        p = self.params
        N = p.N
        w = np.zeros(N)
        m = np.arange(2, N - 1)
        w[m] = p.distance(m).astype(float) ** (-p.alpha)
        triple = 0.0
        for mm in range(2, N - 1):
            excluded = {N - 1 - mm, N - mm, N + 1 - mm}
            n = np.array([x for x in range(2, N - 1) if x not in excluded], dtype=int)
            if n.size:
                triple += w[mm] * np.sum(w[n] * w[(mm + n) % N])
        return -3 / 64 * p.h ** 2 * p.Jz * zeta(N, p.alpha) - p.Jz ** 3 / 256 * triple

    # K1 = 2^-N Tr H^2 / N and K2 = -2^-(N+2) Tr H^3 / N; expanding the Gibbs
    # ratio then gives -K1 b - 2 K2 b^2, and Tr(S^z H^2) / 2^(N+1) for the S^z term.

    def energy_density(self, beta):
        beta = np.asarray(beta)
        return -self.K1 * beta - 2 * self.K2 * beta ** 2

    def spin_z(self, beta):
        p = self.params
        beta = np.asarray(beta)
        return -p.h / 4 * beta + p.h * p.Jz * zeta(p.N, p.alpha) / 16 * beta ** 2


def thermal_expansion(params: ModelParams) -> ThermalExpansion:
    return ThermalExpansion(params)


def timescales(params: ModelParams) -> tuple[float, float]:
    """(tau, tau_trav): relaxation estimate N / sum|eps| and traversal time N / |J_x|."""
    eps = BogoliubovTable.build(params).eps
    tau = params.N / float(np.sum(np.abs(eps)))
    tau_trav = params.N / abs(params.Jx) if params.Jx != 0 else float("inf")
    return tau, tau_trav
