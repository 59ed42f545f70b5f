"""Symmetry-reduced operator bases built from momentum pair factors.

Three pair factors exist for a momentum k: the pair annihilator eta_k eta_{-k},
the pair creator eta^+_k eta^+_{-k} (both labelled by 0 < k < pi) and the number
operator eta^+_k eta_k (any k).  A basis element is the canonical normal-ordered
monomial obtained by collecting a set of distinct pair factors; its overall sign
is irrelevant for a basis, so elements are stored as bare canonical keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .fermions import IDENTITY, Key, dagger_key, degree, p_number, sort_sign
from .model import neg, positive_indices

MAX_DEGREE = 8
MAX_P = 4

SCHEMES = ("T2", "Tp2", "T4", "T6p3", "T6p4", "Tp4")


def pair_factors(N: int) -> list[Key]:
    """All pair factors as (cre, ann) index tuples (unsorted within blocks)."""
    out = []
    for k in positive_indices(N):
        mk = int(neg(k, N))
        out.append(((), (int(k), mk)))
        out.append(((int(k), mk), ()))
    for k in range(N):
        out.append(((k,), (k,)))
    return out


@lru_cache(maxsize=64)
def _pair_products(N: int, n_factors: int) -> frozenset:
    if n_factors == 0:
        return frozenset([IDENTITY])
    keys = set()
    for combo in combinations(pair_factors(N), n_factors):
        cre, s1 = sort_sign(q for f in combo for q in f[0])
        if not s1:
            continue
        ann, s2 = sort_sign(q for f in combo for q in f[1])
        if not s2:
            continue
        keys.add((cre, ann))
    return frozenset(keys)


def enumerate_class(N: int, deg: int, p: int | None = None) -> list[Key]:
    """Pair-structured canonical monomials of the given degree (and p-number).

    Odd degrees give the empty class.  ``p=None`` returns the whole degree class.
    """
    if deg < 0 or deg % 2:
        return []
    if deg > MAX_DEGREE:
        raise ValueError(f"degree {deg} exceeds the supported maximum {MAX_DEGREE}")
    keys = _pair_products(N, deg // 2)
    if p is not None:
        keys = (k for k in keys if p_number(k) == p)
    return sorted(keys)


@dataclass(frozen=True)
class Scheme:
    """Truncation scheme: Deg(d) if p is None, P(p) if deg is None, else DegP(d, p)."""

    deg: int | None = None
    p: int | None = None

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        m = re.fullmatch(r"T(\d+)?(?:p(\d+))?", name)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"unknown truncation scheme {name!r}")
        deg = int(m.group(1)) if m.group(1) else None
        p = int(m.group(2)) if m.group(2) else None
        scheme = cls(deg, p)
        scheme.validate()
        return scheme

    def validate(self):
        if self.deg is not None and (self.deg % 2 or not 2 <= self.deg <= MAX_DEGREE):
            raise ValueError(f"degree must be even and in [2, {MAX_DEGREE}], got {self.deg}")
        if self.p is not None and not 1 <= self.p <= MAX_P:
            raise ValueError(f"p must be in [1, {MAX_P}], got {self.p}")
        if self.deg is not None and self.p is not None and not self.deg // 2 <= self.p <= self.deg:
            raise ValueError(f"class with degree {self.deg} and p-number {self.p} is empty")

    @property
    def name(self) -> str:
        return "T" + (str(self.deg) if self.deg is not None else "") + (
            f"p{self.p}" if self.p is not None else ""
        )

    @property
    def max_degree(self) -> int:
        return self.deg if self.deg is not None else 2 * self.p

    def members(self, N: int) -> list[Key]:
        if self.p is None:
            return [k for d in range(0, self.deg + 1, 2) for k in enumerate_class(N, d)]
        if self.deg is None:
            # union of the fixed-p classes for p' <= p, each over degrees p'..2p'
            return [
                k
                for d in range(0, 2 * self.p + 1, 2)
                for k in enumerate_class(N, d)
                if p_number(k) <= self.p and d <= 2 * p_number(k)
            ]
        lower = Scheme(deg=self.deg - 2).members(N) if self.deg > 2 else [IDENTITY]
        return lower + enumerate_class(N, self.deg, self.p)


@dataclass
class Truncation:
    """Indexed, conjugation-closed operator basis."""

    N: int
    scheme: Scheme
    basis: list
    index: dict = field(repr=False)
    conj_index: np.ndarray = field(repr=False)
    conj_sign: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.basis)

    @property
    def name(self) -> str:
        return self.scheme.name

    @property
    def max_degree(self) -> int:
        return max(degree(k) for k in self.basis)

    def degrees(self) -> np.ndarray:
        return np.array([degree(k) for k in self.basis])

    def position(self, key: Key) -> int:
        try:
            return self.index[key]
        except KeyError:
            raise KeyError(f"operator {key} is not part of truncation {self.name}") from None


def build_truncation(scheme: str | Scheme, N: int) -> Truncation:
    if isinstance(scheme, str):
        scheme = Scheme.parse(scheme)
    scheme.validate()
    if N < 4 or N % 2:
        raise ValueError(f"N must be an even integer >= 4, got {N}")
    keys = sorted(set(scheme.members(N)), key=lambda k: (degree(k), k))
    index = {k: i for i, k in enumerate(keys)}
    conj = np.empty(len(keys), dtype=np.int64)
    sign = np.empty(len(keys), dtype=np.int64)
    for i, k in enumerate(keys):
        dk, s = dagger_key(k)
        conj[i] = index[dk]
        sign[i] = s
    return Truncation(N, scheme, keys, index, conj, sign)


@dataclass(frozen=True)
class Functional:
    """Linear functional X -> sum_j coef[j] * X[idx[j]] on expectation vectors."""

    idx: np.ndarray
    coef: np.ndarray

    def __call__(self, X):
        X = np.asarray(X)
        return self.coef @ X[self.idx] if X.ndim == 1 else self.coef @ X[self.idx, ...]

    def __add__(self, other: "Functional") -> "Functional":
        idx = np.concatenate([self.idx, other.idx])
        coef = np.concatenate([self.coef, other.coef])
        uniq, inv = np.unique(idx, return_inverse=True)
        return Functional(uniq, np.bincount(inv, coef.real) + 1j * np.bincount(inv, coef.imag))

    def scale(self, factor) -> "Functional":
        return Functional(self.idx, factor * self.coef)


def project(poly: dict, trunc: Truncation, strict: bool = True) -> Functional:
    """Expectation-value functional of a polynomial over a truncation.

    With ``strict`` a monomial outside the truncation raises ``KeyError``;
    otherwise it is silently dropped.
    """
    idx, coef = [], []
    for key, c in poly.items():
        if key in trunc.index:
            idx.append(trunc.index[key])
            coef.append(c)
        elif strict:
            raise KeyError(f"operator {key} is not part of truncation {trunc.name}")
    return Functional(np.array(idx, dtype=np.int64), np.array(coef, dtype=complex))
