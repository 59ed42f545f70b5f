"""Normal-ordered algebra of momentum-labelled fermionic ladder operators.

A monomial is keyed by ``(cre, ann)``: two strictly increasing tuples of grid
indices, standing for ``eta^+_{cre[0]} ... eta^+_{cre[-1]} eta_{ann[0]} ... eta_{ann[-1]}``.
A polynomial is a dict from such keys to complex coefficients.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Iterator

Key = tuple  # (cre: tuple[int, ...], ann: tuple[int, ...])

IDENTITY: Key = ((), ())
PRUNE = 1e-15


def sort_sign(seq) -> tuple[tuple, int]:
    """Sort ``seq`` ascending; return (sorted tuple, permutation parity sign).

    The sign is 0 when an index repeats (Pauli exclusion).
    """
    s = list(seq)
    sign = 1
    # insertion sort: sequences here are at most ~10 long
    for i in range(1, len(s)):
        x = s[i]
        j = i - 1
        while j >= 0 and s[j] > x:
            s[j + 1] = s[j]
            j -= 1
            sign = -sign
        if j >= 0 and s[j] == x:
            return (), 0
        s[j + 1] = x
    return tuple(s), sign


def canonicalize(factors: Iterable[tuple[bool, int]], coeff: complex = 1.0):
    """Bring an already normal-ordered factor list into canonical form.

    ``factors`` is a sequence of ``(is_creation, index)`` with every creation
    factor to the left of every annihilation factor.  Returns ``(key, coeff)`` or
    ``None`` when the monomial vanishes.
    """
    factors = list(factors)
    n_cre = 0
    while n_cre < len(factors) and factors[n_cre][0]:
        n_cre += 1
    if any(f[0] for f in factors[n_cre:]):
        raise ValueError("factor list is not normal-ordered; use normal_order()")
    cre, s1 = sort_sign(f[1] for f in factors[:n_cre])
    ann, s2 = sort_sign(f[1] for f in factors[n_cre:])
    if s1 * s2 == 0:
        return None
    return (cre, ann), coeff * s1 * s2


def normal_order(factors: Iterable[tuple[bool, int]], coeff: complex = 1.0) -> dict:
    """Normal-order an arbitrary product of ladder operators."""
    out: dict = {}
    for fac, c in _normal_order_rec(tuple(factors), coeff):
        res = canonicalize(fac, c)
        if res is not None:
            add_term(out, res[0], res[1])
    return prune(out)


def _normal_order_rec(factors: tuple, coeff) -> Iterator[tuple[tuple, complex]]:
    # find the first annihilator immediately followed by a creator and swap them
    for i in range(len(factors) - 1):
        (c1, k1), (c2, k2) = factors[i], factors[i + 1]
        if not c1 and c2:
            swapped = factors[:i] + (factors[i + 1], factors[i]) + factors[i + 2:]
            yield from _normal_order_rec(swapped, -coeff)
            if k1 == k2:
                yield from _normal_order_rec(factors[:i] + factors[i + 2:], coeff)
            return
    yield factors, coeff


def _contract_sign(alpha: tuple, gamma: tuple, pairs: tuple) -> int:
    """Sign of the term of ``alpha . gamma`` in which ``pairs`` are contracted.

    ``alpha`` is a string of annihilators, ``gamma`` of creators; each entry of
    ``pairs`` is a mode present in both.
    """
    a, g = list(alpha), list(gamma)
    sign = 1
    for q in pairs:
        i = a.index(q)
        j = g.index(q)
        # move a[i] to the right end of a, g[j] to the left end of g
        if (len(a) - 1 - i + j) % 2:
            sign = -sign
        del a[i]
        del g[j]
    if (len(a) * len(g)) % 2:
        sign = -sign
    return sign


def mul_keys(a: Key, b: Key, min_contractions: int = 0) -> Iterator[tuple[Key, int]]:
    """Normal-ordered expansion of the product of two canonical monomials.

    Yields ``(key, sign)``; terms with fewer than ``min_contractions`` contractions
    are skipped.
    """
    ca, aa = a
    cb, ab = b
    common = [q for q in aa if q in cb] if aa and cb else []
    for r in range(min_contractions, len(common) + 1):
        for S in combinations(common, r):
            if r:
                alpha = tuple(q for q in aa if q not in S)
                gamma = tuple(q for q in cb if q not in S)
            else:
                alpha, gamma = aa, cb
            cre, s1 = sort_sign(ca + gamma)
            if not s1:
                continue
            ann, s2 = sort_sign(alpha + ab)
            if not s2:
                continue
            yield (cre, ann), s1 * s2 * _contract_sign(aa, cb, S)


def comm_keys(a: Key, b: Key, min_contractions: int = 1) -> dict:
    """Commutator [a, b] of two canonical monomials of even total degree.

    For even-degree monomials the uncontracted terms of ``ab`` and ``ba`` cancel,
    so ``min_contractions`` defaults to 1; higher values drop high-degree output.
    """
    out: dict = {}
    for key, s in mul_keys(a, b, min_contractions):
        out[key] = out.get(key, 0) + s
    for key, s in mul_keys(b, a, min_contractions):
        out[key] = out.get(key, 0) - s
    return {k: v for k, v in out.items() if v}


def degree(key: Key) -> int:
    return len(key[0]) + len(key[1])


def p_number(key: Key) -> int:
    return max(len(key[0]), len(key[1]))


def dagger_key(key: Key) -> tuple[Key, int]:
    """Hermitian conjugate of a canonical monomial: (key, sign)."""
    cre, ann = key
    p, q = len(cre), len(ann)
    sign = -1 if ((p * (p - 1) // 2 + q * (q - 1) // 2) % 2) else 1
    return (ann, cre), sign


def add_term(poly: dict, key: Key, coeff) -> None:
    poly[key] = poly.get(key, 0) + coeff


def prune(poly: dict, tol: float = PRUNE) -> dict:
    return {k: v for k, v in poly.items() if abs(v) > tol}


def monomial(cre=(), ann=(), coeff: complex = 1.0) -> dict:
    """Polynomial holding a single (possibly unsorted) normal-ordered monomial."""
    res = canonicalize([(True, q) for q in cre] + [(False, q) for q in ann], coeff)
    return {} if res is None else {res[0]: res[1]}


def poly_add(*polys: dict, scale=None) -> dict:
    out: dict = {}
    for i, p in enumerate(polys):
        f = 1 if scale is None else scale[i]
        for k, v in p.items():
            add_term(out, k, f * v)
    return prune(out)


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            for key, s in mul_keys(ka, kb):
                add_term(out, key, s * va * vb)
    return prune(out)


def commutator(a: dict, b: dict) -> dict:
    """Normal-ordered [a, b] of two polynomials (any parity)."""
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            vv = va * vb
            even = degree(ka) % 2 == 0 or degree(kb) % 2 == 0
            for key, s in mul_keys(ka, kb, 1 if even else 0):
                add_term(out, key, s * vv)
            for key, s in mul_keys(kb, ka, 1 if even else 0):
                add_term(out, key, -s * vv)
    return prune(out)


def dagger(poly: dict) -> dict:
    out = {}
    for k, v in poly.items():
        dk, s = dagger_key(k)
        out[dk] = s * complex(v).conjugate()
    return out


def total_label(key: Key, labels) -> int:
    """Signed momentum-label sum (creations minus annihilations)."""
    return sum(labels[q] for q in key[0]) - sum(labels[q] for q in key[1])
