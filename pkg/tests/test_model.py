import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lke.ed import spin_hamiltonian
from lke.kinetics import hamiltonian_poly
from lke.model import (BogoliubovTable, ModelParams, build_model, dispersion, momenta, neg, positive_indices, sgn,
                       zeta)

from conftest import fock

sizes = st.sampled_from([4, 6, 8, 10, 20, 64])
fields = st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(7)
    with pytest.raises(ValueError):
        ModelParams(2)
    with pytest.raises(ValueError):
        ModelParams(8, alpha=-1)


def test_grid_symmetric_and_neg_involution():
    for N in (4, 6, 12):
        k = momenta(N)
        i = np.arange(N)
        assert np.allclose(k[neg(i, N)], -k)
        assert np.array_equal(neg(neg(i, N), N), i)
        assert np.all(k[positive_indices(N)] > 0)


def test_sgn_zero_is_plus():
    assert sgn(0.0) == 1.0 and sgn(-2) == -1.0


@given(sizes, fields, st.floats(-2, 2))
def test_bogoliubov_normalised(N, h, Jx):
    t = BogoliubovTable.build(ModelParams(N, Jx=Jx, h=h))
    assert np.allclose(t.u ** 2 + t.v ** 2, 1)
    assert np.allclose(np.abs(t.eps), np.hypot(t.a, t.b))


def test_dispersion_even_in_k():
    p = ModelParams(10, h=-0.7)
    k = momenta(10)
    assert np.allclose(dispersion(p, k), dispersion(p, -k))


def test_zeta_truncated_sum():
    N, a = 10, 3.0
    m = np.arange(2, N - 1)
    d = np.minimum(m, N - m)
    assert zeta(N, a) == pytest.approx(np.sum(d ** -a))


@pytest.mark.parametrize("N", [4, 6, 8])
def test_fermionic_hamiltonian_matches_spin_chain(N):
    """The normal-ordered polynomial equals the spin Hamiltonian on the even-parity sector."""
    rep = fock(N, -1.0, -0.7, -0.6, 2.5)
    coeffs = build_model(rep.params)[2]
    Hf = rep.poly_matrix(hamiltonian_poly(coeffs)).toarray()
    Hs = spin_hamiltonian(rep.params).toarray()
    P = rep.even_projector.toarray()
    assert np.max(np.abs(P @ (Hf - Hs) @ P)) < 1e-12
