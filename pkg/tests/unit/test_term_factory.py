"""Tests for the TermFactory and its builders."""

import numpy as np
import pytest

from app.core.factory import TermBuilder, TermFactory
from app.core.hamiltonian import Basis, Term, build_xy, build_zeeman, build_zz


def test_factory_returns_builders_that_build(two_spin):
    fac = TermFactory()
    basis = Basis.single_excitation(2)

    zeeman = fac.get("zeeman")
    assert isinstance(zeeman, TermBuilder)
    assert np.array_equal(zeeman.build(two_spin, Term(kind="zeeman"), basis), build_zeeman(two_spin).data)

    xy = fac.get("xy")
    assert np.array_equal(xy.build(two_spin, Term(kind="xy"), basis), build_xy(two_spin).data)

    zz = fac.get("zz")
    assert np.array_equal(zz.build(two_spin, Term(kind="zz"), basis), build_zz(two_spin).data)


def test_factory_passes_exclusions(three_chain):
    built = TermFactory().get("zeeman").build(three_chain, Term(kind="zeeman", excluded=frozenset({0, 1})), Basis.full(3))
    assert np.array_equal(built, build_zeeman(three_chain, excluded=(0, 1), basis="full").data)


def test_factory_rejects_unknown_kind():
    fac = TermFactory()
    with pytest.raises(ValueError):
        fac.get("dipolar")
