"""Factory providing the term builders that recipes are assembled from."""
from __future__ import annotations

from typing import TYPE_CHECKING, Protocol, runtime_checkable

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .hamiltonian import Basis, Term
    from .network import SpinNetwork


@runtime_checkable
class TermBuilder(Protocol):
    def build(self, net: "SpinNetwork", term: "Term", basis: "Basis") -> np.ndarray:  # pragma: no cover - trivial
        ...


class ZeemanBuilder:
    def build(self, net, term, basis):
        from .hamiltonian import zeeman_matrix

        return zeeman_matrix(net, term.excluded, basis, term.reference)


class XYBuilder:
    def build(self, net, term, basis):
        from .hamiltonian import xy_matrix

        return xy_matrix(net, term.pairs, basis)


class ZZBuilder:
    def build(self, net, term, basis):
        from .hamiltonian import zz_matrix

        return zz_matrix(net, basis)


class TermFactory:
    _mapping = {
        "zeeman": ZeemanBuilder,
        "xy": XYBuilder,
        "zz": ZZBuilder,
    }

    def get(self, kind: str) -> TermBuilder:
        try:
            cls = self._mapping[kind]
        except KeyError as exc:
            raise ValueError(f"unsupported term kind: {kind!r}") from exc
        return cls()
