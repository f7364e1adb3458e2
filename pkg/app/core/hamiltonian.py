"""Operator matrices for the Zeeman, flip-flop (XY) and Ising (ZZ) terms.

Every operator can be built in two bases:

* ``full``: the 2^N product basis. Site 0 is the most significant tensor
  factor and bit value 1 means spin up.
* ``single_excitation``: the N+1 states with at most one spin up. Index 0
  is the vacuum (all spins down) and index k+1 has only site k up.

The single-excitation matrices are exact restrictions of the full ones,
vacuum energy included. Spin operators are Pauli matrices over two and
frequencies are angular with hbar = 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import logging_config  # pylint: disable=unused-import
from ..config.settings import MAX_FULL_SITES
from .errors import BasisMismatchError, NetworkValidationError
from .factory import TermFactory
from .network import TWO_PI, SpinNetwork

logger = logging.getLogger("pst.hamiltonian")

HERMITIAN_TOL = 1e-12

TermKind = Literal["zeeman", "xy", "zz"]


class BasisKind(str, Enum):
    FULL = "full"
    SINGLE_EXCITATION = "single_excitation"


@dataclass(frozen=True)
class Basis:
    kind: BasisKind
    n_sites: int

    def __post_init__(self):
        if self.kind is BasisKind.FULL and self.n_sites > MAX_FULL_SITES:
            logger.error("refusing a full basis for %d sites", self.n_sites)
            raise NetworkValidationError(
                f"the full basis is limited to {MAX_FULL_SITES} sites, this network has {self.n_sites}"
            )

    @classmethod
    def full(cls, n_sites: int) -> "Basis":
        return cls(BasisKind.FULL, n_sites)

    @classmethod
    def single_excitation(cls, n_sites: int) -> "Basis":
        return cls(BasisKind.SINGLE_EXCITATION, n_sites)

    @classmethod
    def parse(cls, name: str | "Basis", n_sites: int) -> "Basis":
        if isinstance(name, Basis):
            return name
        return cls(BasisKind(name), n_sites)

    @property
    def dim(self) -> int:
        if self.kind is BasisKind.FULL:
            return 2**self.n_sites
        return self.n_sites + 1

    @property
    def is_full(self) -> bool:
        return self.kind is BasisKind.FULL

    def site_state(self, site: int) -> int:
        """Index of the basis state with only ``site`` up."""
        if self.is_full:
            return 1 << (self.n_sites - 1 - site)
        return site + 1

    def z_table(self) -> np.ndarray:
        """(dim, N) table of I^z eigenvalues (+-1/2) for each diagonal state."""
        if self.is_full:
            states = np.arange(self.dim)[:, None]
            shifts = self.n_sites - 1 - np.arange(self.n_sites)[None, :]
            return ((states >> shifts) & 1) - 0.5
        table = np.full((self.dim, self.n_sites), -0.5)
        table[np.arange(1, self.dim), np.arange(self.n_sites)] = 0.5
        return table


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    data: np.ndarray
    basis: Basis
    hermitian: bool = False

    def __post_init__(self):
        if self.data.shape != (self.basis.dim, self.basis.dim):
            raise BasisMismatchError(
                f"matrix of shape {self.data.shape} does not match basis dimension {self.basis.dim}"
            )
        if self.hermitian and not is_hermitian(self.data):
            raise ValueError("matrix flagged Hermitian is not Hermitian")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_basis(self.basis, other.basis)
        return OperatorMatrix(self.data + other.data, self.basis, self.hermitian and other.hermitian)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_basis(self.basis, other.basis)
        return OperatorMatrix(self.data - other.data, self.basis, self.hermitian and other.hermitian)

    def scaled(self, factor: float) -> "OperatorMatrix":
        return OperatorMatrix(self.data * factor, self.basis, self.hermitian and np.isreal(factor))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def nonzero_elements(self, tol: float = 1e-9) -> list[tuple[int, int, complex]]:
        rows, cols = np.nonzero(np.abs(self.data) > tol)
        return [(int(r), int(c), complex(self.data[r, c])) for r, c in zip(rows, cols)]

    def __repr__(self) -> str:
        return f"<OperatorMatrix basis={self.basis.kind.value} dim={self.dim} hermitian={self.hermitian}>"


def is_hermitian(data: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(data)))) if data.size else 1.0
    return float(np.max(np.abs(data - data.conj().T), initial=0.0)) < tol * scale


def hermitize(data: np.ndarray) -> np.ndarray:
    return 0.5 * (data + data.conj().T)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> np.ndarray:
    _check_same_basis(a.basis, b.basis)
    return a.data @ b.data - b.data @ a.data


def _check_same_basis(a: Basis, b: Basis) -> None:
    if a != b:
        raise BasisMismatchError(f"basis mismatch: {a} vs {b}")


def _check_basis(net: SpinNetwork, basis: Basis) -> None:
    if basis.n_sites != net.n_sites:
        raise BasisMismatchError(f"basis for {basis.n_sites} sites used with a {net.n_sites}-site network")


class Term(BaseModel):
    """One scaled term of a recipe.

    ``excluded`` only applies to Zeeman terms, ``pairs`` only to XY terms
    (``None`` means every coupled pair). ``reference`` is a rotating-frame
    frequency in rad/s subtracted from every included shift.
    """

    kind: TermKind
    scale: float = 1.0
    excluded: frozenset[int] = frozenset()
    pairs: frozenset[tuple[int, int]] | None = None
    reference: float = 0.0
    model_config = ConfigDict(frozen=True)

    @field_validator("pairs", mode="after")
    @classmethod
    def normalize_pairs(cls, v):
        if v is None:
            return v
        return frozenset((min(i, j), max(i, j)) for i, j in v)

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.excluded and self.kind != "zeeman":
            raise ValueError("only Zeeman terms can exclude sites")
        if self.pairs is not None and self.kind != "xy":
            raise ValueError("only XY terms can restrict pairs")
        if self.reference and self.kind != "zeeman":
            raise ValueError("only Zeeman terms take a reference frequency")
        return self


class HamiltonianRecipe(BaseModel):
    terms: tuple[Term, ...] = Field(min_length=1)
    model_config = ConfigDict(frozen=True)

    @classmethod
    def zeeman(cls, excluded=(), scale: float = 1.0, reference: float = 0.0) -> "HamiltonianRecipe":
        return cls(terms=(Term(kind="zeeman", excluded=frozenset(excluded), scale=scale, reference=reference),))

    @classmethod
    def xy(cls, pairs=None, scale: float = 1.0) -> "HamiltonianRecipe":
        return cls(terms=(Term(kind="xy", pairs=None if pairs is None else frozenset(pairs), scale=scale),))

    @classmethod
    def zz(cls, scale: float = 1.0) -> "HamiltonianRecipe":
        return cls(terms=(Term(kind="zz", scale=scale),))

    def __add__(self, other: "HamiltonianRecipe") -> "HamiltonianRecipe":
        return HamiltonianRecipe(terms=self.terms + other.terms)

    def describe(self) -> str:
        parts = []
        for term in self.terms:
            text = term.kind.upper() if term.kind != "zeeman" else "Z"
            if term.excluded:
                text += "^{!=" + ",".join(str(s) for s in sorted(term.excluded)) + "}"
            if term.pairs is not None:
                text += "[" + ";".join(f"{i}-{j}" for i, j in sorted(term.pairs)) + "]"
            if term.scale != 1.0:
                text = f"{term.scale:.6g}*{text}"
            parts.append(text)
        return " + ".join(parts)

    def validate_for(self, net: SpinNetwork) -> None:
        coupled = set(net.coupled_pairs())
        for term in self.terms:
            for site in term.excluded:
                if not 0 <= site < net.n_sites:
                    raise NetworkValidationError(f"excluded site {site} is not in the network")
            if term.pairs is not None:
                for pair in sorted(term.pairs):
                    if pair not in coupled:
                        raise NetworkValidationError(
                            f"pair {net.labels[pair[0]]}-{net.labels[pair[1]]} is not coupled in the network"
                        )


def zeeman_matrix(net: SpinNetwork, excluded, basis: Basis, reference: float = 0.0) -> np.ndarray:
    _check_basis(net, basis)
    z = basis.z_table()
    diag = np.zeros(basis.dim)
    shifts = net.shifts
    for k in range(net.n_sites):
        if k in excluded:
            continue
        diag += (shifts[k] - reference) * z[:, k]
    return np.diag(diag).astype(complex)


def zz_matrix(net: SpinNetwork, basis: Basis) -> np.ndarray:
    _check_basis(net, basis)
    z = basis.z_table()
    diag = np.zeros(basis.dim)
    for i, j, coupling in net.couplings_hz:
        diag += TWO_PI * coupling * (z[:, i] * z[:, j])
    return np.diag(diag).astype(complex)


def xy_matrix(net: SpinNetwork, pairs, basis: Basis) -> np.ndarray:
    _check_basis(net, basis)
    data = np.zeros((basis.dim, basis.dim), dtype=complex)
    allowed = None if pairs is None else set(pairs)
    for i, j, coupling in net.couplings_hz:
        if allowed is not None and (i, j) not in allowed:
            continue
        # flip-flop element 2*pi*J/2 between states differing by an i<->j swap
        element = np.pi * coupling
        if basis.is_full:
            n = net.n_sites
            mi, mj = 1 << (n - 1 - i), 1 << (n - 1 - j)
            states = np.arange(basis.dim)
            flip = ((states & mi) > 0) != ((states & mj) > 0)
            src = states[flip]
            data[src ^ (mi | mj), src] = element
        else:
            data[i + 1, j + 1] = element
            data[j + 1, i + 1] = element
    return data


def build_zeeman(net: SpinNetwork, excluded=(), basis: Basis | str = "single_excitation", reference: float = 0.0) -> OperatorMatrix:
    """Sum of (dOmega_i - reference) I_i^z over the sites not in ``excluded``."""
    basis = Basis.parse(basis, net.n_sites)
    excluded = frozenset(net.index(s) for s in excluded)
    logger.debug("building Zeeman term, excluded=%s basis=%s", sorted(excluded), basis.kind.value)
    return OperatorMatrix(zeeman_matrix(net, excluded, basis, reference), basis, hermitian=True)


def build_xy(net: SpinNetwork, allowed_pairs=None, basis: Basis | str = "single_excitation") -> OperatorMatrix:
    """Flip-flop coupling sum 2*pi*J_ij (I_i^x I_j^x + I_i^y I_j^y)."""
    basis = Basis.parse(basis, net.n_sites)
    pairs = None
    if allowed_pairs is not None:
        pairs = frozenset(tuple(sorted((net.index(a), net.index(b)))) for a, b in allowed_pairs)
        HamiltonianRecipe.xy(pairs).validate_for(net)
    logger.debug("building XY term over %s pairs", "all" if pairs is None else len(pairs))
    return OperatorMatrix(xy_matrix(net, pairs, basis), basis, hermitian=True)


def build_zz(net: SpinNetwork, basis: Basis | str = "single_excitation") -> OperatorMatrix:
    """Ising coupling sum 2*pi*J_ij I_i^z I_j^z (diagonal)."""
    basis = Basis.parse(basis, net.n_sites)
    return OperatorMatrix(zz_matrix(net, basis), basis, hermitian=True)


_factory = TermFactory()


def assemble(recipe: HamiltonianRecipe, net: SpinNetwork, basis: Basis | str = "single_excitation") -> OperatorMatrix:
    """Scaled sum of the recipe's terms."""
    basis = Basis.parse(basis, net.n_sites)
    _check_basis(net, basis)
    recipe.validate_for(net)
    data = np.zeros((basis.dim, basis.dim), dtype=complex)
    for term in recipe.terms:
        data += term.scale * _factory.get(term.kind).build(net, term, basis)
    logger.debug("assembled %s in %s basis", recipe.describe(), basis.kind.value)
    return OperatorMatrix(hermitize(data), basis, hermitian=True)


def total_z(basis: Basis) -> OperatorMatrix:
    return OperatorMatrix(np.diag(basis.z_table().sum(axis=1)).astype(complex), basis, hermitian=True)


def number_operator(site: int, basis: Basis) -> OperatorMatrix:
    """Projector onto ``site`` being up."""
    return OperatorMatrix(np.diag(basis.z_table()[:, site] + 0.5).astype(complex), basis, hermitian=True)


def single_excitation_indices(n_sites: int) -> np.ndarray:
    """Full-basis indices of the vacuum followed by each single excitation."""
    full = Basis.full(n_sites)
    return np.array([0] + [full.site_state(k) for k in range(n_sites)])


def project_to_single_excitation(op: OperatorMatrix) -> OperatorMatrix:
    if not op.basis.is_full:
        raise BasisMismatchError("projection needs a full-basis operator")
    idx = single_excitation_indices(op.basis.n_sites)
    sub = op.data[np.ix_(idx, idx)]
    return OperatorMatrix(sub, Basis.single_excitation(op.basis.n_sites), op.hermitian)


def vacuum_energy(recipe: HamiltonianRecipe, net: SpinNetwork) -> float:
    """Energy of the all-down state; a constant diagonal offset of every sector."""
    return float(assemble(recipe, net, "single_excitation").data[0, 0].real)
