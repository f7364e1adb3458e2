"""Spin network data model and network-file ingestion.

A network is a set of labelled spin-1/2 sites, each with a chemical shift,
and a sparse symmetric set of scalar couplings. Files and constructors take
frequencies in Hz; every computation downstream works in angular units
(rad/s) with hbar = 1, so the conversion happens here and nowhere else.

Network files are TOML::

    [sites]
    A = 0.0        # shift in Hz
    B = 1000.0

    [couplings]
    A-B = 50.0     # J in Hz
"""
from __future__ import annotations

import logging
import math
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ..config import logging_config  # pylint: disable=unused-import
from .errors import ConfigError, NetworkValidationError

logger = logging.getLogger("pst.network")

TWO_PI = 2.0 * math.pi
PAIR_SEPARATOR = "-"
# "-" joins pair keys; "," separates sites in pair and path arguments and in trace headers
RESERVED_LABEL_CHARS = frozenset("-,")
_BARE_KEY = re.compile(r"^[A-Za-z0-9_]+$")


def hz_to_rad(freq_hz: float) -> float:
    return TWO_PI * freq_hz


def rad_to_hz(omega: float) -> float:
    return omega / TWO_PI


class SpinNetwork(BaseModel):
    """Immutable spin network.

    ``couplings_hz`` holds ``(i, j, J)`` triples with ``i < j`` sorted by
    pair, which makes equal networks compare and hash equal.
    """

    labels: tuple[str, ...]
    shifts_hz: tuple[float, ...]
    couplings_hz: tuple[tuple[int, int, float], ...] = ()
    model_config = ConfigDict(frozen=True)

    @field_validator("labels")
    @classmethod
    def check_labels(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        for label in v:
            if not label or RESERVED_LABEL_CHARS & set(label) or label != label.strip():
                raise ValueError(f"invalid site label {label!r}")
        if len(set(v)) != len(v):
            raise ValueError("site labels must be unique")
        return v

    @model_validator(mode="after")
    def check_network(self):
        n = len(self.labels)
        if n < 2:
            raise ValueError("a network needs at least two sites")
        if len(self.shifts_hz) != n:
            raise ValueError(f"expected {n} shifts, got {len(self.shifts_hz)}")
        if not all(math.isfinite(s) for s in self.shifts_hz):
            raise ValueError("shifts must be finite")
        seen = set()
        for i, j, coupling in self.couplings_hz:
            if i == j:
                raise ValueError(f"self-coupling declared on site {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"coupling ({i}, {j}) references a site outside 0..{n - 1}")
            if i > j:
                raise ValueError(f"coupling ({i}, {j}) must be stored with i < j")
            if (i, j) in seen:
                raise ValueError(f"coupling ({i}, {j}) declared twice")
            if not math.isfinite(coupling):
                raise ValueError(f"coupling ({i}, {j}) is not finite")
            seen.add((i, j))
        if list(self.couplings_hz) != sorted(self.couplings_hz):
            raise ValueError("couplings must be sorted by pair")
        return self

    @classmethod
    def build(
        cls,
        labels: Iterable[str],
        shifts_hz: Iterable[float],
        couplings_hz: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]] = (),
    ) -> "SpinNetwork":
        """Normalize pair order and build a validated network.

        Raises :class:`NetworkValidationError` on any invariant violation.
        """
        if isinstance(couplings_hz, Mapping):
            triples = [(i, j, value) for (i, j), value in couplings_hz.items()]
        else:
            triples = list(couplings_hz)
        normalized = {}
        for i, j, value in triples:
            i, j = int(i), int(j)
            if i == j:
                raise NetworkValidationError(f"self-coupling declared on site {i}")
            key = (min(i, j), max(i, j))
            if key in normalized:
                raise NetworkValidationError(f"pair {key} declared twice")
            normalized[key] = float(value)
        try:
            return cls(
                labels=tuple(labels),
                shifts_hz=tuple(float(s) for s in shifts_hz),
                couplings_hz=tuple((i, j, v) for (i, j), v in sorted(normalized.items())),
            )
        except ValidationError as exc:
            raise NetworkValidationError(str(exc)) from exc

    @property
    def n_sites(self) -> int:
        return len(self.labels)

    @property
    def shifts(self) -> np.ndarray:
        """Chemical shifts in rad/s."""
        return TWO_PI * np.asarray(self.shifts_hz, dtype=float)

    def index(self, site: int | str) -> int:
        """Resolve a site given by label or by integer index."""
        if isinstance(site, (int, np.integer)) and not isinstance(site, bool):
            if 0 <= site < self.n_sites:
                return int(site)
            raise NetworkValidationError(f"site index {site} out of range 0..{self.n_sites - 1}")
        if isinstance(site, str):
            if site in self.labels:
                return self.labels.index(site)
            if site.isdigit():
                return self.index(int(site))
        raise NetworkValidationError(f"unknown site {site!r}")

    def coupled_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _ in self.couplings_hz]

    def coupling(self, i: int | str, j: int | str) -> float:
        """J in Hz for the pair, 0.0 when the sites are not coupled."""
        a, b = sorted((self.index(i), self.index(j)))
        for p, q, value in self.couplings_hz:
            if (p, q) == (a, b):
                return value
        return 0.0

    def is_coupled(self, i: int | str, j: int | str) -> bool:
        a, b = sorted((self.index(i), self.index(j)))
        return any((p, q) == (a, b) for p, q, _ in self.couplings_hz)

    def neighbors(self, i: int | str) -> list[int]:
        k = self.index(i)
        out = []
        for p, q, _ in self.couplings_hz:
            if p == k:
                out.append(q)
            elif q == k:
                out.append(p)
        return sorted(out)

    def pair_label(self, i: int, j: int) -> str:
        return f"{self.labels[i]}{PAIR_SEPARATOR}{self.labels[j]}"

    def __repr__(self) -> str:
        return f"<SpinNetwork sites={self.labels!r} couplings={len(self.couplings_hz)}>"


def shift_difference(net: SpinNetwork, i: int | str, j: int | str) -> float:
    """|dOmega_i - dOmega_j| in rad/s (hbar = 1, so this is also Delta_ij)."""
    a, b = net.index(i), net.index(j)
    if a == b:
        raise NetworkValidationError(f"shift difference needs two distinct sites, got {net.labels[a]!r} twice")
    return abs(TWO_PI * (net.shifts_hz[a] - net.shifts_hz[b]))


def load_network(config_text: str) -> SpinNetwork:
    """Parse a TOML network document into a validated :class:`SpinNetwork`."""
    try:
        doc = tomllib.loads(config_text)
    except tomllib.TOMLDecodeError as exc:
        logger.error("network document is not valid TOML: %s", exc)
        raise ConfigError(
            f"cannot parse network document: {exc}", getattr(exc, "lineno", None), getattr(exc, "colno", None)
        ) from exc
    return network_from_mapping(doc)


def network_from_mapping(doc: Mapping) -> SpinNetwork:
    """Build a network from the ``{"sites": ..., "couplings": ...}`` structure of a network file."""
    sites = doc.get("sites")
    if not isinstance(sites, dict) or not sites:
        raise ConfigError("network document needs a non-empty [sites] table")
    couplings = doc.get("couplings", {})
    if not isinstance(couplings, dict):
        raise ConfigError("[couplings] must be a table")

    labels = list(sites)
    for label, shift in sites.items():
        if isinstance(shift, bool) or not isinstance(shift, (int, float)):
            raise NetworkValidationError(f"shift of site {label!r} must be a number in Hz")

    triples = []
    seen: dict[tuple[int, int], str] = {}
    for key, value in couplings.items():
        parts = key.split(PAIR_SEPARATOR)
        if len(parts) != 2:
            raise NetworkValidationError(f"coupling key {key!r} must look like 'A-B'")
        a, b = parts
        for name in (a, b):
            if name not in sites:
                raise NetworkValidationError(f"coupling {key!r} references unknown site {name!r}")
        if a == b:
            raise NetworkValidationError(f"coupling {key!r} couples site {a!r} to itself")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NetworkValidationError(f"coupling {key!r} must be a number in Hz")
        i, j = labels.index(a), labels.index(b)
        pair = (min(i, j), max(i, j))
        if pair in seen:
            raise NetworkValidationError(f"coupling {key!r} duplicates {seen[pair]!r}")
        seen[pair] = key
        triples.append((i, j, float(value)))

    net = SpinNetwork.build(labels, [float(sites[k]) for k in labels], triples)
    logger.info("loaded network with %d sites and %d couplings", net.n_sites, len(net.couplings_hz))
    return net


def load_network_file(path: str | Path) -> SpinNetwork:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        logger.error("cannot read network file %s: %s", path, exc)
        raise ConfigError(f"cannot read network file {str(path)!r}: {exc.strerror or exc}") from exc
    return load_network(text)


def _key(name: str) -> str:
    return name if _BARE_KEY.match(name) else f'"{name}"'


def dump_network(net: SpinNetwork) -> str:
    """Serialize to the TOML format read by :func:`load_network`."""
    lines = ["[sites]"]
    for label, shift in zip(net.labels, net.shifts_hz):
        lines.append(f"{_key(label)} = {shift!r}")
    lines.append("")
    lines.append("[couplings]")
    for i, j, value in net.couplings_hz:
        lines.append(f"{_key(net.pair_label(i, j))} = {value!r}")
    return "\n".join(lines) + "\n"
