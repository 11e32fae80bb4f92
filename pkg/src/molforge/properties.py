"""Molecular property calculators used as reward ingredients.

Built-ins: molecular weight, atom-contribution logP, long-cycle count,
penalized logP, and heavy-atom counts. Arbitrary extra calculators can be
registered by name and addressed through :func:`evaluate`, which is how
excluded literature descriptors (QED, synthetic accessibility) plug in.
"""

from __future__ import annotations

from importlib import resources
from typing import Callable

import numpy as np

from molforge import _kernels
from molforge.actions import _maxval_by_code, packed_graph
from molforge.molgraph import (
    ATOMIC_WEIGHTS,
    ORGANIC_SYMBOLS,
    Molecule,
    RingInfo,
    ring_info,
)


class PropertyError(Exception):
    pass


class UnknownProperty(PropertyError):
    pass


class UncoveredAtomType(PropertyError):
    pass


def ensure_ring_info(mol: Molecule) -> RingInfo:
    """Ring membership and SSSR sizes via the compiled kernel, cached.

    Produces the same RingInfo as molgraph.ring_info (the pure reference
    path) but at hot-loop cost.
    """
    cached = mol.__dict__.get("_ring_info")
    if cached is not None:
        return cached
    el, ba, bb, bo = packed_graph(mol)
    atom_in_ring, bond_in_ring, sizes = _kernels.ring_stats(
        len(mol.elements), el, ba, bb, bo
    )
    info = RingInfo(
        tuple(bool(x) for x in atom_in_ring),
        {
            (a, b): bool(bond_in_ring[i])
            for i, (a, b, _) in enumerate(mol.bonds)
        },
        tuple(int(s) for s in sizes),
    )
    mol.__dict__["_ring_info"] = info
    return info


def molecular_weight(mol: Molecule) -> float:
    """Sum of atomic weights plus 1.008 per implicit hydrogen, daltons."""
    total = sum(ATOMIC_WEIGHTS[sym] for sym in mol.elements)
    return total + 1.008 * mol.total_implicit_hydrogens()


def heavy_atom_count(mol: Molecule) -> float:
    return float(len(mol.elements))


def heavy_atom_fraction(mol: Molecule) -> float:
    """Heavy atoms scaled into [0, 1] against a 40-atom budget."""
    return min(len(mol.elements) / 40.0, 1.0)


class LogPTable:
    """Atom-type contribution table for the additive logP estimate.

    Rows are keyed by (element, in-ring flag, attached-heteroatom bucket,
    max incident bond order) with ``*`` wildcards; the most specific row
    wins and file order breaks ties. Implicit hydrogens contribute through
    the mandatory H row.
    """

    _BUCKETS = (0, 1, 2)
    _ORDERS = (1, 2, 3)

    def __init__(self, rows: list[tuple[str, str, str, str, float]]):
        elements = {row[0] for row in rows}
        missing = [
            sym for sym in ("H",) + ORGANIC_SYMBOLS if sym not in elements
        ]
        if missing:
            raise ValueError(f"table lacks entries for elements {missing}")
        self.rows = rows
        # Resolve wildcards once: exact contribution per concrete descriptor.
        self._resolved: dict[tuple[str, bool, int, int], float] = {}
        for sym in ORGANIC_SYMBOLS:
            for in_ring in (False, True):
                for bucket in self._BUCKETS:
                    for order in self._ORDERS:
                        value = self._match(sym, in_ring, bucket, order)
                        if value is not None:
                            self._resolved[(sym, in_ring, bucket, order)] = value
        h = self._match("H", False, 0, 1)
        if h is None:
            raise ValueError("table lacks a usable H row")
        self.h_contribution = h

    def _match(self, sym, in_ring, bucket, order):
        best = None
        best_score = -1
        for row_sym, row_ring, row_bucket, row_order, value in self.rows:
            if row_sym != sym:
                continue
            score = 0
            if row_ring != "*":
                if int(row_ring) != int(in_ring):
                    continue
                score += 1
            if row_bucket != "*":
                if int(row_bucket) != bucket:
                    continue
                score += 1
            if row_order != "*":
                if int(row_order) != order:
                    continue
                score += 1
            if score > best_score:
                best_score = score
                best = value
        return best

    def contribution(self, sym: str, in_ring: bool, bucket: int, order: int) -> float:
        try:
            return self._resolved[(sym, in_ring, bucket, order)]
        except KeyError:
            raise UncoveredAtomType(
                f"no table row covers ({sym}, in_ring={in_ring}, "
                f"hetero_bucket={bucket}, max_bond_order={order})"
            ) from None

    @classmethod
    def from_lines(cls, lines) -> "LogPTable":
        rows = []
        version_seen = False
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("version="):
                if line != "version=1":
                    raise ValueError(f"unsupported table version: {line}")
                version_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            sym, in_ring, bucket, order, value = (p.strip() for p in parts)
            rows.append((sym, in_ring, bucket, order, float(value)))
        if not version_seen:
            raise ValueError("missing version=1 header line")
        return cls(rows)

    @classmethod
    def from_file(cls, path) -> "LogPTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def default(cls) -> "LogPTable":
        global _DEFAULT_TABLE
        if _DEFAULT_TABLE is None:
            text = (
                resources.files("molforge.data")
                .joinpath("logp_table.txt")
                .read_text(encoding="utf-8")
            )
            _DEFAULT_TABLE = cls.from_lines(text.splitlines())
        return _DEFAULT_TABLE


_DEFAULT_TABLE: LogPTable | None = None


def atom_descriptors(mol: Molecule):
    """(element, in_ring, hetero bucket, max incident order) per atom."""
    info = ensure_ring_info(mol)
    out = []
    for i, sym in enumerate(mol.elements):
        hetero = sum(1 for j, _ in mol.adjacency[i] if mol.elements[j] != "C")
        bucket = 2 if hetero >= 2 else hetero
        orders = [o for _, o in mol.adjacency[i]]
        out.append((sym, info.atom_in_ring[i], bucket, max(orders, default=1)))
    return out


def logp(mol: Molecule, table: LogPTable | None = None) -> float:
    """Additive octanol-water partition estimate over atom contributions."""
    if table is None:
        table = LogPTable.default()
    total = 0.0
    for sym, in_ring, bucket, order in atom_descriptors(mol):
        total += table.contribution(sym, in_ring, bucket, order)
    return total + table.h_contribution * mol.total_implicit_hydrogens()


def long_cycle_count(mol: Molecule) -> int:
    """Number of SSSR rings with more than six atoms."""
    return sum(1 for s in ensure_ring_info(mol).ring_sizes if s > 6)


def zero_sa_proxy(mol: Molecule) -> float:
    """Default stand-in for the excluded synthetic-accessibility score."""
    return 0.0


def ring_complexity_proxy(mol: Molecule) -> float:
    """Optional experimentation proxy: 0.1 per ring + 0.5 per long cycle.

    Not a literature SA score; shipped only so penalized logP can be
    exercised with a non-zero accessibility term.
    """
    sizes = ensure_ring_info(mol).ring_sizes
    return 0.1 * len(sizes) + 0.5 * sum(1 for s in sizes if s > 6)


def penalized_logp(
    mol: Molecule,
    table: LogPTable | None = None,
    sa_proxy: Callable[[Molecule], float] = zero_sa_proxy,
) -> float:
    """logP minus the accessibility proxy minus the long-cycle count."""
    return logp(mol, table) - sa_proxy(mol) - long_cycle_count(mol)


# ---------------------------------------------------------------------------
# Named property registry
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, Callable[[Molecule], float]] = {}


def register_property(name: str, fn: Callable[[Molecule], float],
                      replace: bool = False):
    """Register a calculator for :func:`evaluate`; names are write-once."""
    if name in _REGISTRY and not replace:
        raise ValueError(f"property {name!r} already registered")
    _REGISTRY[name] = fn


def registered_properties() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def evaluate(kind: str, mol: Molecule) -> float:
    """Dispatch a registered property calculator by name."""
    try:
        fn = _REGISTRY[kind]
    except KeyError:
        raise UnknownProperty(
            f"unknown property {kind!r}; registered: {registered_properties()}"
        ) from None
    return float(fn(mol))


register_property("molecular_weight", molecular_weight)
register_property("logp", logp)
register_property("penalized_logp", penalized_logp)
register_property("heavy_atom_count", heavy_atom_count)
register_property("heavy_atom_fraction", heavy_atom_fraction)
