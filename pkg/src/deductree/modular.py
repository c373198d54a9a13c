"""Finite operations over {0..9}: mod-10 tables, axiom checks, tree evaluation.

``oplus`` is addition mod 10 (a group: identity 0, inverses, associative).
``ominus`` is subtraction mod 10, which stays closed on the set but is not a
group. Both are exposed as 10x10 tables with exhaustive axiom verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import Kind, Node, StructureError

ELEMENTS = range(10)


class DomainError(ValueError):
    """Operand outside {0..9} or a malformed operation table."""


def _check_element(x: int) -> int:
    x = int(x)
    if not 0 <= x <= 9:
        raise DomainError(f"element {x} outside 0..9")
    return x


def oplus(a: int, b: int) -> int:
    """(a + b) mod 10."""
    return (_check_element(a) + _check_element(b)) % 10


def ominus(a: int, b: int) -> int:
    """(a - b) mod 10, non-negative representative."""
    return (_check_element(a) - _check_element(b)) % 10


@dataclass(frozen=True)
class FiniteOp:
    """A named 10x10 operation table; closure is checked on construction."""

    name: str
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.shape != (10, 10):
            raise DomainError(f"{self.name}: table must be 10x10, got {t.shape}")
        if t.min() < 0 or t.max() > 9:
            raise DomainError(f"{self.name}: table entries must lie in 0..9")
        object.__setattr__(self, "table", t.astype(np.int64))

    def __call__(self, a: int, b: int) -> int:
        return int(self.table[_check_element(a), _check_element(b)])


def _tabulate(fn) -> np.ndarray:
    return np.array([[fn(a, b) for b in ELEMENTS] for a in ELEMENTS], dtype=np.int64)


OPLUS = FiniteOp("oplus", _tabulate(oplus))
OMINUS = FiniteOp("ominus", _tabulate(ominus))
OPS = {"oplus": OPLUS, "ominus": OMINUS}

# Operator classes in the operator-image dataset: oplus maps to class 0,
# ominus to class 1 (fixed convention).
OP_CLASS = {"oplus": 0, "ominus": 1}
OP_NAMES = ("oplus", "ominus")


@dataclass
class AxiomReport:
    """Exhaustive axiom scan of one finite operation."""

    closed: bool
    identity: int | None
    left_identities: list[int]
    right_identities: list[int]
    all_inverses: bool
    associative: bool
    counterexamples: list[tuple] = field(default_factory=list)

    @property
    def is_group(self) -> bool:
        return (self.closed and self.identity is not None
                and self.all_inverses and self.associative)

    def render(self) -> str:
        lines = [
            f"closed:        {self.closed}",
            f"identity:      {self.identity if self.identity is not None else 'none'}",
            f"left ids:      {self.left_identities or 'none'}",
            f"right ids:     {self.right_identities or 'none'}",
            f"all inverses:  {self.all_inverses}",
            f"associative:   {self.associative}",
            f"group:         {self.is_group}",
        ]
        if self.counterexamples:
            lines.append("counterexamples:")
            lines.extend(f"  {kind}: {args}" for kind, *args in self.counterexamples)
        return "\n".join(lines)


def check_axioms(op: FiniteOp) -> AxiomReport:
    """Closure over all pairs, identity scan, inverse scan, associativity
    over all 1000 triples; first counterexample of each kind recorded."""
    t = op.table
    counterexamples: list[tuple] = []

    closed = bool((t >= 0).all() and (t <= 9).all())

    left_ids = [e for e in ELEMENTS if all(t[e, a] == a for a in ELEMENTS)]
    right_ids = [e for e in ELEMENTS if all(t[a, e] == a for a in ELEMENTS)]
    identity = next((e for e in left_ids if e in right_ids), None)

    all_inverses = False
    if identity is not None:
        all_inverses = all(
            any(t[a, b] == identity and t[b, a] == identity for b in ELEMENTS)
            for a in ELEMENTS)
        if not all_inverses:
            bad = next(a for a in ELEMENTS if not any(
                t[a, b] == identity and t[b, a] == identity for b in ELEMENTS))
            counterexamples.append(("no-inverse", bad))
    else:
        counterexamples.append(("no-identity",))

    associative = True
    for a in ELEMENTS:
        for b in ELEMENTS:
            for c in ELEMENTS:
                if t[t[a, b], c] != t[a, t[b, c]]:
                    associative = False
                    counterexamples.append(("non-associative", a, b, c))
                    break
            if not associative:
                break
        if not associative:
            break

    return AxiomReport(closed, identity, left_ids, right_ids,
                       all_inverses, associative, counterexamples)


def eval_tree(root: Node) -> list[int]:
    """Ground-truth class of every proposition, bottom-up (post-order).

    Leaves carry their class label; each proposition applies its operation to
    the values of its two ordered children.
    """
    results: list[int] = []

    def value(node: Node) -> int:
        if node.kind is Kind.OBJECT:
            if node.label is None:
                raise StructureError("object leaf missing class label")
            return node.label
        if node.kind is not Kind.PROPOSITION:
            raise StructureError(f"{node.kind.value} node cannot be an operand")
        if len(node.children) != 2:
            raise StructureError("propositions take exactly two operands")
        if node.op not in OPS:
            raise StructureError(f"unknown operation {node.op!r}")
        left = value(node.children[0])
        right = value(node.children[1])
        out = OPS[node.op](left, right)
        results.append(out)
        return out

    value(root)
    return results
