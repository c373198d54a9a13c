"""Proposition trees: typed nodes, post-order traversal, adjacency normalization.

A node is {payload, kind, child adjacency, ordered children}. Object and
Operator nodes are leaves holding an image reference; Proposition nodes hold
their ordered operand children plus a hollow symmetric 0/1 adjacency over
them. An image-operator leaf, when present, hangs off the proposition
separately and is never a row of the adjacency: its embedding enters the cell
only through the operator vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class StructureError(ValueError):
    """Malformed tree: bad adjacency, non-leaf leaves, cycles."""


class Kind(Enum):
    OBJECT = "object"
    OPERATOR = "operator"
    PROPOSITION = "proposition"


@dataclass
class Node:
    kind: Kind
    children: list["Node"] = field(default_factory=list)
    adjacency: np.ndarray | None = None
    image: tuple[str, int] | None = None  # (source, index) for leaves
    label: int | None = None  # object class / proposition target class
    op: str | None = None  # operation name on propositions and operator leaves
    operator: "Node | None" = None  # image-operator leaf, outside the adjacency

    def is_leaf(self) -> bool:
        return self.kind is not Kind.PROPOSITION


def complete_adjacency(n: int) -> np.ndarray:
    """Hollow complete graph over n children (all-ones minus the diagonal)."""
    return np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization with self-loops.

    Returns D^-1/2 (A + I) D^-1/2 where D holds the row degrees of A + I.
    Input must be a hollow symmetric 0/1 matrix; self-loops live only here.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StructureError(f"adjacency must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise StructureError("adjacency must be symmetric")
    if np.any(np.diag(a) != 0):
        raise StructureError("adjacency must have a zero diagonal")
    if not np.isin(a, (0, 1)).all():
        raise StructureError("adjacency entries must be 0 or 1")
    a_tilde = a.astype(np.float64) + np.eye(a.shape[0])
    inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return inv_sqrt[:, None] * a_tilde * inv_sqrt[None, :]


def post_order(root: Node) -> list[Node]:
    """Proposition nodes, every child before its parent, children in order."""
    out: list[Node] = []
    on_path: set[int] = set()

    def walk(node: Node):
        if id(node) in on_path:
            raise StructureError("cycle detected in tree")
        if node.kind is not Kind.PROPOSITION:
            return
        on_path.add(id(node))
        for child in node.children:
            walk(child)
        on_path.discard(id(node))
        out.append(node)

    walk(root)
    return out


def validate(root: Node) -> list[str]:
    """All invariant violations in the tree (empty list when well-formed)."""
    problems: list[str] = []
    seen: set[int] = set()

    def walk(node: Node, path: str):
        if id(node) in seen:
            problems.append(f"{path}: node appears twice (not a tree)")
            return
        seen.add(id(node))
        if node.kind is Kind.PROPOSITION:
            n = len(node.children)
            a = node.adjacency
            if a is None or a.shape != (n, n):
                problems.append(f"{path}: adjacency dims do not match {n} children")
            else:
                if not np.array_equal(a, a.T):
                    problems.append(f"{path}: adjacency not symmetric")
                if np.any(np.diag(a) != 0):
                    problems.append(f"{path}: adjacency diagonal not zero")
            if node.op is None:
                problems.append(f"{path}: proposition missing operation")
            if node.operator is not None:
                if node.operator.kind is not Kind.OPERATOR:
                    problems.append(f"{path}: operator slot holds {node.operator.kind}")
                else:
                    walk(node.operator, f"{path}.operator")
            for i, child in enumerate(node.children):
                walk(child, f"{path}.{i}")
        else:
            if node.children:
                problems.append(f"{path}: {node.kind.value} leaf has children")
            if node.image is None:
                problems.append(f"{path}: {node.kind.value} leaf missing image ref")

    walk(root, "root")
    return problems


# JSON episode-file schema, round-trip exact. Version bumps on layout change.
SCHEMA_VERSION = 1


def node_to_dict(node: Node) -> dict:
    d: dict = {"kind": node.kind.value}
    if node.label is not None:
        d["label"] = node.label
    if node.op is not None:
        d["op"] = node.op
    if node.image is not None:
        d["image"] = {"source": node.image[0], "index": node.image[1]}
    if node.kind is Kind.PROPOSITION:
        d["children"] = [node_to_dict(c) for c in node.children]
        d["adjacency"] = node.adjacency.tolist()
        d["operator"] = node_to_dict(node.operator) if node.operator else None
    return d


def node_from_dict(d: dict) -> Node:
    kind = Kind(d["kind"])
    node = Node(kind=kind, label=d.get("label"), op=d.get("op"))
    if "image" in d:
        node.image = (d["image"]["source"], int(d["image"]["index"]))
    if kind is Kind.PROPOSITION:
        node.children = [node_from_dict(c) for c in d["children"]]
        node.adjacency = np.asarray(d["adjacency"], dtype=np.int64)
        if d.get("operator"):
            node.operator = node_from_dict(d["operator"])
    return node


def dump_tree(node: Node) -> str:
    return json.dumps(node_to_dict(node))


def load_tree(text: str) -> Node:
    return node_from_dict(json.loads(text))
