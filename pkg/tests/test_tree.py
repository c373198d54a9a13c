import numpy as np
import pytest

from deductree.rng import Rng
from deductree.tree import (Kind, Node, StructureError, complete_adjacency,
                            dump_tree, load_tree, normalize_adjacency,
                            post_order, validate)


def leaf(label=0, idx=0):
    return Node(kind=Kind.OBJECT, image=("operand", idx), label=label)


def prop(left, right, op="oplus"):
    return Node(kind=Kind.PROPOSITION, children=[left, right],
                adjacency=complete_adjacency(2), op=op)


def chain(depth):
    node = prop(leaf(), leaf())
    for _ in range(depth):
        node = prop(node, leaf())
    return node


class TestPostOrder:
    def test_single_proposition(self):
        root = prop(leaf(), leaf())
        assert post_order(root) == [root]

    def test_nested_chain(self):
        inner = prop(leaf(), leaf())
        root = prop(inner, leaf())
        assert post_order(root) == [inner, root]

    def test_against_recursive_reference(self):
        def reference(node, acc):
            if node.kind is Kind.PROPOSITION:
                for child in node.children:
                    reference(child, acc)
                acc.append(node)
            return acc

        rng = Rng(3)
        for _ in range(10):
            depth = 5
            root = chain(depth)
            order = post_order(root)
            assert order == reference(root, [])
            assert len(order) == depth + 1
            position = {id(n): i for i, n in enumerate(order)}
            for node in order:
                for child in node.children:
                    if child.kind is Kind.PROPOSITION:
                        assert position[id(child)] < position[id(node)]

    def test_visits_each_node_once(self):
        root = chain(4)
        order = post_order(root)
        assert len({id(n) for n in order}) == len(order) == 5

    def test_cycle_detected(self):
        a = prop(leaf(), leaf())
        b = prop(a, leaf())
        a.children[0] = b  # introduce a cycle
        with pytest.raises(StructureError, match="cycle"):
            post_order(b)


class TestNormalizeAdjacency:
    def test_isolated_node(self):
        assert normalize_adjacency(np.zeros((1, 1))).tolist() == [[1.0]]

    def test_two_node_complete(self):
        out = normalize_adjacency(complete_adjacency(2))
        assert np.max(np.abs(out - 0.5)) <= 1e-12

    def test_three_node_path(self):
        a = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        out = normalize_adjacency(a)
        s = 1 / np.sqrt(6)
        expected = np.array([[0.5, s, 0.0], [s, 1 / 3, s], [0.0, s, 0.5]])
        assert np.max(np.abs(out - expected)) <= 1e-12

    @pytest.mark.parametrize("bad,msg", [
        (np.array([[0, 1], [0, 0]]), "symmetric"),
        (np.array([[1, 1], [1, 0]]), "diagonal"),
        (np.array([[0, 2], [2, 0]]), "0 or 1"),
        (np.zeros((2, 3)), "square"),
    ])
    def test_contract_violations(self, bad, msg):
        with pytest.raises(StructureError, match=msg):
            normalize_adjacency(bad)

    def test_symmetric_and_spectrally_bounded(self):
        rng = Rng(8)
        for _ in range(40):
            n = 2 + rng.below(5)  # n in 2..6
            a = np.zeros((n, n), dtype=np.int64)
            for i in range(n):
                for j in range(i + 1, n):
                    a[i, j] = a[j, i] = rng.below(2)
            out = normalize_adjacency(a)
            assert np.max(np.abs(out - out.T)) <= 1e-12
            eig = np.linalg.eigvalsh(out)
            assert eig.min() >= -1 - 1e-9 and eig.max() <= 1 + 1e-9


class TestValidate:
    def test_well_formed(self):
        assert validate(chain(3)) == []

    def test_adjacency_dimension_violation(self):
        node = Node(kind=Kind.PROPOSITION, op="oplus",
                    children=[leaf(), leaf(), leaf()],
                    adjacency=complete_adjacency(2))
        assert any("adjacency dims" in p for p in validate(node))

    def test_object_with_child_violation(self):
        bad = leaf()
        bad.children = [leaf()]
        root = prop(bad, leaf())
        assert any("leaf has children" in p for p in validate(root))

    def test_operator_slot_kind_checked(self):
        root = prop(leaf(), leaf())
        root.operator = leaf()  # object node in the operator slot
        assert any("operator slot" in p for p in validate(root))

    def test_missing_image_ref(self):
        root = prop(Node(kind=Kind.OBJECT, label=1), leaf())
        assert any("missing image ref" in p for p in validate(root))


def test_json_round_trip():
    root = chain(2)
    root.operator = Node(kind=Kind.OPERATOR, image=("operator", 5), label=0,
                         op="oplus")
    for i, node in enumerate(post_order(root)):
        node.label = i
    text = dump_tree(root)
    again = load_tree(text)
    assert dump_tree(again) == text
    assert validate(again) == []
    assert [n.label for n in post_order(again)] == [0, 1, 2]
