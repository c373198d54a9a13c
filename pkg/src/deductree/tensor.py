"""Dense float64 tensors with reverse-mode automatic differentiation.

Ops record a closure on the output node; ``backward`` walks the graph in
reverse topological order and accumulates gradients into ``Parameter``
leaves. Tensors are immutable once created; Parameters are mutated only by
``backward`` and optimizer steps.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

# Set True (e.g. in tests) to assert finiteness after every op.
DEBUG_CHECKS = False


class TensorError(ValueError):
    """Contract violation: bad shapes, domains, or arguments."""


class GraphError(RuntimeError):
    """Backward pass requested through a value with no recorded graph."""


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = _parents
        self._backward: Callable[[np.ndarray], None] | None = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise TensorError(f"item() needs a scalar, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Same values, no graph: gradients stop here."""
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """Leaf tensor with a persistent gradient buffer.

    ``grad`` is additive across backward passes until ``zero_grad``.
    """

    __slots__ = ("name",)

    def __init__(self, data, name: str = ""):
        super().__init__(data)
        self.grad = np.zeros_like(self.data)
        self.name = name

    def zero_grad(self):
        self.grad.fill(0.0)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _finish(out: Tensor) -> Tensor:
    if DEBUG_CHECKS and not np.all(np.isfinite(out.data)):
        raise TensorError("non-finite values produced by an op")
    return out


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data, (a, b))

    def bw(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    out._backward = bw
    return _finish(out)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data, (a, b))

    def bw(g):
        _accumulate(a, _unbroadcast(g * b.data, a.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.shape))

    out._backward = bw
    return _finish(out)


def matmul(a, b) -> Tensor:
    """Matrix product; 1-d operands act as a single row/column."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2):
        raise TensorError("matmul expects 1-d or 2-d operands")
    inner_a = a.shape[-1]
    inner_b = b.shape[0]
    if inner_a != inner_b:
        raise TensorError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, (a, b))

    def bw(g):
        ad, bd = a.data, b.data
        if ad.ndim == 2 and bd.ndim == 2:
            _accumulate(a, g @ bd.T)
            _accumulate(b, ad.T @ g)
        elif ad.ndim == 1 and bd.ndim == 2:
            _accumulate(a, bd @ g)
            _accumulate(b, np.outer(ad, g))
        elif ad.ndim == 2 and bd.ndim == 1:
            _accumulate(a, np.outer(g, bd))
            _accumulate(b, ad.T @ g)
        else:  # 1-d @ 1-d -> scalar
            _accumulate(a, g * bd)
            _accumulate(b, g * ad)

    out._backward = bw
    return _finish(out)


def sigmoid(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    # exp on the negative branch only, so large |x| never overflows
    s = np.where(x.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(x.data))),
                 np.exp(-np.abs(x.data)) / (1.0 + np.exp(-np.abs(x.data))))
    out = Tensor(s, (x,))
    out._backward = lambda g: _accumulate(x, g * s * (1.0 - s))
    return _finish(out)


def tanh(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    t = np.tanh(x.data)
    out = Tensor(t, (x,))
    out._backward = lambda g: _accumulate(x, g * (1.0 - t * t))
    return _finish(out)


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    """Elementwise max(x, slope * x); subgradient at 0 takes the slope branch."""
    if not 0.0 < slope < 1.0:
        raise TensorError(f"leaky_relu slope must be in (0, 1), got {slope}")
    x = _as_tensor(x)
    pos = x.data > 0
    out = Tensor(np.where(pos, x.data, slope * x.data), (x,))
    out._backward = lambda g: _accumulate(x, g * np.where(pos, 1.0, slope))
    return _finish(out)


def softmax(v: Tensor) -> Tensor:
    """Stable softmax of a 1-d tensor (max-subtraction)."""
    v = _as_tensor(v)
    if v.data.ndim != 1 or v.size < 1:
        raise TensorError(f"softmax expects a non-empty vector, got {v.shape}")
    e = np.exp(v.data - v.data.max())
    s = e / e.sum()
    out = Tensor(s, (v,))
    out._backward = lambda g: _accumulate(v, s * (g - float(np.dot(s, g))))
    return _finish(out)


def cross_entropy_from_logits(logits: Tensor, label: int) -> Tensor:
    """-log softmax(logits)[label], computed in log space."""
    logits = _as_tensor(logits)
    n = logits.size
    if logits.data.ndim != 1:
        raise TensorError(f"logits must be a vector, got {logits.shape}")
    if not 0 <= int(label) < n:
        raise TensorError(f"label {label} out of range for {n} classes")
    label = int(label)
    m = logits.data.max()
    logsumexp = m + np.log(np.exp(logits.data - m).sum())
    out = Tensor(logsumexp - logits.data[label], (logits,))

    def bw(g):
        p = np.exp(logits.data - logsumexp)
        p[label] -= 1.0
        _accumulate(logits, g * p)

    out._backward = bw
    return _finish(out)


def mse(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise TensorError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    out = Tensor(np.mean(diff * diff), (a, b))

    def bw(g):
        scale = 2.0 * float(g) / diff.size
        _accumulate(a, scale * diff)
        _accumulate(b, -scale * diff)

    out._backward = bw
    return _finish(out)


def max_readout(x: Tensor) -> Tensor:
    """Column-wise max of an N x F matrix; ties route to the lowest row."""
    x = _as_tensor(x)
    if x.data.ndim != 2 or x.shape[0] < 1:
        raise TensorError(f"max_readout expects a non-empty matrix, got {x.shape}")
    rows = np.argmax(x.data, axis=0)  # first occurrence = lowest row index
    cols = np.arange(x.shape[1])
    out = Tensor(x.data[rows, cols], (x,))

    def bw(g):
        buf = np.zeros_like(x.data)
        buf[rows, cols] = g
        _accumulate(x, buf)

    out._backward = bw
    return _finish(out)


def concat(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate 1-d tensors."""
    parts = [_as_tensor(p) for p in parts]
    for p in parts:
        if p.data.ndim != 1:
            raise TensorError("concat expects vectors")
    out = Tensor(np.concatenate([p.data for p in parts]), tuple(parts))
    offsets = np.cumsum([0] + [p.size for p in parts])

    def bw(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            _accumulate(p, g[lo:hi])

    out._backward = bw
    return _finish(out)


def stack(rows: Sequence[Tensor]) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    rows = [_as_tensor(r) for r in rows]
    if not rows:
        raise TensorError("stack needs at least one tensor")
    out = Tensor(np.stack([r.data for r in rows]), tuple(rows))

    def bw(g):
        for i, r in enumerate(rows):
            _accumulate(r, g[i])

    out._backward = bw
    return _finish(out)


def take_row(x: Tensor, i: int) -> Tensor:
    x = _as_tensor(x)
    if x.data.ndim != 2 or not 0 <= i < x.shape[0]:
        raise TensorError(f"take_row({i}) invalid for shape {x.shape}")
    out = Tensor(x.data[i], (x,))

    def bw(g):
        buf = np.zeros_like(x.data)
        buf[i] = g
        _accumulate(x, buf)

    out._backward = bw
    return _finish(out)


def scatter_vector(values: Tensor, indices: Sequence[int], size: int) -> Tensor:
    """Place values[j] at indices[j] in a zero vector of the given size."""
    values = _as_tensor(values)
    idx = list(indices)
    if values.data.ndim != 1 or len(idx) != values.size:
        raise TensorError("scatter_vector: values and indices lengths differ")
    buf = np.zeros(size)
    buf[idx] = values.data
    out = Tensor(buf, (values,))
    out._backward = lambda g: _accumulate(values, g[idx])
    return _finish(out)


def tsum(x: Tensor) -> Tensor:
    """Sum of all elements."""
    x = _as_tensor(x)
    out = Tensor(np.sum(x.data), (x,))
    out._backward = lambda g: _accumulate(x, np.full_like(x.data, float(g)))
    return _finish(out)


def backward(loss: Tensor):
    """Accumulate d(loss)/d(p) into every reachable Parameter's grad."""
    if loss.data.size != 1:
        raise TensorError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._backward is None and not isinstance(loss, Parameter):
        raise GraphError("backward through a value with no recorded graph")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack_ = [(loss, iter(loss._parents))]
    visited.add(id(loss))
    while stack_:
        node, it = stack_[-1]
        child = next(it, None)
        if child is None:
            stack_.pop()
            topo.append(node)
        elif id(child) not in visited:
            visited.add(id(child))
            stack_.append((child, iter(child._parents)))

    # transient grads from any earlier backward on this graph must not leak in
    for node in topo:
        if not isinstance(node, Parameter):
            node.grad = None
    _accumulate(loss, np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


def zero_grads(params: Sequence[Parameter]):
    for p in params:
        p.zero_grad()


class FdEntry:
    """Worst finite-difference deviation for one parameter."""

    def __init__(self, name, max_rel_err, coords_checked):
        self.name = name
        self.max_rel_err = max_rel_err
        self.coords_checked = coords_checked


class FdReport:
    def __init__(self, entries: list[FdEntry]):
        self.entries = entries

    @property
    def max_rel_err(self) -> float:
        return max((e.max_rel_err for e in self.entries), default=0.0)

    def passed(self, tol: float) -> bool:
        return self.max_rel_err <= tol

    def __str__(self):
        lines = [f"  {e.name:28s} rel-err {e.max_rel_err:.3e} "
                 f"({e.coords_checked} coords)" for e in self.entries]
        return "\n".join(lines + [f"  max rel-err {self.max_rel_err:.3e}"])


def finite_difference_check(f: Callable[[], Tensor], params: Sequence[Parameter],
                            eps: float = 1e-5, max_coords: int | None = None,
                            rng=None) -> FdReport:
    """Compare backward() gradients of f() against central differences.

    Per-coordinate relative error is |numeric - analytic| scaled by
    max(|numeric|, |analytic|, 1). ``max_coords`` caps the coordinates
    sampled per parameter (all coordinates when None).
    """
    if eps <= 0:
        raise TensorError("eps must be positive")
    zero_grads(params)
    backward(f())
    analytic = [p.grad.copy() for p in params]

    entries = []
    for p, an in zip(params, analytic):
        flat = p.data.reshape(-1)
        n = flat.size
        if max_coords is not None and n > max_coords:
            if rng is None:
                raise TensorError("max_coords sampling needs an rng")
            coords = sorted({rng.below(n) for _ in range(max_coords)})
        else:
            coords = range(n)
        worst = 0.0
        count = 0
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            hi = f().item()
            flat[i] = orig - eps
            lo = f().item()
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            a = an.reshape(-1)[i]
            rel = abs(numeric - a) / max(abs(numeric), abs(a), 1.0)
            worst = max(worst, rel)
            count += 1
        entries.append(FdEntry(p.name or "param", worst, count))
    return FdReport(entries)
