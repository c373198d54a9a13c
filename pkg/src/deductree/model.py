"""The deduction network: image encoder, proposition cells, classifier.

A proposition cell consumes its ordered child embeddings with a GRU (the
sequence carries operand order, which the adjacency cannot), mixes the
per-step outputs through a degree-normalized graph convolution (or masked
attention in the attention variant), max-pools over nodes, and maps the
pooled vector, concatenated with an operator vector, through two affine
stages. The cell output doubles as the input embedding of the parent
proposition, which is what makes chained deduction possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .datasets import Corpus, normalize
from .episodes import Episode
from .modular import OP_CLASS, OP_NAMES
from .rng import Rng
from .tensor import Parameter, Tensor
from .tree import Kind, Node, normalize_adjacency

IMAGE_DIM = 28 * 28
NUM_CLASSES = 10


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class HyperParams:
    feature_dim: int = 64  # embedding width F
    hidden_dim: int = 256  # encoder hidden width
    heads: int = 4  # attention heads (attention variant only)
    leaky_slope: float = 0.01
    attention: bool = False

    def __post_init__(self):
        if self.feature_dim < 1 or self.hidden_dim < 1 or self.heads < 1:
            raise ModelError("feature_dim, hidden_dim and heads must be >= 1")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ModelError("leaky_slope must be in (0, 1)")


def param_schema(hyper: HyperParams) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) listing; also fixes the checkpoint layout."""
    f, h = hyper.feature_dim, hyper.hidden_dim
    schema = [
        ("enc_w1", (IMAGE_DIM, h)), ("enc_b1", (h,)),
        ("enc_w2", (h, f)), ("enc_b2", (f,)),
    ]
    n_gru = hyper.heads if hyper.attention else 1
    for k in range(n_gru):
        for gate in ("r", "z", "h"):
            schema += [(f"gru{k}_w{gate}", (f, f)), (f"gru{k}_u{gate}", (f, f)),
                       (f"gru{k}_b{gate}", (f,))]
    if hyper.attention:
        schema += [(f"att{k}", (2 * f,)) for k in range(hyper.heads)]
    schema += [
        ("mix_w", (2 * f, f)), ("mix_b", (f,)),
        ("out_w", (f, f)), ("out_b", (f,)),
        ("cls_w", (f, NUM_CLASSES)), ("cls_b", (NUM_CLASSES,)),
        ("opcls_w", (f, 2)), ("opcls_b", (2,)),
        ("op_embed", (2, f)),
    ]
    return schema


class ModelParams:
    """Named Parameters in schema order."""

    def __init__(self, hyper: HyperParams, tensors: dict[str, np.ndarray]):
        self.hyper = hyper
        self._names = [name for name, _ in param_schema(hyper)]
        for name, shape in param_schema(hyper):
            if name not in tensors:
                raise ModelError(f"missing parameter {name}")
            if tensors[name].shape != shape:
                raise ModelError(f"{name}: shape {tensors[name].shape}, "
                                 f"expected {shape}")
            setattr(self, name, Parameter(tensors[name], name))

    def all(self) -> list[Parameter]:
        return [getattr(self, name) for name in self._names]

    def __getitem__(self, name: str) -> Parameter:
        return getattr(self, name)


def _fan_in(name: str, shape: tuple[int, ...], hyper: HyperParams) -> int:
    if len(shape) == 2:
        return shape[0]
    # 1-d entries: biases take their layer's input width, attention vectors
    # their own length
    return {"enc_b1": IMAGE_DIM, "enc_b2": hyper.hidden_dim,
            "mix_b": 2 * hyper.feature_dim}.get(
        name, shape[0] if name.startswith("att") else hyper.feature_dim)


def init_params(hyper: HyperParams, rng: Rng) -> ModelParams:
    """Uniform init in +-1/sqrt(fan_in); operator embeddings start at zero."""
    tensors = {}
    for name, shape in param_schema(hyper):
        if name == "op_embed":
            tensors[name] = np.zeros(shape)
            continue
        bound = 1.0 / np.sqrt(_fan_in(name, shape, hyper))
        tensors[name] = rng.uniform_array(shape, -bound, bound)
    return ModelParams(hyper, tensors)


def encode(params: ModelParams, x: Tensor) -> Tensor:
    """Image vector(s) (784,) or (N, 784) to embedding(s) (F,) or (N, F)."""
    h = T.leaky_relu(T.matmul(x, params.enc_w1) + params.enc_b1,
                     params.hyper.leaky_slope)
    return T.matmul(h, params.enc_w2) + params.enc_b2


def encode_object(params: ModelParams, image: np.ndarray) -> Tensor:
    """Encode one raw 28x28 uint8 image."""
    return encode(params, Tensor(normalize(image)))


def gru_sequence(params: ModelParams, head: int,
                 inputs: list[Tensor]) -> list[Tensor]:
    """GRU outputs for each step, from a zero initial state.

    Update rule: h' = (1 - z) * h + z * tanh-candidate; the final hidden
    state is simply the last output and is not used separately.
    """
    p = params
    w_r, u_r, b_r = p[f"gru{head}_wr"], p[f"gru{head}_ur"], p[f"gru{head}_br"]
    w_z, u_z, b_z = p[f"gru{head}_wz"], p[f"gru{head}_uz"], p[f"gru{head}_bz"]
    w_h, u_h, b_h = p[f"gru{head}_wh"], p[f"gru{head}_uh"], p[f"gru{head}_bh"]
    h = Tensor(np.zeros(params.hyper.feature_dim))
    outputs = []
    for x in inputs:
        r = T.sigmoid(T.matmul(x, w_r) + T.matmul(h, u_r) + b_r)
        z = T.sigmoid(T.matmul(x, w_z) + T.matmul(h, u_z) + b_z)
        cand = T.tanh(T.matmul(x, w_h) + T.matmul(T.mul(r, h), u_h) + b_h)
        h = T.mul(1.0 - z, h) + T.mul(z, cand)
        outputs.append(h)
    return outputs


def conv_mix(x: Tensor, adjacency: np.ndarray, slope: float) -> Tensor:
    """Degree-normalized convolution, nonlinearity, max readout: (N,F) -> (F,)."""
    a_hat = Tensor(normalize_adjacency(adjacency))
    return T.max_readout(T.leaky_relu(T.matmul(a_hat, x), slope))


def output_stage(params: ModelParams, pooled: Tensor, op_vec: Tensor) -> Tensor:
    """sigma([pooled, op] W) W_out with biases."""
    slope = params.hyper.leaky_slope
    z = T.concat([pooled, op_vec])
    mixed = T.leaky_relu(T.matmul(z, params.mix_w) + params.mix_b, slope)
    return T.matmul(mixed, params.out_w) + params.out_b


def conv_cell(params: ModelParams, children: list[Tensor],
              adjacency: np.ndarray, op_vec: Tensor) -> Tensor:
    """Plain proposition cell: GRU, normalized graph conv, readout, output."""
    if len(children) != adjacency.shape[0]:
        raise ModelError(f"{len(children)} children vs adjacency "
                         f"{adjacency.shape}")
    x = T.stack(gru_sequence(params, 0, children))
    pooled = conv_mix(x, adjacency, params.hyper.leaky_slope)
    return output_stage(params, pooled, op_vec)


def attention_coeffs(x: Tensor, adjacency: np.ndarray, a_vec: Tensor,
                     slope: float) -> Tensor:
    """Per-row attention over self-loop neighborhoods; zeros elsewhere.

    Row q is softmax over r in N(q) of leaky_relu(a . [x_q, x_r]), where N(q)
    comes from adjacency plus self-loops, so each row sums to one on its
    neighborhood support.
    """
    n = adjacency.shape[0]
    mask = np.asarray(adjacency) + np.eye(n, dtype=np.int64)
    rows = []
    for q in range(n):
        nbrs = [r for r in range(n) if mask[q, r]]
        x_q = T.take_row(x, q)
        scores = T.stack([
            T.leaky_relu(T.matmul(a_vec, T.concat([x_q, T.take_row(x, r)])), slope)
            for r in nbrs])
        rows.append(T.scatter_vector(T.softmax(scores), nbrs, n))
    return T.stack(rows)


def attention_cell(params: ModelParams, children: list[Tensor],
                   adjacency: np.ndarray, op_vec: Tensor) -> Tensor:
    """Attention variant: per-head GRU and masked attention message passing,
    averaged over heads before the nonlinearity and readout."""
    hyper = params.hyper
    if not hyper.attention:
        raise ModelError("attention_cell needs attention-enabled params")
    if len(children) != adjacency.shape[0]:
        raise ModelError(f"{len(children)} children vs adjacency "
                         f"{adjacency.shape}")
    acc = None
    for k in range(hyper.heads):
        x_k = T.stack(gru_sequence(params, k, children))
        alpha = attention_coeffs(x_k, adjacency, params[f"att{k}"],
                                 hyper.leaky_slope)
        msg = T.matmul(alpha, x_k)
        acc = msg if acc is None else acc + msg
    avg = acc * (1.0 / hyper.heads)
    pooled = T.max_readout(T.leaky_relu(avg, hyper.leaky_slope))
    return output_stage(params, pooled, op_vec)


def proposition_cell(params: ModelParams, children: list[Tensor],
                     adjacency: np.ndarray, op_vec: Tensor) -> Tensor:
    if params.hyper.attention:
        return attention_cell(params, children, adjacency, op_vec)
    return conv_cell(params, children, adjacency, op_vec)


def classify(params: ModelParams, h: Tensor) -> Tensor:
    """Digit logits (10,); softmax belongs to the loss, argmax to reports."""
    return T.matmul(h, params.cls_w) + params.cls_b


def classify_operator(params: ModelParams, h: Tensor) -> Tensor:
    """Auxiliary 2-class logits for operator-image recognition."""
    return T.matmul(h, params.opcls_w) + params.opcls_b


@dataclass
class ForwardResult:
    """Everything one episode pass produces, bottom-up per proposition."""

    embeddings: list[Tensor]
    logits: list[Tensor]
    predictions: list[int]
    object_leaves: list[tuple[Tensor, int]] = field(default_factory=list)
    operator_leaves: list[tuple[Tensor, int]] = field(default_factory=list)


def forward_episode(params: ModelParams, episode: Episode, corpus: Corpus,
                    mode: str = "deductive",
                    leaf_embeddings: dict[int, Tensor] | None = None
                    ) -> ForwardResult:
    """Evaluate an episode bottom-up.

    In deductive mode each proposition's predicted embedding is the operand
    its parent consumes. Teacher mode exists for depth-0 training episodes,
    where there is nothing to feed forward; deeper trees reject it.
    ``leaf_embeddings`` (keyed by node id) lets callers batch leaf encoding.
    """
    if mode not in ("teacher", "deductive"):
        raise ModelError(f"unknown mode {mode!r}")
    if mode == "teacher" and episode.depth > 0:
        raise ModelError("teacher mode is only defined for depth-0 episodes")

    result = ForwardResult([], [], [])

    def embed_leaf(node: Node) -> Tensor:
        if leaf_embeddings is not None and id(node) in leaf_embeddings:
            return leaf_embeddings[id(node)]
        source, idx = node.image
        dataset = corpus.operand if source == "operand" else corpus.operator
        return encode_object(params, dataset.images[idx])

    def run(node: Node) -> Tensor:
        if node.kind is Kind.OBJECT:
            emb = embed_leaf(node)
            result.object_leaves.append((emb, node.label))
            return emb
        children = [run(child) for child in node.children]
        if node.operator is not None:
            op_vec = embed_leaf(node.operator)
            result.operator_leaves.append((op_vec, node.operator.label))
        else:
            op_vec = T.take_row(params.op_embed, OP_CLASS[node.op])
        h = proposition_cell(params, children, node.adjacency, op_vec)
        logits = classify(params, h)
        result.embeddings.append(h)
        result.logits.append(logits)
        result.predictions.append(int(np.argmax(logits.data)))
        return h

    run(episode.tree)
    return result


__all__ = [
    "HyperParams", "ModelParams", "ModelError", "param_schema", "init_params",
    "encode", "encode_object", "gru_sequence", "conv_mix", "conv_cell",
    "attention_coeffs", "attention_cell", "proposition_cell", "output_stage",
    "classify", "classify_operator", "ForwardResult", "forward_episode",
    "OP_NAMES", "NUM_CLASSES", "IMAGE_DIM",
]
