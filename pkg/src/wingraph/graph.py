"""Graph relation networks over K abstract nodes.

A set of node feature vectors [K, D] is related pairwise into a K x K
affinity matrix (cosine similarity or row-softmax of dot products), pruned
by a mean-derived threshold, and propagated: each node becomes the
affinity-weighted sum of its kept neighbours, followed by a learnable
right-multiplication.

Summation-order contract
------------------------
Node propagation accumulates over the neighbour index j in ascending
order.  Because adding an exact float zero never changes a finite partial
sum, the sparse evaluation (which skips pruned entries entirely) produces
bit-for-bit the same output as the dense masked product.  Benchmarks and
tests rely on this; do not replace the accumulation loops with a BLAS
matmul.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import (
    Parameter,
    Tensor,
    _op,
    apply_mask,
    matmul,
    softmax_rows,
    transpose,
)

VARIANT_COSINE = "cosine"
VARIANT_SOFTMAX = "softmax"
_VARIANTS = (VARIANT_COSINE, VARIANT_SOFTMAX)


@dataclass
class RelationMatrix:
    """K x K node affinities, optionally sparsified.

    ``mask`` and ``theta`` record the pruning decision: ``mask`` flags the
    entries of the *pre-pruning* matrix that were strictly above ``theta``;
    ``values`` holds those entries unchanged and exact zeros elsewhere.
    """

    values: Tensor
    variant: str
    mask: np.ndarray | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"RelationMatrix: unknown variant {self.variant!r}")
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"RelationMatrix: square matrix required, got {list(self.values.shape)}")

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    def kept_edges(self) -> int:
        if self.mask is None:
            return self.num_nodes ** 2
        return int(self.mask.sum())


@dataclass
class GraphLayer:
    """One propagation round's learnable weighting matrix."""

    weight: Parameter
    layer_index: int = 0

    def __post_init__(self):
        if self.weight.ndim != 2:
            raise ValueError(f"GraphLayer: rank-2 weight required, got {list(self.weight.shape)}")
        if not np.isfinite(self.weight.data).all():
            raise ValueError("GraphLayer: weight contains non-finite values")


@dataclass
class GraphConfig:
    """Relation variant and threshold policy for :func:`run_graph`."""

    variant: str = VARIANT_SOFTMAX
    theta_coefficient: float = 0.25

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"GraphConfig: unknown variant {self.variant!r}")


def relation_cosine(nodes: Tensor) -> RelationMatrix:
    """Pairwise cosine similarity of node rows.

    The diagonal is 1 by definition, including for all-zero rows; an
    all-zero row relates to every other node with 0.  Off-diagonal entries
    are clamped into [-1, 1] to absorb last-ulp rounding of the norm
    product.  The clamp and the zero-row convention are treated as
    pass-through / constant regions by the backward pass.
    """
    if nodes.ndim != 2:
        raise ValueError(f"relation_cosine: rank-2 nodes required, got {list(nodes.shape)}")
    nd = nodes.data
    k = nd.shape[0]
    dots = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            dots[i, j] = dots[j, i] = np.dot(nd[i], nd[j])
    norms = np.sqrt(np.diagonal(dots).copy())
    nonzero = norms > 0.0

    values = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                values[i, j] = 1.0
            elif nonzero[i] and nonzero[j]:
                values[i, j] = dots[i, j] / (norms[i] * norms[j])
    np.clip(values, -1.0, 1.0, out=values)

    safe = np.where(nonzero, norms, 1.0)
    unit = nd / safe[:, None]

    def _bw(g):
        h = g + g.T
        dn = (np.matmul(h, unit) - (h * values).sum(axis=1, keepdims=True) * unit) / safe[:, None]
        dn[~nonzero] = 0.0
        return (dn,)

    return RelationMatrix(_op(values, (nodes,), _bw), VARIANT_COSINE)


def relation_softmax(nodes: Tensor) -> RelationMatrix:
    """Row-softmax of pairwise dot products; always row-stochastic."""
    if nodes.ndim != 2:
        raise ValueError(f"relation_softmax: rank-2 nodes required, got {list(nodes.shape)}")
    values = softmax_rows(matmul(nodes, transpose(nodes)))
    return RelationMatrix(values, VARIANT_SOFTMAX)


def relation(nodes: Tensor, variant: str) -> RelationMatrix:
    if variant == VARIANT_COSINE:
        return relation_cosine(nodes)
    if variant == VARIANT_SOFTMAX:
        return relation_softmax(nodes)
    raise ValueError(f"relation: unknown variant {variant!r}")


def make_theta(values, coefficient: float = 0.25) -> float:
    """Pruning threshold c * v, where v is the mean of all K^2 entries.

    c = 1/4 is the default; it is the best-performing multiple in the
    threshold sweep this policy mirrors.
    """
    data = values.data if isinstance(values, Tensor) else np.asarray(values)
    return float(coefficient) * float(data.mean())


def sparsify(rel: RelationMatrix, theta: float) -> RelationMatrix:
    """Keep entries strictly above ``theta``; zero the rest exactly.

    The mask is a constant with respect to differentiation (the indicator
    has zero subgradient at the threshold); kept entries pass gradients
    through unchanged.  Idempotent on values: re-applying the same theta
    never changes a kept entry or resurrects a pruned one.
    """
    theta = float(theta)
    mask = rel.values.data > theta
    return RelationMatrix(apply_mask(rel.values, mask), rel.variant, mask, theta)


def node_update_dense_data(values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Dense propagation over raw arrays, neighbour index ascending."""
    k, d = values.shape[0], nodes.shape[1]
    out = np.zeros((k, d))
    for j in range(values.shape[1]):
        out += values[:, j, None] * nodes[j]
    return out


def node_update_sparse_data(values: np.ndarray, mask: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Sparse propagation touching only kept entries.

    Bit-identical to :func:`node_update_dense_data` on the masked matrix:
    both walk neighbours in ascending order, and the skipped terms are
    exact zeros.
    """
    out = np.zeros((values.shape[0], nodes.shape[1]))
    for j in range(values.shape[1]):
        rows = np.nonzero(mask[:, j])[0]
        if rows.size:
            out[rows] += values[rows, j, None] * nodes[j]
    return out


def node_update(rel: RelationMatrix, nodes: Tensor) -> Tensor:
    """Propagate node features: out = rel.values @ nodes.

    The neighbourhood is all K nodes; pruning via :func:`sparsify` is the
    only edge removal.  Forward uses the ascending-neighbour accumulation
    so the sparse path can match it exactly; backward treats it as an
    ordinary matrix product.
    """
    if nodes.ndim != 2:
        raise ValueError(f"node_update: rank-2 nodes required, got {list(nodes.shape)}")
    vals = rel.values
    if vals.shape[1] != nodes.shape[0]:
        raise ValueError(f"node_update: relation {list(vals.shape)} does not match nodes {list(nodes.shape)}")
    vd, nd = vals.data, nodes.data
    out = node_update_dense_data(vd, nd)
    return _op(out, (vals, nodes), lambda g: (np.matmul(g, nd.T), np.matmul(vd.T, g)))


def node_update_sparse(rel: RelationMatrix, nodes: np.ndarray) -> np.ndarray:
    """Inference-only sparse propagation; requires a sparsified relation."""
    if rel.mask is None:
        raise ValueError("node_update_sparse: relation has no mask; call sparsify first")
    if rel.values.shape[1] != nodes.shape[0]:
        raise ValueError(f"node_update_sparse: relation {list(rel.values.shape)} does not match nodes {list(nodes.shape)}")
    return node_update_sparse_data(rel.values.data, rel.mask, nodes)


def graph_conv(nodes: Tensor, layer: GraphLayer) -> Tensor:
    """Learnable node mixing: nodes @ layer.weight."""
    if nodes.shape[1] != layer.weight.shape[0]:
        raise ValueError(
            f"graph_conv: nodes {list(nodes.shape)} do not match weight {list(layer.weight.shape)}")
    return matmul(nodes, layer.weight)


def run_graph(nodes: Tensor, layers: list[GraphLayer] | tuple[GraphLayer, ...],
              config: GraphConfig | None = None) -> Tensor:
    """Apply L rounds of relate -> prune -> propagate -> mix.

    The relation matrix and its threshold are recomputed from the current
    node features at every round.
    """
    if not layers:
        raise ValueError("run_graph: at least one layer required")
    cfg = config or GraphConfig()
    x = nodes
    for layer in layers:
        rel = relation(x, cfg.variant)
        theta = make_theta(rel.values, cfg.theta_coefficient)
        rel = sparsify(rel, theta)
        x = node_update(rel, x)
        x = graph_conv(x, layer)
    return x
