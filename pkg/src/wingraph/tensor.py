"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation works on whole tensors (not individual scalars) and records
enough information to run the backward pass:  an op output keeps references
to its parents and a closure that maps the output gradient to the parent
gradients.  ``backward(loss)`` walks the tape in reverse topological order
and accumulates gradients into every tensor that requires them.

All data is 64-bit, row-major and contiguous.  There is no broadcasting
beyond what the ops below need, no GPU path, and no in-place arithmetic on
recorded tensors; parameters may be updated in place *between* forward
passes (that is how SGD works).
"""

from __future__ import annotations

import math

import numpy as np

# GELU tanh-approximation constants: sqrt(2/pi) and the cubic coefficient.
_GELU_C0 = 0.7978845608028654
_GELU_C1 = 0.044715

_erf = np.vectorize(math.erf)


class Tensor:
    """A dense float64 array plus an optional gradient slot.

    ``data`` is always a C-contiguous float64 ndarray.  ``grad`` is either
    None or an ndarray of the same shape; ``backward`` accumulates into it.
    Tensors created by operations carry the tape links (``_parents`` and
    ``_backward``) needed for reverse-mode differentiation.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        # asarray keeps rank-0 arrays rank-0 (ascontiguousarray would not).
        self.data = np.asarray(data, dtype=np.float64, order="C")
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        """Reset the gradient slot to an explicit all-zero array."""
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={list(self.shape)}{flag})"

    # Small amount of operator sugar; the named functions are the real API.
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scalar_mul(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class Parameter(Tensor):
    """A learnable tensor with a name that is unique within one model."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={list(self.shape)})"


def _op(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    """Wrap an op result, recording tape links only when gradients can flow."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every tensor on the tape.

    ``loss`` must hold a single element.  Repeated calls without a gradient
    reset keep accumulating, matching the usual autograd contract.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward() needs a scalar loss, got shape {list(loss.shape)}")

    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    flowing: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = flowing.pop(id(node), None)
        if g is None or not node.requires_grad:
            continue
        if node.grad is None:
            node.grad = np.zeros_like(node.data)
        node.grad += g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            held = flowing.get(id(parent))
            flowing[id(parent)] = pg if held is None else held + pg


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {list(a.shape)} vs {list(b.shape)}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    return _op(a.data + b.data, (a, b), lambda g: (g, g))


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of two same-shaped tensors."""
    _require_same_shape(a, b, "hadamard")
    ad, bd = a.data, b.data
    return _op(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def scalar_mul(a: Tensor, s: float) -> Tensor:
    s = float(s)
    return _op(a.data * s, (a,), lambda g: (g * s,))


def sum_all(a: Tensor) -> Tensor:
    """Sum of every element, as a rank-0 tensor."""
    shape = a.shape
    return _op(np.asarray(a.data.sum()), (a,), lambda g: (np.full(shape, float(g)),))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Rank-2 matrix product [p x q] @ [q x s] -> [p x s]."""
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul: rank-2 tensors required, got {list(a.shape)} and {list(b.shape)}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: inner dimensions disagree, {list(a.shape)} vs {list(b.shape)}")
    ad, bd = a.data, b.data
    return _op(np.matmul(ad, bd), (a, b), lambda g: (np.matmul(g, bd.T), np.matmul(ad.T, g)))


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ValueError(f"transpose: rank-2 tensor required, got {list(a.shape)}")
    return _op(a.data.T, (a,), lambda g: (g.T,))


def permute(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))
    return _op(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.shape
    return _op(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def take(a: Tensor, index: int) -> Tensor:
    """Select slice ``index`` along axis 0; backward scatters into that slot."""

    def _bw(g):
        full = np.zeros(a.shape)
        full[index] = g
        return (full,)

    return _op(a.data[index].copy(), (a,), _bw)


def stack(tensors: list[Tensor]) -> Tensor:
    """Stack same-shaped tensors along a new leading axis."""
    if not tensors:
        raise ValueError("stack: need at least one tensor")
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != first:
            raise ValueError(f"stack: shape mismatch {list(first)} vs {list(t.shape)}")
    data = np.stack([t.data for t in tensors])
    return _op(data, tuple(tensors), lambda g: tuple(g[k] for k in range(len(tensors))))


def apply_mask(a: Tensor, mask: np.ndarray) -> Tensor:
    """Keep entries where ``mask`` is True, set the rest to exactly 0.

    The mask is a constant: gradients pass through kept entries unchanged
    and are zero elsewhere.
    """
    if mask.shape != a.shape:
        raise ValueError(f"apply_mask: shape mismatch {list(a.shape)} vs {list(mask.shape)}")
    kept = mask.astype(bool)
    return _op(np.where(kept, a.data, 0.0), (a,), lambda g: (np.where(kept, g, 0.0),))


def conv2d(x: Tensor, w: Tensor, k: int | None = None) -> Tensor:
    """Same-size 2-D cross-correlation with zero padding and no bias.

    ``x`` is [C_in, H, W]; ``w`` is [C_out, C_in, k, k] with odd ``k``.
    The k=1 case is a single channel-mixing matmul per pixel.
    """
    if x.ndim != 3 or w.ndim != 4:
        raise ValueError(f"conv2d: need [C,H,W] input and [O,C,k,k] weights, got {list(x.shape)} and {list(w.shape)}")
    c_out, c_in, kh, kw = w.shape
    if kh != kw:
        raise ValueError(f"conv2d: square kernels only, got {kh}x{kw}")
    if k is not None and k != kh:
        raise ValueError(f"conv2d: declared kernel size {k} does not match weights {kh}")
    k = kh
    if k % 2 == 0:
        raise ValueError(f"conv2d: even kernel size {k} rejected, same-size padding needs odd k")
    if x.shape[0] != c_in:
        raise ValueError(f"conv2d: channel mismatch, input has {x.shape[0]}, weights expect {c_in}")
    _, h, wdt = x.shape
    pad = (k - 1) // 2
    xd, wd = x.data, w.data

    if k == 1:
        out = np.matmul(wd[:, :, 0, 0], xd.reshape(c_in, h * wdt)).reshape(c_out, h, wdt)

        def _bw(g):
            g2 = g.reshape(c_out, h * wdt)
            dx = np.matmul(wd[:, :, 0, 0].T, g2).reshape(c_in, h, wdt)
            dw = np.matmul(g2, xd.reshape(c_in, h * wdt).T).reshape(c_out, c_in, 1, 1)
            return (dx, dw)

        return _op(out, (x, w), _bw)

    xp = np.zeros((c_in, h + 2 * pad, wdt + 2 * pad))
    xp[:, pad:pad + h, pad:pad + wdt] = xd
    out = np.zeros((c_out, h, wdt))
    for i in range(k):
        for j in range(k):
            patch = xp[:, i:i + h, j:j + wdt].reshape(c_in, h * wdt)
            out += np.matmul(wd[:, :, i, j], patch).reshape(c_out, h, wdt)

    def _bw(g):
        g2 = g.reshape(c_out, h * wdt)
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(wd)
        for i in range(k):
            for j in range(k):
                patch = xp[:, i:i + h, j:j + wdt].reshape(c_in, h * wdt)
                dw[:, :, i, j] = np.matmul(g2, patch.T)
                dxp[:, i:i + h, j:j + wdt] += np.matmul(wd[:, :, i, j].T, g2).reshape(c_in, h, wdt)
        return (dxp[:, pad:pad + h, pad:pad + wdt], dw)

    return _op(out, (x, w), _bw)


def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax of a rank-2 tensor, stabilised by per-row max."""
    if a.ndim != 2:
        raise ValueError(f"softmax_rows: rank-2 tensor required, got {list(a.shape)}")
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def _bw(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _op(s, (a,), _bw)


def gelu(x: Tensor, exact: bool = False) -> Tensor:
    """GELU activation; tanh approximation by default, erf form on request."""
    xd = x.data
    if exact:
        phi = 0.5 * (1.0 + _erf(xd / math.sqrt(2.0)))
        out = xd * phi
        pdf = np.exp(-0.5 * xd * xd) / math.sqrt(2.0 * math.pi)

        def _bw(g):
            return (g * (phi + xd * pdf),)

        return _op(out, (x,), _bw)

    u = _GELU_C0 * (xd + _GELU_C1 * xd ** 3)
    t = np.tanh(u)
    out = 0.5 * xd * (1.0 + t)

    def _bw(g):
        du = _GELU_C0 * (1.0 + 3.0 * _GELU_C1 * xd * xd)
        return (g * (0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * du),)

    return _op(out, (x,), _bw)


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, computed branch-wise so neither tail overflows.

    Output is strictly inside (0, 1) until float64 saturates (|x| > ~36).
    """
    xd = x.data
    out = np.empty_like(xd)
    pos = xd >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
    e = np.exp(xd[~pos])
    out[~pos] = e / (1.0 + e)
    return _op(out, (x,), lambda g: (g * out * (1.0 - out),))


def cross_entropy_logits(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean per-pixel cross entropy of [num_classes, H, W] logits.

    ``labels`` is an integer [H, W] map of target class ids; it is a
    constant, so the only gradient path is through the logits.
    """
    if logits.ndim != 3:
        raise ValueError(f"cross_entropy_logits: need [classes,H,W] logits, got {list(logits.shape)}")
    labels = np.asarray(labels)
    if labels.shape != logits.shape[1:]:
        raise ValueError(
            f"cross_entropy_logits: label shape {list(labels.shape)} does not match logits {list(logits.shape)}")
    if labels.min() < 0 or labels.max() >= logits.shape[0]:
        raise ValueError("cross_entropy_logits: label id outside [0, num_classes)")

    ld = logits.data
    m = ld.max(axis=0)
    lse = np.log(np.exp(ld - m).sum(axis=0)) + m
    picked = np.take_along_axis(ld, labels[None], axis=0)[0]
    n_pix = labels.size
    loss = np.asarray((lse - picked).sum() / n_pix)

    def _bw(g):
        p = np.exp(ld - lse)
        np.put_along_axis(p, labels[None], np.take_along_axis(p, labels[None], 0) - 1.0, 0)
        return (p * (float(g) / n_pix),)

    return _op(loss, (logits,), _bw)
