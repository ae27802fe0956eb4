"""Dense float tensors with reverse-mode automatic differentiation.

Implements exactly the operator set the draft model needs: batched matmul,
broadcast add/multiply, axis means, embedding lookup with an optional
zeroed padding row, layer norm, GELU, sigmoid, additively-masked softmax,
inverted dropout, concatenation, shape plumbing (reshape/transpose/gather),
and the loss kernels (categorical NLL over probability rows, binary cross
entropy, one-hot BCE, sum of squares). CPU only, numpy storage, float32 by
default.

Gradients accumulate into ``Tensor.grad`` and are never overwritten; call
``backward()`` on a scalar output (or pass an explicit seed gradient) to
run the reverse pass. Dropout is the only stochastic op and takes an
explicit ``numpy.random.Generator`` so runs are reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

# Additive mask value treated as "minus infinity". Softmax subtracts the row
# max before exponentiating, so a fully masked row degrades to a uniform row
# instead of NaN.
NEG_INF = -1.0e9

# Screen op inputs for NaN (one cheap reduction per input). Divergence then
# surfaces at the op that produced it instead of three modules later.
NAN_CHECKS = True


class OpError(ValueError):
    """Shape or legality violation inside a tensor op."""


def _check_finite(op: str, *arrays: np.ndarray) -> None:
    if not NAN_CHECKS:
        return
    for a in arrays:
        # max() propagates NaN, so this is a single-pass screen without allocs
        if a.size and np.isnan(np.max(a)):
            raise OpError(f"{op}: NaN in input")


class Tensor:
    """A dense array plus an optional entry on the autodiff tape."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents: tuple = (), op: str = "leaf"):
        if isinstance(data, np.ndarray):
            self.data = data
        elif isinstance(data, np.generic):
            # reductions of 1-d arrays yield numpy scalars; keep their dtype
            self.data = np.asarray(data)
        else:
            self.data = np.asarray(data, dtype=np.float32)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.op = op
        self._parents = parents
        self._backward = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> np.ndarray:
        return self.data

    def accumulate_grad(self, g: np.ndarray) -> None:
        """Add into the grad buffer; allocate on first touch."""
        if self.grad is None:
            if getattr(g, "shape", None) == self.data.shape and g.dtype == self.data.dtype:
                self.grad = g.copy()
                return
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, seed: np.ndarray | None = None) -> None:
        """Reverse pass from this node, accumulating into ``.grad`` buffers.

        ``seed`` defaults to ones and must match this tensor's shape; scalar
        outputs (losses) need no explicit seed.
        """
        if not self.requires_grad:
            raise OpError("backward: tensor does not require grad")
        if seed is None:
            if self.data.size != 1:
                raise OpError("backward: non-scalar output needs an explicit seed gradient")
            seed_arr = np.ones_like(self.data)
        else:
            seed_arr = np.asarray(seed, dtype=self.data.dtype)
            if seed_arr.shape != self.data.shape:
                raise OpError(
                    f"backward: seed shape {seed_arr.shape} != output shape {self.data.shape}"
                )

        # Iterative post-order DFS; training graphs exceed the recursion limit.
        order: list[Tensor] = []
        done: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                if id(node) not in done:
                    done.add(id(node))
                    order.append(node)
                continue
            if id(node) in done:
                continue
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in done:
                    stack.append((p, False))

        self.accumulate_grad(seed_arr)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def tensor(data, requires_grad: bool = False, dtype=np.float32) -> Tensor:
    """Build a leaf tensor, copying/casting the input to ``dtype``."""
    return Tensor(np.array(data, dtype=dtype), requires_grad=requires_grad)


def _result(data: np.ndarray, parents: tuple, op: str) -> Tensor:
    requires = any(p.requires_grad for p in parents)
    return Tensor(data, requires, parents if requires else (), op)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_finite("add", a.data, b.data)
    try:
        data = a.data + b.data
    except ValueError:
        raise OpError(f"add: shapes {a.shape} and {b.shape} do not broadcast") from None
    out = _result(data, (a, b), "add")
    if out.requires_grad:

        def _bw(g):
            if a.requires_grad:
                a.accumulate_grad(_unbroadcast(g, a.data.shape))
            if b.requires_grad:
                b.accumulate_grad(_unbroadcast(g, b.data.shape))

        out._backward = _bw
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_finite("sub", a.data, b.data)
    try:
        data = a.data - b.data
    except ValueError:
        raise OpError(f"sub: shapes {a.shape} and {b.shape} do not broadcast") from None
    out = _result(data, (a, b), "sub")
    if out.requires_grad:

        def _bw(g):
            if a.requires_grad:
                a.accumulate_grad(_unbroadcast(g, a.data.shape))
            if b.requires_grad:
                b.accumulate_grad(_unbroadcast(-g, b.data.shape))

        out._backward = _bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_finite("mul", a.data, b.data)
    try:
        data = a.data * b.data
    except ValueError:
        raise OpError(f"mul: shapes {a.shape} and {b.shape} do not broadcast") from None
    out = _result(data, (a, b), "mul")
    if out.requires_grad:

        def _bw(g):
            if a.requires_grad:
                a.accumulate_grad(_unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                b.accumulate_grad(_unbroadcast(g * a.data, b.data.shape))

        out._backward = _bw
    return out


def scale(a: Tensor, s: float) -> Tensor:
    _check_finite("scale", a.data)
    out = _result(a.data * s, (a,), "scale")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(g * s)

        out._backward = _bw
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy stacking semantics (leading dims broadcast)."""
    _check_finite("matmul", a.data, b.data)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise OpError(f"matmul: operands must be >=2-d, got {a.shape} @ {b.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise OpError(f"matmul: inner dims disagree, {a.shape} @ {b.shape}")
    data = a.data @ b.data
    out = _result(data, (a, b), "matmul")
    if out.requires_grad:

        def _bw(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2)
                a.accumulate_grad(_unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                if b.data.ndim == 2 and a.data.ndim > 2:
                    # stacked input times plain weight matrix: one flattened
                    # product instead of a per-item gradient stack + reduction
                    k = a.data.shape[-1]
                    gb = a.data.reshape(-1, k).T @ g.reshape(-1, g.shape[-1])
                    b.accumulate_grad(gb)
                else:
                    gb = np.swapaxes(a.data, -1, -2) @ g
                    b.accumulate_grad(_unbroadcast(gb, b.data.shape))

        out._backward = _bw
    return out


def mean(a: Tensor, axis: int) -> Tensor:
    _check_finite("mean", a.data)
    if not -a.data.ndim <= axis < a.data.ndim:
        raise OpError(f"mean: axis {axis} out of range for shape {a.shape}")
    axis = axis % a.data.ndim
    n = a.data.shape[axis]
    out = _result(a.data.mean(axis=axis), (a,), "mean")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(np.expand_dims(g, axis) / n)

        out._backward = _bw
    return out


def sum_squares(a: Tensor) -> Tensor:
    """Scalar sum of squared entries (the weight-decay kernel)."""
    _check_finite("sum_squares", a.data)
    out = _result(np.asarray((a.data * a.data).sum(), dtype=a.data.dtype), (a,), "sum_squares")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(2.0 * g * a.data)

        out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# shape plumbing


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    data = a.data.reshape(shape)
    out = _result(data, (a,), "reshape")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(g.reshape(a.data.shape))

        out._backward = _bw
    return out


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(a.data.ndim)):
        raise OpError(f"transpose: axes {axes} are not a permutation for shape {a.shape}")
    inverse = tuple(np.argsort(axes))
    out = _result(np.transpose(a.data, axes), (a,), "transpose")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(np.transpose(g, inverse))

        out._backward = _bw
    return out


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise OpError("concat: empty input list")
    for t in tensors:
        _check_finite("concat", t.data)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = _result(data, tuple(tensors), "concat")
    if out.requires_grad:
        sizes = [t.data.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]

        def _bw(g):
            for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
                if t.requires_grad:
                    t.accumulate_grad(piece)

        out._backward = _bw
    return out


def index_select(a: Tensor, indices, axis: int) -> Tensor:
    """Gather along ``axis`` with a constant index vector."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise OpError(f"index_select: indices must be 1-d, got shape {idx.shape}")
    size = a.data.shape[axis]
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise OpError(f"index_select: index out of range [0, {size})")
    out = _result(np.take(a.data, idx, axis=axis), (a,), "index_select")
    if out.requires_grad:

        def _bw(g):
            ga = np.zeros_like(a.data)
            np.add.at(np.moveaxis(ga, axis, 0), idx, np.moveaxis(g, axis, 0))
            a.accumulate_grad(ga)

        out._backward = _bw
    return out


def select_rows(a: Tensor, indices) -> Tensor:
    """Per-example gather: out[i] = a[i, indices[i]]."""
    idx = np.asarray(indices, dtype=np.int64)
    if a.data.ndim < 2 or idx.shape != (a.data.shape[0],):
        raise OpError(f"select_rows: need ({a.data.shape[0]},) indices for shape {a.shape}")
    size = a.data.shape[1]
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise OpError(f"select_rows: index out of range [0, {size})")
    rows = np.arange(a.data.shape[0])
    out = _result(a.data[rows, idx], (a,), "select_rows")
    if out.requires_grad:

        def _bw(g):
            ga = np.zeros_like(a.data)
            np.add.at(ga, (rows, idx), g)
            a.accumulate_grad(ga)

        out._backward = _bw
    return out


def embedding(table: Tensor, ids, pad_index: int | None = None) -> Tensor:
    """Row lookup; rows at ``pad_index`` come back exactly zero and get no grad."""
    _check_finite("embedding", table.data)
    ids = np.asarray(ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise OpError(f"embedding: ids must be integers, got dtype {ids.dtype}")
    ids = ids.astype(np.int64, copy=False)
    vocab = table.data.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise OpError(f"embedding: id out of range [0, {vocab})")
    data = table.data[ids]
    if pad_index is not None:
        keep = ids != pad_index
        data[~keep] = 0.0
    out = _result(data, (table,), "embedding")
    if out.requires_grad:

        def _bw(g):
            gt = np.zeros_like(table.data)
            if pad_index is None:
                np.add.at(gt, ids, g)
            else:
                np.add.at(gt, ids[keep], g[keep])
            table.accumulate_grad(gt)

        out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# nonlinearities and normalization


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh form."""
    _check_finite("gelu", a.data)
    x = a.data
    k = math.sqrt(2.0 / math.pi)
    x2 = x * x
    inner = x2 * x
    inner *= 0.044715
    inner += x
    inner *= k
    t = np.tanh(inner, out=inner)
    half_x = 0.5 * x
    out = _result(half_x * (1.0 + t), (a,), "gelu")
    if out.requires_grad:

        def _bw(g):
            # d/dx [0.5 x (1+t)] = 0.5 (1+t) + 0.5 x (1-t^2) k (1 + 3*0.044715 x^2)
            local = x2
            local *= 3 * 0.044715
            local += 1.0
            local *= k
            local *= 1.0 - t * t
            local *= half_x
            local += 0.5 * (1.0 + t)
            a.accumulate_grad(g * local)

        out._backward = _bw
    return out


def sigmoid(a: Tensor) -> Tensor:
    _check_finite("sigmoid", a.data)
    # numerically stable split over sign
    x = a.data
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    y = y.astype(x.dtype, copy=False)
    out = _result(y, (a,), "sigmoid")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(g * y * (1.0 - y))

        out._backward = _bw
    return out


def softmax(a: Tensor, additive_mask: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis after adding ``additive_mask`` (constant).

    Mask entries are 0 for kept positions and a large negative number for
    dropped ones. Because the row max is subtracted, rows where everything
    is masked produce a uniform distribution rather than NaN.
    """
    _check_finite("softmax", a.data)
    z = a.data
    if additive_mask is not None:
        try:
            z = z + additive_mask
        except ValueError:
            raise OpError(
                f"softmax: mask shape {np.shape(additive_mask)} does not broadcast to {a.shape}"
            ) from None
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    y = y.astype(a.data.dtype, copy=False)
    out = _result(y, (a,), "softmax")
    if out.requires_grad:

        def _bw(g):
            dot = (g * y).sum(axis=-1, keepdims=True)
            a.accumulate_grad(y * (g - dot))

        out._backward = _bw
    return out


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    _check_finite("layer_norm", a.data, gain.data, bias.data)
    dim = a.data.shape[-1]
    if gain.data.shape != (dim,) or bias.data.shape != (dim,):
        raise OpError(
            f"layer_norm: gain/bias must be ({dim},), got {gain.shape} and {bias.shape}"
        )
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = _result(xhat * gain.data + bias.data, (a, gain, bias), "layer_norm")
    if out.requires_grad:

        def _bw(g):
            if gain.requires_grad:
                gain.accumulate_grad((g * xhat).reshape(-1, dim).sum(axis=0))
            if bias.requires_grad:
                bias.accumulate_grad(g.reshape(-1, dim).sum(axis=0))
            if a.requires_grad:
                gx = g * gain.data
                term = gx - gx.mean(axis=-1, keepdims=True) - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
                a.accumulate_grad(inv * term)

        out._backward = _bw
    return out


def dropout(a: Tensor, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout. Identity (the same tensor object) outside training."""
    if not 0.0 <= rate < 1.0:
        raise OpError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise OpError("dropout: training mode needs an explicit numpy Generator")
    _check_finite("dropout", a.data)
    keep = (rng.random(a.data.shape) >= rate).astype(a.data.dtype)
    keep /= 1.0 - rate
    out = _result(a.data * keep, (a,), "dropout")
    if out.requires_grad:

        def _bw(g):
            a.accumulate_grad(g * keep)

        out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# loss kernels


def nll(probs: Tensor, targets) -> Tensor:
    """Per-row negative log-likelihood of integer targets under probability rows.

    A zero (or negative) probability at a target index is a hard error: the
    target fell outside the support, which means an upstream mask excluded it.
    """
    _check_finite("nll", probs.data)
    if probs.data.ndim != 2:
        raise OpError(f"nll: probs must be 2-d, got {probs.shape}")
    idx = np.asarray(targets, dtype=np.int64)
    if idx.shape != (probs.data.shape[0],):
        raise OpError(f"nll: need ({probs.data.shape[0]},) targets, got {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= probs.data.shape[1]):
        raise OpError(f"nll: target out of range [0, {probs.data.shape[1]})")
    rows = np.arange(probs.data.shape[0])
    picked = probs.data[rows, idx]
    if np.any(picked <= 0.0):
        raise OpError("nll: zero probability at a target index (target masked out upstream?)")
    out = _result(-np.log(picked), (probs,), "nll")
    if out.requires_grad:

        def _bw(g):
            gp = np.zeros_like(probs.data)
            gp[rows, idx] = -g / picked
            probs.accumulate_grad(gp)

        out._backward = _bw
    return out


def binary_cross_entropy(probs: Tensor, targets) -> Tensor:
    """Per-element BCE against float targets; inputs clipped away from {0, 1}."""
    _check_finite("binary_cross_entropy", probs.data)
    t = np.asarray(targets, dtype=probs.data.dtype)
    if t.shape != probs.data.shape:
        raise OpError(f"binary_cross_entropy: target shape {t.shape} != {probs.shape}")
    eps = 1e-7
    p = np.clip(probs.data, eps, 1.0 - eps)
    out = _result(-(t * np.log(p) + (1.0 - t) * np.log1p(-p)), (probs,), "bce")
    if out.requires_grad:

        def _bw(g):
            probs.accumulate_grad(g * (p - t) / (p * (1.0 - p)))

        out._backward = _bw
    return out


def onehot_binary_cross_entropy(probs: Tensor, targets) -> Tensor:
    """Per-row sum of elementwise BCE against a one-hot target row.

    Comparison variant of the pick loss: every vocabulary entry contributes
    a binary term instead of a single categorical one.
    """
    _check_finite("onehot_binary_cross_entropy", probs.data)
    if probs.data.ndim != 2:
        raise OpError(f"onehot_binary_cross_entropy: probs must be 2-d, got {probs.shape}")
    idx = np.asarray(targets, dtype=np.int64)
    if idx.shape != (probs.data.shape[0],):
        raise OpError(
            f"onehot_binary_cross_entropy: need ({probs.data.shape[0]},) targets, got {idx.shape}"
        )
    eps = 1e-7
    p = np.clip(probs.data, eps, 1.0 - eps)
    rows = np.arange(p.shape[0])
    picked = p[rows, idx]
    data = -(np.log1p(-p).sum(axis=-1) - np.log1p(-picked) + np.log(picked))
    out = _result(data, (probs,), "onehot_bce")
    if out.requires_grad:

        def _bw(g):
            gp = 1.0 / (1.0 - p)
            gp[rows, idx] = -1.0 / picked
            probs.accumulate_grad(g[:, None] * gp)

        out._backward = _bw
    return out
