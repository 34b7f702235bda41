"""Dense float64 matrices with a reverse-mode gradient tape.

The primitive set is intentionally small: matmul, elementwise add, scalar
scale, relu, row gather/scatter-add, edge-list neighbor aggregation,
concatenation, group mean pooling, and the two losses.  Every primitive
checks shapes, verifies output finiteness, and records a vector-Jacobian
closure on the tape of its inputs.

A tensor is a constant until some tape watches it (``Tape.watch`` or
``Parameters.watch_all``); ops whose inputs are all constants stay off-tape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DetachedLoss, NonFiniteValue, ShapeMismatch
from .hasse import DirectedCellGraph


def _check_finite(arr, what="value"):
    if not np.isfinite(arr).all():
        raise NonFiniteValue(f"non-finite {what}")
    return arr


class Tensor2:
    """A rows x cols float64 matrix, optionally tracked by a tape."""

    __slots__ = ("data", "tape", "node")

    def __init__(self, data, tape=None, node=None):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatch(f"Tensor2 must be 2-d, got shape {arr.shape}")
        self.data = arr
        self.tape = tape
        self.node = node

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeMismatch(f"item() on shape {self.data.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Tensor2({self.rows}x{self.cols}, taped={self.node is not None})"


class Tape:
    """Chronological record of primitive applications.

    Entry k produced node k; watched leaves are entries with no inputs.
    ``backward`` walks entries once, in reverse order.
    """

    def __init__(self):
        self._inputs: list[tuple[int, ...]] = []
        self._vjps: list = []
        self._shapes: list[tuple[int, int]] = []

    def __len__(self):
        return len(self._inputs)

    def watch(self, t: Tensor2) -> Tensor2:
        if t.tape is self:
            return t
        t.tape = self
        t.node = self._record((), None, t.data.shape)
        return t

    def _record(self, in_nodes, vjp, shape) -> int:
        self._inputs.append(tuple(in_nodes))
        self._vjps.append(vjp)
        self._shapes.append(shape)
        return len(self._inputs) - 1

    def backward(self, loss: Tensor2) -> list:
        """Gradient of a 1x1 loss w.r.t. every node; None where unreached."""
        if loss.tape is not self or loss.node is None:
            raise DetachedLoss("loss is not recorded on this tape")
        if loss.data.shape != (1, 1):
            raise ShapeMismatch("loss must be 1x1")
        grads: list = [None] * len(self._inputs)
        grads[loss.node] = np.ones((1, 1))
        for k in range(loss.node, -1, -1):
            g = grads[k]
            if g is None or self._vjps[k] is None:
                continue
            for node, contrib in zip(self._inputs[k], self._vjps[k](g)):
                if contrib is None:
                    continue
                if grads[node] is None:
                    grads[node] = contrib.copy()
                else:
                    grads[node] += contrib
        return grads


def _result(data, in_tensors, in_nodes, vjp):
    tapes = {t.tape for t in in_tensors if t.tape is not None}
    if not tapes:
        return Tensor2(data)
    if len(tapes) > 1:
        raise ValueError("inputs recorded on different tapes")
    tape = tapes.pop()
    nodes, keep = [], []
    for t, slot in zip(in_tensors, in_nodes):
        if t.tape is tape:
            nodes.append(t.node)
            keep.append(slot)
    full_vjp = vjp

    def pruned_vjp(g):
        outs = full_vjp(g)
        return [outs[slot] for slot in keep]

    out = Tensor2(data, tape=tape)
    out.node = tape._record(tuple(nodes), pruned_vjp, data.shape)
    return out


# -- primitives ---------------------------------------------------------------

def matmul(a: Tensor2, b: Tensor2) -> Tensor2:
    if a.cols != b.rows:
        raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}")
    data = _check_finite(a.data @ b.data, "matmul output")
    ad, bd = a.data, b.data
    return _result(data, (a, b), (0, 1), lambda g: (g @ bd.T, ad.T @ g))


def add(a: Tensor2, b: Tensor2) -> Tensor2:
    if a.shape != b.shape:
        raise ShapeMismatch(f"add {a.shape} + {b.shape}")
    data = _check_finite(a.data + b.data, "add output")
    return _result(data, (a, b), (0, 1), lambda g: (g, g))


def scale(a: Tensor2, c: float) -> Tensor2:
    c = float(c)
    data = _check_finite(a.data * c, "scale output")
    return _result(data, (a,), (0,), lambda g: (g * c,))


def relu(a: Tensor2) -> Tensor2:
    mask = a.data > 0
    data = np.where(mask, a.data, 0.0)
    return _result(data, (a,), (0,), lambda g: (g * mask,))


def gather(a: Tensor2, idx) -> Tensor2:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= a.rows):
        raise ShapeMismatch("gather index out of range")
    data = a.data[idx]
    n, f = a.rows, a.cols

    def vjp(g):
        out = np.zeros((n, f))
        _kernels.scatter_add_rows(out, idx, np.ascontiguousarray(g))
        return (out,)

    return _result(data, (a,), (0,), vjp)


def scatter_add(x: Tensor2, idx, n_rows: int, weights=None) -> Tensor2:
    """Rows of x added into a zero (n_rows, cols) matrix at positions idx.

    ``weights`` is an optional constant per-row scale applied before the add.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if idx.shape[0] != x.rows:
        raise ShapeMismatch(f"scatter_add got {idx.shape[0]} indices for {x.rows} rows")
    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise ShapeMismatch("scatter_add index out of range")
    out = np.zeros((n_rows, x.cols))
    if weights is None:
        _kernels.scatter_add_rows(out, idx, x.data)
        vjp = lambda g: (np.ascontiguousarray(g[idx]),)
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        _kernels.scatter_add_rows_weighted(out, idx, x.data, w)
        vjp = lambda g: (np.ascontiguousarray(g[idx]) * w[:, None],)
    return _result(out, (x,), (0,), vjp)


def aggregate(graph: DirectedCellGraph, h: Tensor2, mode: str = "sum") -> Tensor2:
    """Per-node aggregate of in-neighbor rows along graph edges.

    Row i of the output is the sum (or mean) of h[j] over edges j -> i; a
    node without in-edges gets a zero row, also in mean mode.
    """
    if mode not in ("sum", "mean"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    if h.rows != graph.n_nodes:
        raise ShapeMismatch(f"{h.rows} feature rows for {graph.n_nodes} graph nodes")
    src, dst, n = graph.src, graph.dst, graph.n_nodes
    data = _kernels.edge_segment_sum(h.data, src, dst, n)
    if mode == "mean":
        indeg = np.bincount(dst, minlength=n).astype(np.float64)
        inv = np.where(indeg > 0, 1.0 / np.maximum(indeg, 1.0), 0.0)
        data = data * inv[:, None]

    def vjp(g):
        gg = np.ascontiguousarray(g if mode == "sum" else g * inv[:, None])
        return (_kernels.edge_segment_sum(gg, dst, src, n),)

    return _result(_check_finite(data, "aggregate output"), (h,), (0,), vjp)


sparse_aggregate = aggregate


def concat(tensors, axis: int) -> Tensor2:
    tensors = list(tensors)
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    other = 1 - axis
    sizes = [t.shape[axis] for t in tensors]
    if len({t.shape[other] for t in tensors}) != 1:
        raise ShapeMismatch("concat inputs disagree on the non-concatenated axis")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        if axis == 0:
            return [np.ascontiguousarray(g[offsets[i]:offsets[i + 1], :]) for i in range(len(sizes))]
        return [np.ascontiguousarray(g[:, offsets[i]:offsets[i + 1]]) for i in range(len(sizes))]

    return _result(data, tuple(tensors), tuple(range(len(tensors))), vjp)


def group_mean_pool(a: Tensor2, groups, n_groups: int) -> Tensor2:
    """Mean of rows sharing a group id; empty groups give zero rows."""
    groups = np.asarray(groups, dtype=np.int64)
    if groups.shape[0] != a.rows:
        raise ShapeMismatch(f"{groups.shape[0]} group ids for {a.rows} rows")
    if groups.size and (groups.min() < 0 or groups.max() >= n_groups):
        raise ShapeMismatch("group id out of range")
    counts = np.bincount(groups, minlength=n_groups).astype(np.float64)
    inv = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), 0.0)
    sums = np.zeros((n_groups, a.cols))
    _kernels.scatter_add_rows(sums, groups, a.data)
    data = sums * inv[:, None]

    def vjp(g):
        return (np.ascontiguousarray(g[groups] * inv[groups][:, None]),)

    return _result(data, (a,), (0,), vjp)


def softmax_cross_entropy(logits: Tensor2, labels) -> Tensor2:
    """Mean negative log-likelihood of integer labels under row softmax."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != logits.rows:
        raise ShapeMismatch(f"{labels.shape[0]} labels for {logits.rows} logit rows")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.cols):
        raise ShapeMismatch("label out of range")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    n = logits.rows
    data = np.array([[-logp[np.arange(n), labels].mean()]])
    probs = np.exp(logp)

    def vjp(g):
        grad = probs.copy()
        grad[np.arange(n), labels] -= 1.0
        return (float(g[0, 0]) / n * grad,)

    return _result(_check_finite(data, "cross-entropy"), (logits,), (0,), vjp)


def mse(pred: Tensor2, target: Tensor2) -> Tensor2:
    """Mean squared error over all entries, as a 1x1 tensor."""
    if pred.shape != target.shape:
        raise ShapeMismatch(f"mse {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    size = diff.size
    data = np.array([[float((diff ** 2).mean())]])

    def vjp(g):
        gd = float(g[0, 0]) * 2.0 / size * diff
        return (gd, -gd)

    return _result(_check_finite(data, "mse"), (pred, target), (0, 1), vjp)


# -- parameters ---------------------------------------------------------------

@dataclass
class Parameter:
    name: str
    tensor: Tensor2


class Parameters:
    """Named parameter tensors; each name registered exactly once."""

    def __init__(self):
        self._store: dict[str, Parameter] = {}

    def add(self, name: str, array) -> Tensor2:
        if name in self._store:
            raise ValueError(f"parameter {name!r} registered twice")
        t = Tensor2(np.array(array, dtype=np.float64))
        self._store[name] = Parameter(name, t)
        return t

    def glorot(self, name: str, rows: int, cols: int, rng: np.random.Generator) -> Tensor2:
        s = np.sqrt(6.0 / (rows + cols))
        return self.add(name, rng.uniform(-s, s, size=(rows, cols)))

    def __getitem__(self, name: str) -> Tensor2:
        return self._store[name].tensor

    def __contains__(self, name: str) -> bool:
        return name in self._store

    def names(self) -> list[str]:
        return list(self._store)

    def count(self) -> int:
        return sum(p.tensor.data.size for p in self._store.values())

    def watch_all(self, tape: Tape):
        for p in self._store.values():
            tape.watch(p.tensor)

    def unwatch_all(self):
        for p in self._store.values():
            p.tensor.tape = None
            p.tensor.node = None

    def copy(self) -> "Parameters":
        out = Parameters()
        for name, p in self._store.items():
            out.add(name, p.tensor.data.copy())
        return out

    def load_values(self, other: "Parameters"):
        for name, p in self._store.items():
            p.tensor.data[...] = other[name].data

    # checkpoint format: {"name": {"rows": r, "cols": c, "data": [row-major]}}
    # JSON float rendering round-trips float64 bit-exactly.
    def to_json_dict(self) -> dict:
        return {
            name: {
                "rows": p.tensor.rows,
                "cols": p.tensor.cols,
                "data": [float(x) for x in p.tensor.data.ravel()],
            }
            for name, p in self._store.items()
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Parameters":
        out = cls()
        for name, rec in doc.items():
            arr = np.array(rec["data"], dtype=np.float64).reshape(rec["rows"], rec["cols"])
            out.add(name, arr)
        return out

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Parameters":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def backward(tape: Tape, loss: Tensor2, params: Parameters) -> dict[str, np.ndarray]:
    """d(loss)/d(param) for every registered parameter (zeros when unused)."""
    grads = tape.backward(loss)
    out = {}
    for name in params.names():
        t = params[name]
        if t.tape is tape and t.node is not None and grads[t.node] is not None:
            out[name] = grads[t.node]
        else:
            out[name] = np.zeros_like(t.data)
    return out


def gradient_check(f, params: Parameters, h: float = 1e-6) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` must rebuild its scalar output from the current parameter values on
    each call.  The error per entry is |analytic - numeric| / max(1, |numeric|).
    """
    tape = Tape()
    params.watch_all(tape)
    try:
        loss = f()
        analytic = backward(tape, loss, params)
    finally:
        params.unwatch_all()

    worst = 0.0
    for name in params.names():
        data = params[name].data
        flat = data.ravel()
        num = np.zeros_like(flat)
        for k in range(flat.size):
            keep = flat[k]
            flat[k] = keep + h
            up = f().item()
            flat[k] = keep - h
            down = f().item()
            flat[k] = keep
            num[k] = (up - down) / (2.0 * h)
        if not np.isfinite(num).all():
            raise NonFiniteValue(f"non-finite finite-difference for {name!r}")
        err = np.abs(analytic[name].ravel() - num) / np.maximum(1.0, np.abs(num))
        worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst
