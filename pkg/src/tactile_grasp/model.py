"""The grasp classifier: stacked graph convolutions plus an MLP readout.

Each conv layer computes relu(A_norm @ H @ W + b) over the fixed 24-node
graph; the final node features are flattened row-major (node-major) and fed
through two fully connected layers (hidden 128, output 2). Parameters live
in one flat float64 vector with named views, which keeps the optimizer a
single vector operation and makes checkpoints trivially exact.

Forward/backward come in two flavours sharing the same math: a single-graph
API returning an explicit cache (used by tests and inference), and a batched
node-major path with preallocated buffers (used by the training loop).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from tactile_grasp.errors import CheckpointError, InvalidArgumentError, ShapeError
from tactile_grasp.graphs import NUM_TAXELS, NormalizedAdjacency, TactileGraph

FC_HIDDEN = 128
NUM_CLASSES = 2
INPUT_FEATURES = 3
MAX_CONV_LAYERS = 10

_MAGIC = b"TGRASPGC"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GcnConfig:
    """Architecture description: conv widths, fixed readout, init seed."""

    conv_widths: tuple[int, ...]
    init_seed: int = 0
    input_features: int = INPUT_FEATURES
    fc_hidden: int = FC_HIDDEN
    num_classes: int = NUM_CLASSES

    def __post_init__(self):
        if not 1 <= len(self.conv_widths) <= MAX_CONV_LAYERS:
            raise InvalidArgumentError(
                f"need 1..{MAX_CONV_LAYERS} conv layers, got {len(self.conv_widths)}"
            )
        if any(w < 1 for w in self.conv_widths):
            raise InvalidArgumentError(f"conv widths must be positive: {self.conv_widths}")

    @property
    def flatten_width(self) -> int:
        return NUM_TAXELS * self.conv_widths[-1]

    def shapes(self) -> list[tuple[int, int]]:
        """Parameter shapes in declaration (and serialization) order."""
        out = []
        fan_in = self.input_features
        for width in self.conv_widths:
            out.append((fan_in, width))
            out.append((1, width))
            fan_in = width
        out.append((self.flatten_width, self.fc_hidden))
        out.append((1, self.fc_hidden))
        out.append((self.fc_hidden, self.num_classes))
        out.append((1, self.num_classes))
        return out

    @property
    def param_count(self) -> int:
        return sum(r * c for r, c in self.shapes())


class GcnModel:
    """Flat parameter vector plus per-layer views for one GcnConfig."""

    def __init__(self, config: GcnConfig, params: Optional[np.ndarray] = None,
                 edge_descriptor: str = ""):
        self.config = config
        total = config.param_count
        if params is None:
            params = np.zeros(total, dtype=np.float64)
        if params.shape != (total,) or params.dtype != np.float64:
            raise ShapeError("GcnModel params", params.shape, (total,))
        self.params = params
        self.edge_descriptor = edge_descriptor
        views = self.views_of(self.params)
        n_conv = len(config.conv_widths)
        self.conv_w = views[0 : 2 * n_conv : 2]
        self.conv_b = views[1 : 2 * n_conv : 2]
        self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b = views[2 * n_conv :]

    def views_of(self, vec: np.ndarray) -> list[np.ndarray]:
        """Slice a flat vector into the model's parameter shapes."""
        if vec.shape != (self.config.param_count,):
            raise ShapeError("views_of", vec.shape, (self.config.param_count,))
        views = []
        offset = 0
        for rows, cols in self.config.shapes():
            size = rows * cols
            views.append(vec[offset : offset + size].reshape(rows, cols))
            offset += size
        return views

    @property
    def param_count(self) -> int:
        return self.params.size

    def copy(self) -> "GcnModel":
        return GcnModel(self.config, self.params.copy(), self.edge_descriptor)


def init_model(config: GcnConfig) -> GcnModel:
    """Glorot-uniform weights, zero biases, deterministic per init_seed.

    Weight matrices are drawn in declaration order from a PCG64 generator
    seeded with init_seed; each layer's bound is sqrt(6 / (fan_in + fan_out)).
    """
    model = GcnModel(config)
    rng = np.random.default_rng(np.random.SeedSequence(config.init_seed))
    weights = list(model.conv_w) + [model.fc1_w, model.fc2_w]
    for w in weights:
        fan_in, fan_out = w.shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    return model


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def gcn_layer_forward(
    h: np.ndarray, a_norm: NormalizedAdjacency, w: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """relu(a_norm @ h @ w + b) for a single graph's node features."""
    a = a_norm.matrix
    if h.ndim != 2 or h.shape[0] != a.shape[0]:
        raise ShapeError("gcn_layer_forward", h.shape, a.shape)
    if h.shape[1] != w.shape[0]:
        raise ShapeError("gcn_layer_forward", h.shape, w.shape)
    b = np.atleast_2d(b)
    if b.shape != (1, w.shape[1]):
        raise ShapeError("gcn_layer_forward bias", b.shape, (1, w.shape[1]))
    return np.maximum(a @ h @ w + b, 0.0)


class BatchWorkspace:
    """Preallocated intermediates for node-major (24, B, F) batches.

    One workspace doubles as the forward cache: backward reads the arrays a
    matching forward call filled in. Allocate one per worker and reuse it.
    """

    def __init__(self, config: GcnConfig, batch_size: int):
        if batch_size < 1:
            raise InvalidArgumentError(f"batch size must be positive, got {batch_size}")
        self.config = config
        self.batch_size = batch_size
        n = NUM_TAXELS
        widths = config.conv_widths
        fan_ins = (config.input_features,) + widths[:-1]
        self.h0 = np.empty((n, batch_size, config.input_features))
        self.ah = [np.empty((n, batch_size, fi)) for fi in fan_ins]
        self.z = [np.empty((n, batch_size, fo)) for fo in widths]
        self.h = [np.empty((n, batch_size, fo)) for fo in widths]
        self.g_z = [np.empty((n, batch_size, fo)) for fo in widths]
        self.g_ah = [np.empty((n, batch_size, fi)) for fi in fan_ins]
        self.g_h = [np.empty((n, batch_size, fi)) for fi in fan_ins]
        self.flat = np.empty((batch_size, config.flatten_width))
        self.z1 = np.empty((batch_size, config.fc_hidden))
        self.h1 = np.empty((batch_size, config.fc_hidden))
        self.logits = np.empty((batch_size, config.num_classes))
        self.g_z1 = np.empty((batch_size, config.fc_hidden))
        self.g_flat = np.empty((batch_size, config.flatten_width))
        self.g_hlast = np.empty((n, batch_size, widths[-1]))
        self.fc1_w_t = np.empty((config.fc_hidden, config.flatten_width))
        self.a_norm = None  # set by forward() so backward() can reuse it


def forward_batch(
    model: GcnModel,
    a_norm: NormalizedAdjacency,
    features: np.ndarray,
    ws: Optional[BatchWorkspace] = None,
) -> tuple[np.ndarray, BatchWorkspace]:
    """Forward a node-major (24, B, F_in) feature batch; returns (logits, cache)."""
    n, batch, f_in = features.shape
    cfg = model.config
    if n != NUM_TAXELS or f_in != cfg.input_features:
        raise ShapeError("forward_batch", features.shape, (NUM_TAXELS, batch, cfg.input_features))
    if a_norm.n != NUM_TAXELS:
        raise ShapeError("forward_batch adjacency", a_norm.matrix.shape, (NUM_TAXELS, NUM_TAXELS))
    if ws is None or ws.batch_size != batch or ws.config is not cfg:
        ws = BatchWorkspace(cfg, batch)
    a = a_norm.matrix
    np.copyto(ws.h0, features)
    h = ws.h0
    for i, (w, b) in enumerate(zip(model.conv_w, model.conv_b)):
        fi = h.shape[2]
        np.matmul(a, h.reshape(n, batch * fi), out=ws.ah[i].reshape(n, batch * fi))
        np.matmul(ws.ah[i].reshape(n * batch, fi), w, out=ws.z[i].reshape(n * batch, -1))
        np.add(ws.z[i], b, out=ws.z[i])
        np.maximum(ws.z[i], 0.0, out=ws.h[i])
        h = ws.h[i]
    # node-major -> sample-major flatten: row b is node0 feats, node1 feats, ...
    np.copyto(ws.flat, h.transpose(1, 0, 2).reshape(batch, -1))
    np.matmul(ws.flat, model.fc1_w, out=ws.z1)
    np.add(ws.z1, model.fc1_b, out=ws.z1)
    np.maximum(ws.z1, 0.0, out=ws.h1)
    np.matmul(ws.h1, model.fc2_w, out=ws.logits)
    np.add(ws.logits, model.fc2_b, out=ws.logits)
    return ws.logits, ws


def backward_batch(
    model: GcnModel,
    a_norm: NormalizedAdjacency,
    ws: BatchWorkspace,
    grad_logits: np.ndarray,
    grads: np.ndarray,
) -> np.ndarray:
    """Accumulate exact parameter gradients into the flat vector `grads`.

    `ws` must come from a matching forward_batch call. The gradient w.r.t.
    node features threads back through the adjacency as A^T @ upstream @ W^T,
    masked by each layer's relu.
    """
    if grads.shape != model.params.shape:
        raise ShapeError("backward_batch grads", grads.shape, model.params.shape)
    if grad_logits.shape != ws.logits.shape:
        raise ShapeError("backward_batch grad_logits", grad_logits.shape, ws.logits.shape)
    gv = model.views_of(grads)
    n_conv = len(model.config.conv_widths)
    g_conv_w = gv[0 : 2 * n_conv : 2]
    g_conv_b = gv[1 : 2 * n_conv : 2]
    g_fc1_w, g_fc1_b, g_fc2_w, g_fc2_b = gv[2 * n_conv :]
    a = a_norm.matrix
    n, batch = NUM_TAXELS, ws.batch_size

    np.matmul(ws.h1.T, grad_logits, out=g_fc2_w)
    np.sum(grad_logits, axis=0, out=g_fc2_b[0])
    g_h1 = grad_logits @ model.fc2_w.T
    np.multiply(g_h1, ws.z1 > 0.0, out=ws.g_z1)
    np.copyto(ws.fc1_w_t, model.fc1_w.T)
    np.matmul(ws.g_z1, ws.fc1_w_t, out=ws.g_flat)
    np.matmul(ws.flat.T, ws.g_z1, out=g_fc1_w)
    np.sum(ws.g_z1, axis=0, out=g_fc1_b[0])

    np.copyto(
        ws.g_hlast,
        ws.g_flat.reshape(batch, n, model.config.conv_widths[-1]).transpose(1, 0, 2),
    )
    g_h = ws.g_hlast
    for i in range(n_conv - 1, -1, -1):
        fo = ws.z[i].shape[2]
        fi = ws.ah[i].shape[2]
        np.multiply(g_h, ws.z[i] > 0.0, out=ws.g_z[i])
        g_conv_b[i][0, :] = ws.g_z[i].sum(axis=(0, 1))
        np.matmul(
            ws.ah[i].reshape(n * batch, fi).T,
            ws.g_z[i].reshape(n * batch, fo),
            out=g_conv_w[i],
        )
        np.matmul(
            ws.g_z[i].reshape(n * batch, fo),
            model.conv_w[i].T,
            out=ws.g_ah[i].reshape(n * batch, fi),
        )
        np.matmul(
            a.T, ws.g_ah[i].reshape(n, batch * fi), out=ws.g_h[i].reshape(n, batch * fi)
        )
        g_h = ws.g_h[i]
    return grads


def forward(
    model: GcnModel,
    graph_or_features,
    a_norm: NormalizedAdjacency,
) -> tuple[np.ndarray, BatchWorkspace]:
    """Logits for one tactile graph (or a bare 24x3 feature matrix).

    Returns the length-2 logit vector and the cache consumed by backward().
    """
    if isinstance(graph_or_features, TactileGraph):
        features = graph_or_features.features
    else:
        features = np.asarray(graph_or_features, dtype=np.float64)
    if features.shape != (NUM_TAXELS, model.config.input_features):
        raise ShapeError(
            "forward", features.shape, (NUM_TAXELS, model.config.input_features)
        )
    logits, ws = forward_batch(model, a_norm, features[:, None, :], ws=None)
    ws.a_norm = a_norm
    return logits[0].copy(), ws


def backward(model: GcnModel, cache: BatchWorkspace, grad_logits: np.ndarray) -> np.ndarray:
    """Flat parameter-gradient vector for a forward() cache."""
    if not hasattr(cache, "a_norm"):
        raise InvalidArgumentError("cache was not produced by forward()")
    grad_logits = np.asarray(grad_logits, dtype=np.float64).reshape(1, -1)
    grads = np.zeros_like(model.params)
    return backward_batch(model, cache.a_norm, cache, grad_logits, grads)


def save_model(model: GcnModel, path) -> None:
    """Write the checkpoint: magic, version, config block, raw float64 params."""
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", _FORMAT_VERSION))
    widths = model.config.conv_widths
    buf.write(struct.pack("<I", len(widths)))
    buf.write(struct.pack(f"<{len(widths)}I", *widths))
    buf.write(struct.pack("<q", model.config.init_seed))
    desc = model.edge_descriptor.encode()
    buf.write(struct.pack("<I", len(desc)))
    buf.write(desc)
    buf.write(struct.pack("<Q", model.params.size))
    buf.write(model.params.astype("<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_model(path) -> GcnModel:
    """Read a checkpoint written by save_model; bitwise round-trip."""
    raw = Path(path).read_bytes()
    view = memoryview(raw)
    offset = 0

    def take(count: int) -> memoryview:
        nonlocal offset
        if offset + count > len(raw):
            raise CheckpointError(f"{path}: truncated checkpoint")
        chunk = view[offset : offset + count]
        offset += count
        return chunk

    if bytes(take(len(_MAGIC))) != _MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint")
    (version,) = struct.unpack("<I", take(4))
    if version != _FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    (n_conv,) = struct.unpack("<I", take(4))
    if not 1 <= n_conv <= MAX_CONV_LAYERS:
        raise CheckpointError(f"{path}: implausible conv layer count {n_conv}")
    widths = struct.unpack(f"<{n_conv}I", take(4 * n_conv))
    (init_seed,) = struct.unpack("<q", take(8))
    (desc_len,) = struct.unpack("<I", take(4))
    descriptor = bytes(take(desc_len)).decode()
    (count,) = struct.unpack("<Q", take(8))
    config = GcnConfig(conv_widths=tuple(widths), init_seed=init_seed)
    if count != config.param_count:
        raise CheckpointError(
            f"{path}: parameter count {count} does not match config {config.param_count}"
        )
    params = np.frombuffer(take(8 * count), dtype="<f8").astype(np.float64)
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return GcnModel(config, params, edge_descriptor=descriptor)
