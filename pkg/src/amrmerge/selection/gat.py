"""Two-layer masked dot-product graph attention classifier in plain numpy.

Each layer computes, for node representations ``H`` (n x d_in)::

    Q = H W_Q,  K = H W_K,  V = H W_V
    A = softmax_row(mask(Q K^T / sqrt(d_hid)))
    H' = relu(A V)

where the mask admits each node itself and its undirected neighbors.  The
final representation feeds an affine layer with a 2-way softmax.  Gradients
are derived by hand (see :func:`backward`).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"AMRGAT\x00\x01"
N_LAYERS = 2


@dataclass
class GatModel:
    params: dict[str, np.ndarray]
    d_in: int
    d_hid: int
    meta: dict = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.params)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "GatModel":
        return GatModel({k: v.copy() for k, v in self.params.items()}, self.d_in, self.d_hid, dict(self.meta))


def parameter_names() -> list[str]:
    names = []
    for layer in range(1, N_LAYERS + 1):
        names += [f"layer{layer}.W_K", f"layer{layer}.W_Q", f"layer{layer}.W_V"]
    return names + ["classifier.W", "classifier.b"]


def init_model(d_in: int = 304, d_hid: int = 256, seed: int = 0, init_scale: float = 1.0) -> GatModel:
    """Unit-normal attention weights; classifier uses U(-1/sqrt(d_in), 1/sqrt(d_in))."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for layer in range(1, N_LAYERS + 1):
        params[f"layer{layer}.W_K"] = init_scale * rng.standard_normal((d_in, d_hid))
        params[f"layer{layer}.W_Q"] = init_scale * rng.standard_normal((d_in, d_hid))
        params[f"layer{layer}.W_V"] = init_scale * rng.standard_normal((d_in, d_in))
    bound = 1.0 / np.sqrt(d_in)
    params["classifier.W"] = rng.uniform(-bound, bound, (d_in, 2))
    params["classifier.b"] = rng.uniform(-bound, bound, 2)
    return GatModel(params, d_in, d_hid, {"seed": seed})


def zeros_model(d_in: int = 304, d_hid: int = 256) -> GatModel:
    model = init_model(d_in, d_hid)
    for p in model.params.values():
        p[...] = 0.0
    return model


def attention_mask(n: int, neighbors) -> np.ndarray:
    """Boolean (n x n) mask: self plus undirected neighbors."""
    mask = np.eye(n, dtype=bool)
    for i, adj in enumerate(neighbors):
        for j in adj:
            mask[i, j] = mask[j, i] = True
    return mask


def _masked_softmax(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    scores = np.where(mask, scores, -np.inf)
    scores = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    return weights / weights.sum(axis=1, keepdims=True)


def forward(model: GatModel, features: np.ndarray, mask: np.ndarray, return_cache: bool = False):
    """Class probabilities (n x 2); optionally the activations for backprop."""
    if features.ndim != 2 or features.shape[1] != model.d_in:
        raise ValueError(f"features must be (n, {model.d_in}), got {features.shape}")
    if mask.shape != (features.shape[0],) * 2:
        raise ValueError("mask shape does not match the number of nodes")
    p = model.params
    scale = 1.0 / np.sqrt(model.d_hid)
    h = features
    layers = []
    for layer in range(1, N_LAYERS + 1):
        q = h @ p[f"layer{layer}.W_Q"]
        k = h @ p[f"layer{layer}.W_K"]
        v = h @ p[f"layer{layer}.W_V"]
        attn = _masked_softmax((q @ k.T) * scale, mask)
        z = attn @ v
        layers.append((h, q, k, v, attn, z))
        h = np.maximum(z, 0.0)
    logits = h @ p["classifier.W"] + p["classifier.b"]
    logits = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    if return_cache:
        return probs, {"layers": layers, "final": h, "logits": logits}
    return probs


def loss_and_probs(model: GatModel, features: np.ndarray, mask: np.ndarray, labels: np.ndarray):
    probs, cache = forward(model, features, mask, return_cache=True)
    logits = cache["logits"]
    log_norm = np.log(np.exp(logits).sum(axis=1))
    labels = np.asarray(labels, dtype=int)
    loss = float(np.mean(log_norm - logits[np.arange(len(labels)), labels]))
    return loss, probs, cache


def backward(model: GatModel, probs: np.ndarray, cache: dict, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy with respect to every parameter."""
    p = model.params
    n = len(labels)
    scale = 1.0 / np.sqrt(model.d_hid)
    grads: dict[str, np.ndarray] = {}
    d_logits = probs.copy()
    d_logits[np.arange(n), np.asarray(labels, dtype=int)] -= 1.0
    d_logits /= n
    grads["classifier.W"] = cache["final"].T @ d_logits
    grads["classifier.b"] = d_logits.sum(axis=0)
    d_h = d_logits @ p["classifier.W"].T
    for layer in range(N_LAYERS, 0, -1):
        h, q, k, v, attn, z = cache["layers"][layer - 1]
        d_z = d_h * (z > 0)
        d_attn = d_z @ v.T
        d_v = attn.T @ d_z
        # Softmax Jacobian applied row-wise; masked entries have attn == 0.
        d_scores = attn * (d_attn - np.sum(d_attn * attn, axis=1, keepdims=True))
        d_q = d_scores @ k * scale
        d_k = d_scores.T @ q * scale
        grads[f"layer{layer}.W_Q"] = h.T @ d_q
        grads[f"layer{layer}.W_K"] = h.T @ d_k
        grads[f"layer{layer}.W_V"] = h.T @ d_v
        d_h = d_q @ p[f"layer{layer}.W_Q"].T + d_k @ p[f"layer{layer}.W_K"].T + d_v @ p[f"layer{layer}.W_V"].T
    return {name: grads[name] for name in model.params}


def gradient_check(
    model: GatModel,
    features: np.ndarray,
    mask: np.ndarray,
    labels: np.ndarray,
    step: float = 1e-5,
    floor: float = 1e-6,
) -> dict[str, float]:
    """Max relative error per parameter between analytic and central differences.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; the floor keeps
    entries whose true gradient is zero from dividing noise by noise.
    """
    if features.shape[0] > 10:
        raise ValueError("gradient check is limited to graphs of at most 10 nodes")
    loss, probs, cache = loss_and_probs(model, features, mask, labels)
    analytic = backward(model, probs, cache, labels)
    errors = {}
    for name, param in model.params.items():
        numeric = np.zeros_like(param)
        flat = param.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_and_probs(model, features, mask, labels)[0]
            flat[i] = orig - step
            down = loss_and_probs(model, features, mask, labels)[0]
            flat[i] = orig
            num_flat[i] = (up - down) / (2 * step)
        denom = np.maximum(np.maximum(np.abs(analytic[name]), np.abs(numeric)), floor)
        errors[name] = float(np.max(np.abs(analytic[name] - numeric) / denom))
    return errors


def save_checkpoint(model: GatModel, path: str | Path) -> None:
    """Write magic, a JSON header with shapes, then raw little-endian float64 data."""
    header = {
        "version": 1,
        "d_in": model.d_in,
        "d_hid": model.d_hid,
        "meta": model.meta,
        "params": [[name, list(arr.shape)] for name, arr in model.params.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in model.params.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> GatModel:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path} is not a model checkpoint")
    offset = len(CHECKPOINT_MAGIC)
    (size,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    header = json.loads(data[offset:offset + size].decode("utf-8"))
    offset += size
    if header.get("version") != 1:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    params = {}
    for name, shape in header["params"]:
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        params[name] = arr.astype(np.float64)
        offset += count * 8
    if offset != len(data):
        raise ValueError(f"{path} has trailing bytes")
    return GatModel(params, header["d_in"], header["d_hid"], header.get("meta", {}))
