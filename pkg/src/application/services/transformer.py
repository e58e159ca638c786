"""Minimal post-residual transformer with a (K+1)-way classifier head.

Shapes: a batch of inputs is ``(n, d_hat0, tau)``, hidden states are
``(n, d_hat, tau)``, attention heads are stacked on axis 1 as ``(n, h, m, tau)``.
Blocks have no layer norm and the attention scores are not scaled.
The flattened hidden state ``(n, d_hat * tau)`` is the feature space GROD works in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.special import softmax

from domain.entities.model import BlockParameters, Budget, ClassifierHead, Gradients, TransformerModel
from domain.errors import ShapeMismatch

from .seeding import SeedLike, make_rng

INIT_SCALE = 0.1


def positional_encoding(d_model: int, tau: int) -> np.ndarray:
    """Fixed sinusoidal encoding laid out like an input, ``(d_model, tau)``."""
    position = np.arange(tau)[None, :]
    dims = np.arange(d_model)[:, None]
    angle = position / (10000 ** (2 * (dims // 2) / d_model))
    encoding = np.zeros((d_model, tau))
    encoding[0::2] = np.sin(angle[0::2])
    encoding[1::2] = np.cos(angle[1::2])
    return encoding


def init_model(
    d_hat0: int,
    tau: int,
    budget: Budget,
    depth: int,
    num_classes: int,
    seed: SeedLike,
) -> TransformerModel:
    """Weights ~ U(-0.1, 0.1), zero biases, drawn in a fixed parameter order."""
    if d_hat0 < 1 or tau < 1 or depth < 0 or num_classes < 1:
        raise ValueError("d_hat0, tau and num_classes must be >= 1 and depth >= 0")
    rng = make_rng(seed)
    d, h, m_h, m_v, r = budget.as_tuple()
    k1 = num_classes + 1

    def uniform(*shape: int) -> np.ndarray:
        return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

    input_weight = uniform(d, d_hat0)
    blocks = [
        BlockParameters(
            w_q=uniform(h, m_h, d),
            w_k=uniform(h, m_h, d),
            w_v=uniform(h, m_v, d),
            w_o=uniform(h, d, m_v),
            w1=uniform(r, d),
            b1=np.zeros(r),
            w2=uniform(d, r),
            b2=np.zeros(d),
        )
        for _ in range(depth)
    ]
    head = ClassifierHead(w3=uniform(k1, d), b3=np.zeros((k1, tau)), w4=uniform(k1, tau), b4=np.zeros(k1))
    return TransformerModel(
        d_hat0=d_hat0,
        tau=tau,
        budget=budget,
        num_classes=num_classes,
        input_weight=input_weight,
        input_bias=np.zeros(d),
        blocks=blocks,
        head=head,
    )


@dataclass
class BlockCache:
    h: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    attention: np.ndarray
    mixed: np.ndarray
    a: np.ndarray
    u: np.ndarray
    z: np.ndarray


@dataclass
class ForwardCache:
    """Activations kept by ``forward_with_cache`` for ``backward``."""

    inputs: np.ndarray
    blocks: List[BlockCache] = field(default_factory=list)
    hidden: np.ndarray | None = None
    head_pre: np.ndarray | None = None


def _as_batch(model: TransformerModel, inputs: np.ndarray) -> Tuple[np.ndarray, bool]:
    inputs = np.asarray(inputs, dtype=np.float64)
    single = inputs.ndim == 2
    batch = inputs[None] if single else inputs
    if batch.ndim != 3 or batch.shape[1:] != (model.d_hat0, model.tau):
        raise ShapeMismatch(
            f"expected input of shape (n, {model.d_hat0}, {model.tau}) or ({model.d_hat0}, {model.tau}), "
            f"got {inputs.shape}"
        )
    return batch, single


def _block_forward(block: BlockParameters, h: np.ndarray) -> Tuple[np.ndarray, BlockCache]:
    q = np.einsum("hmd,ndt->nhmt", block.w_q, h)
    k = np.einsum("hmd,ndt->nhmt", block.w_k, h)
    v = np.einsum("hmd,ndt->nhmt", block.w_v, h)
    scores = np.einsum("nhmi,nhmj->nhij", k, q)
    attention = softmax(scores, axis=2)  # column-wise: normalize over keys
    mixed = np.einsum("nhvi,nhij->nhvj", v, attention)
    a = h + np.einsum("hdv,nhvj->ndj", block.w_o, mixed)
    u = np.einsum("rd,ndt->nrt", block.w1, a) + block.b1[None, :, None]
    z = np.maximum(u, 0.0)
    out = a + np.einsum("dr,nrt->ndt", block.w2, z) + block.b2[None, :, None]
    return out, BlockCache(h=h, q=q, k=k, v=v, attention=attention, mixed=mixed, a=a, u=u, z=z)


def encode(model: TransformerModel, inputs: np.ndarray) -> np.ndarray:
    """Input map plus positional encoding (the latter only when ``tau > 1``)."""
    if model.tau > 1:
        inputs = inputs + positional_encoding(model.d_hat0, model.tau)[None]
    return np.einsum("de,net->ndt", model.input_weight, inputs) + model.input_bias[None, :, None]


def flatten_hidden(hidden: np.ndarray) -> np.ndarray:
    return hidden.reshape(hidden.shape[0], -1)


def unflatten_hidden(model: TransformerModel, features: np.ndarray) -> np.ndarray:
    return features.reshape(features.shape[0], model.budget.d_hat, model.tau)


def head_forward(model: TransformerModel, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Logits ``(n, K+1)`` from flattened hidden states; also returns ``W3 h + b3``."""
    assert model.head is not None
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != model.feature_dim:
        raise ShapeMismatch(f"expected {model.feature_dim} feature columns, got {features.shape[1]}")
    hidden = unflatten_hidden(model, features)
    head_pre = np.einsum("kd,ndt->nkt", model.head.w3, hidden) + model.head.b3[None]
    logits = np.einsum("nkt,kt->nk", head_pre, model.head.w4) + model.head.b4[None]
    return logits, head_pre


def head_backward(
    model: TransformerModel,
    features: np.ndarray,
    head_pre: np.ndarray,
    grad_logits: np.ndarray,
) -> Tuple[Gradients, np.ndarray]:
    """Head gradients and the gradient w.r.t. the flattened features."""
    assert model.head is not None
    hidden = unflatten_hidden(model, np.atleast_2d(features))
    grad_logits = np.atleast_2d(grad_logits)
    d_pre = grad_logits[:, :, None] * model.head.w4[None]
    grads: Gradients = {
        "head.w3": np.einsum("nkt,ndt->kd", d_pre, hidden),
        "head.b3": d_pre.sum(axis=0),
        "head.w4": np.einsum("nk,nkt->kt", grad_logits, head_pre),
        "head.b4": grad_logits.sum(axis=0),
    }
    d_hidden = np.einsum("kd,nkt->ndt", model.head.w3, d_pre)
    return grads, flatten_hidden(d_hidden)


def forward_with_cache(model: TransformerModel, inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, ForwardCache]:
    batch, _ = _as_batch(model, inputs)
    cache = ForwardCache(inputs=batch)
    h = encode(model, batch)
    for block in model.blocks:
        h, block_cache = _block_forward(block, h)
        cache.blocks.append(block_cache)
    cache.hidden = h
    logits, cache.head_pre = head_forward(model, flatten_hidden(h))
    return h, logits, cache


def forward(model: TransformerModel, inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Hidden state and logits; a single ``(d_hat0, tau)`` input yields unbatched outputs."""
    _, single = _as_batch(model, inputs)
    hidden, logits, _ = forward_with_cache(model, inputs)
    if single:
        return hidden[0], logits[0]
    return hidden, logits


def _block_backward(block: BlockParameters, cache: BlockCache, d_out: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    grads: Dict[str, np.ndarray] = {
        "b2": d_out.sum(axis=(0, 2)),
        "w2": np.einsum("ndt,nrt->dr", d_out, cache.z),
    }
    d_u = np.einsum("dr,ndt->nrt", block.w2, d_out) * (cache.u > 0)
    grads["b1"] = d_u.sum(axis=(0, 2))
    grads["w1"] = np.einsum("nrt,ndt->rd", d_u, cache.a)
    d_a = d_out + np.einsum("rd,nrt->ndt", block.w1, d_u)

    grads["w_o"] = np.einsum("ndj,nhvj->hdv", d_a, cache.mixed)
    d_mixed = np.einsum("hdv,ndj->nhvj", block.w_o, d_a)
    d_v = np.einsum("nhvj,nhij->nhvi", d_mixed, cache.attention)
    d_att = np.einsum("nhvi,nhvj->nhij", cache.v, d_mixed)
    d_scores = cache.attention * (d_att - (cache.attention * d_att).sum(axis=2, keepdims=True))
    d_k = np.einsum("nhij,nhmj->nhmi", d_scores, cache.q)
    d_q = np.einsum("nhij,nhmi->nhmj", d_scores, cache.k)

    grads["w_q"] = np.einsum("nhmt,ndt->hmd", d_q, cache.h)
    grads["w_k"] = np.einsum("nhmt,ndt->hmd", d_k, cache.h)
    grads["w_v"] = np.einsum("nhmt,ndt->hmd", d_v, cache.h)
    d_h = (
        d_a
        + np.einsum("hmd,nhmt->ndt", block.w_q, d_q)
        + np.einsum("hmd,nhmt->ndt", block.w_k, d_k)
        + np.einsum("hmd,nhmt->ndt", block.w_v, d_v)
    )
    return grads, d_h


def backward_from_hidden(model: TransformerModel, cache: ForwardCache, d_hidden: np.ndarray) -> Gradients:
    """Gradients of the input map and every block given ``dL/d hidden``."""
    grads: Gradients = {}
    d_h = d_hidden
    for index in reversed(range(model.depth)):
        block_grads, d_h = _block_backward(model.blocks[index], cache.blocks[index], d_h)
        for name, value in block_grads.items():
            grads[f"blocks.{index}.{name}"] = value
    encoded_inputs = cache.inputs
    if model.tau > 1:
        encoded_inputs = encoded_inputs + positional_encoding(model.d_hat0, model.tau)[None]
    grads["input.weight"] = np.einsum("ndt,net->de", d_h, encoded_inputs)
    grads["input.bias"] = d_h.sum(axis=(0, 2))
    return grads


def backward(model: TransformerModel, cache: ForwardCache, grad_logits: np.ndarray) -> Gradients:
    """Analytic gradients for every parameter, keyed like ``model.parameters()``."""
    assert cache.hidden is not None and cache.head_pre is not None
    grad_logits = np.atleast_2d(np.asarray(grad_logits, dtype=np.float64))
    head_grads, d_features = head_backward(model, flatten_hidden(cache.hidden), cache.head_pre, grad_logits)
    grads = backward_from_hidden(model, cache, unflatten_hidden(model, d_features))
    grads.update(head_grads)
    return {name: grads[name] for name in model.parameters()}


def classify_max(logits: np.ndarray) -> np.ndarray:
    """Zero-based argmax; the lowest index wins ties."""
    return np.argmax(np.asarray(logits), axis=-1)


def classify_scored(
    logits: np.ndarray,
    score_fn: Callable[[np.ndarray], np.ndarray],
    threshold: float,
) -> np.ndarray:
    """OOD label ``K`` where ``score < threshold``, argmax otherwise (a score equal to the threshold is ID)."""
    logits = np.asarray(logits, dtype=np.float64)
    num_classes = logits.shape[-1] - 1
    scores = np.asarray(score_fn(logits))
    return np.where(scores < threshold, num_classes, classify_max(logits))


__all__ = [
    "ForwardCache",
    "positional_encoding",
    "init_model",
    "encode",
    "forward",
    "forward_with_cache",
    "backward",
    "backward_from_hidden",
    "head_forward",
    "head_backward",
    "flatten_hidden",
    "unflatten_hidden",
    "classify_max",
    "classify_scored",
]
