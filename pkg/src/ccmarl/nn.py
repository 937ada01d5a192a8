"""Small numpy MLP pieces with hand-written backward passes.

Parameters are plain dicts of arrays. All functions compute in the dtype of
the parameters they are given, so gradient checks can run in float64 while
training runs in float32.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

Params = Dict[str, np.ndarray]

HIDDEN = 64


class TrainingError(RuntimeError):
    pass


class ShapeError(ValueError):
    pass


# ----------------------------------------------------------------------------- init
def _orthogonal(rng, rows, cols, gain, dtype):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return (gain * q[:rows, :cols]).astype(dtype)


def init_encoder(rng, obs_dim: int, hidden: int = HIDDEN, dtype=np.float32) -> Params:
    g = np.sqrt(2.0)
    return {
        "W1": _orthogonal(rng, hidden, obs_dim, g, dtype),
        "b1": np.zeros(hidden, dtype),
        "W2": _orthogonal(rng, hidden, hidden, g, dtype),
        "b2": np.zeros(hidden, dtype),
    }


def init_linear(rng, out_dim: int, in_dim: int = HIDDEN, gain: float = 1.0, dtype=np.float32) -> Params:
    return {"W": _orthogonal(rng, out_dim, in_dim, gain, dtype), "b": np.zeros(out_dim, dtype)}


# ----------------------------------------------------------------------------- encoder
def encoder_forward(p: Params, x: np.ndarray, cache: Optional[dict] = None) -> np.ndarray:
    """relu(W2 relu(W1 x + b1) + b2) for a single vector or a batch of rows."""
    if x.shape[-1] != p["W1"].shape[1]:
        raise ShapeError(f"observation has length {x.shape[-1]}, encoder expects {p['W1'].shape[1]}")
    z1 = x @ p["W1"].T + p["b1"]
    h1 = np.maximum(z1, 0)
    z2 = h1 @ p["W2"].T + p["b2"]
    h2 = np.maximum(z2, 0)
    if cache is not None:
        cache.update(x=x, h1=h1, h2=h2)
    return h2


def encoder_backward(p: Params, cache: dict, dh2: np.ndarray) -> Params:
    x, h1, h2 = cache["x"], cache["h1"], cache["h2"]
    dz2 = dh2 * (h2 > 0)
    dh1 = dz2 @ p["W2"]
    dz1 = dh1 * (h1 > 0)
    return {"W1": dz1.T @ x, "b1": dz1.sum(0), "W2": dz2.T @ h1, "b2": dz2.sum(0)}


def encoder_forward_sparse(p: Params, idx: np.ndarray) -> np.ndarray:
    """Encoder on a binary observation given by the indices of its ones."""
    z1 = p["W1"][:, idx].sum(axis=1) + p["b1"]
    h1 = np.maximum(z1, 0)
    return np.maximum(p["W2"] @ h1 + p["b2"], 0)


def linear_forward(p: Params, h: np.ndarray) -> np.ndarray:
    return h @ p["W"].T + p["b"]


def linear_backward(p: Params, h: np.ndarray, dout: np.ndarray):
    """Returns (grads, d_input)."""
    return {"W": dout.T @ h, "b": dout.sum(0)}, dout @ p["W"]


# ----------------------------------------------------------------------------- masked categorical
def masked_logprobs(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Log-softmax over legal entries; masked entries are -inf."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ValueError("every distribution needs at least one legal action")
    z = np.where(mask, logits, -np.inf)
    m = z.max(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        shifted = z - m
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return shifted - lse


def _probs_and_logp(logits, mask):
    logp = masked_logprobs(logits, mask)
    p = np.exp(logp)
    return p, np.where(p > 0, logp, 0.0)


def masked_entropy(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    p, logp = _probs_and_logp(logits, mask)
    return -(p * logp).sum(axis=-1)


class MaskedCategorical:
    """Categorical distribution with illegal actions removed."""

    def __init__(self, logits, mask):
        self.logits = np.asarray(logits)
        self.mask = np.asarray(mask, dtype=bool)
        self.logp = masked_logprobs(self.logits, self.mask)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.logp)

    def log_prob(self, a) -> np.ndarray:
        return np.take_along_axis(self.logp, np.asarray(a)[..., None], axis=-1)[..., 0]

    def entropy(self) -> np.ndarray:
        p = self.probs
        return -(p * np.where(p > 0, self.logp, 0.0)).sum(axis=-1)

    def sample(self, rng) -> int:
        return int(sample_index(self.probs, rng))

    def argmax(self) -> int:
        return int(np.argmax(np.where(self.mask, self.logits, -np.inf)))


def sample_index(probs: np.ndarray, rng) -> int:
    """Inverse-CDF draw; uses exactly one uniform from ``rng``."""
    c = np.cumsum(probs, dtype=np.float64)
    u = rng.random() * c[-1]
    i = int(np.searchsorted(c, u, side="right"))
    # guard against landing past the end or on a zero-probability slot through rounding
    i = min(i, len(probs) - 1)
    while probs[i] == 0:
        i -= 1
    return i


def small_softmax(logits: np.ndarray):
    """Returns (probs, logp) of a dense logit vector (all entries legal)."""
    z = logits - logits.max()
    lse = np.log(np.exp(z).sum())
    logp = z - lse
    return np.exp(logp), logp


# ----------------------------------------------------------------------------- optimiser
class Adam:
    """Adam with bias correction; each tensor keeps its own step count.

    Tensors that receive no gradient in a call are left untouched.
    """

    def __init__(self, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: Params = {}
        self.v: Params = {}
        self.t: Dict[str, int] = {}

    def step(self, params: Params, grads: Params) -> None:
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient in {name}")
        for name, g in grads.items():
            optimizer_step(params, grads, self, name)

    def state_dict(self) -> dict:
        return {"m": self.m, "v": self.v, "t": self.t}


def optimizer_step(params: Params, grads: Params, opt: Adam, name: str) -> None:
    p, g = params[name], grads[name].astype(params[name].dtype, copy=False)
    m = opt.m.get(name)
    if m is None:
        m = opt.m[name] = np.zeros_like(p)
        opt.v[name] = np.zeros_like(p)
        opt.t[name] = 0
    v = opt.v[name]
    opt.t[name] += 1
    t = opt.t[name]
    m *= opt.beta1
    m += (1 - opt.beta1) * g
    v *= opt.beta2
    v += (1 - opt.beta2) * (g * g)
    step = opt.lr * np.sqrt(1 - opt.beta2 ** t) / (1 - opt.beta1 ** t)
    p -= (step * m / (np.sqrt(v) + opt.eps)).astype(p.dtype, copy=False)
