"""PPO self-play for six seats under three parameter-sharing layouts.

Seat ``k`` is routed to encoder ``enc_of[k]`` and to policy/value heads
``head_of[k]``:

    independent     6 encoders, 6 heads
    shared-encoder  1 encoder,  6 heads
    fully-shared    1 encoder,  1 head
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np

from . import nn
from .env import ChineseCheckersEnv, RewardScheme, observation_indices
from .nn import Adam, TrainingError
from .rules import Status
from .tables import NUM_PLAYERS, board_tables

log = logging.getLogger(__name__)


class Sharing(Enum):
    INDEPENDENT = "independent"
    SHARED_ENCODER = "shared-encoder"
    FULLY_SHARED = "fully-shared"

    @classmethod
    def parse(cls, value) -> "Sharing":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "-")
        aliases = {"fully-independent": "independent", "shared": "fully-shared"}
        return cls(aliases.get(v, v))

    @property
    def n_encoders(self) -> int:
        return NUM_PLAYERS if self is Sharing.INDEPENDENT else 1

    @property
    def n_heads(self) -> int:
        return 1 if self is Sharing.FULLY_SHARED else NUM_PLAYERS


@dataclass
class PpoConfig:
    clip: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    epochs: int = 4
    minibatch: int = 128
    steps: int = 4000
    iterations: int = 100
    lr: float = 3e-4
    adam_eps: float = 1e-8
    max_grad_norm: float = 0.0  # 0 disables clipping

    def __post_init__(self):
        if not 0 < self.clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        if not (0 <= self.gamma <= 1 and 0 <= self.lam <= 1):
            raise ValueError("gamma and lambda must lie in [0, 1]")
        if self.epochs < 1 or self.minibatch < 1 or self.steps < 1 or self.iterations < 0:
            raise ValueError("epochs, minibatch and steps must be positive")


# ----------------------------------------------------------------------------- policy set
class PolicySet:
    """Parameters of all six seats plus the seat -> tensor routing."""

    def __init__(self, n: int, sharing: Sharing, params: nn.Params):
        self.n = n
        self.sharing = Sharing.parse(sharing)
        self.params = params
        t = board_tables(n)
        self.obs_dim, self.act_dim = t.obs_dim, t.act_dim
        for k in range(self.sharing.n_encoders):
            if params[f"enc{k}.W1"].shape[1] != self.obs_dim:
                raise ValueError("checkpoint does not match board size")

    @classmethod
    def init(cls, n: int, sharing, rng, dtype=np.float32) -> "PolicySet":
        sharing = Sharing.parse(sharing)
        t = board_tables(n)
        params = {}
        for k in range(sharing.n_encoders):
            for name, arr in nn.init_encoder(rng, t.obs_dim, dtype=dtype).items():
                params[f"enc{k}.{name}"] = arr
        for k in range(sharing.n_heads):
            for name, arr in nn.init_linear(rng, t.act_dim, gain=0.01, dtype=dtype).items():
                params[f"pi{k}.{name}"] = arr
            for name, arr in nn.init_linear(rng, 1, gain=1.0, dtype=dtype).items():
                params[f"vf{k}.{name}"] = arr
        return cls(n, sharing, params)

    def enc_of(self, seat: int) -> int:
        return seat if self.sharing is Sharing.INDEPENDENT else 0

    def head_of(self, seat: int) -> int:
        return 0 if self.sharing is Sharing.FULLY_SHARED else seat

    def sub(self, prefix: str) -> nn.Params:
        k = len(prefix) + 1
        return {name[k:]: v for name, v in self.params.items() if name.startswith(prefix + ".")}

    def seat_names(self, seat: int) -> List[str]:
        pre = (f"enc{self.enc_of(seat)}.", f"pi{self.head_of(seat)}.", f"vf{self.head_of(seat)}.")
        return [name for name in self.params if name.startswith(pre)]

    def copy(self) -> "PolicySet":
        return PolicySet(self.n, self.sharing, {k: v.copy() for k, v in self.params.items()})

    # -- acting ---------------------------------------------------------------
    def hidden_sparse(self, seat: int, idx: np.ndarray) -> np.ndarray:
        e = self.enc_of(seat)
        p = self.params
        z1 = p[f"enc{e}.W1"][:, idx].sum(axis=1) + p[f"enc{e}.b1"]
        np.maximum(z1, 0, out=z1)
        return np.maximum(p[f"enc{e}.W2"] @ z1 + p[f"enc{e}.b2"], 0)

    def value_sparse(self, seat: int, idx: np.ndarray) -> float:
        h = self.hidden_sparse(seat, idx)
        k = self.head_of(seat)
        return float(self.params[f"vf{k}.W"][0] @ h + self.params[f"vf{k}.b"][0])

    def act_sparse(self, seat: int, idx: np.ndarray, legal: np.ndarray, rng, mode: str = "sample"):
        """Choose among ``legal`` actions. Returns (position in legal, logprob, value)."""
        h = self.hidden_sparse(seat, idx)
        k = self.head_of(seat)
        p = self.params
        logits = p[f"pi{k}.W"][legal] @ h + p[f"pi{k}.b"][legal]
        probs, logp = nn.small_softmax(logits)
        if mode == "argmax":
            i = int(np.argmax(logits))
        else:
            i = nn.sample_index(probs, rng)
        value = float(p[f"vf{k}.W"][0] @ h + p[f"vf{k}.b"][0])
        return i, float(logp[i]), value

    def forward(self, x: np.ndarray, seats) -> tuple:
        """Dense batch forward: (logits [B, A], values [B])."""
        x = np.atleast_2d(x)
        seats = np.broadcast_to(np.asarray(seats), (x.shape[0],))
        logits = np.empty((x.shape[0], self.act_dim), dtype=x.dtype)
        values = np.empty(x.shape[0], dtype=x.dtype)
        for seat in np.unique(seats):
            rows = seats == seat
            h = nn.encoder_forward(self.sub(f"enc{self.enc_of(seat)}"), x[rows])
            k = self.head_of(seat)
            logits[rows] = nn.linear_forward(self.sub(f"pi{k}"), h)
            values[rows] = nn.linear_forward(self.sub(f"vf{k}"), h)[:, 0]
        return logits, values


# ----------------------------------------------------------------------------- advantages
def compute_gae(rewards, values, dones, gamma, lam, last_value=0.0, bootstrap=None):
    """Generalised advantage estimation over one agent's transition stream.

    ``dones[t]`` ends an episode after step t; its successor value is
    ``bootstrap[t]`` (0 when not given, i.e. a true terminal). The step after
    the final transition is valued at ``last_value``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    boot = np.zeros_like(rewards) if bootstrap is None else np.asarray(bootstrap, dtype=np.float64)
    adv = np.zeros_like(rewards)
    running = 0.0
    next_value = last_value
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            next_value = boot[t]
            running = 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


# ----------------------------------------------------------------------------- rollouts
@dataclass
class Batch:
    seats: np.ndarray  # int64[T]
    obs: np.ndarray  # uint8[T, obs_dim]
    masks: np.ndarray  # uint8[T, act_dim]
    actions: np.ndarray  # int64[T]
    logprobs: np.ndarray  # float64[T]
    values: np.ndarray  # float64[T]
    rewards: np.ndarray  # float64[T]
    dones: np.ndarray  # bool[T]
    bootstrap: np.ndarray  # float64[T]
    last_values: np.ndarray  # float64[6], value of the unfinished state per seat
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None
    episode_returns: List[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return len(self.actions)


class Collector:
    """Steps one shared environment with the seat-routed policies."""

    def __init__(self, n: int, scheme=RewardScheme.POSITIVE_SUM, turn_limit=None):
        self.env = ChineseCheckersEnv(n, scheme, turn_limit)
        self.t = board_tables(n)
        self._ep_return = np.zeros(NUM_PLAYERS)

    def collect(self, policy: PolicySet, steps: int, rng) -> Batch:
        env, t = self.env, self.t
        T = steps
        seats = np.zeros(T, np.int64)
        obs = np.zeros((T, t.obs_dim), np.uint8)
        masks = np.zeros((T, t.act_dim), np.uint8)
        actions = np.zeros(T, np.int64)
        logprobs = np.zeros(T)
        values = np.zeros(T)
        rewards = np.zeros(T)
        dones = np.zeros(T, bool)
        boot = np.zeros(T)
        last = np.full(NUM_PLAYERS, -1)  # latest transition index per seat, current episode
        finished = []
        for i in range(T):
            s = env.state
            seat = s.current
            idx = observation_indices(s)
            abs_codes, legal = s.legal_codes(player_frame=True)
            pos, lp, v = policy.act_sparse(seat, idx, legal, rng)
            seats[i] = seat
            obs[i, idx] = 1
            masks[i, legal] = 1
            actions[i] = legal[pos]
            logprobs[i] = lp
            values[i] = v
            last[seat] = i
            res = env.step(int(legal[pos]))
            self._ep_return += res.rewards
            for q in range(NUM_PLAYERS):
                if res.rewards[q] != 0 and last[q] >= 0:
                    rewards[last[q]] += res.rewards[q]
            if res.terminated or res.truncated:
                for q in range(NUM_PLAYERS):
                    j = last[q]
                    if j < 0:
                        continue
                    dones[j] = True
                    if res.truncated:
                        boot[j] = policy.value_sparse(q, observation_indices(env.state, q))
                finished.append(self._ep_return.copy())
                self._ep_return[:] = 0
                env.reset()
                last[:] = -1
        last_values = np.zeros(NUM_PLAYERS)
        for q in range(NUM_PLAYERS):
            if last[q] >= 0:
                last_values[q] = policy.value_sparse(q, observation_indices(env.state, q))
        return Batch(seats, obs, masks, actions, logprobs, values, rewards, dones, boot, last_values,
                     episode_returns=finished)


def collect_rollout(collector: Collector, policy: PolicySet, steps: int, rng) -> Batch:
    return collector.collect(policy, steps, rng)


def add_advantages(batch: Batch, gamma: float, lam: float) -> Batch:
    adv = np.zeros(len(batch))
    ret = np.zeros(len(batch))
    for q in range(NUM_PLAYERS):
        rows = np.flatnonzero(batch.seats == q)
        if rows.size == 0:
            continue
        a, r = compute_gae(batch.rewards[rows], batch.values[rows], batch.dones[rows], gamma, lam,
                           last_value=batch.last_values[q], bootstrap=batch.bootstrap[rows])
        adv[rows], ret[rows] = a, r
    batch.advantages, batch.returns = adv, ret
    return batch


# ----------------------------------------------------------------------------- loss
def normalize(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    if adv.size < 2:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std() + eps)


def ppo_loss(policy: PolicySet, mb: dict, clip: float, entropy_coef: float, value_coef: float):
    """Clipped-surrogate loss and its exact gradient.

    ``mb`` holds ``x`` (float obs rows), ``mask``, ``actions``, ``old_logp``,
    ``adv`` (already normalised), ``returns`` and ``seats``. Returns
    ``(loss, grads, stats)``; grads only cover tensors the minibatch touches.
    """
    x, mask, act = mb["x"], mb["mask"].astype(bool), mb["actions"]
    old_logp, adv, ret, seats = mb["old_logp"], mb["adv"], mb["returns"], mb["seats"]
    B = x.shape[0]
    dt = x.dtype
    grads: nn.Params = {}
    caches = {}
    h2 = np.empty((B, nn.HIDDEN), dtype=dt)
    enc_ids = np.array([policy.enc_of(s) for s in seats])
    head_ids = np.array([policy.head_of(s) for s in seats])
    for e in np.unique(enc_ids):
        rows = enc_ids == e
        cache = {}
        h2[rows] = nn.encoder_forward(policy.sub(f"enc{e}"), x[rows], cache)
        caches[e] = (rows, cache)

    logits = np.empty((B, policy.act_dim), dtype=dt)
    values = np.empty(B, dtype=dt)
    for k in np.unique(head_ids):
        rows = head_ids == k
        logits[rows] = nn.linear_forward(policy.sub(f"pi{k}"), h2[rows])
        values[rows] = nn.linear_forward(policy.sub(f"vf{k}"), h2[rows])[:, 0]

    logp_all = nn.masked_logprobs(logits, mask)
    probs = np.exp(logp_all)
    safe_logp = np.where(mask, logp_all, 0.0)
    logp = logp_all[np.arange(B), act]
    ratio = np.exp(logp - old_logp)
    clipped = np.clip(ratio, 1 - clip, 1 + clip)
    surr = np.minimum(ratio * adv, clipped * adv)
    ent = -(probs * safe_logp).sum(axis=1)
    v_err = values - ret
    policy_loss = -surr.mean()
    value_loss = (v_err ** 2).mean()
    entropy = ent.mean()
    loss = policy_loss + value_coef * value_loss - entropy_coef * entropy
    if not np.isfinite(loss):
        raise TrainingError(
            f"non-finite loss (policy={policy_loss}, value={value_loss}, entropy={entropy}) "
            f"on a minibatch of {B} from seats {sorted(set(np.asarray(seats).tolist()))}"
        )

    # d loss / d logp[a]: the unclipped branch carries the gradient when it is the minimum
    active = ratio * adv <= clipped * adv
    g_logp = np.where(active, -adv * ratio, 0.0) / B
    onehot = np.zeros_like(probs)
    onehot[np.arange(B), act] = 1.0
    dlogits = g_logp[:, None] * (onehot - probs)
    # entropy: dS/dz_j = -p_j (log p_j + S)
    dlogits += (entropy_coef / B) * probs * (safe_logp + ent[:, None])
    dlogits = dlogits.astype(dt, copy=False)
    dvalues = (2.0 * value_coef / B * v_err).astype(dt)

    dh2 = np.empty_like(h2)
    for k in np.unique(head_ids):
        rows = head_ids == k
        gp, dh_p = nn.linear_backward(policy.sub(f"pi{k}"), h2[rows], dlogits[rows])
        gv, dh_v = nn.linear_backward(policy.sub(f"vf{k}"), h2[rows], dvalues[rows, None])
        dh2[rows] = dh_p + dh_v
        for name, g in gp.items():
            grads[f"pi{k}.{name}"] = g
        for name, g in gv.items():
            grads[f"vf{k}.{name}"] = g
    for e, (rows, cache) in caches.items():
        for name, g in nn.encoder_backward(policy.sub(f"enc{e}"), cache, dh2[rows]).items():
            grads[f"enc{e}.{name}"] = g

    stats = {
        "loss": float(loss),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "clip_frac": float(np.mean(np.abs(ratio - 1) > clip)),
        "approx_kl": float(np.mean(old_logp - logp)),
    }
    return float(loss), grads, stats


def minibatch(batch: Batch, rows: np.ndarray, dtype=np.float32) -> dict:
    return {
        "x": batch.obs[rows].astype(dtype),
        "mask": batch.masks[rows],
        "actions": batch.actions[rows],
        "old_logp": batch.logprobs[rows],
        "adv": normalize(batch.advantages[rows]),
        "returns": batch.returns[rows],
        "seats": batch.seats[rows],
    }


def update_groups(policy: PolicySet, batch: Batch) -> List[np.ndarray]:
    """Row sets that are minibatched independently of each other."""
    if policy.sharing is Sharing.INDEPENDENT:
        return [np.flatnonzero(batch.seats == q) for q in range(NUM_PLAYERS)]
    return [np.arange(len(batch))]


def clip_grads(grads: nn.Params, max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


def ppo_update(policy: PolicySet, opt: Adam, batch: Batch, cfg: PpoConfig, rng) -> dict:
    totals: Dict[str, float] = {}
    count = 0
    groups = update_groups(policy, batch)
    for _ in range(cfg.epochs):
        for rows in groups:
            if rows.size == 0:
                continue
            perm = rows[rng.permutation(rows.size)]
            for start in range(0, perm.size, cfg.minibatch):
                mb_rows = perm[start:start + cfg.minibatch]
                mb = minibatch(batch, mb_rows)
                _, grads, stats = ppo_loss(policy, mb, cfg.clip, cfg.entropy_coef, cfg.value_coef)
                stats["grad_norm"] = clip_grads(grads, cfg.max_grad_norm)
                opt.step(policy.params, grads)
                for k, v in stats.items():
                    totals[k] = totals.get(k, 0.0) + v
                count += 1
    return {k: v / max(count, 1) for k, v in totals.items()}


# ----------------------------------------------------------------------------- training
@dataclass
class IterationRecord:
    iteration: int
    env_steps: int
    episodes: int
    mean_reward: np.ndarray
    stats: dict
    evaluation: Optional[object] = None


@dataclass
class TrainResult:
    policy: PolicySet
    history: List[IterationRecord]


def seed_streams(seed: int):
    ss = np.random.SeedSequence(seed)
    init, roll, shuffle, evals = ss.spawn(4)
    return (np.random.default_rng(init), np.random.default_rng(roll), np.random.default_rng(shuffle),
            evals)


class Trainer:
    """Runs collect/update iterations and keeps everything needed to resume."""

    def __init__(self, n: int, sharing, cfg: PpoConfig, seed: int = 0,
                 scheme=RewardScheme.POSITIVE_SUM, turn_limit=None):
        self.n, self.cfg, self.seed = n, cfg, seed
        self.sharing = Sharing.parse(sharing)
        init_rng, self.roll_rng, self.shuffle_rng, self.eval_seq = seed_streams(seed)
        self.policy = PolicySet.init(n, self.sharing, init_rng)
        self.opt = Adam(cfg.lr, eps=cfg.adam_eps)
        self.collector = Collector(n, scheme, turn_limit)
        self.iteration = 0
        self.env_steps = 0

    def eval_seed(self, iteration: int) -> int:
        return int(np.random.SeedSequence(self.eval_seq.entropy, spawn_key=(*self.eval_seq.spawn_key, iteration))
                   .generate_state(1)[0])

    def run_iteration(self) -> IterationRecord:
        cfg = self.cfg
        batch = self.collector.collect(self.policy, cfg.steps, self.roll_rng)
        add_advantages(batch, cfg.gamma, cfg.lam)
        stats = ppo_update(self.policy, self.opt, batch, cfg, self.shuffle_rng)
        self.iteration += 1
        self.env_steps += len(batch)
        ep = batch.episode_returns
        mean_reward = np.mean(ep, axis=0) if ep else np.zeros(NUM_PLAYERS)
        return IterationRecord(self.iteration, self.env_steps, len(ep), mean_reward, stats)


def train(n_iterations: int, sharing, cfg: PpoConfig, seed: int = 0, n: int = 2,
          scheme=RewardScheme.POSITIVE_SUM, turn_limit=None,
          on_iteration: Optional[Callable[[Trainer, IterationRecord], None]] = None) -> TrainResult:
    """Self-play training. ``on_iteration`` runs after every iteration (checkpoint/eval hook)."""
    trainer = Trainer(n, sharing, cfg, seed, scheme, turn_limit)
    history = []
    for _ in range(n_iterations):
        rec = trainer.run_iteration()
        if on_iteration is not None:
            on_iteration(trainer, rec)
        history.append(rec)
        log.info("iter %d steps %d loss %.4f entropy %.3f", rec.iteration, rec.env_steps,
                 rec.stats.get("loss", float("nan")), rec.stats.get("entropy", float("nan")))
    return TrainResult(trainer.policy, history)


def config_dict(cfg: PpoConfig) -> dict:
    return asdict(cfg)
