"""Value-network learning core.

A multi-head fully-connected network approximates V(s); a deterministic
MDP turns it into Q(s, a) = R(s') + V(s') over successor states. Training
uses replay, double-Q targets (online selection, target evaluation),
bootstrapped heads on masked sample subsets, Huber loss, hand-rolled
reverse-mode gradients, and Adam.

The environment is anything exposing ``initial()``, ``candidates(state)``
returning a :class:`CandidateSet`, plus ``max_steps`` and ``feature_dim``.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np


class QLearnError(Exception):
    pass


class DimensionMismatch(QLearnError):
    pass


class ArchitectureMismatch(QLearnError):
    pass


class HeadOutOfRange(QLearnError):
    pass


class EmptyActionSet(QLearnError):
    pass


class InsufficientData(QLearnError):
    pass


class VersionMismatch(QLearnError):
    pass


class CorruptCheckpoint(QLearnError):
    pass


DEFAULT_HIDDEN = (1024, 512, 128, 32)
DEFAULT_HEADS = 10


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


class ValueNetwork:
    """Fully-connected rectifier network with H linear output heads."""

    def __init__(self, weights, biases, dtype=np.float64):
        self.weights = [np.asarray(w, dtype=dtype) for w in weights]
        self.biases = [np.asarray(b, dtype=dtype) for b in biases]
        self.dtype = np.dtype(dtype)
        dims = [self.weights[0].shape[0]]
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != dims[-1] or w.shape[1] != b.shape[0]:
                raise ArchitectureMismatch(
                    f"inconsistent layer shapes {w.shape} / {b.shape}"
                )
            dims.append(w.shape[1])
        self.layer_dims = tuple(dims)

    @classmethod
    def create(cls, layer_dims, rng, dtype=np.float64) -> "ValueNetwork":
        """He-normal hidden layers, scaled-down linear output layer."""
        dims = tuple(int(d) for d in layer_dims)
        if len(dims) < 2:
            raise ValueError("need at least input and output dims")
        weights, biases = [], []
        for i in range(len(dims) - 1):
            fan_in = dims[i]
            scale = np.sqrt(2.0 / fan_in)
            if i == len(dims) - 2:
                scale = np.sqrt(1.0 / fan_in)
            weights.append(
                rng.standard_normal((dims[i], dims[i + 1])) * scale
            )
            biases.append(np.zeros(dims[i + 1]))
        return cls(weights, biases, dtype=dtype)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def num_heads(self) -> int:
        return self.layer_dims[-1]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "ValueNetwork":
        return ValueNetwork(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            dtype=self.dtype,
        )

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Head values; (H,) for a single feature vector, (B, H) batched."""
        x = np.asarray(x, dtype=self.dtype)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"input dim {a.shape[1]} != network dim {self.input_dim}"
            )
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if i < last:
                np.maximum(a, 0, out=a)
        return a[0] if single else a

    def forward_cached(self, x: np.ndarray):
        """Forward pass retaining activations for :meth:`backward`."""
        a = np.asarray(x, dtype=self.dtype)
        if a.ndim != 2 or a.shape[1] != self.input_dim:
            raise DimensionMismatch(f"expected (B, {self.input_dim}) input")
        acts = [a]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            if i < last:
                np.maximum(z, 0, out=z)
            acts.append(z)
        return acts[-1], acts

    def backward(self, acts, dout):
        """Parameter gradients for d(loss)/d(output) = dout.

        Returns gradients in parameters() order. Uses the rectifier
        subgradient 0 at exactly 0.
        """
        grads = [None] * (2 * len(self.weights))
        delta = np.asarray(dout, dtype=self.dtype)
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i].T
                delta *= acts[i] > 0
        return grads


def forward(net: ValueNetwork, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def sync_target(online: ValueNetwork, target: ValueNetwork):
    """Copy online parameters into the target network in place."""
    if online.layer_dims != target.layer_dims:
        raise ArchitectureMismatch(
            f"layer dims differ: {online.layer_dims} vs {target.layer_dims}"
        )
    for dst, src in zip(target.parameters(), online.parameters()):
        np.copyto(dst, src.astype(target.dtype, copy=False))


# ---------------------------------------------------------------------------
# Optimizer and loss
# ---------------------------------------------------------------------------


class AdamState:
    """Adam moments for one parameter list."""

    def __init__(self, net: ValueNetwork, lr=1e-4, beta1=0.9, beta2=0.999,
                 eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]

    def step(self, net: ValueNetwork, grads):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(net.parameters(), grads, self.m, self.v):
            g = g.astype(p.dtype, copy=False)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def clip_gradients(grads, max_norm: float) -> float:
    """Scale gradients in place to a global norm cap; returns the norm."""
    total = 0.0
    for g in grads:
        total += float(np.sum(np.square(g, dtype=np.float64)))
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


def huber(x: float) -> float:
    """x^2 / 2 inside the unit interval, |x| - 1/2 outside."""
    ax = abs(x)
    if ax < 1.0:
        return 0.5 * x * x
    return ax - 0.5


def huber_grad(x):
    return np.clip(x, -1.0, 1.0)


# ---------------------------------------------------------------------------
# Replay, exploration, transitions
# ---------------------------------------------------------------------------


@dataclass
class Transition:
    """One step: everything needed to regress Q(s, a) = r + V(s').

    ``features`` featurize the chosen successor state (the network input
    for this Q); ``successor`` is the opaque successor handle used to
    re-enumerate its own action set for the bootstrap target; ``reward``
    is the discounted step reward; ``mask`` holds the per-head bootstrap
    inclusion bits.
    """

    features: np.ndarray
    successor: object
    reward: float
    terminal: bool
    mask: np.ndarray

    def __post_init__(self):
        if not self.mask.any():
            raise ValueError("bootstrap mask must have at least one set bit")


class ReplayBuffer:
    """Fixed-capacity ring with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Transition | None] = [None] * capacity
        self._pos = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, item: Transition):
        self._items[self._pos] = item
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        if self._size < batch_size:
            raise InsufficientData(
                f"buffer holds {self._size} < batch size {batch_size}"
            )
        idx = rng.integers(0, self._size, size=batch_size)
        return [self._items[i] for i in idx]


class EpsilonSchedule:
    """Piecewise-linear, non-increasing exploration schedule."""

    def __init__(self, breakpoints=((0, 1.0), (1000, 0.01))):
        pts = [(int(e), float(v)) for e, v in breakpoints]
        if not pts:
            raise ValueError("need at least one breakpoint")
        for (e0, v0), (e1, v1) in zip(pts, pts[1:]):
            if e1 <= e0:
                raise ValueError("breakpoint episodes must strictly increase")
            if v1 > v0:
                raise ValueError("epsilon must be non-increasing")
        for _, v in pts:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"epsilon {v} outside [0, 1]")
        self.breakpoints = pts

    def value(self, episode: int) -> float:
        pts = self.breakpoints
        if episode <= pts[0][0]:
            return pts[0][1]
        for (e0, v0), (e1, v1) in zip(pts, pts[1:]):
            if episode == e1:
                return v1
            if episode < e1:
                frac = (episode - e0) / (e1 - e0)
                return v0 + (v1 - v0) * frac
        return pts[-1][1]


def select_action(values, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform with probability epsilon, else argmax (ties: lowest index)."""
    values = np.asarray(values)
    if values.size == 0:
        raise EmptyActionSet("no actions to select from")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(values.size))
    return int(np.argmax(values))


def bootstrap_mask(rng: np.random.Generator, heads: int) -> np.ndarray:
    """Bernoulli(0.5) per head, resampled until at least one bit is set."""
    while True:
        mask = rng.integers(0, 2, size=heads).astype(np.uint8)
        if mask.any():
            return mask


# ---------------------------------------------------------------------------
# Candidate sets and action values
# ---------------------------------------------------------------------------


@dataclass
class CandidateSet:
    """The action set of one state, featurized for the network.

    ``rewards`` holds the discounted step reward of each successor,
    ``features`` the per-successor network inputs, ``terminal`` whether
    the successors sit at the horizon, ``handles`` the successor states.
    """

    rewards: np.ndarray
    features: np.ndarray
    terminal: bool
    handles: tuple
    actions: tuple | None = None

    def __len__(self):
        return len(self.handles)


def action_values(net: ValueNetwork, head: int, cands: CandidateSet):
    """Q = r(s') + V_head(s'), or just r(s') at the horizon."""
    if not 0 <= head < net.num_heads:
        raise HeadOutOfRange(f"head {head} outside 0..{net.num_heads - 1}")
    if cands.terminal:
        return cands.rewards.astype(np.float64, copy=True)
    v = net.forward(cands.features)
    return cands.rewards.astype(np.float64) + v[:, head].astype(np.float64)


def head_mean_values(net: ValueNetwork, cands: CandidateSet):
    """Q with V averaged over heads (deterministic evaluation policy)."""
    if cands.terminal:
        return cands.rewards.astype(np.float64, copy=True)
    v = net.forward(cands.features)
    return cands.rewards.astype(np.float64) + v.mean(axis=1, dtype=np.float64)


def td_target(transition: Transition, online: ValueNetwork,
              target: ValueNetwork, env) -> float:
    """Double-Q bootstrap target.

    Terminal transitions return the stored reward. Otherwise the
    successor's own action set is re-enumerated; the online network
    (head-averaged) selects the argmax action and the target network
    (head-averaged) evaluates it. No extra discount factor: rewards are
    stored already discounted.
    """
    if transition.terminal:
        return transition.reward
    cands = env.candidates(transition.successor)
    selection = head_mean_values(online, cands)
    best = int(np.argmax(selection))
    if cands.terminal:
        boot = float(cands.rewards[best])
    else:
        v = target.forward(cands.features[best])
        boot = float(cands.rewards[best]) + float(v.mean(dtype=np.float64))
    return transition.reward + boot


def train_step(env, online: ValueNetwork, target: ValueNetwork,
               buffer: ReplayBuffer, batch_size: int, adam: AdamState,
               rng: np.random.Generator, clip_norm: float = 10.0) -> float:
    """One uniform batch, masked multi-head Huber regression, Adam update.

    Per head i, sample j enters the loss iff its bootstrap mask bit i is
    set. Returns the masked mean Huber loss.
    """
    batch = buffer.sample(rng, batch_size)
    b = len(batch)
    heads = online.num_heads
    dtype = online.dtype

    ys = np.empty(b, dtype=np.float64)
    for j, tr in enumerate(batch):
        ys[j] = td_target(tr, online, target, env)

    feats = np.stack([tr.features for tr in batch]).astype(dtype)
    rewards = np.array([tr.reward for tr in batch], dtype=np.float64)
    nonterminal = np.array(
        [0.0 if tr.terminal else 1.0 for tr in batch], dtype=np.float64
    )
    masks = np.stack([tr.mask for tr in batch]).astype(np.float64)

    out, acts = online.forward_cached(feats)
    q = rewards[:, None] + nonterminal[:, None] * out.astype(np.float64)
    err = ys[:, None] - q
    included = masks.sum()
    if included == 0:
        return 0.0
    losses = np.where(
        np.abs(err) < 1.0, 0.5 * err * err, np.abs(err) - 0.5
    )
    loss = float((losses * masks).sum() / included)

    dout = -(huber_grad(err) * masks * nonterminal[:, None]) / included
    grads = online.backward(acts, dout.astype(dtype))
    clip_gradients(grads, clip_norm)
    adam.step(online, grads)
    return loss


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------


@dataclass
class EpisodeRecord:
    episode: int
    head: int
    epsilon: float
    states: list
    rewards: list[float]

    @property
    def terminal_state(self):
        return self.states[-1]

    @property
    def discounted_return(self) -> float:
        return float(sum(self.rewards))


def run_episode(env, net: ValueNetwork, schedule: EpsilonSchedule,
                episode: int, rng: np.random.Generator,
                buffer: ReplayBuffer | None = None,
                epsilon: float | None = None,
                head: int | None = None) -> EpisodeRecord:
    """Roll one full-horizon episode with a uniformly drawn head.

    Pushes one transition per step (with a fresh bootstrap mask) when a
    buffer is given. ``epsilon``/``head`` override the schedule and the
    uniform head draw for evaluation-style rollouts.
    """
    if head is None:
        head = int(rng.integers(net.num_heads))
    eps = schedule.value(episode) if epsilon is None else epsilon
    state = env.initial()
    states: list = []
    rewards: list[float] = []
    for _t in range(env.max_steps):
        cands = env.candidates(state)
        values = action_values(net, head, cands)
        idx = select_action(values, eps, rng)
        reward = float(cands.rewards[idx])
        if buffer is not None:
            buffer.add(
                Transition(
                    features=np.array(cands.features[idx], copy=True),
                    successor=cands.handles[idx],
                    reward=reward,
                    terminal=cands.terminal,
                    mask=bootstrap_mask(rng, net.num_heads),
                )
            )
        state = cands.handles[idx]
        states.append(state)
        rewards.append(reward)
    return EpisodeRecord(episode, head, eps, states, rewards)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

_MAGIC = b"MFQN"
_FORMAT_VERSION = 1


def save_checkpoint(net: ValueNetwork, adam: AdamState | None, path):
    """Versioned binary checkpoint; see README for the byte layout."""
    import struct

    dims = net.layer_dims
    params = net.parameters()
    param_count = sum(p.size for p in params)
    has_moments = adam is not None
    header = struct.pack(
        "<IIB", _FORMAT_VERSION, len(dims), 1 if has_moments else 0
    )
    header += struct.pack(f"<{len(dims)}I", *dims)
    header += struct.pack(
        "<QQB",
        param_count,
        adam.t if has_moments else 0,
        0 if net.dtype == np.float64 else 1,
    )
    chunks = [header]
    for p in params:
        chunks.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    if has_moments:
        for arrs in (adam.m, adam.v):
            for a in arrs:
                chunks.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
        chunks.append(
            struct.pack(
                "<dddd", adam.lr, adam.beta1, adam.beta2, adam.eps
            )
        )
    payload = b"".join(chunks)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<I", crc) + payload)


def load_checkpoint(path):
    """Returns (net, adam_or_None). Verifies magic, version, checksum."""
    import struct

    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IOError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < 8 or blob[:4] != _MAGIC:
        raise CorruptCheckpoint("bad magic bytes")
    (crc,) = struct.unpack("<I", blob[4:8])
    payload = blob[8:]
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise CorruptCheckpoint("checksum mismatch (truncated or damaged)")
    try:
        off = 0
        version, ndims, has_moments = struct.unpack_from("<IIB", payload, off)
        off += 9
        if version != _FORMAT_VERSION:
            raise VersionMismatch(
                f"format version {version}, expected {_FORMAT_VERSION}"
            )
        dims = struct.unpack_from(f"<{ndims}I", payload, off)
        off += 4 * ndims
        param_count, adam_t, dtype_flag = struct.unpack_from(
            "<QQB", payload, off
        )
        off += 17
        dtype = np.float64 if dtype_flag == 0 else np.float32

        def take(shape):
            nonlocal off
            size = int(np.prod(shape))
            arr = np.frombuffer(payload, dtype="<f8", count=size, offset=off)
            off += 8 * size
            return arr.reshape(shape).astype(dtype)

        weights, biases = [], []
        for i in range(ndims - 1):
            weights.append(take((dims[i], dims[i + 1])))
            biases.append(take((dims[i + 1],)))
        total = sum(w.size for w in weights) + sum(b.size for b in biases)
        if total != param_count:
            raise CorruptCheckpoint("parameter count disagrees with layer dims")
        net = ValueNetwork(weights, biases, dtype=dtype)
        adam = None
        if has_moments:
            m = [take(p.shape) for p in net.parameters()]
            v = [take(p.shape) for p in net.parameters()]
            lr, beta1, beta2, eps = struct.unpack_from("<dddd", payload, off)
            adam = AdamState(net, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
            adam.t = int(adam_t)
            adam.m = m
            adam.v = v
        return net, adam
    except (struct.error, ValueError) as exc:
        raise CorruptCheckpoint(f"malformed checkpoint payload: {exc}") from exc
