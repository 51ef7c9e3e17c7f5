"""From-scratch MLP critic for variational mutual-information lower bounds.

The critic ``T(z, y)`` is a fully-connected network with ReLU hidden layers
and a scalar linear output, trained with Adam to maximize either of two
lower bounds on I(Z;Y):

* ``dv``:   mean(T_joint) - log mean(exp(T_marginal))
* ``nwj``:  mean(T_joint) - mean(exp(T_marginal - 1))

For any fixed critic the first bound dominates the second (log u <= u/e
with equality at u = e), which the tests check as an exact inequality.
Inputs are standardized features concatenated with one-hot labels; marginal
pairs come from an in-batch label shuffle during training, while final bound
evaluation uses the exact empirical marginal (every sample paired with every
class, weighted by the empirical class frequencies) so that reported values
are deterministic given the critic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import InterpEffError, RngStream, stratified_split_indices

__all__ = [
    "CriticConfig",
    "TrainedCritic",
    "train_critic",
    "evaluate_bound",
    "bound_value",
    "objective_and_grad",
    "gradient_check",
    "init_params",
]

_OBJECTIVES = ("dv", "nwj")
_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class CriticConfig:
    """Architecture and optimization settings for the critic.

    ``patience`` counts validation evaluations (one every ``eval_every``
    steps) without improvement before training stops early.
    """

    hidden_widths: tuple[int, ...] = (256, 256)
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_steps: int = 5000
    patience: int = 10
    eval_every: int = 100
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must all be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.max_steps < 1 or self.eval_every < 1 or self.patience < 1:
            raise ValueError("max_steps, eval_every and patience must be >= 1")
        if not 0.0 < self.val_fraction < 0.5:
            raise ValueError("val_fraction must lie in (0, 0.5)")


# -- network ------------------------------------------------------------------


def init_params(
    in_dim: int, hidden_widths: tuple[int, ...], rng: RngStream
) -> list[tuple[np.ndarray, np.ndarray]]:
    """He-initialized (weights, bias) pairs for ReLU hidden layers + linear out."""
    gen = rng.generator()
    dims = [in_dim, *hidden_widths, 1]
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = gen.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        params.append((w, np.zeros(fan_out)))
    return params


def _forward(
    params: list[tuple[np.ndarray, np.ndarray]], x: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Scalar critic outputs plus the post-activation cache for backprop."""
    acts = [x]
    out = x
    for i, (w, b) in enumerate(params):
        out = out @ w + b
        if i < len(params) - 1:
            out = np.maximum(out, 0.0)
        acts.append(out)
    return out[:, 0], acts


def critic_forward(
    params: list[tuple[np.ndarray, np.ndarray]], x: np.ndarray
) -> np.ndarray:
    return _forward(params, x)[0]


def _backward(
    params: list[tuple[np.ndarray, np.ndarray]],
    acts: list[np.ndarray],
    dout: np.ndarray,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradients of sum(dout * output) with respect to every parameter."""
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params)  # type: ignore[list-item]
    delta = dout[:, None]
    for i in range(len(params) - 1, -1, -1):
        w, _ = params[i]
        if i < len(params) - 1:
            delta = delta * (acts[i + 1] > 0.0)
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ w.T
    return grads


# -- objectives ---------------------------------------------------------------


def bound_value(t_joint: np.ndarray, t_marg: np.ndarray, objective: str) -> float:
    """Value of the chosen lower bound from critic outputs on paired samples."""
    if objective == "dv":
        return float(t_joint.mean() - (logsumexp(t_marg) - np.log(t_marg.size)))
    if objective == "nwj":
        return float(t_joint.mean() - np.exp(t_marg - 1.0).mean())
    raise ValueError(f"objective must be one of {_OBJECTIVES}, got {objective!r}")


def objective_and_grad(
    params: list[tuple[np.ndarray, np.ndarray]],
    joint_inputs: np.ndarray,
    marg_inputs: np.ndarray,
    objective: str,
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Bound value and its exact parameter gradient on one batch."""
    t_j, acts_j = _forward(params, joint_inputs)
    t_m, acts_m = _forward(params, marg_inputs)
    value = bound_value(t_j, t_m, objective)
    d_joint = np.full(t_j.size, 1.0 / t_j.size)
    if objective == "dv":
        w = np.exp(t_m - logsumexp(t_m))
        d_marg = -w
    else:
        d_marg = -np.exp(t_m - 1.0) / t_m.size
    grads_j = _backward(params, acts_j, d_joint)
    grads_m = _backward(params, acts_m, d_marg)
    grads = [(gj[0] + gm[0], gj[1] + gm[1]) for gj, gm in zip(grads_j, grads_m)]
    return value, grads


def _min_kink_margin(
    params: list[tuple[np.ndarray, np.ndarray]], x: np.ndarray
) -> float:
    """Smallest |preactivation| over every hidden ReLU unit and input row."""
    margin = np.inf
    out = x
    for i, (w, b) in enumerate(params[:-1]):
        out = out @ w + b
        margin = min(margin, float(np.abs(out).min()))
        out = np.maximum(out, 0.0)
    return margin


def gradient_check(
    objective: str,
    n_coords: int = 10,
    rng: RngStream | None = None,
    step: float = 1e-5,
) -> float:
    """Max relative error of the analytic gradient vs central differences.

    Builds a small random critic and batch, perturbs ``n_coords`` randomly
    chosen parameters, and compares.  Two care points make the comparison
    meaningful for a piecewise-linear network:

    * the batch is redrawn until every ReLU preactivation sits at least
      100 * ``step`` from its kink, so no unit flips state inside the
      central-difference stencil (rows whose first hidden layer is entirely
      dead would otherwise land *exactly* on the kink with zero-initialized
      biases);
    * the relative-error denominator is floored at 1e-6, well above the
      cancellation noise of the difference quotient (~1e-11 here) --
      coordinates whose true derivative is exactly zero, such as the output
      bias under the shift-invariant ``dv`` objective, would otherwise
      compare that noise against a floor it can dominate.

    Healthy implementations sit far below 1e-4.
    """
    rng = rng or RngStream(2024)
    gen = rng.generator()
    params = init_params(6, (8, 8), rng.child("params"))
    for _ in range(100):
        joint = gen.standard_normal((16, 6))
        marg = gen.standard_normal((16, 6))
        margin = min(_min_kink_margin(params, joint), _min_kink_margin(params, marg))
        if margin > 100.0 * step:
            break
    else:
        raise InterpEffError("could not draw a batch clear of every ReLU kink")
    _, grads = objective_and_grad(params, joint, marg, objective)
    worst = 0.0
    for _ in range(n_coords):
        layer = int(gen.integers(len(params)))
        part = int(gen.integers(2))
        arr = params[layer][part]
        idx = tuple(int(gen.integers(s)) for s in arr.shape)
        orig = arr[idx]
        arr[idx] = orig + step
        up, _ = objective_and_grad(params, joint, marg, objective)
        arr[idx] = orig - step
        down, _ = objective_and_grad(params, joint, marg, objective)
        arr[idx] = orig
        numeric = (up - down) / (2.0 * step)
        analytic = grads[layer][part][idx]
        rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
        worst = max(worst, rel)
    return worst


# -- training -----------------------------------------------------------------


@dataclass
class TrainedCritic:
    """A trained critic plus the preprocessing it was fitted with."""

    params: list[tuple[np.ndarray, np.ndarray]]
    feature_mean: np.ndarray
    feature_inv_scale: np.ndarray
    classes: np.ndarray
    objective: str
    config: CriticConfig
    best_val: float
    steps_run: int
    val_history: list[float] = field(default_factory=list)

    def inputs(self, z: np.ndarray, onehot: np.ndarray) -> np.ndarray:
        z = (np.asarray(z, dtype=np.float64) - self.feature_mean) * self.feature_inv_scale
        return np.hstack([z, onehot])

    def scores_per_class(self, z: np.ndarray) -> np.ndarray:
        """(n, K) matrix of critic values pairing every row with every class."""
        n = z.shape[0]
        k = self.classes.size
        out = np.empty((n, k))
        for j in range(k):
            onehot = np.zeros((n, k))
            onehot[:, j] = 1.0
            out[:, j] = critic_forward(self.params, self.inputs(z, onehot))
        return out


def _onehot(y: np.ndarray, classes: np.ndarray) -> np.ndarray:
    index = np.searchsorted(classes, y)
    out = np.zeros((y.size, classes.size))
    out[np.arange(y.size), index] = 1.0
    return out


def train_critic(
    z: np.ndarray,
    y: np.ndarray,
    objective: str,
    cfg: CriticConfig | None = None,
    rng: RngStream | None = None,
) -> TrainedCritic:
    """Fit the critic by Adam ascent on the chosen bound with early stopping.

    A stratified validation split (``cfg.val_fraction``) is held out; the
    parameters achieving the best deterministic validation bound are
    returned.  Raises on fewer than 20 samples, a single class, or a
    non-finite training objective.
    """
    cfg = cfg or CriticConfig()
    if objective not in _OBJECTIVES:
        raise ValueError(f"objective must be one of {_OBJECTIVES}, got {objective!r}")
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    y = np.asarray(y).ravel()
    if z.shape[0] != y.size:
        raise ValueError("z and y must have equal length")
    if z.shape[0] < 20:
        raise ValueError(f"need at least 20 samples, got {z.shape[0]}")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("labels are constant: mutual information is identically 0")
    rng = rng or RngStream(cfg.seed)

    train_idx, val_idx = stratified_split_indices(
        y, 1.0 - cfg.val_fraction, rng.child("val-split")
    )
    mean = z[train_idx].mean(axis=0)
    std = z[train_idx].std(axis=0, ddof=0)
    inv_scale = np.where(std > 0.0, 1.0 / np.where(std > 0.0, std, 1.0), 0.0)

    critic = TrainedCritic(
        params=init_params(z.shape[1] + classes.size, cfg.hidden_widths, rng.child("init")),
        feature_mean=mean,
        feature_inv_scale=inv_scale,
        classes=classes,
        objective=objective,
        config=cfg,
        best_val=-np.inf,
        steps_run=0,
    )
    z_train, y_train = z[train_idx], y[train_idx]
    z_val, y_val = z[val_idx], y[val_idx]
    onehot_train = _onehot(y_train, classes)
    n_train = z_train.shape[0]
    batch = min(cfg.batch_size, n_train)

    params = critic.params
    adam_m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    adam_v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    gen = rng.child("batches").generator()
    best_params = [(w.copy(), b.copy()) for w, b in params]
    stale = 0

    for step in range(1, cfg.max_steps + 1):
        idx = gen.choice(n_train, size=batch, replace=False)
        z_b = critic.inputs(z_train[idx], onehot_train[idx])
        shuffled = onehot_train[idx][gen.permutation(batch)]
        z_m = critic.inputs(z_train[idx], shuffled)
        value, grads = objective_and_grad(params, z_b, z_m, objective)
        if not np.isfinite(value):
            raise InterpEffError(
                f"non-finite training objective ({value}) at step {step}"
            )
        bc1 = 1.0 - _ADAM_BETA1**step
        bc2 = 1.0 - _ADAM_BETA2**step
        for i, (g_w, g_b) in enumerate(grads):
            for part, g in enumerate((g_w, g_b)):
                m = adam_m[i][part]
                v = adam_v[i][part]
                m *= _ADAM_BETA1
                m += (1.0 - _ADAM_BETA1) * g
                v *= _ADAM_BETA2
                v += (1.0 - _ADAM_BETA2) * g * g
                target = params[i][part]
                target += cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + _ADAM_EPS)
        critic.steps_run = step
        if step % cfg.eval_every == 0 or step == cfg.max_steps:
            val = evaluate_bound(critic, z_val, y_val, objective)
            critic.val_history.append(val)
            if val > critic.best_val:
                critic.best_val = val
                best_params = [(w.copy(), b.copy()) for w, b in params]
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    critic.params = best_params
    return critic


def evaluate_bound(
    critic: TrainedCritic, z: np.ndarray, y: np.ndarray, objective: str | None = None
) -> float:
    """Deterministic bound value with the exact empirical marginal.

    The joint term averages critic values on the observed pairs; the
    marginal term pairs every feature row with every class, weighted by the
    empirical class frequencies of ``y``.
    """
    objective = objective or critic.objective
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    y = np.asarray(y).ravel()
    if np.any(~np.isin(y, critic.classes)):
        raise ValueError("evaluation labels contain classes unseen during training")
    t_joint = critic_forward(critic.params, critic.inputs(z, _onehot(y, critic.classes)))
    t_all = critic.scores_per_class(z)
    counts = np.array([(y == c).sum() for c in critic.classes], dtype=np.float64)
    log_w = np.log(np.maximum(counts / y.size, 1e-300)) - np.log(z.shape[0])
    if objective == "dv":
        marg = logsumexp(t_all + log_w[None, :])
        return float(t_joint.mean() - marg)
    if objective == "nwj":
        weights = np.exp(log_w)[None, :]
        return float(t_joint.mean() - np.sum(weights * np.exp(t_all - 1.0)))
    raise ValueError(f"objective must be one of {_OBJECTIVES}, got {objective!r}")
