"""Dense feed-forward network: ReLU hidden layers, one sigmoid output,
binary cross-entropy, mini-batch SGD with momentum."""

import numpy as np

from ..errors import NumericalError
from ._common import check_X, check_Xy, log1pexp, sigmoid
from .spec import ClassifierSpec, TrainedModel

DEFAULT_HIDDEN = (256, 128, 64, 32)


def mlp_param_count(input_width: int, hidden=DEFAULT_HIDDEN) -> int:
    """Weights plus biases of ``input_width -> hidden... -> 1``."""
    widths = [int(input_width), *hidden, 1]
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def mlp_init(n_in, hidden=DEFAULT_HIDDEN, seed=0, zero_init_output=False):
    """He-normal weights, zero biases. Returns ``[W0, b0, W1, b1, ...]``."""
    rng = np.random.default_rng(seed)
    widths = [int(n_in), *hidden, 1]
    params = []
    for a, b in zip(widths[:-1], widths[1:]):
        params.append(rng.standard_normal((a, b)) * np.sqrt(2.0 / a))
        params.append(np.zeros(b))
    if zero_init_output:
        params[-2][:] = 0.0
    return params


def mlp_forward(params, X):
    """Output logits, shape (n,)."""
    h = np.asarray(X, dtype=np.float64)
    n_layers = len(params) // 2
    for k in range(n_layers):
        h = h @ params[2 * k] + params[2 * k + 1]
        if k < n_layers - 1:
            h = np.maximum(h, 0.0)
    return h[:, 0]


def mlp_loss_and_grad(params, X, y):
    """Mean binary cross-entropy and its gradient for every parameter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_layers = len(params) // 2
    acts = [X]
    pre = []
    h = X
    for k in range(n_layers):
        z = h @ params[2 * k] + params[2 * k + 1]
        pre.append(z)
        h = np.maximum(z, 0.0) if k < n_layers - 1 else z
        acts.append(h)
    logit = acts[-1][:, 0]
    n = X.shape[0]
    loss = float(np.mean(log1pexp(logit) - y * logit))
    delta = ((sigmoid(logit) - y) / n)[:, None]
    grads = [None] * len(params)
    for k in range(n_layers - 1, -1, -1):
        grads[2 * k] = acts[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ params[2 * k].T) * (pre[k - 1] > 0)
    return loss, grads


def fit_mlp(spec: ClassifierSpec, X, y, seed: int = 0) -> TrainedModel:
    """Raises ``NumericalError`` as soon as a batch loss is not finite."""
    X, y = check_Xy(X, y)
    p = spec.params
    params = mlp_init(X.shape[1], p["hidden_layers"], seed, p["zero_init_output"])
    velocity = [np.zeros_like(a) for a in params]
    rng = np.random.default_rng((int(seed), 1))
    lr, mom, bs = p["learning_rate"], p["momentum"], p["batch_size"]
    history = []
    yf = y.astype(np.float64)
    for epoch in range(p["epochs"]):
        order = rng.permutation(X.shape[0])
        total = 0.0
        for start in range(0, X.shape[0], bs):
            batch = order[start:start + bs]
            # divergence is reported below, not through numpy warnings
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = mlp_loss_and_grad(params, X[batch], yf[batch])
            if not np.isfinite(loss):
                raise NumericalError(
                    f"MLP loss became {loss} at epoch {epoch + 1}, batch {start // bs + 1} "
                    f"(learning_rate={lr}, momentum={mom}); try a smaller learning rate "
                    f"or standardized inputs")
            total += loss * batch.shape[0]
            for a, v, g in zip(params, velocity, grads):
                v *= mom
                v -= lr * g
                a += v
        history.append(total / X.shape[0])
    state = {f"p{i}": a for i, a in enumerate(params)}
    state["loss_history"] = np.array(history)
    return TrainedModel(spec, state, X.shape[1], seed)


def _params(model):
    n = sum(1 for k in model.state if k.startswith("p"))
    return [model.state[f"p{i}"] for i in range(n)]


def predict_mlp_score(model: TrainedModel, X):
    X = check_X(X, model.n_features)
    return sigmoid(mlp_forward(_params(model), X))


def predict_mlp(model: TrainedModel, X):
    """Late when the sigmoid output exceeds 0.5."""
    X = check_X(X, model.n_features)
    return (mlp_forward(_params(model), X) > 0.0).astype(np.int64)
