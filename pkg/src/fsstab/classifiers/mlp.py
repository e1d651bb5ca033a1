"""Three-layer perceptron: sigmoid hidden layer, sigmoid output, cross-entropy loss.

Two full-batch optimizers are available: scaled conjugate gradient (Moller,
1993) and gradient descent with momentum. Both count one parameter update as
one training cycle and stop early once the validation loss has failed to
improve ``max_fail`` times in a row, returning the best-validation weights.
"""
import numpy as np
from scipy.special import expit


def n_params(p, hidden):
    return hidden * p + hidden + hidden + 1


def unpack(theta, p, hidden):
    W1 = theta[: hidden * p].reshape(hidden, p)
    b1 = theta[hidden * p: hidden * p + hidden]
    w2 = theta[hidden * p + hidden: hidden * p + 2 * hidden]
    b2 = theta[-1]
    return W1, b1, w2, b2


def forward(theta, X, hidden):
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    H = expit(X @ W1.T + b1)
    return H, H @ w2 + b2


def loss(theta, X, y, hidden):
    _, out = forward(theta, X, hidden)
    return float(np.mean(np.logaddexp(0.0, out) - y * out))


def loss_and_grad(theta, X, y, hidden):
    """Mean cross-entropy and its gradient by backpropagation."""
    W1, b1, w2, b2 = unpack(theta, X.shape[1], hidden)
    H = expit(X @ W1.T + b1)
    out = H @ w2 + b2
    value = float(np.mean(np.logaddexp(0.0, out) - y * out))
    d_out = (expit(out) - y) / y.size
    d_hid = np.outer(d_out, w2) * H * (1.0 - H)
    grad = np.concatenate([(d_hid.T @ X).ravel(), d_hid.sum(0), H.T @ d_out, [d_out.sum()]])
    return value, grad


def init_params(p, hidden, rng):
    a1 = 1.0 / np.sqrt(max(p, 1))
    theta = np.empty(n_params(p, hidden))
    theta[: hidden * p + hidden] = rng.uniform(-a1, a1, hidden * p + hidden) * 2.0
    theta[hidden * p + hidden:] = rng.uniform(-1.0, 1.0, hidden + 1)
    return theta


class _EarlyStop:
    def __init__(self, theta, val_loss, max_fail):
        self.best = theta.copy()
        self.best_val = val_loss
        self.fails = 0
        self.max_fail = max_fail

    def update(self, theta, val_loss):
        """Record a new iterate; return True when training should stop."""
        if val_loss < self.best_val:
            self.best, self.best_val, self.fails = theta.copy(), val_loss, 0
            return False
        self.fails += 1
        return self.fails >= self.max_fail


def train_scg(f, theta, epochs, on_epoch):
    """Scaled conjugate gradient. ``f`` returns ``(loss, grad)``.

    ``on_epoch(theta)`` is called after each accepted step and returns True to stop.
    Returns the number of epochs run.
    """
    sigma0, lam, lam_bar = 5e-5, 5e-7, 0.0
    N = theta.size
    E, g = f(theta)
    r = -g
    p = r.copy()
    success = True
    delta = 0.0
    k = 0
    epoch = 0
    # rejected steps do not count as epochs; bound them so a NaN loss cannot spin forever
    attempts = 0
    while epoch < epochs and attempts < 10 * epochs + 50:
        attempts += 1
        pp = p @ p
        if pp == 0:
            break
        if success:
            sigma = sigma0 / np.sqrt(pp)
            _, g_s = f(theta + sigma * p)
            s = (g_s + r) / sigma
            delta = p @ s
        delta += (lam - lam_bar) * pp
        if delta <= 0:
            lam_bar = 2.0 * (lam - delta / pp)
            delta = -delta + lam * pp
            lam = lam_bar
        mu = p @ r
        alpha = mu / delta
        E_new, g_new = f(theta + alpha * p)
        Delta = 2.0 * delta * (E - E_new) / (mu * mu) if mu != 0 else 0.0
        if Delta >= 0:
            theta = theta + alpha * p
            E = E_new
            r_new = -g_new
            lam_bar = 0.0
            success = True
            k += 1
            if k % N == 0:
                p = r_new.copy()
            else:
                beta = (r_new @ r_new - r_new @ r) / mu
                p = r_new + beta * p
            r = r_new
            if Delta >= 0.75:
                lam = max(lam / 4.0, 1e-15)
            epoch += 1
            if on_epoch(theta):
                break
        else:
            lam_bar = lam
            success = False
        if Delta < 0.25:
            lam = min(lam + delta * (1.0 - Delta) / pp, 1e100)
        if not np.any(r):
            break
    return theta, epoch


def train_momentum(f, theta, epochs, on_epoch, learning_rate=0.5, momentum=0.9):
    v = np.zeros_like(theta)
    epoch = 0
    for epoch in range(1, epochs + 1):
        _, g = f(theta)
        v = momentum * v - learning_rate * g
        theta = theta + v
        if on_epoch(theta):
            break
    return theta, epoch


class Perceptron:
    """Fitted network; ``decision`` returns the output-unit probability."""

    threshold = 0.5

    def __init__(self, Z_train, y_train, Z_val, y_val, hidden=4, epochs=100, optimizer="scg",
                 learning_rate=0.5, momentum=0.9, max_fail=6, rng=None):
        rng = np.random.default_rng(rng)
        Z_train = np.asarray(Z_train, dtype=float)
        y_train = np.asarray(y_train, dtype=float)
        Z_val = np.asarray(Z_val, dtype=float)
        y_val = np.asarray(y_val, dtype=float)
        self.hidden = hidden
        theta = init_params(Z_train.shape[1], hidden, rng)
        use_val = y_val.size > 0
        stop = _EarlyStop(theta, loss(theta, Z_val, y_val, hidden) if use_val else np.inf, max_fail)
        self.train_losses = [loss(theta, Z_train, y_train, hidden)]

        def on_epoch(th):
            self.train_losses.append(loss(th, Z_train, y_train, hidden))
            if not use_val:
                stop.best = th.copy()
                return False
            return stop.update(th, loss(th, Z_val, y_val, hidden))

        f = lambda th: loss_and_grad(th, Z_train, y_train, hidden)
        if optimizer == "scg":
            _, self.epochs_run = train_scg(f, theta, epochs, on_epoch)
        else:
            _, self.epochs_run = train_momentum(f, theta, epochs, on_epoch, learning_rate, momentum)
        self.theta = stop.best
        self.converged = True

    def decision(self, Q):
        _, out = forward(self.theta, np.asarray(Q, dtype=float), self.hidden)
        return expit(out)
