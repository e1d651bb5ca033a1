"""Binomial logistic regression fitted by damped Newton iterations."""
import numpy as np
from scipy.special import expit


def loss_and_grad(theta, X, y, l2=0.0):
    """Mean negative log-likelihood (+ ridge on weights) and its gradient.

    ``theta`` holds the p weights followed by the intercept.
    """
    w, b = theta[:-1], theta[-1]
    eta = X @ w + b
    loss = np.mean(np.logaddexp(0.0, eta) - y * eta) + 0.5 * l2 * (w @ w)
    r = (expit(eta) - y) / y.size
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + l2 * w
    grad[-1] = r.sum()
    return loss, grad


def fit(X, y, l2=0.0, tol=1e-6, max_iter=100):
    """Return ``(theta, converged, n_iter)``.

    Stops when the gradient norm drops below ``tol``. On separable data the
    likelihood has no finite maximizer; the iteration cap then ends the fit
    with ``converged=False``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    A = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros(p + 1)
    ridge = np.full(p + 1, l2)
    ridge[-1] = 0.0
    loss, grad = loss_and_grad(theta, X, y, l2)
    for it in range(1, max_iter + 1):
        if np.linalg.norm(grad) < tol:
            return theta, True, it - 1
        s = expit(A @ theta)
        H = (A * (s * (1 - s))[:, None]).T @ A / n + np.diag(ridge)
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = theta - t * step
            new_loss, new_grad = loss_and_grad(cand, X, y, l2)
            if np.isfinite(new_loss) and new_loss <= loss - 1e-4 * t * (grad @ step):
                break
            t *= 0.5
            if t < 1e-10:
                return theta, bool(np.linalg.norm(grad) < tol), it
        theta, loss, grad = cand, new_loss, new_grad
    return theta, bool(np.linalg.norm(grad) < tol), max_iter
