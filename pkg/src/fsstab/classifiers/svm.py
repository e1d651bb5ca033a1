"""Gaussian-kernel C-SVM trained by sequential minimal optimization.

The solver follows the second-order working-set selection of Fan, Chen and
Lin (2005): pick the maximal KKT violator ``i``, then the partner ``j`` that
maximizes the guaranteed decrease of the dual objective. Kernels are
precomputed, so the solver works on any index subset of a shared matrix.
"""
import numpy as np
from numba import njit

TAU = 1e-12
_PAIR_SAMPLE = 4000


@njit(cache=True)
def _violator(y, alpha, G, C, active):
    """Maximal violating index in I_up among the first ``active`` positions."""
    gmax = -np.inf
    i = -1
    for t in range(active):
        if y[t] > 0:
            if alpha[t] < C and -G[t] >= gmax:
                gmax = -G[t]
                i = t
        else:
            if alpha[t] > 0 and G[t] >= gmax:
                gmax = G[t]
                i = t
    return i, gmax


@njit(cache=True)
def _partner(K, idx, y, alpha, G, diag, C, active, i, gmax):
    """Second-order choice of ``j`` given ``i``. Returns ``(j, gap)``."""
    gmax2 = -np.inf
    j = -1
    # maximize diff^2 / quad without dividing per element
    best_num = 0.0
    best_den = 1.0
    ki = idx[i] if i >= 0 else 0
    for t in range(active):
        if y[t] > 0:
            if alpha[t] > 0:
                if G[t] >= gmax2:
                    gmax2 = G[t]
                diff = gmax + G[t]
            else:
                continue
        else:
            if alpha[t] < C:
                if -G[t] >= gmax2:
                    gmax2 = -G[t]
                diff = gmax - G[t]
            else:
                continue
        if i >= 0 and diff > 0:
            quad = diag[i] + diag[t] - 2.0 * K[ki, idx[t]]
            if quad <= 0:
                quad = TAU
            num = diff * diff
            if j == -1 or num * best_den >= best_num * quad:
                best_num = num
                best_den = quad
                j = t
    return j, gmax + gmax2


@njit(cache=True)
def _shrunk(t, y, alpha, G, C, gmax1, gmax2):
    if alpha[t] >= C:
        if y[t] > 0:
            return -G[t] > gmax1
        return -G[t] > gmax2
    if alpha[t] <= 0:
        if y[t] > 0:
            return G[t] > gmax2
        return G[t] > gmax1
    return False


@njit(cache=True)
def _reconstruct(K, idx, y, alpha, G, G_bar, C, active):
    n = idx.size
    for t in range(active, n):
        G[t] = G_bar[t] - 1.0
    for a in range(active):
        if 0.0 < alpha[a] < C:
            ka = idx[a]
            coef = alpha[a] * y[a]
            for t in range(active, n):
                G[t] += y[t] * coef * K[ka, idx[t]]


@njit(cache=True)
def _smo(K, idx, y, C, tol, max_iter, alpha, shrinking):
    """Solve the C-SVC dual on rows ``idx`` of kernel ``K``; ``alpha`` is updated in place.

    With ``shrinking`` the solver periodically drops bounded variables that
    cannot re-enter the working set, and restores them before stopping.
    Returns ``(rho, n_iter, converged)``; the decision value is
    ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = idx.size
    idx = idx.copy()
    y = y.copy()
    perm = np.arange(n)
    G = np.full(n, -1.0)
    G_bar = np.zeros(n)
    for a in range(n):
        if alpha[a] != 0.0:
            ka = idx[a]
            coef = alpha[a] * y[a]
            at_c = alpha[a] >= C
            for t in range(n):
                q = y[t] * coef * K[ka, idx[t]]
                G[t] += q
                if at_c:
                    G_bar[t] += q
    diag = np.empty(n)
    for t in range(n):
        diag[t] = K[idx[t], idx[t]]

    active = n
    unshrunk = False
    counter = min(n, 1000) + 1
    # the update pass also finds the next maximal violator
    fresh = False
    i = -1
    gmax = -np.inf
    it = 0
    converged = False
    while it < max_iter:
        counter -= 1
        if shrinking and counter == 0:
            counter = min(n, 1000)
            fresh = False
            gmax1 = -np.inf
            gmax2 = -np.inf
            for t in range(active):
                if y[t] > 0:
                    if alpha[t] < C:
                        gmax1 = max(gmax1, -G[t])
                    if alpha[t] > 0:
                        gmax2 = max(gmax2, G[t])
                else:
                    if alpha[t] < C:
                        gmax2 = max(gmax2, -G[t])
                    if alpha[t] > 0:
                        gmax1 = max(gmax1, G[t])
            if not unshrunk and gmax1 + gmax2 <= tol * 10:
                unshrunk = True
                _reconstruct(K, idx, y, alpha, G, G_bar, C, active)
                active = n
            t = 0
            while t < active:
                if _shrunk(t, y, alpha, G, C, gmax1, gmax2):
                    active -= 1
                    while active > t:
                        if not _shrunk(active, y, alpha, G, C, gmax1, gmax2):
                            for arr in (alpha, G, G_bar, y, diag):
                                arr[t], arr[active] = arr[active], arr[t]
                            idx[t], idx[active] = idx[active], idx[t]
                            perm[t], perm[active] = perm[active], perm[t]
                            break
                        active -= 1
                t += 1

        if not fresh:
            i, gmax = _violator(y, alpha, G, C, active)
        fresh = False
        j, gap = _partner(K, idx, y, alpha, G, diag, C, active, i, gmax)
        if gap < tol or j == -1:
            if active < n:
                _reconstruct(K, idx, y, alpha, G, G_bar, C, active)
                active = n
                i, gmax = _violator(y, alpha, G, C, active)
                j, gap = _partner(K, idx, y, alpha, G, diag, C, active, i, gmax)
                if gap < tol or j == -1:
                    converged = True
                    break
                counter = 1
            else:
                converged = True
                break
        it += 1

        ki = idx[i]
        kj = idx[j]
        kij = K[ki, kj]
        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = diag[i] + diag[j] - 2.0 * kij
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            d = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if d > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = d
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -d
            if d > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - d
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + d
        else:
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        dai = (alpha[i] - ai_old) * y[i]
        daj = (alpha[j] - aj_old) * y[j]
        gmax = -np.inf
        nxt = -1
        for t in range(active):
            kt = idx[t]
            g = G[t] + y[t] * (K[ki, kt] * dai + K[kj, kt] * daj)
            G[t] = g
            if y[t] > 0:
                if alpha[t] < C and -g >= gmax:
                    gmax = -g
                    nxt = t
            else:
                if alpha[t] > 0 and g >= gmax:
                    gmax = g
                    nxt = t
        fresh = True
        # G_bar tracks the gradient share of variables at the upper bound
        for pos, k, old in ((i, ki, ai_old), (j, kj, aj_old)):
            was = old >= C
            now = alpha[pos] >= C
            if shrinking and was != now:
                c = C * y[pos] if now else -C * y[pos]
                for t in range(n):
                    G_bar[t] += y[t] * c * K[k, idx[t]]
        i = nxt

    if active < n:
        _reconstruct(K, idx, y, alpha, G, G_bar, C, active)
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = (ub + lb) / 2.0
    out = alpha.copy()
    for t in range(n):
        alpha[perm[t]] = out[t]
    return rho, it, converged


@njit(cache=True)
def kernel_decision(K, rows, cols, coef, rho):
    """``K[rows][:, cols] @ coef - rho`` without materializing the submatrix."""
    out = np.empty(rows.size)
    for a in range(rows.size):
        r = rows[a]
        acc = 0.0
        for b in range(cols.size):
            acc += K[r, cols[b]] * coef[b]
        out[a] = acc - rho
    return out


def solve_dual(K, idx, y01, C=1.0, tol=1e-3, max_iter=0, alpha0=None, shrinking=True):
    """Run SMO on the training rows ``idx`` of the precomputed kernel ``K``.

    ``y01`` are the 0/1 labels of those rows. Returns ``(alpha, rho, n_iter, converged)``.
    """
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    y = np.where(np.asarray(y01) == 1, 1.0, -1.0)
    alpha = np.zeros(idx.size) if alpha0 is None else np.array(alpha0, dtype=float)
    if max_iter <= 0:
        max_iter = max(100_000, 100 * idx.size)
    rho, n_iter, converged = _smo(K, idx, y, float(C), float(tol), int(max_iter), alpha, shrinking)
    return alpha, rho, n_iter, converged


def sq_distances(A, B=None):
    """Matrix of squared Euclidean distances between rows."""
    B = A if B is None else B
    aa = np.einsum("ij,ij->i", A, A)
    bb = aa if B is A else np.einsum("ij,ij->i", B, B)
    D = aa[:, None] + bb[None, :] - 2.0 * A @ B.T
    np.maximum(D, 0.0, out=D)
    if B is A:
        np.fill_diagonal(D, 0.0)
    return D


def pair_sample(n, size=_PAIR_SAMPLE):
    """Fixed pseudo-random set of distinct row pairs used by the median heuristic."""
    rng = np.random.default_rng(n)
    a = rng.integers(0, n, size=size)
    b = rng.integers(0, n - 1, size=size)
    b = b + (b >= a)
    return a, b


def median_gamma(pair_sqdist):
    """Kernel width from the median heuristic: 1 / median squared pair distance."""
    d = np.asarray(pair_sqdist, dtype=float)
    med = float(np.median(d)) if d.size else 0.0
    if med <= 0:
        med = float(d.mean()) if d.size else 0.0
    return 1.0 / med if med > 0 else 1.0


def resolve_gamma(gamma, Z):
    if gamma != "median":
        return float(gamma)
    n = Z.shape[0]
    if n < 2:
        return 1.0
    a, b = pair_sample(n)
    return median_gamma(((Z[a] - Z[b]) ** 2).sum(axis=1))


class KernelSVM:
    """Fitted support vectors with their signed dual coefficients."""

    threshold = 0.0

    def __init__(self, Z, y01, C=1.0, gamma="median", tol=1e-3, max_iter=0):
        Z = np.asarray(Z, dtype=float)
        self.gamma = resolve_gamma(gamma, Z)
        K = np.exp(-self.gamma * sq_distances(Z))
        alpha, rho, self.n_iter, self.converged = solve_dual(
            K, np.arange(Z.shape[0]), y01, C, tol, max_iter
        )
        sv = alpha > 0
        self.support = Z[sv]
        self.coef = alpha[sv] * np.where(np.asarray(y01)[sv] == 1, 1.0, -1.0)
        self.rho = rho

    def decision(self, Q):
        Q = np.asarray(Q, dtype=float)
        if self.support.shape[0] == 0:
            return np.full(Q.shape[0], -self.rho)
        K = np.exp(-self.gamma * sq_distances(Q, self.support))
        return K @ self.coef - self.rho
