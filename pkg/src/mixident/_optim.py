"""Internal constrained least-squares machinery for fitting mixtures to a
target moment tensor.

Parameters are a weight vector on the simplex plus one simplex point per
component. The workhorses are projected gradient descent with a
backtracking line search (robust far from a solution) and a projected
Gauss-Newton polish (quadratic convergence onto zero-residual manifolds).
Everything here works on raw ndarrays; public modules wrap the results in
validated types.
"""

from __future__ import annotations

import numpy as np

from .core import _kron_power
from .tensor import _outer_power


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = idx[u - css / idx > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _project_rows(c: np.ndarray) -> np.ndarray:
    return np.array([project_simplex(row) for row in c])


def model_tensor(weights: np.ndarray, comps: np.ndarray, n: int) -> np.ndarray:
    """Dense weighted sum of n-fold outer powers of the component rows."""
    d = comps.shape[1]
    t = np.zeros((d,) * n)
    for w, row in zip(weights, comps):
        t += w * _outer_power(row, n)
    return t


def residual_norm(weights: np.ndarray, comps: np.ndarray, target: np.ndarray) -> float:
    n = target.ndim
    return float(np.linalg.norm(model_tensor(weights, comps, n) - target))


def _gradients(weights, comps, target):
    """Gradients of ||model - target||_F^2 wrt weights and component rows."""
    n = target.ndim
    d = comps.shape[1]
    resid = model_tensor(weights, comps, n) - target
    rflat = resid.ravel()
    rmat = resid.reshape(d, -1)
    gw = np.empty_like(weights)
    gc = np.empty_like(comps)
    for i in range(weights.shape[0]):
        gw[i] = 2.0 * float(rflat @ _kron_power(comps[i], n))
        if n == 1:
            gc[i] = 2.0 * weights[i] * rflat
        else:
            # resid is symmetric, so the n position terms coincide
            gc[i] = 2.0 * weights[i] * n * (rmat @ _kron_power(comps[i], n - 1))
    return gw, gc


def projected_gradient(target, weights0, comps0, max_iter: int = 500,
                       ftol: float = 1e-26, stall_iters: int = 40,
                       stall_factor: float = 1.0 - 1e-4):
    """Minimize the squared residual by projected gradient with backtracking.

    Returns (weights, comps, residual_norm). Stops at ``max_iter``, when
    the objective drops below ``ftol``, or when ``stall_iters`` iterations
    pass without improving the best objective by ``stall_factor``.
    """
    w = project_simplex(np.asarray(weights0, dtype=float))
    c = _project_rows(np.asarray(comps0, dtype=float))
    f = residual_norm(w, c, target) ** 2
    step = 0.1
    best = f
    since_improve = 0
    for _ in range(max_iter):
        if f < ftol:
            break
        gw, gc = _gradients(w, c, target)
        accepted = False
        for _ in range(30):
            w_new = project_simplex(w - step * gw)
            c_new = _project_rows(c - step * gc)
            f_new = residual_norm(w_new, c_new, target) ** 2
            if f_new < f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, c, f = w_new, c_new, f_new
        step *= 1.3
        if f < best * stall_factor:
            best = f
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= stall_iters:
                break
    return w, c, float(np.sqrt(max(f, 0.0)))


def _jacobian_blocks(weights, comps, n, d):
    """Jacobian of vec(model): weight block (d**n, l) and row block
    (d**n, l, d)."""
    l = weights.shape[0]
    jw = np.empty((d ** n, l))
    jc = np.empty((d ** n, l, d))
    eye = np.eye(d)
    for i in range(l):
        kp = [np.ones(1)]
        for _ in range(n):
            kp.append(np.kron(kp[-1], comps[i]))
        jw[:, i] = kp[n]
        for j in range(d):
            col = np.zeros(d ** n)
            for p in range(n):
                col += np.kron(kp[p], np.kron(eye[j], kp[n - 1 - p]))
            jc[:, i, j] = weights[i] * col
    return jw, jc


def _sum_zero_basis(k: int) -> np.ndarray:
    """Orthonormal basis (columns) of the sum-zero subspace of R^k."""
    if k == 1:
        return np.zeros((1, 0))
    _, _, vt = np.linalg.svd(np.ones((1, k)))
    return vt[1:].T


def gauss_newton_polish(target, weights0, comps0, max_iter: int = 30,
                        target_resid: float = 1e-13):
    """Projected Gauss-Newton refinement toward a zero-residual fit.

    Steps are taken in the sum-preserving tangent space (weight deltas and
    per-row deltas each sum to zero), so the mass constraints never fight
    the linearization; nonnegativity is enforced by simplex projection,
    which is inactive near interior solutions. Damped on failure to
    decrease the residual. Returns (weights, comps, residual_norm).
    """
    n = target.ndim
    d = target.shape[0]
    w = project_simplex(np.asarray(weights0, dtype=float))
    c = _project_rows(np.asarray(comps0, dtype=float))
    l = w.shape[0]
    bw = _sum_zero_basis(l)
    bd = _sum_zero_basis(d)
    best = residual_norm(w, c, target)
    for _ in range(max_iter):
        if best <= target_resid:
            break
        resid = (model_tensor(w, c, n) - target).ravel()
        jw, jc = _jacobian_blocks(w, c, n, d)
        jt = np.concatenate(
            [jw @ bw, (jc @ bd).reshape(d ** n, l * bd.shape[1])], axis=1)
        sol = np.linalg.lstsq(jt, -resid, rcond=None)[0]
        delta_w = bw @ sol[: bw.shape[1]]
        delta_c = (bd @ sol[bw.shape[1]:].reshape(l, bd.shape[1]).T).T
        improved = False
        scale = 1.0
        for _ in range(12):
            w_new = project_simplex(w + scale * delta_w)
            c_new = _project_rows(c + scale * delta_c)
            r_new = residual_norm(w_new, c_new, target)
            if r_new < best:
                w, c, best = w_new, c_new, r_new
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    return w, c, best


def random_start(l: int, d: int, rng: np.random.Generator):
    """Uniform-simplex random initialization for an l-component fit."""
    g = rng.exponential(1.0, size=l)
    rows = rng.exponential(1.0, size=(l, d))
    return g / g.sum(), rows / rows.sum(axis=1, keepdims=True)


def _khatri_rao(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.einsum("ir,jr->ijr", out, m).reshape(-1, m.shape[1])
    return out


def als_factors(target, l: int, rng: np.random.Generator, iters: int = 300,
                tol: float = 1e-14):
    """Unconstrained alternating least squares toward a rank-l decomposition.

    Returns (factors, residual_norm) with one (d, l) factor matrix per
    mode. Columns are not normalized; the scale rides on the last updated
    mode. Good swamp behavior is not guaranteed, so callers restart.
    """
    n, d = target.ndim, target.shape[0]
    factors = [np.abs(rng.normal(0.5, 0.3, (d, l))) + 0.05 for _ in range(n)]
    norm_t = max(float(np.linalg.norm(target)), 1.0)
    resid = np.inf
    for it in range(iters):
        for mode in range(n):
            kr = _khatri_rao([factors[t] for t in range(n) if t != mode])
            unf = np.moveaxis(target, mode, 0).reshape(d, -1)
            sol = np.linalg.lstsq(kr, unf.T, rcond=None)[0]
            factors[mode] = sol.T
        if it % 10 == 9 or it == iters - 1:
            model = _khatri_rao(factors).sum(axis=1)
            resid = float(np.linalg.norm(model - target.ravel()))
            if resid < tol * norm_t:
                break
    if not np.isfinite(resid):
        model = _khatri_rao(factors).sum(axis=1)
        resid = float(np.linalg.norm(model - target.ravel()))
    return factors, resid


def components_from_factors(factors, l: int) -> np.ndarray | None:
    """Collapse per-mode CP factors into simplex component rows.

    Each column is sign-fixed (mass positive), unit-mass normalized per
    mode, averaged across modes, and projected onto the simplex. Returns
    None when a column carries no usable mass.
    """
    d = factors[0].shape[0]
    comps = np.zeros((l, d))
    for i in range(l):
        acc = np.zeros(d)
        used = 0
        for f in factors:
            col = f[:, i]
            mass = col.sum()
            if abs(mass) < 1e-12:
                continue
            acc += col / mass
            used += 1
        if used == 0:
            return None
        comps[i] = project_simplex(acc / used)
    return comps


def em_mixture_fit(target, l: int, rng: np.random.Generator,
                   iters: int = 2000, tol: float = 1e-15):
    """Latent-class EM on the exact tuple distribution carried by the tensor.

    The tensor entries are treated as fractional counts of outcome tuples;
    EM climbs the corresponding log-likelihood, whose unique global
    optimum (for identifiable instances) is the generating mixture. Its
    basins behave much better than Frobenius descent when the target is
    overcomplete in every mode. Returns (weights, comps); accuracy after
    convergence is ~sqrt(eps), so callers should polish.
    """
    import itertools

    n, d = target.ndim, target.shape[0]
    tuples = np.array(list(itertools.product(range(d), repeat=n)))
    counts = np.zeros((tuples.shape[0], d))
    for j in range(d):
        counts[:, j] = (tuples == j).sum(axis=1)
    tflat = target.ravel()
    weights = rng.exponential(1.0, l)
    weights /= weights.sum()
    comps = rng.exponential(1.0, (l, d))
    comps /= comps.sum(axis=1, keepdims=True)
    prev_ll = -np.inf
    for it in range(iters):
        log_like = counts @ np.log(np.clip(comps, 1e-300, None)).T
        joint = weights[None, :] * np.exp(log_like)
        total = np.clip(joint.sum(axis=1, keepdims=True), 1e-300, None)
        resp = joint / total * tflat[:, None]
        weights = np.clip(resp.sum(axis=0), 1e-300, None)
        weights = weights / weights.sum()
        comps = np.clip(resp.T @ counts, 1e-300, None)
        comps = comps / comps.sum(axis=1, keepdims=True)
        if it % 25 == 24:
            ll = float(tflat @ np.log(total[:, 0]))
            if ll - prev_ll < tol * max(abs(ll), 1.0):
                break
            prev_ll = ll
    return weights, comps


def fit_mixture_tensor(target, l: int, rng: np.random.Generator,
                       restarts: int = 240, als_iters: int = 300,
                       accept_resid: float = 1e-12):
    """Best multi-start constrained fit of an l-component mixture.

    Restarts rotate three engines, each finished by projected
    Gauss-Newton: unconstrained ALS folded back onto the simplex (fast,
    reliable whenever some mode has full column rank), latent-class EM
    (covers targets overcomplete in every mode, where ALS swamps), and
    projected gradient from a random simplex start (diversity). Returns
    (weights, comps, residual_norm) of the best restart; stops early once
    one reaches ``accept_resid``.
    """
    from scipy.optimize import nnls

    n, d = target.ndim, target.shape[0]
    best = (None, None, np.inf)
    for restart in range(restarts):
        engine = restart % 3
        if engine == 0:
            factors, _ = als_factors(target, l, rng, iters=als_iters)
            comps = components_from_factors(factors, l)
            if comps is None:
                continue
            design = np.column_stack([_kron_power(row, n) for row in comps])
            weights, _ = nnls(design, target.ravel())
            total = weights.sum()
            if total <= 0.0:
                continue
            weights = weights / total
        elif engine == 1:
            weights, comps = em_mixture_fit(target, l, rng)
        else:
            weights, comps = random_start(l, d, rng)
            weights, comps, _ = projected_gradient(target, weights, comps,
                                                   max_iter=150)
        weights, comps, r = gauss_newton_polish(target, weights, comps)
        if r < best[2]:
            best = (weights, comps, r)
        if best[2] <= accept_resid:
            break
    return best
