"""Pure-numpy versions of the compiled kernels in ``_core.pyx``."""

import numpy as np

U_IDENTITY, U_POWER = 0, 1
W_IDENTITY, W_POWER, W_TK = 0, 1, 2


def _utility(kind, par, x):
    x = np.maximum(x, 0.0)
    if kind == U_POWER:
        return np.power(x, par)
    return x


def weight_array(kind, eta, p):
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == W_POWER:
            out = np.power(p, eta)
        elif kind == W_TK:
            num = np.power(p, eta)
            out = num / np.power(num + np.power(1.0 - p, eta), 1.0 / eta)
        else:
            out = p.copy()
    out = np.where(p <= 0.0, 0.0, out)
    return np.where(p >= 1.0, 1.0, out)


def cpt_sorted_sum(xs_sorted, b, up_kind, up_par, um_kind, um_par,
                   wp_kind, wp_par, wm_kind, wm_par):
    x = np.asarray(xs_sorted, dtype=np.float64)
    n = x.shape[0]
    i = np.arange(n, dtype=np.float64)
    gains = _utility(up_kind, up_par, x - b)
    losses = _utility(um_kind, um_par, b - x)
    step_up = np.diff(gains, prepend=0.0)
    step_down = -np.diff(losses, append=0.0)
    gain = float(np.sum(weight_array(wp_kind, wp_par, (n - i) / n)[step_up != 0] * step_up[step_up != 0]))
    loss = float(np.sum(weight_array(wm_kind, wm_par, (i + 1) / n)[step_down != 0] * step_down[step_down != 0]))
    return gain, loss


def quadratic(theta, A, bvec):
    theta = np.asarray(theta, dtype=np.float64)
    return float(theta @ (np.asarray(A) @ theta) + np.asarray(bvec) @ theta)


def rosenbrock(theta):
    t = np.asarray(theta, dtype=np.float64)
    return float(np.sum(100.0 * (t[1:] - t[:-1] ** 2) ** 2 + (1.0 - t[:-1]) ** 2))
