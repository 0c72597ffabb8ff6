"""Independent reference implementations used as test oracles."""

import itertools

import numpy as np

from cnnldp.nn import loss_and_grad


def naive_forward(model, x):
    """Straight-loop forward pass over the layer specs and parameters."""
    out = np.array(x, dtype=float)
    for layer in model.layers:
        spec, p = layer.spec(), layer.params
        if spec["kind"] == "conv":
            n, h, w, c = out.shape
            k, f = spec["kernel"], spec["filters"]
            r = k // 2
            y = np.zeros((n, h, w, f))
            for s in range(n):
                for i in range(h):
                    for j in range(w):
                        for o in range(f):
                            acc = p["b"][o]
                            for di in range(k):
                                for dj in range(k):
                                    ii, jj = i + di - r, j + dj - r
                                    if 0 <= ii < h and 0 <= jj < w:
                                        for ch in range(c):
                                            acc += out[s, ii, jj, ch] * p["W"][di, dj, ch, o]
                            y[s, i, j, o] = max(acc, 0.0) if spec["activation"] == "relu" else acc
            out = y
        elif spec["kind"] == "maxpool":
            n, h, w, c = out.shape
            y = np.zeros((n, h - 1, w - 1, c))
            for s, i, j, ch in itertools.product(range(n), range(h - 1), range(w - 1), range(c)):
                y[s, i, j, ch] = max(out[s, i, j, ch], out[s, i + 1, j, ch], out[s, i, j + 1, ch], out[s, i + 1, j + 1, ch])
            out = y
        elif spec["kind"] == "flatten":
            out = out.reshape(out.shape[0], -1)
        elif spec["kind"] == "dense":
            y = np.zeros((out.shape[0], spec["units"]))
            for s in range(out.shape[0]):
                for u in range(spec["units"]):
                    z = p["b"][u] + sum(out[s, d] * p["W"][d, u] for d in range(out.shape[1]))
                    y[s, u] = max(z, 0.0) if spec["activation"] == "relu" else z
            out = y
        elif spec["kind"] == "softmax":
            rows, cats = spec["rows"], spec["categories"]
            y = np.zeros((out.shape[0], rows, cats))
            for s in range(out.shape[0]):
                z = [p["b"][u] + sum(out[s, d] * p["W"][d, u] for d in range(out.shape[1])) for u in range(rows * cats)]
                for r in range(rows):
                    seg = z[r * cats : (r + 1) * cats]
                    m = max(seg)
                    e = [np.exp(v - m) for v in seg]
                    tot = sum(e)
                    y[s, r] = [v / tot for v in e]
            out = y
    return out


def gradient_check(model, batch, h=1e-5, **loss_kw) -> float:
    """Max |analytic - central difference| / max(1, |analytic|) over every parameter."""
    loss_and_grad(model, batch, **loss_kw)
    analytic = {(id(layer), k): g.copy() for layer in model.layers for k, g in layer.grads.items()}
    worst = 0.0
    for layer in model.layers:
        for k, arr in layer.params.items():
            ga = analytic[(id(layer), k)]
            flat = arr.reshape(-1)
            for idx in range(flat.size):
                old = flat[idx]
                flat[idx] = old + h
                lp = loss_and_grad(model, batch, **loss_kw)
                flat[idx] = old - h
                lm = loss_and_grad(model, batch, **loss_kw)
                flat[idx] = old
                num = (lp - lm) / (2 * h)
                a = ga.reshape(-1)[idx]
                worst = max(worst, abs(a - num) / max(1.0, abs(a)))
    return worst


def brute_schedulable(demands, capacities, deadlines) -> float:
    """Exact integer counting of X <= C * D, i.e. X / C <= D without division."""
    n = len(demands)
    if n == 0:
        return 0.0
    ok = sum(1 for x, c, d in zip(demands, capacities, deadlines) if x <= c * d)
    return ok / n
