"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def _xlogx(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log(p[mask])
    return out


def shannon_rows(dist):
    """Shannon entropy (nats) of every row; entries <= 0 contribute nothing."""
    dist = np.ascontiguousarray(dist, dtype=float)
    return -_xlogx(dist).sum(axis=1)


def mutual_information_rows(weights, channel):
    """Mutual information I(X:Y) for each row of input weights.

    ``weights`` has shape (n_points, n_inputs); ``channel[x, y]`` is p(y|x).
    """
    weights = np.where(weights > 0, weights, 0.0)
    channel = np.asarray(channel, dtype=float)
    cond = _xlogx(channel).sum(axis=1)
    q = weights @ channel
    return -_xlogx(q).sum(axis=1) + weights @ cond
