import numpy as np

from lipsample.net import AffineLayer, Mlp, init_mlp, mlp_from_weights
from lipsample.norms import NormPair, NormTag

SUPPORTED_PAIRS = [
    NormPair(a, b)
    for a in NormTag
    for b in NormTag
    if a is NormTag.ONE or b is NormTag.INF or (a is NormTag.TWO and b is NormTag.TWO)
]
INF_INF = NormPair(NormTag.INF, NormTag.INF)


def abs_net():
    return mlp_from_weights([[[1.0], [-1.0]], [[1.0, 1.0]]], [[0.0, 0.0], [0.0]])


def relu_net():
    return mlp_from_weights([[[1.0]], [[1.0]]], [[0.0], [0.0]])


def linear_net(W, b=None):
    W = np.atleast_2d(np.asarray(W, dtype=float))
    return Mlp((AffineLayer(W, np.zeros(W.shape[0]) if b is None else b, False),))


def constant_net(arch, value=0.5):
    weights = [np.zeros((o, i)) for i, o in zip(arch[:-1], arch[1:])]
    biases = [np.zeros(o) for o in arch[1:]]
    biases[-1][:] = value
    return mlp_from_weights(weights, biases)


def random_net(arch, seed):
    return init_mlp(arch, np.random.default_rng(seed))


def fd_jacobian(net, x, h=1e-6):
    from lipsample.net import forward

    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((forward(net, x + e).output - forward(net, x - e).output) / (2 * h))
    return np.stack(cols, axis=1)


def min_abs_preactivation(net, x):
    from lipsample.net import forward

    pre = forward(net, x).preactivations
    return min(np.abs(z).min() for z in pre) if pre else np.inf
