"""Vector norms, their duals and induced matrix norms ||G||_{alpha,beta}.

Only pairs with a closed form or a cheap exact iteration are supported:
alpha = 1, beta = inf, or (2, 2). Anything else raises UnsupportedNormPair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteMatrix, UnsupportedNormPair

POWER_RTOL = 1e-12
POWER_MAX_ITER = 10_000


class NormTag(enum.Enum):
    ONE = "1"
    TWO = "2"
    INF = "inf"

    @classmethod
    def parse(cls, text) -> "NormTag":
        if isinstance(text, NormTag):
            return text
        key = str(text).strip().lower()
        aliases = {"1": cls.ONE, "l1": cls.ONE, "one": cls.ONE, "2": cls.TWO, "l2": cls.TWO, "two": cls.TWO,
                   "inf": cls.INF, "linf": cls.INF, "infinity": cls.INF}
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown norm {text!r}; expected 1, 2 or inf") from None

    def __str__(self):
        return self.value


def is_supported(alpha: NormTag, beta: NormTag) -> bool:
    return alpha is NormTag.ONE or beta is NormTag.INF or (alpha is NormTag.TWO and beta is NormTag.TWO)


@dataclass(frozen=True)
class NormPair:
    alpha: NormTag  # input space
    beta: NormTag  # output space

    def __post_init__(self):
        a, b = NormTag.parse(self.alpha), NormTag.parse(self.beta)
        if not is_supported(a, b):
            raise UnsupportedNormPair(
                f"induced norm ({a}, {b}) has no exact closed form; supported pairs have "
                "alpha=1, beta=inf, or alpha=beta=2"
            )
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def parse(cls, alpha, beta) -> "NormPair":
        return cls(NormTag.parse(alpha), NormTag.parse(beta))

    def to_json(self) -> list[str]:
        return [self.alpha.value, self.beta.value]


def vector_norm(v, tag: NormTag) -> float:
    return float(_norm_along(np.asarray(v, dtype=np.float64), tag, axis=-1))


def _norm_along(a: np.ndarray, tag: NormTag, axis: int) -> np.ndarray:
    if tag is NormTag.ONE:
        return np.abs(a).sum(axis=axis)
    if tag is NormTag.INF:
        if a.shape[axis] == 0:
            return np.zeros(np.delete(a.shape, axis % a.ndim))
        return np.abs(a).max(axis=axis)
    return np.sqrt((a * a).sum(axis=axis))


def dual(tag: NormTag) -> NormTag:
    return {NormTag.ONE: NormTag.INF, NormTag.INF: NormTag.ONE, NormTag.TWO: NormTag.TWO}[tag]


def spectral_norm(G: np.ndarray) -> float:
    """Largest singular value by power iteration on G^T G.

    Starts from the normalized all-ones vector; restarts once from a fixed
    perturbed vector when the iterate collapses, fails to converge, or lands
    below the largest diagonal entry of G^T G (a certain sign of a wrong
    eigenvector).
    """
    m, n = G.shape
    if m == 1 or n == 1:
        return float(np.sqrt((G * G).sum()))
    A = G.T @ G
    floor = float(np.max(np.diag(A)))
    if floor == 0.0:
        return 0.0
    lam, ok = _power(A, np.ones(n))
    if not ok or lam < floor * (1 - 1e-9):
        start = 1.0 + np.arange(1, n + 1) / (n + 1.0) * np.where(np.arange(n) % 2, -1.0, 1.0)
        lam2, _ = _power(A, start)
        lam = max(lam, lam2, floor)
    return float(np.sqrt(lam))


def _power(A, v):
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(POWER_MAX_ITER):
        w = A @ v
        new = float(v @ w)
        size = np.linalg.norm(w)
        if size == 0.0:
            return 0.0, False
        v = w / size
        if abs(new - lam) <= POWER_RTOL * abs(new):
            return new, True
        lam = new
    return lam, False


def induced_norm(G, pair: NormPair) -> float:
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {G.shape}")
    if not np.isfinite(G).all():
        raise NonFiniteMatrix("matrix contains NaN or Inf")
    return float(induced_norm_batch(G[None], pair, check=False)[0])


def induced_norm_batch(G: np.ndarray, pair: NormPair, check: bool = True) -> np.ndarray:
    """Induced norms of a stack of matrices with shape (B, m, n)."""
    if check and not np.isfinite(G).all():
        raise NonFiniteMatrix("matrix contains NaN or Inf")
    alpha, beta = pair.alpha, pair.beta
    if alpha is NormTag.ONE:
        # extreme points of the l1 ball are the signed basis vectors
        return _norm_along(G, beta, axis=-2).max(axis=-1)
    if beta is NormTag.INF:
        return _norm_along(G, dual(alpha), axis=-1).max(axis=-1)
    if alpha is NormTag.TWO and beta is NormTag.TWO:
        if G.shape[1] == 1 or G.shape[2] == 1:
            return np.sqrt((G * G).sum(axis=(1, 2)))
        return np.array([spectral_norm(g) for g in G])
    raise UnsupportedNormPair(f"({alpha}, {beta})")
