"""Ordered linear algebra on R^N: cones, positive decomposition, comparability.

Two cone families are supported: the standard nonnegative cone (all
coordinates >= 0) and the type-K cone (first k coordinates >= 0, last l
coordinates <= 0, k + l = N).  Both are solid, reproducing and normal, and
every ell^p norm is monotonic for the orders they induce.

All predicates here use exact sign checks; tolerance policy belongs to
callers (estimators use eps = 1e-12 scaled by the vector norm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Cone:
    """A coordinate orthant, encoded by the admissible sign of each entry.

    ``signs[i] = +1`` means coordinate i must be >= 0, ``-1`` means <= 0.
    """

    signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.signs) < 2:
            raise ValueError("cone dimension must be >= 2")
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("cone signs must be +1 or -1")

    @property
    def dim(self) -> int:
        return len(self.signs)

    @property
    def sign_vector(self) -> np.ndarray:
        return np.asarray(self.signs, dtype=float)


def standard_cone(n: int) -> Cone:
    """The nonnegative orthant in R^n."""
    return Cone(signs=(1,) * n)


def type_k_cone(k: int, l: int) -> Cone:
    """First k coordinates nonnegative, last l nonpositive (k + l = N)."""
    if k < 1 or l < 1:
        raise ValueError("type-K cone needs k >= 1 and l >= 1")
    return Cone(signs=(1,) * k + (-1,) * l)


def _check_dim(u: np.ndarray, c: Cone) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (c.dim,):
        raise ValueError(f"dimension mismatch: vector has shape {u.shape}, cone dim {c.dim}")
    return u


def cone_contains(u, c: Cone) -> bool:
    """Exact membership: every coordinate satisfies the cone's sign constraint."""
    u = _check_dim(u, c)
    return bool(np.all(c.sign_vector * u >= 0.0))


def cone_interior_contains(u, c: Cone) -> bool:
    """Strict inequalities in every coordinate."""
    u = _check_dim(u, c)
    return bool(np.all(c.sign_vector * u > 0.0))


def positive_decompose(u):
    """Split u into (u_plus, u_minus), both in the standard cone, u = u_plus - u_minus.

    Componentwise u_plus = max(u, 0), u_minus = max(-u, 0); for every ell^p
    norm both parts are no larger than u itself.
    """
    u = np.asarray(u, dtype=float)
    return np.maximum(u, 0.0), np.maximum(-u, 0.0)


def comparable(u, v, c: Cone):
    """Tightest (alpha_lo, alpha_hi) with alpha_lo*v <= u <= alpha_hi*v in the cone order.

    Returns None when no pair of positive bounds exists (u outside the
    component of v).  Both inputs must be nonzero members of the cone.
    """
    u = _check_dim(u, c)
    v = _check_dim(v, c)
    if not np.any(u) or not np.any(v):
        raise ValueError("comparable requires nonzero vectors")
    if not (cone_contains(u, c) and cone_contains(v, c)):
        raise ValueError("comparable requires both vectors in the cone")
    # Reduce to the standard cone by flipping the nonpositive block.
    s = c.sign_vector
    a, b = s * u, s * v
    # alpha_lo <= a_i/b_i <= alpha_hi wherever b_i > 0; b_i = 0 forces a_i = 0.
    if np.any((b == 0.0) & (a > 0.0)):
        return None
    mask = b > 0.0
    ratios = a[mask] / b[mask]
    alpha_lo = float(ratios.min())
    alpha_hi = float(ratios.max())
    if alpha_lo <= 0.0:
        return None
    return alpha_lo, alpha_hi
