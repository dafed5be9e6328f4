"""Multi-indices for mixed space/velocity derivatives.

A multi-index pair (alpha, beta) encodes the derivative d^alpha_x d^beta_v:
alpha orders the three spatial axes, beta the three velocity axes.  Addition
is componentwise and |alpha| denotes the total order alpha1+alpha2+alpha3.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

__all__ = ["MultiIndex", "enumerate_indices", "ZERO_INDEX"]


@dataclass(frozen=True, order=True)
class MultiIndex:
    alpha: tuple[int, int, int] = (0, 0, 0)
    beta: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        for name, comp in (("alpha", self.alpha), ("beta", self.beta)):
            if len(comp) != 3 or any(int(k) != k or k < 0 for k in comp):
                raise ValueError(f"{name} must be a 3-tuple of nonnegative integers, got {comp}")
        object.__setattr__(self, "alpha", tuple(int(k) for k in self.alpha))
        object.__setattr__(self, "beta", tuple(int(k) for k in self.beta))

    @property
    def x_order(self) -> int:
        return sum(self.alpha)

    @property
    def v_order(self) -> int:
        return sum(self.beta)

    @property
    def order(self) -> int:
        return self.x_order + self.v_order

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(
            tuple(a + b for a, b in zip(self.alpha, other.alpha)),
            tuple(a + b for a, b in zip(self.beta, other.beta)),
        )

    def dominates(self, other: "MultiIndex") -> bool:
        """True when every component is >= the corresponding one of ``other``."""
        return all(a >= b for a, b in zip(self.alpha + self.beta, other.alpha + other.beta))

    def key(self) -> str:
        """Stable string key, e.g. ``'100|020'``, used in reports."""
        return "".join(map(str, self.alpha)) + "|" + "".join(map(str, self.beta))

    @classmethod
    def from_key(cls, key: str) -> "MultiIndex":
        a, b = key.split("|")
        return cls(tuple(int(c) for c in a), tuple(int(c) for c in b))


ZERO_INDEX = MultiIndex()


def enumerate_indices(max_order: int) -> list[MultiIndex]:
    """All (alpha, beta) with |alpha|+|beta| <= max_order, lexicographic.

    The count follows the stars-and-bars formula C(max_order+6, 6); for
    max_order 10 that is 8008 indices.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    out = []
    rng = range(max_order + 1)
    for combo in itertools.product(rng, repeat=6):
        if sum(combo) <= max_order:
            out.append(MultiIndex(combo[:3], combo[3:]))
    return out
