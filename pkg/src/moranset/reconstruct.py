"""First reconstruction: trim every interval by the next level's boundary gaps.

The trimmed ("star") interval of a level-k node drops L_{k+1} on the left and
R_{k+1} on the right, so its children's boundary gaps migrate into the
interior gaps of the parent.  All derived identities are exact-rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import DegenerateSpecError
from .specs import MoranSpec
from .tree import (DEFAULT_NODE_BUDGET, LevelSet, Node, build_level, iter_level,
                   level_stats)


@dataclass
class StarStats:
    k: int
    count: int                  # unchanged by trimming
    length: Fraction            # trimmed interval length at level k
    total_length: Fraction
    max_gap: Fraction | None    # trimmed-gap extremes (None at k = 0)
    min_gap: Fraction | None
    slack: Fraction | None
    L: Fraction                 # boundary gap inherited from level k+1
    R: Fraction


class StarState:
    """Trimmed quantities of a construction through a fixed depth K.

    Trimmed level sets are derived lazily from the base levels plus the two
    boundary-gap shifts; only endpoints differ.
    """

    def __init__(self, spec: MoranSpec, K: int):
        self.spec = spec
        self.K = K
        self._stats: dict[int, StarStats] = {}
        for k in range(K + 1):
            if self.delta_star(k) <= 0:
                raise DegenerateSpecError(
                    f"trimmed length at level {k} is {self.delta_star(k)} <= 0; "
                    "the construction degenerates")

    # -- per-level scalars --------------------------------------------------

    def delta_star(self, k: int) -> Fraction:
        return self.spec.delta(k) - self.spec.L(k + 1) - self.spec.R(k + 1)

    def L_star(self, k: int) -> Fraction:
        return self.spec.L(k + 1)

    def R_star(self, k: int) -> Fraction:
        return self.spec.R(k + 1)

    def boundary_shift(self, k: int) -> Fraction:
        """What every level-k interior gap gains from trimming: L_{k+1} + R_{k+1}."""
        return self.spec.L(k + 1) + self.spec.R(k + 1)

    def stats(self, k: int) -> StarStats:
        if k not in self._stats:
            count = self.spec.count(k)
            length = self.delta_star(k)
            if k == 0:
                self._stats[k] = StarStats(0, 1, length, length, None, None, None,
                                           self.L_star(0), self.R_star(0))
            else:
                base = level_stats(self.spec, k)
                shift = self.boundary_shift(k)
                n = self.spec.n(k)
                self._stats[k] = StarStats(
                    k, count, length, count * length,
                    base.max_gap + shift, base.min_gap + shift,
                    base.slack + (n - 1) * shift,
                    self.L_star(k), self.R_star(k))
        return self._stats[k]

    # -- trimmed intervals --------------------------------------------------

    def trim(self, node: Node, k: int) -> Node:
        return Node(node.address,
                    node.lo + self.spec.L(k + 1),
                    node.hi - self.spec.R(k + 1))

    def level(self, k: int, budget: int = DEFAULT_NODE_BUDGET) -> LevelSet:
        base = build_level(self.spec, k, budget=budget)
        return LevelSet(k, [self.trim(n, k) for n in base.nodes])

    def iter_level(self, k: int) -> Iterator[Node]:
        for node in iter_level(self.spec, k):
            yield self.trim(node, k)

    def interior_gaps(self, sigma: tuple[int, ...], k: int) -> tuple[Fraction, ...]:
        """Trimmed interior gaps of parent sigma at level k: each base gap
        plus the children's trimmed-off boundary gaps L_{k+1} + R_{k+1}."""
        shift = self.boundary_shift(k)
        return tuple(g + shift for g in self.spec.interior_gaps(sigma, k))


def first_reconstruct(spec: MoranSpec, K: int) -> StarState:
    """Trim levels 0..K.  Level-K trimmed gaps reference the L/R rules at
    K+1, so the rules must be evaluable through K+1."""
    return StarState(spec, K)


def star_stats(state: StarState, k: int) -> StarStats:
    return state.stats(k)
