"""Built-in finite quantum groupoids.

* ``kz2``   group algebra of Z/2
* ``fp2``   functions on the pair groupoid over two points
* ``gp2``   its dual, the pair-groupoid algebra (a full 2x2 matrix algebra)
* ``fpn``   functions on the pair groupoid over ``n`` points
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .algebra import FiniteCStarAlgebra
from .weakhopf import WeakHopf


class InvalidGroupoid(ValueError):
    pass


@dataclass(frozen=True)
class Groupoid:
    """A finite groupoid given by its arrows.

    ``arrows[g] = (target, source)`` and ``compose[(g, h)] = gh`` for
    composable pairs (``source(g) == target(h)``).
    """

    arrows: tuple
    compose: dict
    labels: tuple

    @property
    def size(self) -> int:
        return len(self.arrows)

    def units(self) -> list[int]:
        return [g for g in range(self.size)
                if self.arrows[g][0] == self.arrows[g][1] and self.compose.get((g, g)) == g]

    def inverse(self, g: int) -> int:
        t, s = self.arrows[g]
        unit_t = next(u for u in self.units() if self.arrows[u][0] == t)
        for h in range(self.size):
            if self.compose.get((g, h)) == unit_t:
                return h
        raise InvalidGroupoid(f"arrow {self.labels[g]} has no inverse")

    def validate(self) -> None:
        """Raise ``InvalidGroupoid`` unless the arrow data is a groupoid."""
        n = self.size
        if len(self.labels) != n:
            raise InvalidGroupoid("one label per arrow is required")
        for g, h in itertools.product(range(n), repeat=2):
            composable = self.arrows[g][1] == self.arrows[h][0]
            gh = self.compose.get((g, h))
            if composable != (gh is not None):
                raise InvalidGroupoid(f"composition of ({self.labels[g]}, {self.labels[h]}) is "
                                      + ("missing" if composable else "defined on a non-composable pair"))
            if gh is not None and self.arrows[gh] != (self.arrows[g][0], self.arrows[h][1]):
                raise InvalidGroupoid(f"{self.labels[g]}{self.labels[h]} has the wrong endpoints")
        for g, h, k in itertools.product(range(n), repeat=3):
            gh, hk = self.compose.get((g, h)), self.compose.get((h, k))
            if gh is not None and hk is not None and self.compose[(gh, k)] != self.compose[(g, hk)]:
                raise InvalidGroupoid("composition is not associative")
        units = self.units()
        objects = {o for a in self.arrows for o in a}
        if sorted(self.arrows[u][0] for u in units) != sorted(objects):
            raise InvalidGroupoid("every object needs exactly one unit")
        for g in range(n):
            t, s = self.arrows[g]
            ut = next(u for u in units if self.arrows[u][0] == t)
            us = next(u for u in units if self.arrows[u][0] == s)
            if self.compose[(ut, g)] != g or self.compose[(g, us)] != g:
                raise InvalidGroupoid(f"units do not act trivially on {self.labels[g]}")
            h = self.inverse(g)
            if self.compose.get((h, g)) != us:
                raise InvalidGroupoid(f"inverse of {self.labels[g]} is one-sided")


def pair_groupoid(n: int) -> Groupoid:
    arrows = tuple((i, j) for i in range(n) for j in range(n))
    idx = {a: k for k, a in enumerate(arrows)}
    compose = {(idx[(i, j)], idx[(j, k)]): idx[(i, k)]
               for i, j, k in itertools.product(range(n), repeat=3)}
    labels = tuple(f"d{i}{j}" for i, j in arrows)
    return Groupoid(arrows, compose, labels)


def cyclic_group(n: int) -> Groupoid:
    arrows = tuple((0, 0) for _ in range(n))
    compose = {(a, b): (a + b) % n for a in range(n) for b in range(n)}
    return Groupoid(arrows, compose, tuple(f"g{a}" for a in range(n)))


def function_algebra(G: Groupoid, name: str = "") -> WeakHopf:
    """Commutative quantum groupoid of functions on ``G``."""
    G.validate()
    n = G.size
    mult = np.zeros((n, n, n), dtype=complex)
    for g in range(n):
        mult[g, g, g] = 1
    unit = np.ones(n, dtype=complex)
    star = np.eye(n, dtype=complex)
    comult = np.zeros((n * n, n), dtype=complex)
    for (a, b), c in G.compose.items():
        comult[a * n + b, c] = 1
    counit = np.zeros(n, dtype=complex)
    counit[G.units()] = 1
    S = np.zeros((n, n), dtype=complex)
    for g in range(n):
        S[G.inverse(g), g] = 1
    B = FiniteCStarAlgebra(mult, unit, star, [f"delta_{l}" for l in G.labels])
    return WeakHopf(B, comult, counit, S, name or "F(G)")


def groupoid_algebra(G: Groupoid, name: str = "") -> WeakHopf:
    """Cocommutative quantum groupoid ``C[G]``: the dual of the function algebra."""
    W = function_algebra(G).dual()
    W.algebra.basis_labels = list(G.labels)
    W.name = name or "C[G]"
    return W


def kz2() -> WeakHopf:
    return groupoid_algebra(cyclic_group(2), "kz2")


def fpn(n: int) -> WeakHopf:
    if not 1 <= n <= 4:
        raise ValueError("fpn is provided for 1 <= n <= 4")
    return function_algebra(pair_groupoid(n), f"fp{n}")


def fp2() -> WeakHopf:
    return fpn(2)


def gp2() -> WeakHopf:
    return groupoid_algebra(pair_groupoid(2), "gp2")


def trivial_group() -> Groupoid:
    return cyclic_group(1)


BUILTINS = {
    "kz2": kz2,
    "fp2": fp2,
    "gp2": gp2,
    "fp3": lambda: fpn(3),
    "fp4": lambda: fpn(4),
}
