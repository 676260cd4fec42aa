"""Graded-lexicographic monomial basis and the monomial vector map."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BasisOverflow, EmptyBatch, InvalidDimension, ShapeError

INT64_MAX = np.iinfo(np.int64).max
MAX_DEGREE = np.iinfo(np.uint8).max


def basis_size(d: int, n: int) -> int:
    """Number of monomials of degree <= n in d variables, binomial(d+n, n)."""
    _check_dn(d, n)
    size = math.comb(d + n, n)
    if size > INT64_MAX:
        raise BasisOverflow(f"basis size binomial({d}+{n}, {n}) exceeds the int64 range")
    return size


def _check_dn(d, n):
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidDimension(f"dimension d must be a positive integer, got {d!r}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise InvalidDimension(f"degree n must be a non-negative integer, got {n!r}")
    if n > MAX_DEGREE:
        raise InvalidDimension(f"degree n must be <= {MAX_DEGREE}, got {n}")


@dataclass(frozen=True)
class MonomialBasis:
    """Monomials of degree <= n in d variables, sorted by total degree then lex order.

    Within one degree, variable x1 is the most significant letter, so the
    degree-2 block for d=2 reads x1^2, x1*x2, x2^2.

    ``exponents`` is an (s, d) uint8 array. ``parent[i]`` and ``var[i]`` give,
    for every non-constant monomial, the lower-degree monomial it extends and
    the variable it is multiplied by; this lets :meth:`vectorize` run in O(s).
    """

    d: int
    n: int
    exponents: np.ndarray = field(repr=False)
    parent: np.ndarray = field(repr=False)
    var: np.ndarray = field(repr=False)
    blocks: tuple = field(repr=False)

    @property
    def size(self) -> int:
        return self.exponents.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1, dtype=np.int64)

    @property
    def indices(self) -> list[tuple[int, ...]]:
        return [tuple(int(e) for e in row) for row in self.exponents]

    def __len__(self):
        return self.size

    def vectorize(self, x) -> np.ndarray:
        return vectorize(x, self)

    def vectorize_batch(self, points) -> np.ndarray:
        return vectorize_batch(points, self)


def enumerate_basis(d: int, n: int) -> MonomialBasis:
    s = basis_size(d, n)
    exponents = np.zeros((s, d), dtype=np.uint8)
    parent = np.full(s, -1, dtype=np.int64)
    var = np.full(s, -1, dtype=np.int64)
    blocks = [(0, 1)]

    # a degree-t monomial is a sorted word of t variable letters; dropping the
    # last letter gives its parent in the degree-(t-1) block
    position = {(): 0}
    i = 1
    for t in range(1, n + 1):
        start = i
        for word in itertools.combinations_with_replacement(range(d), t):
            for letter in word:
                exponents[i, letter] += 1
            parent[i] = position[word[:-1]]
            var[i] = word[-1]
            position[word] = i
            i += 1
        blocks.append((start, i))
        # only the previous block is ever looked up as a parent
        position = {w: j for w, j in position.items() if len(w) == t}
    assert i == s
    for arr in (exponents, parent, var):
        arr.setflags(write=False)
    return MonomialBasis(d=d, n=n, exponents=exponents, parent=parent, var=var, blocks=tuple(blocks))


def vectorize(x, basis: MonomialBasis) -> np.ndarray:
    """Evaluate every basis monomial at the point ``x``; entry 0 is always 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != basis.d:
        raise ShapeError(f"expected a point with {basis.d} coordinates, got shape {x.shape}")
    return vectorize_batch(x[None, :], basis)[0]


def vectorize_batch(points, basis: MonomialBasis) -> np.ndarray:
    """Design matrix whose row i is ``vectorize(points[i])``; shape (k, s)."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1 and basis.d == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != basis.d:
        raise ShapeError(f"expected points of shape (k, {basis.d}), got {X.shape}")
    k = X.shape[0]
    if k == 0:
        raise EmptyBatch("cannot vectorize an empty batch of points")
    V = np.empty((k, basis.size))
    V[:, 0] = 1.0
    for start, stop in basis.blocks[1:]:
        V[:, start:stop] = V[:, basis.parent[start:stop]] * X[:, basis.var[start:stop]]
    return V
