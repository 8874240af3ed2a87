"""Finite block models of locally C*-algebras and of C*_E(D).

A :class:`BlockAlgebra` is a finite product of full matrix algebras
``M_{m_1} x ... x M_{m_L}``.  The level-``alpha`` seminorm is the largest
operator norm among the first ``alpha`` blocks, so elements supported on
trailing blocks form the seminorm kernel at that level.

A :class:`QuantizedDomain` is ``C^N`` with a nested flag of coordinate
subspaces ``H_1 < ... < H_L = C^N``.  Operators that commute with every
flag projection are exactly the block-diagonal ones with respect to the
successive differences; these are wrapped as :class:`FlagOperator`.

Vector-space coordinates of an algebra element are the concatenation of its
blocks flattened row-major.  The basis is the corresponding list of matrix
units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    AlgebraMismatchError,
    InvalidSpecError,
    LevelError,
    NotInCEDError,
    ShapeError,
)

DEFAULT_TOL = 1e-9


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def _opnorm(mat):
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


# --------------------------------------------------------------------------
# Block algebras
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=True)
class BlockAlgebra:
    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(self.block_dims)
        if len(dims) == 0:
            raise InvalidSpecError("block_dims must be non-empty")
        for m in dims:
            if int(m) != m or m < 1:
                raise InvalidSpecError(f"block dimension {m!r} is not a positive integer")
        object.__setattr__(self, "block_dims", tuple(int(m) for m in dims))

    @property
    def level_count(self) -> int:
        return len(self.block_dims)

    @property
    def vec_dim(self) -> int:
        return sum(m * m for m in self.block_dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for m in self.block_dims:
            out.append(out[-1] + m * m)
        return tuple(out)

    def check_level(self, alpha: int) -> int:
        if not 1 <= alpha <= self.level_count:
            raise LevelError(f"level {alpha} outside 1..{self.level_count}")
        return alpha

    # basis bookkeeping -----------------------------------------------------

    def basis_index(self, block: int, row: int, col: int) -> int:
        m = self.block_dims[block]
        if not (0 <= row < m and 0 <= col < m):
            raise IndexError((block, row, col))
        return self.offsets[block] + row * m + col

    def basis_label(self, index: int) -> tuple[int, int, int]:
        """Inverse of :meth:`basis_index`: ``(block, row, col)`` (0-based)."""
        if not 0 <= index < self.vec_dim:
            raise IndexError(index)
        block = int(np.searchsorted(self.offsets, index, side="right")) - 1
        m = self.block_dims[block]
        row, col = divmod(index - self.offsets[block], m)
        return block, row, col

    @cached_property
    def block_of(self) -> np.ndarray:
        """Block number (0-based) of every basis index."""
        return np.repeat(np.arange(self.level_count), [m * m for m in self.block_dims])

    def level_mask(self, alpha: int) -> np.ndarray:
        """Boolean mask of coordinates belonging to blocks ``1..alpha``."""
        self.check_level(alpha)
        return self.block_of < alpha

    @cached_property
    def star_perm(self) -> np.ndarray:
        """``e_i^* = e_{star_perm[i]}`` for the matrix-unit basis."""
        perm = np.empty(self.vec_dim, dtype=int)
        for i in range(self.vec_dim):
            b, r, c = self.basis_label(i)
            perm[i] = self.basis_index(b, c, r)
        perm.setflags(write=False)
        return perm

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """Real tensor ``C`` with ``e_a e_b = sum_c C[a, b, c] e_c``."""
        d = self.vec_dim
        C = np.zeros((d, d, d))
        for a in range(d):
            ba, ra, ca = self.basis_label(a)
            m = self.block_dims[ba]
            for cb in range(m):
                b = self.basis_index(ba, ca, cb)
                C[a, b, self.basis_index(ba, ra, cb)] = 1.0
        C.setflags(write=False)
        return C

    @cached_property
    def unit_coords(self) -> np.ndarray:
        u = np.concatenate([np.eye(m).ravel() for m in self.block_dims]).astype(complex)
        u.setflags(write=False)
        return u

    # coordinate calculus ------------------------------------------------------

    def split(self, coords) -> list[np.ndarray]:
        coords = np.asarray(coords)
        return [
            coords[..., self.offsets[i] : self.offsets[i + 1]].reshape(
                coords.shape[:-1] + (m, m)
            )
            for i, m in enumerate(self.block_dims)
        ]

    def join(self, blocks) -> np.ndarray:
        lead = np.asarray(blocks[0]).shape[:-2]
        return np.concatenate(
            [np.asarray(b, dtype=complex).reshape(lead + (-1,)) for b in blocks], axis=-1
        )

    def mul_coords(self, x, y) -> np.ndarray:
        """Coordinates of the product; broadcasts over leading axes."""
        return self.join([bx @ by for bx, by in zip(self.split(x), self.split(y))])

    def star_coords(self, x) -> np.ndarray:
        return self.join([np.conj(np.swapaxes(b, -1, -2)) for b in self.split(x)])

    def left_mult_matrix(self, x) -> np.ndarray:
        """``L`` with ``L @ coords(y) == coords(x y)``."""
        return np.einsum("a,abc->cb", np.asarray(x, dtype=complex), self.structure_constants)

    def seminorm_coords(self, x, alpha: int) -> float:
        self.check_level(alpha)
        return max(_opnorm(b) for b in self.split(x)[:alpha])

    # element constructors -----------------------------------------------------

    def element(self, blocks) -> "AlgebraElement":
        return AlgebraElement(self, tuple(_frozen(b) for b in blocks))

    def from_coords(self, coords) -> "AlgebraElement":
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (self.vec_dim,):
            raise ShapeError(f"expected {self.vec_dim} coordinates, got {coords.shape}")
        return self.element(self.split(coords))

    def basis_element(self, index: int) -> "AlgebraElement":
        c = np.zeros(self.vec_dim, dtype=complex)
        c[index] = 1.0
        return self.from_coords(c)

    def unit(self) -> "AlgebraElement":
        return self.from_coords(self.unit_coords)

    def zero(self) -> "AlgebraElement":
        return self.from_coords(np.zeros(self.vec_dim))

    def random_coords(self, rng, shape=()) -> np.ndarray:
        size = tuple(shape) + (self.vec_dim,)
        return rng.standard_normal(size) + 1j * rng.standard_normal(size)

    def to_json(self) -> dict:
        return {"blocks": list(self.block_dims)}

    @classmethod
    def from_json(cls, obj) -> "BlockAlgebra":
        return make_block_algebra(obj["blocks"])


def make_block_algebra(block_dims: Sequence[int]) -> BlockAlgebra:
    """Build the algebra ``M_{m_1} x ... x M_{m_L}``.

    :param block_dims: sizes ``m_i`` of the square blocks, in level order.
    :raises InvalidSpecError: for an empty list or a non-positive entry.
    """
    try:
        dims = tuple(block_dims)
    except TypeError as exc:
        raise InvalidSpecError("block_dims must be a sequence") from exc
    return BlockAlgebra(dims)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    parent: BlockAlgebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != self.parent.level_count:
            raise ShapeError("number of blocks does not match the algebra")
        for b, m in zip(self.blocks, self.parent.block_dims):
            if b.shape != (m, m):
                raise ShapeError(f"block of shape {b.shape}, expected {(m, m)}")

    @property
    def coords(self) -> np.ndarray:
        return self.parent.join(self.blocks)

    def _same(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.parent != self.parent:
            raise AlgebraMismatchError("elements belong to different algebras")
        return other

    def __add__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return self.parent.element([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return self.parent.element([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return self.parent.element([-a for a in self.blocks])

    def __mul__(self, scalar):
        if isinstance(scalar, AlgebraElement):
            return self @ scalar
        return self.parent.element([scalar * a for a in self.blocks])

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return self.parent.element([a @ b for a, b in zip(self.blocks, other.blocks)])

    def adjoint(self) -> "AlgebraElement":
        return self.parent.element([a.conj().T for a in self.blocks])

    def allclose(self, other, atol=1e-12) -> bool:
        other = self._same(other)
        return all(np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.blocks, other.blocks))

    def to_json(self) -> dict:
        from .serialize import complex_to_json

        return {"blocks": [complex_to_json(b) for b in self.blocks]}

    def __repr__(self):
        return f"AlgebraElement(block_dims={self.parent.block_dims})"


def element_from_json(algebra: BlockAlgebra, obj) -> AlgebraElement:
    from .serialize import complex_from_json

    return algebra.element([complex_from_json(b) for b in obj["blocks"]])


# --------------------------------------------------------------------------
# Local order and seminorms
# --------------------------------------------------------------------------


def truncate(a: AlgebraElement, alpha: int) -> AlgebraElement:
    """Zero every block after ``alpha``; the lift of the quotient map to ``A``."""
    a.parent.check_level(alpha)
    return a.parent.element(
        [b if i < alpha else np.zeros_like(b) for i, b in enumerate(a.blocks)]
    )


def seminorm(a: AlgebraElement, alpha: int) -> float:
    """``p_alpha(a)``: the largest spectral norm among blocks ``1..alpha``."""
    a.parent.check_level(alpha)
    return max(_opnorm(b) for b in a.blocks[:alpha])


def local_equal(a: AlgebraElement, b: AlgebraElement, alpha: int, tol=DEFAULT_TOL) -> bool:
    return seminorm(a - b, alpha) <= tol


def is_local_selfadjoint(a: AlgebraElement, alpha: int, tol=DEFAULT_TOL) -> bool:
    return seminorm(a - a.adjoint(), alpha) <= tol


def is_local_positive(a: AlgebraElement, alpha: int, tol=DEFAULT_TOL) -> bool:
    """Leading ``alpha`` blocks Hermitian with spectrum above ``-tol(1 + p_alpha(a))``."""
    if not is_local_selfadjoint(a, alpha, tol):
        return False
    floor = -tol * (1.0 + seminorm(a, alpha))
    for b in a.blocks[:alpha]:
        if np.linalg.eigvalsh((b + b.conj().T) / 2).min() < floor:
            return False
    return True


def local_positive_levels(a: AlgebraElement, tol=DEFAULT_TOL) -> list[int]:
    """All levels at which ``a`` is local positive (the existential form)."""
    return [al for al in range(1, a.parent.level_count + 1) if is_local_positive(a, al, tol)]


def is_alpha_symmetric(elems: Sequence[AlgebraElement], alpha: int, tol=DEFAULT_TOL) -> bool:
    """``a_p^* = a_{k+1-p}`` modulo the level-``alpha`` kernel for ``p <= m``."""
    if len(elems) < 1:
        raise ShapeError("tuple must contain at least one element")
    parent = elems[0].parent
    for e in elems:
        if e.parent != parent:
            raise AlgebraMismatchError("tuple mixes algebras")
    parent.check_level(alpha)
    k = len(elems)
    m = (k + 1) // 2
    return all(
        seminorm(elems[p].adjoint() - elems[k - 1 - p], alpha) <= tol for p in range(m)
    )


# --------------------------------------------------------------------------
# Quantized domains and C*_E(D)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantizedDomain:
    dim: int
    flag: tuple[int, ...]

    def __post_init__(self):
        flag = tuple(int(x) for x in self.flag)
        if self.dim < 0:
            raise InvalidSpecError("dimension must be non-negative")
        if len(flag) == 0:
            raise InvalidSpecError("flag must have at least one level")
        if any(b < a for a, b in zip(flag, flag[1:])) or (flag and flag[0] < 0):
            raise InvalidSpecError(f"flag {flag} is not nondecreasing")
        if flag[-1] != self.dim:
            raise InvalidSpecError(f"last flag entry {flag[-1]} must equal dim {self.dim}")
        object.__setattr__(self, "flag", flag)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def level_count(self) -> int:
        return len(self.flag)

    def check_level(self, ell: int) -> int:
        if not 1 <= ell <= self.level_count:
            raise LevelError(f"level {ell} outside 1..{self.level_count}")
        return ell

    def projection(self, ell: int) -> np.ndarray:
        self.check_level(ell)
        p = np.zeros((self.dim, self.dim))
        p[: self.flag[ell - 1], : self.flag[ell - 1]] = np.eye(self.flag[ell - 1])
        return p

    @cached_property
    def level_of(self) -> np.ndarray:
        """Smallest level (1-based) whose subspace contains each coordinate."""
        return np.searchsorted(np.array(self.flag), np.arange(self.dim), side="right") + 1

    def slices(self) -> list[slice]:
        """Coordinate ranges of the successive differences ``H_l - H_{l-1}``."""
        edges = (0,) + self.flag
        return [slice(edges[i], edges[i + 1]) for i in range(self.level_count)]

    def to_json(self) -> dict:
        return {"dim": self.dim, "flag": list(self.flag)}

    @classmethod
    def from_json(cls, obj) -> "QuantizedDomain":
        return make_domain(obj["dim"], obj["flag"])


def make_domain(dim: int, flag: Sequence[int]) -> QuantizedDomain:
    """Quantized domain ``C^dim`` with subspaces spanned by leading coordinates.

    Codomain flags of maps are required to be strictly increasing; dilation
    spaces may repeat a dimension when two levels collapse.
    """
    return QuantizedDomain(int(dim), tuple(flag))


def flag_deviation(domain: QuantizedDomain, matrix, level: int) -> float:
    """Frobenius mass of ``[T, P_level]``."""
    d = domain.flag[level - 1]
    matrix = np.asarray(matrix)
    return float(np.hypot(np.linalg.norm(matrix[:d, d:]), np.linalg.norm(matrix[d:, :d])))


def commutes_with_flag(domain: QuantizedDomain, matrix, tol=DEFAULT_TOL) -> int | None:
    """First level at which ``matrix`` fails to commute with the flag, else None."""
    for ell in range(1, domain.level_count + 1):
        if flag_deviation(domain, matrix, ell) > tol:
            return ell
    return None


@dataclass(frozen=True, eq=False)
class FlagOperator:
    domain: QuantizedDomain
    matrix: np.ndarray

    def seminorm(self, ell: int) -> float:
        """``||T|_{H_ell}||``, the norm of the leading corner."""
        self.domain.check_level(ell)
        d = self.domain.flag[ell - 1]
        return _opnorm(self.matrix[:d, :d])

    def _same(self, other):
        if not isinstance(other, FlagOperator):
            return NotImplemented
        if other.domain != self.domain:
            raise AlgebraMismatchError("operators act on different domains")
        return other

    def __add__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return FlagOperator(self.domain, _frozen(self.matrix + other.matrix))

    def __sub__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return FlagOperator(self.domain, _frozen(self.matrix - other.matrix))

    def __mul__(self, scalar):
        if isinstance(scalar, FlagOperator):
            return self @ scalar
        return FlagOperator(self.domain, _frozen(scalar * self.matrix))

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return FlagOperator(self.domain, _frozen(self.matrix @ other.matrix))

    def adjoint(self) -> "FlagOperator":
        return FlagOperator(self.domain, _frozen(self.matrix.conj().T))

    def __repr__(self):
        return f"FlagOperator(dim={self.domain.dim}, flag={self.domain.flag})"


def make_flag_operator(domain: QuantizedDomain, matrix, tol=DEFAULT_TOL) -> FlagOperator:
    """Validate membership in C*_E(D) and wrap.

    :raises NotInCEDError: if ``matrix`` moves mass across a flag level.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (domain.dim, domain.dim):
        raise ShapeError(f"expected {(domain.dim, domain.dim)} matrix, got {matrix.shape}")
    for ell in range(1, domain.level_count + 1):
        dev = flag_deviation(domain, matrix, ell)
        if dev > tol:
            raise NotInCEDError(ell, dev)
    return FlagOperator(domain, _frozen(matrix))


def identity_operator(domain: QuantizedDomain) -> FlagOperator:
    return FlagOperator(domain, _frozen(np.eye(domain.dim)))
