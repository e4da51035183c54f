"""Truncated tensor algebra and path signatures.

A truncated tensor holds one dense coefficient block per level 0..order over
a d-letter alphabet. Level k is a flat array of d**k floats in lexicographic
word order: the word (i1, .., ik), letters in 1..d, sits at flat index
sum_j (i_j - 1) * d**(k - j). Concatenating two words is then exactly the
row-major outer product of their blocks, which is what the product below
exploits.

The signature of a piecewise-linear path is the left-to-right product of the
tensor exponentials of its segment increments; its level-k coefficient for a
word is the k-fold iterated integral of the corresponding coordinate
differentials over the ordered simplex.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

Word = tuple[int, ...]


def tensor_dim(dim: int, order: int) -> int:
    """Total coefficient count sum_{k=0..order} dim**k."""
    if dim < 1:
        raise ValueError(f"alphabet size must be >= 1, got {dim}")
    if order < 0:
        raise ValueError(f"truncation order must be >= 0, got {order}")
    return sum(dim**k for k in range(order + 1))


def word_index(word: Word, dim: int) -> int:
    """Flat position of a word inside its level block."""
    idx = 0
    for letter in word:
        if not 1 <= letter <= dim:
            raise ValueError(f"letter {letter} outside alphabet 1..{dim}")
        idx = idx * dim + (letter - 1)
    return idx


@dataclass(frozen=True)
class TruncatedTensor:
    """Coefficients of one element of the truncated tensor algebra.

    levels[k] is the flat level-k block (length dim**k, lexicographic word
    order). Instances are treated as immutable values; operations return new
    instances.
    """

    dim: int
    order: int
    levels: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.levels) != self.order + 1:
            raise ValueError(
                f"expected {self.order + 1} level blocks, got {len(self.levels)}"
            )
        for k, block in enumerate(self.levels):
            if block.shape != (self.dim**k,):
                raise ValueError(
                    f"level {k} block has shape {block.shape}, "
                    f"expected ({self.dim ** k},)"
                )

    def coefficient(self, word: Word) -> float:
        """Coefficient of a single word (the empty word is level 0)."""
        word = tuple(word)
        if len(word) > self.order:
            raise ValueError(
                f"word {word} longer than truncation order {self.order}"
            )
        return float(self.levels[len(word)][word_index(word, self.dim)])


def _check_same_shape(a: TruncatedTensor, b: TruncatedTensor) -> None:
    if a.dim != b.dim or a.order != b.order:
        raise ValueError(
            f"mismatched operands: dim/order ({a.dim}, {a.order}) "
            f"vs ({b.dim}, {b.order})"
        )


def unit_tensor(dim: int, order: int) -> TruncatedTensor:
    """Multiplicative unit: 1 at level 0, zero everywhere else."""
    tensor_dim(dim, order)  # argument validation
    levels = [np.zeros(dim**k) for k in range(order + 1)]
    levels[0][0] = 1.0
    return TruncatedTensor(dim, order, tuple(levels))


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product.

    Level k of the result is sum_{i+j=k} a_i (x) b_j; levels beyond the
    truncation order are discarded. Associative up to rounding; the unit is
    a two-sided identity exactly.
    """
    _check_same_shape(a, b)
    levels = []
    for k in range(a.order + 1):
        acc = np.zeros(a.dim**k)
        for i in range(k + 1):
            acc += np.multiply.outer(a.levels[i], b.levels[k - i]).ravel()
        levels.append(acc)
    return TruncatedTensor(a.dim, a.order, tuple(levels))


def tensor_exp(increment: np.ndarray, order: int) -> TruncatedTensor:
    """Tensor exponential of a level-1 increment.

    Level k holds every k-letter product of increment entries divided by k!,
    so the coefficient of (i1..ik) is prod_j increment[i_j - 1] / k!.
    """
    delta = np.asarray(increment, dtype=float)
    if delta.ndim != 1 or delta.size == 0:
        raise ValueError("increment must be a nonempty 1-d array")
    if not np.all(np.isfinite(delta)):
        raise ValueError("increment entries must be finite")
    tensor_dim(delta.size, order)
    levels = [np.ones(1)]
    for k in range(1, order + 1):
        levels.append(np.multiply.outer(levels[k - 1], delta).ravel() / k)
    return TruncatedTensor(delta.size, order, tuple(levels))


def tensor_inverse(a: TruncatedTensor) -> TruncatedTensor:
    """Multiplicative inverse of a tensor whose level-0 entry is 1.

    Writing a = 1 + x with x supported on levels >= 1, x is nilpotent under
    truncation, so the geometric series sum_m (-x)^m terminates at the
    truncation order and is the exact inverse.
    """
    if abs(float(a.levels[0][0]) - 1.0) > 1e-12:
        raise ValueError(
            "tensor is not invertible by the truncated series: "
            f"level-0 entry is {float(a.levels[0][0])!r}, expected 1"
        )
    neg_x_levels = [np.zeros(1)] + [-a.levels[k] for k in range(1, a.order + 1)]
    neg_x = TruncatedTensor(a.dim, a.order, tuple(neg_x_levels))
    result = unit_tensor(a.dim, a.order)
    power = unit_tensor(a.dim, a.order)
    for _ in range(a.order):
        power = tensor_mul(power, neg_x)
        result = TruncatedTensor(
            a.dim,
            a.order,
            tuple(r + p for r, p in zip(result.levels, power.levels)),
        )
    return result


def path_signature(points: np.ndarray, order: int) -> TruncatedTensor:
    """Truncated signature of the piecewise-linear path through `points`.

    Computed as the left-to-right product of segment exponentials. A single
    point is the empty path, whose signature is the unit. The level-1 block
    is written directly as points[-1] - points[0]: that is its exact value,
    which the floating-point fold reproduces only to rounding.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise ValueError("points must be a nonempty (n_points, dim) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("path points must be finite")
    dim = pts.shape[1]
    if pts.shape[0] == 1:
        return unit_tensor(dim, order)
    increments = np.diff(pts, axis=0)
    sig = tensor_exp(increments[0], order)
    for delta in increments[1:]:
        sig = tensor_mul(sig, tensor_exp(delta, order))
    if order >= 1:
        levels = list(sig.levels)
        levels[1] = pts[-1] - pts[0]
        sig = TruncatedTensor(dim, order, tuple(levels))
    return sig


def feature_vector(sig: TruncatedTensor) -> np.ndarray:
    """Levels 1..order concatenated (level 0 dropped: it is identically 1)."""
    if sig.order == 0:
        return np.zeros(0)
    return np.concatenate(sig.levels[1:])


def shuffle_product(u: Word, v: Word) -> list[Word]:
    """All interleavings of u and v preserving each word's internal order,
    with multiplicity (the list has C(|u|+|v|, |u|) entries)."""
    return list(_shuffle(tuple(u), tuple(v)))


@lru_cache(maxsize=None)
def _shuffle(u: Word, v: Word) -> tuple[Word, ...]:
    if not u:
        return (v,)
    if not v:
        return (u,)
    head_u = tuple((u[0],) + w for w in _shuffle(u[1:], v))
    head_v = tuple((v[0],) + w for w in _shuffle(u, v[1:]))
    return head_u + head_v


def _batch_exp(delta: np.ndarray, order: int) -> list[np.ndarray]:
    n = delta.shape[0]
    levels = [np.ones((n, 1))]
    for k in range(1, order + 1):
        prev = levels[k - 1]
        levels.append(
            (prev[:, :, None] * delta[:, None, :]).reshape(n, -1) / k
        )
    return levels


def _batch_mul(
    a: list[np.ndarray], b: list[np.ndarray], order: int
) -> list[np.ndarray]:
    n = a[0].shape[0]
    out = []
    for k in range(order + 1):
        acc = np.zeros((n, a[k].shape[1]))
        for i in range(k + 1):
            acc += (a[i][:, :, None] * b[k - i][:, None, :]).reshape(n, -1)
        out.append(acc)
    return out


def signature_feature_matrix(batch_points: np.ndarray, order: int) -> np.ndarray:
    """Feature vectors (levels 1..order) for a batch of equal-length paths.

    batch_points has shape (n_paths, n_points, dim). Row i equals
    feature_vector(path_signature(batch_points[i], order)): the batched fold
    performs the same scalar operations in the same order, so the two routes
    agree bitwise.
    """
    pts = np.asarray(batch_points, dtype=float)
    if pts.ndim != 3 or pts.shape[1] == 0 or pts.shape[2] == 0:
        raise ValueError(
            "batch must be a nonempty (n_paths, n_points, dim) array"
        )
    if not np.all(np.isfinite(pts)):
        raise ValueError("path points must be finite")
    n, npts, dim = pts.shape
    width = tensor_dim(dim, order) - 1
    if n == 0:
        return np.zeros((0, width))
    if npts == 1 or order == 0:
        return np.zeros((n, width))
    deltas = np.diff(pts, axis=1)
    levels = _batch_exp(deltas[:, 0, :], order)
    for s in range(1, npts - 1):
        levels = _batch_mul(levels, _batch_exp(deltas[:, s, :], order), order)
    levels[1] = pts[:, -1, :] - pts[:, 0, :]
    return np.concatenate(levels[1:], axis=1)
