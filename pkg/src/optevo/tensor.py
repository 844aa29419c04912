"""Dense float64 buffers, the elementwise op set, and a splittable RNG.

Tensors are plain numpy float64 arrays. Arithmetic is strictly elementwise:
operands must have identical shapes, except that a true scalar (0-d array or
Python float) may combine with any tensor. NaN and Inf are representable and
propagate; penalizing them is the fitness layer's job, not this one's.
"""

from __future__ import annotations

import zlib
from enum import Enum

import numpy as np

Tensor = np.ndarray


class ShapeMismatchError(ValueError):
    pass


def tensor(values) -> Tensor:
    """Build a float64 tensor from nested lists / arrays / scalars."""
    return np.asarray(values, dtype=np.float64)


def zeros_like(a: Tensor) -> Tensor:
    return np.zeros_like(np.asarray(a, dtype=np.float64))


def _is_scalar(a: Tensor) -> bool:
    return np.ndim(a) == 0


def check_binary_shapes(a: Tensor, b: Tensor) -> None:
    """Exact shape agreement, or one operand a true scalar."""
    if _is_scalar(a) or _is_scalar(b):
        return
    if np.shape(a) != np.shape(b):
        raise ShapeMismatchError(
            f"shape mismatch: {np.shape(a)} vs {np.shape(b)}"
        )


def divide_no_nan(a: Tensor, b: Tensor) -> Tensor:
    """a / b elementwise, with 0 wherever the denominator is exactly 0."""
    check_binary_shapes(a, b)
    a2, b2 = np.broadcast_arrays(tensor(a), tensor(b))
    out = np.zeros(b2.shape, dtype=np.float64)
    with np.errstate(all="ignore"):
        np.divide(a2, b2, out=out, where=(b2 != 0))
    return out


def sign(a: Tensor) -> Tensor:
    """Elementwise sign in {-1, 0, +1}; sign(0) = 0."""
    return np.sign(tensor(a))


class OpCode(Enum):
    ADD = "add"
    SUBTRACT = "subtract"
    MULTIPLY = "multiply"
    POW = "pow"
    SQUARE = "square"
    DIVIDE_NO_NAN = "divide_no_nan"
    SQRT = "sqrt"
    NEGATIVE = "negative"
    SIGN = "sign"


ARITY = {
    OpCode.ADD: 2,
    OpCode.SUBTRACT: 2,
    OpCode.MULTIPLY: 2,
    OpCode.POW: 2,
    OpCode.SQUARE: 1,
    OpCode.DIVIDE_NO_NAN: 2,
    OpCode.SQRT: 1,
    OpCode.NEGATIVE: 1,
    OpCode.SIGN: 1,
}


def _sqrt(a: Tensor) -> Tensor:
    # sqrt of a negative yields NaN (propagated), not an exception
    with np.errstate(all="ignore"):
        return np.sqrt(tensor(a))


def _pow(a: Tensor, b: Tensor) -> Tensor:
    # complex/undefined results (negative base, fractional exponent) yield NaN
    with np.errstate(all="ignore"):
        return np.power(tensor(a), tensor(b))


def _add(a, b):
    return tensor(a) + tensor(b)


def _subtract(a, b):
    return tensor(a) - tensor(b)


def _multiply(a, b):
    return tensor(a) * tensor(b)


def _square(a):
    return np.square(tensor(a))


def _negative(a):
    return np.negative(tensor(a))


_IMPL = {
    OpCode.ADD: _add,
    OpCode.SUBTRACT: _subtract,
    OpCode.MULTIPLY: _multiply,
    OpCode.POW: _pow,
    OpCode.SQUARE: _square,
    OpCode.DIVIDE_NO_NAN: divide_no_nan,
    OpCode.SQRT: _sqrt,
    OpCode.NEGATIVE: _negative,
    OpCode.SIGN: sign,
}


def elementwise(op: OpCode, *args: Tensor) -> Tensor:
    """Apply one op from the shared operation set, with shape checking."""
    if len(args) != ARITY[op]:
        raise ValueError(f"{op.value} expects {ARITY[op]} args, got {len(args)}")
    if ARITY[op] == 2:
        check_binary_shapes(args[0], args[1])
    with np.errstate(all="ignore"):
        return _IMPL[op](*args)


def _tag32(tag) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    return int(tag) & 0xFFFFFFFF


class Rng:
    """Deterministic, splittable random stream (counter-based Philox).

    The same seed always reproduces the same stream, and children derived
    via ``child(...)`` are statistically independent of the parent and of
    each other by construction of the underlying seed sequence.
    """

    def __init__(self, seed: int, _key: tuple = ()):
        self.seed = int(seed)
        self._key = tuple(_key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def child(self, *tags) -> "Rng":
        """Derive an independent stream named by the given tags."""
        return Rng(self.seed, self._key + tuple(_tag32(t) for t in tags))

    # thin passthroughs for the handful of draws the codebase uses
    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def random(self, size=None):
        return self.generator.random(size=size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size=size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size=size)

    def shuffle(self, a):
        self.generator.shuffle(a)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self):
        return f"Rng(seed={self.seed}, key={self._key})"
