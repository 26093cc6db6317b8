"""Dense float64 arithmetic, seeded RNG, and a finite-difference gradient oracle.

Everything downstream (losses, optimizers, models) builds on these few
primitives. All arrays are 64-bit floats; matrices are 2-D row-major
ndarrays, vectors are 1-D.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "matmul",
    "l2_norm",
    "sigmoid",
    "tanh",
    "finite_difference_gradient",
    "flatten_arrays",
    "unflatten_arrays",
    "SeededRng",
]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of two 2-D arrays, with an explicit shape check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D arrays, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def l2_norm(v: np.ndarray) -> float:
    """Euclidean norm sqrt(sum v_i^2) of a vector (any shape is flattened)."""
    return float(np.sqrt(np.sum(np.square(np.asarray(v, dtype=np.float64)))))


def sigmoid(x):
    """Logistic function, sign-split so exp never overflows.

    x >= 0: 1 / (1 + e^-x);  x < 0: e^x / (1 + e^x). Output in (0, 1).
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    return float(out) if out.ndim == 0 else out


def tanh(x):
    """Hyperbolic tangent; numpy's implementation is stable for all finite x."""
    out = np.tanh(np.asarray(x, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def finite_difference_gradient(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a 1-D parameter vector.

    Used throughout the test suite as the independent oracle for analytic
    gradients. Raises if f evaluates non-finite at any probe, naming the
    offending coordinate.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        probe = theta.copy()
        probe[i] = theta[i] + h
        f_plus = float(f(probe))
        probe[i] = theta[i] - h
        f_minus = float(f(probe))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError(f"non-finite function value at coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def flatten_arrays(arrays: dict[str, np.ndarray]) -> tuple[np.ndarray, list[tuple[str, tuple[int, ...]]]]:
    """Concatenate a name->array dict into one vector plus a shape layout.

    Iteration follows the dict's insertion order, so a round trip through
    unflatten_arrays is exact as long as the same dict is used.
    """
    layout = [(name, arr.shape) for name, arr in arrays.items()]
    if not layout:
        return np.zeros(0), layout
    flat = np.concatenate([np.ravel(arr) for arr in arrays.values()])
    return flat.astype(np.float64), layout


def unflatten_arrays(flat: np.ndarray, layout: list[tuple[str, tuple[int, ...]]]) -> dict[str, np.ndarray]:
    """Inverse of flatten_arrays."""
    out: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in layout:
        size = int(np.prod(shape)) if shape else 1
        out[name] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    if offset != flat.size:
        raise ValueError(f"layout covers {offset} values, vector has {flat.size}")
    return out


class SeededRng:
    """Deterministic random stream backed by the PCG64 generator.

    PCG64 is a published permuted-congruential generator with a fixed,
    platform-independent bit stream, so the same seed reproduces the same
    draws everywhere. Child streams are derived through SeedSequence spawn
    keys, which gives statistically independent substreams that depend only
    on (root seed, path), never on draw order.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._path = _path
        seq = np.random.SeedSequence(self.seed, spawn_key=_path)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def child(self, key: int) -> "SeededRng":
        """Independent substream identified by an integer key."""
        return SeededRng(self.seed, self._path + (int(key),))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, path={self._path})"
