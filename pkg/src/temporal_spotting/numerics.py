"""Dense numeric kernels, the Adam optimizer and a finite-difference checker.

Every array in the package is a float64 numpy array. Kernels here never mutate
their inputs; they return new arrays.
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError

DEFAULT_EPS = 1e-12


def as_float_array(values, name: str = "input") -> np.ndarray:
    """Promote to a float64 array and reject NaN/Inf."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains NaN or Inf")
    return arr


def softmax(v, axis: int = -1) -> np.ndarray:
    """
    Numerically stable softmax along ``axis``.

    Args:
        v: Logits. Must be non-empty and finite.
        axis: Axis that sums to one.

    Returns:
        Probabilities with the same shape as ``v``.

    Raises:
        ShapeError: If ``v`` is empty along ``axis``
        NumericError: If ``v`` contains NaN or Inf
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.size == 0 or arr.shape[axis] == 0:
        raise ShapeError("softmax of an empty vector")
    arr = as_float_array(arr, "softmax input")
    shifted = arr - arr.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(probs: np.ndarray, grad: np.ndarray, axis: int = -1) -> np.ndarray:
    """Gradient w.r.t. the logits given softmax output ``probs`` and upstream ``grad``."""
    return probs * (grad - (grad * probs).sum(axis=axis, keepdims=True))


def l2_normalize(v, eps: float = DEFAULT_EPS, axis: int = -1) -> np.ndarray:
    """
    Divide by the L2 norm along ``axis``, floored at ``eps``.

    A vector whose norm is below ``eps`` is scaled by 1/eps instead, so the
    zero vector maps to itself.
    """
    arr = np.asarray(v, dtype=np.float64)
    norms = np.sqrt((arr * arr).sum(axis=axis, keepdims=True))
    return arr / np.maximum(norms, eps)


def l2_normalize_backward(
    v: np.ndarray, grad: np.ndarray, eps: float = DEFAULT_EPS, axis: int = -1
) -> np.ndarray:
    """
    Gradient of :func:`l2_normalize` w.r.t. its input.

    Above the floor the Jacobian is (I - y yᵀ)/‖v‖; below it the map is the
    constant scaling 1/eps.
    """
    norms = np.sqrt((v * v).sum(axis=axis, keepdims=True))
    safe = np.maximum(norms, eps)
    y = v / safe
    projected = grad - y * (y * grad).sum(axis=axis, keepdims=True)
    return np.where(norms > eps, projected / safe, grad / eps)


def sigmoid(z) -> np.ndarray:
    """Logistic function in its tanh form, which cannot overflow."""
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


@dataclass(frozen=True)
class AdamHyper:
    """Adam step size and decay rates."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class AdamState:
    """First/second moments and step counter for one parameter array."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, params: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(params, dtype=np.float64), v=np.zeros_like(params, dtype=np.float64))


def adam_step(
    params: np.ndarray, grads: np.ndarray, state: AdamState, hyper: AdamHyper
) -> tuple[np.ndarray, AdamState]:
    """
    One bias-corrected Adam update, applied elementwise.

    Args:
        params: Current parameter values
        grads: Gradient of the loss w.r.t. ``params``
        state: Moments from the previous step
        hyper: Step size and decay rates

    Returns:
        Tuple of (updated params, updated state). Inputs are untouched.

    Raises:
        ShapeError: If params, grads and moments disagree in shape
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if not (params.shape == grads.shape == state.m.shape == state.v.shape):
        raise ShapeError(
            f"adam_step shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )

    t = state.t + 1
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads * grads
    m_hat = m / (1.0 - hyper.beta1**t)
    v_hat = v / (1.0 - hyper.beta2**t)
    updated = params - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return updated, AdamState(m=m, v=v, t=t)


@dataclass
class AdamOptimizer:
    """Adam over a dict of named parameter arrays, one :class:`AdamState` per name."""

    hyper: AdamHyper = field(default_factory=AdamHyper)
    states: dict[str, AdamState] = field(default_factory=dict)

    def step(
        self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float | None = None
    ) -> dict[str, np.ndarray]:
        """Return updated parameters; names are visited in ``params`` order."""
        hyper = self.hyper if lr is None else AdamHyper(lr, self.hyper.beta1, self.hyper.beta2, self.hyper.eps)
        updated = {}
        for name, value in params.items():
            state = self.states.get(name) or AdamState.zeros_like(value)
            updated[name], self.states[name] = adam_step(value, grads[name], state, hyper)
        return updated


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    Args:
        f: Scalar function of an array
        x: Point of evaluation (any shape)
        h: Step size

    Returns:
        Array shaped like ``x``

    Raises:
        NumericError: If any evaluation is non-finite
    """
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for j in range(flat.size):
        original = flat[j]
        flat[j] = original + h
        plus = float(f(x))
        flat[j] = original - h
        minus = float(f(x))
        flat[j] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NumericError(f"non-finite evaluation at coordinate {j}")
        out[j] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic, numeric) -> float:
    """‖a − n‖ / (‖a‖ + ‖n‖); zero when both are (numerically) zero."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    scale = np.linalg.norm(a) + np.linalg.norm(n)
    if scale < 1e-10:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)
