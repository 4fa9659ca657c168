"""Dense float64 tensors with reverse-mode gradients."""

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions.errors import ContractError, DimensionError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disables recording for the current thread."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sums ``grad`` down to ``shape`` after a broadcasting op."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense real array with an optional gradient slot.

    Operations on tensors that require gradients are recorded; ``backward`` walks the
    recorded graph in reverse. Gradients accumulate into ``grad`` of leaf tensors
    across calls until they are reset with ``zero_grad``.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward", "_op")

    def __init__(
        self,
        data: Union[np.ndarray, float, Sequence],
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.data = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = ""

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        parents: Tuple["Tensor", ...],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        out._op = op
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @staticmethod
    def lift(value: Union["Tensor", np.ndarray, float]) -> "Tensor":
        if isinstance(value, Tensor):
            return value
        return Tensor(value)

    # -- inspection -------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # -- reverse pass -----------------------------------------------------

    def backward(self) -> None:
        """Accumulates d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if self.ndim != 0:
            raise ContractError(f"backward needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise ContractError("loss was not computed from any tensor that requires grad")

        order: List[Tensor] = []
        seen = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

        grads = {id(self): np.ones((), dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -- elementwise arithmetic -------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = Tensor.lift(other)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor._from_op(self.data + other.data, (self, other), backward, "add")

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor._from_op(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other) -> "Tensor":
        return self + (-Tensor.lift(other))

    def __rsub__(self, other) -> "Tensor":
        return Tensor.lift(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = Tensor.lift(other)
        a, b = self, other

        def backward(g):
            ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
            gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
            return ga, gb

        return Tensor._from_op(a.data * b.data, (a, b), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "Tensor":
        if isinstance(other, Tensor):
            raise ContractError("division is only defined by constants")
        return self * (1.0 / np.asarray(other, dtype=np.float64))

    def square(self) -> "Tensor":
        x = self.data
        return Tensor._from_op(x * x, (self,), lambda g: (2.0 * x * g,), "square")

    def relu(self) -> "Tensor":
        mask = self.data > 0
        return Tensor._from_op(self.data * mask, (self,), lambda g: (g * mask,), "relu")

    # -- linear algebra and reductions ------------------------------------

    def __matmul__(self, other: "Tensor") -> "Tensor":
        other = Tensor.lift(other)
        if self.ndim != 2 or other.ndim != 2:
            raise DimensionError("matmul is defined for 2-D operands only")
        if self.shape[1] != other.shape[0]:
            raise DimensionError(
                f"matmul inner axis mismatch: {self.shape[1]} vs {other.shape[0]}"
            )
        a, b = self, other

        def backward(g):
            ga = g @ b.data.T if a.requires_grad else None
            gb = a.data.T @ g if b.requires_grad else None
            return ga, gb

        return Tensor._from_op(a.data @ b.data, (a, b), backward, "matmul")

    @property
    def T(self) -> "Tensor":
        if self.ndim != 2:
            raise DimensionError("transpose is defined for 2-D tensors only")
        return Tensor._from_op(self.data.T, (self,), lambda g: (g.T,), "transpose")

    def sum(self) -> "Tensor":
        shape = self.shape
        return Tensor._from_op(
            np.asarray(self.data.sum()),
            (self,),
            lambda g: (np.broadcast_to(g, shape).copy(),),
            "sum",
        )

    def mean(self) -> "Tensor":
        return self.sum() / float(self.size)

    def reshape(self, *shape: int) -> "Tensor":
        original = self.shape
        return Tensor._from_op(
            self.data.reshape(*shape), (self,), lambda g: (g.reshape(original),), "reshape"
        )

    def __getitem__(self, index) -> "Tensor":
        original = self.shape

        def backward(g):
            full = np.zeros(original, dtype=np.float64)
            np.add.at(full, index, g)
            return (full,)

        return Tensor._from_op(self.data[index], (self,), backward, "getitem")
