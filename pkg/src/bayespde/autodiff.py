"""Reverse-mode differentiation of scalar functionals of network outputs.

``param_gradient`` evaluates a user-written functional on traced values and
replays the recorded operations backwards for an exact gradient.  Functionals
combine ordinary arithmetic on traced arrays with the network primitives
``network_value`` and ``network_jet``, whose adjoints reuse the analytic
reverse sweeps of the evaluation module, so compositions of surrogate
outputs, residuals and log-density terms differentiate exactly.

This is the general entry point; the samplers use the hand-assembled
gradients in :mod:`bayespde.posterior`, and the two are cross-checked in the
test suite.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError
from .mlp import MlpArchitecture, jet_backward, jet_batch, value_backward, value_batch

__all__ = ["Traced", "param_gradient", "network_value", "network_jet"]


class Traced:
    """A value on the tape: holds data, parents and their adjoint rules."""

    __slots__ = ("value", "parents", "vjps")

    def __init__(self, value, parents=(), vjps=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.vjps = vjps

    # -- helpers -------------------------------------------------------------

    @staticmethod
    def _lift(other) -> "Traced":
        return other if isinstance(other, Traced) else Traced(other)

    def _binary(self, other, value, vjp_self, vjp_other):
        other = Traced._lift(other)
        return Traced(value, (self, other), (vjp_self, vjp_other))

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other):
        o = Traced._lift(other)
        return self._binary(o, self.value + o.value,
                            lambda g: _unbroadcast(g, self.value.shape),
                            lambda g: _unbroadcast(g, o.value.shape))

    __radd__ = __add__

    def __sub__(self, other):
        o = Traced._lift(other)
        return self._binary(o, self.value - o.value,
                            lambda g: _unbroadcast(g, self.value.shape),
                            lambda g: _unbroadcast(-g, o.value.shape))

    def __rsub__(self, other):
        return Traced._lift(other).__sub__(self)

    def __mul__(self, other):
        o = Traced._lift(other)
        return self._binary(o, self.value * o.value,
                            lambda g: _unbroadcast(g * o.value, self.value.shape),
                            lambda g: _unbroadcast(g * self.value, o.value.shape))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Traced._lift(other)
        return self._binary(o, self.value / o.value,
                            lambda g: _unbroadcast(g / o.value, self.value.shape),
                            lambda g: _unbroadcast(-g * self.value / o.value**2,
                                                   o.value.shape))

    def __rtruediv__(self, other):
        return Traced._lift(other).__truediv__(self)

    def __neg__(self):
        return Traced(-self.value, (self,), (lambda g: -g,))

    def __pow__(self, exponent: float):
        if isinstance(exponent, Traced):
            raise TypeError("traced exponents are not supported")
        return Traced(self.value**exponent, (self,),
                      (lambda g: g * exponent * self.value ** (exponent - 1),))

    def __getitem__(self, key):
        def vjp(g):
            out = np.zeros_like(self.value)
            out[key] = g
            return out
        return Traced(self.value[key], (self,), (vjp,))

    def sum(self):
        return Traced(self.value.sum(), (self,),
                      (lambda g: np.broadcast_to(g, self.value.shape),))

    def dot(self, other):
        o = Traced._lift(other)
        return self._binary(o, self.value @ o.value,
                            lambda g: g * o.value, lambda g: g * self.value)

    def tanh(self):
        t = np.tanh(self.value)
        return Traced(t, (self,), (lambda g: g * (1.0 - t * t),))

    def exp(self):
        e = np.exp(self.value)
        return Traced(e, (self,), (lambda g: g * e,))

    def log(self):
        return Traced(np.log(self.value), (self,), (lambda g: g / self.value,))


def _unbroadcast(grad, shape):
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape == shape:
        return grad
    if shape == ():
        return grad.sum()
    # only scalar-vs-array broadcasting is supported by the tape ops
    raise ValueError(f"cannot reduce adjoint of shape {grad.shape} to {shape}")


def tanh(x: Traced) -> Traced:
    return Traced._lift(x).tanh()


def exp(x: Traced) -> Traced:
    return Traced._lift(x).exp()


def log(x: Traced) -> Traced:
    return Traced._lift(x).log()


def network_value(arch: MlpArchitecture, theta: Traced, X) -> Traced:
    """Traced network values at fixed points, shape ``(P,)``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    values, tape = value_batch(arch, theta.value, X)

    def vjp(g):
        grad, _ = value_backward(arch, tape, np.broadcast_to(g, values.shape))
        return grad

    return Traced(values, (theta,), (vjp,))


def network_jet(arch: MlpArchitecture, theta: Traced, X):
    """Traced ``(values, grads, hess_diags)`` of the network at fixed points.

    The three outputs share one recorded sweep; each gets its own adjoint
    into the shared reverse pass.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    values, grads, hess, tape = jet_batch(arch, theta.value, X)
    zero_v = np.zeros_like(values)
    zero_g = np.zeros_like(grads)

    def vjp_value(g):
        out, _ = jet_backward(arch, tape, np.broadcast_to(g, values.shape), zero_g, zero_g)
        return out

    def vjp_grad(g):
        out, _ = jet_backward(arch, tape, zero_v, np.broadcast_to(g, grads.shape), zero_g)
        return out

    def vjp_hess(g):
        out, _ = jet_backward(arch, tape, zero_v, zero_g, np.broadcast_to(g, hess.shape))
        return out

    return (
        Traced(values, (theta,), (vjp_value,)),
        Traced(grads, (theta,), (vjp_grad,)),
        Traced(hess, (theta,), (vjp_hess,)),
    )


def param_gradient(functional, theta: np.ndarray) -> np.ndarray:
    """Exact gradient of ``functional(traced_theta)`` at ``theta``.

    The functional must return a scalar ``Traced``.  Non-finite intermediate
    adjoints abort with the offending parameter index.
    """
    theta = np.asarray(theta, dtype=np.float64)
    root = Traced(theta)
    out = functional(root)
    if not isinstance(out, Traced) or out.value.shape != ():
        raise ValueError("functional must return a scalar Traced value")

    order: list[Traced] = []
    seen: set[int] = set()
    stack: list[tuple[Traced, bool]] = [(out, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            stack.append((parent, False))

    adjoints: dict[int, np.ndarray] = {id(out): np.ones(())}
    for node in reversed(order):
        g = adjoints.get(id(node))
        if g is None:
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            contribution = vjp(g)
            key = id(parent)
            if key in adjoints:
                adjoints[key] = adjoints[key] + contribution
            else:
                adjoints[key] = np.asarray(contribution, dtype=np.float64)

    grad = adjoints.get(id(root))
    if grad is None:
        grad = np.zeros_like(theta)
    grad = np.broadcast_to(grad, theta.shape).astype(np.float64)
    if not np.all(np.isfinite(grad)):
        bad = int(np.flatnonzero(~np.isfinite(grad))[0])
        raise NumericalError(f"non-finite gradient component at index {bad}")
    return grad.copy()
