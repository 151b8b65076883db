"""Fully-connected tanh network with exact spatial derivatives.

The forward pass carries, per input coordinate, the triple (value, first
derivative, second derivative) of every layer activation, so network output,
spatial gradient and the diagonal of the spatial Hessian come out of a single
sweep.  Parameter gradients of scalar functions of those outputs are obtained
by reverse accumulation through the recorded sweep; no finite differences
anywhere.

Parameter layout (public contract): for each layer in input-to-output order,
the weight matrix ``W_l`` of shape ``(n_out, n_in)`` raveled row-major,
followed by the bias vector ``b_l``.  Callers that carry extra unknowns (PDE
parameters) append them after the last bias block.

All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "MlpArchitecture",
    "Jet",
    "PriorScales",
    "mlp_forward",
    "mlp_jet",
    "value_batch",
    "value_backward",
    "jet_batch",
    "jet_backward",
    "grad_lap_batch",
    "grad_lap_backward",
    "sample_prior",
    "glorot_init",
    "MlpSurrogate",
]


@dataclass(frozen=True)
class MlpArchitecture:
    """Shape of the surrogate network: input width and hidden widths.

    The output is a single affine unit and every hidden activation is tanh.
    """

    input_dim: int
    hidden_widths: tuple[int, ...]

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        widths = tuple(int(w) for w in self.hidden_widths)
        if not widths or any(w < 1 for w in widths):
            raise ValueError("hidden_widths must be a non-empty tuple of positive ints")
        object.__setattr__(self, "hidden_widths", widths)

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """(n_out, n_in) per layer, hidden layers first, output layer last."""
        dims = (self.input_dim, *self.hidden_widths, 1)
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    @property
    def n_params(self) -> int:
        return sum(o * i + o for o, i in self.layer_shapes)

    def unpack(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Split a flat parameter vector into per-layer (W, b) views."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.ndim != 1 or theta.shape[0] != self.n_params:
            raise DimensionMismatchError(
                f"parameter vector of length {theta.shape} does not match "
                f"architecture with {self.n_params} parameters"
            )
        layers = []
        pos = 0
        for n_out, n_in in self.layer_shapes:
            w = theta[pos : pos + n_out * n_in].reshape(n_out, n_in)
            pos += n_out * n_in
            b = theta[pos : pos + n_out]
            pos += n_out
            layers.append((w, b))
        return layers

    def pack(self, layers) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in layers])


@dataclass(frozen=True)
class Jet:
    """Surrogate evaluation bundle at a single point.

    ``grad`` holds the first partial derivative with respect to each input
    coordinate and ``hess_diag`` the corresponding pure second derivatives.
    """

    value: float
    grad: np.ndarray
    hess_diag: np.ndarray


@dataclass(frozen=True)
class PriorScales:
    """Per-layer Gaussian prior standard deviations for weights and biases."""

    weight: tuple[float, ...]
    bias: tuple[float, ...]

    @classmethod
    def unit(cls, n_layers: int) -> "PriorScales":
        return cls(weight=(1.0,) * n_layers, bias=(1.0,) * n_layers)


def _check_point(arch: MlpArchitecture, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (arch.input_dim,):
        raise DimensionMismatchError(
            f"point of shape {x.shape} does not match input_dim {arch.input_dim}"
        )
    return x


def mlp_forward(arch: MlpArchitecture, theta: np.ndarray, x) -> float:
    """Network output at a single point."""
    x = _check_point(arch, x)
    values, _ = value_batch(arch, theta, x[None, :])
    return float(values[0])


def mlp_jet(arch: MlpArchitecture, theta: np.ndarray, x) -> Jet:
    """Value, spatial gradient and Hessian diagonal at a single point."""
    x = _check_point(arch, x)
    values, grads, hess, _ = jet_batch(arch, theta, x[None, :])
    return Jet(float(values[0]), grads[0].copy(), hess[0].copy())


# ---------------------------------------------------------------------------
# batched evaluation
#
# Tapes record what the corresponding backward pass consumes.  ``scales`` is
# an optional per-hidden-layer multiplier on activations (used for inverted
# dropout); ``None`` entries mean no scaling.


def _resolve_scales(arch, scales):
    if scales is None:
        return [None] * len(arch.hidden_widths)
    if len(scales) != len(arch.hidden_widths):
        raise DimensionMismatchError("one scale vector per hidden layer required")
    return list(scales)


def value_batch(arch, theta, X, scales=None):
    """Network values at a batch of points.

    Returns ``(values, tape)`` where ``values`` has shape ``(P,)``.
    """
    layers = arch.unpack(theta)
    scales = _resolve_scales(arch, scales)
    z = np.asarray(X, dtype=np.float64)
    records = []
    for (w, b), scale in zip(layers[:-1], scales):
        a = z @ w.T + b
        t = np.tanh(a)
        y = t if scale is None else t * scale
        records.append((z, t, scale, w))
        z = y
    w_out, b_out = layers[-1]
    values = z @ w_out.T[:, 0] + b_out[0]
    tape = (records, z, w_out)
    return values, tape


def value_backward(arch, tape, d_values):
    """Reverse pass for :func:`value_batch`.

    Returns ``(theta_grad, x_grad)`` for the scalar ``sum(d_values * values)``.
    """
    records, z_last, w_out = tape
    d_values = np.asarray(d_values, dtype=np.float64)
    grads = []
    wbar_out = d_values @ z_last
    grads.append((wbar_out[None, :], np.array([d_values.sum()])))
    zbar = d_values[:, None] * w_out
    for z_in, t, scale, w in reversed(records):
        s = 1.0 - t * t
        if scale is not None:
            s = s * scale
        abar = zbar * s
        wbar = abar.T @ z_in
        bbar = abar.sum(axis=0)
        grads.append((wbar, bbar))
        zbar = abar @ w
    grads.reverse()
    return arch.pack(grads), zbar


def jet_batch(arch, theta, X, scales=None):
    """Values, spatial gradients and per-coordinate second derivatives.

    Returns ``(values (P,), grad (P, d), hess_diag (P, d), tape)``.
    """
    layers = arch.unpack(theta)
    scales = _resolve_scales(arch, scales)
    X = np.asarray(X, dtype=np.float64)
    n_pts, dim = X.shape
    z = X
    g = np.broadcast_to(np.eye(dim), (n_pts, dim, dim)).copy()
    h = np.zeros((n_pts, dim, dim))
    records = []
    for (w, b), scale in zip(layers[:-1], scales):
        a = z @ w.T + b
        p = g @ w.T
        q = h @ w.T
        t = np.tanh(a)
        s = 1.0 - t * t
        phi2 = -2.0 * t * s
        if scale is not None:
            s = s * scale
            phi2 = phi2 * scale
        records.append((z, g, h, t, s, phi2, p, q, scale, w))
        z = t if scale is None else t * scale
        g = s[:, None, :] * p
        h = phi2[:, None, :] * (p * p) + s[:, None, :] * q
    w_out, b_out = layers[-1]
    values = z @ w_out.T[:, 0] + b_out[0]
    grad = g @ w_out.T[:, 0]
    hess = h @ w_out.T[:, 0]
    tape = (records, z, g, h, w_out)
    return values, grad, hess, tape


def jet_backward(arch, tape, d_values, d_grad, d_hess):
    """Reverse pass for :func:`jet_batch` with cotangents on all outputs.

    Returns ``(theta_grad, x_grad)``.
    """
    records, z_last, g_last, h_last, w_out = tape
    du = np.asarray(d_values, dtype=np.float64)
    dg = np.asarray(d_grad, dtype=np.float64)
    dh = np.asarray(d_hess, dtype=np.float64)
    grads = []
    wbar_out = (
        du @ z_last
        + np.einsum("pd,pdh->h", dg, g_last)
        + np.einsum("pd,pdh->h", dh, h_last)
    )
    grads.append((wbar_out[None, :], np.array([du.sum()])))
    zbar = du[:, None] * w_out
    gbar = dg[:, :, None] * w_out[None, :, :]
    hbar = dh[:, :, None] * w_out[None, :, :]
    for z_in, g_in, h_in, t, s, phi2, p, q, scale, w in reversed(records):
        phi3 = -2.0 * (1.0 - t * t) * (1.0 - 3.0 * t * t)
        if scale is not None:
            phi3 = phi3 * scale
        abar = (
            zbar * s
            + (gbar * p).sum(axis=1) * phi2
            + (hbar * (p * p)).sum(axis=1) * phi3
            + (hbar * q).sum(axis=1) * phi2
        )
        pbar = gbar * s[:, None, :] + hbar * (2.0 * p) * phi2[:, None, :]
        qbar = hbar * s[:, None, :]
        n_out, n_in = w.shape
        wbar = abar.T @ z_in
        wbar += pbar.reshape(-1, n_out).T @ g_in.reshape(-1, n_in)
        wbar += qbar.reshape(-1, n_out).T @ h_in.reshape(-1, n_in)
        bbar = abar.sum(axis=0)
        grads.append((wbar, bbar))
        zbar = abar @ w
        gbar = pbar @ w
        hbar = qbar @ w
    grads.reverse()
    return arch.pack(grads), zbar


def grad_lap_batch(arch, theta, X, n_coords=None, scales=None):
    """Values, gradients over the first ``n_coords`` inputs, and their Laplacian.

    The second-derivative state is carried as the sum over coordinates, which
    is all the PDE operators and the flow density recursion need; for wide
    direction sets this is much cheaper than per-coordinate Hessian columns.

    Returns ``(values (P,), grad (P, k), laplacian (P,), tape)``.
    """
    layers = arch.unpack(theta)
    scales = _resolve_scales(arch, scales)
    X = np.asarray(X, dtype=np.float64)
    n_pts, dim = X.shape
    k = dim if n_coords is None else int(n_coords)
    z = X
    eye = np.zeros((k, dim))
    eye[np.arange(k), np.arange(k)] = 1.0
    g = np.broadcast_to(eye, (n_pts, k, dim)).copy()
    hs = np.zeros((n_pts, dim))
    records = []
    for (w, b), scale in zip(layers[:-1], scales):
        a = z @ w.T + b
        p = g @ w.T
        qs = hs @ w.T
        psq = (p * p).sum(axis=1)
        t = np.tanh(a)
        s = 1.0 - t * t
        phi2 = -2.0 * t * s
        if scale is not None:
            s = s * scale
            phi2 = phi2 * scale
        records.append((z, g, hs, t, s, phi2, p, qs, psq, scale, w))
        z = t if scale is None else t * scale
        g = s[:, None, :] * p
        hs = phi2 * psq + s * qs
    w_out, b_out = layers[-1]
    values = z @ w_out.T[:, 0] + b_out[0]
    grad = g @ w_out.T[:, 0]
    lap = hs @ w_out.T[:, 0]
    tape = (records, z, g, hs, w_out)
    return values, grad, lap, tape


def grad_lap_backward(arch, tape, d_values, d_grad, d_lap):
    """Reverse pass for :func:`grad_lap_batch`.

    Returns ``(theta_grad, x_grad)``; ``x_grad`` covers all input columns.
    """
    records, z_last, g_last, hs_last, w_out = tape
    du = np.asarray(d_values, dtype=np.float64)
    dg = np.asarray(d_grad, dtype=np.float64)
    dl = np.asarray(d_lap, dtype=np.float64)
    grads = []
    wbar_out = du @ z_last + np.einsum("pd,pdh->h", dg, g_last) + dl @ hs_last
    grads.append((wbar_out[None, :], np.array([du.sum()])))
    zbar = du[:, None] * w_out
    gbar = dg[:, :, None] * w_out[None, :, :]
    hsbar = dl[:, None] * w_out
    for z_in, g_in, hs_in, t, s, phi2, p, qs, psq, scale, w in reversed(records):
        phi3 = -2.0 * (1.0 - t * t) * (1.0 - 3.0 * t * t)
        if scale is not None:
            phi3 = phi3 * scale
        abar = (
            zbar * s
            + (gbar * p).sum(axis=1) * phi2
            + hsbar * (psq * phi3 + qs * phi2)
        )
        pbar = gbar * s[:, None, :] + hsbar[:, None, :] * (2.0 * p) * phi2[:, None, :]
        qsbar = hsbar * s
        n_out, n_in = w.shape
        wbar = abar.T @ z_in
        wbar += pbar.reshape(-1, n_out).T @ g_in.reshape(-1, n_in)
        wbar += qsbar.T @ hs_in
        bbar = abar.sum(axis=0)
        grads.append((wbar, bbar))
        zbar = abar @ w
        gbar = pbar @ w
        hsbar = qsbar @ w
    grads.reverse()
    return arch.pack(grads), zbar


# ---------------------------------------------------------------------------
# parameter sampling


def sample_prior(arch: MlpArchitecture, rng: np.random.Generator,
                 scales: PriorScales | None = None) -> np.ndarray:
    """Draw a parameter vector from the layerwise Gaussian prior.

    Draws follow the packed layout so a fixed rng state always yields the
    same vector.
    """
    n_layers = len(arch.layer_shapes)
    if scales is None:
        scales = PriorScales.unit(n_layers)
    if len(scales.weight) != n_layers or len(scales.bias) != n_layers:
        raise DimensionMismatchError("one scale per layer required")
    parts = []
    for (n_out, n_in), sw, sb in zip(arch.layer_shapes, scales.weight, scales.bias):
        parts.append(rng.normal(0.0, sw, size=n_out * n_in))
        parts.append(rng.normal(0.0, sb, size=n_out))
    return np.concatenate(parts)


def glorot_init(arch: MlpArchitecture, rng: np.random.Generator) -> np.ndarray:
    """Glorot-normal weights, zero biases; the usual optimisation start."""
    parts = []
    for n_out, n_in in arch.layer_shapes:
        std = np.sqrt(2.0 / (n_in + n_out))
        parts.append(rng.normal(0.0, std, size=n_out * n_in))
        parts.append(np.zeros(n_out))
    return np.concatenate(parts)


class MlpSurrogate:
    """Surrogate-protocol adapter around the network evaluation routines."""

    def __init__(self, arch: MlpArchitecture):
        self.arch = arch

    @property
    def n_params(self) -> int:
        return self.arch.n_params

    @property
    def input_dim(self) -> int:
        return self.arch.input_dim

    def bind(self, points: np.ndarray) -> "BoundMlp":
        return BoundMlp(self.arch, points)

    def value_at(self, theta, X, scales=None):
        values, _ = value_batch(self.arch, theta, X, scales=scales)
        return values

    def jet_at(self, theta, X, scales=None):
        values, grad, hess, _ = jet_batch(self.arch, theta, X, scales=scales)
        return values, grad, hess

    def sample_prior(self, rng):
        return sample_prior(self.arch, rng)


class BoundMlp:
    """Network evaluator pinned to a fixed set of points."""

    def __init__(self, arch: MlpArchitecture, points: np.ndarray):
        self.arch = arch
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != arch.input_dim:
            raise DimensionMismatchError("points must have shape (P, input_dim)")
        self.points = points

    def value(self, theta, scales=None):
        return value_batch(self.arch, theta, self.points, scales=scales)

    def value_vjp(self, tape, d_values):
        theta_grad, _ = value_backward(self.arch, tape, d_values)
        return theta_grad

    def grad_lap(self, theta, scales=None):
        return grad_lap_batch(self.arch, theta, self.points, scales=scales)

    def grad_lap_vjp(self, tape, d_values, d_grad, d_lap):
        theta_grad, _ = grad_lap_backward(self.arch, tape, d_values, d_grad, d_lap)
        return theta_grad
