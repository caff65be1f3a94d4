"""Minimal reverse-mode automatic differentiation over float64 numpy buffers.

The op vocabulary is exactly what the autoencoders need: broadcast
arithmetic, matmul, sigmoid/tanh/leaky-ReLU, same-padded 2-D convolution,
clamped ceil-mode max pooling, nearest-neighbour upsampling, a GRU composed
from the primitives, MSE loss, and an Adam update rule.  Everything runs in
64-bit so finite-difference gradient checks are meaningful.

Each op records its parents and a backward closure on the output tensor;
``Tensor.backward`` replays the implicit graph in reverse topological order
exactly once, summing gradients at fan-out points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeError


class Tensor:
    """A dense float64 array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "op", "parents", "_backward")

    def __init__(self, data, requires_grad=False, op="leaf", parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.op = op
        self.parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r})"

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=self.requires_grad)

    def backward(self, grad=None):
        """Reverse-mode sweep from this node; fan-out gradients accumulate."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without an explicit gradient needs a scalar")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise ShapeError("gradient shape must match tensor shape")
        order = self._topo_order()
        _accumulate(self, grad)
        for node in reversed(order):
            if node._backward is not None and node.requires_grad and node.grad is not None:
                node._backward(node.grad)

    def _topo_order(self):
        order = []
        seen = set()
        stack = [(self, iter(self.parents))]
        seen.add(id(self))
        while stack:
            node, it = stack[-1]
            advanced = False
            for parent in it:
                if id(parent) not in seen:
                    seen.add(id(parent))
                    stack.append((parent, iter(parent.parents)))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
        return order

    # operator sugar for the composite layers
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _accumulate(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    t.grad = g.copy() if t.grad is None else t.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return Tensor(out_data, op="add", parents=(a, b), backward=backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data - b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(-g, b.data.shape))

    return Tensor(out_data, op="sub", parents=(a, b), backward=backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return Tensor(out_data, op="mul", parents=(a, b), backward=backward)


def one_minus(a) -> Tensor:
    a = _as_tensor(a)

    def backward(g):
        _accumulate(a, -g)

    return Tensor(1.0 - a.data, op="one_minus", parents=(a,), backward=backward)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return Tensor(out_data, op="matmul", parents=(a, b), backward=backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        _accumulate(a, g * out_data * (1.0 - out_data))

    return Tensor(out_data, op="sigmoid", parents=(a,), backward=backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out_data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - out_data * out_data))

    return Tensor(out_data, op="tanh", parents=(a,), backward=backward)


def leaky_relu(a, alpha: float = 0.1) -> Tensor:
    """x for x > 0 else alpha * x; subgradient alpha at exactly 0."""
    a = _as_tensor(a)
    positive = a.data > 0.0
    out_data = np.where(positive, a.data, alpha * a.data)

    def backward(g):
        _accumulate(a, g * np.where(positive, 1.0, alpha))

    return Tensor(out_data, op="leaky_relu", parents=(a,), backward=backward)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    in_shape = a.data.shape

    def backward(g):
        _accumulate(a, g.reshape(in_shape))

    return Tensor(a.data.reshape(shape), op="reshape", parents=(a,), backward=backward)


def transpose(a, axes) -> Tensor:
    a = _as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        _accumulate(a, g.transpose(inverse))

    return Tensor(a.data.transpose(axes), op="transpose", parents=(a,), backward=backward)


def index_time(a, t: int) -> Tensor:
    """Slice timestep t from a [B, T, D] tensor."""
    a = _as_tensor(a)

    def backward(g):
        gx = np.zeros_like(a.data)
        gx[:, t, :] = g
        _accumulate(a, gx)

    return Tensor(a.data[:, t, :], op="index_time", parents=(a,), backward=backward)


def stack_time(steps) -> Tensor:
    """Stack a list of [B, D] tensors into [B, T, D]."""
    steps = [_as_tensor(s) for s in steps]
    out_data = np.stack([s.data for s in steps], axis=1)

    def backward(g):
        for t, s in enumerate(steps):
            _accumulate(s, g[:, t, :])

    return Tensor(out_data, op="stack_time", parents=tuple(steps), backward=backward)


def repeat_time(a, t: int) -> Tensor:
    """Tile a [B, D] tensor into [B, t, D]; backward sums over the new axis."""
    a = _as_tensor(a)
    out_data = np.repeat(a.data[:, None, :], t, axis=1)

    def backward(g):
        _accumulate(a, g.sum(axis=1))

    return Tensor(out_data, op="repeat_time", parents=(a,), backward=backward)


def _same_pad(k: int):
    before = (k - 1) // 2
    return before, k - 1 - before


def conv2d(x, kernels, bias) -> Tensor:
    """Stride-1 cross-correlation with "same" zero padding.

    ``x`` is [B, C, H, W], ``kernels`` [F, C, kh, kw], ``bias`` [F]; the
    output is [B, F, H, W].
    """
    x, kernels, bias = _as_tensor(x), _as_tensor(kernels), _as_tensor(bias)
    if x.data.ndim != 4 or kernels.data.ndim != 4:
        raise ShapeError("conv2d expects a 4-D input and 4-D kernels")
    batch, chans, height, width = x.data.shape
    filt, kc, kh, kw = kernels.data.shape
    if kc != chans:
        raise ShapeError(f"kernel channels {kc} do not match input channels {chans}")
    if bias.data.shape != (filt,):
        raise ShapeError(f"bias must have shape ({filt},), got {bias.data.shape}")
    if height < 1 or width < 1 or kh < 1 or kw < 1:
        raise ShapeError("conv2d needs positive spatial extents")

    ph0, ph1 = _same_pad(kh)
    pw0, pw1 = _same_pad(kw)
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph0, ph1), (pw0, pw1)))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # [B,C,H,W,kh,kw]
    out_data = np.einsum("bchwij,fcij->bfhw", windows, kernels.data, optimize=True)
    out_data = out_data + bias.data[None, :, None, None]

    def backward(g):
        _accumulate(bias, g.sum(axis=(0, 2, 3)))
        _accumulate(kernels, np.einsum("bchwij,bfhw->fcij", windows, g, optimize=True))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for a in range(kh):
                for b in range(kw):
                    gxp[:, :, a:a + height, b:b + width] += np.einsum(
                        "bfhw,fc->bchw", g, kernels.data[:, :, a, b], optimize=True
                    )
            _accumulate(x, gxp[:, :, ph0:ph0 + height, pw0:pw0 + width])

    return Tensor(out_data, op="conv2d", parents=(x, kernels, bias), backward=backward)


def maxpool2d(x, size) -> Tensor:
    """Non-overlapping max pooling, clamped to the input extent, ceil mode.

    Window sizes are (min(ph, H), min(pw, W)); ragged edge windows shrink.
    The backward pass routes each window's gradient to the first (row-major)
    argmax inside the window.
    """
    x = _as_tensor(x)
    if x.data.ndim != 4:
        raise ShapeError("maxpool2d expects a 4-D input")
    batch, chans, height, width = x.data.shape
    ph = max(1, min(int(size[0]), height))
    pw = max(1, min(int(size[1]), width))
    out_h = -(-height // ph)
    out_w = -(-width // pw)
    out_data = np.empty((batch, chans, out_h, out_w))
    arg_rows = np.empty((batch, chans, out_h, out_w), dtype=np.int64)
    arg_cols = np.empty((batch, chans, out_h, out_w), dtype=np.int64)
    for oi in range(out_h):
        i0, i1 = oi * ph, min(oi * ph + ph, height)
        for oj in range(out_w):
            j0, j1 = oj * pw, min(oj * pw + pw, width)
            block = x.data[:, :, i0:i1, j0:j1].reshape(batch, chans, -1)
            flat_arg = block.argmax(axis=2)
            out_data[:, :, oi, oj] = np.take_along_axis(
                block, flat_arg[:, :, None], axis=2
            )[:, :, 0]
            arg_rows[:, :, oi, oj] = i0 + flat_arg // (j1 - j0)
            arg_cols[:, :, oi, oj] = j0 + flat_arg % (j1 - j0)

    def backward(g):
        gx = np.zeros_like(x.data)
        bi = np.arange(batch)[:, None]
        ci = np.arange(chans)[None, :]
        for oi in range(out_h):
            for oj in range(out_w):
                gx[bi, ci, arg_rows[:, :, oi, oj], arg_cols[:, :, oi, oj]] += g[:, :, oi, oj]
        _accumulate(x, gx)

    return Tensor(out_data, op="maxpool2d", parents=(x,), backward=backward)


def upsample2d(x, size, target=None) -> Tensor:
    """Nearest-neighbour repetition by (ph, pw), optionally cropped to ``target``.

    Passing the pre-pool spatial shape as ``target`` makes this the exact
    shape inverse of the clamped ceil-mode pooling on the encoder side.
    """
    x = _as_tensor(x)
    if x.data.ndim != 4:
        raise ShapeError("upsample2d expects a 4-D input")
    batch, chans, height, width = x.data.shape
    ph = max(1, int(size[0]))
    pw = max(1, int(size[1]))
    full_h, full_w = height * ph, width * pw
    th, tw = (full_h, full_w) if target is None else (int(target[0]), int(target[1]))
    if not (1 <= th <= full_h and 1 <= tw <= full_w):
        raise ShapeError(
            f"target {target} not within the repeated extent ({full_h}, {full_w})"
        )
    out_data = x.data.repeat(ph, axis=2).repeat(pw, axis=3)[:, :, :th, :tw]

    def backward(g):
        gfull = np.zeros((batch, chans, full_h, full_w))
        gfull[:, :, :th, :tw] = g
        _accumulate(
            x, gfull.reshape(batch, chans, height, ph, width, pw).sum(axis=(3, 5))
        )

    return Tensor(out_data, op="upsample2d", parents=(x,), backward=backward)


def mse_loss(a, b) -> Tensor:
    """Mean of squared differences over all elements (a scalar tensor)."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mse_loss shape mismatch: {a.data.shape} vs {b.data.shape}")
    diff = a.data - b.data
    n = diff.size
    out_data = np.asarray((diff * diff).sum() / n)

    def backward(g):
        scaled = (2.0 / n) * float(g) * diff
        _accumulate(a, scaled)
        _accumulate(b, -scaled)

    return Tensor(out_data, op="mse_loss", parents=(a, b), backward=backward)


@dataclass
class GruParams:
    """Input, recurrent and bias weights for the three GRU gates."""

    wz: Tensor
    uz: Tensor
    bz: Tensor
    wr: Tensor
    ur: Tensor
    br: Tensor
    wh: Tensor
    uh: Tensor
    bh: Tensor

    def tensors(self) -> dict:
        return {name: getattr(self, name) for name in
                ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")}

    @property
    def state_dim(self) -> int:
        return self.uz.data.shape[0]


def init_gru_params(rng, input_dim: int, state_dim: int) -> GruParams:
    def w(rows, cols):
        return Tensor(glorot_uniform(rng, (rows, cols), rows, cols), requires_grad=True)

    def b(n):
        return Tensor(np.zeros(n), requires_grad=True)

    return GruParams(
        wz=w(input_dim, state_dim), uz=w(state_dim, state_dim), bz=b(state_dim),
        wr=w(input_dim, state_dim), ur=w(state_dim, state_dim), br=b(state_dim),
        wh=w(input_dim, state_dim), uh=w(state_dim, state_dim), bh=b(state_dim),
    )


def gru(x, params: GruParams, return_sequences: bool = False) -> Tensor:
    """Gated recurrent unit over a [B, T, D] input.

    Update gate z, reset gate r, candidate state h~ with sigmoid/tanh gates:

        z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
        r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
        h~_t = tanh(x_t Wh + (r_t * h_{t-1}) Uh + bh)
        h_t = z_t * h_{t-1} + (1 - z_t) * h~_t

    Returns the final hidden state [B, state_dim], or the whole sequence
    [B, T, state_dim] with ``return_sequences``.  Backpropagation through
    time falls out of the composed primitive graph.
    """
    x = _as_tensor(x)
    if x.data.ndim != 3:
        raise ShapeError("gru expects a [B, T, D] input")
    steps = x.data.shape[1]
    if steps < 1:
        raise ShapeError("gru needs at least one timestep")
    h = Tensor(np.zeros((x.data.shape[0], params.state_dim)))
    outputs = []
    for t in range(steps):
        xt = index_time(x, t)
        z = sigmoid(add(add(matmul(xt, params.wz), matmul(h, params.uz)), params.bz))
        r = sigmoid(add(add(matmul(xt, params.wr), matmul(h, params.ur)), params.br))
        cand = tanh(add(add(matmul(xt, params.wh), matmul(mul(r, h), params.uh)), params.bh))
        h = add(mul(z, h), mul(one_minus(z), cand))
        if return_sequences:
            outputs.append(h)
    return stack_time(outputs) if return_sequences else h


def glorot_uniform(rng, shape, fan_in: int, fan_out: int) -> np.ndarray:
    """Seeded uniform init with limit sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class AdamState:
    """First/second moment buffers plus hyperparameters for Adam."""

    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: dict, lr: float = 0.001, **kw) -> "AdamState":
        state = cls(lr=lr, **kw)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected Adam update; mutates params and state in place."""
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, want {p.data.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def gradcheck(fn, inputs, h: float = 1e-5) -> float:
    """Worst-case relative error between autodiff and central differences.

    ``fn`` maps the given tensors to a scalar tensor.  Every element of every
    ``requires_grad`` input is perturbed by +-h; the relative error uses a
    1e-2 denominator floor so that noise below the finite-difference
    resolution is not amplified.
    """
    if h <= 0:
        raise ParameterError("h must be positive")
    for t in inputs:
        t.zero_grad()
    out = fn(*inputs)
    if out.data.size != 1:
        raise ShapeError("gradcheck needs a scalar-valued function")
    out.backward()
    analytic = [
        (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for t in inputs
    ]
    worst = 0.0
    for t, ana in zip(inputs, analytic):
        if not t.requires_grad:
            continue
        flat = t.data.reshape(-1)
        ana_flat = ana.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(fn(*inputs).data)
            flat[i] = orig - h
            f_minus = float(fn(*inputs).data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(numeric - ana_flat[i]) / max(abs(numeric), abs(ana_flat[i]), 1e-2)
            if err > worst:
                worst = err
    return worst
