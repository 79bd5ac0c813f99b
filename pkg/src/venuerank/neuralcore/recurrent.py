"""LSTM, GRU, and bidirectional wrappers with backprop through time.

Normative cell equations (zero initial state everywhere):

LSTM, gate order (i, f, g, o) in the fused weight matrices::

    i = sigmoid(x Wx_i + h Wh_i + b_i)      input gate
    f = sigmoid(x Wx_f + h Wh_f + b_f)      forget gate
    g = tanh   (x Wx_g + h Wh_g + b_g)      candidate
    o = sigmoid(x Wx_o + h Wh_o + b_o)      output gate
    c' = f * c + i * g
    h' = o * tanh(c')

GRU, gate order (r, z, n), with the candidate's recurrent contribution
scaled by the reset gate after the matrix product::

    r  = sigmoid(x Wx_r + h Wh_r + b_r)     reset gate
    z  = sigmoid(x Wx_z + h Wh_z + b_z)     update gate
    n  = tanh   (x Wx_n + r * (h Wh_n) + b_n)
    h' = (1 - z) * n + z * h

These are the equations the scalar-recurrence oracle tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Parameter, ensure_finite, glorot_uniform


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class CellParams:
    """Fused weights: Wx (d, G*u), Wh (u, G*u), b (G*u); G gates."""

    Wx: np.ndarray
    Wh: np.ndarray
    b: np.ndarray


class LSTM:
    N_GATES = 4

    def __init__(self, in_dim: int, units: int, rng: np.random.Generator, name: str):
        self.in_dim = in_dim
        self.units = units
        g = self.N_GATES * units
        self.Wx = Parameter(f"{name}.Wx", glorot_uniform(rng, (in_dim, g), in_dim, units))
        self.Wh = Parameter(f"{name}.Wh", glorot_uniform(rng, (units, g), units, units))
        self.b = Parameter(f"{name}.b", np.zeros(g))

    def parameters(self) -> list[Parameter]:
        return [self.Wx, self.Wh, self.b]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Full hidden-state sequence (len(x), units) for a (len, in_dim) input."""
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"lstm input shape {x.shape} does not match in_dim {self.in_dim}")
        u = self.units
        h = np.zeros(u)
        c = np.zeros(u)
        states = []
        out = np.empty((x.shape[0], u))
        for t in range(x.shape[0]):
            z = x[t] @ self.Wx.value + h @ self.Wh.value + self.b.value
            i = _sigmoid(z[:u])
            f = _sigmoid(z[u:2 * u])
            g = np.tanh(z[2 * u:3 * u])
            o = _sigmoid(z[3 * u:])
            c_prev = c
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h_prev = h
            h = o * tanh_c
            states.append((x[t], h_prev, c_prev, i, f, g, o, tanh_c))
            out[t] = h
        ensure_finite(out, "lstm output")
        return out, states

    def backward(self, grad_seq: np.ndarray, states: list) -> np.ndarray:
        u = self.units
        dx = np.zeros((len(states), self.in_dim))
        dh_carry = np.zeros(u)
        dc_carry = np.zeros(u)
        for t in range(len(states) - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, g, o, tanh_c = states[t]
            dh = grad_seq[t] + dh_carry
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c ** 2) + dc_carry
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_carry = dc * f
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ])
            self.Wx.grad += np.outer(x_t, dz)
            self.Wh.grad += np.outer(h_prev, dz)
            self.b.grad += dz
            dx[t] = dz @ self.Wx.value.T
            dh_carry = dz @ self.Wh.value.T
        return dx


class GRU:
    N_GATES = 3

    def __init__(self, in_dim: int, units: int, rng: np.random.Generator, name: str):
        self.in_dim = in_dim
        self.units = units
        g = self.N_GATES * units
        self.Wx = Parameter(f"{name}.Wx", glorot_uniform(rng, (in_dim, g), in_dim, units))
        self.Wh = Parameter(f"{name}.Wh", glorot_uniform(rng, (units, g), units, units))
        self.b = Parameter(f"{name}.b", np.zeros(g))

    def parameters(self) -> list[Parameter]:
        return [self.Wx, self.Wh, self.b]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"gru input shape {x.shape} does not match in_dim {self.in_dim}")
        u = self.units
        h = np.zeros(u)
        states = []
        out = np.empty((x.shape[0], u))
        for t in range(x.shape[0]):
            a = x[t] @ self.Wx.value + self.b.value
            rh = h @ self.Wh.value
            r = _sigmoid(a[:u] + rh[:u])
            z = _sigmoid(a[u:2 * u] + rh[u:2 * u])
            rhn = rh[2 * u:]
            n = np.tanh(a[2 * u:] + r * rhn)
            h_prev = h
            h = (1.0 - z) * n + z * h_prev
            states.append((x[t], h_prev, r, z, n, rhn))
            out[t] = h
        ensure_finite(out, "gru output")
        return out, states

    def backward(self, grad_seq: np.ndarray, states: list) -> np.ndarray:
        u = self.units
        dx = np.zeros((len(states), self.in_dim))
        dh_carry = np.zeros(u)
        for t in range(len(states) - 1, -1, -1):
            x_t, h_prev, r, z, n, rhn = states[t]
            dh = grad_seq[t] + dh_carry
            dz = dh * (h_prev - n)
            dn = dh * (1.0 - z)
            dh_prev = dh * z
            dn_pre = dn * (1.0 - n ** 2)
            dr = dn_pre * rhn
            drhn = dn_pre * r
            dr_pre = dr * r * (1.0 - r)
            dz_pre = dz * z * (1.0 - z)
            da = np.concatenate([dr_pre, dz_pre, dn_pre])
            drh = np.concatenate([dr_pre, dz_pre, drhn])
            self.Wx.grad += np.outer(x_t, da)
            self.b.grad += da
            self.Wh.grad += np.outer(h_prev, drh)
            dx[t] = da @ self.Wx.value.T
            dh_carry = dh_prev + drh @ self.Wh.value.T
        return dx


class Bidirectional:
    """Two independent cells, one reading forward and one reading reversed.

    Sequence output row t is ``[h_fwd(t), h_bwd(t)]`` where the backward half
    at position t has consumed the suffix x[T-1..t]; the last-state read is
    ``[h_fwd(T-1), h_bwd(0-aligned)]``.
    """

    def __init__(self, cell_kind: str, in_dim: int, units: int,
                 rng: np.random.Generator, name: str):
        cls = {"lstm": LSTM, "gru": GRU}[cell_kind]
        self.fwd = cls(in_dim, units, rng, f"{name}.fwd")
        self.bwd = cls(in_dim, units, rng, f"{name}.bwd")
        self.units = units

    def parameters(self) -> list[Parameter]:
        return self.fwd.parameters() + self.bwd.parameters()

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        out_f, cache_f = self.fwd.forward(x)
        out_b_rev, cache_b = self.bwd.forward(x[::-1])
        out = np.concatenate([out_f, out_b_rev[::-1]], axis=1)
        return out, (cache_f, cache_b)

    def backward(self, grad_seq: np.ndarray, cache: tuple) -> np.ndarray:
        cache_f, cache_b = cache
        u = self.units
        dx = self.fwd.backward(grad_seq[:, :u], cache_f)
        dx += self.bwd.backward(grad_seq[::-1, u:], cache_b)[::-1]
        return dx


# ---------------------------------------------------------------------------
# Functional forms
# ---------------------------------------------------------------------------


def _with_params(cell, params: CellParams):
    expect = (cell.Wx.value.shape, cell.Wh.value.shape, cell.b.value.shape)
    got = (params.Wx.shape, params.Wh.shape, params.b.shape)
    if expect != got:
        raise ValueError(f"cell parameter shapes {got} do not match expected {expect}")
    cell.Wx.value = np.asarray(params.Wx, dtype=np.float64)
    cell.Wh.value = np.asarray(params.Wh, dtype=np.float64)
    cell.b.value = np.asarray(params.b, dtype=np.float64)
    return cell


def lstm_forward(x: np.ndarray, params: CellParams, units: int,
                 return_mode: str = "sequence") -> np.ndarray:
    cell = _with_params(LSTM(np.asarray(x).shape[1], units, np.random.default_rng(0), "lstm"), params)
    out, _ = cell.forward(np.asarray(x, dtype=np.float64))
    return out if return_mode == "sequence" else out[-1]


def gru_forward(x: np.ndarray, params: CellParams, units: int,
                return_mode: str = "sequence") -> np.ndarray:
    cell = _with_params(GRU(np.asarray(x).shape[1], units, np.random.default_rng(0), "gru"), params)
    out, _ = cell.forward(np.asarray(x, dtype=np.float64))
    return out if return_mode == "sequence" else out[-1]


def bidirectional_forward(x: np.ndarray, cell_kind: str, fwd: CellParams, bwd: CellParams,
                          units: int, return_mode: str = "sequence") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    layer = Bidirectional(cell_kind, x.shape[1], units, np.random.default_rng(0), "bi")
    _with_params(layer.fwd, fwd)
    _with_params(layer.bwd, bwd)
    out, _ = layer.forward(x)
    if return_mode == "sequence":
        return out
    return np.concatenate([out[-1, :units], out[0, units:]])
