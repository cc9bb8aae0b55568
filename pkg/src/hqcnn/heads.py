"""Classical post-processing: rescaling, dense heads, fusion, loss, prediction.

Measurement probabilities are mapped to [-2, 2] by p -> 4p - 2 before
entering the tanh heads. The retained head is a single m x m dense layer;
the discarded head is a three-stage subnetwork (project to m, expand to m*k,
recover to m). The two outputs are fused by elementwise product, which acts
as a soft AND: a class score is large only when both branches agree. The
fused vector is the logit output; cross-entropy applies softmax internally,
and no softmax is applied at inference except for calibrated probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_CLASSES = 4
SCALE = 4.0  # rescale slope; variance of rescaled uniform p is SCALE**2 / 12

# small slack for float noise on probabilities produced by the simulator
_PROB_EPS = 1e-9


def rescale(p) -> np.ndarray:
    """Elementwise 4p - 2, mapping probabilities in [0,1] onto [-2, 2]."""
    p = np.asarray(p, dtype=np.float64)
    if p.size and (p.min() < -_PROB_EPS or p.max() > 1.0 + _PROB_EPS):
        raise ValueError(f"probabilities outside [0, 1]: min {p.min()}, max {p.max()}")
    return SCALE * np.clip(p, 0.0, 1.0) - SCALE / 2.0


def unscale(z) -> np.ndarray:
    """Inverse of :func:`rescale` on [-2, 2]."""
    return (np.asarray(z, dtype=np.float64) + SCALE / 2.0) / SCALE


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def loss(z, label: int) -> float:
    """Cross-entropy -log softmax(z)[label] for one sample."""
    z = np.asarray(z, dtype=np.float64)
    if not 0 <= int(label) < z.shape[0]:
        raise ValueError(f"label {label} out of range for {z.shape[0]} classes")
    shifted = z - z.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[int(label)])


def predict(z) -> int:
    """argmax with ties broken toward the lowest index."""
    return int(np.argmax(np.asarray(z)))


def fuse(y_ret, y_disc) -> np.ndarray:
    """Elementwise product of the two head outputs."""
    y_ret = np.asarray(y_ret, dtype=np.float64)
    y_disc = np.asarray(y_disc, dtype=np.float64)
    if y_ret.shape != y_disc.shape:
        raise ValueError(f"fusion shape mismatch: {y_ret.shape} vs {y_disc.shape}")
    return y_ret * y_disc


@dataclass
class HeadParams:
    """Trainable classical parameters.

    The discarded-branch matrices are None in baseline (no-recycling) mode;
    w_final/b_final are None unless the optional final dense layer is on.
    """

    w_ret: np.ndarray
    b_ret: np.ndarray
    w_disc: np.ndarray = None
    b_disc: np.ndarray = None
    w_h: np.ndarray = None
    b_h: np.ndarray = None
    w_out: np.ndarray = None
    b_out: np.ndarray = None
    w_final: np.ndarray = None
    b_final: np.ndarray = None
    k: int = 2
    m: int = N_CLASSES

    def __post_init__(self):
        m, k = self.m, self.k
        if k < 1:
            raise ValueError(f"expansion factor k must be >= 1, got {k}")
        self._check("w_ret", (m, m))
        self._check("b_ret", (m,))
        if self.recycle:
            self._check("w_disc", (m, m))
            self._check("b_disc", (m,))
            self._check("w_h", (m * k, m))
            self._check("b_h", (m * k,))
            self._check("w_out", (m, m * k))
            self._check("b_out", (m,))
        if self.final_layer:
            self._check("w_final", (m, m))
            self._check("b_final", (m,))

    def _check(self, name, shape):
        arr = getattr(self, name)
        if arr is None:
            raise ValueError(f"{name} is required but missing")
        arr = np.array(arr, dtype=np.float64)
        if arr.shape != shape:
            raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains non-finite entries")
        setattr(self, name, arr)

    @property
    def recycle(self) -> bool:
        return self.w_disc is not None

    @property
    def final_layer(self) -> bool:
        return self.w_final is not None

    def arrays(self) -> dict:
        """name -> array for every present parameter (live views)."""
        out = {"w_ret": self.w_ret, "b_ret": self.b_ret}
        if self.recycle:
            out.update(w_disc=self.w_disc, b_disc=self.b_disc, w_h=self.w_h,
                       b_h=self.b_h, w_out=self.w_out, b_out=self.b_out)
        if self.final_layer:
            out.update(w_final=self.w_final, b_final=self.b_final)
        return out

    def zeros_like(self) -> "HeadParams":
        kw = {name: np.zeros_like(arr) for name, arr in self.arrays().items()}
        return HeadParams(k=self.k, m=self.m, **kw)

    def copy(self) -> "HeadParams":
        kw = {name: arr.copy() for name, arr in self.arrays().items()}
        return HeadParams(k=self.k, m=self.m, **kw)

    def param_count(self) -> int:
        return sum(arr.size for arr in self.arrays().values())


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_head_params(rng: np.random.Generator, k: int = 2, final_layer: bool = False,
                     recycle: bool = True, m: int = N_CLASSES) -> HeadParams:
    """Glorot-uniform weights, zero biases."""
    kw = dict(w_ret=glorot_uniform(rng, m, m), b_ret=np.zeros(m))
    if recycle:
        kw.update(
            w_disc=glorot_uniform(rng, m, m), b_disc=np.zeros(m),
            w_h=glorot_uniform(rng, m * k, m), b_h=np.zeros(m * k),
            w_out=glorot_uniform(rng, m, m * k), b_out=np.zeros(m),
        )
    if final_layer:
        kw.update(w_final=glorot_uniform(rng, m, m), b_final=np.zeros(m))
    return HeadParams(k=k, m=m, **kw)


def retained_head(x, params: HeadParams) -> np.ndarray:
    """tanh(W_ret x + b_ret)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.m,):
        raise ValueError(f"retained head expects shape ({params.m},), got {x.shape}")
    return np.tanh(params.w_ret @ x + params.b_ret)


def discarded_head_stages(x, params: HeadParams):
    """All three stage outputs (project, expand, recover) of the discarded head."""
    if not params.recycle:
        raise ValueError("discarded head is disabled in baseline mode")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.m,):
        raise ValueError(f"discarded head expects shape ({params.m},), got {x.shape}")
    y = np.tanh(params.w_disc @ x + params.b_disc)
    h = np.tanh(params.w_h @ y + params.b_h)
    out = np.tanh(params.w_out @ h + params.b_out)
    return y, h, out


def discarded_head(x, params: HeadParams) -> np.ndarray:
    """Project (m), expand (m*k), recover (m); tanh between every stage."""
    return discarded_head_stages(x, params)[2]


@dataclass
class HeadCache:
    """Forward intermediates needed by the analytic backward pass."""

    x_ret: np.ndarray
    y_ret: np.ndarray
    z: np.ndarray
    x_disc: np.ndarray = None
    y1: np.ndarray = None
    h: np.ndarray = None
    y_disc: np.ndarray = None
    fused: np.ndarray = None


def forward_heads(x_ret, x_disc, params: HeadParams) -> HeadCache:
    """Run the classical stack on scaled features; x_disc is ignored in baseline mode."""
    x_ret = np.asarray(x_ret, dtype=np.float64)
    y_ret = retained_head(x_ret, params)
    if params.recycle:
        x_disc = np.asarray(x_disc, dtype=np.float64)
        y1, h, y_disc = discarded_head_stages(x_disc, params)
        fused = fuse(y_ret, y_disc)
    else:
        x_disc = y1 = h = y_disc = None
        fused = y_ret
    z = params.w_final @ fused + params.b_final if params.final_layer else fused
    return HeadCache(x_ret=x_ret, y_ret=y_ret, z=z, x_disc=x_disc,
                     y1=y1, h=h, y_disc=y_disc, fused=fused)
