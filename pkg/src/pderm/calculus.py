"""Losses, regularizers, conjugates, and proximal operators.

Per-sample losses are scalar functions of the margin u = x_i^T w; the
regularizer acts on the full weight vector.  Conjugate values that sit
outside a function's effective domain are reported with the tagged
INFEASIBLE value rather than a floating sentinel, so gap reporting can
branch on feasibility explicitly.
"""

from dataclasses import dataclass

import numpy as np

from .blocks import BlockPartition, FeatureMatrix

__all__ = [
    "INFEASIBLE",
    "is_infeasible",
    "LossSpec",
    "RegularizerSpec",
    "ConjugateDomain",
    "ProblemInstance",
    "loss_eval",
    "conj_eval",
    "prox_conj",
    "prox_loss",
    "reg_eval",
    "reg_prox",
    "reg_conj_eval",
    "reg_conj_prox",
    "moreau_check",
    "loss_total",
    "conj_total",
    "prox_conj_vec",
    "conjugate_domain",
]


class _Infeasible:
    """Tagged +infinity marker for conjugate values outside the domain."""

    __slots__ = ()

    def __repr__(self):
        return "INFEASIBLE"


INFEASIBLE = _Infeasible()


def is_infeasible(x):
    return x is INFEASIBLE


@dataclass(frozen=True)
class LossSpec:
    """Per-sample loss family plus labels.

    kind 'squared' takes real labels, kind 'hinge' takes labels in
    {-1, +1}.  Labels live here, not on the data matrix, so one matrix
    can back both regression and classification instances.
    """

    kind: str
    y: np.ndarray

    def __post_init__(self):
        if self.kind not in ("squared", "hinge"):
            raise ValueError("unknown loss kind %r" % (self.kind,))
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise ValueError("labels must be a 1-d array")
        if not np.all(np.isfinite(y)):
            raise ValueError("labels must be finite")
        if self.kind == "hinge" and not np.all(np.abs(y) == 1.0):
            raise ValueError("hinge labels must be exactly -1 or +1")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return len(self.y)


@dataclass(frozen=True)
class RegularizerSpec:
    """Regularizer family: 'ridge' is (lam/2)||w||^2, 'l1' is lam*||w||_1."""

    kind: str
    lam: float

    def __post_init__(self):
        if self.kind not in ("ridge", "l1"):
            raise ValueError("unknown regularizer kind %r" % (self.kind,))
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError("lam must be positive and finite")


class ConjugateDomain:
    """Per-coordinate feasible interval of the conjugate loss."""

    def __init__(self, loss):
        self.loss = loss

    def interval(self, i):
        if self.loss.kind == "squared":
            return (-np.inf, np.inf)
        # hinge: y_i * v_i in [-1, 0]
        if self.loss.y[i] > 0:
            return (-1.0, 0.0)
        return (0.0, 1.0)

    def contains(self, i, v):
        lo, hi = self.interval(i)
        return lo <= v <= hi

    def clip(self, i, v):
        lo, hi = self.interval(i)
        return min(max(v, lo), hi)


def conjugate_domain(loss):
    return ConjugateDomain(loss)


@dataclass(frozen=True)
class ProblemInstance:
    """One regularized ERM instance: data, loss, regularizer, partition."""

    X: FeatureMatrix
    loss: LossSpec
    reg: RegularizerSpec
    part: BlockPartition

    def __post_init__(self):
        if self.loss.n != self.X.n:
            raise ValueError("label count %d != sample count %d" % (self.loss.n, self.X.n))
        if self.part.n != self.X.n:
            raise ValueError("partition covers %d samples, data has %d" % (self.part.n, self.X.n))

    @property
    def d(self):
        return self.X.d

    @property
    def n(self):
        return self.X.n

    @property
    def K(self):
        return self.part.K


def loss_eval(spec, i, u):
    """ell_i(u): squared residual or hinge margin loss."""
    y = spec.y[i]
    if spec.kind == "squared":
        return 0.5 * (u - y) ** 2
    return max(0.0, 1.0 - y * u)


def conj_eval(spec, i, v):
    """ell_i^*(v), or INFEASIBLE outside the hinge domain."""
    y = spec.y[i]
    if spec.kind == "squared":
        return 0.5 * v * v + y * v
    t = y * v
    if -1.0 <= t <= 0.0:
        return t
    return INFEASIBLE


def prox_conj(spec, i, s, x):
    """prox of s * ell_i^* at x; the result always lands in the domain."""
    if s <= 0:
        raise ValueError("prox scale must be positive")
    y = spec.y[i]
    if spec.kind == "squared":
        return (x - s * y) / (1.0 + s)
    return y * min(max(y * x - s, -1.0), 0.0)


def prox_loss(spec, i, s, x):
    """prox of s * ell_i at x."""
    if s <= 0:
        raise ValueError("prox scale must be positive")
    y = spec.y[i]
    if spec.kind == "squared":
        return (x + s * y) / (1.0 + s)
    t = y * x
    if t >= 1.0:
        return x
    if t <= 1.0 - s:
        return x + s * y
    return y


def reg_eval(spec, w):
    """g(w): ridge energy or l1 norm scaled by lam."""
    w = np.asarray(w, dtype=np.float64)
    if spec.kind == "ridge":
        return 0.5 * spec.lam * float(w @ w)
    return spec.lam * float(np.sum(np.abs(w)))


def reg_prox(spec, s, x):
    """prox of s * g at a vector x, coordinatewise closed form."""
    if s <= 0:
        raise ValueError("prox scale must be positive")
    x = np.asarray(x, dtype=np.float64)
    if spec.kind == "ridge":
        return x / (1.0 + s * spec.lam)
    th = s * spec.lam
    return np.sign(x) * np.maximum(np.abs(x) - th, 0.0)


def reg_conj_eval(spec, u):
    """g^*(u); the l1 conjugate is the indicator of the lam-box."""
    u = np.asarray(u, dtype=np.float64)
    if spec.kind == "ridge":
        return float(u @ u) / (2.0 * spec.lam)
    if np.max(np.abs(u), initial=0.0) <= spec.lam:
        return 0.0
    return INFEASIBLE


def reg_conj_prox(spec, s, x):
    """prox of s * g^* at a vector x."""
    if s <= 0:
        raise ValueError("prox scale must be positive")
    x = np.asarray(x, dtype=np.float64)
    if spec.kind == "ridge":
        return spec.lam * x / (spec.lam + s)
    # projection onto the box, independent of the scale
    return np.clip(x, -spec.lam, spec.lam)


def moreau_check(spec, s, x, i=0):
    """Residual of prox_{s f}(x) + s prox_{f*/s}(x/s) - x for one pair.

    Dispatches on the spec type: a LossSpec checks the loss/conjugate
    pair at sample i, a RegularizerSpec checks g against g^*.  Returns
    the largest absolute component of the residual.
    """
    if isinstance(spec, LossSpec):
        a = prox_loss(spec, i, s, x)
        b = prox_conj(spec, i, 1.0 / s, x / s)
        return abs(a + s * b - x)
    a = reg_prox(spec, s, x)
    b = reg_conj_prox(spec, 1.0 / s, np.asarray(x, dtype=np.float64) / s)
    r = a + s * b - x
    return float(np.max(np.abs(r), initial=0.0))


def loss_total(spec, u):
    """Sum of ell_i(u_i) over all samples, vectorized."""
    u = np.asarray(u, dtype=np.float64)
    if spec.kind == "squared":
        r = u - spec.y
        return 0.5 * float(r @ r)
    return float(np.sum(np.maximum(0.0, 1.0 - spec.y * u)))


def conj_total(spec, v):
    """Sum of ell_i^*(v_i), or INFEASIBLE if any coordinate is out of domain."""
    v = np.asarray(v, dtype=np.float64)
    if spec.kind == "squared":
        return 0.5 * float(v @ v) + float(spec.y @ v)
    t = spec.y * v
    if np.any(t < -1.0) or np.any(t > 0.0):
        return INFEASIBLE
    return float(np.sum(t))


def prox_conj_vec(spec, s, x, indices=None):
    """Coordinatewise prox of s * ell^* over a vector of inputs.

    ``indices`` selects which samples' conjugates apply (defaults to
    0..len(x)-1), so block slices can be proxed in one shot.
    """
    if s <= 0:
        raise ValueError("prox scale must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = spec.y if indices is None else spec.y[indices]
    if spec.kind == "squared":
        return (x - s * y) / (1.0 + s)
    return y * np.clip(y * x - s, -1.0, 0.0)
