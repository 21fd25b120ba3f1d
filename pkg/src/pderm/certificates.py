"""Objectives, duality-gap certificates, P-seminorms, and residual checks.

The primal and dual objectives bracket the saddle value, so their gap
certifies optimality of an iterate pair.  Each ADMM-style update rule
is a generalized proximal-point iteration in a rule-specific seminorm;
the quadratic form, the membership residual of one round, and the
ergodic bound on the averaged iterates are all evaluated here.
"""

import math
from dataclasses import dataclass

import numpy as np

from .blocks import block_views
from .calculus import (
    INFEASIBLE,
    conj_total,
    is_infeasible,
    loss_total,
    reg_conj_eval,
    reg_eval,
)

__all__ = [
    "GapReport",
    "PMatrix",
    "PSDViolationError",
    "primal_objective",
    "dual_objective",
    "lagrangian",
    "gap_report",
    "repair_dual_point",
    "p_seminorm_sq",
    "ppm_residual",
    "ergodic_gap_bound_check",
    "fejer_distances",
    "relative_gap",
]


class PSDViolationError(RuntimeError):
    """A P-quadratic form came out definitely negative: bad parameters."""


def primal_objective(problem, w):
    """(1/n) sum ell_i(x_i^T w) + g(w)."""
    margins = problem.X.rmatvec(np.asarray(w, dtype=np.float64))
    return loss_total(problem.loss, margins) / problem.n + reg_eval(problem.reg, w)


def dual_objective(problem, v):
    """-(1/n) sum ell_i^*(v_i) - g^*(-(1/n) X v), or INFEASIBLE.

    The value is minus infinity (tagged) when any conjugate term sits
    outside its domain, e.g. a lasso dual point outside the lam-box.
    """
    v = np.asarray(v, dtype=np.float64)
    ct = conj_total(problem.loss, v)
    if is_infeasible(ct):
        return INFEASIBLE
    u = -problem.X.matvec(v) / problem.n
    gc = reg_conj_eval(problem.reg, u)
    if is_infeasible(gc):
        return INFEASIBLE
    return -ct / problem.n - gc


def lagrangian(problem, w, v):
    """L(w; v) = -(1/n) sum ell_i^*(v_i) + (1/n) <w, Xv> + g(w)."""
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    ct = conj_total(problem.loss, v)
    if is_infeasible(ct):
        return INFEASIBLE
    cross = float(w @ problem.X.matvec(v)) / problem.n
    return -ct / problem.n + cross + reg_eval(problem.reg, w)


def repair_dual_point(problem, v):
    """Rescale v into g^*-feasibility for gap reporting.

    For the l1 regularizer the dual objective carries the indicator of
    the lam-box on -(1/n)Xv; raw iterates can violate it, which would
    make every reported gap infinite.  Scaling v by
    min(1, n*lam / ||Xv||_inf) restores feasibility.  The scaling is a
    certificate post-processing step, not part of any update rule.
    Ridge duals are returned unchanged.
    """
    v = np.asarray(v, dtype=np.float64)
    if problem.reg.kind != "l1":
        return v, False
    m = float(np.max(np.abs(problem.X.matvec(v)), initial=0.0))
    bound = problem.n * problem.reg.lam
    if m <= bound:
        return v, False
    return v * (bound / m), True


@dataclass(frozen=True)
class GapReport:
    """Primal value, dual value, and their difference for one iterate pair.

    ``dual`` is None when the dual point is infeasible (dual value minus
    infinity); the gap is then infinite.
    """

    primal: float
    dual: float | None
    repaired: bool = False

    @property
    def feasible(self):
        return self.dual is not None

    @property
    def gap(self):
        if self.dual is None:
            return math.inf
        return self.primal - self.dual


def gap_report(problem, w, v, repair=True):
    """Duality-gap certificate at (w, v), optionally repairing lasso duals."""
    repaired = False
    if repair:
        v, repaired = repair_dual_point(problem, v)
    dv = dual_objective(problem, v)
    pv = primal_objective(problem, w)
    if is_infeasible(dv):
        return GapReport(pv, None, repaired)
    return GapReport(pv, dv, repaired)


class PMatrix:
    """Rule-specific block operator P as quadratic form and matvec.

    P is assembled from the step parameters, the data matrix A = X, and
    the Gram blockdiagonal B = diag(X_[k]^T X_[k]); it is only ever
    applied through matrix-vector products, never materialized, except
    for the small dense cross-check used in tests.
    """

    def __init__(self, problem, rule, beta=None, rho=None, eta1=None, eta2=None, tau=None):
        if rule not in ("consensus", "linconsensus", "proximal1", "proximal2"):
            raise ValueError("no P matrix for rule %r" % (rule,))
        self.problem = problem
        self.rule = rule
        self.beta = beta
        self.rho = rho
        self.eta1 = eta1
        self.eta2 = eta2
        self.tau = tau
        self.views = block_views(problem.X, problem.part)
        K = problem.K
        n = problem.n
        if rule in ("consensus", "linconsensus"):
            if beta is None or beta <= 0:
                raise ValueError("consensus P needs beta > 0")
            self._ww = beta * K
            self._wv = 1.0 / n
            self._vb = 1.0 / (n * n * beta)
        else:
            if rho is None or rho <= 0:
                raise ValueError("proximal P needs rho > 0")
            self._ww = 1.0 / rho
            self._wv = -1.0 / n
            if rule == "proximal1":
                if eta1 is None or eta1 <= 0:
                    raise ValueError("proximal1 P needs eta1 > 0")
                self._vb = rho * eta1 / (n * n)
            else:
                if eta2 is None or eta2 <= 0:
                    raise ValueError("proximal2 P needs eta2 > 0")
                self._vb = rho * eta2 / (n * n)
        if rule == "linconsensus":
            if tau is None or tau <= 0:
                raise ValueError("linconsensus P needs tau > 0")
            self._vb = tau / (n * n * beta)

    @property
    def gram_weighted(self):
        """True when the v-block of P carries the Gram blockdiagonal."""
        return self.rule in ("consensus", "proximal1")

    def quad(self, w, v):
        """z^T P z for z = (w, v), through matvec composition."""
        w = np.asarray(w, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        acc = self._ww * float(w @ w)
        acc += 2.0 * self._wv * float(w @ self.problem.X.matvec(v))
        if self.gram_weighted:
            s = 0.0
            for view in self.views:
                y = view.matvec(view.take(v))
                s += float(y @ y)
            acc += self._vb * s
        else:
            acc += self._vb * float(v @ v)
        return acc

    def apply(self, w, v):
        """P z as a pair (w-part, v-part)."""
        w = np.asarray(w, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        rw = self._ww * w + self._wv * self.problem.X.matvec(v)
        rv = np.empty_like(v)
        for view in self.views:
            local = self._wv * (-1.0 if False else 1.0)  # placeholder, replaced below
        rv = self._wv * self.problem.X.rmatvec(w) * 1.0
        if self.gram_weighted:
            bv = np.empty_like(v)
            for view in self.views:
                view.scatter(view.rmatvec(view.matvec(view.take(v))), bv)
            rv = rv + self._vb * bv
        else:
            rv = rv + self._vb * v
        return rw, rv

    def dense(self):
        """Materialize P for cross-checks; small instances only."""
        n = self.problem.n
        d = self.problem.d
        if n + d > 600:
            raise ValueError("dense P guard: d + n = %d too large" % (n + d,))
        A = np.asarray(self.problem.X.entries)
        top = np.hstack([self._ww * np.eye(d), self._wv * A])
        B = np.zeros((n, n))
        if self.gram_weighted:
            for view in self.views:
                B[np.ix_(view.indices, view.indices)] = view.gram()
            vblock = self._vb * B
        else:
            vblock = self._vb * np.eye(n)
        bottom = np.hstack([self._wv * A.T, vblock])
        return np.vstack([top, bottom])


def p_seminorm_sq(pm, w, v):
    """||z||_P^2; raises if the form is negative beyond round-off."""
    val = pm.quad(w, v)
    if val < -1e-9:
        raise PSDViolationError(
            "quadratic form %r is negative: parameters violate the PSD requirement" % (val,)
        )
    return val


def _dist_to_reg_subdiff(problem, t, w):
    """Componentwise distance from t to the subdifferential of g at w."""
    lam = problem.reg.lam
    if problem.reg.kind == "ridge":
        return np.abs(t - lam * w)
    out = np.empty_like(t)
    pos = w > 0
    neg = w < 0
    zero = ~(pos | neg)
    out[pos] = np.abs(t[pos] - lam)
    out[neg] = np.abs(t[neg] + lam)
    out[zero] = np.maximum(np.abs(t[zero]) - lam, 0.0)
    return out


def _dist_to_conj_subdiff(problem, t, v):
    """Componentwise distance from t to (1/n) * subdiff of ell^* at v."""
    n = problem.n
    y = problem.loss.y
    if problem.loss.kind == "squared":
        return np.abs(t - (v + y) / n)
    # hinge: the subdifferential is y_i*[1, inf) at v_i = 0, y_i*(-inf, 1]
    # at y_i v_i = -1, and {y_i} strictly inside the interval
    q = n * y * t
    alpha = -y * v
    out = np.abs(q - 1.0)
    at_zero = alpha == 0.0
    at_one = alpha == 1.0
    out[at_zero] = np.maximum(1.0 - q[at_zero], 0.0)
    out[at_one] = np.maximum(q[at_one] - 1.0, 0.0)
    return out / n


def ppm_residual(problem, pm, w_prev, v_prev, w_next, v_next):
    """Membership defect of one round in the generalized proximal form.

    Computes r = P(z_prev - z_next) and measures how far r is from the
    saddle operator value at z_next, componentwise: smooth parts by
    direct subtraction, set-valued parts by projecting onto the
    subdifferential interval.  Returns the largest component distance.
    """
    w_prev = np.asarray(w_prev, dtype=np.float64)
    v_prev = np.asarray(v_prev, dtype=np.float64)
    w_next = np.asarray(w_next, dtype=np.float64)
    v_next = np.asarray(v_next, dtype=np.float64)
    if w_prev.shape != w_next.shape or v_prev.shape != v_next.shape:
        raise ValueError("iterate shape mismatch")
    rw, rv = pm.apply(w_prev - w_next, v_prev - v_next)
    tw = rw - problem.X.matvec(v_next) / problem.n
    tv = rv + problem.X.rmatvec(w_next) / problem.n
    dw = _dist_to_reg_subdiff(problem, tw, w_next)
    dv = _dist_to_conj_subdiff(problem, tv, v_next)
    return float(max(np.max(dw, initial=0.0), np.max(dv, initial=0.0)))


def ergodic_gap_bound_check(problem, pm, w_hist, v_hist, w0, v0, w_star, v_star,
                            eps_seq=None, D=None):
    """Per-T Lagrangian-gap bound on the running averages.

    For each T the left side is L(wbar_T; v*) - L(w*; vbar_T) with
    running averages over rounds 1..T; the right side is
    ||z* - z0||_P^2 / (2T), plus D * sum_{t<=T} ||eps_t|| / T when an
    inexact-round error sequence is supplied.  Returns the list of
    (lhs, rhs) pairs.
    """
    quad0 = pm.quad(np.asarray(w_star) - np.asarray(w0), np.asarray(v_star) - np.asarray(v0))
    pairs = []
    w_acc = np.zeros_like(np.asarray(w0, dtype=np.float64))
    v_acc = np.zeros_like(np.asarray(v0, dtype=np.float64))
    eps_acc = 0.0
    for T in range(1, len(w_hist) + 1):
        w_acc = w_acc + w_hist[T - 1]
        v_acc = v_acc + v_hist[T - 1]
        lhs_a = lagrangian(problem, w_acc / T, v_star)
        lhs_b = lagrangian(problem, w_star, v_acc / T)
        if is_infeasible(lhs_a) or is_infeasible(lhs_b):
            raise ValueError("infeasible average iterate at T=%d" % T)
        rhs = quad0 / (2.0 * T)
        if eps_seq is not None:
            eps_acc += eps_seq[T - 1]
            rhs += (D if D is not None else 0.0) * eps_acc / T
        pairs.append((lhs_a - lhs_b, rhs))
    return pairs


def fejer_distances(pm, w_hist, v_hist, w_star, v_star):
    """P-seminorm distances ||z_t - z*||_P along a run, round 0 included
    when the histories include it."""
    out = []
    for w, v in zip(w_hist, v_hist):
        q = pm.quad(np.asarray(w) - w_star, np.asarray(v) - v_star)
        out.append(math.sqrt(max(q, 0.0)))
    return out


def relative_gap(gaps, gap0):
    """Normalize a gap trajectory by the initial gap.

    Returns (values, normalized).  A zero or non-finite initial gap
    cannot normalize; the absolute gaps come back with the flag False.
    """
    if gap0 is None or gap0 == 0.0 or not math.isfinite(gap0):
        return list(gaps), False
    return [g / gap0 for g in gaps], True
