"""Decay-profile analysis: doubling-type regularity, growth envelopes, constants.

A profile f is (A, gamma)-regular on [a, b) when it is non-decreasing and
f(gamma*s)/f(s) <= A * f(gamma*t)/f(t) for all a <= s < t < b/gamma.  This
module fits the least such A on a grid, checks exponential / stretched /
polynomial growth envelopes, and computes the derived constants

    alpha = min{1/(2*gamma), 1/(64*delta)},    beta = ceil(log 2 / log gamma).

Two beta conventions are in circulation (see ``beta_constant``); the
``section3`` form, which guarantees gamma**beta >= 2, is the default, and
reports surface the discrepancy rather than hiding it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: grid density for closed-form sweeps (points per decade of t)
DEFAULT_POINTS_PER_DECADE = 512

#: sweep window substituted for unbounded closed-form intervals
CLOSED_FORM_FLOOR = 1e-6
CLOSED_FORM_CAP = 1e6

BETA_CONVENTIONS = ("section3", "theorem-statement")

BETA_NOTE = ("beta convention discrepancy: the interval-regularity machinery "
             "requires beta = ceil(log 2 / log gamma) (ensuring gamma^beta >= 2), "
             "while the headline bound statement prints ceil(log gamma / log 2); "
             "this report uses the '{used}' convention "
             "(section3={b3}, theorem-statement={bt}).")


class ProfileDomainError(ValueError):
    """Evaluation outside the profile's domain."""


class DecayProfile:
    """Positive non-decreasing profile, closed-form or tabulated.

    Closed forms: ``power(p)`` for t**p, ``exponential(delta)`` for
    exp(delta*t), ``stretched_exp(delta, eps)`` for exp(delta * t**eps).
    Tables interpolate linearly in log-log coordinates between sample points
    and refuse evaluation outside their grid.
    """

    def __init__(self, kind, params=None, times=None, values=None):
        self.kind = kind
        self.params = dict(params or {})
        if kind == "table":
            t = np.asarray(times, dtype=float)
            f = np.asarray(values, dtype=float)
            if t.ndim != 1 or t.shape != f.shape or len(t) < 2:
                raise ValueError("table profile needs matching 1-d arrays, >= 2 points")
            if not np.all(t > 0):
                raise ValueError("table times must be strictly positive")
            if not np.all(np.diff(t) > 0):
                raise ValueError("table times must be strictly increasing")
            if not np.all(f > 0):
                raise ValueError("profile values must be strictly positive")
            if np.any(np.diff(f) < -1e-12 * np.abs(f[:-1])):
                raise ValueError("profile is non-monotone; a decay profile must be "
                                 "non-decreasing")
            f = np.maximum.accumulate(f)  # absorb rounding-level dips
            self._log_t = np.log(t)
            self._log_f = np.log(f)
            self.times = t
            self.values = f
        elif kind not in ("power", "exp", "stretched-exp"):
            raise ValueError(f"unknown profile kind {kind!r}")

    # constructors ---------------------------------------------------------

    @classmethod
    def power(cls, p):
        if p < 0:
            raise ValueError("power exponent must be nonnegative")
        return cls("power", {"p": float(p)})

    @classmethod
    def exponential(cls, delta):
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        return cls("exp", {"delta": float(delta)})

    @classmethod
    def stretched_exp(cls, delta, eps):
        if delta < 0 or not (0.0 <= eps < 1.0):
            raise ValueError("need delta >= 0 and eps in [0, 1)")
        return cls("stretched-exp", {"delta": float(delta), "eps": float(eps)})

    @classmethod
    def from_table(cls, times, values):
        return cls("table", times=times, values=values)

    @classmethod
    def from_on_diagonal(cls, curve):
        """Profile f(t) = 1 / P_x(X_t = x) from an on-diagonal curve.

        The return probability is non-increasing on finite graphs, so 1/p is
        non-decreasing; a running maximum absorbs kernel-tolerance noise.
        Entries with t = 0 are dropped (log-log table).
        """
        pts = [(t, p) for t, p in curve if t > 0]
        if len(pts) < 2:
            raise ValueError("need at least two positive-time samples")
        t = np.array([q[0] for q in pts])
        p = np.array([q[1] for q in pts])
        if np.any(p <= 0):
            raise ValueError("on-diagonal probabilities must be positive")
        f = np.maximum.accumulate(1.0 / p)
        return cls("table", times=t, values=f)

    # evaluation -----------------------------------------------------------

    @property
    def domain(self):
        if self.kind == "table":
            return (float(self.times[0]), float(self.times[-1]))
        return (0.0, math.inf)

    def log_value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            with np.errstate(divide="ignore"):
                out = self.params["p"] * np.log(t)
        elif self.kind == "exp":
            out = self.params["delta"] * t
        elif self.kind == "stretched-exp":
            out = self.params["delta"] * t ** self.params["eps"]
        else:
            lo, hi = self.domain
            tt = np.atleast_1d(t)
            if np.any(tt < lo * (1 - 1e-12)) or np.any(tt > hi * (1 + 1e-12)):
                raise ProfileDomainError(
                    f"t outside table domain [{lo:g}, {hi:g}]")
            out = np.interp(np.log(tt), self._log_t, self._log_f)
            if np.ndim(t) == 0:
                return float(out[0])
        return float(out) if np.ndim(t) == 0 else out

    def value(self, t):
        return np.exp(self.log_value(t))

    def __repr__(self):
        if self.kind == "table":
            lo, hi = self.domain
            return f"DecayProfile(table, {len(self.times)} pts on [{lo:g}, {hi:g}])"
        return f"DecayProfile({self.kind}, {self.params})"


# ---------------------------------------------------------------------------
# regularity fitting

def _sweep_grid(profile, gamma, interval, points_per_decade):
    """Grid of admissible s values in [a, b/gamma) with gamma*s evaluable."""
    a, b = interval
    if b <= a:
        raise ValueError("empty interval")
    if profile.kind == "table":
        lo, hi = profile.domain
        a_eff = max(a, lo)
        b_eff = min(b, hi * (1 + 1e-15))
        pts = profile.times
        mask = (pts >= a_eff) & (pts < b_eff / gamma) & (pts * gamma <= hi * (1 + 1e-12))
        grid = pts[mask]
    else:
        a_eff = a if a > 0 else CLOSED_FORM_FLOOR
        b_eff = b if math.isfinite(b) else CLOSED_FORM_CAP
        upper = b_eff / gamma
        if upper <= a_eff:
            grid = np.zeros(0)
        else:
            decades = math.log10(upper / a_eff)
            count = max(int(decades * points_per_decade) + 1, 2)
            grid = np.geomspace(a_eff, upper, count)
            grid = grid[grid < upper * (1 - 1e-15) + 1e-300]
    if len(grid) < 2:
        raise ValueError("empty admissible pair set: grid too sparse for this "
                         "interval and gamma")
    return grid


def minimal_regularity_constant(profile, gamma, interval,
                                points_per_decade=DEFAULT_POINTS_PER_DECADE,
                                return_witness=False):
    """Least A making the profile (A, gamma)-regular on the sweep grid.

    Returns sup over grid pairs s < t of [f(gamma s)/f(s)] / [f(gamma t)/f(t)],
    clamped below at 1.  Tables are swept at their own grid points; closed
    forms on a log-spaced grid (``points_per_decade`` controls density).
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    grid = _sweep_grid(profile, gamma, interval, points_per_decade)
    log_r = profile.log_value(gamma * grid) - profile.log_value(grid)
    # sup_{i<j} r_i / r_j via suffix minima of log r
    suffix_min = np.minimum.accumulate(log_r[::-1])[::-1]
    diffs = log_r[:-1] - suffix_min[1:]
    i = int(np.argmax(diffs))
    best = float(diffs[i])
    a_min = float(math.exp(best)) if best > 0 else 1.0
    if not return_witness:
        return a_min
    j = i + 1 + int(np.argmin(log_r[i + 1:]))
    return a_min, (float(grid[i]), float(grid[j]))


def check_regular(profile, A, gamma, interval, rel_tol=1e-9,
                  points_per_decade=DEFAULT_POINTS_PER_DECADE):
    """True iff the minimal grid constant is at most A (within rel_tol).

    On failure the witness is the violating (s, t) pair.
    """
    if A <= 0:
        raise ValueError("A must be positive")
    a_min, witness = minimal_regularity_constant(
        profile, gamma, interval, points_per_decade, return_witness=True)
    ok = a_min <= A * (1.0 + rel_tol)
    return ok, (None if ok else witness)


def check_envelope(profile, kind, A, interval, delta=None, eps=None,
                   rel_tol=1e-9, points_per_decade=DEFAULT_POINTS_PER_DECADE):
    """Check f(t) <= A * envelope(t) at all grid points of the interval.

    kind: "exp" (A e^{delta t}, delta >= 1), "stretched"
    (A e^{delta t^eps}, delta >= 0, eps in [0,1)), or "poly" (A t^eps, eps >= 0).
    Returns (ok, witness) with witness the worst grid point on failure.
    """
    if A < 1:
        raise ValueError("A must be at least 1")
    if kind == "exp":
        if delta is None or delta < 1:
            raise ValueError("exp envelope needs delta >= 1")
        log_env = lambda t: math.log(A) + delta * t
    elif kind == "stretched":
        if delta is None or eps is None or delta < 0 or not 0 <= eps < 1:
            raise ValueError("stretched envelope needs delta >= 0, eps in [0,1)")
        log_env = lambda t: math.log(A) + delta * t ** eps
    elif kind == "poly":
        if eps is None or eps < 0:
            raise ValueError("poly envelope needs eps >= 0")
        log_env = lambda t: math.log(A) + eps * math.log(t)
    else:
        raise ValueError(f"unknown envelope kind {kind!r}")

    grid = _envelope_grid(profile, interval, points_per_decade)
    log_f = np.atleast_1d(profile.log_value(grid))
    log_bound = np.array([log_env(float(t)) for t in grid])
    slack = log_bound - log_f
    worst = int(np.argmin(slack))
    ok = bool(slack[worst] >= -rel_tol)
    return ok, (None if ok else (float(grid[worst]), float(np.exp(log_f[worst])),
                                 float(np.exp(log_bound[worst]))))


def _envelope_grid(profile, interval, points_per_decade):
    a, b = interval
    if profile.kind == "table":
        lo, hi = profile.domain
        a_eff, b_eff = max(a, lo), min(b, hi * (1 + 1e-15))
        grid = profile.times[(profile.times >= a_eff) & (profile.times <= b_eff)]
    else:
        a_eff = a if a > 0 else CLOSED_FORM_FLOOR
        b_eff = b if math.isfinite(b) else CLOSED_FORM_CAP
        decades = math.log10(max(b_eff / a_eff, 10.0))
        count = max(int(decades * points_per_decade) + 1, 2)
        grid = np.geomspace(a_eff, b_eff, count)
    if len(grid) == 0:
        raise ValueError("interval contains no evaluable grid points")
    return grid


# ---------------------------------------------------------------------------
# derived constants

def beta_constant(gamma, convention="section3"):
    """Doubling exponent for the regularity machinery.

    section3: ceil(log 2 / log gamma), the form the interval-chaining argument
    needs (gamma**beta >= 2).  theorem-statement: ceil(log gamma / log 2), as
    printed in the headline bound.  A 1e-12 ulp guard keeps exact integer
    ratios from rounding up.
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    if convention == "section3":
        ratio = math.log(2.0) / math.log(gamma)
    elif convention == "theorem-statement":
        ratio = math.log(gamma) / math.log(2.0)
    else:
        raise ValueError(f"unknown beta convention {convention!r}; "
                         f"expected one of {BETA_CONVENTIONS}")
    return max(1, math.ceil(ratio - 1e-12))


def derived_constants(gamma, delta, beta_convention="section3"):
    """(alpha, beta) with alpha = min{1/(2 gamma), 1/(64 delta)}."""
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    if delta < 1:
        raise ValueError("delta must be at least 1")
    alpha = min(1.0 / (2.0 * gamma), 1.0 / (64.0 * delta))
    return alpha, beta_constant(gamma, beta_convention)


def check_halving_lemma(profile, A, gamma, t, k_max, rel_tol=1e-9,
                        beta_convention="section3"):
    """Verify f(t / 2^k) >= (A^beta f(t)/f(gamma^-beta t))^{-k} f(t), k=1..k_max.

    Numerical confirmation of the halving consequence of (A, gamma)-regularity.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    beta = beta_constant(gamma, beta_convention)
    lo, _ = profile.domain
    needed = min(t / 2.0 ** k_max, t * gamma ** (-beta)) if k_max else t
    if needed < lo * (1 - 1e-12):
        raise ProfileDomainError(
            f"halving chain needs t down to {needed:g}, below domain floor {lo:g}")
    log_base = (beta * math.log(A) + profile.log_value(t)
                - profile.log_value(t * gamma ** (-beta)))
    log_ft = profile.log_value(t)
    for k in range(1, k_max + 1):
        lhs = profile.log_value(t / 2.0 ** k)
        rhs = -k * log_base + log_ft
        if lhs < rhs - rel_tol:
            return False
    return True


# ---------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class RegularityProfile:
    """Fitted regularity data plus the derived bound constants."""

    A: float
    gamma: float
    interval: tuple
    envelope: dict  # {"kind": ..., params...} or {"kind": "none"}
    alpha: float
    beta: int


def fit_regularity_profile(profile, gamma, interval, envelope_kind="none",
                           delta=None, eps=None,
                           beta_convention="section3",
                           points_per_decade=DEFAULT_POINTS_PER_DECADE):
    """Fit A on the interval, check the requested envelope, derive (alpha, beta)."""
    a_min = minimal_regularity_constant(profile, gamma, interval,
                                        points_per_decade)
    A = max(1.0, a_min)
    envelope = {"kind": envelope_kind}
    env_ok = None
    if envelope_kind == "exp":
        env_ok, _ = check_envelope(profile, "exp", A, interval, delta=delta,
                                   points_per_decade=points_per_decade)
        envelope["delta"] = delta
        alpha = min(1.0 / (2.0 * gamma), 1.0 / (64.0 * delta))
    elif envelope_kind == "stretched":
        env_ok, _ = check_envelope(profile, "stretched", A, interval,
                                   delta=delta, eps=eps,
                                   points_per_decade=points_per_decade)
        envelope.update(delta=delta, eps=eps)
        alpha = 1.0 / (2.0 * gamma)
    elif envelope_kind == "poly":
        env_ok, _ = check_envelope(profile, "poly", A, interval, eps=eps,
                                   points_per_decade=points_per_decade)
        envelope["eps"] = eps
        alpha = 1.0 / (2.0 * gamma)
    elif envelope_kind == "none":
        alpha = 1.0 / (2.0 * gamma)
    else:
        raise ValueError(f"unknown envelope kind {envelope_kind!r}")
    if env_ok is not None:
        envelope["holds"] = env_ok
    beta = beta_constant(gamma, beta_convention)
    return RegularityProfile(A=A, gamma=gamma, interval=tuple(interval),
                             envelope=envelope, alpha=alpha, beta=beta)


def regularity_report(profile, gamma, interval, envelope_kind="none",
                      delta=None, eps=None, beta_convention="section3",
                      points_per_decade=DEFAULT_POINTS_PER_DECADE):
    """JSON-ready report; surfaces the beta-convention discrepancy exactly once."""
    fitted = fit_regularity_profile(profile, gamma, interval, envelope_kind,
                                    delta=delta, eps=eps,
                                    beta_convention=beta_convention,
                                    points_per_decade=points_per_decade)
    b3 = beta_constant(gamma, "section3")
    bt = beta_constant(gamma, "theorem-statement")
    return {
        "A": fitted.A,
        "gamma": gamma,
        "interval": [float(interval[0]), float(interval[1])],
        "envelope": fitted.envelope,
        "alpha": fitted.alpha,
        "beta": fitted.beta,
        "beta_convention": beta_convention,
        "beta_section3": b3,
        "beta_theorem_statement": bt,
        "beta_note": BETA_NOTE.format(used=beta_convention, b3=b3, bt=bt),
        "grid_points_per_decade": points_per_decade,
    }
