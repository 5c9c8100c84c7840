"""Distributional tests for log-leaders: Shapiro-Wilk normality testing,
normal QQ-plot data, the univariate log-concave maximum-likelihood density
estimator with exact sampling, and the permutation test of log-concavity
built on the ball-discrepancy statistic.

The tests treat their input as an i.i.d. sample.  Log-leaders within a scale
are dependent in general; the procedures here are applied to them as-is,
which is the standard practice this package reproduces, and the caveat is
deliberately not corrected for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (DataError, NonConvergenceError, RngSpec, normal_cdf,
                   standard_normal_quantile)

__all__ = [
    "TestReport", "shapiro_wilk", "qq_data", "LogConcaveMLE",
    "fit_logconcave_mle", "sample_from_mle", "interval_discrepancy",
    "logconcavity_test",
]


@dataclass
class TestReport:
    """Outcome of one hypothesis test run."""

    name: str
    statistic: float
    p_value: float | None
    alpha: float
    rejected: bool
    n: int
    B: int | None = None
    seed: RngSpec | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {"name": self.name, "statistic": self.statistic,
               "p_value": self.p_value, "alpha": self.alpha,
               "rejected": bool(self.rejected), "n": self.n, "B": self.B}
        if self.seed is not None:
            doc["seed"] = self.seed.to_dict()
        doc.update(self.details)
        return doc


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's AS R94 approximation, valid for 3 <= n <= 5000)

_SW_C1 = (-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0)
_SW_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
_SW_C3 = (-0.0006714, 0.025054, -0.39978, 0.544)
_SW_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
_SW_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_SW_C6 = (0.0030302, -0.082676, -0.4803)


def _poly(coeffs, x: float) -> float:
    out = coeffs[0]
    for c in coeffs[1:]:
        out = out * x + c
    return out


def _sw_coefficients(n: int) -> np.ndarray:
    """Expected-normal-order-statistic weights with Royston's end corrections."""
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    m = standard_normal_quantile((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(np.sum(m * m))
    rsn = 1.0 / math.sqrt(n)
    a_top = _poly(_SW_C1, rsn) + m[-1] / math.sqrt(ssq)
    a = np.empty(n)
    if n > 5:
        a_top2 = _poly(_SW_C2, rsn) + m[-2] / math.sqrt(ssq)
        fac = math.sqrt((ssq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2)
                        / (1.0 - 2.0 * a_top ** 2 - 2.0 * a_top2 ** 2))
        a[2:n - 2] = m[2:n - 2] / fac
        a[-1], a[-2] = a_top, a_top2
        a[0], a[1] = -a_top, -a_top2
    else:
        fac = math.sqrt((ssq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_top ** 2))
        a[1:n - 1] = m[1:n - 1] / fac
        a[-1] = a_top
        a[0] = -a_top
    return a


def _sw_pvalue(w: float, n: int) -> float:
    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return min(max(p, 0.0), 1.0)
    w1 = max(1.0 - w, 1e-300)
    if n <= 11:
        gamma = 0.459 * n - 2.273
        y = math.log(w1)
        if y >= gamma:
            return 1e-99
        y = -math.log(gamma - y)
        mu = _poly(_SW_C3, float(n))
        sigma = math.exp(_poly(_SW_C4, float(n)))
    else:
        y = math.log(w1)
        ln_n = math.log(n)
        mu = _poly(_SW_C5, ln_n)
        sigma = math.exp(_poly(_SW_C6, ln_n))
    z = (y - mu) / sigma
    return float(1.0 - normal_cdf(z))


def shapiro_wilk(samples, alpha: float = 0.05,
                 rng: RngSpec | None = None) -> TestReport:
    """Shapiro-Wilk normality test.

    Samples larger than 5000 (the validity limit of the approximation) are
    first subsampled without replacement to 5000 using `rng`; the report
    records whether that happened.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise DataError("expected a 1-d sample")
    if not np.all(np.isfinite(x)):
        raise DataError("sample contains NaN or Inf")
    n0 = x.size
    if n0 < 3:
        raise DataError("Shapiro-Wilk needs at least 3 observations")
    subsampled = False
    if n0 > 5000:
        if rng is None:
            raise DataError("samples above 5000 points require an RngSpec "
                            "for deterministic subsampling")
        idx = rng.generator(0).choice(n0, size=5000, replace=False)
        x = x[idx]
        subsampled = True
    x = np.sort(x)
    n = x.size
    if x[-1] - x[0] <= 0.0:
        raise DataError("constant sample: W undefined")
    a = _sw_coefficients(n)
    num = float(np.dot(a, x)) ** 2
    den = float(np.sum((x - x.mean()) ** 2))
    w = min(num / den, 1.0)
    p = _sw_pvalue(w, n)
    return TestReport(name="shapiro_wilk", statistic=w, p_value=p, alpha=alpha,
                      rejected=p < alpha, n=n, seed=rng,
                      details={"subsampled": subsampled, "n_original": n0})


def qq_data(samples) -> np.ndarray:
    """Pairs (standard normal quantile at (i-0.5)/n, order statistic x_(i))
    for plotting the sample against the normal reference; the input is used
    as-is, so standardize beforehand when a unit reference line is wanted."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DataError("need at least 2 samples")
    x = np.sort(x)
    theo = standard_normal_quantile((np.arange(1, x.size + 1) - 0.5) / x.size)
    return np.column_stack([theo, x])


# ---------------------------------------------------------------------------
# Log-concave maximum likelihood (active-set Newton on knot values)

def _exp_segment_integrals(a, b):
    """I0, I1, I2 = int_0^1 u^p exp((1-u) a + u b) du for p = 0, 1, 2.

    Closed forms with series fallbacks near a = b, accurate to ~1e-13
    relative throughout.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    small = np.abs(d) < 1e-3
    ds = np.where(small, d, 0.0)
    ea = np.exp(a)
    i0_s = ea * (1.0 + ds / 2 + ds ** 2 / 6 + ds ** 3 / 24 + ds ** 4 / 120)
    i1_s = ea * (0.5 + ds / 3 + ds ** 2 / 8 + ds ** 3 / 30 + ds ** 4 / 144)
    i2_s = ea * (1.0 / 3 + ds / 4 + ds ** 2 / 10 + ds ** 3 / 36 + ds ** 4 / 168)
    dl = np.where(small, 1.0, d)
    eb = np.exp(b)
    i0_l = (eb - ea) / dl
    i1_l = (eb * (dl - 1.0) + ea) / dl ** 2
    i2_l = (eb * (dl ** 2 - 2.0 * dl + 2.0) - 2.0 * ea) / dl ** 3
    return (np.where(small, i0_s, i0_l), np.where(small, i1_s, i1_l),
            np.where(small, i2_s, i2_l))


@dataclass
class LogConcaveMLE:
    """Piecewise-linear concave log-density with knots at order statistics."""

    knots: np.ndarray
    log_density_at_knots: np.ndarray
    n: int
    objective_path: list = field(default_factory=list)
    converged: bool = True

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def log_pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.knots, self.log_density_at_knots)
        lo, hi = self.domain
        return np.where((x < lo) | (x > hi), -np.inf, out)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.log_pdf(x))

    def segment_masses(self) -> np.ndarray:
        lengths = np.diff(self.knots)
        i0, _, _ = _exp_segment_integrals(self.log_density_at_knots[:-1],
                                          self.log_density_at_knots[1:])
        return lengths * i0

    def total_mass(self) -> float:
        return float(np.sum(self.segment_masses()))

    def mean(self) -> float:
        lengths = np.diff(self.knots)
        a = self.log_density_at_knots[:-1]
        b = self.log_density_at_knots[1:]
        i0, i1, _ = _exp_segment_integrals(a, b)
        return float(np.sum(self.knots[:-1] * lengths * i0 + lengths ** 2 * i1))


class _MLEProblem:
    """State for the active-set solver on distinct points y with weights w."""

    def __init__(self, y: np.ndarray, w: np.ndarray):
        self.y = y
        self.w = w
        self.m = y.size

    def data_weights(self, knots_idx: np.ndarray) -> np.ndarray:
        """Weight each knot receives from the linear-interpolation data term."""
        yk = self.y[knots_idx]
        seg = np.clip(np.searchsorted(yk, self.y, side="right") - 1, 0,
                      yk.size - 2)
        theta = (self.y - yk[seg]) / (yk[seg + 1] - yk[seg])
        aw = np.zeros(yk.size)
        np.add.at(aw, seg, self.w * (1.0 - theta))
        np.add.at(aw, seg + 1, self.w * theta)
        return aw

    def objective(self, knots_idx: np.ndarray, v: np.ndarray,
                  aw: np.ndarray) -> float:
        yk = self.y[knots_idx]
        lengths = np.diff(yk)
        i0, _, _ = _exp_segment_integrals(v[:-1], v[1:])
        return float(np.dot(aw, v) - np.sum(lengths * i0))

    def grad_hess(self, knots_idx: np.ndarray, v: np.ndarray,
                  aw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of the objective and Hessian of the integral term."""
        yk = self.y[knots_idx]
        k = yk.size
        lengths = np.diff(yk)
        i0, i1, i2 = _exp_segment_integrals(v[:-1], v[1:])
        grad = aw.copy()
        grad[:-1] -= lengths * (i0 - i1)
        grad[1:] -= lengths * i1
        hess = np.zeros((k, k))
        d_pp = lengths * (i0 - 2.0 * i1 + i2)
        d_qq = lengths * i2
        d_pq = lengths * (i1 - i2)
        idx = np.arange(k - 1)
        hess[idx, idx] += d_pp
        hess[idx + 1, idx + 1] += d_qq
        hess[idx, idx + 1] += d_pq
        hess[idx + 1, idx] += d_pq
        return grad, hess


def _kinks(yk: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Right-slope minus left-slope at interior knots (feasible when <= 0)."""
    slopes = np.diff(v) / np.diff(yk)
    return slopes[1:] - slopes[:-1]


def _constraint_multipliers(prob: "_MLEProblem", knots_idx: np.ndarray,
                            v: np.ndarray) -> np.ndarray:
    """Multipliers of the straightness constraints at non-knot points.

    In full coordinates the objective gradient is g_j = w_j - (integral of
    the local hat function against exp(phi)), and stationarity reads
    g_j = (lam_{j+1}-lam_j)/h_j - (lam_j-lam_{j-1})/h_{j-1} with lam = 0 at
    knots, a per-segment Dirichlet problem solved by double cumulative
    summation.  Entries at knot positions are returned as 0.
    """
    y, w = prob.y, prob.w
    m = y.size
    v_full = np.interp(y, y[knots_idx], v)
    h = np.diff(y)
    i0, i1, _ = _exp_segment_integrals(v_full[:-1], v_full[1:])
    # hat integral at j: rising part over [j-1, j] plus falling part over [j, j+1]
    rise = h * i1                       # weight toward the right end of a segment
    fall = h * (i0 - i1)                # weight toward the left end
    tent = np.zeros(m)
    tent[1:] += rise
    tent[:-1] += fall
    g = w - tent
    lam = np.zeros(m)
    for a, b in zip(knots_idx, knots_idx[1:]):
        if b - a < 2:
            continue
        idx = np.arange(a + 1, b)
        big_g = np.cumsum(g[idx])
        hh = h[a:b]                     # h_a .. h_{b-1}
        # lam slope u_j = u_a + G_j;  sum h_j u_j = lam_b - lam_a = 0
        u0 = -(float(np.dot(hh[1:], big_g))) / float(np.sum(hh))
        u = np.concatenate([[u0], u0 + big_g])
        lam[idx] = np.cumsum(hh[:-1] * u[:-1])
    return lam


def fit_logconcave_mle(samples, tol_objective: float = 1e-8,
                       tol_concavity: float = 1e-9,
                       max_outer: int = 200,
                       max_inner: int = 200) -> LogConcaveMLE:
    """Maximum-likelihood log-concave density of a univariate sample.

    Maximizes (1/n) sum_i phi(X_i) - integral exp(phi) over concave phi; the
    optimum is piecewise linear with knots among the order statistics, found
    by an active-set method: Newton steps over the values at the current
    knots, dropping a knot whenever its concavity constraint becomes active
    and inserting the point with the largest positive bending derivative.
    The objective never decreases across iterations, and the fitted density
    integrates to one up to solver tolerance.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DataError("need at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise DataError("sample contains NaN or Inf")
    n = x.size
    y, counts = np.unique(x, return_counts=True)
    if y.size < 2:
        raise DataError("all samples identical: no density to fit")
    w = counts.astype(float) / n
    prob = _MLEProblem(y, w)
    m = y.size

    knots = np.array([0, m - 1])
    v = np.full(2, -math.log(y[-1] - y[0]))
    aw = prob.data_weights(knots)
    path: list[float] = [prob.objective(knots, v, aw)]

    for _outer in range(max_outer):
        # inner solve over the current knot set; terminates when Newton can
        # no longer raise the objective (optimality is judged by the outer
        # multiplier scan, not by the coordinate gradient, whose scale blows
        # up on the tiny segments between adjacent order statistics)
        stall = 0
        for _inner in range(max_inner):
            grad, hess = prob.grad_hess(knots, v, aw)
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                ridge = 1e-12 * max(np.trace(hess), 1.0)
                step = np.linalg.solve(hess + ridge * np.eye(hess.shape[0]),
                                       grad)
            gnorm = float(np.max(np.abs(grad)))
            if gnorm < 1e-11:
                break
            yk = prob.y[knots]
            kink0 = _kinks(yk, v)
            kink_d = _kinks(yk, v + step) - kink0
            with np.errstate(divide="ignore", invalid="ignore"):
                bounds = np.where(kink_d > 0, -kink0 / kink_d, np.inf)
            t_max = float(np.min(bounds)) if bounds.size else math.inf
            if t_max < 1e-13:
                # a constraint is already active: drop that knot, no step
                blocked = int(np.argmin(bounds)) + 1
                knots = np.delete(knots, blocked)
                v = np.delete(v, blocked)
                aw = prob.data_weights(knots)
                continue
            t = min(1.0, t_max)
            f0 = prob.objective(knots, v, aw)
            f_new = -math.inf
            for _ in range(60):
                f_new = prob.objective(knots, v + t * step, aw)
                if f_new >= f0:
                    break
                t *= 0.5
            if f_new < f0:
                break  # no ascent representable in float: inner is done
            v = v + t * step
            hit_boundary = t_max <= 1.0 and t == t_max
            path.append(f_new)
            if hit_boundary:
                yk = prob.y[knots]
                kinks = _kinks(yk, v)
                drop = np.where(kinks > -1e-15)[0] + 1
                if drop.size:
                    knots = np.delete(knots, drop)
                    v = np.delete(v, drop)
                    aw = prob.data_weights(knots)
                continue
            if f_new - f0 < 1e-13 * max(1.0, abs(f0)):
                stall += 1
                if stall >= 2:
                    break
            else:
                stall = 0

        # exact renormalization: shifting phi by -log(mass) is the optimal
        # constant adjustment, so it never decreases the objective and pins
        # the total mass to 1 up to rounding
        yk = prob.y[knots]
        mass = float(np.sum(np.diff(yk)
                            * _exp_segment_integrals(v[:-1], v[1:])[0]))
        if mass > 0 and abs(mass - 1.0) > 1e-15:
            v = v - math.log(mass)
            path.append(prob.objective(knots, v, aw))

        # KKT scan: Lagrange multipliers of the active (no-kink) constraints;
        # a negative multiplier marks a point where a downward bend raises
        # the objective, so that point becomes a knot
        best_i, best_score = -1, -tol_concavity
        lam = _constraint_multipliers(prob, knots, v)
        worst = int(np.argmin(lam))
        if lam[worst] < best_score:
            best_i, best_score = worst, float(lam[worst])
        if best_i < 0:
            break
        pos = int(np.searchsorted(knots, best_i))
        yk = prob.y[knots]
        seg = pos - 1
        frac = (prob.y[best_i] - yk[seg]) / (yk[seg + 1] - yk[seg])
        v_new = v[seg] + frac * (v[seg + 1] - v[seg])
        knots = np.insert(knots, pos, best_i)
        v = np.insert(v, pos, v_new)
        aw = prob.data_weights(knots)
    else:
        raise NonConvergenceError(
            f"active set did not settle after {max_outer} passes "
            f"(last insertion score {best_score:.3e})")

    model = LogConcaveMLE(knots=prob.y[knots], log_density_at_knots=v, n=n,
                          objective_path=path, converged=True)
    mass = model.total_mass()
    if abs(mass - 1.0) > 1e-6:
        raise NonConvergenceError(
            f"fitted density mass {mass} deviates from 1 beyond tolerance")
    kinks = _kinks(model.knots, model.log_density_at_knots)
    if kinks.size and float(np.max(kinks)) > tol_concavity:
        raise NonConvergenceError(
            f"concavity violated by {float(np.max(kinks)):.3e}")
    return model


def _sample_from_mle(model: LogConcaveMLE, n: int,
                     gen: np.random.Generator) -> np.ndarray:
    masses = model.segment_masses()
    probs = masses / masses.sum()
    seg = gen.choice(probs.size, size=n, p=probs)
    u = gen.random(n)
    yk = model.knots
    v = model.log_density_at_knots
    lengths = np.diff(yk)
    slopes = np.diff(v) / lengths
    s = slopes[seg]
    ln = lengths[seg]
    flat = np.abs(s * ln) < 1e-12
    with np.errstate(over="ignore"):
        inv = np.where(flat, u * ln,
                       np.log1p(u * np.expm1(np.where(flat, 0.0, s * ln)))
                       / np.where(flat, 1.0, s))
    return yk[seg] + inv


def sample_from_mle(model: LogConcaveMLE, n: int, rng: RngSpec) -> np.ndarray:
    """Exact draws from a fitted log-concave density: segment selection by
    closed-form masses, then inversion of the exponential-linear CDF."""
    if n < 1:
        raise DataError("need n >= 1")
    return _sample_from_mle(model, n, rng.generator(0))


# ---------------------------------------------------------------------------
# Ball-discrepancy statistic and the permutation test of log-concavity

_CHUNK_ELEMENTS = 8_000_000


def _ball_geometry(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-center inclusion order of the pooled points and the positions
    where a radius sweep completes a tie group of equal distances."""
    m = z.size
    order = np.empty((m, m), dtype=np.int32)
    valid = np.empty((m, m), dtype=bool)
    rows = max(1, _CHUNK_ELEMENTS // m)
    for start in range(0, m, rows):
        stop = min(start + rows, m)
        d = np.abs(z[None, start:stop].T - z[None, :])
        o = np.argsort(d, axis=1, kind="stable").astype(np.int32)
        ds = np.take_along_axis(d, o, axis=1)
        order[start:stop] = o
        valid[start:stop, :-1] = ds[:, 1:] > ds[:, :-1]
        valid[start:stop, -1] = True
    return order, valid


def _batch_interval_stat(order: np.ndarray, valid: np.ndarray,
                         labels: np.ndarray) -> np.ndarray:
    """Max over centers and radii of |sum of labels inside the ball|, for
    each row of `labels` (integer +-1 per pooled point)."""
    m = order.shape[0]
    out = np.empty(labels.shape[0], dtype=np.int64)
    rows = max(1, _CHUNK_ELEMENTS // m)
    for r in range(labels.shape[0]):
        s = labels[r].astype(np.int32)
        best = 0
        for start in range(0, m, rows):
            stop = min(start + rows, m)
            c = np.cumsum(s[order[start:stop]], axis=1)
            np.abs(c, out=c)
            c[~valid[start:stop]] = 0
            best = max(best, int(c.max()))
        out[r] = best
    return out


def interval_discrepancy(x, xstar) -> float:
    """T = sup over r > 0 and centers in the pooled sample of
    |P_n - P*_n| of the open interval (center - r, center + r)."""
    x = np.asarray(x, dtype=float)
    xs = np.asarray(xstar, dtype=float)
    if x.size != xs.size or x.size == 0:
        raise DataError("samples must be non-empty and of equal size")
    n = x.size
    z = np.concatenate([x, xs])
    labels = np.concatenate([np.ones(n, dtype=np.int8),
                             -np.ones(n, dtype=np.int8)])
    idx = np.argsort(z, kind="stable")
    order, valid = _ball_geometry(z[idx])
    t_int = _batch_interval_stat(order, valid, labels[idx][None, :])[0]
    return float(t_int) / n


def logconcavity_test(samples, B: int = 99, alpha: float = 0.05,
                      rng: RngSpec | None = None) -> TestReport:
    """Permutation test of the hypothesis that the sample density is
    log-concave.

    Fits the log-concave MLE, draws a starred sample of the same size from
    it, computes the ball discrepancy T between the two samples, then builds
    B replicate statistics by randomly relabeling the pooled values.  The
    hypothesis is rejected when T exceeds the ceil((B+1)(1-alpha))-th order
    statistic of the replicates.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DataError("need at least 2 samples")
    if B < 1:
        raise DataError("need B >= 1")
    if rng is None:
        raise DataError("the permutation test requires an RngSpec")
    n = x.size
    model = fit_logconcave_mle(x)
    xstar = _sample_from_mle(model, n, rng.generator(1))

    z = np.concatenate([x, xstar])
    base = np.concatenate([np.ones(n, dtype=np.int8),
                           -np.ones(n, dtype=np.int8)])
    idx = np.argsort(z, kind="stable")
    order, valid = _ball_geometry(z[idx])

    gen_perm = rng.generator(2)
    labels = np.empty((B + 1, 2 * n), dtype=np.int8)
    labels[0] = base[idx]
    for b in range(1, B + 1):
        labels[b] = gen_perm.permutation(base)
    t_all = _batch_interval_stat(order, valid, labels)
    t_obs = float(t_all[0]) / n
    t_star = np.sort(t_all[1:]) / n

    rank = math.ceil((B + 1) * (1.0 - alpha))
    if rank > B:
        threshold = math.inf
    else:
        threshold = float(t_star[rank - 1])
    return TestReport(name="logconcave_permutation", statistic=t_obs,
                      p_value=None, alpha=alpha, rejected=t_obs > threshold,
                      n=n, B=B, seed=rng,
                      details={"threshold": threshold,
                               "n_knots": int(model.knots.size)})
