"""Shared primitives: signals, RNG streams, regression, normal quantiles, CSV I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erfc


class LeaderLabError(Exception):
    """Base class for all errors raised by this package."""


class DataError(LeaderLabError):
    """Invalid or degenerate input data."""


class RegimeError(LeaderLabError):
    """A parameter lies outside the validity region of the requested result."""


class NonConvergenceError(LeaderLabError):
    """An iterative routine failed to reach its tolerance."""


@dataclass(frozen=True)
class RngSpec:
    """Deterministic random stream identifier.

    The same (seed, stream_id) always reproduces the same draws; distinct
    stream_ids index statistically independent streams of the same seed.
    Streams are backed by the counter-based Philox generator, so parallel
    realizations are reproducible regardless of scheduling.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise DataError("seed must be a 64-bit unsigned integer")
        if int(self.stream_id) < 0:
            raise DataError("stream_id must be >= 0")

    def generator(self, *path: int) -> np.random.Generator:
        """Generator for this stream; extra path integers derive substreams."""
        ss = np.random.SeedSequence(entropy=int(self.seed),
                                    spawn_key=(int(self.stream_id), *map(int, path)))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, offset: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream_id + int(offset))

    def to_dict(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id)}

    @staticmethod
    def from_dict(d: dict) -> "RngSpec":
        return RngSpec(int(d["seed"]), int(d.get("stream_id", 0)))


@dataclass
class Signal:
    """A uniformly sampled real time series.

    Parameters
    ----------
    samples : ndarray
        Signal values, at least 2, all finite.
    t0 : float
        Time of the first sample (arbitrary units).
    dt : float
        Sampling step, > 0.
    label : str
        Free-form description, carried through outputs.
    """

    samples: np.ndarray
    t0: float = 0.0
    dt: float = 1.0
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise DataError("signal needs at least 2 samples")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("signal contains NaN or Inf")
        if not (self.dt > 0):
            raise DataError("dt must be > 0")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)


@dataclass(frozen=True)
class DyadicIndex:
    """Position (j, k) in a dyadic grid; j is the level, k the translation."""

    j: int
    k: int

    def __post_init__(self):
        if self.j < 0 or self.k < 0:
            raise DataError("dyadic indices must be nonnegative")


@dataclass
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def linfit(x, y) -> RegressionFit:
    """Ordinary least squares fit of y on x.

    Returns slope, intercept and R^2 = 1 - SS_res/SS_tot.  A constant y with
    zero residuals is reported as R^2 = 1 (perfect fit); nonzero residuals
    with SS_tot = 0 cannot occur for OLS, but R^2 = 0 is returned defensively.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("x and y must be 1-d arrays of the same length")
    n = x.size
    if n < 2:
        raise DataError("need at least 2 points")
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DataError("x is constant; slope undefined")
    ym = y.mean()
    sxy = float(np.sum((x - xm) * (y - ym)))
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot > 0.0:
        r2 = 1.0 - ss_res / ss_tot
        r2 = min(max(r2, 0.0), 1.0)
    else:
        r2 = 1.0 if ss_res <= 1e-28 * max(1.0, float(np.sum(y ** 2))) else 0.0
    return RegressionFit(slope=slope, intercept=intercept, r_squared=r2, n_points=n)


# Acklam's rational approximation to the normal quantile, then one Newton
# step on the CDF (double precision lands near 1e-15 absolute error).
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)


def _polyval(coeffs, x):
    out = np.zeros_like(x) + coeffs[0]
    for c in coeffs[1:]:
        out = out * x + c
    return out


def normal_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x / math.sqrt(2.0))


def standard_normal_quantile(p):
    """Inverse standard normal CDF, absolute error well below 1e-9.

    Accepts a scalar or array of probabilities in the open interval (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DataError("quantile argument must lie strictly inside (0, 1)")

    plow = 0.02425
    x = np.empty_like(p_arr)

    lo = p_arr < plow
    hi = p_arr > 1.0 - plow
    mid = ~(lo | hi)
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p_arr[lo]))
        x[lo] = _polyval(_ACK_C, q) / (_polyval(_ACK_D, q) * q + 1.0)
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - p_arr[hi]))
        x[hi] = -_polyval(_ACK_C, q) / (_polyval(_ACK_D, q) * q + 1.0)
    if np.any(mid):
        q = p_arr[mid] - 0.5
        r = q * q
        x[mid] = _polyval(_ACK_A, r) * q / (_polyval(_ACK_B, r) * r + 1.0)

    # one Newton refinement on the CDF
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    x = x - (normal_cdf(x) - p_arr) / pdf
    return float(x[0]) if scalar else x


def write_signal(signal: Signal, path, sidecar: dict | None = None) -> list[str]:
    """Write a signal as `t,value` CSV; optional JSON sidecar with metadata.

    Returns the list of paths written.  Numeric formatting is fixed at 17
    significant digits so that reruns are byte-identical.
    """
    path = Path(path)
    lines = ["t,value"]
    t = signal.times
    for ti, vi in zip(t, signal.samples):
        lines.append(f"{ti:.17g},{vi:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written = [str(path)]
    if sidecar is not None:
        meta = {"label": signal.label, "t0": signal.t0, "dt": signal.dt}
        meta.update(sidecar)
        side = path.with_suffix(path.suffix + ".json")
        side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        written.append(str(side))
    return written


def read_signal(path) -> Signal:
    """Read a `t,value` CSV or a headerless single-column file (dt = 1)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such signal file: {path}")
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        raise DataError(f"empty signal file: {path}")
    lines = text.splitlines()
    label = path.stem
    t0, dt = 0.0, 1.0

    side = path.with_suffix(path.suffix + ".json")
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        label = meta.get("label", label)
        t0 = float(meta.get("t0", t0))
        dt = float(meta.get("dt", dt))

    first = lines[0].replace(" ", "")
    if first.lower().startswith("t,value"):
        rows = [ln.split(",") for ln in lines[1:] if ln.strip()]
        try:
            t = np.array([float(r[0]) for r in rows])
            v = np.array([float(r[1]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise DataError(f"malformed CSV row in {path}") from exc
        if t.size >= 2:
            steps = np.diff(t)
            if steps.size and np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                dt = float(steps[0])
            t0 = float(t[0])
        return Signal(v, t0=t0, dt=dt, label=label)

    try:
        v = np.array([float(ln.split(",")[0]) for ln in lines if ln.strip()])
    except ValueError as exc:
        raise DataError(f"malformed value in {path}") from exc
    return Signal(v, t0=t0, dt=dt, label=label)
