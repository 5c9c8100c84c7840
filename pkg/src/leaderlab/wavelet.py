"""Discrete wavelet machinery: Daubechies filter banks, leader pyramids,
structure functions, scaling functions, Legendre spectra.

Scale convention used throughout the package: pyramids are keyed by the
dyadic level j = 1 (finest) .. j_max (coarsest); level j corresponds to the
physical scale 2^j sample steps, and arrays halve in length as j grows.
All log-log regressions run against log(scale_j), so slopes are reported
with the orientation scale^h (h_min, zeta(q), c_m all come out positive for
persistent signals).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataError, RegressionFit, Signal, linfit

# Daubechies scaling filters, N = 1..10 vanishing moments, generated offline
# by spectral factorization of the binomial half-band polynomial at 60-digit
# working precision and rounded to double.  Ordering: h[0] multiplies the
# current sample, h[L-1] the most delayed one; sum h = sqrt(2).
DAUBECHIES_FILTERS: dict[int, tuple[float, ...]] = {
    1: (0.7071067811865475244008,
        0.7071067811865475244008),
    2: (0.4829629131445341433749,
        0.8365163037378079055753,
        0.2241438680420133810260,
        -0.1294095225512603811744),
    3: (0.3326705529500826159985,
        0.8068915093110925764945,
        0.4598775021184915700952,
        -0.1350110200102545886964,
        -0.08544127388202666169282,
        0.03522629188570953660274),
    4: (0.2303778133088965008633,
        0.7148465705529156470899,
        0.6308807679298589078817,
        -0.02798376941685985421141,
        -0.1870348117190930840796,
        0.03084138183556076362722,
        0.03288301166688519973541,
        -0.01059740178506903210488),
    5: (0.1601023979741929144807,
        0.6038292697971896705401,
        0.7243085284377729277281,
        0.1384281459013207315054,
        -0.2422948870663820318626,
        -0.03224486958463837464848,
        0.07757149384004571352313,
        -0.006241490212798274274191,
        -0.01258075199908199946851,
        0.003335725285473771277998),
    6: (0.1115407433501094636213,
        0.4946238903984530856772,
        0.7511339080210953506789,
        0.3152503517091976290860,
        -0.2262646939654398200763,
        -0.1297668675672619355623,
        0.09750160558732304910234,
        0.02752286553030572862554,
        -0.03158203931748602956508,
        0.0005538422011614961392519,
        0.004777257510945510639636,
        -0.001077301085308479564853),
    7: (0.07785205408500917901996,
        0.3965393194819173065390,
        0.7291320908462351199169,
        0.4697822874051931224716,
        -0.1439060039285649754051,
        -0.2240361849938749826381,
        0.07130921926683026475088,
        0.08061260915108307191292,
        -0.03802993693501441357959,
        -0.01657454163066688065411,
        0.01255099855609984061299,
        0.0004295779729213665211321,
        -0.001801640704047490915268,
        0.0003537137999745202484463),
    8: (0.05441584224310400995501,
        0.3128715909142999706592,
        0.6756307362972898068078,
        0.5853546836542067127713,
        -0.01582910525634930566738,
        -0.2840155429615469265162,
        0.0004724845739132827703606,
        0.1287474266204784588570,
        -0.01736930100180754616962,
        -0.04408825393079475150676,
        0.01398102791739828164872,
        0.008746094047405776716383,
        -0.004870352993451574310422,
        -0.0003917403733769470462981,
        0.0006754494064505693663695,
        -0.0001174767841247695337306),
    9: (0.03807794736387834658870,
        0.2438346746125903537320,
        0.6048231236901111119031,
        0.6572880780513005380782,
        0.1331973858250075761910,
        -0.2932737832791749088064,
        -0.09684078322297646051351,
        0.1485407493381063801351,
        0.03072568147933337921232,
        -0.06763282906132997367564,
        0.0002509471148314519575872,
        0.02236166212367909720537,
        -0.004723204757751397277926,
        -0.004281503682463429834497,
        0.001847646883056226476619,
        0.0002303857635231959672052,
        -0.0002519631889427101369750,
        0.00003934732031627159948069),
    10: (0.02667005790055555358662,
         0.1881768000776914890209,
         0.5272011889317255864817,
         0.6884590394536035657419,
         0.2811723436605774607487,
         -0.2498464243273153794161,
         -0.1959462743773770435043,
         0.1273693403357932600827,
         0.09305736460357235116035,
         -0.07139414716639708714534,
         -0.02945753682187581285828,
         0.03321267405934100173976,
         0.003606553566956169655423,
         -0.01073317548333057504432,
         0.001395351747052901165789,
         0.001992405295185056117159,
         -0.0006858566949597116265614,
         -0.0001164668551292854509515,
         0.00009358867032006959133405,
         -0.00001326420289452124481244),
}


@dataclass
class WaveletBasis:
    """Orthonormal Daubechies analysis filter pair with N vanishing moments."""

    family: str
    n_vanishing: int
    filter_lo: np.ndarray
    filter_hi: np.ndarray

    @property
    def length(self) -> int:
        return self.filter_lo.size

    @property
    def name(self) -> str:
        return f"db{self.n_vanishing}"

    def validate(self, tol_qmf: float = 1e-12, tol_moments: float = 1e-10) -> None:
        """Check the orthonormal quadrature-mirror relations and moments.

        Moment sums are checked relative to sum(|m^p hi|), which is the
        resolution attainable in double precision for large N.
        """
        lo, hi = self.filter_lo, self.filter_hi
        if abs(lo.sum() - math.sqrt(2.0)) > tol_qmf:
            raise DataError("lowpass filter does not sum to sqrt(2)")
        L = lo.size
        for r in range(L // 2):
            acc = float(np.dot(lo[: L - 2 * r], lo[2 * r:]))
            target = 1.0 if r == 0 else 0.0
            if abs(acc - target) > tol_qmf:
                raise DataError(f"lowpass autocorrelation fails at lag {2 * r}")
            cross = float(np.dot(lo[: L - 2 * r], hi[2 * r:]))
            cross2 = float(np.dot(hi[: L - 2 * r], lo[2 * r:]))
            if max(abs(cross), abs(cross2)) > tol_qmf:
                raise DataError(f"lo/hi orthogonality fails at lag {2 * r}")
        m = np.arange(L, dtype=float)
        for p in range(self.n_vanishing):
            num = abs(float(np.sum(m ** p * hi)))
            scale = max(float(np.sum(m ** p * np.abs(hi))), 1.0)
            if num > tol_moments * scale:
                raise DataError(f"moment {p} of highpass filter does not vanish")


def daubechies_basis(n_vanishing: int) -> WaveletBasis:
    if n_vanishing not in DAUBECHIES_FILTERS:
        raise DataError(f"unsupported Daubechies order {n_vanishing}; have 1..10")
    lo = np.array(DAUBECHIES_FILTERS[n_vanishing], dtype=float)
    # quadrature mirror: hi[m] = (-1)^m lo[L-1-m]
    signs = np.where(np.arange(lo.size) % 2 == 0, 1.0, -1.0)
    hi = signs * lo[::-1]
    basis = WaveletBasis("Daubechies", int(n_vanishing), lo, hi)
    basis.validate()
    return basis


def basis_from_name(name: str) -> WaveletBasis:
    name = name.strip().lower()
    if not name.startswith("db"):
        raise DataError(f"unknown wavelet family in {name!r}; only dbN supported")
    try:
        order = int(name[2:])
    except ValueError as exc:
        raise DataError(f"cannot parse wavelet order in {name!r}") from exc
    return daubechies_basis(order)


@dataclass
class CoefficientPyramid:
    """Detail coefficients per level, L1-normalized, periodic boundary.

    `valid`, when present, flags the positions whose filter footprint never
    crossed the periodic wrap point; positions mixing both signal ends are
    excluded from sup- and moment-statistics but kept in the arrays so the
    dyadic halving structure stays exact.
    """

    coeffs: dict[int, np.ndarray]
    norm: str = "L1"
    boundary: str = "periodic"
    valid: dict[int, np.ndarray] | None = None

    @property
    def j_min(self) -> int:
        return min(self.coeffs)

    @property
    def j_max(self) -> int:
        return max(self.coeffs)

    @property
    def levels(self) -> list[int]:
        return sorted(self.coeffs)

    def n_at(self, j: int) -> int:
        return self.coeffs[j].size

    def valid_at(self, j: int) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.coeffs[j].size, dtype=bool)
        return self.valid[j]

    def clean_values(self, j: int) -> np.ndarray:
        return self.coeffs[j][self.valid_at(j)]


@dataclass
class LeaderPyramid:
    """Wavelet leaders per level.

    variant 'one_leader' restricts the supremum to the cube itself,
    'three_leader' extends it over the two same-level neighbours (periodic
    wrap at the edges).  The supremum runs down to `finest_level`, the finest
    scale available in the source pyramid.  `valid` marks leaders whose
    whole dependency cone avoided the periodic wrap point.
    """

    leaders: dict[int, np.ndarray]
    variant: str
    finest_level: int
    valid: dict[int, np.ndarray] | None = None

    @property
    def levels(self) -> list[int]:
        return sorted(self.leaders)

    def n_at(self, j: int) -> int:
        return self.leaders[j].size

    def valid_at(self, j: int) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.leaders[j].size, dtype=bool)
        return self.valid[j]

    def clean_values(self, j: int) -> np.ndarray:
        return self.leaders[j][self.valid_at(j)]


def max_levels(n: int, basis: WaveletBasis) -> int:
    """Deepest level usable for a length-n signal, honoring the filter-length margin."""
    j = 0
    while n % 2 == 0 and n // 2 >= basis.length:
        n //= 2
        j += 1
    return j


def _analysis_step(a: np.ndarray, basis: WaveletBasis) -> tuple[np.ndarray, np.ndarray]:
    m_len = a.size
    half = m_len // 2
    detail = np.zeros(half)
    approx = np.zeros(half)
    for m in range(basis.length):
        shifted = np.roll(a, -m)[::2]
        detail += basis.filter_hi[m] * shifted
        approx += basis.filter_lo[m] * shifted
    return approx, detail


def _mask_step(bad: np.ndarray, filt_len: int) -> np.ndarray:
    """Positions whose filter window wraps past the end or reads a sample
    already tainted by the wrap."""
    m_len = bad.size
    out = np.zeros(m_len // 2, dtype=bool)
    k = np.arange(m_len // 2)
    for m in range(filt_len):
        out |= bad[(2 * k + m) % m_len]
    out |= 2 * k + filt_len - 1 >= m_len
    return out


def _synthesis_step(approx: np.ndarray, detail: np.ndarray,
                    basis: WaveletBasis) -> np.ndarray:
    m_len = 2 * approx.size
    ua = np.zeros(m_len)
    ud = np.zeros(m_len)
    ua[::2] = approx
    ud[::2] = detail
    out = np.zeros(m_len)
    for m in range(basis.length):
        out += basis.filter_lo[m] * np.roll(ua, m)
        out += basis.filter_hi[m] * np.roll(ud, m)
    return out


def dwt(signal: Signal, basis: WaveletBasis, j_max: int) -> CoefficientPyramid:
    """Periodic orthonormal DWT rescaled to the L1 coefficient convention.

    Level-j details of the orthonormal transform are multiplied by 2^(-j/2),
    so that coefficient magnitudes scale like (2^j)^h for local regularity h.
    """
    if j_max < 1:
        raise DataError("j_max must be >= 1")
    n = len(signal)
    if n % (1 << j_max) != 0:
        raise DataError(
            f"signal length {n} is not divisible by 2^{j_max}; truncate first")
    if n < (1 << j_max) * basis.length:
        raise DataError(
            f"signal too short for {j_max} levels of {basis.name}: "
            f"need at least {(1 << j_max) * basis.length} samples, have {n}")
    coeffs: dict[int, np.ndarray] = {}
    valid: dict[int, np.ndarray] = {}
    approx = signal.samples.astype(float)
    bad = np.zeros(n, dtype=bool)
    for j in range(1, j_max + 1):
        approx, detail = _analysis_step(approx, basis)
        bad = _mask_step(bad, basis.length)
        coeffs[j] = detail * 2.0 ** (-j / 2.0)
        valid[j] = ~bad
    return CoefficientPyramid(coeffs=coeffs, valid=valid)


def idwt(pyramid: CoefficientPyramid, basis: WaveletBasis,
         approx: np.ndarray | None = None) -> np.ndarray:
    """Invert `dwt`; `approx` is the coarsest approximation (default zeros)."""
    levels = pyramid.levels
    if not levels:
        raise DataError("empty pyramid")
    top = levels[-1]
    if approx is None:
        approx = np.zeros(pyramid.n_at(top))
    approx = np.asarray(approx, dtype=float)
    if approx.size != pyramid.n_at(top):
        raise DataError("approximation length does not match the coarsest level")
    out = approx
    for j in sorted(levels, reverse=True):
        detail = pyramid.coeffs[j] * 2.0 ** (j / 2.0)
        out = _synthesis_step(out, detail, basis)
    return out


def _validate_halving(arrays: dict[int, np.ndarray]) -> None:
    levels = sorted(arrays)
    for a, b in zip(levels, levels[1:]):
        if b != a + 1 or arrays[a].size != 2 * arrays[b].size:
            raise DataError(
                "pyramid levels must be consecutive with exact halving")


def compute_leaders(pyramid: CoefficientPyramid,
                    variant: str = "three_leader") -> LeaderPyramid:
    """Leaders from a coefficient pyramid, bottom-up in O(total coefficients).

    one_leader at level j is the running max of |c| over the level-j cube and
    all finer cubes inside it; three_leader additionally takes the max over
    the two same-level neighbours with periodic wrap.
    """
    if variant not in ("one_leader", "three_leader"):
        raise DataError(f"unknown leader variant {variant!r}")
    if not pyramid.coeffs:
        raise DataError("empty pyramid")
    _validate_halving(pyramid.coeffs)
    levels = pyramid.levels
    leaders: dict[int, np.ndarray] = {}
    valid: dict[int, np.ndarray] | None = \
        None if pyramid.valid is None else {}
    sv = None
    sv_bad = None
    for j in levels:
        mag = np.abs(pyramid.coeffs[j])
        if sv is None:
            sv = mag.copy()
        else:
            sv = np.maximum(mag, np.maximum(sv[0::2], sv[1::2]))
        if variant == "one_leader":
            leaders[j] = sv.copy()
        else:
            leaders[j] = np.maximum(np.maximum(np.roll(sv, 1), sv),
                                    np.roll(sv, -1))
        if valid is not None:
            bad = ~pyramid.valid[j]
            if sv_bad is None:
                sv_bad = bad.copy()
            else:
                sv_bad = bad | sv_bad[0::2] | sv_bad[1::2]
            if variant == "one_leader":
                valid[j] = ~sv_bad
            else:
                valid[j] = ~(np.roll(sv_bad, 1) | sv_bad
                             | np.roll(sv_bad, -1))
    return LeaderPyramid(leaders=leaders, variant=variant,
                         finest_level=levels[0], valid=valid)


@dataclass
class StructureFunctionTable:
    """Empirical moments S(j, q) of the leaders at each level."""

    j_values: np.ndarray
    q_values: np.ndarray
    s: np.ndarray          # shape (len(j_values), len(q_values))
    variant: str

    def value(self, j: int, q: float) -> float:
        ji = int(np.where(self.j_values == j)[0][0])
        qi = int(np.argmin(np.abs(self.q_values - q)))
        return float(self.s[ji, qi])

    def to_csv(self, path) -> str:
        lines = ["j,q,S,logS"]
        for ji, j in enumerate(self.j_values):
            for qi, q in enumerate(self.q_values):
                s = self.s[ji, qi]
                lines.append(f"{int(j)},{q:.17g},{s:.17g},{math.log2(s):.17g}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)


def structure_functions(leaders: LeaderPyramid, q_values,
                        valid_only: bool = True) -> StructureFunctionTable:
    """S(j, q): mean of leader^q over positions at each level j.

    With `valid_only` (the default) positions tainted by the periodic wrap
    are dropped from the mean; pass False to use every array entry (the
    combinatorial leader inequalities hold exactly in that mode).
    """
    q_values = np.atleast_1d(np.asarray(q_values, dtype=float))
    if q_values.size == 0:
        raise DataError("q_values must be non-empty")
    levels = leaders.levels
    values = {}
    for j in levels:
        ell = leaders.clean_values(j) if valid_only else leaders.leaders[j]
        if ell.size == 0:
            raise DataError(f"no usable leaders at level {j}")
        values[j] = ell
    if any(q < 0 for q in q_values):
        for j in levels:
            if np.any(values[j] == 0.0):
                raise DataError(
                    f"zero leader at level {j}: negative moments undefined "
                    "(degenerate data)")
    s = np.empty((len(levels), q_values.size))
    for ji, j in enumerate(levels):
        for qi, q in enumerate(q_values):
            s[ji, qi] = float(np.mean(values[j] ** q))
    return StructureFunctionTable(j_values=np.array(levels), q_values=q_values,
                                  s=s, variant=leaders.variant)


def scaling_function(table: StructureFunctionTable,
                     j_range: tuple[int, int]) -> dict[float, RegressionFit]:
    """Slope of log2 S(j, q) against log2(scale_j) = j over the given levels."""
    j1, j2 = int(j_range[0]), int(j_range[1])
    mask = (table.j_values >= j1) & (table.j_values <= j2)
    js = table.j_values[mask]
    if js.size < 2:
        raise DataError(f"need at least 2 levels in [{j1}, {j2}]")
    out: dict[float, RegressionFit] = {}
    for qi, q in enumerate(table.q_values):
        y = np.log2(table.s[mask, qi])
        out[float(q)] = linfit(js.astype(float), y)
    return out


def legendre_spectrum(zeta: dict[float, float], h_grid) -> dict[float, float]:
    """Legendre transform L(H) = inf_q (1 + q H - zeta(q)) on the q grid.

    Values are clamped at 1 (the ambient dimension); if no finite zeta value
    is available the transform is reported as -inf.
    """
    h_grid = np.atleast_1d(np.asarray(h_grid, dtype=float))
    qs = np.array(sorted(zeta), dtype=float)
    zs = np.array([zeta[q] for q in sorted(zeta)], dtype=float)
    finite = np.isfinite(zs)
    out: dict[float, float] = {}
    for h in h_grid:
        if not np.any(finite):
            out[float(h)] = -math.inf
            continue
        vals = 1.0 + qs[finite] * h - zs[finite]
        out[float(h)] = min(float(np.min(vals)), 1.0)
    return out


def hmin_regression(pyramid: CoefficientPyramid,
                    j_range: tuple[int, int]) -> RegressionFit:
    """Fit of log2 sup_k |c_{j,k}| against log2(scale_j); slope estimates the
    uniform regularity exponent, used for scale-range selection."""
    j1, j2 = int(j_range[0]), int(j_range[1])
    js = [j for j in pyramid.levels if j1 <= j <= j2]
    if len(js) < 2:
        raise DataError(f"need at least 2 levels in [{j1}, {j2}]")
    sups = []
    for j in js:
        vals = pyramid.clean_values(j)
        if vals.size == 0:
            raise DataError(f"no usable coefficients at level {j}")
        sups.append(np.max(np.abs(vals)))
    sups = np.array(sups)
    if np.any(sups == 0.0):
        raise DataError("all-zero coefficient level in range; log regression undefined")
    return linfit(np.array(js, dtype=float), np.log2(sups))


def pyramid_to_json(obj: CoefficientPyramid | LeaderPyramid, path=None) -> str:
    """Serialize a pyramid to the interchange JSON schema."""
    if isinstance(obj, CoefficientPyramid):
        scales = {str(j): obj.coeffs[j].tolist() for j in obj.levels}
        doc = {"j_min": obj.j_min, "j_max": obj.j_max, "norm": obj.norm,
               "boundary": obj.boundary, "scales": scales}
    else:
        scales = {str(j): obj.leaders[j].tolist() for j in obj.levels}
        doc = {"j_min": obj.levels[0], "j_max": obj.levels[-1],
               "norm": "L1", "boundary": "periodic",
               "variant": obj.variant, "finest_level": obj.finest_level,
               "scales": scales}
    if obj.valid is not None:
        doc["valid"] = {str(j): [int(v) for v in obj.valid[j]]
                        for j in obj.levels}
    text = json.dumps(doc, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def pyramid_from_json(text_or_path) -> CoefficientPyramid | LeaderPyramid:
    p = Path(str(text_or_path))
    text = p.read_text(encoding="utf-8") if p.exists() else str(text_or_path)
    doc = json.loads(text)
    scales = {int(j): np.asarray(v, dtype=float) for j, v in doc["scales"].items()}
    valid = None
    if "valid" in doc:
        valid = {int(j): np.asarray(v, dtype=bool)
                 for j, v in doc["valid"].items()}
    if "variant" in doc:
        return LeaderPyramid(leaders=scales, variant=doc["variant"],
                             finest_level=int(doc["finest_level"]),
                             valid=valid)
    return CoefficientPyramid(coeffs=scales, norm=doc.get("norm", "L1"),
                              boundary=doc.get("boundary", "periodic"),
                              valid=valid)
