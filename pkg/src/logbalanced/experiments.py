"""Monte Carlo and exact checks of the weight-function and Lochs-type limits.

Sampling is always uniform (Lebesgue). A sample that cannot be resolved at
its current precision is refined by doubling its bit count, up to
``max_bits``; past that it is counted as a rejection, never silently dropped.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import iv, mpf
from scipy import stats

from .errors import CapExceeded, DomainError, PrecisionError, ResourceError
from .exactnum import (DEFAULT_BIT_BOUND, Golden, PowerRule, UnitPoint, cf_generate, refine,
                       sampled_point)
from .lochs import lochs
from .partitions import CF, Bary, Interval, MeasureKind, PartitionFamily, Synthetic, synthetic_layout
from .weights import START_PREC, MAX_PREC, WeightFunction, iv_finite, iv_precision, iv_width_ok
from . import weights as W

H_CF = math.pi**2 / (6 * math.log(2))
LEVY = math.pi**2 / (12 * math.log(2))
LOCHS_DECIMAL = 6 * math.log(2) * math.log(10) / math.pi**2
FAREY_TO_CF = 12 * math.log(2) / math.pi**2

DEFAULT_MAX_BITS = 4096


# --- certified measures ------------------------------------------------------------

def _iv_frac(x: Fraction):
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def neg_log_measure(cell: Interval, measure: MeasureKind, prec: int):
    """-log of the cell's measure as an iv interval at working precision ``prec``."""
    with iv_precision(prec):
        if measure is MeasureKind.LEBESGUE:
            ln = cell.length
            return iv.log(iv.mpf(ln.denominator)) - iv.log(iv.mpf(ln.numerator))
        # Gauss: log((1+hi)/(1+lo))/log 2 = log1p(delta)/log 2
        delta = (cell.hi - cell.lo) / (1 + cell.lo)
        return iv.log(iv.log(2)) - iv.log(iv.log1p(_iv_frac(delta)))


def measure_value(cell: Interval, measure: MeasureKind):
    """Exact Fraction (Lebesgue) or a float certified to ~50 bits (Gauss)."""
    if measure is MeasureKind.LEBESGUE:
        return cell.length
    prec = START_PREC + cell.length.denominator.bit_length()
    with iv_precision(prec):
        v = iv.log1p(_iv_frac((cell.hi - cell.lo) / (1 + cell.lo))) / iv.log(2)
    return float(v.mid)


def _certified_ratio(num_fn: Callable[[int], object], f: WeightFunction, n: int, bits: int = 50):
    prec = START_PREC
    while prec <= MAX_PREC:
        fv = f.interval(n, prec)
        if fv is None:
            raise DomainError(f"weight {f.label} undefined at n={n}")
        with iv_precision(prec):
            r = num_fn(prec) / fv
        if iv_width_ok(r, bits) or (iv_finite(r) and r.a == r.b):
            return r
        prec *= 2
    raise PrecisionError(f"ratio at n={n} not certified")


def weight_ratio_iv(x: UnitPoint, family: PartitionFamily, n: int, measure: MeasureKind,
                    f: WeightFunction, bits: int = 50):
    cell = family.cell(x, n)
    return _certified_ratio(lambda p: neg_log_measure(cell, measure, p), f, n, bits)


def weight_ratio(x: UnitPoint, family: PartitionFamily, n: int,
                 measure: MeasureKind = MeasureKind.LEBESGUE,
                 f: Optional[WeightFunction] = None) -> float:
    """-log(measure of I_n(x)) / f(n), certified to 50 bits and returned as a float."""
    f = f or family.default_weight()
    return float(weight_ratio_iv(x, family, n, measure, f).mid)


def epsilon_good(x: UnitPoint, family: PartitionFamily, f: WeightFunction, n: int, eps,
                 measure: MeasureKind = MeasureKind.LEBESGUE) -> bool:
    """e^{-(1+eps) f(n)} < measure(I_n(x)) < e^{-(1-eps) f(n)}, decided with certified bounds."""
    cell = family.cell(x, n)
    eps = Fraction(eps)
    prec = START_PREC
    while prec <= MAX_PREC:
        fv = f.interval(n, prec)
        if fv is None:
            return False
        with iv_precision(prec):
            X = neg_log_measure(cell, measure, prec)
            e = _iv_frac(eps)
            lower = X - (1 - e) * fv
            upper = (1 + e) * fv - X
            if lower.a > 0 and upper.a > 0:
                return True
            if lower.b <= 0 or upper.b <= 0:
                return False
        prec *= 2
    raise PrecisionError("epsilon_good undecided")


def realization_sandwich(x: UnitPoint, family: PartitionFamily, n: int,
                         f: Optional[WeightFunction] = None) -> bool:
    """1/(2 e^{f(n)}) <= |I_n(x)| < 2/e^{f(n)}, decided exactly.

    With m = floor(e^{f(n)}) the rational bounds 1/(2m) and 2/(m+1) settle
    almost every case; the rest fall back to certified logarithms.
    """
    f = f or family.default_weight()
    length = family.cell(x, n).length
    m = f.exp_floor(n)
    if m < 1:
        return False
    low_ok = True if length >= Fraction(1, 2 * m) else (False if length < Fraction(1, 2 * (m + 1)) else None)
    high_ok = True if length <= Fraction(2, m + 1) else (False if length >= Fraction(2, m) else None)
    if low_ok is not None and high_ok is not None:
        return low_ok and high_ok
    prec = START_PREC
    while prec <= MAX_PREC:
        fv = f.interval(n, prec)
        with iv_precision(prec):
            # g = log|I| + f(n); need -log 2 <= g < log 2
            g = iv.log(_iv_frac(length)) + fv
            l2 = iv.log(2)
            lo_dec = True if (g + l2).a >= 0 else (False if (g + l2).b < 0 else None)
            hi_dec = True if (l2 - g).a > 0 else (False if (l2 - g).b <= 0 else None)
            if low_ok is None:
                low_ok = lo_dec
            if high_ok is None:
                high_ok = hi_dec
        if low_ok is not None and high_ok is not None:
            return low_ok and high_ok
        prec *= 2
    raise PrecisionError(f"sandwich at n={n} undecided")


# --- sampling ------------------------------------------------------------------

def resolve(fn: Callable[[UnitPoint], object], point: UnitPoint, max_bits: int):
    """Run ``fn`` on ``point``, refining on PrecisionError. Returns (value or None, point)."""
    while True:
        try:
            return fn(point), point
        except PrecisionError:
            bits = 2 * (point.resolution_bits - 1)
            if bits > max_bits:
                return None, point
            point = refine(point, bits)


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def default_workers() -> int:
    env = os.environ.get("LOGBALANCED_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# --- reports -----------------------------------------------------------------------

class Mode(enum.Enum):
    ALMOST_EVERYWHERE = "ae"
    IN_MEASURE = "in_measure"


@dataclass
class DepthStats:
    depth: int
    n_samples: int
    rejections: int
    mean: float
    median: float
    q05: float
    q95: float
    target: Optional[float]
    abs_err_median: Optional[float]
    cap_exceeded: int = 0


@dataclass
class EstimatorReport:
    mode: Mode
    N: int
    depths: List[int]
    stats: List[DepthStats]
    traces: Optional[Dict[int, List[Optional[float]]]] = None
    # in-measure mode: depth -> per-sample values (None = rejected)
    samples: Optional[Dict[int, List[Optional[float]]]] = None
    extra: Dict[str, object] = field(default_factory=dict)

    def at(self, depth: int) -> DepthStats:
        for s in self.stats:
            if s.depth == depth:
                return s
        raise KeyError(depth)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        if self.traces is not None:
            d["traces"] = {str(k): v for k, v in self.traces.items()}
        if self.samples is not None:
            d["samples"] = {str(k): v for k, v in self.samples.items()}
        return d


def summarize(depth: int, values: Sequence[float], rejections: int, target: Optional[float],
              cap_exceeded: int = 0) -> DepthStats:
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if len(arr) == 0:
        nan = float("nan")
        return DepthStats(depth, 0, rejections, nan, nan, nan, nan, target, None, cap_exceeded)
    med = float(np.median(arr))
    return DepthStats(depth, int(len(arr)), rejections, float(arr.mean()), med,
                      float(np.quantile(arr, 0.05)), float(np.quantile(arr, 0.95)), target,
                      None if target is None else abs(med - target), cap_exceeded)


def band_exits(trace: Sequence[Optional[float]], target: float, width: float) -> int:
    """Number of times a trajectory goes from inside the band to outside it."""
    exits, inside = 0, None
    for v in trace:
        if v is None:
            continue
        now = abs(v - target) <= width
        if inside and not now:
            exits += 1
        inside = now
    return exits


# --- weight sweeps ---------------------------------------------------------------

def _ratio_trace(i, seed, family, f, measure, depths, bits, max_bits, stream):
    pt = sampled_point(seed, f"{stream}:{i}", bits)
    out = []
    for n in depths:
        val, pt = resolve(lambda p: weight_ratio(p, family, n, measure, f), pt, max_bits)
        out.append(val)
    return out


def convergence_sweep(family: PartitionFamily, f: Optional[WeightFunction], measure: MeasureKind,
                      depths: Sequence[int], N: int, seed: int, mode: Mode = Mode.IN_MEASURE,
                      bits: int = 128, max_bits: int = DEFAULT_MAX_BITS, target: float = 1.0,
                      band: float = 0.2, workers: int = 1) -> EstimatorReport:
    """Distribution of -log(measure I_n(x))/f(n) over sampled x.

    In-measure mode draws fresh points for every depth; almost-everywhere mode
    follows the same N points through all depths and keeps their traces.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if list(depths) != sorted(set(depths)):
        raise DomainError("depths must be strictly increasing")
    f = f or family.default_weight()
    stats_out = []
    traces = None
    extra: Dict[str, object] = {}
    if mode is Mode.ALMOST_EVERYWHERE:
        job = partial(_ratio_trace, seed=seed, family=family, f=f, measure=measure,
                      depths=list(depths), bits=bits, max_bits=max_bits, stream="ae")
        rows = _pmap(job, range(N), workers)
        traces = {i: row for i, row in enumerate(rows)}
        for j, n in enumerate(depths):
            col = [row[j] for row in rows]
            stats_out.append(summarize(n, col, sum(v is None for v in col), target))
        exits = [band_exits(row, target, band) for row in rows]
        extra["band"] = band
        extra["band_exits"] = exits
        extra["max_band_exits"] = max(exits)
        extra["trajectories_with_exit"] = sum(e > 0 for e in exits)
    else:
        samples = {}
        for n in depths:
            job = partial(_ratio_trace, seed=seed, family=family, f=f, measure=measure,
                          depths=[n], bits=bits, max_bits=max_bits, stream=f"im{n}")
            col = [row[0] for row in _pmap(job, range(N), workers)]
            samples[n] = col
            stats_out.append(summarize(n, col, sum(v is None for v in col), target))
        return EstimatorReport(mode, N, list(depths), stats_out, None, samples, extra)
    return EstimatorReport(mode, N, list(depths), stats_out, traces, None, extra)


def fraction_in_band(values: Sequence[Optional[float]], lo: float, hi: float) -> float:
    """Share of all samples (rejections count as outside) with lo <= v <= hi."""
    if not values:
        raise DomainError("no samples")
    return sum(v is not None and lo <= v <= hi for v in values) / len(values)


def _entropy_sample(i, seed, family, n, bits, max_bits):
    pt = sampled_point(seed, f"h{n}:{i}", bits)

    def one(p):
        cell = family.cell(p, n)
        v = neg_log_measure(cell, MeasureKind.LEBESGUE, START_PREC)
        return float(v.mid) / n
    return resolve(one, pt, max_bits)[0]


def entropy_estimate(family: PartitionFamily, n: int, N: int, seed: int, bits: int = 128,
                     max_bits: int = DEFAULT_MAX_BITS, workers: int = 1) -> float:
    """Monte Carlo mean of -log(length I_n(x))/n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    job = partial(_entropy_sample, seed=seed, family=family, n=n, bits=bits, max_bits=max_bits)
    vals = [v for v in _pmap(job, range(N), workers) if v is not None]
    if not vals:
        raise ResourceError("every sample was rejected")
    return float(np.mean(vals))


# --- continued-fraction statistics ---------------------------------------------------

@dataclass
class GaussianDiagnostic:
    n: int
    N: int
    B_hat: float
    ks_stat: float
    skewness: float
    excess_kurtosis: float
    mean_log_q_over_n: float
    rejections: int
    ks_stat_log_lochs: Optional[float] = None
    mean_log_lochs_over_n: Optional[float] = None


def cf_bits_for(n: int) -> int:
    # log2 q_n is about 1.71 n; leave room for fluctuations
    return 64 * math.ceil((2 * 1.712 * n + 256) / 64)


def _log_q_sample(i, seed, n, bits, max_bits):
    pt = sampled_point(seed, f"clt{n}:{i}", bits)

    def one(p):
        CF().cell(p, n)  # certifies a_1..a_n for the whole neighbourhood
        cf = p.cf
        qn, qn1 = cf.qn(n), cf.qn(n - 1)
        return math.log(qn), math.log(2 * qn + qn1 - 2)
    return resolve(one, pt, max_bits)[0]


def log_q_samples(n: int, N: int, seed: int, bits: Optional[int] = None,
                  max_bits: Optional[int] = None, workers: int = 1):
    bits = bits or cf_bits_for(n)
    max_bits = max_bits or 4 * bits
    job = partial(_log_q_sample, seed=seed, n=n, bits=bits, max_bits=max_bits)
    rows = _pmap(job, range(N), workers)
    ok = [r for r in rows if r is not None]
    return np.array([r[0] for r in ok]), np.array([r[1] for r in ok]), len(rows) - len(ok)


def _standardized_ks(values: np.ndarray, n: int) -> Tuple[float, float]:
    b_hat = float(np.std(values, ddof=1)) / math.sqrt(n)
    z = (values - H_CF / 2 * n) / (b_hat * math.sqrt(n))
    return b_hat, float(stats.kstest(z, "norm").statistic)


def clt_diagnostic(n: int, N: int, seed: int, workers: int = 1) -> GaussianDiagnostic:
    """Gaussian behaviour of log q_n(x), centred at (h/2) n and scaled by an empirical B."""
    if n < 50 or N < 500:
        raise DomainError("clt_diagnostic needs n >= 50 and N >= 500")
    logq, logL, rej = log_q_samples(n, N, seed, workers=workers)
    b_hat, ks = _standardized_ks(logq, n)
    z = (logq - H_CF / 2 * n) / (b_hat * math.sqrt(n))
    _, ks_l = _standardized_ks(logL, n)
    return GaussianDiagnostic(n, len(logq), b_hat, ks, float(stats.skew(z)),
                              float(stats.kurtosis(z)), float(np.mean(logq) / n), rej,
                              ks_l, float(np.mean(logL) / n))


# --- Lochs limits -------------------------------------------------------------------

TRANSFORMS = ("L/n", "logL/n", "L/logn", "L/(n/logn)", "L/(nlogL)", "f2(L)/f1(n)")


def _log(L: int) -> float:
    return math.log(L)


def apply_transform(name: str, L: int, n: int, p1: PartitionFamily, p2: PartitionFamily) -> Optional[float]:
    if name == "L/n":
        return float(Fraction(L, n))
    if name == "logL/n":
        return _log(L) / n if L >= 1 else None
    if name == "L/logn":
        return L / math.log(n)
    if name == "L/(n/logn)":
        return L * math.log(n) / n
    if name == "L/(nlogL)":
        return L / (n * _log(L)) if L >= 2 else None
    if name == "f2(L)/f1(n)":
        f1, f2 = p1.default_weight(), p2.default_weight()
        a, b = f2.evaluate(L), f1.evaluate(n)
        if a is W.NEG_INF or b is W.NEG_INF:
            return None
        return float(a.mid) / float(b.mid)
    raise DomainError(f"unknown transform {name!r}; expected one of {TRANSFORMS}")


def _lochs_sample(i, seed, p1, p2, depths, transform, bits, max_bits, cap, engine, stream):
    pt = sampled_point(seed, f"{stream}:{i}", bits)
    out = []
    for n in depths:
        try:
            rec, pt = resolve(lambda p: lochs(p, p1, p2, n, cap=cap, engine=engine), pt, max_bits)
        except CapExceeded:
            out.append(("cap", None))
            continue
        if rec is None:
            out.append(("rej", None))
        else:
            out.append(("ok", apply_transform(transform, rec.L, n, p1, p2)))
    return out


def lochs_limit_experiment(pair: Tuple[PartitionFamily, PartitionFamily], transform: str,
                           depths: Sequence[int], N: int, seed: int, bits: int = 128,
                           max_bits: int = DEFAULT_MAX_BITS, cap=None, engine: str = "auto",
                           target: Optional[float] = None, workers: int = 1) -> EstimatorReport:
    """Distribution of a normalised Lochs index over sampled x, per depth."""
    if transform not in TRANSFORMS:
        raise DomainError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")
    p1, p2 = pair
    stats_out = []
    for n in depths:
        job = partial(_lochs_sample, seed=seed, p1=p1, p2=p2, depths=[n], transform=transform,
                      bits=bits, max_bits=max_bits, cap=cap, engine=engine, stream=f"L{n}")
        col = [row[0] for row in _pmap(job, range(N), workers)]
        vals = [v for tag, v in col if tag == "ok"]
        stats_out.append(summarize(n, vals, sum(tag == "rej" for tag, _ in col), target,
                                   sum(tag == "cap" for tag, _ in col)))
    return EstimatorReport(Mode.IN_MEASURE, N, list(depths), stats_out,
                           extra={"pair": [p1.spec(), p2.spec()], "transform": transform})


def lochs_orientation_check(n: int = 1000, N: int = 500, seed: int = 0, tol: float = 0.01,
                            bits: int = 4096, max_bits: int = 16384, workers: int = 1) -> dict:
    """Mean L/n for decimal->CF and CF->decimal, and which one gives 6 log2 log10/pi^2."""
    d10, cf = Bary(10), CF()
    out = {"target": LOCHS_DECIMAL, "n": n, "N": N}
    for name, pair in (("decimal->cf", (d10, cf)), ("cf->decimal", (cf, d10))):
        rep = lochs_limit_experiment(pair, "L/n", [n], N, seed, bits=bits, max_bits=max_bits,
                                     engine="generic", target=LOCHS_DECIMAL, workers=workers)
        st = rep.stats[0]
        out[name] = {"mean": st.mean, "median": st.median, "n_samples": st.n_samples,
                     "rejections": st.rejections, "cap_exceeded": st.cap_exceeded}
    matches = [k for k in ("decimal->cf", "cf->decimal") if abs(out[k]["mean"] - LOCHS_DECIMAL) <= tol]
    out["matching_orientation"] = matches
    return out


# --- the non-log-balanced three-distance family ------------------------------------

@dataclass
class NonBalancedRow:
    k: int
    q_k: int
    a_next: int
    m_k: int
    r_k: int
    n_k: int
    eta_k: Tuple[Fraction, Fraction]
    delta_k: Tuple[Fraction, Fraction]
    mass_G: Tuple[Fraction, Fraction]
    ratio_eta: Tuple[float, float]
    ratio_delta: Tuple[float, float]
    past_threshold: bool
    mass_in_band: bool
    delta_bound: bool
    gap: float
    gap_ok: bool


def _bracket(lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
    return (lo, hi) if lo <= hi else (hi, lo)


def _neg_log_ratio(val: Tuple[Fraction, Fraction], n: int) -> Tuple[float, float]:
    """Certified enclosure of -log(val)/log(n) for val in the bracket."""
    lo, hi = val
    prec = START_PREC + max(lo.denominator.bit_length(), hi.denominator.bit_length()) // 8
    with iv_precision(prec):
        ln = iv.log(iv.mpf(n))
        a = -iv.log(_iv_frac(hi)) / ln
        b = -iv.log(_iv_frac(lo)) / ln
        return float(mpf(a.a)), float(mpf(b.b))


def proof_threshold(q: Sequence[int], s: Fraction, k_max: int) -> int:
    """Least k0 with q_{k-1}/q_k <= 1/3 and 3/q_k^s <= 1/4 for every k0 <= k <= k_max."""
    k0 = k_max + 1
    for k in range(k_max, 0, -1):
        qk, qk1 = q[k + 1], q[k]  # q is stored from index -1
        if not (3 * qk1 <= qk and qk**s.numerator >= 12**s.denominator):
            break
        k0 = k
    return k0


def nonbalanced_demo(s=Fraction(1), k_max: int = 10, bit_bound: int = DEFAULT_BIT_BOUND) -> List[NonBalancedRow]:
    """Exact per-k report for alpha(s) with a_1 = 1, a_{k+1} = ceil(q_k^s).

    alpha lies strictly between its convergents of order k_max+2 and k_max+3,
    and every reported quantity is affine in alpha, so evaluating at both
    gives an exact rational bracket.
    """
    s = Fraction(s)
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    cf = cf_generate(PowerRule(s), k_max + 3, bit_bound)
    lo_a, hi_a = cf.convergent(k_max + 2), cf.convergent(k_max + 3)
    k0 = proof_threshold(cf.q, s, k_max)
    rows = []
    for k in range(1, k_max + 1):
        qk, qk1 = cf.qn(k), cf.qn(k - 1)
        a_next = cf.an(k + 1)
        m = -(-a_next // 2)
        r = qk - 1
        nk = m * qk + qk1 + r

        def at(alpha):
            eta = abs(qk * alpha - cf.pn(k))
            eta1 = abs(qk1 * alpha - cf.pn(k - 1))
            return eta, eta1 - m * eta, (m * qk + qk1) * eta
        e1, d1, g1 = at(lo_a)
        e2, d2, g2 = at(hi_a)
        eta, delta, mass = _bracket(e1, e2), _bracket(d1, d2), _bracket(g1, g2)
        re = _neg_log_ratio(eta, nk)
        rd = _neg_log_ratio(delta, nk)
        gap = re[0] - rd[1]
        rows.append(NonBalancedRow(
            k, qk, a_next, m, r, nk, eta, delta, mass, re, rd, k >= k0,
            Fraction(1, 4) <= mass[0] and mass[1] <= Fraction(3, 4),
            delta[0] >= Fraction(1, 8 * qk), gap, gap >= 0.25))
    return rows


# --- norms ---------------------------------------------------------------------------

def partition_norm(family: PartitionFamily, n: int, measure: MeasureKind = MeasureKind.LEBESGUE):
    """Largest cell measure at depth n: exact Fraction for Lebesgue, certified float for Gauss."""
    if n < 0:
        raise DomainError("depth must be >= 0")
    if n == 0:
        return Fraction(1) if measure is MeasureKind.LEBESGUE else 1.0
    if isinstance(family, Bary) and measure is MeasureKind.LEBESGUE:
        return Fraction(1, family.b**n)
    if isinstance(family, Synthetic) and measure is MeasureKind.LEBESGUE:
        k, _ = synthetic_layout(family.f, n)
        return Fraction(1, 1 << k)
    if isinstance(family, CF):
        # all-ones quotients give the smallest continuants, hence the longest cylinder
        g = cf_generate(Golden(), n + 1)
        qn, qn1 = g.qn(n), g.qn(n - 1)
        cell_len = Fraction(1, qn * (qn + qn1))
        if measure is MeasureKind.LEBESGUE:
            return cell_len
        raise ResourceError("Gauss sup over infinitely many CF cells is not enumerated")
    cells = family.cells(n)
    if measure is MeasureKind.LEBESGUE:
        return max(c.length for c in cells)
    return max(measure_value(c, measure) for c in cells)

