"""Desk-scale experiment drivers.

Four measurements over the quasi-random coefficient model: the small
coupling scaling law for the Lyapunov exponent, large-deviation decay
of Monte Carlo deviation fractions, the same per term of the phase
expansion, and eigenfunction localization on finite windows. Every
driver is deterministic for a fixed plan: per-sample randomness is
derived from (master seed, cell index, chunk index), so worker count
never changes the output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .cmv_operator import build, eigenpairs
from .prufer import default_decorrelation_time, expansion_diagnostics, zeta_trace
from .sampling import (
    TrigPolynomial,
    autocorrelation_exact,
    evaluate_many,
    preset,
    spectral_function,
    spectral_window,
)
from .szego_cocycle import SpectralPoint, lyapunov_norm, lyapunov_poly
from .torus_dynamics import CAT_MAP, ToralAutomorphism, TorusPoint, orbit_arrays
from .verblunsky import VerblunskyConfig

MC_CHUNK = 512
CONFIDENCE = 0.95


@dataclass(frozen=True)
class ExperimentPlan:
    """Grids and bookkeeping shared by the experiment drivers.

    base_points is the number of independent orbit starts averaged
    inside each Lyapunov cell; eta_guard is the minimum distance every
    eta in the grid must keep from the degenerate angles {0, pi}.
    """

    lams: tuple[float, ...]
    etas: tuple[float, ...]
    Ns: tuple[int, ...]
    samples: int = 10_000
    seed: int = 0
    autom: ToralAutomorphism = CAT_MAP
    alpha: TrigPolynomial = field(default_factory=lambda: preset("alpha0"))
    base_points: int = 8
    eta_guard: float = 0.05

    def __post_init__(self):
        if not self.lams or not self.etas or not self.Ns:
            raise ValueError("lambda, eta and N grids must be nonempty")
        sup = self.alpha.sup_bound
        for lam in self.lams:
            if not (lam > 0.0 and math.isfinite(lam)):
                raise ValueError(f"lambda = {lam} must be positive and finite")
            if lam * sup >= 1.0 and sup > 0.0:
                raise ValueError(f"lambda = {lam} puts coefficients outside the disk")
        for eta in self.etas:
            d = min(abs(eta % (2 * math.pi)), abs(eta % (2 * math.pi) - math.pi),
                    abs(eta % (2 * math.pi) - 2 * math.pi))
            if d < self.eta_guard:
                raise ValueError(f"eta = {eta} within {self.eta_guard} of a degenerate angle")
        for N in self.Ns:
            if N < 2:
                raise ValueError("N grid entries must be at least 2")
        if self.samples < 1 or self.base_points < 1:
            raise ValueError("sample counts must be positive")

    def rng(self, cell: int, stream: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(cell, stream))
        return np.random.Generator(np.random.PCG64(ss))

    def config(self, lam: float, cell: int, stream: int) -> VerblunskyConfig:
        base = TorusPoint.random(self.rng(cell, stream))
        return VerblunskyConfig(lam=lam, base=base, autom=self.autom, alpha=self.alpha)


@dataclass(frozen=True)
class FitResult:
    """Ordinary least squares line fit with coefficient standard errors."""

    slope: float
    intercept: float
    r2: float
    slope_stderr: float
    intercept_stderr: float

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_stderr": self.slope_stderr,
            "intercept_stderr": self.intercept_stderr,
        }


def linear_fit(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two points to fit a line")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("fit inputs must be finite")
    A = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot > 0.0:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    else:
        r2 = 1.0 if ss_res <= 1e-12 else 0.0
    n = x.size
    if n > 2:
        s2 = ss_res / (n - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        se_slope, se_icpt = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    else:
        se_slope = se_icpt = math.inf
    if not math.isfinite(coef[0]):
        raise ValueError("fit produced a non-finite slope")
    return FitResult(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        r2=r2,
        slope_stderr=se_slope,
        intercept_stderr=se_icpt,
    )


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        parts = []
        for v in row:
            if isinstance(v, float):
                parts.append(repr(float(v)))
            else:
                parts.append(str(v))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def _pool_map(fn, args_list, jobs: int):
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args_list))


# ---------------------------------------------------------------------------
# Lyapunov scaling


@dataclass(frozen=True)
class LyapunovCell:
    lam: float
    eta: float
    N: int
    L_N: float
    prediction: float
    residual: float
    cross_delta: float


@dataclass(frozen=True)
class LyapunovScalingResult:
    rows: tuple[LyapunovCell, ...]
    residual_fit: FitResult | None

    CSV_HEADER = "lambda,eta,N,L_N,prediction,residual,cross_delta"

    def csv(self) -> str:
        return _csv(
            self.CSV_HEADER,
            [
                (r.lam, r.eta, r.N, r.L_N, r.prediction, r.residual, r.cross_delta)
                for r in self.rows
            ],
        )

    def summary(self) -> dict:
        return {
            "rows": len(self.rows),
            "residual_fit": self.residual_fit.as_dict() if self.residual_fit else None,
        }


def _lyapunov_cell(args) -> LyapunovCell:
    plan, cell_index, lam, eta, N = args
    s = SpectralPoint(eta=eta, branch=1)
    values = []
    cross = 0.0
    for r in range(plan.base_points):
        cfg = plan.config(lam, cell_index, r)
        # The raw growth rate log r_N / N carries a mean-zero lag-coupled
        # fluctuation of size lambda/sqrt(N) that would bury the cubic
        # remainder at this orbit budget. The measured lag-T term of the
        # phase expansion is that fluctuation, so subtracting it leaves
        # an estimator with the same limit and quadratic-order noise.
        diag = expansion_diagnostics(cfg, s, N)
        values.append(diag.lhs - diag.I4)
        if r == 0:
            cross = abs(lyapunov_poly(cfg, s, N) - lyapunov_norm(cfg, s, N))
    L_N = float(np.mean(values))
    prediction = 0.5 * lam * lam * float(spectral_function(plan.alpha, plan.autom, eta))
    return LyapunovCell(
        lam=lam,
        eta=eta,
        N=N,
        L_N=L_N,
        prediction=prediction,
        residual=abs(L_N - prediction),
        cross_delta=cross,
    )


def lyapunov_scaling(plan: ExperimentPlan, jobs: int = 1) -> LyapunovScalingResult:
    """Finite-N Lyapunov exponents against the small coupling prediction.

    Each (lambda, eta, N) cell averages the fluctuation-corrected
    growth estimate (raw Prufer growth rate minus its measured lag-T
    term) over base_points independent orbit starts and compares with
    lambda^2 J(eta) / 2. cross_delta records the disagreement between
    the two uncorrected growth-rate routes at the first base point. The residual
    fit regresses log median residual on log lambda; its slope measures
    the order of the remainder and needs at least two distinct lambdas.
    """
    cells = []
    idx = 0
    for lam in plan.lams:
        for eta in plan.etas:
            for N in plan.Ns:
                cells.append((plan, idx, lam, eta, N))
                idx += 1
    rows = tuple(_pool_map(_lyapunov_cell, cells, jobs))
    fit = None
    if len(set(plan.lams)) >= 2:
        med = {}
        for r in rows:
            med.setdefault(r.lam, []).append(r.residual)
        lams = sorted(med)
        logs = [math.log(max(float(np.median(med[l])), 5e-324)) for l in lams]
        fit = linear_fit([math.log(l) for l in lams], logs)
    return LyapunovScalingResult(rows=rows, residual_fit=fit)


# ---------------------------------------------------------------------------
# large deviation drivers


@dataclass(frozen=True)
class DeviationRow:
    family: str
    lam: float
    N: int
    count: int
    samples: int
    threshold: float
    q95: float

    @property
    def fraction(self) -> float:
        return self.count / self.samples

    @property
    def stderr(self) -> float:
        p = self.fraction
        return math.sqrt(p * (1.0 - p) / self.samples)

    @property
    def upper95(self) -> float:
        """One-sided Clopper-Pearson upper confidence bound."""
        if self.count == self.samples:
            return 1.0
        return float(
            scipy.stats.beta.ppf(CONFIDENCE, self.count + 1, self.samples - self.count)
        )


@dataclass(frozen=True)
class DeviationResult:
    family: str
    rows: tuple[DeviationRow, ...]
    fit: FitResult | None
    per_family: tuple[tuple[str, FitResult | None], ...] = ()

    CSV_HEADER = "family,lambda,N,count,samples,fraction,stderr,upper95,q95,threshold"

    def csv(self) -> str:
        return _csv(
            self.CSV_HEADER,
            [
                (
                    r.family,
                    r.lam,
                    r.N,
                    r.count,
                    r.samples,
                    r.fraction,
                    r.stderr,
                    r.upper95,
                    r.q95,
                    r.threshold,
                )
                for r in self.rows
            ],
        )

    def summary(self) -> dict:
        out = {
            "family": self.family,
            "rows": len(self.rows),
            "fit": self.fit.as_dict() if self.fit else None,
        }
        if self.per_family:
            out["per_family"] = {
                name: fit.as_dict() if fit else None for name, fit in self.per_family
            }
        return out


def _fit_positive_cells(rows: list[DeviationRow]) -> FitResult | None:
    pts = [(r.N, r.fraction) for r in rows if r.count > 0]
    if len(pts) < 2:
        return None
    return linear_fit([p[0] for p in pts], [math.log(p[1]) for p in pts])


def _deviation_chunk(args) -> tuple[int, list[float]]:
    """One deterministic chunk of Monte Carlo samples for one cell.

    Returns the exceedance count and the raw statistic values (the
    latter feed the q95 calibration column).
    """
    plan, family, cell_index, chunk_index, lam, N, threshold = args
    lo = chunk_index * MC_CHUNK
    hi = min(lo + MC_CHUNK, plan.samples)
    rng = plan.rng(cell_index, chunk_index)
    eta = plan.etas[0]
    s = SpectralPoint(eta=eta, branch=1)
    stats: list[float] = []
    if family == "lyapunov":
        pred = 0.5 * lam * lam * float(spectral_function(plan.alpha, plan.autom, eta))
    for _ in range(lo, hi):
        base = TorusPoint.random(rng)
        if family == "birkhoff":
            xs, ys = orbit_arrays(plan.autom, base, N)
            value = abs(np.mean(evaluate_many(plan.alpha, xs, ys)))
        else:
            cfg = VerblunskyConfig(lam=lam, base=base, autom=plan.autom, alpha=plan.alpha)
            value = abs(lyapunov_poly(cfg, s, N) - pred)
        stats.append(float(value))
    count = sum(1 for v in stats if v > threshold)
    return count, stats


def ldt_deviation(
    plan: ExperimentPlan,
    family: str = "birkhoff",
    threshold_fn=None,
    jobs: int = 1,
) -> DeviationResult:
    """Monte Carlo deviation fractions along the N grid.

    family selects the measured statistic: "birkhoff" is the modulus of
    the plain orbit average of the sampling function (threshold default
    0.2, coupling-independent); "lyapunov" is the distance of the
    finite-N growth rate from the small coupling prediction (threshold
    default lambda^3). threshold_fn maps lambda to the event threshold.
    Zero-count cells stay in the table; their upper95 column carries
    the one-sided binomial bound, and the exponential fit uses only the
    strictly positive cells.
    """
    if family not in ("birkhoff", "lyapunov"):
        raise ValueError("family must be 'birkhoff' or 'lyapunov'")
    if threshold_fn is None:
        threshold_fn = (lambda lam: 0.2) if family == "birkhoff" else (lambda lam: lam**3)
    n_chunks = (plan.samples + MC_CHUNK - 1) // MC_CHUNK
    rows = []
    work = []
    cell_index = 0
    for lam in plan.lams:
        for N in plan.Ns:
            thr = float(threshold_fn(lam))
            for c in range(n_chunks):
                work.append((plan, family, cell_index, c, lam, N, thr))
            cell_index += 1
    results = _pool_map(_deviation_chunk, work, jobs)
    per_cell: dict[int, tuple[int, list[float]]] = {}
    for (plan_, fam_, ci, _, lam, N, thr), (cnt, stats) in zip(work, results):
        cur = per_cell.setdefault(ci, (0, []))
        per_cell[ci] = (cur[0] + cnt, cur[1] + stats)
    cell_index = 0
    for lam in plan.lams:
        for N in plan.Ns:
            thr = float(threshold_fn(lam))
            cnt, stats = per_cell[cell_index]
            q95 = float(np.quantile(np.array(stats), CONFIDENCE)) if stats else math.nan
            rows.append(
                DeviationRow(
                    family=family,
                    lam=lam,
                    N=N,
                    count=cnt,
                    samples=plan.samples,
                    threshold=thr,
                    q95=q95,
                )
            )
            cell_index += 1
    return DeviationResult(family=family, rows=tuple(rows), fit=_fit_positive_cells(rows))


PRUFER_FAMILIES = ("fsq", "mixed", "corr", "zeta2")


def _prufer_chunk(args) -> dict[str, tuple[int, list[float]]]:
    plan, cell_index, chunk_index, lam, N, threshold = args
    lo = chunk_index * MC_CHUNK
    hi = min(lo + MC_CHUNK, plan.samples)
    rng = plan.rng(cell_index, chunk_index)
    eta = plan.etas[0]
    s = SpectralPoint(eta=eta, branch=1)
    z = s.z
    c0 = plan.alpha.mean_square()
    out = {f: (0, []) for f in PRUFER_FAMILIES}
    probe = VerblunskyConfig(
        lam=lam, base=TorusPoint.from_radians(0.5, 0.5), autom=plan.autom, alpha=plan.alpha
    )
    T = default_decorrelation_time(probe)
    corr_limit = sum(
        (z**sh * autocorrelation_exact(plan.alpha, plan.autom, sh)).real
        for sh in range(1, T + 1)
    )
    for _ in range(lo, hi):
        base = TorusPoint.random(rng)
        cfg = VerblunskyConfig(lam=lam, base=base, autom=plan.autom, alpha=plan.alpha)
        xs, ys = orbit_arrays(plan.autom, base, N)
        F = evaluate_many(plan.alpha, xs, ys)
        zetas, _ = zeta_trace(cfg, s, N)
        vals = {
            "fsq": abs(float(np.mean(np.abs(F) ** 2)) - c0),
            "mixed": abs(float(np.mean((z**T * zetas[: N - T] * F[T:]).real)))
            if N > T
            else 0.0,
            "corr": abs(
                sum(
                    float(np.mean((z**sh * np.conj(F[: N - sh]) * F[sh:]).real))
                    for sh in range(1, T + 1)
                )
                - corr_limit
            ),
            "zeta2": 0.5 * abs(float(np.mean((zetas**2 * F**2).real))),
        }
        for f, v in vals.items():
            cnt, lst = out[f]
            lst.append(v)
            out[f] = (cnt + (1 if v > threshold else 0), lst)
    return out


def prufer_term_ldt(
    plan: ExperimentPlan,
    threshold_fn=None,
    jobs: int = 1,
) -> DeviationResult:
    """Deviation fractions for the four phase-expansion term families.

    Families: "fsq" is the orbit average of |F|^2 against its exact
    mean; "mixed" the lagged phase-weighted average Re(z^T zeta_{n-T}
    F_n); "corr" the short-lag correlation sum against its exact limit;
    "zeta2" the squared-phase average Re(zeta_n^2 F_n^2) / 2. All four
    share the threshold threshold_fn(lambda), default lambda^3.
    """
    if threshold_fn is None:
        threshold_fn = lambda lam: lam**3
    n_chunks = (plan.samples + MC_CHUNK - 1) // MC_CHUNK
    work = []
    cell_index = 0
    for lam in plan.lams:
        for N in plan.Ns:
            thr = float(threshold_fn(lam))
            for c in range(n_chunks):
                work.append((plan, cell_index, c, lam, N, thr))
            cell_index += 1
    results = _pool_map(_prufer_chunk, work, jobs)
    merged: dict[tuple[int, str], tuple[int, list[float]]] = {}
    for (plan_, ci, _, lam, N, thr), res in zip(work, results):
        for f in PRUFER_FAMILIES:
            cur = merged.setdefault((ci, f), (0, []))
            merged[(ci, f)] = (cur[0] + res[f][0], cur[1] + res[f][1])
    rows = []
    cell_index = 0
    for lam in plan.lams:
        for N in plan.Ns:
            thr = float(threshold_fn(lam))
            for f in PRUFER_FAMILIES:
                cnt, stats = merged[(cell_index, f)]
                q95 = float(np.quantile(np.array(stats), CONFIDENCE)) if stats else math.nan
                rows.append(
                    DeviationRow(
                        family=f,
                        lam=lam,
                        N=N,
                        count=cnt,
                        samples=plan.samples,
                        threshold=thr,
                        q95=q95,
                    )
                )
            cell_index += 1
    per_family = tuple(
        (f, _fit_positive_cells([r for r in rows if r.family == f]))
        for f in PRUFER_FAMILIES
    )
    return DeviationResult(
        family="prufer", rows=tuple(rows), fit=None, per_family=per_family
    )


# ---------------------------------------------------------------------------
# localization


@dataclass(frozen=True)
class LocalizationRow:
    lam: float
    N: int
    eta: float
    decay_rate: float
    r2: float
    localization_length: float
    lyapunov: float
    ratio: float


@dataclass(frozen=True)
class LocalizationResult:
    rows: tuple[LocalizationRow, ...]
    window: tuple[tuple[float, float], ...]

    CSV_HEADER = "lambda,N,eta,decay_rate,r2,localization_length,L,ratio"

    @property
    def empty(self) -> bool:
        return not self.rows

    def median_ratio(self) -> float:
        if not self.rows:
            return math.nan
        return float(np.median([r.ratio for r in self.rows]))

    def csv(self) -> str:
        return _csv(
            self.CSV_HEADER,
            [
                (
                    r.lam,
                    r.N,
                    r.eta,
                    r.decay_rate,
                    r.r2,
                    r.localization_length,
                    r.lyapunov,
                    r.ratio,
                )
                for r in self.rows
            ],
        )

    def summary(self) -> dict:
        return {
            "rows": len(self.rows),
            "median_ratio": self.median_ratio(),
            "window": [list(w) for w in self.window],
        }


BOUNDARY_SKIP = 5


def eigenvector_decay_fit(vec: np.ndarray) -> FitResult:
    """Exponential decay fit of a profile from its peak outward.

    Fits log|vec(n)| = intercept - rate |n - peak| over both sides
    pooled, skipping BOUNDARY_SKIP sites at each end and any exact
    zeros. The returned slope is the decay rate (positive = decay).
    """
    mag = np.abs(np.asarray(vec))
    m = mag.size
    if m <= 2 * BOUNDARY_SKIP + 2:
        raise ValueError("profile too short for a decay fit")
    peak = int(np.argmax(mag))
    idx = np.arange(BOUNDARY_SKIP, m - BOUNDARY_SKIP)
    keep = mag[idx] > 0.0
    idx = idx[keep]
    if idx.size < 3:
        raise ValueError("not enough nonzero sites for a decay fit")
    fit = linear_fit(-np.abs(idx - peak).astype(float), np.log(mag[idx]))
    return fit


def localization(
    plan: ExperimentPlan,
    delta: float = 0.3,
    c: float = 0.05,
    gamma: complex = 1.0,
    window: tuple[tuple[float, float], ...] | None = None,
    lyap_N: int = 200_000,
) -> LocalizationResult:
    """Eigenfunction decay rates inside a spectral window.

    For each (lambda, N) cell: build the window operator on [0, N] with
    right boundary value gamma (the a = 0 edge needs no left value),
    keep eigenpairs whose angle lies in the window (computed from the
    spectral function level set unless an explicit window is given),
    fit each eigenvector's exponential profile, and compare the decay
    rate with the growth rate at the matching angle. No in-window
    eigenvalues yields an empty result, not an error.
    """
    if window is None:
        win = tuple(spectral_window(plan.alpha, plan.autom, delta, c))
    else:
        win = tuple((float(lo), float(hi)) for lo, hi in window)
    rows: list[LocalizationRow] = []
    if not win:
        return LocalizationResult(rows=(), window=win)
    cell = 0
    for lam in plan.lams:
        for N in plan.Ns:
            pred = 0.5 * lam * lam * max(
                float(spectral_function(plan.alpha, plan.autom, 0.5 * (lo + hi)))
                for lo, hi in win
            )
            if 0.0 < pred * N < 20.0:
                raise ValueError(
                    f"N = {N} gives only {pred * N:.1f} predicted e-foldings, need 20"
                )
            cfg = plan.config(lam, cell, 0)
            op = build(cfg, 0, N, None, gamma)
            dec = eigenpairs(op)
            for j in range(dec.count):
                eta_j = float(dec.etas[j])
                if not any(lo <= eta_j <= hi for lo, hi in win):
                    continue
                try:
                    fit = eigenvector_decay_fit(dec.vectors[:, j])
                except ValueError:
                    continue
                rate = fit.slope
                s_j = SpectralPoint(eta=eta_j, branch=1)
                L = lyapunov_poly(cfg, s_j, lyap_N)
                rows.append(
                    LocalizationRow(
                        lam=lam,
                        N=N,
                        eta=eta_j,
                        decay_rate=rate,
                        r2=fit.r2,
                        localization_length=1.0 / rate if rate > 0 else math.inf,
                        lyapunov=L,
                        ratio=rate / L if L != 0 else math.nan,
                    )
                )
            cell += 1
    return LocalizationResult(rows=tuple(rows), window=win)


def summary_json(result) -> str:
    """JSON summary for any result object exposing summary()."""
    return json.dumps(result.summary(), indent=2, sort_keys=True) + "\n"
