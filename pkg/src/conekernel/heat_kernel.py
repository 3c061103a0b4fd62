"""Heat kernel of ``-Delta + V_0(y) r^-2`` on a metric cone, as a Bessel series.

The kernel at time ``t`` between ``(r, y)`` and ``(s, y')`` is

    (2t)^-1 exp(-(r^2 + s^2)/4t) (rs)^-(n-2)/2 sum_j H_j(y, y') I_{mu_j}(rs/2t).

With ``z = rs/2t`` each Bessel factor is carried as ``exp(-z) I_mu(z)``, so
the prefactor becomes ``exp(-(r - s)^2/4t)`` and nothing overflows.

Truncation is certified: with ``B_j`` the section's bound on ``|H_j|``, the
terms beyond ``K`` are dominated by ``sum_{j >= K} B_j sqrt(pi) (z/2)^mu_j /
Gamma(mu_j + 1/2)`` (scaled units), and the series is cut at the smallest ``K``
whose majorant tail is below ``tol`` times the partial sum.
"""

from __future__ import annotations

import csv
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import InvalidPoint, TruncationFailure
from .cone_geometry import ConePoint, cone_distance_dh
from .cross_section import CrossSection
from .special_functions import log_bessel_i_many

_LOG_SQRT_PI = 0.5 * math.log(math.pi)
_EPS = np.finfo(float).eps
# terms this far (in log units) below the largest majorant term are irrelevant
_MAJORANT_DEPTH = 745.0
DEFAULT_C_LIST = (2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class KernelEvaluation:
    """A kernel value with its truncation and round-off diagnostics.

    Attributes
    ----------
    value : float
        The kernel.
    terms : int
        Number of eigenvalue groups summed.
    tail_bound : float
        Certified bound on the omitted terms, in kernel units.
    z : float
        ``rs / 2t``.
    condition : float
        ``sum |term| / |sum|``; the relative round-off error is about
        ``condition * 1e-16``.
    """

    value: float
    terms: int
    tail_bound: float
    z: float
    condition: float

    @property
    def roundoff(self) -> float:
        return self.condition * 4.0 * _EPS


class HeatKernelEvaluator:
    """Evaluate the cone heat kernel for a cross-section.

    Parameters
    ----------
    section : CrossSection
        The cross-section with its potential.
    n : int, optional
        Cone dimension; must match ``section.n`` when given.
    tol : float
        Relative truncation tolerance.
    k_max : int
        Cap on the number of eigenvalue groups (eigenspaces for analytic
        sections, eigenvectors for matrix sections).
    """

    def __init__(self, section: CrossSection, n: int | None = None, tol: float = 1e-8,
                 k_max: int = 4096):
        if n is not None and int(n) != section.n:
            raise ValueError(f"cone dimension {n} does not match the section's n={section.n}")
        if not tol > 0.0:
            raise ValueError(f"tolerance must be positive, got {tol}")
        if int(k_max) < 1:
            raise ValueError(f"k_max must be >= 1, got {k_max}")
        if not section.lambda0 > 0.0:
            raise ValueError("the section operator must be strictly positive")
        self.section = section
        self.n = section.n
        self.tol = float(tol)
        self.k_max = int(k_max)
        self._lock = threading.Lock()
        self._mus = np.empty(0)
        self._log_coef = np.empty(0)
        self._bessel_cache: dict[float, np.ndarray] = {}

    def __repr__(self) -> str:
        return f"HeatKernelEvaluator({self.section!r}, tol={self.tol:g}, k_max={self.k_max})"

    # spectral data ----------------------------------------------------------
    def _available(self, count: int) -> int:
        limit = self.section.num_groups
        return count if limit is None else min(count, limit)

    def _ensure_groups(self, count: int) -> None:
        count = self._available(count)
        if self._mus.size >= count:
            return
        with self._lock:
            if self._mus.size >= count:
                return
            mus = self.section.group_mus(count)
            bounds = self.section.group_sup_bounds(count)
            lg = _backend.kernels.log_gamma_many(mus + 0.5)
            with np.errstate(divide="ignore"):
                log_coef = np.log(bounds) + _LOG_SQRT_PI - lg
            self._log_coef = log_coef
            self._mus = mus

    def mus(self, count: int) -> np.ndarray:
        self._ensure_groups(count)
        return self._mus[: self._available(count)]

    def _log_scaled_bessel(self, z: float, count: int) -> np.ndarray:
        """``log(exp(-z) I_mu_j(z))`` for the first ``count`` groups, cached per ``z``."""
        count = self._available(count)
        cached = self._bessel_cache.get(z)
        if cached is not None and cached.size >= count:
            return cached[:count]
        start = 0 if cached is None else cached.size
        grow = max(count, 2 * start)
        grow = self._available(grow)
        mus = self.mus(grow)
        fresh = log_bessel_i_many(mus[start:grow], z) - z
        full = fresh if cached is None else np.concatenate([cached, fresh])
        if len(self._bessel_cache) > 4096:
            self._bessel_cache.clear()
        self._bessel_cache[z] = full
        return full[:count]

    # truncation majorant ------------------------------------------------------
    def _log_majorant(self, z: float, count: int) -> np.ndarray:
        """Log of the scaled majorant ``B_j sqrt(pi) (z/2)^mu_j / Gamma(mu_j + 1/2)``."""
        count = self._available(count)
        self._ensure_groups(count)
        return self._log_coef[:count] + self._mus[:count] * math.log(0.5 * z)

    def log_tails(self, z: float) -> np.ndarray:
        """``log_tails(z)[K]`` bounds ``log sum_{j >= K} |H_j| e^{-z} I_mu_j(z)``.

        The array covers ``K = 0 .. J`` where beyond ``J`` the majorant is
        closed by a geometric series (valid because the majorant terms are
        log-concave in ``j`` past their peak); an entry of ``+inf`` means no
        certificate is available at that ``K``.
        """
        limit = self.section.num_groups
        cap = self.k_max + 1 if limit is None else min(limit, self.k_max + 1)
        count = min(64, cap)
        while True:
            lb = self._log_majorant(z, count)
            finite_end = limit is not None and count == limit
            if finite_end:
                log_rem = -math.inf
                break
            diffs = np.diff(lb[-9:])
            decaying = diffs.size > 0 and np.max(diffs) < 0.0
            if decaying and lb[-1] < np.max(lb) - _MAJORANT_DEPTH:
                rho = math.exp(float(np.max(diffs)))
                log_rem = float(lb[-1]) + math.log(rho / (1.0 - rho))
                break
            if count >= cap:
                if decaying:
                    rho = math.exp(float(np.max(diffs)))
                    log_rem = float(lb[-1]) + math.log(rho / (1.0 - rho))
                else:
                    log_rem = math.inf
                break
            count = min(2 * count, cap)
        seq = np.append(lb, log_rem)
        return np.logaddexp.accumulate(seq[::-1])[::-1]

    # core sums ------------------------------------------------------------------
    def _series(self, z: float, y, ys, fixed_terms: int | None = None):
        """Scaled sums ``sum_j H_j(y, ys) e^{-z} I_mu_j(z)`` with certified truncation.

        Returns ``(sums, K, log_tail_K, abs_sums)``.
        """
        if fixed_terms is not None:
            K = self._available(fixed_terms)
            log_i = self._log_scaled_bessel(z, K)
            terms = np.exp(log_i)[:, None] * self.section.group_kernels(K, y, ys)
            tails = self.log_tails(z)
            log_tail = tails[K] if K < tails.size else tails[-1]
            # sequential summation, as in the certified path, so that a longer
            # sum extends the shorter one instead of reordering it
            return np.cumsum(terms, axis=0)[-1], K, float(log_tail), np.abs(terms).sum(axis=0)

        tails = self.log_tails(z)
        limit = self.section.num_groups
        total = tails.size - 1
        log_tol = math.log(self.tol)
        # start where the tail drops below tol times the leading term's bound
        first = self._log_majorant(z, 1)[0]
        K = int(np.argmax(tails <= log_tol + first)) if np.any(tails <= log_tol + first) else total
        K = max(min(K, total), 1)
        while True:
            log_i = self._log_scaled_bessel(z, K)
            G = self.section.group_kernels(K, y, ys)
            terms = np.exp(log_i)[:, None] * G
            partial = np.cumsum(terms, axis=0)
            with np.errstate(divide="ignore"):
                log_abs = np.log(np.abs(partial))
            ok = tails[1:K + 1, None] <= log_tol + log_abs
            if limit is not None and K == limit:
                ok[-1, :] = True
            if np.all(ok.any(axis=0)):
                first_ok = np.argmax(ok, axis=0)
                k_use = int(first_ok.max()) + 1
                sums = partial[k_use - 1]
                return sums, k_use, float(tails[k_use]), np.abs(terms[:k_use]).sum(axis=0)
            if K >= min(total, self.k_max):
                raise TruncationFailure(
                    f"no certified truncation within {K} groups", float(np.exp(tails[K])), None)
            K = min(max(int(1.5 * K) + 8, K + 1), total, self.k_max)

    # public evaluation ------------------------------------------------------------
    @staticmethod
    def _check_time(t: float) -> float:
        t = float(t)
        if not (t > 0.0 and math.isfinite(t)):
            raise ValueError(f"time must be finite and > 0, got {t}")
        return t

    def _log_prefactor(self, t, r, s):
        return -np.log(2.0 * t) - (r - s) ** 2 / (4.0 * t) - 0.5 * (self.n - 2) * np.log(r * s)

    def evaluate_batch(self, t: float, r: float, y, s_values, ys, fixed_terms: int | None = None):
        """Kernel between ``(r, y)`` and every ``(s, y')`` for ``s`` in ``s_values``, ``y'`` in ``ys``.

        Returns an array of shape ``(len(s_values), len(ys))``. Points sharing a
        radius share their Bessel evaluations.
        """
        t = self._check_time(t)
        s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
        if not (r > 0.0) or np.any(s_values <= 0.0):
            raise InvalidPoint("radial coordinates must be > 0 (cone tip excluded)")
        y = self.section.validate_point(y)
        ys = self.section.as_point_array(ys)
        out = np.empty((s_values.size, len(ys)))
        for i, s in enumerate(s_values):
            z = r * s / (2.0 * t)
            try:
                sums, _, _, _ = self._series(z, y, ys, fixed_terms)
            except TruncationFailure as exc:
                raise TruncationFailure("no certified truncation", exc.tail_bound,
                                        (t, r, float(s))) from None
            out[i] = np.exp(self._log_prefactor(t, r, s)) * sums
        return out

    def evaluate_full(self, t: float, p: ConePoint, q: ConePoint,
                      fixed_terms: int | None = None) -> KernelEvaluation:
        """Kernel value with truncation and conditioning diagnostics.

        With ``fixed_terms`` the series is summed over exactly that many groups
        (capped by the section) instead of the certified count.
        """
        t = self._check_time(t)
        y = self.section.validate_point(p.y)
        ys = self.section.as_point_array([self.section.validate_point(q.y)])
        z = p.r * q.r / (2.0 * t)
        try:
            sums, K, log_tail, abs_sums = self._series(z, y, ys, fixed_terms)
        except TruncationFailure as exc:
            raise TruncationFailure("no certified truncation", exc.tail_bound,
                                    (t, p.r, q.r, p.y, q.y)) from None
        pref = float(np.exp(self._log_prefactor(t, p.r, q.r)))
        total = float(sums[0])
        cond = float(abs_sums[0] / abs(total)) if total != 0.0 else math.inf
        return KernelEvaluation(pref * total, K, pref * math.exp(log_tail), z, cond)

    def evaluate(self, t: float, p: ConePoint, q: ConePoint) -> float:
        """Heat kernel at time ``t`` between cone points ``p`` and ``q``.

        Raises
        ------
        TruncationFailure
            If ``k_max`` groups do not achieve the tail certificate.
        """
        return self.evaluate_full(t, p, q).value

    def __call__(self, t, p, q) -> float:
        return self.evaluate(t, p, q)

    def truncation_tail(self, K: int, t: float, p: ConePoint, q: ConePoint) -> float:
        """Certified bound, in kernel units, on the terms with group index ``>= K``.

        Nonincreasing in ``K``; zero once a finite section is exhausted.
        """
        t = self._check_time(t)
        if K < 0:
            raise ValueError("K must be >= 0")
        z = p.r * q.r / (2.0 * t)
        tails = self.log_tails(z)
        log_tail = tails[K] if K < tails.size else (tails[-1] if self.section.num_groups is None
                                                    else -math.inf)
        return float(np.exp(self._log_prefactor(t, p.r, q.r) + log_tail))

    def series_tail(self, K: int, z: float) -> float:
        """Bound on ``sum_{j >= K} |H_j| I_mu_j(z)`` (unscaled; may be ``inf`` on overflow)."""
        tails = self.log_tails(z)
        log_tail = tails[min(K, tails.size - 1)]
        with np.errstate(over="ignore"):
            return float(np.exp(log_tail + z))

    # bounds ---------------------------------------------------------------------
    def sigma(self) -> float:
        """``(n - 2)/2 - mu_0``."""
        return 0.5 * (self.n - 2) - self.section.mu0

    def distance(self, p: ConePoint, q: ConePoint) -> float:
        return float(cone_distance_dh(p.r, q.r, self.section.distance(p.y, q.y)))

    def log_gaussian_shape(self, t, r, s, d, c: float):
        """Log of ``min(1, rs/2t)^-sigma t^(-n/2) exp(-d^2/(c t))``; vectorized."""
        z = np.asarray(r, float) * np.asarray(s, float) / (2.0 * np.asarray(t, float))
        return (-self.sigma() * np.log(np.minimum(1.0, z)) - 0.5 * self.n * np.log(t)
                - np.asarray(d, float) ** 2 / (c * np.asarray(t, float)))

    def gaussian_bound(self, t: float, p: ConePoint, q: ConePoint, C: float, c: float) -> float:
        """``C min(1, rs/2t)^-sigma t^(-n/2) exp(-d^2/(c t))`` with ``d`` the cone distance."""
        if not (C > 0.0 and c > 0.0):
            raise ValueError("C and c must be positive")
        t = self._check_time(t)
        d = self.distance(p, q)
        return float(C * np.exp(self.log_gaussian_shape(t, p.r, q.r, d, c)))

    def fit_bound_constants(self, grid: Sequence, c_list: Iterable[float] = DEFAULT_C_LIST,
                            workers: int = 1, max_roundoff: float = 1e-6) -> "BoundReport":
        """Smallest ``C`` per candidate ``c`` so the Gaussian bound holds on ``grid``.

        ``grid`` is a sequence of ``(t, p, q)``. The report keeps the ``c`` with
        the smallest fitted ``C``; ties go to the earlier candidate.

        Points where cancellation in the series leaves less than
        ``max_roundoff`` relative accuracy carry no information about the
        kernel; they are left out of the fit, counted in ``unresolved`` and
        written with ``ratio = nan``.
        """
        grid = list(grid)
        c_list = [float(c) for c in c_list]
        if not grid:
            raise ValueError("bound fitting needs a nonempty grid")
        if not c_list or min(c_list) <= 0.0:
            raise ValueError("candidate c values must be positive")

        def one(item):
            t, p, q = item
            res = self.evaluate_full(t, p, q)
            return res.value, self.section.distance(p.y, q.y), res.roundoff

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(one, grid))
        else:
            results = [one(item) for item in grid]
        t = np.array([g[0] for g in grid], dtype=float)
        r = np.array([g[1].r for g in grid])
        s = np.array([g[2].r for g in grid])
        kern = np.array([v for v, _, _ in results])
        dh = np.array([d for _, d, _ in results])
        resolved = np.array([e <= max_roundoff for _, _, e in results])
        if not resolved.any():
            raise ValueError("no grid point is resolved in double precision")
        d = cone_distance_dh(r, s, dh)
        per_c = {}
        best = None
        for c in c_list:
            log_shape = self.log_gaussian_shape(t, r, s, d, c)
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                ratio = kern / np.exp(log_shape)
            ratio = np.where(np.isfinite(ratio), ratio, np.inf)
            ratio = np.where(resolved, ratio, np.nan)
            idx = int(np.nanargmax(ratio))
            fitted = float(ratio[idx])
            per_c[c] = fitted
            if best is None or fitted < best[1]:
                best = (c, fitted, idx, ratio, log_shape)
        c, fitted, idx, ratio, log_shape = best
        rows = [(float(t[i]), float(r[i]), float(s[i]), float(dh[i]), float(kern[i]),
                 float(fitted * np.exp(log_shape[i])), float(ratio[i])) for i in range(len(grid))]
        return BoundReport(
            sigma=self.sigma(), c=c, C=fitted,
            worst_point={"t": float(t[idx]), "r": float(r[idx]), "s": float(s[idx]),
                         "dh": float(dh[idx])},
            max_ratio=float(ratio[idx]), grid_size=len(grid), per_c=per_c, rows=rows,
            unresolved=int(np.sum(~resolved)))

    def bound_grid(self, z_values, dh_values, t_values=(1.0,), aspects=(1.0,)):
        """Grid of ``(t, p, q)`` realizing prescribed ``rs/2t`` and section distances.

        For each aspect ratio ``r/s = aspect`` the radii are chosen so that
        ``rs / 2t = z``.
        """
        grid = []
        for t in t_values:
            for z in z_values:
                for aspect in aspects:
                    s = math.sqrt(2.0 * t * z / aspect)
                    r = aspect * s
                    for dh in dh_values:
                        y, y2 = self.section.points_at_distance(dh)
                        grid.append((t, ConePoint(r, y), ConePoint(s, y2)))
        return grid

    # key lemma --------------------------------------------------------------------
    def log_lemma_function(self, z: float, y, ys):
        """``log |F|`` and sign, with ``F = z^-(n-2)/2 sum_j H_j I_mu_j(z)``, plus conditioning."""
        sums, _, _, abs_sums = self._series(z, self.section.validate_point(y),
                                            self.section.as_point_array(ys))
        with np.errstate(divide="ignore"):
            log_abs = -0.5 * (self.n - 2) * math.log(z) + z + np.log(np.abs(sums))
            cond = np.where(sums != 0.0, abs_sums / np.abs(sums), np.inf)
        return log_abs, np.sign(sums), cond

    def lemma_key_check(self, z_grid, delta_grid, eps0: float = math.pi,
                        n_range: Iterable[int] | None = None,
                        max_roundoff: float = 1e-6) -> "LemmaReport":
        """Fit the constants of the small-``z`` and large-``z`` envelopes of ``F(z, delta)``.

        Small ``z`` (``z <= 1``): ``F <= C z^-sigma e^{z cos delta}`` for
        ``delta <= pi`` and ``F <= C z^-sigma`` for ``delta >= pi``.
        Large ``z`` (``z >= 1``): ``F <= C (e^{z cos delta} + z^N e^{z cos(eps0/2)})``
        for ``delta <= eps0/2``, ``C z^N e^{z cos delta}`` up to ``pi`` and
        ``C e^{z/2}`` beyond, with ``N`` scanned over ``n_range`` (default
        ``0 .. 2n``). ``eps0`` only moves the branch boundary.

        Points whose series loses more than ``max_roundoff`` relative accuracy
        to cancellation are excluded from the fits and counted.
        """
        z_grid = np.asarray(sorted(float(z) for z in z_grid))
        deltas = [float(d) for d in delta_grid]
        if z_grid.size == 0 or not deltas:
            raise ValueError("lemma check needs nonempty grids")
        if np.any(z_grid <= 0.0):
            raise ValueError("z must be positive")
        if max(deltas) > self.section.diameter + 1e-12 or min(deltas) < 0.0:
            raise ValueError(f"delta must lie in [0, {self.section.diameter}]")
        n_range = list(range(0, 2 * self.n + 1) if n_range is None else n_range)
        sigma = self.sigma()
        pairs = [self.section.points_at_distance(d) for d in deltas]
        actual = np.array([self.section.distance(a, b) for a, b in pairs])
        log_f = np.empty((z_grid.size, len(deltas)))
        cond = np.empty_like(log_f)
        for i, z in enumerate(z_grid):
            for j, (a, b) in enumerate(pairs):
                lf, _, cd = self.log_lemma_function(z, a, [b])
                log_f[i, j], cond[i, j] = lf[0], cd[0]
        resolved = cond * 4.0 * _EPS <= max_roundoff
        Z, D = np.meshgrid(z_grid, actual, indexing="ij")
        small = Z <= 1.0
        near = D <= math.pi
        report = LemmaReport(sigma=sigma, eps0=eps0, z_grid=z_grid.tolist(), deltas=actual.tolist(),
                             unresolved=int(np.sum(~resolved)))
        lz = np.log(Z)
        env_small = -sigma * lz + np.where(near, Z * np.cos(np.minimum(D, math.pi)), 0.0)
        for mask, key in ((small & near & resolved, "small_near"), (small & ~near & resolved, "small_far")):
            if mask.any():
                ratio = log_f[mask] - env_small[mask]
                report.constants[key] = float(np.exp(ratio.max()))
        large = (Z >= 1.0) & resolved
        if large.any():
            half = 0.5 * eps0
            fits = {}
            for N in n_range:
                env = np.where(
                    D <= half,
                    np.logaddexp(Z * np.cos(D), N * lz + Z * math.cos(half)),
                    np.where(D <= math.pi, N * lz + Z * np.cos(np.minimum(D, math.pi)), 0.5 * Z))
                fits[N] = float(np.exp((log_f[large] - env[large]).max()))
            best_n = min(fits, key=lambda k: (fits[k], k))
            report.large_fits = fits
            report.best_N = best_n
            report.constants["large"] = fits[best_n]
        report.log_f = log_f.tolist()
        report.resolved = resolved.tolist()
        return report


@dataclass
class BoundReport:
    """Empirical constants for the Gaussian upper bound over a scan grid.

    ``C`` is the maximum of ``kernel / shape`` where ``shape`` is the bound
    with unit constant, so ``max_ratio == C``. CSV rows carry ``bound = C *
    shape`` and ``ratio = kernel / shape``.
    """

    sigma: float
    c: float
    C: float
    worst_point: dict
    max_ratio: float
    grid_size: int
    per_c: dict = field(default_factory=dict)
    rows: list = field(default_factory=list, repr=False)
    unresolved: int = 0

    @property
    def finite(self) -> bool:
        return math.isfinite(self.C)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "c": self.c, "C": self.C, "worst_point": self.worst_point,
                "max_ratio": self.max_ratio, "grid_size": self.grid_size}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "r", "s", "d_h", "kernel", "bound", "ratio"])
            for row in self.rows:
                writer.writerow([format_float(v) for v in row])


@dataclass
class LemmaReport:
    """Fitted constants for the key-lemma envelopes; keys ``small_near``, ``small_far``, ``large``."""

    sigma: float
    eps0: float
    z_grid: list
    deltas: list
    unresolved: int
    constants: dict = field(default_factory=dict)
    large_fits: dict = field(default_factory=dict)
    best_N: int | None = None
    log_f: list = field(default_factory=list, repr=False)
    resolved: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("log_f")
        out.pop("resolved")
        out["large_fits"] = {str(k): v for k, v in self.large_fits.items()}
        return out


def format_float(value: float) -> str:
    """Round-trip decimal text (17 significant digits)."""
    return format(float(value), ".17g")
