"""Verification suites shared by the command line and the test-suite.

Each suite returns a :class:`SuiteResult` holding the worst residual found
and the threshold it was held to.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cone_geometry import ConePoint, cone_distance_dh, default_radial_cut, integrate_over_cone
from .cross_section import CircleSection, CrossSection, SphereSection, circle_matrix_section
from .heat_kernel import HeatKernelEvaluator
from .oracles import fd_versus_series, weber_closed_form, weber_quadrature


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float
    threshold: float
    checked: int
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.name:<14} {verdict}  worst={self.worst:.3e}  threshold={self.threshold:.1e}"
                f"  checked={self.checked}")


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _point(section: CrossSection, r: float, dh: float):
    y, y2 = section.points_at_distance(dh)
    return ConePoint(r, y), y2


@_timed
def weber_suite(mus=(0.0, 0.5, 1.0, 2.3), values=(0.5, 1.0, 2.0), threshold=1e-5) -> SuiteResult:
    """Quadrature of the Bessel product integral against its closed form."""
    worst, where, count = 0.0, None, 0
    for mu in mus:
        for t in values:
            for r in values:
                for s in values:
                    exact = weber_closed_form(t, r, s, mu)
                    rel = abs(weber_quadrature(t, r, s, mu) - exact) / exact
                    count += 1
                    if rel > worst:
                        worst, where = rel, (mu, t, r, s)
    return SuiteResult("weber", worst < threshold, worst, threshold, count,
                       detail={"worst_point": where})


def euclidean_grid(t_values, r_values, s_values, dh_values):
    return [(t, r, s, d) for t in t_values for r in r_values for s in s_values for d in dh_values]


@_timed
def euclidean_suite(n: int = 3, grid=None, threshold: float = 1e-6, tol: float = 1e-10) -> SuiteResult:
    """Sphere section with ``a = 0`` against the Gaussian kernel of ``R^n``."""
    section = SphereSection(n, 0.0)
    ev = HeatKernelEvaluator(section, tol=tol)
    if grid is None:
        grid = euclidean_grid((0.5, 1.0, 2.0), (0.5, 1.0, 1.5), (0.5, 1.0, 1.5),
                              (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi))
    worst, where = 0.0, None
    for t, r, s, dh in grid:
        y, y2 = section.points_at_distance(dh)
        val = ev.evaluate(t, ConePoint(r, y), ConePoint(s, y2))
        d = cone_distance_dh(r, s, dh)
        exact = (4.0 * math.pi * t) ** (-0.5 * n) * math.exp(-d * d / (4.0 * t))
        rel = abs(val - exact) / exact
        if rel > worst:
            worst, where = rel, (t, r, s, dh)
    return SuiteResult(f"euclidean-n{n}", worst < threshold, worst, threshold, len(grid),
                       detail={"worst_point": where})


def default_sections():
    return [CircleSection(2 * math.pi, 1.0), SphereSection(3, 0.0), SphereSection(3, -0.125)]


@_timed
def scaling_suite(sections=None, lambdas=(0.3, 2.5, 10.0), threshold=1e-10, tol=1e-12) -> SuiteResult:
    """``K(l^2 t, l r, l s) = l^-n K(t, r, s)``."""
    sections = sections or default_sections()
    base = [(1.0, 1.0, 1.0, 0.0), (0.5, 0.7, 1.3, 0.9), (2.0, 1.5, 0.4, 2.5), (0.8, 0.3, 0.3, 1.7)]
    worst, where, count = 0.0, None, 0
    for section in sections:
        ev = HeatKernelEvaluator(section, tol=tol)
        for t, r, s, dh in base:
            dh = min(dh, section.diameter)
            p, y2 = _point(section, r, dh)
            q = ConePoint(s, y2)
            ref = ev.evaluate(t, p, q)
            for lam in lambdas:
                val = ev.evaluate(lam * lam * t, p.scaled(lam), q.scaled(lam))
                rel = abs(val * lam ** section.n - ref) / abs(ref)
                count += 1
                if rel > worst:
                    worst, where = rel, (repr(section), t, r, s, dh, lam)
    return SuiteResult("scaling", worst < threshold, worst, threshold, count,
                       detail={"worst_point": where})


def random_pairs(section: CrossSection, count: int, rng: np.random.Generator, z_max: float = 8.0):
    """Random ``(t, p, q)`` with ``rs/2t <= z_max`` and uniformly spread section distance.

    The cap on ``rs/2t`` keeps the series well conditioned at every angle (its
    terms cancel by up to ``exp(2 rs/2t)`` when the points are far apart on Y).
    """
    out = []
    while len(out) < count:
        t = float(np.exp(rng.uniform(math.log(0.05), math.log(5.0))))
        r = float(rng.uniform(0.05, 3.0))
        s = float(rng.uniform(0.05, 3.0))
        if r * s / (2 * t) > z_max:
            continue
        dh = float(rng.uniform(0.0, section.diameter))
        y, y2 = section.points_at_distance(dh)
        if isinstance(section, SphereSection):
            y, y2 = _random_rotation(section.n, rng) @ y, None
            # second point at the sampled distance along a random tangent direction
            tangent = rng.normal(size=section.n)
            tangent -= tangent.dot(y) * y
            tangent /= np.linalg.norm(tangent)
            y2 = math.cos(dh) * y + math.sin(dh) * tangent
            y2 /= np.linalg.norm(y2)
        elif isinstance(section, CircleSection):
            shift = float(rng.uniform(0.0, section.L))
            y, y2 = (y + shift) % section.L, (y2 + shift) % section.L
        out.append((t, ConePoint(r, y), ConePoint(s, y2)))
    return out


def _random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    q, rr = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(rr))


@_timed
def symmetry_suite(sections=None, samples: int = 1000, seed: int = 20240501,
                   threshold: float = 1e-12) -> SuiteResult:
    """``K(t, p, q) = K(t, q, p)`` and, for ``a >= 0``, ``K > 0`` on random points."""
    sections = sections or default_sections()
    rng = np.random.default_rng(seed)
    worst, where, violations, negatives_reported, count = 0.0, None, 0, 0, 0
    for i, section in enumerate(sections):
        ev = HeatKernelEvaluator(section)
        assert_positive = getattr(section, "a", 0.0) >= 0.0
        share = samples // len(sections) + (i < samples % len(sections))
        for t, p, q in random_pairs(section, share, rng):
            a = ev.evaluate(t, p, q)
            b = ev.evaluate(t, q, p)
            rel = abs(a - b) / max(abs(a), abs(b))
            count += 1
            if rel > worst:
                worst, where = rel, (repr(section), t, p.r, q.r)
            if rel > threshold:
                violations += 1
            if a <= 0.0:
                if assert_positive:
                    violations += 1
                else:
                    negatives_reported += 1
    return SuiteResult("symmetry", violations == 0, worst, threshold, count,
                       detail={"violations": violations, "worst_point": where,
                               "nonpositive_unasserted": negatives_reported})


@_timed
def truncation_suite(sections=None, samples: int = 300, extra: int = 50, seed: int = 7) -> SuiteResult:
    """Adding ``extra`` groups past the certified count moves the value by less than the tail bound."""
    sections = sections or default_sections()
    rng = np.random.default_rng(seed)
    worst, violations, count = 0.0, 0, 0
    for section in sections:
        ev = HeatKernelEvaluator(section)
        for t, p, q in random_pairs(section, samples // len(sections), rng, z_max=50.0):
            res = ev.evaluate_full(t, p, q)
            more = ev.evaluate_full(t, p, q, fixed_terms=res.terms + extra)
            change = abs(more.value - res.value)
            ratio = change / res.tail_bound if res.tail_bound > 0 else (0.0 if change == 0 else math.inf)
            worst = max(worst, ratio)
            count += 1
            if change > res.tail_bound:
                violations += 1
    return SuiteResult("truncation", violations == 0, worst, 1.0, count,
                       detail={"violations": violations, "note": "worst = change / tail bound"})


def semigroup_pairs(section: CircleSection, count: int = 20, seed: int = 11):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        r, s = rng.uniform(0.3, 2.0, size=2)
        y, y2 = rng.uniform(0.0, section.L, size=2)
        pairs.append((ConePoint(float(r), float(y)), ConePoint(float(s), float(y2))))
    return pairs


def semigroup_residual(ev: HeatKernelEvaluator, p: ConePoint, q: ConePoint, t1: float, t2: float,
                       radial_panels: int = 24, section_size: int = 96) -> tuple[float, float]:
    """``(composition, direct)`` for ``int K(t1, p, w) K(t2, w, q) dw`` versus ``K(t1 + t2, p, q)``."""
    R = default_radial_cut(p.r, q.r, max(t1, t2))

    def integrand(s, ys):
        return (ev.evaluate_batch(t1, p.r, p.y, s, ys) * ev.evaluate_batch(t2, q.r, q.y, s, ys))

    comp = integrate_over_cone(integrand, ev.section, R, radial_panels=radial_panels,
                               section_size=section_size, vectorized=True)
    return comp, ev.evaluate(t1 + t2, p, q)


@_timed
def semigroup_suite(section=None, pairs: int = 20, t1: float = 0.5, t2: float = 0.5,
                    threshold: float = 1e-4) -> SuiteResult:
    """Composition of two half-time kernels against the full-time kernel."""
    section = section or CircleSection(2 * math.pi, 1.0)
    ev = HeatKernelEvaluator(section, tol=1e-12)
    worst, where = 0.0, None
    for p, q in semigroup_pairs(section, pairs):
        comp, direct = semigroup_residual(ev, p, q, t1, t2)
        rel = abs(comp - direct) / direct
        if rel > worst:
            worst, where = rel, (p.r, p.y, q.r, q.y)
    return SuiteResult("semigroup", worst < threshold, worst, threshold, pairs,
                       detail={"worst_point": where})


@_timed
def fd_suite(L: float = 3 * math.pi, a: float = 1.0, threshold: float = 1e-2, **kwargs) -> SuiteResult:
    """Finite-volume evolution from the series kernel at ``t0`` against the series at ``t1``."""
    cmp, _ = fd_versus_series(CircleSection(L, a), **kwargs)
    ok = cmp.max_rel_error < threshold and cmp.mass_nonincreasing
    return SuiteResult("fd", ok, cmp.max_rel_error, threshold, cmp.points_compared,
                       detail={"mass_t0": cmp.mass_t0, "mass_t1": cmp.mass_t1, "worst_point": cmp.worst})


@_timed
def cross_section_suite(N: int = 256, L: float = 2 * math.pi, a: float = 1.0, modes: int = 10,
                        eig_threshold: float = 1e-4, kernel_threshold: float = 1e-3) -> SuiteResult:
    """Matrix discretization of the circle against the analytic circle section.

    Compares the first ``modes`` eigenvalues, the eigenspace kernels at a few
    node pairs, and heat kernel values at matched cone points.
    """
    circle = CircleSection(L, a)
    mat = circle_matrix_section(N, L, a)
    lam_c = np.concatenate([[circle.group_lambdas(1)[0]],
                            np.repeat(circle.group_lambdas(modes)[1:], 2)])[:modes]
    lam_m = mat.group_lambdas(modes)
    eig_err = float(np.max(np.abs(lam_m - lam_c) / lam_c))
    clusters = mat.eigenvalue_clusters(2 * modes)
    nodes = [0, N // 7, N // 3, N // 2]
    kern_err = 0.0
    for j, cluster in enumerate(clusters[:modes]):
        for i in nodes:
            for k in nodes:
                exact = circle.pair_kernel(j, mat.coords[i, 0], mat.coords[k, 0])
                approx = mat.eigenspace_kernel(cluster, i, k)
                kern_err = max(kern_err, abs(approx - exact) / max(abs(exact), 2.0 / L))
    ev_c = HeatKernelEvaluator(circle, tol=1e-12)
    ev_m = HeatKernelEvaluator(mat, tol=1e-12)
    heat_err, heat_count = 0.0, 0
    for t, r, s in ((0.25, 0.5, 1.0), (1.0, 1.0, 1.0), (0.5, 1.5, 0.7), (2.0, 2.0, 3.0)):
        for i in nodes:
            for k in nodes:
                exact = ev_c.evaluate(t, ConePoint(r, float(mat.coords[i, 0])), ConePoint(s, float(mat.coords[k, 0])))
                approx = ev_m.evaluate(t, ConePoint(r, i), ConePoint(s, k))
                heat_err = max(heat_err, abs(approx - exact) / abs(exact))
                heat_count += 1
    ok = eig_err < eig_threshold and kern_err < kernel_threshold and heat_err < kernel_threshold
    worst = max(eig_err / eig_threshold, kern_err / kernel_threshold, heat_err / kernel_threshold)
    return SuiteResult("cross-section", ok, worst, 1.0, modes + len(clusters[:modes]) * len(nodes) ** 2 + heat_count,
                       detail={"eigenvalue_rel_error": eig_err, "eigenspace_kernel_rel_error": kern_err,
                               "heat_kernel_rel_error": heat_err,
                               "note": "worst = largest error as a fraction of its threshold"})


SUITES = {
    "weber": weber_suite,
    "euclidean": euclidean_suite,
    "scaling": scaling_suite,
    "symmetry": symmetry_suite,
    "truncation": truncation_suite,
    "semigroup": semigroup_suite,
    "fd": fd_suite,
    "cross-section": cross_section_suite,
}
