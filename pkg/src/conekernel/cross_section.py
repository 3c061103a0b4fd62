"""Cross-sections Y of the cone and the spectral data of -Delta_h + V_0 + (n-2)^2/4.

Analytic sections (circle, sphere) expose their eigenspaces in aggregated
form: group ``j`` is one eigenvalue together with the summed projection kernel
of its eigenspace, which depends only on the section distance. A
:class:`MatrixSection` is a discretized operator whose groups are its
individual eigenvectors.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import (BadWeights, IndexOutOfRange, InvalidPoint, NonConvergence,
                     NonPositiveSpectrum, NotSymmetric, SpectralFileError)
from .quadrature import gauss_legendre_rule


@dataclass(frozen=True)
class SpectralMode:
    """One eigenpair index with eigenvalue ``lam`` and Bessel order ``mu = sqrt(lam)``."""

    k: int
    lam: float
    mu: float

    @classmethod
    def from_lambda(cls, k: int, lam: float) -> "SpectralMode":
        if not lam > 0.0:
            raise NonPositiveSpectrum(f"eigenvalue {lam} of mode {k} is not positive")
        return cls(k, float(lam), math.sqrt(lam))


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere ``S^dim`` in ``R^(dim+1)``."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / math.gamma((dim + 1) / 2.0)


class CrossSection(ABC):
    """Interface shared by all cross-sections.

    Attributes
    ----------
    n : int
        Dimension of the cone; the section has dimension ``n - 1``.
    """

    n: int

    @property
    def dim_section(self) -> int:
        return self.n - 1

    @property
    def weyl_exponent(self) -> float:
        """Exponent ``2/(n-1)`` in the growth law of the eigenvalues."""
        return 2.0 / (self.n - 1)

    # points and geometry -------------------------------------------------
    @abstractmethod
    def validate_point(self, y):
        """Return ``y`` in canonical form or raise :class:`InvalidPoint`."""

    @abstractmethod
    def distances(self, y, ys) -> np.ndarray:
        """Section distances from ``y`` to each point of the array ``ys``."""

    def distance(self, y, y2) -> float:
        y = self.validate_point(y)
        y2 = self.validate_point(y2)
        return float(self.distances(y, self.as_point_array([y2]))[0])

    @abstractmethod
    def as_point_array(self, points) -> np.ndarray:
        """Stack points into the array layout used by ``distances`` and ``group_kernels``."""

    @property
    @abstractmethod
    def diameter(self) -> float:
        """Largest section distance."""

    @abstractmethod
    def points_at_distance(self, delta: float):
        """A pair ``(y, y2)`` with ``d_h(y, y2)`` equal (or closest) to ``delta``."""

    @abstractmethod
    def quadrature(self, size: int):
        """Nodes (as a point array) and weights integrating over Y."""

    @property
    def volume(self) -> float:
        return float(np.sum(self.quadrature(8)[1]))

    # spectrum ---------------------------------------------------------------
    @property
    @abstractmethod
    def num_groups(self) -> int | None:
        """Number of eigenvalue groups, or ``None`` when infinite."""

    @abstractmethod
    def group_lambdas(self, count: int) -> np.ndarray:
        """Eigenvalues of the first ``count`` groups."""

    def group_mus(self, count: int) -> np.ndarray:
        return np.sqrt(self.group_lambdas(count))

    @abstractmethod
    def group_multiplicities(self, count: int) -> np.ndarray:
        """Number of eigenfunctions in each of the first ``count`` groups."""

    @abstractmethod
    def group_sup_bounds(self, count: int) -> np.ndarray:
        """Bounds ``B_j >= sup |H_j(y, y')|`` for the first ``count`` groups."""

    @abstractmethod
    def group_kernels(self, count: int, y, ys) -> np.ndarray:
        """Array ``(count, len(ys))`` of group kernels ``H_j(y, ys[i])``."""

    def _check_groups(self, count: int) -> int:
        count = int(count)
        if count < 0:
            raise IndexOutOfRange(f"negative group count {count}")
        if self.num_groups is not None and count > self.num_groups:
            raise IndexOutOfRange(f"section has only {self.num_groups} modes, asked for {count}")
        return count

    @property
    def lambda0(self) -> float:
        return float(self.group_lambdas(1)[0])

    @property
    def mu0(self) -> float:
        return math.sqrt(self.lambda0)

    def group_of_mode(self, k: int) -> int:
        """Group index containing expanded mode ``k``."""
        if k < 0:
            raise IndexOutOfRange(f"mode index must be >= 0, got {k}")
        count = 16
        while True:
            if self.num_groups is not None:
                count = min(count, self.num_groups)
            cum = np.cumsum(self.group_multiplicities(count))
            j = int(np.searchsorted(cum, k, side="right"))
            if j < count:
                return j
            if self.num_groups is not None and count == self.num_groups:
                raise IndexOutOfRange(f"mode {k} beyond the {int(cum[-1])} available")
            count *= 2

    def mode(self, k: int) -> SpectralMode:
        """The ``k``-th eigenpair, eigenvalues repeated by multiplicity."""
        j = self.group_of_mode(int(k))
        return SpectralMode.from_lambda(int(k), float(self.group_lambdas(j + 1)[j]))

    def pair_kernel(self, j: int, y, y2) -> float:
        """Group kernel ``H_j(y, y2)`` (an eigenspace sum for analytic sections)."""
        self._check_groups(j + 1)
        y = self.validate_point(y)
        y2 = self.validate_point(y2)
        return float(self.group_kernels(j + 1, y, self.as_point_array([y2]))[j, 0])

    def mode_sup_bound(self, j: int) -> float:
        self._check_groups(j + 1)
        return float(self.group_sup_bounds(j + 1)[j])


class _DistanceSection(CrossSection):
    """Sections whose group kernels depend on the section distance alone."""

    @abstractmethod
    def group_kernels_dh(self, count: int, dh) -> np.ndarray:
        """Array ``(count, len(dh))`` of group kernels at the given distances."""

    def group_kernels(self, count: int, y, ys) -> np.ndarray:
        return self.group_kernels_dh(count, self.distances(y, ys))


class CircleSection(_DistanceSection):
    """Circle of circumference ``L`` with constant potential ``a`` (cone dimension 2).

    Eigenvalues are ``a + (2 pi m / L)^2``; each ``m >= 1`` has multiplicity 2.
    """

    def __init__(self, L: float = 2.0 * math.pi, a: float = 1.0):
        if not (L > 0.0 and math.isfinite(L)):
            raise ValueError(f"circumference must be positive, got {L}")
        if not a > 0.0:
            raise NonPositiveSpectrum(f"a circle section needs a > 0 so that lambda_0 = a > 0, got {a}")
        self.n = 2
        self.L = float(L)
        self.a = float(a)

    def __repr__(self) -> str:
        return f"CircleSection(L={self.L!r}, a={self.a!r})"

    def validate_point(self, y):
        y = float(y)
        if not math.isfinite(y):
            raise InvalidPoint(f"angle must be finite, got {y}")
        return y % self.L

    def as_point_array(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float).reshape(-1) % self.L

    def distances(self, y, ys) -> np.ndarray:
        diff = np.abs(np.asarray(ys, dtype=float) - float(y)) % self.L
        return np.minimum(diff, self.L - diff)

    @property
    def diameter(self) -> float:
        return 0.5 * self.L

    def points_at_distance(self, delta: float):
        if not 0.0 <= delta <= self.diameter:
            raise InvalidPoint(f"distance {delta} outside [0, {self.diameter}]")
        return 0.0, float(delta)

    def quadrature(self, size: int):
        nodes = np.arange(size) * (self.L / size)
        return nodes, np.full(size, self.L / size)

    @property
    def num_groups(self):
        return None

    def group_lambdas(self, count: int) -> np.ndarray:
        m = np.arange(self._check_groups(count))
        return self.a + (2.0 * math.pi * m / self.L) ** 2

    def group_multiplicities(self, count: int) -> np.ndarray:
        mult = np.full(self._check_groups(count), 2, dtype=int)
        mult[:1] = 1
        return mult

    def group_sup_bounds(self, count: int) -> np.ndarray:
        bounds = np.full(self._check_groups(count), 2.0 / self.L)
        bounds[:1] = 1.0 / self.L
        return bounds

    def group_kernels_dh(self, count: int, dh) -> np.ndarray:
        m = np.arange(self._check_groups(count))
        dh = np.atleast_1d(np.asarray(dh, dtype=float))
        out = (2.0 / self.L) * np.cos(np.outer(2.0 * math.pi * m / self.L, dh))
        out[:1] = 1.0 / self.L
        return out


def gegenbauer_normalized(count: int, alpha: float, x) -> np.ndarray:
    """Gegenbauer polynomials ``G_l`` of parameter ``alpha``, normalized to ``G_l(1) = 1``.

    Returns an array ``(count, len(x))`` with rows ``l = 0 .. count-1``, from the
    three-term recurrence ``(l + 2 alpha) G_{l+1} = 2 (l + alpha) x G_l - l G_{l-1}``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((count, x.size))
    if count == 0:
        return out
    out[0] = 1.0
    if count > 1:
        out[1] = x
    for l in range(1, count - 1):
        out[l + 1] = (2.0 * (l + alpha) * x * out[l] - l * out[l - 1]) / (l + 2.0 * alpha)
    return out


class SphereSection(_DistanceSection):
    """Round unit sphere ``S^(n-1)`` with constant potential ``a``.

    Degree ``l`` carries eigenvalue ``l (l + n - 2) + a + (n-2)^2/4`` and
    multiplicity ``(2l + n - 2)(l + n - 3)! / (l! (n-2)!)``. Points are unit
    vectors in ``R^n``.
    """

    def __init__(self, n: int = 3, a: float = 0.0):
        n = int(n)
        if n < 3:
            raise ValueError(f"sphere sections need cone dimension n >= 3, got {n}")
        shift = (n - 2) ** 2 / 4.0
        if not a > -shift:
            raise NonPositiveSpectrum(f"need a > -(n-2)^2/4 = {-shift}, got {a}")
        self.n = n
        self.a = float(a)
        self.alpha = (n - 2) / 2.0
        self.area = sphere_area(n - 1)

    def __repr__(self) -> str:
        return f"SphereSection(n={self.n}, a={self.a!r})"

    def validate_point(self, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.n:
            raise InvalidPoint(f"sphere point needs {self.n} coordinates, got {y.size}")
        if abs(np.linalg.norm(y) - 1.0) > 1e-12:
            raise InvalidPoint(f"sphere point must be a unit vector, |y| = {np.linalg.norm(y)}")
        return y

    def as_point_array(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float).reshape(-1, self.n)

    def distances(self, y, ys) -> np.ndarray:
        ys = self.as_point_array(ys)
        y = np.asarray(y, dtype=float)
        # 2 atan2(|y - y'|, |y + y'|) is accurate for both tiny and near-antipodal angles
        return 2.0 * np.arctan2(np.linalg.norm(ys - y, axis=1), np.linalg.norm(ys + y, axis=1))

    @property
    def diameter(self) -> float:
        return math.pi

    def pole(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[0] = 1.0
        return e

    def point_at_polar_angle(self, theta: float) -> np.ndarray:
        e = np.zeros(self.n)
        e[0] = math.cos(theta)
        e[1] = math.sin(theta)
        return e

    def points_at_distance(self, delta: float):
        if not 0.0 <= delta <= math.pi:
            raise InvalidPoint(f"distance {delta} outside [0, pi]")
        return self.pole(), self.point_at_polar_angle(delta)

    def quadrature(self, size: int):
        return _sphere_grid(self.n - 1, size)

    @property
    def num_groups(self):
        return None

    def group_lambdas(self, count: int) -> np.ndarray:
        l = np.arange(self._check_groups(count), dtype=float)
        return (l + self.alpha) ** 2 + self.a

    def group_multiplicities(self, count: int) -> np.ndarray:
        n = self.n
        return np.array([(2 * l + n - 2) * math.comb(l + n - 3, l) // (n - 2)
                         for l in range(self._check_groups(count))], dtype=float)

    def group_sup_bounds(self, count: int) -> np.ndarray:
        return self.group_multiplicities(count) / self.area

    def group_kernels_dh(self, count: int, dh) -> np.ndarray:
        count = self._check_groups(count)
        dh = np.atleast_1d(np.asarray(dh, dtype=float))
        g = gegenbauer_normalized(count, self.alpha, np.cos(dh))
        return (self.group_multiplicities(count) / self.area)[:, None] * g


def _sphere_grid(dim: int, size: int):
    """Product quadrature on ``S^dim``: trapezoid in azimuth, Gauss-Legendre in polar angles."""
    if dim == 1:
        count = 2 * size
        phi = np.arange(count) * (2.0 * math.pi / count)
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(count, 2.0 * math.pi / count)
    x, w = gauss_legendre_rule(size)
    if dim == 2:
        cos_t, w_t = x, w
        sin_t = np.sqrt(1.0 - cos_t ** 2)
    else:
        theta = 0.5 * math.pi * (x + 1.0)
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        w_t = 0.5 * math.pi * w * sin_t ** (dim - 1)
    sub_pts, sub_w = _sphere_grid(dim - 1, size)
    pts = np.concatenate(
        [np.column_stack([np.full(len(sub_pts), c), s * sub_pts]) for c, s in zip(cos_t, sin_t)])
    weights = np.concatenate([wt * sub_w for wt in w_t])
    return pts, weights


def _parse_metric(metric: str):
    kind, _, arg = metric.partition(":")
    if kind == "circle":
        L = float(arg) if arg else 2.0 * math.pi
        if not L > 0.0:
            raise ValueError(f"bad circle metric {metric!r}")
        return "circle", L
    if kind in ("sphere", "euclidean"):
        if arg:
            raise ValueError(f"metric {kind!r} takes no argument")
        return kind, None
    raise ValueError(f"unknown metric {metric!r}; use circle:L, sphere or euclidean")


class MatrixSection(CrossSection):
    """Discretized section: nodes with weights and a symmetric operator matrix.

    Solves the weighted eigenproblem ``A v = lam W v`` with ``W = diag(w)``.
    Groups are individual eigenvectors, normalized so that
    ``sum_i w_i phi_j(i) phi_k(i) = delta_jk``.

    Use :func:`build_matrix_section` to construct one.
    """

    def __init__(self, n, coords, weights, matrix, lambdas, phis, metric, jacobi_sweeps):
        self.n = int(n)
        self.coords = coords
        self.weights = weights
        self.matrix = matrix
        self.lambdas = lambdas
        self.phis = phis
        self.metric = metric
        self.metric_kind, self.metric_arg = _parse_metric(metric)
        self.jacobi_sweeps = jacobi_sweeps
        for arr in (coords, weights, matrix, lambdas, phis):
            arr.flags.writeable = False

    def __repr__(self) -> str:
        return f"MatrixSection(n={self.n}, nodes={self.node_count}, metric={self.metric!r})"

    @property
    def node_count(self) -> int:
        return int(self.weights.size)

    def validate_point(self, y):
        if isinstance(y, (bool, np.bool_)) or int(y) != y:
            raise InvalidPoint(f"matrix-section points are node indices, got {y!r}")
        y = int(y)
        if not 0 <= y < self.node_count:
            raise InvalidPoint(f"node index {y} outside [0, {self.node_count})")
        return y

    def as_point_array(self, points) -> np.ndarray:
        return np.asarray(points, dtype=int).reshape(-1)

    def distances(self, y, ys) -> np.ndarray:
        a = self.coords[int(y)]
        b = self.coords[np.asarray(ys, dtype=int)]
        if self.metric_kind == "circle":
            L = self.metric_arg
            diff = np.abs(b[:, 0] - a[0]) % L
            return np.minimum(diff, L - diff)
        if self.metric_kind == "sphere":
            return 2.0 * np.arctan2(np.linalg.norm(b - a, axis=1), np.linalg.norm(b + a, axis=1))
        return np.linalg.norm(b - a, axis=1)

    @property
    def diameter(self) -> float:
        return float(max(np.max(self.distances(i, np.arange(self.node_count)))
                         for i in range(self.node_count)))

    def points_at_distance(self, delta: float):
        """Node 0 and the node whose distance from it is closest to ``delta``."""
        d = self.distances(0, np.arange(self.node_count))
        return 0, int(np.argmin(np.abs(d - delta)))

    def quadrature(self, size: int = 0):
        """The nodes and their weights; ``size`` is ignored."""
        return np.arange(self.node_count), self.weights.copy()

    @property
    def num_groups(self):
        return self.node_count

    def group_lambdas(self, count: int) -> np.ndarray:
        return self.lambdas[: self._check_groups(count)].copy()

    def group_multiplicities(self, count: int) -> np.ndarray:
        return np.ones(self._check_groups(count))

    def group_sup_bounds(self, count: int) -> np.ndarray:
        return np.max(self.phis[:, : self._check_groups(count)] ** 2, axis=0)

    def group_kernels(self, count: int, y, ys) -> np.ndarray:
        count = self._check_groups(count)
        ys = self.as_point_array(ys)
        return self.phis[int(y), :count][:, None] * self.phis[ys, :count].T

    def eigenspace_kernel(self, modes, y, y2) -> float:
        """Sum of per-mode kernels over ``modes``, e.g. a degenerate eigenspace."""
        modes = np.asarray(modes, dtype=int)
        return float(np.sum(self.phis[int(y), modes] * self.phis[int(y2), modes]))

    def eigenvalue_clusters(self, count: int, rtol: float = 1e-6):
        """Group the first ``count`` modes into clusters of numerically equal eigenvalues."""
        lam = self.group_lambdas(count)
        clusters, current = [], [0]
        for k in range(1, count):
            if abs(lam[k] - lam[current[0]]) <= rtol * abs(lam[current[0]]):
                current.append(k)
            else:
                clusters.append(current)
                current = [k]
        clusters.append(current)
        return clusters


def build_matrix_section(nodes, weights, matrix, n: int = 2, metric: str = "euclidean",
                         symmetry_tol: float = 1e-12, jacobi_tol: float = 1e-14) -> MatrixSection:
    """Validate a discretized operator and diagonalize it with cyclic Jacobi.

    Parameters
    ----------
    nodes : array_like, shape (N,) or (N, d)
        Node coordinates, interpreted through ``metric``.
    weights : array_like, shape (N,)
        Positive quadrature weights.
    matrix : array_like, shape (N, N)
        Symmetric matrix of the quadratic form of the operator in the weighted
        inner product, i.e. ``W T`` for an operator matrix ``T``.
    n : int
        Cone dimension.
    metric : str
        ``"circle:L"``, ``"sphere"`` or ``"euclidean"``.

    Raises
    ------
    BadWeights, NotSymmetric, NonPositiveSpectrum
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    coords = np.asarray(nodes, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    A = np.asarray(matrix, dtype=float)
    N = weights.size
    if N < 2:
        raise BadWeights(f"need at least 2 nodes, got {N}")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
        raise BadWeights("weights must be finite and strictly positive")
    if coords.shape[0] != N:
        raise BadWeights(f"{coords.shape[0]} nodes but {N} weights")
    if A.shape != (N, N):
        raise BadWeights(f"matrix shape {A.shape} does not match {N} nodes")
    if not np.all(np.isfinite(A)):
        raise NotSymmetric("matrix has non-finite entries")
    scale = max(float(np.max(np.abs(A))), 1e-300)
    asym = float(np.max(np.abs(A - A.T)))
    if asym > symmetry_tol * scale:
        raise NotSymmetric(f"max |A - A^T| = {asym:.3e} exceeds {symmetry_tol:g} * max|A|")
    _parse_metric(metric)
    if int(n) < 2:
        raise ValueError(f"cone dimension must be >= 2, got {n}")
    inv_sqrt_w = 1.0 / np.sqrt(weights)
    B = inv_sqrt_w[:, None] * (0.5 * (A + A.T)) * inv_sqrt_w[None, :]
    evals, evecs, sweeps = _backend.kernels.jacobi_eigh(B, jacobi_tol)
    if sweeps < 0:
        raise NonConvergence("Jacobi eigensolver did not converge")
    order = np.argsort(evals, kind="stable")
    evals = np.asarray(evals)[order]
    phis = inv_sqrt_w[:, None] * np.asarray(evecs)[:, order]
    phis /= np.sqrt(np.sum(weights[:, None] * phis ** 2, axis=0))[None, :]
    gram = phis.T @ (weights[:, None] * phis)
    if np.max(np.abs(gram - np.eye(N))) > 1e-10:
        raise NonConvergence("eigenvectors are not w-orthonormal to 1e-10")
    spread = max(float(np.max(np.abs(evals))), 1e-300)
    if evals[0] <= 1e-12 * spread:
        raise NonPositiveSpectrum(f"lowest eigenvalue {evals[0]:.3e} is not strictly positive")
    return MatrixSection(n, coords, weights.copy(), A.copy(), evals, phis, metric, sweeps)


def periodic_second_derivative(N: int, L: float) -> np.ndarray:
    """Fourier spectral matrix of ``d^2/dx^2`` on ``N`` equispaced points of a period ``L``.

    ``N`` must be even.
    """
    if N % 2 or N < 2:
        raise ValueError(f"spectral differentiation needs an even node count, got {N}")
    h = 2.0 * math.pi / N
    k = np.arange(N)
    diff = k[:, None] - k[None, :]
    with np.errstate(divide="ignore"):
        D2 = -((-1.0) ** diff) / (2.0 * np.sin(0.5 * h * diff) ** 2)
    np.fill_diagonal(D2, -math.pi ** 2 / (3.0 * h ** 2) - 1.0 / 6.0)
    return D2 * (2.0 * math.pi / L) ** 2


def circle_matrix_section(N: int, L: float = 2.0 * math.pi, a: float = 1.0) -> MatrixSection:
    """Discretize ``-d^2/dtheta^2 + a`` on a circle of circumference ``L`` with ``N`` nodes."""
    w = L / N
    T = -periodic_second_derivative(N, L) + a * np.eye(N)
    A = w * 0.5 * (T + T.T)
    nodes = np.arange(N) * w
    return build_matrix_section(nodes, np.full(N, w), A, n=2, metric=f"circle:{L!r}")


# spectral-data files -------------------------------------------------------------

def write_spectral_file(path, section_or_nodes, weights=None, matrix=None, n=None, metric=None):
    """Write a spectral-data file from a :class:`MatrixSection` or raw arrays."""
    if isinstance(section_or_nodes, MatrixSection):
        sec = section_or_nodes
        coords, weights, matrix, n, metric = sec.coords, sec.weights, sec.matrix, sec.n, sec.metric
    else:
        coords = np.asarray(section_or_nodes, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        n = 2 if n is None else n
        metric = metric or "euclidean"
    weights = np.asarray(weights, dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    N = weights.size
    lines = [f"n {int(n)} nodes {N} metric {metric}"]
    for i in range(N):
        lines.append(" ".join(["node", str(i), repr(float(weights[i]))]
                              + [repr(float(c)) for c in coords[i]]))
    for i in range(N):
        lines.append(" ".join(repr(float(v)) for v in matrix[i, : i + 1]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectral_file(path, **build_kwargs) -> MatrixSection:
    """Parse a spectral-data file and build its :class:`MatrixSection`.

    Format: a header ``n <cone-dim> nodes <count> [metric <spec>]``, then
    ``node <i> <weight> <coords...>`` lines, then the lower triangle of the
    matrix as whitespace-separated numbers. Blank lines and ``#`` comments are
    ignored.

    Raises
    ------
    SpectralFileError
        With the offending line number for malformed content.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            rows.append((lineno, text.split()))
    if not rows:
        raise SpectralFileError("empty spectral file", 1)
    lineno, head = rows[0]
    if len(head) not in (4, 6) or head[0] != "n" or head[2] != "nodes" or (
            len(head) == 6 and head[4] != "metric"):
        raise SpectralFileError("header must read 'n <cone-dim> nodes <count> [metric <spec>]'", lineno)
    try:
        n = int(head[1])
        count = int(head[3])
    except ValueError:
        raise SpectralFileError("header counts must be integers", lineno) from None
    if n < 2 or count < 1:
        raise SpectralFileError(f"invalid header values n={n}, nodes={count}", lineno)
    metric = head[5] if len(head) == 6 else "euclidean"
    try:
        _parse_metric(metric)
    except ValueError as exc:
        raise SpectralFileError(str(exc), lineno) from None
    node_rows = rows[1: 1 + count]
    coords, weights, dim = [], [], None
    for i, (lineno, toks) in enumerate(node_rows):
        if toks[0] != "node":
            raise SpectralFileError(f"expected node line {i} of {count}", lineno)
        if len(toks) < 4:
            raise SpectralFileError("node line needs an index, a weight and coordinates", lineno)
        try:
            idx = int(toks[1])
            vals = [float(v) for v in toks[2:]]
        except ValueError:
            raise SpectralFileError("non-numeric node entry", lineno) from None
        if idx != i:
            raise SpectralFileError(f"node index {idx}, expected {i}", lineno)
        if dim is None:
            dim = len(vals) - 1
        elif len(vals) - 1 != dim:
            raise SpectralFileError(f"node has {len(vals) - 1} coordinates, expected {dim}", lineno)
        weights.append(vals[0])
        coords.append(vals[1:])
    if len(node_rows) < count:
        last = rows[-1][0]
        raise SpectralFileError(f"header declares {count} nodes, found {len(node_rows)}", last)
    entries = []
    for lineno, toks in rows[1 + count:]:
        if toks[0] == "node":
            raise SpectralFileError(f"more node lines than the declared {count}", lineno)
        for tok in toks:
            try:
                entries.append((lineno, float(tok)))
            except ValueError:
                raise SpectralFileError(f"non-numeric matrix entry {tok!r}", lineno) from None
    expected = count * (count + 1) // 2
    if len(entries) != expected:
        where = entries[min(len(entries), expected) - 1][0] if entries else rows[-1][0]
        if len(entries) > expected:
            where = entries[expected][0]
        raise SpectralFileError(
            f"expected {expected} lower-triangular matrix entries, found {len(entries)}", where)
    A = np.zeros((count, count))
    rr, cc = np.tril_indices(count)
    A[rr, cc] = [v for _, v in entries]
    A[cc, rr] = A[rr, cc]
    return build_matrix_section(np.array(coords), np.array(weights), A, n=n, metric=metric,
                                **build_kwargs)
