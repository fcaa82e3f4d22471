"""Parametrized C^1 submanifolds and their pointwise algebraic structure.

A submanifold is given by a parsed parametrization ``Psi: U -> G`` in graded
coordinates.  At a parameter point we lift the tangent n-vector to the
left-invariant frame, read off the pointwise degree from its degree-graded
projections, compute the homogeneous tangent space as a wedge-kernel, and
classify the point (horizontal / transversal / low degree / irregular).
The alpha profile is recovered independently by degree-ordered echelon
reduction of the frame-coefficient matrix and cross-checked against the
degree identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .algebra import GradedGroup, Subspace, classify_subspace
from .errors import (
    CaseNotCovered,
    DegenerateTangent,
    DomainViolation,
    InconsistentDegree,
    NonFinite,
    NonSimpleProjection,
)
from .exprparse import Node, parse_expression_list
from .exterior import Multivector, g_norm, lift_tangent, project_degree, wedge
from .policy import DEFAULT_POLICY, NumericPolicy

# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ParamMap:
    """Differentiable parametrization of an n-manifold in a graded group."""

    group: GradedGroup
    n: int
    exprs: tuple
    derivs: tuple  # derivs[j][i] = d expr_j / d y_i
    domain: np.ndarray  # (n, 2)
    src: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def contains(self, y, tol: float = 1e-12) -> bool:
        y = np.asarray(y, dtype=float)
        lo, hi = self.domain[:, 0], self.domain[:, 1]
        return bool(np.all(y >= lo - tol) and np.all(y <= hi + tol))

    def check_domain(self, y) -> None:
        if not self.contains(y):
            raise DomainViolation(f"parameter {np.asarray(y)} outside domain")

    def value(self, y) -> np.ndarray:
        """Evaluate Psi; broadcasts over leading axes of y."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.stack([np.broadcast_to(e.eval(y), y.shape[:-1]) for e in self.exprs], axis=-1)
        if not np.all(np.isfinite(out)):
            raise NonFinite("parametrization evaluates to a non-finite value")
        return out

    def jacobian(self, y) -> np.ndarray:
        """Analytic Jacobian (q, n) at a single parameter point."""
        return self.jacobian_batch(np.asarray(y, dtype=float)[None, :])[0]

    def jacobian_batch(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        q, n = len(self.exprs), self.n
        out = np.empty(ys.shape[:-1] + (q, n))
        for j in range(q):
            for i in range(n):
                out[..., j, i] = np.broadcast_to(self.derivs[j][i].eval(ys), ys.shape[:-1])
        if not np.all(np.isfinite(out)):
            raise NonFinite("Jacobian evaluates to a non-finite value")
        return out


def parse_parametrization(src: str, n: int, domain, group: GradedGroup) -> ParamMap:
    """Parse ``q`` semicolon-separated expressions in variables y1..yn."""
    variables = [f"y{i + 1}" for i in range(n)]
    exprs = parse_expression_list(src, variables)
    if len(exprs) != group.q:
        raise DomainViolation(
            f"expected {group.q} expressions for group of dimension {group.q}, got {len(exprs)}"
        )
    derivs = tuple(tuple(e.diff(i) for i in range(n)) for e in exprs)
    dom = np.asarray(domain, dtype=float).reshape(n, 2)
    if np.any(dom[:, 0] >= dom[:, 1]):
        raise DomainViolation("domain intervals must have positive length")
    return ParamMap(group=group, n=n, exprs=tuple(exprs), derivs=derivs, domain=dom, src=src)


class TranslatedChart:
    """Chart of the left-translated submanifold p . Sigma (same interface)."""

    def __init__(self, base: ParamMap, p):
        self.base = base
        self.p = np.asarray(p, dtype=float)
        self.group = base.group
        self.n = base.n
        self.domain = base.domain
        self._cache: dict = {}

    def contains(self, y, tol: float = 1e-12) -> bool:
        return self.base.contains(y, tol)

    def check_domain(self, y) -> None:
        self.base.check_domain(y)

    def value(self, y) -> np.ndarray:
        return self.group.product(self.p, self.base.value(y))

    def jacobian(self, y) -> np.ndarray:
        x = self.base.value(y)
        j = self.base.jacobian(y)
        cols = self.group.product_derivative_y(self.p, x, j.T)  # rows: dL_p(x) j_i
        return cols.T

    def jacobian_batch(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        return np.stack([self.jacobian(y) for y in ys.reshape(-1, self.n)]).reshape(
            ys.shape[:-1] + (self.group.q, self.n)
        )


class DilatedChart:
    """Chart of the dilated submanifold delta_r(Sigma)."""

    def __init__(self, base: ParamMap, r: float):
        self.base = base
        self.r = float(r)
        self.group = base.group
        self.n = base.n
        self.domain = base.domain
        self._cache: dict = {}
        self._weights = self.r ** base.group.degrees

    def contains(self, y, tol: float = 1e-12) -> bool:
        return self.base.contains(y, tol)

    def check_domain(self, y) -> None:
        self.base.check_domain(y)

    def value(self, y) -> np.ndarray:
        return self.base.value(y) * self._weights

    def jacobian(self, y) -> np.ndarray:
        return self.base.jacobian(y) * self._weights[:, None]

    def jacobian_batch(self, ys) -> np.ndarray:
        return self.base.jacobian_batch(ys) * self._weights[None, :, None]


def horizontal_tangency(chart, y, policy: NumericPolicy = DEFAULT_POLICY) -> bool:
    """Frame tangency test: the tangent space lies in the horizontal fiber iff
    every frame coefficient of the Jacobian columns above layer 1 vanishes."""
    group = chart.group
    coeffs = group.frame_coefficients(chart.value(y), chart.jacobian(y).T).T
    m = group.layers[0]
    scale = float(np.max(np.abs(coeffs), initial=0.0)) or 1.0
    return bool(np.max(np.abs(coeffs[m:, :]), initial=0.0) <= policy.rtol * scale)


def reparametrized(base: ParamMap, mat, shift=None, domain=None) -> "AffineChart":
    """Chart composed with the affine parameter change y = shift + mat @ u."""
    return AffineChart(base, np.asarray(mat, dtype=float), shift, domain)


class AffineChart:
    """Composition of a chart with an affine change of parameters."""

    def __init__(self, base: ParamMap, mat: np.ndarray, shift=None, domain=None):
        self.base = base
        self.mat = mat
        self.shift = np.zeros(base.n) if shift is None else np.asarray(shift, dtype=float)
        self.group = base.group
        self.n = base.n
        self._cache: dict = {}
        if domain is not None:
            self.domain = np.asarray(domain, dtype=float).reshape(self.n, 2)
        else:
            # inscribed axis-aligned box around the preimage of the base center
            inv = np.linalg.inv(mat)
            base_center = self.base.domain.mean(axis=1)
            center = inv @ (base_center - self.shift)
            half = self.base.domain[:, 1] - base_center
            rho = float(np.min(half / np.sum(np.abs(mat), axis=1)))
            reach = np.full(self.n, rho)
            self.domain = np.stack([center - reach, center + reach], axis=1)

    def contains(self, y, tol: float = 1e-12) -> bool:
        return self.base.contains(self._map(y), tol)

    def check_domain(self, y) -> None:
        self.base.check_domain(self._map(y))

    def _map(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.shift + u @ self.mat.T

    def value(self, u) -> np.ndarray:
        return self.base.value(self._map(u))

    def jacobian(self, u) -> np.ndarray:
        return self.base.jacobian(self._map(u)) @ self.mat

    def jacobian_batch(self, us) -> np.ndarray:
        return self.base.jacobian_batch(self._map(us)) @ self.mat


# ---------------------------------------------------------------------------
# Pointwise analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointAnalysis:
    y: np.ndarray
    p: np.ndarray
    degree: int
    htangent: Subspace | None
    regular: bool
    classification: str
    alpha: tuple[int, ...]
    q_n: int
    characteristic: bool
    notes: tuple[str, ...] = ()


def tangent_lift(chart, y) -> Multivector:
    chart.check_domain(y)
    return lift_tangent(chart.group, chart.value(y), chart.jacobian(y))


def pointwise_degree(chart, y, policy: NumericPolicy = DEFAULT_POLICY) -> int:
    """Largest M with a nonzero degree-M projection of the lifted tangent."""
    return tangent_lift(chart, y).max_degree(policy.rtol)


def homogeneous_tangent(
    chart, y, policy: NumericPolicy = DEFAULT_POLICY
) -> tuple[Subspace, bool]:
    """Lie h-tangent space A = {X : X ^ pi_N(xi) = 0} and its regularity flag."""
    xi = tangent_lift(chart, y)
    return _htangent_from_lift(chart.group, xi, chart.n, policy)


def _htangent_from_lift(
    group: GradedGroup, xi: Multivector, n: int, policy: NumericPolicy
) -> tuple[Subspace, bool]:
    top = project_degree(xi, xi.max_degree(policy.rtol))
    keys = sorted(_wedge_keys(group, top)) if top.terms else []
    if not keys:
        raise NonSimpleProjection("top-degree projection is zero")
    key_index = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(keys), group.q))
    for i in range(group.q):
        w = wedge(Multivector(group, 1, {(i,): 1.0}), top)
        for key, c in w.terms.items():
            mat[key_index[key], i] = c
    u, s, vt = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0.0:
        raise NonSimpleProjection("degenerate wedge map")
    kernel_dim = int(np.sum(s <= policy.rtol * s[0])) + max(group.q - len(s), 0)
    if kernel_dim != n:
        raise NonSimpleProjection(
            f"wedge kernel has dimension {kernel_dim}, expected {n}: "
            "top-degree projection is not simple"
        )
    basis = vt[group.q - kernel_dim :].T
    space = Subspace(group, basis)
    regular = classify_subspace(group, space, tol=max(policy.rtol, 1e-8)).subalgebra
    return space, regular


def _wedge_keys(group: GradedGroup, top: Multivector):
    out = set()
    for i in range(group.q):
        for key in top.terms:
            if i in key:
                continue
            merged = tuple(sorted(key + (i,)))
            out.add(merged)
    return out


def q_n_max_degree(group: GradedGroup, n: int) -> int:
    """Closed-form maximum degree Q_n of an n-dimensional submanifold."""
    if not 1 <= n <= group.q:
        raise ValueError(f"n must be in 1..{group.q}")
    h = group.layers
    iota = group.step
    if n <= h[-1]:
        return iota * n
    # find the layer index l with sum_{j>l} h_j < n <= sum_{j>=l} h_j
    suffix = 0
    for l in range(iota, 0, -1):
        if suffix < n <= suffix + h[l - 1]:
            r = n - suffix
            tail = sum(j * h[j - 1] for j in range(l + 1, iota + 1))
            return l * r + tail
        suffix += h[l - 1]
    raise AssertionError("unreachable")


def q_n_bruteforce(group: GradedGroup, n: int) -> int:
    """Independent oracle: max degree over all n-element index tuples."""
    deg = group.degrees
    return max(int(sum(deg[list(c)])) for c in combinations(range(group.q), n))


# ---------------------------------------------------------------------------
# Alpha profile by degree-ordered echelon reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Echelon:
    alpha: tuple[int, ...]
    pivots: tuple[int, ...]          # pivot row per column, in column order
    column_transform: np.ndarray     # V with C @ V in echelon form
    matrix: np.ndarray               # C @ V


def degree_echelon(group: GradedGroup, coeffs: np.ndarray, policy: NumericPolicy) -> Echelon:
    """Column-reduce the frame-coefficient matrix, scanning rows from the
    highest degree down; each column's pivot row is its top-degree support."""
    c = np.array(coeffs, dtype=float)
    q, n = c.shape
    v = np.eye(n)
    scale = float(np.max(np.abs(c), initial=0.0)) or 1.0
    pivot_of_col: dict[int, int] = {}
    used: set[int] = set()
    for row in range(q - 1, -1, -1):
        candidates = [j for j in range(n) if j not in used and abs(c[row, j]) > policy.rtol * scale]
        if not candidates:
            continue
        piv = max(candidates, key=lambda j: abs(c[row, j]))
        fac = c[row, piv]
        c[:, piv] /= fac
        v[:, piv] /= fac
        for j in range(n):
            if j != piv and abs(c[row, j]) > 0.0:
                f = c[row, j]
                c[:, j] -= f * c[:, piv]
                v[:, j] -= f * v[:, piv]
        used.add(piv)
        pivot_of_col[piv] = row
    if len(used) < n:
        raise DegenerateTangent("coefficient matrix is rank deficient")
    deg = group.degrees
    alpha = [0] * group.step
    for piv, row in pivot_of_col.items():
        alpha[int(deg[row]) - 1] += 1
    pivots = tuple(pivot_of_col[j] for j in range(n))
    return Echelon(alpha=tuple(alpha), pivots=pivots, column_transform=v, matrix=c)


def alpha_profile(chart, y, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[int, ...]:
    """Layer profile alpha_1..alpha_iota with sum alpha_j = n and
    sum j*alpha_j = pointwise degree (cross-checked)."""
    group = chart.group
    chart.check_domain(y)
    coeffs = group.frame_coefficients(chart.value(y), chart.jacobian(y).T).T
    ech = degree_echelon(group, coeffs, policy)
    degree = pointwise_degree(chart, y, policy)
    implied = sum((j + 1) * a for j, a in enumerate(ech.alpha))
    if implied != degree:
        raise InconsistentDegree(
            f"echelon degree {implied} != multivector degree {degree}; "
            "the point is too ill-conditioned for this tolerance"
        )
    return ech.alpha


# ---------------------------------------------------------------------------
# Point classification
# ---------------------------------------------------------------------------

def sigma_max_degree(chart, policy: NumericPolicy = DEFAULT_POLICY, per_axis: int | None = None) -> int:
    """Degree of the submanifold over a sampled parameter grid (cached)."""
    key = ("max_degree", policy.rtol, per_axis)
    if key in chart._cache:
        return chart._cache[key]
    n = chart.n
    counts = per_axis or (7 if n <= 3 else 5)
    axes = [
        chart.domain[i, 0]
        + (np.arange(counts) + 0.5) * (chart.domain[i, 1] - chart.domain[i, 0]) / counts
        for i in range(n)
    ]
    best = 0
    for y in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n):
        try:
            best = max(best, pointwise_degree(chart, y, policy))
        except (DegenerateTangent, NonFinite, DomainViolation):
            continue
    chart._cache[key] = best
    return best


def classify_point(chart, y, policy: NumericPolicy = DEFAULT_POLICY) -> PointAnalysis:
    group = chart.group
    y = np.asarray(y, dtype=float)
    chart.check_domain(y)
    p = chart.value(y)
    jac = chart.jacobian(y)
    if DEFAULT_POLICY.rank(jac) < chart.n:
        raise DegenerateTangent("Jacobian is rank deficient at this point")

    xi = lift_tangent(group, p, jac)
    degree = xi.max_degree(policy.rtol)
    qn = q_n_max_degree(group, chart.n)

    notes: list[str] = []
    try:
        space, regular = _htangent_from_lift(group, xi, chart.n, policy)
    except NonSimpleProjection as err:
        space, regular = None, False
        notes.append(f"non_simple_projection: {err}")

    coeffs = group.frame_coefficients(p, jac.T).T
    ech = degree_echelon(group, coeffs, policy)
    implied = sum((j + 1) * a for j, a in enumerate(ech.alpha))
    if implied != degree:
        raise InconsistentDegree(
            f"echelon degree {implied} != multivector degree {degree} at y={y}"
        )

    m = group.layers[0]
    # characteristic: the horizontal fiber is contained in the tangent space
    characteristic = False
    if chart.n >= m:
        horiz = np.zeros((group.q, m))
        horiz[:m] = np.eye(m)
        stacked = np.hstack([coeffs, horiz])
        characteristic = policy.rank(stacked) == chart.n

    cls = None
    if not regular:
        cls = "irregular"
    elif degree < sigma_max_degree(chart, policy):
        # the point sits in the characteristic set of the submanifold; its
        # own h-tangent structure is still reported via the other fields
        cls = "low_degree"
    else:
        kinds = classify_subspace(group, space, tol=max(policy.rtol, 1e-8))
        if kinds.horizontal:
            cls = "horizontal"
        elif degree == qn:
            cls = "transversal"
            if not kinds.vertical:
                notes.append("degree equals Q_n but h-tangent space is not vertical")
        elif kinds.vertical:
            cls = "vertical_regular"
        else:
            # regular point of maximum degree whose h-tangent space is neither
            # horizontal nor vertical; possible from step 3 on
            cls = "regular"

    return PointAnalysis(
        y=y,
        p=p,
        degree=degree,
        htangent=space,
        regular=regular,
        classification=cls,
        alpha=ech.alpha,
        q_n=qn,
        characteristic=characteristic,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Blow-up rate verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateRate:
    index: int
    expected_exponent: int
    in_tangent_set: bool
    identically_zero: bool
    fitted_slope: float | None
    ratios: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class BlowupReport:
    case: str
    advisory: bool
    tangent_rows: tuple[int, ...]
    rates: tuple[CoordinateRate, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rates)


def _blowup_case(group: GradedGroup, analysis: PointAnalysis) -> str:
    if not analysis.regular:
        return "not_covered"
    if analysis.classification == "horizontal":
        return "horizontal"
    if group.step == 2:
        return "step2"
    if len(analysis.y) == 1:
        return "curve"
    if analysis.classification == "transversal":
        return "transversal"
    return "not_covered"


def blowup_rates(
    chart,
    y0,
    ray,
    scales=None,
    policy: NumericPolicy = DEFAULT_POLICY,
    slope_tolerance: float = 0.1,
) -> BlowupReport:
    """Empirical verification of the local blow-up expansion along one ray.

    The translated curve t -> Psi(y0)^-1 . Psi(y0 + V eta(t * ray)) is read in
    a per-layer rotated basis adapted to the h-tangent space.  Coordinates on
    the tangent index set must show log-log slope equal to their degree;
    the others must have |coord| / t^degree decreasing to zero.
    """
    group = chart.group
    y0 = np.asarray(y0, dtype=float)
    ray = np.asarray(ray, dtype=float)
    ray = ray / np.linalg.norm(ray)
    analysis = classify_point(chart, y0, policy)
    case = _blowup_case(group, analysis)
    advisory = case == "not_covered"

    p = chart.value(y0)
    coeffs = group.frame_coefficients(p, chart.jacobian(y0).T).T

    # per-layer rotation sending the h-tangent layer components to the leading
    # basis vectors of each layer
    rot = np.eye(group.q)
    if analysis.htangent is not None:
        a_basis = analysis.htangent.orthonormal_basis()
        for j in range(1, group.step + 1):
            sl = group.layer_slice(j)
            block = a_basis[sl]
            u, s, _ = np.linalg.svd(block, full_matrices=True)
            rank = int(np.sum(s > policy.rtol * s[0])) if s.size and s[0] > 0 else 0
            cols = np.hstack([u[:, :rank], u[:, rank:]]) if rank else u
            rot[sl, sl] = cols

    ech = degree_echelon(group, rot.T @ coeffs, policy)
    exponents = np.array([group.degrees[ech.pivots[j]] for j in range(chart.n)])
    tangent_rows = tuple(sorted(ech.pivots))
    axis_of_row = {row: j for j, row in enumerate(ech.pivots)}

    if scales is None:
        scales = [2.0 ** (-k) for k in range(13)]
    scales = np.asarray(sorted(set(float(s) for s in scales), reverse=True), dtype=float)

    # shrink the leading scale so the whole warped ray fits in the chart domain
    t0 = scales[0]
    for _ in range(60):
        ts = t0 * scales / scales[0]
        u = ech.column_transform @ _eta(ts, ray, exponents)
        ys = y0[None, :] + u.T
        if all(chart.contains(yy) for yy in ys):
            break
        t0 *= 0.5
    else:
        raise DomainViolation("could not fit blow-up scales inside the chart domain")

    pts = np.stack([chart.value(yy) for yy in ys])
    gamma = group.product(-p, pts) @ rot  # components in the adapted basis

    deg = group.degrees
    log_t = np.log(ts)
    rates = []
    scale_ref = float(np.max(np.abs(gamma), initial=0.0)) or 1.0
    for s in range(group.q):
        vals = np.abs(gamma[:, s])
        zero = bool(np.all(vals <= 1e-13 * scale_ref))
        in_set = s in tangent_rows
        ratios = vals / ts ** float(deg[s])
        if in_set:
            if abs(ray[axis_of_row[s]]) <= 1e-12:
                # this tangent direction is not excited by the chosen ray
                rates.append(CoordinateRate(s, int(deg[s]), True, zero, None, tuple(ratios), True))
                continue
            if zero:
                slope, ok = None, False
            else:
                good = vals > 0
                slope = float(np.polyfit(log_t[good], np.log(vals[good]), 1)[0])
                ok = abs(slope - float(deg[s])) <= slope_tolerance
            rates.append(CoordinateRate(s, int(deg[s]), True, zero, slope, tuple(ratios), ok))
        else:
            if zero:
                rates.append(CoordinateRate(s, int(deg[s]), False, True, None, tuple(ratios), True))
                continue
            window = ratios[-7:]  # two smallest dyadic decades
            decreasing = bool(np.all(np.diff(window) <= 1e-12 + 0.05 * window[:-1]))
            vanishing = window[-1] <= 0.6 * window[0] or window[-1] <= 1e-10 * scale_ref
            rates.append(
                CoordinateRate(
                    s, int(deg[s]), False, False, None, tuple(ratios), decreasing and vanishing
                )
            )
    return BlowupReport(case=case, advisory=advisory, tangent_rows=tangent_rows, rates=tuple(rates))


def _eta(ts: np.ndarray, ray: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Per-axis power warp eta_i(t * ray_i) = |t ray_i|^{b_i} sgn(ray_i) / b_i,
    returned as an (n, len(ts)) array."""
    t_row = np.asarray(ts, dtype=float)[None, :]
    b = exponents.astype(float)[:, None]
    return np.sign(ray)[:, None] * np.abs(t_row * ray[:, None]) ** b / b


# ---------------------------------------------------------------------------
# Degree maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeMapResult:
    points: tuple[PointAnalysis, ...]
    max_degree: int
    low_degree_fraction: float
    failures: tuple[tuple[tuple[float, ...], str], ...]


def degree_map(chart, grid_counts, policy: NumericPolicy = DEFAULT_POLICY) -> DegreeMapResult:
    """Classify the chart on a grid of cell centers and summarize degrees."""
    counts = [int(c) for c in np.atleast_1d(grid_counts)]
    if len(counts) == 1:
        counts = counts * chart.n
    axes = [
        chart.domain[i, 0]
        + (np.arange(counts[i]) + 0.5) * (chart.domain[i, 1] - chart.domain[i, 0]) / counts[i]
        for i in range(chart.n)
    ]
    analyses = []
    failures = []
    for y in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.n):
        try:
            analyses.append(classify_point(chart, y, policy))
        except (DegenerateTangent, NonFinite, InconsistentDegree) as err:
            failures.append((tuple(float(v) for v in y), type(err).__name__))
    if not analyses:
        raise DegenerateTangent("no grid cell could be analyzed")
    max_deg = max(a.degree for a in analyses)
    low = sum(1 for a in analyses if a.degree < max_deg) / len(analyses)
    return DegreeMapResult(
        points=tuple(analyses),
        max_degree=max_deg,
        low_degree_fraction=low,
        failures=tuple(failures),
    )
