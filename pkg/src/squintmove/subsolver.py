"""Single-element position update: a small convex max-min program.

    maximize    min_l q_l(x)
    subject to  x in box,  n_s . (x - o_s) >= D  for every neighbour s

with every ``q_l`` a concave quadratic.  The feasible set is a convex
polygon that is clipped explicitly first.  It may collapse to a segment or
a point when the current position is wedged between neighbours at exactly
the minimum spacing, so those cases are solved directly.  Otherwise a
log-barrier Newton method on ``(x, kappa)`` finds the optimum, and a
second barrier pass picks, among the near-optimal points, the one closest
to the anchor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .geometry import SOLVER_SLACK, Region
from .surrogate import HalfPlane, SurrogateStack, distance_halfplane

log = logging.getLogger(__name__)

_GEOM_EPS = 1e-12  # in units of the box half width
_MAX_NEWTON = 60
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class InfeasibleSubproblemError(RuntimeError):
    """The anchor violates its own constraints (a bookkeeping bug upstream)."""


@dataclass(frozen=True, eq=False)
class SubproblemSpec:
    surrogates: SurrogateStack
    box: Region
    halfplanes: Sequence[HalfPlane] = field(default_factory=list)
    anchor: np.ndarray = None

    def __post_init__(self):
        a = self.surrogates.anchor if self.anchor is None else self.anchor
        object.__setattr__(self, "anchor", np.array(a, dtype=float))


@dataclass(frozen=True)
class SubproblemSolution:
    point: np.ndarray
    kappa: float
    iterations: int
    status: str  # "optimal" or "max-iterations"


def surrogate_min(spec: SubproblemSpec, point) -> float:
    return float(spec.surrogates.minimum(np.asarray(point, dtype=float)))


def is_feasible(spec: SubproblemSpec, point, slack: float = SOLVER_SLACK) -> bool:
    point = np.asarray(point, dtype=float)
    if spec.box.excess(point)[0] > slack:
        return False
    return all(hp.margin(point) >= -slack for hp in spec.halfplanes)


# --------------------------------------------------------------------------
# scaled problem

class _Scaled:
    """The subproblem in coordinates ``u = (x - anchor) / s`` with values ``(q - q0) / sigma``.

    Both scalings bring the problem to O(1) numbers regardless of whether
    powers are ~1e-20 and positions ~1e-3.
    """

    def __init__(self, spec: SubproblemSpec):
        st = spec.surrogates
        a = spec.anchor
        self.anchor = a
        self.s = float(max(spec.box.half_width_x, spec.box.half_width_y))
        shift = st.evaluate(a)
        base = float(np.min(shift))
        s = self.s
        grad = st.gradient + np.einsum("tij,j->ti", st.curvature, a - st.anchor)
        spread = (np.abs(shift - base) + np.linalg.norm(grad, axis=1) * s
                  + 0.5 * np.linalg.norm(st.curvature, ord=2, axis=(1, 2)) * s * s)
        self.base = base
        self.sigma = float(np.max(spread))
        sig = self.sigma if self.sigma > 0 else 1.0
        self.c0 = (shift - base) / sig
        self.c1 = grad * (s / sig)
        self.c2 = st.curvature * (s * s / sig)

        h = spec.box.half_widths
        rows = [np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                np.array([0.0, 1.0]), np.array([0.0, -1.0])]
        rhs = [(h[0] - a[0]) / s, (h[0] + a[0]) / s, (h[1] - a[1]) / s, (h[1] + a[1]) / s]
        for hp in spec.halfplanes:
            rows.append(-hp.normal)
            rhs.append(float(hp.margin(a)) / s)
        self.A = np.array(rows)
        self.b = np.array(rhs)

    def values(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.c0 + u @ self.c1.T + 0.5 * np.einsum("...i,tij,...j->...t", u, self.c2, u)

    def phi(self, u):
        return np.min(self.values(u), axis=-1)

    def to_x(self, u) -> np.ndarray:
        return self.anchor + self.s * np.asarray(u, dtype=float)


def _polygon(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vertices of ``{u : A u <= b}`` by clipping the first four (box) rows."""
    hx, lx, hy, ly = b[:4]
    poly = np.array([[-lx, -ly], [hx, -ly], [hx, hy], [-lx, hy]])
    for a_i, b_i in zip(A[4:], b[4:]):
        if poly.shape[0] == 0:
            break
        d = poly @ a_i - b_i
        out = []
        n = poly.shape[0]
        for i in range(n):
            p, q = poly[i], poly[(i + 1) % n]
            dp, dq = d[i], d[(i + 1) % n]
            if dp <= _GEOM_EPS:
                out.append(p)
            if (dp > _GEOM_EPS) != (dq > _GEOM_EPS) and dp != dq:
                out.append(p + (q - p) * (dp / (dp - dq)))
        poly = np.array(out).reshape(-1, 2)
    return poly


def _area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


# --------------------------------------------------------------------------
# barrier method

def _newton(fun, z, max_iter):
    """Damped Newton on a self-concordant barrier; ``fun`` returns
    ``(value, grad, hess)`` or ``None`` outside the domain."""
    it = 0
    f, g, H = fun(z)
    while it < max_iter:
        it += 1
        try:
            dz = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            dz = -np.linalg.lstsq(H, g, rcond=None)[0]
        dec = -float(g @ dz)
        if dec < 1e-10:
            break
        step = 1.0
        while step > 1e-20:
            trial = fun(z + step * dz)
            if trial is not None and trial[0] <= f - 0.25 * step * dec + 1e-13 * abs(f):
                break
            step *= 0.5
        else:
            break
        z = z + step * dz
        f, g, H = trial
    return z, it


def _max_min_barrier(P: _Scaled, u0, gap_tol):
    """Maximize ``min_l r_l(u)`` over the polygon from a strictly interior ``u0``."""
    c0, c1, c2, A, b = P.c0, P.c1, P.c2, P.A, P.b
    m = len(c0) + len(b)

    def make(tau):
        def fun(z):
            u, t = z[:2], z[2]
            w = b - A @ u
            gu = c1 + np.einsum("tij,j->ti", c2, u)
            s = c0 + u @ c1.T + 0.5 * np.einsum("i,tij,j->t", u, c2, u) - t
            if np.any(w <= 0) or np.any(s <= 0):
                return None
            val = -tau * t - np.sum(np.log(s)) - np.sum(np.log(w))
            grad = np.empty(3)
            grad[:2] = -(gu / s[:, None]).sum(axis=0) + (A / w[:, None]).sum(axis=0)
            grad[2] = -tau + np.sum(1.0 / s)
            ds = np.column_stack([gu, -np.ones_like(s)])
            H = (ds / s[:, None] ** 2).T @ ds
            H[:2, :2] -= np.einsum("tij,t->ij", c2, 1.0 / s)
            H[:2, :2] += (A / w[:, None] ** 2).T @ A
            return val, grad, H
        return fun

    z = np.array([u0[0], u0[1], float(P.phi(u0)) - 1.0])
    tau, total = 1.0, 0
    while True:
        z, it = _newton(make(tau), z, _MAX_NEWTON)
        total += it
        if m / tau < gap_tol or total > 2000:
            break
        tau *= 8.0
    return z[:2], total, m / tau < gap_tol


def _closest_barrier(P: _Scaled, u0, level, gap_tol):
    """Minimize ``||u||`` over ``{r_l(u) >= level}`` intersected with the polygon."""
    c0, c1, c2, A, b = P.c0, P.c1, P.c2, P.A, P.b
    m = len(c0) + len(b)

    def make(tau):
        def fun(u):
            w = b - A @ u
            gu = c1 + np.einsum("tij,j->ti", c2, u)
            s = c0 + u @ c1.T + 0.5 * np.einsum("i,tij,j->t", u, c2, u) - level
            if np.any(w <= 0) or np.any(s <= 0):
                return None
            val = tau * float(u @ u) - np.sum(np.log(s)) - np.sum(np.log(w))
            grad = 2.0 * tau * u - (gu / s[:, None]).sum(axis=0) + (A / w[:, None]).sum(axis=0)
            H = 2.0 * tau * np.eye(2) + (gu / s[:, None] ** 2).T @ gu
            H -= np.einsum("tij,t->ij", c2, 1.0 / s)
            H += (A / w[:, None] ** 2).T @ A
            return val, grad, H
        return fun

    u, tau, total = np.array(u0, dtype=float), 1.0, 0
    while True:
        u, it = _newton(make(tau), u, _MAX_NEWTON)
        total += it
        if m / tau < gap_tol or total > 2000:
            break
        tau *= 8.0
    return u, total


def _solve_segment(P: _Scaled, p, q, delta):
    """Concave 1-D max on the segment ``p -> q`` followed by the min-move rule."""
    d = q - p
    f = lambda t: float(P.phi(p + t * d))
    lo, hi = 0.0, 1.0
    x1, x2 = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    it = 0
    while hi - lo > 1e-15 and it < 200:
        it += 1
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    cands = [(f(0.0), 0.0), (f(1.0), 1.0), (f(0.5 * (lo + hi)), 0.5 * (lo + hi))]
    best, t_best = max(cands)
    # Anchor sits at u = 0, i.e. at its projection onto the segment.
    t_anchor = float(np.clip(-(p @ d) / (d @ d), 0.0, 1.0))
    level = best - delta
    if f(t_anchor) >= level:
        return p + t_anchor * d, it
    a, z = t_anchor, t_best  # f(a) < level <= f(z)
    for _ in range(100):
        mid = 0.5 * (a + z)
        if f(mid) >= level:
            z = mid
        else:
            a = mid
    return p + z * d, it


def solve(spec: SubproblemSpec, tol: float = 1e-6) -> SubproblemSolution:
    """Best position for one element given its surrogate stack and constraints.

    ``tol`` is relative to the spread of surrogate values across the box.
    The result is never worse than the anchor under the surrogates.
    """
    anchor = spec.anchor
    if not is_feasible(spec, anchor):
        raise InfeasibleSubproblemError(f"anchor {anchor.tolist()} violates its constraints")
    kappa_anchor = surrogate_min(spec, anchor)
    stay = SubproblemSolution(anchor.copy(), kappa_anchor, 0, "optimal")

    P = _Scaled(spec)
    if not (P.sigma > 0 and np.isfinite(P.sigma)):
        return stay
    P.b = np.maximum(P.b, 0.0)  # absorb solver slack carried in the anchor
    gap_tol = 1e-3 * tol
    delta = 0.1 * tol

    poly = _polygon(P.A, P.b)
    if poly.shape[0] == 0:
        return stay
    diam = float(np.max(np.linalg.norm(poly[:, None] - poly[None], axis=-1)))
    status = "optimal"
    if diam <= _GEOM_EPS:
        return stay
    if _area(poly) <= _GEOM_EPS * diam:
        dist = np.linalg.norm(poly[:, None] - poly[None], axis=-1)
        i, j = np.unravel_index(np.argmax(dist), dist.shape)
        u, iters = _solve_segment(P, poly[i], poly[j], delta)
    else:
        u0 = 0.5 * poly.mean(axis=0)
        u1, iters, converged = _max_min_barrier(P, u0, gap_tol)
        status = "optimal" if converged else "max-iterations"
        best = float(P.phi(u1))
        if best <= delta:
            return SubproblemSolution(anchor.copy(), kappa_anchor, iters, status)
        level = best - delta
        u, more = _closest_barrier(P, u1, level, gap_tol)
        iters += more
        if float(P.phi(u)) < level:
            u = u1

    x = P.to_x(u)
    if not is_feasible(spec, x):
        log.debug("subsolver point %s failed feasibility; keeping anchor", x)
        return SubproblemSolution(anchor.copy(), kappa_anchor, iters, status)
    kappa = surrogate_min(spec, x)
    if kappa < kappa_anchor:
        return SubproblemSolution(anchor.copy(), kappa_anchor, iters, status)
    return SubproblemSolution(x, kappa, iters, status)


def brute_force_oracle(spec: SubproblemSpec, grid: int = 401) -> SubproblemSolution:
    """Exhaustive lattice search over the box plus a short local polish.

    Test oracle only; shares nothing with ``solve`` beyond the problem data.
    """
    if grid < 101:
        raise ValueError("oracle grid must have at least 101 points per axis")
    hx, hy = spec.box.half_width_x, spec.box.half_width_y
    xs = np.linspace(-hx, hx, grid)
    ys = np.linspace(-hy, hy, grid)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    ok = np.ones(pts.shape[0], dtype=bool)
    for hp in spec.halfplanes:
        ok &= hp.margin(pts) >= 0
    if not ok.any():
        return SubproblemSolution(spec.anchor.copy(), surrogate_min(spec, spec.anchor), 0, "optimal")
    pts = pts[ok]
    vals = np.min(spec.surrogates.evaluate(pts), axis=1)
    k = int(np.argmax(vals))
    x, best = pts[k].copy(), float(vals[k])

    # Polish: 20 rounds of a local lattice around the incumbent, each at a
    # quarter of the previous pitch.
    step = np.array([2 * hx, 2 * hy]) / (grid - 1)
    offs = np.arange(-16, 17) / 4.0
    OX, OY = np.meshgrid(offs, offs)
    local = np.column_stack([OX.ravel(), OY.ravel()])
    for _ in range(20):
        cand = x + local * step
        keep = spec.box.excess(cand) <= 0
        for hp in spec.halfplanes:
            keep &= hp.margin(cand) >= 0
        cand = cand[keep]
        if cand.shape[0]:
            v = np.min(spec.surrogates.evaluate(cand), axis=1)
            k = int(np.argmax(v))
            if v[k] > best:
                x, best = cand[k].copy(), float(v[k])
        step = step / 4.0
    return SubproblemSolution(x, best, 20, "optimal")


def halfplanes_for(anchor, others: np.ndarray, D: float) -> List[HalfPlane]:
    return [distance_halfplane(anchor, o, D) for o in np.asarray(others).reshape(-1, 2)]
