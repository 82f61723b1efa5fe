"""Singular Volterra kernels of the Rosenblatt construction.

The fractional Brownian kernel and its time derivative, for 1/2 < Hp < 1,

    K(t, s)  = c(Hp) * s^(1/2-Hp) * int_s^t (u-s)^(Hp-3/2) u^(Hp-1/2) du
    dK(t, s) = c(Hp) * (s/t)^(1/2-Hp) * (t-s)^(Hp-3/2)

drive the symmetric two-variable kernel (Hp = (H+1)/2)

    F(t, u, v) = d(H) * 1{u<t} 1{v<t} * int_{max(u,v)}^t dK(a, u) dK(a, v) da

whose grid-cell integrals c_ij(m) = n * iint_{cell_i x cell_j} F(m/n, u, v)
are the quadratic-form coefficients of the approximating walk.

Two independent evaluation orders are provided for the cell integrals:

* ``cell_weight``  - outer tensor Gauss over the (u, v) cell pair with the
  time integral innermost, fully adaptive; slow but self-contained.
* ``weight_table`` - time integral outermost, factorised through the
  one-dimensional cell integrals g_i(a) = int_{cell_i} dK(a, u) du, which
  reduce to regularized incomplete beta functions.  Per grid panel the
  integrands split into an analytic part plus (a - panel_left)^alpha times
  an analytic part (alpha = Hp - 1/2), so one Gauss-Legendre and two
  Gauss-Jacobi node families integrate every product at spectral accuracy.

The panel machinery (``VolterraEngine``) is shared, read-only after
construction, by the path generators and the market module.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special


@lru_cache(maxsize=None)
def _leggauss(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


class DomainError(ValueError):
    """Argument outside the mathematical domain of a kernel quantity."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget."""


# ---------------------------------------------------------------------------
# parameter bundles
# ---------------------------------------------------------------------------

def c_const(Hp: float) -> float:
    """Normalizing constant of the fBm kernel, (Hp(2Hp-1)/B(2-2Hp, Hp-1/2))^(1/2)."""
    if not 0.5 < Hp < 1.0:
        raise DomainError(f"kernel Hurst index must lie in (1/2, 1), got {Hp}")
    return float(np.sqrt(Hp * (2 * Hp - 1) / special.beta(2 - 2 * Hp, Hp - 0.5)))


def d_const(H: float) -> float:
    """Normalizing constant of the two-variable kernel, sqrt(2(2H-1)/H)/(H+1)."""
    if not 0.5 < H < 1.0:
        raise DomainError(f"Hurst index must lie in (1/2, 1), got {H}")
    return float(np.sqrt(2.0 * (2 * H - 1) / H) / (H + 1))


@dataclass(frozen=True)
class HurstParams:
    """Parameter bundle (H, Hp, cHp, dH) shared by every kernel evaluation.

    H is the Hurst index of the limit process, Hp = (H+1)/2 the index of the
    underlying fBm kernel, cHp and dH the two normalizing constants.
    """

    H: float
    Hp: float
    cHp: float
    dH: float

    def __post_init__(self):
        if not 0.5 < self.H < 1.0:
            raise DomainError(f"H must lie in (1/2, 1), got {self.H}")
        if abs(self.Hp - (self.H + 1) / 2) > 1e-12:
            raise DomainError("Hp must equal (H+1)/2")
        if self.cHp <= 0 or self.dH <= 0:
            raise DomainError("normalizing constants must be positive")
        # round-trip of the defining formula, relative tolerance 1e-12
        lhs = self.cHp ** 2 * special.beta(2 - 2 * self.Hp, self.Hp - 0.5)
        rhs = self.Hp * (2 * self.Hp - 1)
        if abs(lhs - rhs) > 1e-12 * rhs:
            raise DomainError("cHp fails its defining identity")

    @classmethod
    def from_hurst(cls, H: float) -> "HurstParams":
        """Build the bundle from the Hurst index H of the limit process."""
        if not 0.5 < H < 1.0:
            raise DomainError(f"H must lie in (1/2, 1), got {H}")
        Hp = (H + 1) / 2
        return cls(H=H, Hp=Hp, cHp=c_const(Hp), dH=d_const(H))

    @classmethod
    def from_kernel_hurst(cls, Hp: float) -> "HurstParams":
        """Build the bundle from the fBm kernel index Hp in (3/4, 1)."""
        if not 0.75 < Hp < 1.0:
            raise DomainError(f"kernel Hurst index must lie in (3/4, 1), got {Hp}")
        return cls.from_hurst(2 * Hp - 1)


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and node counts for the quadrature routines."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdiv: int = 40
    nodes_per_panel: int = 16

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise DomainError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise DomainError("abs_tol must be nonnegative")
        if self.max_subdiv < 1:
            raise DomainError("max_subdiv must be at least 1")
        if self.nodes_per_panel < 2:
            raise DomainError("nodes_per_panel must be at least 2")


DEFAULT_QUAD = QuadConfig()


# ---------------------------------------------------------------------------
# adaptive Gauss-Legendre (scalar integrands)
# ---------------------------------------------------------------------------

def _adaptive_gauss(f, a: float, b: float, q: QuadConfig) -> float:
    """Globally adaptive Gauss-Legendre for a vectorised integrand on [a, b].

    Each interval carries a Richardson estimate (one-panel rule against the
    sum over its two halves); the worst interval is bisected until the total
    estimated error meets max(rel_tol * |integral|, abs_tol).
    """
    if b <= a:
        return 0.0
    x, w = _leggauss(q.nodes_per_panel)

    def rule(lo, hi):
        h2 = 0.5 * (hi - lo)
        return h2 * float(np.dot(w, f(lo + h2 * (x + 1.0))))

    def entry(lo, hi):
        mid = 0.5 * (lo + hi)
        fine = rule(lo, mid) + rule(mid, hi)
        return [abs(rule(lo, hi) - fine), lo, hi, fine]

    segs = [entry(a, b)]
    total = segs[0][3]
    err = segs[0][0]
    pops = 0
    while err > max(q.rel_tol * abs(total), q.abs_tol):
        pops += 1
        if pops > 16 * q.max_subdiv:
            raise QuadratureError(
                f"adaptive quadrature failed to reach rel_tol={q.rel_tol} "
                f"after {pops} bisections")
        segs.sort(key=lambda s: s[0])
        e, lo, hi, fine = segs.pop()
        mid = 0.5 * (lo + hi)
        left, right = entry(lo, mid), entry(mid, hi)
        total += left[3] + right[3] - fine
        err += left[0] + right[0] - e
        segs.append(left)
        segs.append(right)
    return total


# ---------------------------------------------------------------------------
# point evaluations
# ---------------------------------------------------------------------------

def fbm_kernel(t: float, s: float, p: HurstParams, q: QuadConfig = DEFAULT_QUAD) -> float:
    """fBm kernel K(t, s) for 0 < s <= t.

    The endpoint singularity (u-s)^(Hp-3/2) is absorbed exactly by the
    substitution w = (u-s)^(Hp-1/2); the transformed integrand is handled by
    adaptive Gauss-Legendre.  Returns 0 in the limit t == s.
    """
    if s <= 0 or s > t:
        raise DomainError(f"need 0 < s <= t, got s={s}, t={t}")
    if t == s:
        return 0.0
    Hp = p.Hp
    alpha = Hp - 0.5
    g = lambda w: (s + w ** (1.0 / alpha)) ** (Hp - 0.5)
    val = _adaptive_gauss(g, 0.0, (t - s) ** alpha, q) / alpha
    return p.cHp * s ** (0.5 - Hp) * val


def dK(t: float, s: float, p: HurstParams) -> float:
    """Time derivative of the fBm kernel, cHp (s/t)^(1/2-Hp) (t-s)^(Hp-3/2).

    Strictly positive on 0 < s < t; diverges as t decreases to s, so callers
    must never evaluate on the diagonal.
    """
    if s <= 0 or t <= s:
        raise DomainError(f"need 0 < s < t, got s={s}, t={t}")
    return p.cHp * (s / t) ** (0.5 - p.Hp) * (t - s) ** (p.Hp - 1.5)


def _phi_adaptive(t, u, v, p, q):
    """int_{max(u,v)}^t a^(2Hp-1) (a-u)^(Hp-3/2) (a-v)^(Hp-3/2) da, u != v.

    Substituting w = (a - max(u,v))^alpha absorbs the singular factor of the
    larger argument; the other factor is smooth on the open interval.
    """
    Hp = p.Hp
    alpha = Hp - 0.5
    lo, mn = max(u, v), min(u, v)

    def g(w):
        a = lo + w ** (1.0 / alpha)
        return a ** (2 * Hp - 1) * (a - mn) ** (Hp - 1.5)

    return _adaptive_gauss(g, 0.0, (t - lo) ** alpha, q) / alpha


def rosenblatt_kernel(t: float, u: float, v: float, p: HurstParams,
                      q: QuadConfig = DEFAULT_QUAD) -> float:
    """Two-variable kernel F(t, u, v); symmetric in (u, v), zero for u >= t or v >= t.

    Point evaluation refuses u == 0, v == 0 (the y^(1/2-Hp) factor is
    singular there) and u == v (the time integral diverges on the diagonal;
    every discrete sum excludes it).  Cell integrals handle both by
    integration.
    """
    if not 0.0 < t <= 1.0:
        raise DomainError(f"need t in (0, 1], got {t}")
    if u <= 0.0 or v <= 0.0:
        raise DomainError("point evaluation of F requires u > 0 and v > 0")
    if u >= t or v >= t:
        return 0.0
    if u == v:
        raise DomainError("F diverges on the diagonal u == v")
    Hp = p.Hp
    return p.dH * p.cHp ** 2 * (u * v) ** (0.5 - Hp) * _phi_adaptive(t, u, v, p, q)


# ---------------------------------------------------------------------------
# direct cell integrals (outer tensor Gauss over the cell)
# ---------------------------------------------------------------------------

def _phi_grid(t, U, V, p, depth=8, nodes=12, ratio=4.0):
    """Vectorised inner time integral over flat arrays U, V (entries < t, U != V).

    Fixed composite rule: exact power substitution w = (a - max)^alpha, then
    Gauss-Legendre on geometrically graded panels of [0, (t-max)^alpha] so the
    near-singularity of the smaller argument is resolved even for adjacent
    cells.
    """
    Hp = p.Hp
    alpha = Hp - 0.5
    lo = np.maximum(U, V)
    mn = np.minimum(U, V)
    W = (t - lo) ** alpha
    x, w = _leggauss(nodes)
    fracs = np.concatenate([[0.0], ratio ** -np.arange(depth - 1, -1.0, -1)])
    # panel edges (P+1, N); nodes laid out as (P*Q, N) for one fused pass
    e0 = np.multiply.outer(fracs[:-1], W)
    e1 = np.multiply.outer(fracs[1:], W)
    h2 = 0.5 * (e1 - e0)[:, None, :]
    wg = (np.multiply.outer(np.ones(depth), w))[:, :, None] * h2
    a = lo[None, None, :] + (e0[:, None, :] + h2 * (x[None, :, None] + 1.0)) ** (1.0 / alpha)
    vals = wg * a ** (2 * Hp - 1) * (a - mn[None, None, :]) ** (Hp - 1.5)
    return vals.sum(axis=(0, 1)) / alpha


def cell_weight(m: int, i: int, j: int, n: int, p: HurstParams,
                q: QuadConfig = DEFAULT_QUAD) -> float:
    """Cell coefficient c_ij(m) = n * iint_{cell_i x cell_j} F(m/n, u, v) dv du.

    Direct evaluation order: adaptive tensor-product Gauss over the cell pair
    with the time integral innermost.  For a cell touching zero the factor
    u^(1/2-Hp) is absorbed exactly by integrating in r = u^(3/2-Hp).
    Independent of ``weight_table``'s factorised assembly.
    """
    if i == j:
        raise DomainError("diagonal cells are excluded (the kernel diverges on u == v)")
    if not (1 <= i <= n and 1 <= j <= n and 1 <= m <= n):
        raise DomainError(f"need 1 <= i, j <= n and 1 <= m <= n, got i={i}, j={j}, m={m}, n={n}")
    if i > m or j > m:
        return 0.0
    Hp = p.Hp
    t = m / n
    scale = p.dH * p.cHp ** 2
    pu = 1.5 - Hp if i == 1 else 1.0
    pv = 1.5 - Hp if j == 1 else 1.0
    ua, ub = ((i - 1) / n) ** pu, (i / n) ** pu
    va, vb = ((j - 1) / n) ** pv, (j / n) ** pv
    nodes = q.nodes_per_panel
    x, w = _leggauss(nodes)
    # deepen the fixed inner rule when a tighter-than-default tolerance is asked
    depth = max(8, int(np.ceil(-np.log10(q.rel_tol))))

    def tiles(regions):
        """Tensor Gauss value on each (transformed-coordinate) rectangle."""
        U, V, WW = [], [], []
        for qa, qb, ra, rb in regions:
            hu, hv = 0.5 * (qb - qa), 0.5 * (rb - ra)
            uu = (qa + hu * (x + 1.0)) ** (1.0 / pu)
            vv = (ra + hv * (x + 1.0)) ** (1.0 / pv)
            # transformed directions absorbed their power factor; Jacobian 1/p
            fu = w * hu * (1.0 / pu if pu != 1.0 else uu ** (0.5 - Hp))
            fv = w * hv * (1.0 / pv if pv != 1.0 else vv ** (0.5 - Hp))
            U.append(np.repeat(uu, nodes))
            V.append(np.tile(vv, nodes))
            WW.append(np.outer(fu, fv).ravel())
        G = scale * _phi_grid(t, np.concatenate(U), np.concatenate(V), p, depth=depth)
        G = G.reshape(len(regions), nodes * nodes)
        return (np.concatenate(WW).reshape(len(regions), -1) * G).sum(axis=1)

    def halves(region):
        qa, qb, ra, rb = region
        qm, rm = 0.5 * (qa + qb), 0.5 * (ra + rb)
        return [(qa, qm, ra, rb), (qm, qb, ra, rb),   # u-split pair
                (qa, qb, ra, rm), (qa, qb, rm, rb)]   # v-split pair

    def make_entries(regions, coarse):
        """One work-list entry per region: Richardson error against both
        bisection axes, keeping the split direction that explains more of the
        discrepancy (edge singularities then refine in strips, not tiles)."""
        four = [h for r in regions for h in halves(r)]
        vals = tiles(four).reshape(len(regions), 4)
        out = []
        for r, c, v in zip(regions, coarse, vals):
            fu, fv = float(v[0] + v[1]), float(v[2] + v[3])
            if abs(c - fu) >= abs(c - fv):
                out.append([abs(c - fu), r, fu, halves(r)[:2], v[:2]])
            else:
                out.append([abs(c - fv), r, fv, halves(r)[2:], v[2:]])
        return out

    root = (ua, ub, va, vb)
    segs = make_entries([root], tiles([root]))
    total = segs[0][2]
    err = segs[0][0]
    pops = 0
    # single-axis Richardson is an estimate, not a bound; stop a factor 8 early
    while err > max(0.125 * q.rel_tol * abs(total), q.abs_tol):
        pops += 1
        if pops > 64 * q.max_subdiv:
            raise QuadratureError("cell_weight failed to converge; raise max_subdiv or rel_tol")
        segs.sort(key=lambda s: s[0])
        e, region, fine, children, coarse = segs.pop()
        new = make_entries(children, coarse)
        total += sum(c[2] for c in new) - fine
        err += sum(c[0] for c in new) - e
        segs.extend(new)
    return n * total


# ---------------------------------------------------------------------------
# factorised panel machinery
# ---------------------------------------------------------------------------

class VolterraEngine:
    """Shared quadrature tables for the grid t_m = m/n on [0, 1].

    Per panel k the one-dimensional cell integrals G_i(a) split as
    Abar_i(a) + s_i E(a), where E(a) = int_{(k-1)/n}^a dK(a, u) du carries the
    whole (a - (k-1)/n)^alpha endpoint behavior and s = (0, .., 0, -1, +1).
    Everything is evaluated through the incomplete beta closed form

        int_{u1}^{u2} dK(a, u) du
            = cHp a^(Hp-1/2) [Ix(u2/a) - Ix(u1/a)],
        Ix(x) = B(3/2-Hp, Hp-1/2) betainc(3/2-Hp, Hp-1/2, x).

    Instances are immutable after construction (build-then-freeze) and safe
    to share across readers; acquire them through ``get_engine``.
    """

    def __init__(self, n: int, p: HurstParams, q: QuadConfig = DEFAULT_QUAD):
        if n < 1:
            raise DomainError(f"grid resolution must be positive, got {n}")
        self.n = n
        self.params = p
        self.quad = q
        self._alpha = p.Hp - 0.5
        self._c1 = 1.5 - p.Hp
        self._c2 = p.Hp - 0.5
        self._B = float(special.beta(self._c1, self._c2))
        nodes = q.nodes_per_panel
        self._gl = _leggauss(nodes)
        self._j1 = special.roots_jacobi(nodes, 0.0, self._alpha)
        self._j2 = special.roots_jacobi(nodes, 0.0, 2 * self._alpha)
        self._panels: dict[int, dict] = {}
        self._deltas: dict[int, np.ndarray] = {}
        self._fbm_rows: np.ndarray | None = None
        self._lock = threading.Lock()

    # -- closed-form one-dimensional integrals ------------------------------

    def _Ix(self, x):
        return self._B * special.betainc(self._c1, self._c2, x)

    def _abar(self, k, a):
        """Analytic parts Abar_i(a) for i = 1..k at nodes a; shape (k, len(a))."""
        n, p = self.n, self.params
        pref = p.cHp * a ** (p.Hp - 0.5)
        out = np.zeros((k, a.size))
        if k >= 2:
            idx = np.arange(1, k - 1)
            if idx.size:
                out[: k - 2] = pref * (self._Ix((idx[:, None] / n) / a)
                                       - self._Ix(((idx[:, None] - 1) / n) / a))
            out[k - 2] = pref * (self._B - self._Ix(((k - 2) / n) / a))
        return out

    def _edge(self, k, a):
        """R(a) with E(a) = (a - lo)^alpha R(a); betaincc keeps it stable near lo."""
        p = self.params
        lo = (k - 1) / self.n
        compl = special.betaincc(self._c1, self._c2, lo / a)
        return p.cHp * a ** (p.Hp - 0.5) * self._B * compl / (a - lo) ** self._alpha

    # -- panels --------------------------------------------------------------

    def panel(self, k: int) -> dict:
        """Frozen node data for panel k = [(k-1)/n, k/n]."""
        got = self._panels.get(k)
        if got is not None:
            return got
        with self._lock:
            got = self._panels.get(k)
            if got is not None:
                return got
            n = self.n
            lo = (k - 1) / n
            h2 = 0.5 / n
            x, w = self._gl
            a_gl = lo + h2 * (x + 1.0)
            xj1, wj1 = self._j1
            a_j1 = lo + h2 * (xj1 + 1.0)
            xj2, wj2 = self._j2
            a_j2 = lo + h2 * (xj2 + 1.0)
            data = {
                "A_gl": self._abar(k, a_gl),
                "w_gl": h2 * w,
                "A_j1": self._abar(k, a_j1),
                "w_j1": wj1 * h2 ** (1 + self._alpha),
                "R_j1": self._edge(k, a_j1),
                "w_j2": wj2 * h2 ** (1 + 2 * self._alpha),
                "R_j2": self._edge(k, a_j2),
            }
            for arr in data.values():
                arr.setflags(write=False)
            self._panels[k] = data
            return data

    def delta_table(self, k: int) -> np.ndarray:
        """Panel increment DeltaC_k[i, j] = n dH int_panel G_i G_j da, (k, k)."""
        got = self._deltas.get(k)
        if got is not None:
            return got
        p = self.panel(k)
        A = p["A_gl"]
        T0 = (A * p["w_gl"]) @ A.T
        m1 = (p["A_j1"] * (p["w_j1"] * p["R_j1"])).sum(axis=1)
        e2 = float(np.sum(p["w_j2"] * p["R_j2"] ** 2))
        s = np.zeros(k)
        s[k - 1] = 1.0
        if k >= 2:
            s[k - 2] = -1.0
        C = T0 + np.outer(s, m1) + np.outer(m1, s) + e2 * np.outer(s, s)
        C *= self.n * self.params.dH
        C = 0.5 * (C + C.T)  # exact symmetry (BLAS products are symmetric only to 1 ulp)
        np.fill_diagonal(C, 0.0)
        C.setflags(write=False)
        if self.n <= 512:  # full increment storage is n^3/3 floats; skip beyond desk scale
            with self._lock:
                self._deltas[k] = C
        return C

    def table_matrix(self, m: int) -> np.ndarray:
        """Cumulative coefficient matrix c_ij(m), zero-padded to (n, n)."""
        C = np.zeros((self.n, self.n))
        for k in range(1, m + 1):
            C[:k, :k] += self.delta_table(k)
        return C

    # -- fBm coefficients ----------------------------------------------------

    def fbm_matrix(self) -> np.ndarray:
        """kappa[m-1, i-1] = n int_{cell_i} K(m/n, s) ds, lower triangular (n, n).

        Uses K(t, s) = int_s^t dK(a, s) da, so row m accumulates the same
        panel integrals int_panel G_i da that drive the weight tables.
        """
        if self._fbm_rows is not None:
            return self._fbm_rows
        n = self.n
        T = np.zeros((n, n))
        row = np.zeros(n)
        for k in range(1, n + 1):
            p = self.panel(k)
            base = (p["A_gl"] * p["w_gl"]).sum(axis=1)
            e1 = float(np.sum(p["w_j1"] * p["R_j1"]))
            base[k - 1] += e1
            if k >= 2:
                base[k - 2] -= e1
            row[:k] += base
            T[k - 1] = n * row
        T.setflags(write=False)
        with self._lock:
            self._fbm_rows = T
        return T

    # -- quadratic-form increments for path generation -----------------------

    def quadratic_increments(self, xi: np.ndarray, unit_squares: bool) -> np.ndarray:
        """Increments Z(k/n) - Z((k-1)/n) of the off-diagonal quadratic form.

        xi has shape (M, n).  Per panel k the sum over pairs i != j <= k of
        xi_i xi_j G_i G_j is expanded through the Abar/E split, so each panel
        costs O(M k nodes) flops; passing unit_squares=True (Rademacher noise)
        skips the xi^2 reduction.
        """
        M, n = xi.shape
        if n != self.n:
            raise DomainError(f"noise length {n} does not match grid {self.n}")
        nd = self.n * self.params.dH
        out = np.empty((M, n))
        for k in range(1, n + 1):
            p = self.panel(k)
            xk = xi[:, :k]
            S = xk @ p["A_gl"]
            if unit_squares:
                Qd = np.sum(p["A_gl"] ** 2, axis=0)[None, :]
            else:
                Qd = (xk ** 2) @ (p["A_gl"] ** 2)
            part = ((S * S - Qd) * p["w_gl"]).sum(axis=1)
            S1 = xk @ p["A_j1"]
            if k >= 2:
                xs = xi[:, k - 1] - xi[:, k - 2]
                sq = np.ones(M) if unit_squares else xi[:, k - 2] ** 2
                inner = xs[:, None] * S1 + sq[:, None] * p["A_j1"][k - 2][None, :]
                cross = xi[:, k - 1] * xi[:, k - 2]
            else:
                inner = xi[:, 0][:, None] * S1
                cross = np.zeros(M)
            part += (2.0 * inner * (p["w_j1"] * p["R_j1"])).sum(axis=1)
            part -= 2.0 * cross * float(np.sum(p["w_j2"] * p["R_j2"] ** 2))
            out[:, k - 1] = nd * part
        return out


_ENGINES: dict[tuple, VolterraEngine] = {}
_ENGINES_LOCK = threading.Lock()


def get_engine(n: int, p: HurstParams, q: QuadConfig = DEFAULT_QUAD) -> VolterraEngine:
    """Shared engine cache keyed by (n, H, tolerances, node count)."""
    key = (n, p.H, q.rel_tol, q.abs_tol, q.max_subdiv, q.nodes_per_panel)
    with _ENGINES_LOCK:
        eng = _ENGINES.get(key)
        if eng is None:
            eng = VolterraEngine(n, p, q)
            _ENGINES[key] = eng
    return eng


# ---------------------------------------------------------------------------
# assembled tables
# ---------------------------------------------------------------------------

@dataclass
class WeightTable:
    """Symmetric coefficient table c_ij(m) on an n-grid, zero diagonal."""

    n: int
    m: int
    H: float
    rel_tol: float
    coeffs: np.ndarray

    def save(self, path: str | Path) -> None:
        """Cache file: header line `H,n,m,rel_tol`, then the strict lower
        triangle row-major (one value per line); the diagonal is identically
        zero and the upper triangle follows by symmetry."""
        lines = [f"{self.H!r},{self.n},{self.m},{self.rel_tol!r}"]
        for i in range(1, self.n):
            for j in range(i):
                lines.append(repr(float(self.coeffs[i, j])))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WeightTable":
        lines = Path(path).read_text().splitlines()
        H_s, n_s, m_s, tol_s = lines[0].split(",")
        n = int(n_s)
        coeffs = np.zeros((n, n))
        it = iter(lines[1:])
        for i in range(1, n):
            for j in range(i):
                coeffs[i, j] = coeffs[j, i] = float(next(it))
        return cls(n=n, m=int(m_s), H=float(H_s), rel_tol=float(tol_s), coeffs=coeffs)


def weight_table(m: int, n: int, p: HurstParams, q: QuadConfig = DEFAULT_QUAD) -> WeightTable:
    """Full coefficient table at time index m via the factorised panel assembly."""
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    eng = get_engine(n, p, q)
    coeffs = eng.table_matrix(m)
    coeffs.setflags(write=False)
    return WeightTable(n=n, m=m, H=p.H, rel_tol=q.rel_tol, coeffs=coeffs)
