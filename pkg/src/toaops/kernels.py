"""Time kernel factors in canonical coordinates ``u = q + q'``, ``v = q - q'``.

Evaluators
----------
weyl_tkf      Weyl-quantized kernel factor (one quadrature).
supra_tkf     Exact solution of the time kernel equation for separable
              potentials. The default ``"reduced"`` method integrates the
              inner ``v'`` variable in closed form, leaving one quadrature;
              ``"double"`` keeps the nested two-dimensional layout.
series_tkf    Truncated double power series from the coefficient recurrence.
correction_tn Quantum corrections ``T_n`` to the Weyl kernel (n <= 2).

All evaluators accept scalars or broadcastable arrays for ``u`` and ``v``.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate

from . import _backend
from .errors import ConvergenceError, DepthError, DomainError
from .potentials import taylor_coefficients
from .specialfn import gauss_legendre, hyp0f1


@dataclass(frozen=True)
class KernelEvalConfig:
    inner_rule_order: int = 48
    subdivisions: int = 1
    target_tol: float = 1e-10
    method: str = "reduced"
    panel_length: float = 4.0

    def __post_init__(self):
        if self.inner_rule_order < 2:
            raise DomainError("inner_rule_order must be >= 2")
        if self.subdivisions < 1:
            raise DomainError("subdivisions must be >= 1")
        if self.method not in ("reduced", "double"):
            raise DomainError(f"unknown supra method {self.method!r}")


DEFAULT_CONFIG = KernelEvalConfig()


def _coupling(mu, hbar):
    return mu / (2.0 * hbar * hbar)


def _panel_count(x, cfg):
    x = abs(float(x))
    if x > cfg.panel_length:
        return max(cfg.subdivisions, math.ceil(x / cfg.panel_length))
    return cfg.subdivisions


@lru_cache(maxsize=128)
def _unit_panels(order, npanels):
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    edges = np.linspace(0.0, 1.0, npanels + 1)
    t, w = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r = gauss_legendre(order, a, b)
        t.append(r.nodes)
        w.append(r.weights)
    return np.concatenate(t), np.concatenate(w)


def _grouped(u, cfg):
    """Yield ``(index, t, w)`` groups sharing a panel count along ``[0, u]``."""
    counts = np.array([_panel_count(x, cfg) for x in u]) if u.size else np.array([], dtype=int)
    for npan in np.unique(counts):
        idx = np.nonzero(counts == npan)[0]
        t, w = _unit_panels(cfg.inner_rule_order, int(npan))
        yield idx, t, w


def _chunks(idx, width, budget=2_000_000):
    step = max(1, budget // max(width, 1))
    for a in range(0, idx.size, step):
        yield idx[a:a + step]


def _broadcast(u, v):
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return u.shape, u.ravel(), v.ravel()


def _finish(shape, out):
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Weyl

def weyl_tkf(P, u, v, cfg=None, mu=1.0, hbar=1.0):
    """``(1/4) int_0^u ds 0F1(;1; c v^2 [V(u/2) - V(s/2)])`` with ``c = mu/2hbar^2``."""
    cfg = cfg or DEFAULT_CONFIG
    c = _coupling(mu, hbar)
    shape, uu, vv = _broadcast(u, v)
    out = 0.25 * uu.copy()
    live = (vv != 0.0) & (uu != 0.0)
    ul, vl = uu[live], vv[live]
    res = np.empty(ul.size)
    for idx, t, w in _grouped(ul, cfg):
        for sub in _chunks(idx, t.size):
            us = ul[sub][:, None]
            s = us * t
            z = c * (vl[sub] ** 2)[:, None] * (P.V(0.5 * us) - P.V(0.5 * s))
            g = np.broadcast_to(us * w, z.shape)
            res[sub] = 0.25 * _backend.weighted_rowsum(1.0, z, g)
    out[live] = res
    return _finish(shape, out)


# ---------------------------------------------------------------------------
# supraquantized closed form

def supra_tkf(P, u, v, cfg=None, mu=1.0, hbar=1.0):
    """Closed-form solution of the time kernel equation for a separable ``P``.

    ``T(u,v) = u/4 + c int_0^v dv' G(v') int_0^u du' F(u') (u'/4)
    0F1(;1; c G~(v,v') F~(u,u'))``. Boundary values ``T(u,0) = u/4`` and
    ``T(0,v) = 0`` hold exactly.
    """
    cfg = cfg or DEFAULT_CONFIG
    if cfg.method == "double":
        return supra_tkf_double(P, u, v, cfg, mu, hbar)
    c = _coupling(mu, hbar)
    shape, uu, vv = _broadcast(u, v)
    out = 0.25 * uu.copy()
    live = (vv != 0.0) & (uu != 0.0)
    ul, vl = uu[live], vv[live]
    # int_0^v G(v') f(G~(v,v')) dv' = int_0^{G~(v,0)} f(t) dt, and
    # int_0^X 0F1(;1;a t) dt = X 0F1(;2;a X).
    g0 = P.G_anti(vl, 0.0) if ul.size else np.empty(0)
    res = np.empty(ul.size)
    for idx, t, w in _grouped(ul, cfg):
        for sub in _chunks(idx, t.size):
            us = ul[sub][:, None]
            s = us * t
            z = (c * g0[sub])[:, None] * P.F_anti(us, s)
            g = (us * w) * P.F(s) * (0.25 * s)
            res[sub] = _backend.weighted_rowsum(2.0, z, g)
    out[live] = 0.25 * ul + c * g0 * res
    return _finish(shape, out)


def supra_tkf_double(P, u, v, cfg=None, mu=1.0, hbar=1.0):
    """Nested two-dimensional quadrature of the closed form.

    Each axis uses a fixed Gauss-Legendre rule, split into unit panels once
    the interval exceeds ``cfg.panel_length``.
    """
    cfg = cfg or DEFAULT_CONFIG
    c = _coupling(mu, hbar)
    shape, uu, vv = _broadcast(u, v)
    out = 0.25 * uu.copy()
    for i in np.nonzero((uu != 0.0) & (vv != 0.0))[0]:
        ui, vi = uu[i], vv[i]
        tu, wu = _unit_panels(cfg.inner_rule_order, _unit_panel_count(ui, cfg))
        tv, wv = _unit_panels(cfg.inner_rule_order, _unit_panel_count(vi, cfg))
        up, wup = ui * tu, ui * wu
        vp, wvp = vi * tv, vi * wv
        fu = wup * P.F(up) * (0.25 * up)
        gv = wvp * P.G(vp)
        z = c * P.G_anti(vi, vp)[:, None] * P.F_anti(ui, up)[None, :]
        inner = hyp0f1(1.0, z.ravel()).reshape(z.shape) @ fu
        out[i] = 0.25 * ui + c * np.dot(gv, inner)
    return _finish(shape, out)


def _unit_panel_count(x, cfg):
    x = abs(float(x))
    if x > cfg.panel_length:
        return max(cfg.subdivisions, math.ceil(x))
    return cfg.subdivisions


# ---------------------------------------------------------------------------
# power series

@dataclass(frozen=True)
class SeriesConfig:
    """Truncated double power series ``sum alpha^(s)_{m,j} c^(j-s) u^m v^(2j)``.

    ``a_coeffs[i]`` is the Taylor coefficient of ``q^(i+1)``. ``M_u`` bounds
    the power of ``u``, ``M_j`` the power of ``v^2``, and ``s_max`` the
    correction depth (``None`` keeps every order reachable within ``M_j``).
    """

    a_coeffs: tuple
    M_u: int = 30
    M_j: int = 30
    s_max: int = None

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", tuple(float(a) for a in self.a_coeffs))
        if self.M_u < 1 or self.M_j < 1:
            raise DomainError("series truncations must be >= 1")
        if not all(math.isfinite(a) for a in self.a_coeffs):
            raise DomainError("series coefficients must be finite")
        if self.s_max is not None and self.s_max < 0:
            raise DomainError("s_max must be non-negative")

    @property
    def depth(self):
        return self.M_j - 1 if self.s_max is None else min(self.s_max, self.M_j - 1)

    @classmethod
    def for_potential(cls, P, M_u=30, M_j=30, s_max=None):
        return cls(tuple(taylor_coefficients(P, M_u + 2 * M_j + 1)), M_u, M_j, s_max)


@lru_cache(maxsize=32)
def _alpha_table(a_coeffs, M_u, M_j, depth):
    """``alpha[s, m, j]`` from the coefficient recurrence.

    Rows ``m = 0`` and column ``j = 0`` come only from the initial data
    ``alpha^(0)_{m,0} = delta_{m,1}/4``; out-of-range indices read as zero.
    """
    S = depth
    alpha = np.zeros((S + 1, M_u + 1, M_j + 1))
    if M_u >= 1:
        alpha[0, 1, 0] = 0.25
    a = np.zeros(M_u + 2 * (S + 1) + 2)
    n = min(len(a_coeffs), a.size - 1)
    a[1:n + 1] = a_coeffs[:n]
    m = np.arange(M_u + 1)
    for j in range(1, M_j + 1):
        acc = np.zeros((S + 1, M_u + 1))
        for r in range(0, min(S, j - 1) + 1):
            src = alpha[: S + 1 - r, :, j - r - 1]  # alpha^(s-r)_{., j-r-1}
            # shift d = l - 2r >= 1; target m takes source m - d
            for d in range(1, M_u):
                l = d + 2 * r
                if l >= a.size or a[l] == 0.0:
                    continue
                coef = a[l] / 2.0 ** (l - 1) * math.comb(l, 2 * r + 1)
                acc[r:, d:] += coef * src[:, : M_u + 1 - d]
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha[:, 1:, j] = acc[:, 1:] / (2.0 * j * m[1:])
    return alpha


def _series_terms(S, u, v, mu, hbar):
    c = _coupling(mu, hbar)
    alpha = _alpha_table(S.a_coeffs, S.M_u, S.M_j, S.depth)
    s_idx = np.arange(S.depth + 1)[:, None, None]
    j_idx = np.arange(S.M_j + 1)[None, None, :]
    m_idx = np.arange(S.M_u + 1)[None, :, None]
    return alpha * c ** (j_idx - s_idx) * float(u) ** m_idx * float(v) ** (2 * j_idx)


def series_tkf(S, u, v, mu=1.0, hbar=1.0, return_error=False):
    """Sum of the truncated series at one point.

    With ``return_error`` the magnitude of the last retained shell
    (``m = M_u`` or ``j = M_j``) plus a rounding allowance is returned as well.
    Raises ``ConvergenceError`` if that shell does not decay.
    """
    terms = _series_terms(S, u, v, mu, hbar)
    value = float(terms.sum())
    last = np.abs(terms[:, -1, :]).sum() + np.abs(terms[:, :-1, -1]).sum()
    prev = np.abs(terms[:, -2, :-1]).sum() + np.abs(terms[:, :-2, -2]).sum()
    total = np.abs(terms).sum()
    if last > 1e-6 * max(total, 1e-300) and last >= prev:
        raise ConvergenceError(
            f"series terms do not decay at the truncation boundary (|last shell| = {last:.3e})"
        )
    err = float(last + 8 * np.finfo(float).eps * total * (S.M_u + S.M_j))
    return (value, err) if return_error else value


def series_tkf_array(S, u, v, mu=1.0, hbar=1.0):
    """Truncated series at many points, without the decay check."""
    c = _coupling(mu, hbar)
    alpha = _alpha_table(S.a_coeffs, S.M_u, S.M_j, S.depth)
    s_idx = np.arange(S.depth + 1)[:, None, None]
    j_idx = np.arange(S.M_j + 1)[None, None, :]
    coeff = np.sum(alpha * c ** (j_idx - s_idx), axis=0)
    shape, uu, vv = _broadcast(u, v)
    upow = uu[:, None] ** np.arange(S.M_u + 1)
    vpow = (vv * vv)[:, None] ** np.arange(S.M_j + 1)
    return _finish(shape, np.einsum("pm,mj,pj->p", upow, coeff, vpow))


def series_orders(S, u, v, mu=1.0, hbar=1.0):
    """Per-order contributions: entry ``s`` sums the ``alpha^(s)`` terms.

    Entry 0 is the series of the Weyl kernel, entry ``n`` that of ``T_n``.
    """
    return _series_terms(S, u, v, mu, hbar).sum(axis=(1, 2))


# ---------------------------------------------------------------------------
# quantum corrections

def correction_tn(P, n, u, v, cfg=None, mu=1.0, hbar=1.0, max_order=2):
    """Correction ``T_n`` to the Weyl kernel by nested quadrature.

    ``T_n(u,v) = c sum_{r=1..n} 1/((2r+1)! 4^r) int_0^u ds V^(2r+1)(s/2)
    int_0^v dw w^(2r+1) T_{n-r}(s,w) 0F1(;1; c (v^2-w^2)[V(u/2)-V(s/2)])``
    with ``T_0`` the Weyl kernel. ``n = 2`` costs ``order^5`` evaluations
    per point and its argument binding inside the recursion is not
    independently confirmed; treat it as experimental.
    """
    if int(n) != n or n < 1:
        raise DomainError("correction order must be a positive integer")
    if n > max_order:
        raise DepthError(f"T_{n} exceeds the supported correction depth ({max_order})")
    if P.derivative is None:
        raise DomainError("corrections need analytic derivatives of V")
    cfg = cfg or DEFAULT_CONFIG
    shape, uu, vv = _broadcast(u, v)
    out = _tn(P, int(n), uu, vv, cfg, mu, hbar)
    return _finish(shape, out)


def _tn(P, n, uu, vv, cfg, mu, hbar):
    if n == 0:
        return np.asarray(weyl_tkf(P, uu, vv, cfg, mu, hbar), dtype=float).reshape(uu.shape)
    c = _coupling(mu, hbar)
    rule = gauss_legendre(cfg.inner_rule_order, 0.0, 1.0)
    t, w = rule.nodes, rule.weights
    p = t.size
    # (point, s-node, w-node) grids
    S = uu[:, None, None] * t[None, :, None] * np.ones((1, 1, p))
    W = vv[:, None, None] * t[None, None, :] * np.ones((1, p, 1))
    ws = uu[:, None, None] * w[None, :, None]
    ww = vv[:, None, None] * w[None, None, :]
    z = c * (vv[:, None, None] ** 2 - W ** 2) * (P.V(0.5 * uu)[:, None, None] - P.V(0.5 * S))
    Gf = hyp0f1(1.0, z.ravel()).reshape(z.shape)
    total = np.zeros(uu.shape)
    for r in range(1, n + 1):
        inner = _tn(P, n - r, S.ravel(), W.ravel(), cfg, mu, hbar).reshape(S.shape)
        dv = P.odd_derivative(r, 0.5 * S)
        integrand = dv * W ** (2 * r + 1) * inner * Gf
        total += np.sum(ws * ww * integrand, axis=(1, 2)) / (math.factorial(2 * r + 1) * 4.0 ** r)
    return c * total


# ---------------------------------------------------------------------------
# evaluator objects

class KernelEvaluator:
    """A kernel factor ``(u, v) -> T`` bound to its potential and constants."""

    def __init__(self, kind, P=None, mu=1.0, hbar=1.0, cfg=None, series=None, order=None):
        if kind not in ("weyl", "supra", "series", "correction", "free"):
            raise DomainError(f"unknown kernel kind {kind!r}")
        if kind in ("weyl", "supra", "correction") and P is None:
            raise DomainError(f"{kind} kernel needs a potential")
        if kind == "series" and series is None:
            raise DomainError("series kernel needs a SeriesConfig")
        self.kind = kind
        self.P = P
        self.mu = float(mu)
        self.hbar = float(hbar)
        self.cfg = cfg or DEFAULT_CONFIG
        self.series = series
        self.order = order

    def __call__(self, u, v):
        if self.kind == "weyl":
            return weyl_tkf(self.P, u, v, self.cfg, self.mu, self.hbar)
        if self.kind == "supra":
            return supra_tkf(self.P, u, v, self.cfg, self.mu, self.hbar)
        if self.kind == "correction":
            return correction_tn(self.P, self.order, u, v, self.cfg, self.mu, self.hbar)
        if self.kind == "free":
            shape, uu, vv = _broadcast(u, v)
            return _finish(shape, 0.25 * uu)
        return series_tkf_array(self.series, u, v, self.mu, self.hbar)

    def __repr__(self):
        name = self.P.name if self.P is not None else "-"
        return f"KernelEvaluator(kind={self.kind!r}, potential={name!r}, mu={self.mu}, hbar={self.hbar})"


# ---------------------------------------------------------------------------
# diagnostics

def tke_residual(T, P, u, v, h, mu=1.0, hbar=1.0):
    """Finite-difference residual of the time kernel equation at ``(u, v)``.

    ``|-(2 hbar^2/mu) d2T/dudv + [V((u+v)/2) - V((u-v)/2)] T|`` with the
    four-point central stencil of step ``h``.
    """
    if not h > 0:
        raise DomainError("step h must be positive")
    us = np.array([u + h, u + h, u - h, u - h, u])
    vs = np.array([v + h, v - h, v + h, v - h, v])
    vals = np.asarray(T(us, vs), dtype=float)
    mixed = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h * h)
    return float(abs(-(2.0 * hbar * hbar / mu) * mixed + float(P.delta(u, v)) * vals[4]))


class _NonArrival:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NonArrival"

    def __bool__(self):
        return False


NonArrival = _NonArrival()


def classical_toa(P, q, p, mu=1.0):
    """Classical arrival time at the origin from phase-space point ``(q, p)``.

    Returns ``NonArrival`` when the particle meets a turning point before
    reaching the origin.
    """
    if p == 0:
        raise DomainError("classical arrival time needs p != 0")
    q, p = float(q), float(p)
    if q == 0.0:
        return 0.0
    H = p * p / (2 * mu) + float(P.V(q))
    grid = np.linspace(0.0, q, 4001)
    gap = H - np.asarray(P.V(grid), dtype=float)
    if np.any(gap <= 0.0):
        return NonArrival
    scale = max(abs(H), p * p / (2 * mu))
    sign = -math.copysign(1.0, p) * math.sqrt(mu / 2.0)
    if gap.min() < 1e-6 * scale:
        # q' = q sin^2(theta) absorbs a square-root singularity at q' = 0
        def f(theta):
            qp = q * math.sin(theta) ** 2
            return 2 * q * math.sin(theta) * math.cos(theta) / math.sqrt(H - float(P.V(qp)))

        val, _ = integrate.quad(f, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-12, limit=200)
        return sign * val
    val, _ = integrate.quad(lambda x: 1.0 / math.sqrt(H - float(P.V(x))), 0.0, q,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return sign * val
