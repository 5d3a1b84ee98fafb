"""Separable interaction potentials.

A potential ``V`` is separable when ``V((u+v)/2) - V((u-v)/2) = F(u) G(v)``.
Catalog entries carry analytic divisors, divisor primitives (so the kernel
quadratures never integrate ``F`` or ``G`` numerically) and analytic
derivatives of every order.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional
import warnings

import numpy as np

from .errors import DomainError
from .specialfn import gauss_legendre

CATALOG_NAMES = (
    "linear",
    "quadratic",
    "exp",
    "power_exp",
    "exp_pair",
    "power_pair",
    "exp_pair_squared",
    "power_pair_squared",
    "sine",
    "cosine",
    "free",
)


@dataclass(frozen=True)
class Potential:
    """An interaction potential with its separable divisors.

    ``F_prim`` and ``G_prim`` are primitives of the divisors; the antiderivative
    differences ``F_anti(u, u') = F_prim(u) - F_prim(u')`` are built from them.
    ``derivative(n, x)`` returns the n-th derivative of ``V``. Both are optional
    for user-supplied potentials, in which case numerical fallbacks are used.
    """

    name: str
    params: dict
    V: Callable
    F: Callable
    G: Callable
    h: Optional[Callable] = None
    F_prim: Optional[Callable] = None
    G_prim: Optional[Callable] = None
    derivative: Optional[Callable] = None
    formulas: dict = field(default_factory=dict)

    def delta(self, u, v):
        """``V((u+v)/2) - V((u-v)/2)``."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.V(0.5 * (u + v)) - self.V(0.5 * (u - v))

    def F_anti(self, u, u_prime):
        if self.F_prim is not None:
            return self.F_prim(u) - self.F_prim(u_prime)
        return _numeric_antiderivative(self.F, u, u_prime)

    def G_anti(self, v, v_prime):
        if self.G_prim is not None:
            return self.G_prim(v) - self.G_prim(v_prime)
        return _numeric_antiderivative(self.G, v, v_prime)

    def odd_derivative(self, m, x):
        """``V^(2m+1)(x)``; requires an analytic ``derivative``."""
        if self.derivative is None:
            raise DomainError(f"potential {self.name!r} has no analytic derivatives")
        return self.derivative(2 * m + 1, x)

    @property
    def parity(self):
        return parity_of(self)

    def reflected(self):
        """The potential ``q -> V(-q)`` with divisors ``-F(-u)`` and ``G(v)``."""
        V, F, G, h = self.V, self.F, self.G, self.h
        Fp = self.F_prim
        deriv = self.derivative
        return Potential(
            name=f"{self.name}_reflected",
            params=dict(self.params),
            V=lambda q: V(-np.asarray(q, dtype=float)),
            F=lambda u: -F(-np.asarray(u, dtype=float)),
            G=G,
            h=None if h is None else (lambda u, v: h(-np.asarray(u, dtype=float), v)),
            # int F-(s) ds = int -F(-s) ds = F_prim(-s)
            F_prim=None if Fp is None else (lambda u: Fp(-np.asarray(u, dtype=float))),
            G_prim=self.G_prim,
            derivative=None if deriv is None else (lambda n, x: (-1) ** n * deriv(n, -np.asarray(x, dtype=float))),
        )


def _numeric_antiderivative(f, x, x_prime, order=40):
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    rule = gauss_legendre(order, -1.0, 1.0)
    half = 0.5 * (x - x_prime)
    mid = 0.5 * (x + x_prime)
    pts = mid[..., None] + half[..., None] * rule.nodes
    return half * np.sum(rule.weights * f(pts), axis=-1)


# ---------------------------------------------------------------------------
# catalog

def _need(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise DomainError(f"missing parameter(s): {', '.join(missing)}")
    out = []
    for k in keys:
        try:
            val = float(params[k])
        except (TypeError, ValueError):
            raise DomainError(f"parameter {k} must be a real number, got {params[k]!r}") from None
        if not math.isfinite(val):
            raise DomainError(f"parameter {k} must be finite")
        out.append(val)
    return out


def _nonzero(name, value):
    if value == 0.0:
        raise DomainError(f"parameter {name} must be nonzero")


def _log_base(params):
    (c,) = _need(params, "c")
    if c <= 0.0 or c == 1.0:
        raise DomainError(f"power-law base c must satisfy c > 0, c != 1 (got {c})")
    return math.log(c)


def _cos_shift(n, x):
    """cos(x + n pi / 2) without rounding the phase."""
    r = n % 4
    return (np.cos(x), -np.sin(x), -np.cos(x), np.sin(x))[r]


def _linear(p):
    (V0,) = _need(p, "V0")
    return dict(
        V=lambda q: V0 * np.asarray(q, dtype=float),
        F=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        G=lambda v: V0 * np.asarray(v, dtype=float),
        h=lambda u, v: V0 * np.asarray(u, dtype=float) / 2 + 0.0 * np.asarray(v, dtype=float),
        F_prim=lambda u: np.asarray(u, dtype=float),
        G_prim=lambda v: 0.5 * V0 * np.asarray(v, dtype=float) ** 2,
        derivative=lambda n, x: (V0 * np.asarray(x, dtype=float) if n == 0
                                 else V0 * np.ones_like(np.asarray(x, dtype=float)) if n == 1
                                 else np.zeros_like(np.asarray(x, dtype=float))),
        formulas=dict(V="V0*q", F="1", G="V0*v", h="V0*u/2"),
    )


def _quadratic(p):
    (V0,) = _need(p, "V0")

    def deriv(n, x):
        x = np.asarray(x, dtype=float)
        if n == 0:
            return V0 * x * x
        if n == 1:
            return 2 * V0 * x
        if n == 2:
            return 2 * V0 * np.ones_like(x)
        return np.zeros_like(x)

    return dict(
        V=lambda q: V0 * np.asarray(q, dtype=float) ** 2,
        F=lambda u: np.asarray(u, dtype=float),
        G=lambda v: V0 * np.asarray(v, dtype=float),
        h=lambda u, v: 0.25 * V0 * (np.asarray(u, dtype=float) ** 2 + np.asarray(v, dtype=float) ** 2),
        F_prim=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        G_prim=lambda v: 0.5 * V0 * np.asarray(v, dtype=float) ** 2,
        derivative=deriv,
        formulas=dict(V="V0*q^2", F="u", G="V0*v", h="V0*(u^2+v^2)/4"),
    )


def _exponential(V0, lam):
    return dict(
        V=lambda q: V0 * np.exp(lam * np.asarray(q, dtype=float)),
        F=lambda u: np.exp(0.5 * lam * np.asarray(u, dtype=float)),
        G=lambda v: 2 * V0 * np.sinh(0.5 * lam * np.asarray(v, dtype=float)),
        h=lambda u, v: V0 * np.exp(0.5 * lam * np.asarray(u, dtype=float)) * np.cosh(0.5 * lam * np.asarray(v, dtype=float)),
        F_prim=lambda u: (2 / lam) * np.exp(0.5 * lam * np.asarray(u, dtype=float)),
        G_prim=lambda v: (4 * V0 / lam) * np.cosh(0.5 * lam * np.asarray(v, dtype=float)),
        derivative=lambda n, x: V0 * lam ** n * np.exp(lam * np.asarray(x, dtype=float)),
    )


def _exp(p):
    V0, kappa = _need(p, "V0", "kappa")
    _nonzero("kappa", kappa)
    d = _exponential(V0, kappa)
    d["formulas"] = dict(V="V0*exp(kappa*q)", F="exp(kappa*u/2)", G="2*V0*sinh(kappa*v/2)",
                         h="V0*exp(kappa*u/2)*cosh(kappa*v/2)")
    return d


def _power_exp(p):
    V0, kappa = _need(p, "V0", "kappa")
    _nonzero("kappa", kappa)
    d = _exponential(V0, kappa * _log_base(p))
    d["formulas"] = dict(V="V0*c^(kappa*q)", F="c^(kappa*u/2)", G="2*V0*sinh(kappa*ln(c)*v/2)",
                         h="V0*c^(kappa*u/2)*cosh(kappa*ln(c)*v/2)")
    return d


def _pair(A, B, lam):
    def deriv(n, x):
        x = np.asarray(x, dtype=float)
        return lam ** n * (A * np.exp(lam * x) + (-1) ** n * B * np.exp(-lam * x))

    return dict(
        V=lambda q: A * np.exp(lam * np.asarray(q, dtype=float)) + B * np.exp(-lam * np.asarray(q, dtype=float)),
        F=lambda u: A * np.exp(0.5 * lam * np.asarray(u, dtype=float)) - B * np.exp(-0.5 * lam * np.asarray(u, dtype=float)),
        G=lambda v: 2 * np.sinh(0.5 * lam * np.asarray(v, dtype=float)),
        h=lambda u, v: ((A * np.exp(0.5 * lam * np.asarray(u, dtype=float)) + B * np.exp(-0.5 * lam * np.asarray(u, dtype=float)))
                        * np.cosh(0.5 * lam * np.asarray(v, dtype=float))),
        F_prim=lambda u: (2 / lam) * (A * np.exp(0.5 * lam * np.asarray(u, dtype=float))
                                      + B * np.exp(-0.5 * lam * np.asarray(u, dtype=float))),
        G_prim=lambda v: (4 / lam) * np.cosh(0.5 * lam * np.asarray(v, dtype=float)),
        derivative=deriv,
    )


def _exp_pair(p):
    A, B, kappa = _need(p, "A", "B", "kappa")
    _nonzero("kappa", kappa)
    d = _pair(A, B, kappa)
    d["formulas"] = dict(V="A*exp(kappa*q) + B*exp(-kappa*q)", F="A*exp(kappa*u/2) - B*exp(-kappa*u/2)",
                         G="2*sinh(kappa*v/2)", h="(A*exp(kappa*u/2) + B*exp(-kappa*u/2))*cosh(kappa*v/2)")
    return d


def _power_pair(p):
    A, B, kappa = _need(p, "A", "B", "kappa")
    _nonzero("kappa", kappa)
    d = _pair(A, B, kappa * _log_base(p))
    d["formulas"] = dict(V="A*c^(kappa*q) + B*c^(-kappa*q)", F="A*c^(kappa*u/2) - B*c^(-kappa*u/2)",
                         G="2*sinh(kappa*ln(c)*v/2)",
                         h="(A*c^(kappa*u/2) + B*c^(-kappa*u/2))*cosh(kappa*ln(c)*v/2)")
    return d


def _pair_squared(A, B, lam):
    def deriv(n, x):
        x = np.asarray(x, dtype=float)
        out = (2 * lam) ** n * (A * A * np.exp(2 * lam * x) + (-1) ** n * B * B * np.exp(-2 * lam * x))
        return out + 2 * A * B if n == 0 else out

    return dict(
        V=lambda q: (A * np.exp(lam * np.asarray(q, dtype=float)) + B * np.exp(-lam * np.asarray(q, dtype=float))) ** 2,
        F=lambda u: A * A * np.exp(lam * np.asarray(u, dtype=float)) - B * B * np.exp(-lam * np.asarray(u, dtype=float)),
        G=lambda v: 2 * np.sinh(lam * np.asarray(v, dtype=float)),
        h=lambda u, v: ((A * A * np.exp(lam * np.asarray(u, dtype=float)) + B * B * np.exp(-lam * np.asarray(u, dtype=float)))
                        * np.cosh(lam * np.asarray(v, dtype=float)) + 2 * A * B),
        F_prim=lambda u: (A * A * np.exp(lam * np.asarray(u, dtype=float))
                          + B * B * np.exp(-lam * np.asarray(u, dtype=float))) / lam,
        G_prim=lambda v: (2 / lam) * np.cosh(lam * np.asarray(v, dtype=float)),
        derivative=deriv,
    )


def _exp_pair_squared(p):
    A, B, kappa = _need(p, "A", "B", "kappa")
    _nonzero("kappa", kappa)
    d = _pair_squared(A, B, kappa)
    d["formulas"] = dict(V="(A*exp(kappa*q) + B*exp(-kappa*q))^2", F="A^2*exp(kappa*u) - B^2*exp(-kappa*u)",
                         G="2*sinh(kappa*v)", h="(A^2*exp(kappa*u) + B^2*exp(-kappa*u))*cosh(kappa*v) + 2*A*B")
    return d


def _power_pair_squared(p):
    A, B, kappa = _need(p, "A", "B", "kappa")
    _nonzero("kappa", kappa)
    d = _pair_squared(A, B, kappa * _log_base(p))
    d["formulas"] = dict(V="(A*c^(kappa*q) + B*c^(-kappa*q))^2", F="A^2*c^(kappa*u) - B^2*c^(-kappa*u)",
                         G="2*sinh(kappa*ln(c)*v)",
                         h="(A^2*c^(kappa*u) + B^2*c^(-kappa*u))*cosh(kappa*ln(c)*v) + 2*A*B")
    return d


def _sine(p):
    V0, k = _need(p, "V0", "k")
    _nonzero("k", k)
    return dict(
        V=lambda q: V0 * np.sin(k * np.asarray(q, dtype=float)),
        F=lambda u: np.cos(0.5 * k * np.asarray(u, dtype=float)),
        G=lambda v: 2 * V0 * np.sin(0.5 * k * np.asarray(v, dtype=float)),
        h=lambda u, v: V0 * np.sin(0.5 * k * np.asarray(u, dtype=float)) * np.cos(0.5 * k * np.asarray(v, dtype=float)),
        F_prim=lambda u: (2 / k) * np.sin(0.5 * k * np.asarray(u, dtype=float)),
        G_prim=lambda v: -(4 * V0 / k) * np.cos(0.5 * k * np.asarray(v, dtype=float)),
        # sin(y) = cos(y - pi/2)
        derivative=lambda n, x: V0 * k ** n * _cos_shift(n - 1, k * np.asarray(x, dtype=float)),
        formulas=dict(V="V0*sin(k*q)", F="cos(k*u/2)", G="2*V0*sin(k*v/2)", h="V0*sin(k*u/2)*cos(k*v/2)"),
    )


def _cosine(p):
    V0, k = _need(p, "V0", "k")
    _nonzero("k", k)
    return dict(
        V=lambda q: V0 * np.cos(k * np.asarray(q, dtype=float)),
        F=lambda u: np.sin(0.5 * k * np.asarray(u, dtype=float)),
        G=lambda v: -2 * V0 * np.sin(0.5 * k * np.asarray(v, dtype=float)),
        h=lambda u, v: V0 * np.cos(0.5 * k * np.asarray(u, dtype=float)) * np.cos(0.5 * k * np.asarray(v, dtype=float)),
        F_prim=lambda u: -(2 / k) * np.cos(0.5 * k * np.asarray(u, dtype=float)),
        G_prim=lambda v: (4 * V0 / k) * np.cos(0.5 * k * np.asarray(v, dtype=float)),
        derivative=lambda n, x: V0 * k ** n * _cos_shift(n, k * np.asarray(x, dtype=float)),
        formulas=dict(V="V0*cos(k*q)", F="sin(k*u/2)", G="-2*V0*sin(k*v/2)", h="V0*cos(k*u/2)*cos(k*v/2)"),
    )


def _free(p):
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    return dict(
        V=zero,
        F=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        G=zero,
        h=lambda u, v: np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape),
        F_prim=lambda u: np.asarray(u, dtype=float),
        G_prim=zero,
        derivative=lambda n, x: zero(x),
        formulas=dict(V="0", F="1", G="0", h="0", note="kernel reduces to T = u/4"),
    )


_BUILDERS = {
    "linear": (_linear, ("V0",)),
    "quadratic": (_quadratic, ("V0",)),
    "exp": (_exp, ("V0", "kappa")),
    "power_exp": (_power_exp, ("V0", "kappa", "c")),
    "exp_pair": (_exp_pair, ("A", "B", "kappa")),
    "power_pair": (_power_pair, ("A", "B", "kappa", "c")),
    "exp_pair_squared": (_exp_pair_squared, ("A", "B", "kappa")),
    "power_pair_squared": (_power_pair_squared, ("A", "B", "kappa", "c")),
    "sine": (_sine, ("V0", "k")),
    "cosine": (_cosine, ("V0", "k")),
    "free": (_free, ()),
}


def catalog_params(name):
    """Parameter names required by a catalog entry."""
    if name not in _BUILDERS:
        raise DomainError(f"unknown potential {name!r}; known: {', '.join(CATALOG_NAMES)}")
    return _BUILDERS[name][1]


def catalog_lookup(name, params=None):
    """Build the catalog potential ``name`` with the given parameters."""
    params = dict(params or {})
    builder, required = _BUILDERS.get(name, (None, None))
    if builder is None:
        raise DomainError(f"unknown potential {name!r}; known: {', '.join(CATALOG_NAMES)}")
    extra = set(params) - set(required)
    if extra:
        raise DomainError(f"unexpected parameter(s) for {name}: {', '.join(sorted(extra))}")
    parts = builder(params)
    kept = {k: float(params[k]) for k in required}
    return Potential(name=name, params=kept, **parts)


def taylor_coefficients(P, count):
    """``a_s = V^(s)(0) / s!`` for ``s = 1..count`` (``a_0`` is dropped)."""
    if P.derivative is None:
        raise DomainError(f"potential {P.name!r} has no analytic derivatives")
    return [float(P.derivative(s, 0.0)) / math.factorial(s) for s in range(1, count + 1)]


# ---------------------------------------------------------------------------
# separability diagnostics

def separability_residual(P, u, v):
    """``|V((u+v)/2) - V((u-v)/2) - F(u) G(v)|``."""
    return np.abs(P.delta(u, v) - P.F(u) * P.G(v))


@dataclass
class Theorem1Report:
    max_h_asymmetry: float
    max_G_oddness_violation: float
    max_h_catalog_mismatch: Optional[float] = None


def theorem1_check(P, samples):
    """Symmetry conditions on the remainder ``h = V((u+v)/2) - F G / 2``.

    ``samples`` is an array of ``(u, v)`` pairs. When the potential carries a
    tabulated ``h``, its deviation from the computed remainder is reported too.
    """
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    u, v = samples[:, 0], samples[:, 1]

    def remainder(uu, vv):
        return P.V(0.5 * (uu + vv)) - 0.5 * P.F(uu) * P.G(vv)

    h_plus = remainder(u, v)
    asym = np.max(np.abs(h_plus - remainder(u, -v)))
    odd = np.max(np.abs(P.G(v) + P.G(-v)))
    mismatch = None
    if P.h is not None:
        mismatch = float(np.max(np.abs(P.h(u, v) - h_plus)))
    return Theorem1Report(float(asym), float(odd), mismatch)


@dataclass
class Theorem2Report:
    separable: bool
    c: list
    G_reconstruction_error: float
    skipped: int = 0
    spreads: list = field(default_factory=list)


def _fd_derivative(f, n, x, h=1e-2):
    """Central difference of order ``n`` with one Richardson step."""
    def central(step):
        ks = np.arange(n + 1)
        coef = np.array([(-1) ** k * math.comb(n, k) for k in ks], dtype=float)
        offsets = (0.5 * n - ks) * step
        return np.sum(coef * f(x + offsets)) / step ** n

    return (4.0 * central(h / 2) - central(h)) / 3.0


def theorem2_test(P, m_max, u_samples, rel_tol=1e-10, v_grid=None):
    """Constancy test of ``V^(2m+1)(u/2) / F(u)`` and reconstruction of ``G``.

    Samples where ``|F(u)| < 1e-8 max|F|`` are skipped. ``G`` is rebuilt from
    the estimated constants and compared with the divisor on ``v in [-2, 2]``.
    """
    if m_max < 0:
        raise DomainError("m_max must be non-negative")
    u_samples = np.asarray(u_samples, dtype=float)
    Fu = np.asarray(P.F(u_samples), dtype=float)
    keep = np.abs(Fu) >= 1e-8 * np.max(np.abs(Fu)) if np.any(Fu != 0) else np.zeros_like(Fu, dtype=bool)
    if not keep.any():
        raise DomainError("divisor F vanishes at every sample")
    us, Fs = u_samples[keep], Fu[keep]

    if P.derivative is not None:
        def odd_deriv(m, x):
            return np.asarray(P.odd_derivative(m, x), dtype=float)
    else:
        if m_max > 4:
            warnings.warn("finite-difference derivatives beyond order 9 are unreliable", RuntimeWarning)

        def odd_deriv(m, x):
            return np.array([_fd_derivative(P.V, 2 * m + 1, xi) for xi in np.atleast_1d(x)])

    cs, spreads = [], []
    separable = True
    for m in range(m_max + 1):
        est = odd_deriv(m, 0.5 * us) / Fs
        scale = np.max(np.abs(est))
        spread = float(np.max(est) - np.min(est))
        spreads.append(spread)
        if spread > rel_tol * scale:
            separable = False
        cs.append(float(np.mean(est)))

    if v_grid is None:
        v_grid = np.linspace(-2.0, 2.0, 81)
    G_rec = np.zeros_like(v_grid)
    for m, cm in enumerate(cs):
        G_rec += cm * v_grid ** (2 * m + 1) / (4.0 ** m * math.factorial(2 * m + 1))
    err = float(np.max(np.abs(G_rec - P.G(v_grid))))
    return Theorem2Report(separable, cs, err, skipped=int((~keep).sum()), spreads=spreads)


_PARITY_GRID = np.linspace(0.05, 3.0, 60)


def _classify_parity(f, grid=_PARITY_GRID, rel_tol=1e-12):
    a = np.asarray(f(grid), dtype=float)
    b = np.asarray(f(-grid), dtype=float)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    if np.max(np.abs(a - b)) <= rel_tol * scale:
        return "even"
    if np.max(np.abs(a + b)) <= rel_tol * scale:
        return "odd"
    return "none"


def corollary_violations(P):
    """Divisor-parity consequences of ``V`` parity that fail on the sample grid."""
    pv = _classify_parity(P.V)
    if np.max(np.abs(P.G(_PARITY_GRID))) == 0.0:
        return []  # F is arbitrary when G vanishes identically
    pf = _classify_parity(P.F)
    out = []
    if pv == "even" and pf != "odd":
        out.append("V even but F not odd")
    if pv == "odd" and pf != "even":
        out.append("V odd but F not even")
    return out


def parity_of(P):
    """Parity of ``V`` by sampling ``V(q)`` against ``V(-q)``."""
    parity = _classify_parity(P.V)
    bad = corollary_violations(P)
    if bad:
        warnings.warn(f"{P.name}: {'; '.join(bad)}", RuntimeWarning)
    return parity
