"""Coarse-grained time-of-arrival operator on ``[-l, l]``.

The integral operator ``(T phi)(q) = (mu / i hbar) int sgn(q - q') T(q + q', q - q') phi(q') dq'``
is discretized on Gauss-Legendre nodes with symmetric weight scaling,
giving a purely imaginary Hermitian matrix whose eigenvalues come in
``+-tau`` pairs.
"""

from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor
import warnings

import numpy as np

from .errors import DomainError, NumericInstabilityError, SelectionError
from .kernels import DEFAULT_CONFIG, KernelEvaluator
from .specialfn import QuadRule, barycentric_weights, gauss_legendre

PARITY_THRESHOLD = 0.99
NODAL_THRESHOLD = 0.05
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class ToaMatrix:
    grid: QuadRule
    entries: np.ndarray
    mu: float
    hbar: float
    kernel_kind: str
    half_width: float

    @property
    def n(self):
        return len(self.grid)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass(frozen=True)
class EigenMode:
    tau: float
    amplitudes: np.ndarray
    grid: QuadRule
    index: int
    parity: str = "none"
    nodal: str = "nonnodal"
    degenerate: bool = False
    parity_overlap: float = field(default=float("nan"))
    origin_ratio: float = field(default=float("nan"))

    def norm(self):
        return float(np.sum(self.grid.weights * np.abs(self.amplitudes) ** 2))


def build_matrix(T, l, n, mu=None, hbar=None, workers=1):
    """Symmetrized Nystrom matrix of the operator with kernel factor ``T``.

    ``entries[j, k] = (mu / i hbar) sqrt(w_j w_k) sgn(q_j - q_k) T(q_j + q_k, q_j - q_k)``.
    Only the strict upper triangle is evaluated; the lower one is its exact
    conjugate, and the diagonal is zero.
    """
    if not l > 0:
        raise DomainError("half-width l must be positive")
    if int(n) != n or n < 2:
        raise DomainError("matrix order n must be an integer >= 2")
    n = int(n)
    mu = getattr(T, "mu", 1.0) if mu is None else float(mu)
    hbar = getattr(T, "hbar", 1.0) if hbar is None else float(hbar)
    grid = gauss_legendre(n, -l, l)
    q, w = grid.nodes, grid.weights
    jj, kk = np.triu_indices(n, 1)
    u, v = q[jj] + q[kk], q[jj] - q[kk]
    if workers > 1 and jj.size > 1000:
        parts = np.array_split(np.arange(jj.size), 4 * workers)
        with ThreadPoolExecutor(workers) as pool:
            vals = np.concatenate(list(pool.map(lambda ix: np.atleast_1d(T(u[ix], v[ix])), parts)))
    else:
        vals = np.atleast_1d(np.asarray(T(u, v), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise NumericInstabilityError("kernel produced non-finite values during matrix assembly")
    # q_j < q_k for j < k, so sgn(q_j - q_k) = -1 on the upper triangle
    S = np.zeros((n, n))
    S[jj, kk] = -np.sqrt(w[jj] * w[kk]) * vals
    S -= S.T
    entries = (mu / hbar) * (-1j) * S
    kind = getattr(T, "kind", "custom")
    return ToaMatrix(grid=grid, entries=entries, mu=mu, hbar=hbar, kernel_kind=kind, half_width=float(l))


def _reflect(vecs):
    return vecs[::-1]


def spectrum(M):
    """Eigenmodes of ``M`` sorted by ascending ``tau``.

    Clusters of eigenvalues closer than ``1e-12 max|tau|`` are rotated into
    eigenvectors of the reflection ``q -> -q`` and flagged ``degenerate``.
    """
    try:
        tau, vecs = np.linalg.eigh(M.entries)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.norm(M.entries, 2)
        raise NumericInstabilityError(f"eigensolver failed ({exc}); matrix 2-norm {cond:.3e}") from exc
    scale = max(np.max(np.abs(tau)), 1e-300)
    degenerate = np.zeros(tau.size, dtype=bool)
    start = 0
    while start < tau.size:
        stop = start + 1
        while stop < tau.size and tau[stop] - tau[stop - 1] < DEGENERACY_TOL * scale:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            R = block.conj().T @ _reflect(block)
            _, rot = np.linalg.eigh(0.5 * (R + R.conj().T))
            vecs[:, start:stop] = block @ rot
            degenerate[start:stop] = True
        start = stop
    w = M.grid.weights
    order = np.argsort(np.abs(tau), kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    modes = []
    for i in range(tau.size):
        phi = vecs[:, i] / np.sqrt(w)
        phi = phi / np.sqrt(np.sum(w * np.abs(phi) ** 2))
        big = np.argmax(np.abs(phi))
        phi = phi * (abs(phi[big]) / phi[big])
        modes.append(EigenMode(tau=float(tau[i]), amplitudes=phi, grid=M.grid,
                               index=int(rank[i]), degenerate=bool(degenerate[i])))
    return modes


def interpolate(mode, q):
    """Barycentric Lagrange interpolant of the mode samples at ``q``."""
    nodes = mode.grid.nodes
    lo, hi = mode.grid.a, mode.grid.b
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q_arr < lo - 1e-15 * abs(lo)) or np.any(q_arr > hi + 1e-15 * abs(hi)):
        raise DomainError(f"interpolation point outside [{lo}, {hi}]")
    bw = barycentric_weights(len(nodes))
    diff = q_arr[:, None] - nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = bw / diff
        out = (c @ mode.amplitudes) / c.sum(axis=1)
    rows, cols = np.nonzero(exact)
    out[rows] = mode.amplitudes[cols]
    return complex(out[0]) if np.ndim(q) == 0 else out


def classify(mode, P=None):
    """Fill the parity and nodal labels of ``mode``.

    Parity comes from the overlap ``sum_j w_j conj(phi(q_j)) phi(-q_j)``; the
    mode is nodal when ``|phi(0)| / max|phi| < 0.05``.
    """
    w = mode.grid.weights
    phi = mode.amplitudes
    overlap = float(np.real(np.sum(w * np.conj(phi) * phi[::-1])))
    if overlap >= PARITY_THRESHOLD:
        parity = "even"
    elif overlap <= -PARITY_THRESHOLD:
        parity = "odd"
    else:
        parity = "none"
        if mode.degenerate:
            warnings.warn(f"mode at tau={mode.tau:.6g} lies in a degenerate cluster; parity is undetermined",
                          RuntimeWarning, stacklevel=2)
        elif P is not None and P.parity == "even":
            warnings.warn(f"mode at tau={mode.tau:.6g} has no definite parity for an even potential",
                          RuntimeWarning, stacklevel=2)
    ratio = abs(interpolate(mode, 0.0)) / np.max(np.abs(phi))
    nodal = "nodal" if ratio < NODAL_THRESHOLD else "nonnodal"
    return replace(mode, parity=parity, nodal=nodal, parity_overlap=overlap, origin_ratio=float(ratio))


def classified_spectrum(M, P=None):
    return [classify(m, P) for m in spectrum(M)]


def select_mode(modes, tau, nodal=None, parity=None, positive=True):
    """Mode whose eigenvalue is nearest ``tau`` within the requested class."""
    pool = [m for m in modes
            if (nodal is None or m.nodal == nodal)
            and (parity is None or m.parity == parity)
            and (not positive or m.tau > 0)]
    if not pool:
        raise SelectionError(f"no mode with nodal={nodal!r}, parity={parity!r}")
    return min(pool, key=lambda m: abs(m.tau - tau))


@dataclass(frozen=True)
class ParityPartnerReport:
    spectral_mismatch: float
    eigenfunction_mismatch: float
    modes_compared: int


def parity_partner_check(P, l, n, kind="supra", mu=1.0, hbar=1.0, cfg=None, gap_tol=1e-6):
    """Compare the operators built from ``V(q)`` and ``V(-q)``.

    Eigenvalues are matched in sorted order. Eigenfunctions are compared as
    ``min_theta ||phi_minus(q) - e^{i theta} phi_plus(-q)||`` only for modes
    whose eigenvalue is separated from its neighbours by more than
    ``gap_tol * max|tau|``, since closer ones are not individually determined.
    """
    cfg = cfg or DEFAULT_CONFIG
    Tp = KernelEvaluator(kind, P, mu, hbar, cfg)
    Tm = KernelEvaluator(kind, P.reflected(), mu, hbar, cfg)
    plus = spectrum(build_matrix(Tp, l, n))
    minus = spectrum(build_matrix(Tm, l, n))
    tp = np.array([m.tau for m in plus])
    tm = np.array([m.tau for m in minus])
    spectral = float(np.max(np.abs(tp - tm)))
    scale = np.max(np.abs(tp))
    gaps = np.minimum(np.diff(tp, prepend=-np.inf), np.diff(tp, append=np.inf))
    w = plus[0].grid.weights
    worst, count = 0.0, 0
    for i in np.nonzero(gaps > gap_tol * scale)[0]:
        a = plus[i].amplitudes[::-1]
        b = minus[i].amplitudes
        ov = np.sum(w * np.conj(a) * b)
        phase = ov / abs(ov) if ov != 0 else 1.0
        diff = b - phase * a
        worst = max(worst, float(np.sqrt(np.sum(w * np.abs(diff) ** 2))))
        count += 1
    return ParityPartnerReport(spectral, worst, count)
