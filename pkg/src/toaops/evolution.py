"""Split-operator Schrodinger evolution and arrival diagnostics."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import fft

from .errors import DomainError, NumericInstabilityError
from .operator import interpolate

NORM_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class PropagatorConfig:
    """Evolution box ``[-L, L)`` with ``N`` points, time step and horizon.

    ``epsilon`` is the half-width of the arrival neighbourhood and
    ``snapshot_every`` / ``snapshot_points`` set the decimation of the stored
    ``|psi|^2`` surface.
    """

    L: float
    N: int = 2048
    dt: float = 1e-4
    t_max: float = 0.03
    boundary: str = "periodic"
    mask_width: float = 0.0
    epsilon: float = 0.05
    mu: float = 1.0
    hbar: float = 1.0
    snapshot_every: int = 10
    snapshot_points: int = 256

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("box half-width L must be positive")
        if self.N < 256 or self.N & (self.N - 1):
            raise DomainError("N must be a power of two >= 256")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.t_max > 0:
            raise DomainError("t_max must be positive")
        if self.boundary not in ("periodic", "absorbing_mask"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "absorbing_mask" and not 0 < self.mask_width < self.L:
            raise DomainError("absorbing mask needs 0 < mask_width < L")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")

    @classmethod
    def for_mode(cls, l, tau, **overrides):
        """Defaults for evolving a mode of eigenvalue ``tau`` confined to ``[-l, l]``."""
        tau = abs(tau)
        base = dict(L=2.0 * l, N=2048, dt=max(tau / 500.0, 1e-5), t_max=3.0 * tau, epsilon=l / 20.0)
        base.update(overrides)
        return cls(**base)

    @property
    def grid(self):
        return np.linspace(-self.L, self.L, self.N, endpoint=False)

    @property
    def dx(self):
        return 2.0 * self.L / self.N


@dataclass(frozen=True)
class WavePacket:
    grid: np.ndarray
    amplitudes: np.ndarray
    dx: float

    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.dx)


@dataclass
class DynamicsReport:
    times: np.ndarray
    mean_q: np.ndarray
    var_q: np.ndarray
    prob_eps: np.ndarray
    norm: np.ndarray
    origin_density: np.ndarray
    max_density: np.ndarray
    epsilon: float
    t_min_var: float = float("nan")
    t_max_prob: float = float("nan")
    snapshot_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    snapshot_grid: np.ndarray = field(default_factory=lambda: np.empty(0))
    snapshots: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    final: WavePacket = None

    def origin_ratio(self):
        """Largest ``|psi(0,t)|^2 / max_q |psi(q,t)|^2`` over the run."""
        return float(np.max(self.origin_density / self.max_density))


def _normalized(x, psi, dx):
    n = math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    if n == 0:
        raise DomainError("cannot normalize a zero wave packet")
    return WavePacket(grid=x, amplitudes=psi / n, dx=dx)


def embed(mode, cfg):
    """Interpolate an eigenmode onto the uniform grid, zero outside ``[-l, l]``."""
    l = mode.grid.b
    if cfg.L < l:
        raise DomainError(f"box half-width {cfg.L} is smaller than the confinement length {l}")
    x = cfg.grid
    psi = np.zeros(x.size, dtype=complex)
    inside = np.abs(x) <= l
    psi[inside] = interpolate(mode, x[inside])
    return _normalized(x, psi, cfg.dx)


def gaussian_packet(cfg, sigma, q0=0.0, p0=0.0):
    """Gaussian with position spread ``sigma`` (``var_q = sigma^2``)."""
    x = cfg.grid
    psi = np.exp(-((x - q0) ** 2) / (4.0 * sigma ** 2) + 1j * p0 * x / cfg.hbar)
    return _normalized(x, psi, cfg.dx)


def _wavenumbers(cfg):
    return 2.0 * np.pi * fft.fftfreq(cfg.N, d=cfg.dx)


def _mask(cfg, x):
    if cfg.boundary != "absorbing_mask":
        return None
    d = cfg.L - np.abs(x)
    m = np.ones_like(x)
    ramp = d < cfg.mask_width
    m[ramp] = np.sin(0.5 * np.pi * d[ramp] / cfg.mask_width) ** 2
    return m


class SplitStepper:
    """Strang split-step propagator ``e^{-iV dt/2h} e^{-iK dt/h} e^{-iV dt/2h}``.

    ``dt`` may be negative, which runs the evolution backwards.
    """

    def __init__(self, P, cfg, dt=None):
        self.cfg = cfg
        self.dt = cfg.dt if dt is None else float(dt)
        x = cfg.grid
        V = np.zeros_like(x) if P is None else np.asarray(P.V(x), dtype=float) * np.ones_like(x)
        if not np.all(np.isfinite(V)):
            raise DomainError("potential is not finite on the evolution grid")
        k = _wavenumbers(cfg)
        self.half_v = np.exp(-0.5j * V * self.dt / cfg.hbar)
        self.kinetic = np.exp(-1j * cfg.hbar * k * k * self.dt / (2.0 * cfg.mu))
        self.mask = _mask(cfg, x)

    def step(self, psi):
        psi = self.half_v * psi
        psi = fft.ifft(self.kinetic * fft.fft(psi))
        psi = self.half_v * psi
        if self.mask is not None:
            psi = self.mask * psi
        return psi

    def run(self, psi, steps):
        for _ in range(steps):
            psi = self.step(psi)
        return psi


def propagate(packet, P, cfg, t_max=None):
    """Evolve ``packet`` to ``t_max`` recording observables after every step."""
    t_max = cfg.t_max if t_max is None else t_max
    steps = max(1, int(round(t_max / cfg.dt)))
    stepper = SplitStepper(P, cfg)
    x, dx = packet.grid, packet.dx
    near = np.abs(x) <= cfg.epsilon
    origin = int(np.argmin(np.abs(x)))
    stride = max(1, cfg.N // cfg.snapshot_points)
    cols = np.arange(0, cfg.N, stride)

    rec = np.empty((steps + 1, 6))
    snaps, snap_t = [], []
    psi = packet.amplitudes.astype(complex)

    def record(i, psi):
        rho = np.abs(psi) ** 2
        nrm = rho.sum() * dx
        mean = np.sum(x * rho) * dx / nrm
        var = np.sum((x - mean) ** 2 * rho) * dx / nrm
        rec[i] = (nrm, mean, var, rho[near].sum() * dx, rho[origin], rho.max())
        if i % cfg.snapshot_every == 0:
            snaps.append(rho[cols])
            snap_t.append(i * cfg.dt)

    record(0, psi)
    for i in range(1, steps + 1):
        psi = stepper.step(psi)
        record(i, psi)
        if cfg.boundary == "periodic" and abs(rec[i, 0] - 1.0) > NORM_DRIFT_LIMIT:
            raise NumericInstabilityError(
                f"norm drifted to {rec[i, 0]:.12f} at t={i * cfg.dt:.6g}; reduce dt or check the potential"
            )
    times = np.arange(steps + 1) * cfg.dt
    report = DynamicsReport(
        times=times, norm=rec[:, 0], mean_q=rec[:, 1], var_q=rec[:, 2], prob_eps=rec[:, 3],
        origin_density=rec[:, 4], max_density=rec[:, 5], epsilon=cfg.epsilon,
        snapshot_times=np.array(snap_t), snapshot_grid=x[cols], snapshots=np.array(snaps),
        final=WavePacket(grid=x, amplitudes=psi, dx=dx),
    )
    m = arrival_metrics(report)
    report.t_min_var = m.t_min_var
    report.t_max_prob = m.t_max_prob
    return report


@dataclass(frozen=True)
class ArrivalMetrics:
    t_min_var: float
    t_max_prob: float
    min_var: float
    max_prob: float
    sharpness: float
    interior_min_var: bool
    interior_max_prob: bool

    @property
    def interior_arrival(self):
        return self.interior_min_var


def _refine(t, y, i):
    """Vertex of the parabola through samples ``i-1, i, i+1``."""
    if i == 0 or i == len(y) - 1:
        return float(t[i]), float(y[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2.0 * y1 + y2
    if den == 0.0:
        return float(t[i]), float(y1)
    off = 0.5 * (y0 - y2) / den
    h = t[i + 1] - t[i]
    return float(t[i] + off * h), float(y1 - 0.25 * (y0 - y2) * off)


def arrival_metrics(report):
    """Arrival-time markers and the sharpness statistic of a run.

    ``sharpness`` is the peak arrival-neighbourhood probability divided by its
    time average. A minimum of ``var_q`` at either end of the run is reported
    with ``interior_min_var = False``.
    """
    t = np.asarray(report.times)
    if t.size == 0:
        raise DomainError("empty dynamics report")
    var, prob = np.asarray(report.var_q), np.asarray(report.prob_eps)
    iv, ip = int(np.argmin(var)), int(np.argmax(prob))
    t_var, v_min = _refine(t, var, iv)
    t_prob, p_max = _refine(t, prob, ip)
    avg = float(np.trapezoid(prob, t) / (t[-1] - t[0])) if t.size > 1 else float(prob[0])
    sharp = p_max / avg if avg > 0 else float("inf")
    return ArrivalMetrics(t_var, t_prob, v_min, p_max, sharp,
                          0 < iv < t.size - 1, 0 < ip < t.size - 1)
