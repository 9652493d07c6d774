"""Ricci-harmonic flow of G2-structures on reduced tori.

phi is the only evolved quantity; metric, torsion and curvature are rebuilt
from phi at every stage.
"""

from dataclasses import dataclass, field

import numpy as np

from . import g2algebra as ga
from .errors import BlowUp, HorizonExceeded
from .geometry import GridSpec, covariant_derivative, gradient, rough_laplacian
from .torsion import (
    G2State,
    bianchi_residual,
    laplacian_identity_residual,
    nabla_phi_residual,
    scalar_identity_residual,
)

INTEGRATORS = ("RK4", "Euler")
RESIDUALS = {
    "nabla_phi": nabla_phi_residual,
    "bianchi": bianchi_residual,
    "scalar": scalar_identity_residual,
    "laplacian": laplacian_identity_residual,
}


def velocity(phi: np.ndarray, spec: GridSpec) -> np.ndarray:
    """(-Ric + 3 T^tT - |T|^2 g)<>phi + DivT-psi, coordinate components."""
    return G2State(phi, spec).velocity


def lambda_monitor(state: G2State) -> float:
    """max over the grid of (|Rm|^2 + |nabla T|^2 + |T|^4)^(1/2)."""
    return float(np.max(state.lambda_field))


@dataclass
class FlowConfig:
    grid: GridSpec
    dt: float = 1e-3
    t_end: float = 1e-2
    integrator: str = "RK4"
    monitor_stride: int = 1
    lambda_abort: float = 1e6
    guard: float = 0.1
    max_halvings: int = 8
    residuals: tuple = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be >= 1")
        for r in self.residuals:
            if r not in RESIDUALS:
                raise ValueError(f"unknown residual {r!r}")


@dataclass
class MonitorSeries:
    residual_names: tuple = ()
    step: list = field(default_factory=list)
    t: list = field(default_factory=list)
    lambda_max: list = field(default_factory=list)
    volume: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    dt_used: list = field(default_factory=list)

    def record(self, step: int, t: float, state: G2State, dt: float):
        if self.t and t <= self.t[-1]:
            raise ValueError("monitor timestamps must increase")
        self.step.append(step)
        self.t.append(t)
        self.lambda_max.append(lambda_monitor(state))
        self.volume.append(state.volume())
        self.energy.append(state.energy())
        self.dt_used.append(dt)
        for name in self.residual_names:
            self.residuals.setdefault(name, []).append(RESIDUALS[name](state))

    def columns(self):
        return ["step", "t", "lambda_max", "volume", "energy"] + [f"res_{n}" for n in self.residual_names]

    def rows(self):
        for i in range(len(self.t)):
            yield [self.step[i], self.t[i], self.lambda_max[i], self.volume[i], self.energy[i]] + [
                self.residuals[n][i] for n in self.residual_names
            ]


def step(phi: np.ndarray, spec: GridSpec, dt: float, integrator: str = "RK4", k1=None) -> np.ndarray:
    """One explicit step; k1 may be passed in when the first stage is already known."""
    if k1 is None:
        k1 = velocity(phi, spec)
    if integrator == "Euler":
        return phi + dt * k1
    k2 = velocity(phi + 0.5 * dt * k1, spec)
    k3 = velocity(phi + 0.5 * dt * k2, spec)
    k4 = velocity(phi + dt * k3, spec)
    return phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run(phi0: np.ndarray, config: FlowConfig, on_record=None):
    """Integrate to t_end. Returns (phi, MonitorSeries); raises BlowUp on abort."""
    spec = config.grid
    series = MonitorSeries(tuple(config.residuals))
    phi = phi0.copy()
    t = 0.0
    n = 0
    dt = config.dt
    halvings = 0
    while True:
        state = G2State(phi, spec)
        lam = lambda_monitor(state)
        if not np.isfinite(lam) or lam > config.lambda_abort:
            raise BlowUp(t, lam, series, "lambda_max above abort threshold")
        while dt * lam > config.guard:
            if halvings >= config.max_halvings:
                raise BlowUp(t, lam, series, "step-size guard exhausted")
            dt *= 0.5
            halvings += 1
        done = t >= config.t_end * (1 - 1e-12)
        if n % config.monitor_stride == 0 or done:
            series.record(n, t, state, dt)
            if on_record is not None:
                on_record(n, t, phi, series)
        if done:
            return phi, series
        h = min(dt, config.t_end - t)
        phi = step(phi, spec, h, config.integrator, k1=state.velocity)
        n += 1
        t = t + h


# ----------------------------------------------------------------- checks


def _three_states(phi_c, spec, dt, integrator):
    """States at t_c - dt, t_c, t_c + dt, the first by one step backwards."""
    back = step(phi_c, spec, -dt, integrator)
    fwd = step(phi_c, spec, dt, integrator)
    return G2State(back, spec), G2State(phi_c, spec), G2State(fwd, spec)


def advance(phi0, spec, t, integrator="RK4", max_dt=1e-4):
    """phi at time t using equal steps no larger than max_dt (independent of any test dt)."""
    n = int(np.ceil(t / max_dt - 1e-12))
    phi = phi0
    for _ in range(n):
        phi = step(phi, spec, t / n, integrator)
    return phi


def torsion_rhs_f(s: G2State) -> np.ndarray:
    """Right-hand side of the torsion evolution equation, frame components."""
    T = s.T_f
    Ric = s.Ric_f
    Rm = s.Rm_f
    phi = s.phi_f
    lapT = s.f(rough_laplacian(s.T, s.curv), 2)
    DTtT = s.f(covariant_derivative(s.c(s.TtT_f, 2), s.curv), 3)
    DT2 = s.f(gradient(s.T_norm2, s.spec), 1)
    return (
        lapT
        - np.einsum("nim,nmj->nij", T, Ric)
        - np.einsum("nim,nmj->nij", Ric, T)
        + 3.0 * np.einsum("nim,npm,npj->nij", T, T, T)
        - s.T_norm2[:, None, None] * T
        + 3.0 * np.einsum("zmni,zmnj->zij", DTtT, phi)
        - np.einsum("nm,nmij->nij", DT2, phi)
        + np.einsum("naijq,naq->nij", Rm, T)
        - np.einsum("nab,naic,nbcj->nij", T, s.DT_f, phi)
        - 0.5 * np.einsum("naibc,nal,nlbcj->nij", Rm, T, s.psi_f)
    )


def scalar_rhs(s: G2State) -> np.ndarray:
    lapR = rough_laplacian(s.R, s.curv)
    lapT2 = rough_laplacian(s.T_norm2, s.curv)
    ttt = s.c(s.TtT_f, 2)
    d2 = s.f(covariant_derivative(covariant_derivative(ttt, s.curv), s.curv), 4)
    divdiv = np.einsum("njiij->n", d2)
    ric2 = np.einsum("nij,nij->n", s.Ric_f, s.Ric_f)
    rt = np.einsum("nij,nij->n", s.Ric_f, s.TtT_f)
    return lapR + 6 * lapT2 + 6 * divdiv + 2 * ric2 - 6 * rt + 2 * s.T_norm2 * s.R


def volume_rhs(s: G2State) -> np.ndarray:
    from .geometry import divergence

    tb = s.torsion
    n = tb.norms
    div_vt = divergence(tb.VT, s.curv)
    return -(10 * n["T1"] + 9 * n["T7"] + 3 * n["T14"] + 3 * n["T27"] - 2 * div_vt) * s.vol


QUANTITIES = ("metric", "inverse_metric", "volume", "scalar", "torsion")


def evolution_residual_field(
    quantity: str, phi0: np.ndarray, spec: GridSpec, dt: float, integrator="RK4", t_centre: float = 0.0
):
    """(residual field, scale) for a centred time difference about t_centre.

    The centre state is fixed independently of dt, so the residual splits
    into a spatial part that does not depend on dt plus an O(dt^2) part.
    """
    phi_c = advance(phi0, spec, t_centre, integrator) if t_centre > 0 else phi0
    s0, s1, s2 = _three_states(phi_c, spec, dt, integrator)
    if quantity == "metric":
        dq = s1.f((s2.g - s0.g) / (2 * dt), 2)
        rhs = 2.0 * s1.h_f
    elif quantity == "inverse_metric":
        # contravariant components go to the frame with P^T
        dginv = (s2.ginv - s0.ginv) / (2 * dt)
        P = s1.frame.P
        dq = np.einsum("nia,njb,nij->nab", P, P, dginv)
        rhs = -2.0 * s1.h_f
    elif quantity == "volume":
        dq = (s2.vol - s0.vol) / (2 * dt)
        rhs = volume_rhs(s1)
    elif quantity == "scalar":
        dq = (s2.R - s0.R) / (2 * dt)
        rhs = scalar_rhs(s1)
    elif quantity == "torsion":
        dq = s1.f((s2.T - s0.T) / (2 * dt), 2)
        rhs = torsion_rhs_f(s1)
    else:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")
    scale = float(np.max(np.abs(rhs)))
    return dq - rhs, scale


def evolution_consistency(quantity: str, phi0: np.ndarray, config: FlowConfig, t_centre: float = 0.0) -> float:
    """Max-norm of (centred time difference - right-hand side), relative to the RHS scale."""
    res, scale = evolution_residual_field(quantity, phi0, config.grid, config.dt, config.integrator, t_centre)
    return float(np.max(np.abs(res)) / max(scale, 1e-300))


def dt_study(quantity: str, phi0: np.ndarray, spec: GridSpec, dt: float, integrator="RK4", t_centre: float = 0.0):
    """Split the evolution residual at dt into its temporal and spatial parts.

    With r(dt) = E_h + C dt^2 + ..., the differences r(2dt) - r(dt) and
    r(dt) - r(dt/2) isolate the temporal part; their ratio gives the observed
    order in dt. Richardson extrapolation (4 r(dt/2) - r(dt)) / 3 leaves E_h.
    All norms are max-norms relative to the RHS scale.
    """
    r = {}
    scale = None
    for m in (2.0, 1.0, 0.5):
        r[m], sc = evolution_residual_field(quantity, phi0, spec, m * dt, integrator, t_centre)
        scale = sc if m == 1.0 else scale
    d1 = float(np.max(np.abs(r[2.0] - r[1.0])))
    d2 = float(np.max(np.abs(r[1.0] - r[0.5])))
    spatial = (4.0 * r[0.5] - r[1.0]) / 3.0
    return {
        "relative": float(np.max(np.abs(r[1.0]))) / scale,
        "dt_order": float(np.log2(d1 / d2)),
        "temporal": d2 / scale,
        "spatial": float(np.max(np.abs(spatial))) / scale,
    }


def doubling_diagnostic(series: MonitorSeries):
    """First time Lambda doubles and the constant C = 1/(t Lambda(0)); None if it never does."""
    lam0 = series.lambda_max[0]
    for t, lam in zip(series.t, series.lambda_max):
        if lam >= 2 * lam0 and t > 0:
            return t, 1.0 / (t * lam0)
    return None


# ---------------------------------------------------- nearly-G2 reduction


def nearly_g2_rate(c: float, s: float) -> float:
    # phi = s phi_ng: c scales by s^(-1/3), velocity = -30 c^2 s^(1/3) phi_ng
    return -30.0 * c * c * np.cbrt(s)


def nearly_g2_exact(c: float, t):
    return np.power(np.maximum(1.0 - 20.0 * c * c * np.asarray(t, dtype=float), 0.0), 1.5)


def _rk4_scalar(c, s, dt):
    k1 = nearly_g2_rate(c, s)
    s2 = s + 0.5 * dt * k1
    k2 = nearly_g2_rate(c, s2)
    s3 = s + 0.5 * dt * k2
    k3 = nearly_g2_rate(c, s3)
    s4 = s + dt * k3
    k4 = nearly_g2_rate(c, s4)
    new = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return new, min(s2, s3, s4, new)


def nearly_g2_ode(c: float, dt: float, t_end: float):
    """RK4 for the scale factor s(t) of phi(t) = s(t) phi_ng; rows (t, s_num, s_exact)."""
    if c != 0.0 and t_end >= 1.0 / (20.0 * c * c):
        raise HorizonExceeded(t_end, 1.0 / (20.0 * c * c))
    nsteps = int(round(t_end / dt))
    s = 1.0
    rows = [(0.0, 1.0, 1.0)]
    for n in range(1, nsteps + 1):
        s, _ = _rk4_scalar(c, s, dt)
        t = n * dt
        rows.append((t, s, float(nearly_g2_exact(c, t))))
    return np.array(rows)


def nearly_g2_horizon(c: float, dt: float, t_max: float = 1.0) -> float:
    """Time at which the numerical solution first leaves s > 0."""
    s = 1.0
    n = 0
    while n * dt < t_max:
        new, low = _rk4_scalar(c, s, dt)
        if low <= 0.0 or not np.isfinite(low):
            return (n + 1) * dt
        s = new
        n += 1
    return float("inf")


def velocity_decomposition(phi: np.ndarray, spec: GridSpec):
    """decompose_3form of the velocity next to the expected (h, DivT), coordinates."""
    s = G2State(phi, spec)
    h, X = ga.decompose_3form(s.velocity, s.pw)
    return (h, X), (s.c(s.h_f, 2), s.c(s.DivT_f, 1))
