"""Time integration of the two-component system and of its difference form.

The evolution is the nonlocal formulation: the fourth-order inertia
operator is inverted, leaving a transport term plus the smoothing
multiplier d/dx (1 - d^2/dx^2)^{-2} applied to a quadratic bracket.
Everything runs on the periodic grid with 2/3-rule dealiasing, classical
RK4 in time, and a per-step norm ledger out of which the existence-time
and size-bound probes are built.

Status/ledger conventions: a trajectory records (t, ||u||_{H^s},
||rho||_{H^{s-2}}, y = sum) every step.  Integration stops early either
when y explodes past a threshold (or values go non-finite), or when the
top third of the retained spectral band carries more than a set fraction
of the H^s energy, meaning the grid can no longer represent the
solution.  Ledger entries are finite unless the run aborted.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Field,
    Grid,
    dealias_truncate,
    dx,
    helmholtz_inverse_dx,
    product,
    sobolev_norm,
    sup_norm,
)

__all__ = [
    "SystemParams", "State", "Trajectory", "DifferenceState",
    "DifferenceTrajectory", "SizeBoundReport", "SeamWarning",
    "COMPLETED", "BLOWUP", "RESOLUTION_EXHAUSTED",
    "rhs", "step_rk4", "solve", "t0_lower_bound", "size_bound_check",
    "fit_min_cs", "diff_rhs", "diff_solve",
    "save_ledger_csv", "save_snapshot", "load_snapshot",
]

COMPLETED = "completed"
BLOWUP = "blow-up-detected"
RESOLUTION_EXHAUSTED = "resolution-exhausted"


class SeamWarning(UserWarning):
    """Initial data does not decay at the periodic seam."""


@dataclass(frozen=True)
class SystemParams:
    """Coefficients of the system plus the energy-estimate constant c_s.

    b = 1 is excluded (the equation family is defined for b != 1); c_s
    is the unquantified constant of the existence-time bound, kept as an
    input with default 1 and refined empirically by fit_min_cs.
    """

    b: float = 2.0
    kappa: float = 1.0
    alpha: float = 0.0
    c_s: float = 1.0

    def __post_init__(self):
        if self.b == 1.0:
            raise ValueError("parameter b = 1 is excluded")
        if not self.c_s > 0.0:
            raise ValueError(f"c_s must be positive, got {self.c_s}")
        for name in ("b", "kappa", "alpha", "c_s"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"parameter {name} must be finite")


@dataclass(frozen=True)
class State:
    u: Field
    rho: Field
    t: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.rho.grid:
            raise ValueError("u and rho must share one grid")
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ValueError(f"time must be finite and nonnegative, got {self.t}")

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass(frozen=True)
class Trajectory:
    """Solver output: thinned states plus the per-step norm ledger."""

    states: tuple
    times: np.ndarray
    norm_u: np.ndarray
    norm_rho: np.ndarray
    y: np.ndarray
    status: str
    s: float
    params: SystemParams

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def initial(self) -> State:
        return self.states[0]

    @property
    def final(self) -> State:
        return self.states[-1]

    def is_dense(self) -> bool:
        """True when a state was stored at every ledger time."""
        return len(self.states) == len(self.times)


@dataclass(frozen=True)
class DifferenceState:
    w: Field
    eta: Field
    t: float = 0.0

    def __post_init__(self):
        if self.w.grid != self.eta.grid:
            raise ValueError("w and eta must share one grid")


@dataclass(frozen=True)
class DifferenceTrajectory:
    states: tuple
    times: np.ndarray
    r: float
    defect: float


def _check_finite(state: State):
    if not (np.isfinite(state.u.coefficients).all()
            and np.isfinite(state.rho.coefficients).all()):
        raise ValueError("non-finite values in state fields")


def rhs(state: State, params: SystemParams) -> tuple[Field, Field]:
    """Right-hand side of the nonlocal form; all products dealiased."""
    _check_finite(state)
    u, rho = state.u, state.rho
    b, kap, al = params.b, params.kappa, params.alpha

    ux = dx(u, 1)
    uxx = dx(u, 2)
    uxxx = dx(u, 3)

    bracket = (
        (0.5 * b) * product(u, u, dealias=True)
        + (3.0 - b) * product(ux, ux, dealias=True)
        - (0.5 * (b + 5.0)) * product(uxx, uxx, dealias=True)
        + (b - 5.0) * product(ux, uxxx, dealias=True)
        + (0.5 * kap) * product(rho, rho, dealias=True)
        - al * u
    )
    du = -product(u, ux, dealias=True) - helmholtz_inverse_dx(bracket)
    drho = (
        -product(u, dx(rho, 1), dealias=True)
        - (b - 1.0) * product(ux, rho, dealias=True)
    )
    return du, drho


def step_rk4(state: State, params: SystemParams, dt: float) -> State:
    """One classical Runge-Kutta step of the full system."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    u, rho, t = state.u, state.rho, state.t
    k1u, k1r = rhs(state, params)
    k2u, k2r = rhs(State(u + (0.5 * dt) * k1u, rho + (0.5 * dt) * k1r, t + 0.5 * dt), params)
    k3u, k3r = rhs(State(u + (0.5 * dt) * k2u, rho + (0.5 * dt) * k2r, t + 0.5 * dt), params)
    k4u, k4r = rhs(State(u + dt * k3u, rho + dt * k3r, t + dt), params)
    sixth = dt / 6.0
    return State(
        u + sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        rho + sixth * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
        t + dt,
    )


def _seam_check(state: State, tol: float, policy: str):
    """Initial data must vanish near the periodic seam (x = 0 == L)."""
    if policy == "ignore":
        return
    grid = state.grid
    edge = grid.x < 0.1 * grid.length
    edge |= grid.x > 0.9 * grid.length
    worst = max(
        float(np.abs(state.u.values[edge]).max()),
        float(np.abs(state.rho.values[edge]).max()),
    )
    if worst > tol:
        msg = (f"initial data reaches {worst:.3e} within 10% of the domain "
               f"edge (tolerance {tol:.1e}); periodic wrap-around will pollute the run")
        if policy == "error":
            raise ValueError(msg)
        warnings.warn(msg, SeamWarning)


def _tail_fraction(u: Field, s: float) -> float:
    """H^s energy fraction in the top third of the dealiased band.

    The 2/3 rule empties the literal top third of the grid spectrum, so
    the resolution test watches the retained band |k| <= N//3 instead.
    """
    kept = u.grid.n // 3
    lo = int(math.ceil(2.0 * kept / 3.0))
    weights = (1.0 + u.grid.xi**2) ** s
    density = weights * np.abs(u.coefficients) ** 2
    total = float(density.sum())
    if total == 0.0:
        return 0.0
    mask = np.abs(u.grid.modes) >= lo
    return float(density[mask].sum()) / total


def _cfl_dt(u: Field, cfl: float) -> float:
    return cfl * u.grid.dx / max(1.0, sup_norm(u))


def solve(initial: State, params: SystemParams, s: float, t_end: float,
          dt_policy="cfl", cfl: float = 0.3, recompute_every: int = 16,
          blowup_threshold: float = 1e6, tail_limit: float = 0.01,
          store_stride: int = 1, seam_tol: float = 1e-10,
          seam_policy: str = "warn") -> Trajectory:
    """Integrate from initial.t to t_end recording the norm ledger.

    dt_policy is either "cfl" (dt = cfl * dx / max(1, sup|u|), refreshed
    every `recompute_every` steps) or a positive float requesting that
    fixed dt; either way the step is rounded down so t_end is hit
    exactly.  Initial data is dealiased once up front; the quadratic
    terms keep every later state inside the retained band.
    """
    if not t_end > initial.t:
        raise ValueError(f"t_end {t_end} must exceed initial time {initial.t}")
    if seam_policy not in ("warn", "error", "ignore"):
        raise ValueError(f"unknown seam policy {seam_policy!r}")
    if isinstance(dt_policy, str):
        if dt_policy != "cfl":
            raise ValueError(f"unknown dt policy {dt_policy!r}")
        fixed_dt = None
    else:
        fixed_dt = float(dt_policy)
        if not (fixed_dt > 0.0 and math.isfinite(fixed_dt)):
            raise ValueError(f"fixed dt must be a positive real, got {dt_policy!r}")

    _check_finite(initial)
    _seam_check(initial, seam_tol, seam_policy)

    state = State(dealias_truncate(initial.u), dealias_truncate(initial.rho), initial.t)
    times, nus, nrs, ys = [], [], [], []
    states = [state]

    def record(st: State) -> float:
        nu = sobolev_norm(st.u, s)
        nr = sobolev_norm(st.rho, s - 2.0)
        times.append(st.t)
        nus.append(nu)
        nrs.append(nr)
        ys.append(nu + nr)
        return nu + nr

    status = COMPLETED
    y0 = record(state)
    if not (math.isfinite(y0) and y0 <= blowup_threshold):
        status = BLOWUP
    elif _tail_fraction(state.u, s) > tail_limit:
        status = RESOLUTION_EXHAUSTED

    step_count = 0
    while status == COMPLETED and state.t < t_end:
        remaining = t_end - state.t
        raw = fixed_dt if fixed_dt is not None else _cfl_dt(state.u, cfl)
        nsteps = max(1, math.ceil(remaining / raw - 1e-12))
        dt = remaining / nsteps
        for j in range(min(recompute_every, nsteps)):
            # land on t_end exactly rather than accumulating roundoff
            if nsteps - j == 1:
                dt = t_end - state.t
            try:
                state = step_rk4(state, params, dt)
            except ValueError:
                status = BLOWUP
                break
            step_count += 1
            yv = record(state)
            if store_stride > 0 and (step_count % store_stride == 0 or state.t >= t_end):
                states.append(state)
            if not (math.isfinite(yv) and yv <= blowup_threshold):
                status = BLOWUP
                break
            if _tail_fraction(state.u, s) > tail_limit:
                status = RESOLUTION_EXHAUSTED
                break

    if states[-1] is not state:
        states.append(state)
    return Trajectory(
        states=tuple(states),
        times=np.asarray(times),
        norm_u=np.asarray(nus),
        norm_rho=np.asarray(nrs),
        y=np.asarray(ys),
        status=status,
        s=s,
        params=params,
    )


def t0_lower_bound(initial: State, s: float, params: SystemParams) -> float:
    """Guaranteed existence time (1/(2 c_s)) log(1 + 1/y0).

    y0 = ||u0||_{H^s} + ||rho0||_{H^{s-2}}.  Zero data has no finite
    bound; math.inf is returned as the documented sentinel.
    """
    y0 = sobolev_norm(initial.u, s) + sobolev_norm(initial.rho, s - 2.0)
    if y0 == 0.0:
        return math.inf
    return math.log1p(1.0 / y0) / (2.0 * params.c_s)


@dataclass(frozen=True)
class SizeBoundReport:
    passed: bool
    max_ratio: float
    bound: float
    t0: float
    first_violation: float | None


def size_bound_check(traj: Trajectory, initial_y: float, params: SystemParams,
                     s: float) -> SizeBoundReport:
    """Check y(t) <= 2 exp(c_s T0) y(0) on the ledger window [0, T0].

    Note exp(c_s T0) = sqrt(1 + 1/y0), so the bound value itself does
    not depend on c_s; only the length of the checked window does.
    """
    if s != traj.s:
        raise ValueError(f"norm index {s} differs from the ledger's {traj.s}")
    if initial_y < 0.0:
        raise ValueError("initial_y must be nonnegative")
    if initial_y == 0.0:
        # zero data: the bound degenerates to 0, pass iff y stayed 0
        ok = bool(np.all(traj.y <= 1e-14))
        return SizeBoundReport(ok, 0.0 if ok else math.inf, 0.0, math.inf,
                               None if ok else float(traj.times[np.argmax(traj.y > 1e-14)]))
    t0 = math.log1p(1.0 / initial_y) / (2.0 * params.c_s)
    horizon = traj.times[-1] - traj.times[0]
    if horizon < t0 * (1.0 - 1e-12):
        raise ValueError(f"trajectory covers {horizon:.6g} but T0 = {t0:.6g}")
    bound = 2.0 * math.exp(params.c_s * t0) * initial_y
    rel = traj.times - traj.times[0]
    mask = rel <= t0 * (1.0 + 1e-12)
    ratios = traj.y[mask] / bound
    max_ratio = float(ratios.max())
    passed = max_ratio <= 1.0 + 1e-12
    first = None
    if not passed:
        bad = np.nonzero(ratios > 1.0 + 1e-12)[0][0]
        first = float(traj.times[mask][bad])
    return SizeBoundReport(passed, max_ratio, bound, t0, first)


def fit_min_cs(traj: Trajectory) -> float:
    """Smallest c with dy/dt <= c (y^2 + y) along the ledger.

    dy/dt by centered differences at interior ledger points; points with
    y at roundoff level are skipped (the zero trajectory fits c = 0).
    """
    t, y = traj.times, traj.y
    if len(t) < 10:
        raise ValueError(f"ledger has {len(t)} entries; need at least 10")
    ydot = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    yc = y[1:-1]
    live = yc > 1e-30
    if not live.any():
        return 0.0
    best = float(np.max(ydot[live] / (yc[live] ** 2 + yc[live])))
    return max(best, 0.0)


def diff_rhs(dstate: DifferenceState, u: Field, v: Field, rho: Field,
             theta: Field, params: SystemParams) -> tuple[Field, Field]:
    """Right-hand side of the difference system in (w, eta).

    Algebraically this is rhs(u, rho) - rhs(v, theta) rewritten so every
    term is linear in (w, eta); with the shared dealiasing the identity
    holds to roundoff, which diff_solve exploits as its cross-check.
    """
    w, eta = dstate.w, dstate.eta
    if not (w.grid == u.grid == v.grid == rho.grid == theta.grid):
        raise ValueError("difference state and drivers must share one grid")
    b, kap, al = params.b, params.kappa, params.alpha

    wx, wxx, wxxx = dx(w, 1), dx(w, 2), dx(w, 3)
    ux, vx = dx(u, 1), dx(v, 1)
    uxx, vxx = dx(u, 2), dx(v, 2)
    uxxx = dx(u, 3)

    bracket = (
        (0.5 * b) * product(w, u + v, dealias=True)
        + (3.0 - b) * product(wx, ux + vx, dealias=True)
        - (0.5 * (b + 5.0)) * product(wxx, uxx + vxx, dealias=True)
        + (b - 5.0) * product(wx, uxxx, dealias=True)
        + (b - 5.0) * product(vx, wxxx, dealias=True)
        + (0.5 * kap) * product(eta, rho + theta, dealias=True)
        - al * w
    )
    dw = (
        -0.5 * dx(product(w, u + v, dealias=True), 1)
        - helmholtz_inverse_dx(bracket)
    )
    deta = (
        -product(u, dx(eta, 1), dealias=True)
        - product(w, dx(theta, 1), dealias=True)
        - (b - 1.0) * (product(wx, rho, dealias=True) + product(vx, eta, dealias=True))
    )
    return dw, deta


def _midpoint(a: State, b: State) -> tuple[Field, Field]:
    return 0.5 * (a.u + b.u), 0.5 * (a.rho + b.rho)


def diff_solve(traj_u: Trajectory, traj_v: Trajectory, params: SystemParams,
               r: float | None = None) -> DifferenceTrajectory:
    """Integrate the difference system along two stored trajectories.

    Drivers at RK stage times are linear interpolants between stored
    steps (this keeps the difference solver independent of the primal
    integrator, at O(dt^2) interpolation cost).  The defect is the max
    over time of ||w - (u - v)||_{H^r} + ||eta - (rho - theta)||_{H^{r-2}},
    the direct subtraction being the exact answer.
    """
    if traj_u.grid != traj_v.grid:
        raise ValueError("trajectories live on different grids")
    if not (traj_u.is_dense() and traj_v.is_dense()):
        raise ValueError("diff_solve needs dense trajectories (store_stride = 1)")
    if len(traj_u.times) != len(traj_v.times) or np.max(
            np.abs(traj_u.times - traj_v.times)) > 1e-12:
        raise ValueError("trajectories must share their time grid")
    if r is None:
        r = traj_u.s - 1.0

    su, sv = traj_u.states, traj_v.states
    cur = DifferenceState(su[0].u - sv[0].u, su[0].rho - sv[0].rho, su[0].t)
    out = [cur]
    defect = 0.0
    for i in range(len(su) - 1):
        dt = su[i + 1].t - su[i].t
        mu, mrho = _midpoint(su[i], su[i + 1])
        mv, mtheta = _midpoint(sv[i], sv[i + 1])
        w, eta, t = cur.w, cur.eta, cur.t

        k1w, k1e = diff_rhs(cur, su[i].u, sv[i].u, su[i].rho, sv[i].rho, params)
        half = 0.5 * dt
        k2w, k2e = diff_rhs(DifferenceState(w + half * k1w, eta + half * k1e, t + half),
                            mu, mv, mrho, mtheta, params)
        k3w, k3e = diff_rhs(DifferenceState(w + half * k2w, eta + half * k2e, t + half),
                            mu, mv, mrho, mtheta, params)
        k4w, k4e = diff_rhs(DifferenceState(w + dt * k3w, eta + dt * k3e, t + dt),
                            su[i + 1].u, sv[i + 1].u, su[i + 1].rho, sv[i + 1].rho, params)
        sixth = dt / 6.0
        cur = DifferenceState(
            w + sixth * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
            eta + sixth * (k1e + 2.0 * k2e + 2.0 * k3e + k4e),
            su[i + 1].t,
        )
        out.append(cur)
        exact_w = su[i + 1].u - sv[i + 1].u
        exact_e = su[i + 1].rho - sv[i + 1].rho
        defect = max(defect, sobolev_norm(cur.w - exact_w, r)
                     + sobolev_norm(cur.eta - exact_e, r - 2.0))
    return DifferenceTrajectory(tuple(out), traj_u.times.copy(), r, defect)


# -- artifact formats ---------------------------------------------------

_MAGIC = b"CHS2"
_VERSION = 1
_HEADER = struct.Struct("<4sIIdd")  # magic, version, N, L, t


def save_ledger_csv(traj: Trajectory, path):
    with open(path, "w", newline="") as fh:
        fh.write("t,norm_u_Hs,norm_rho_Hs-2,y\n")
        for row in zip(traj.times, traj.norm_u, traj.norm_rho, traj.y):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_snapshot(state: State, path):
    """Flat binary state dump: header then u values then rho values."""
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, grid.n, grid.length, state.t))
        fh.write(np.ascontiguousarray(state.u.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.rho.values, dtype="<f8").tobytes())


def load_snapshot(path) -> State:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated snapshot header")
        magic, version, n, length, t = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        body = np.frombuffer(fh.read(2 * n * 8), dtype="<f8")
        if body.size != 2 * n:
            raise ValueError("truncated snapshot body")
    grid = Grid(n, length)
    return State(Field.from_values(grid, body[:n].copy()),
                 Field.from_values(grid, body[n:].copy()), t)
