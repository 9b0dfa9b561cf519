"""Continuity modulus of the data-to-solution map.

The exponent law beta(s, r) is piecewise: Lipschitz for low r with
s + r >= 5, an interpolation exponent (2s-5)/(s-r) below that corner,
and s - r once r climbs within one of s.  The experiment side perturbs
a base datum along a fixed direction with a log-spaced amplitude ladder,
solves every member with one shared dt, and regresses log distance
against log amplitude.  The exponent law is an upper bound on
distances, so a fitted slope above beta is consistent; verdicts only
check slope >= beta - 0.1.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fields import cosine_mode, gaussian_bump, random_field, sech2_bump
from .solver import (
    COMPLETED,
    State,
    SystemParams,
    fit_min_cs,
    solve,
    t0_lower_bound,
)
from .spectral import Field, Grid, sobolev_norm, sup_norm

__all__ = [
    "HolderCase", "holder_exponent", "PerturbationFamily", "make_family",
    "HolderReport", "run_holder", "sweep",
    "save_reports_csv", "save_reports_json", "save_curves_csv",
]

BASE_KINDS = ("gaussian-bump", "sech2-bump", "random-decay")
DIRECTION_KINDS = ("high-mode", "random-decay")

# fitted existence-time constants below this are floored when they set
# the default horizon; the window diverges as the constant goes to zero
MIN_FITTED_CS = 0.05


@dataclass(frozen=True)
class HolderCase:
    s: float
    r: float
    rho_trivial: bool
    beta: float
    regime: str


def holder_exponent(s: float, r: float, rho_trivial: bool = False) -> HolderCase:
    """Piecewise exponent of the continuity modulus.

    Candidates from every clause whose conditions hold are collected;
    overlapping clauses agree on the shared boundary (checked, never
    silently preferred), and (s, r) matching no clause is an error.
    """
    lower = 0.0 if rho_trivial else 1.0
    if not s > 3.5:
        raise ValueError(f"need s > 7/2, got s={s}")
    if not lower <= r < s:
        raise ValueError(
            f"need {lower:g} <= r < s for this data class, got r={r}, s={s}")

    candidates = []
    if r <= s - 1.0 and s + r >= 5.0:
        candidates.append(("lipschitz", 1.0))
    s_cap = 5.0 if rho_trivial else 4.0
    if s < s_cap and r <= 5.0 - s:
        candidates.append(("interpolation-low", (2.0 * s - 5.0) / (s - r)))
    if s - 1.0 < r < s:
        candidates.append(("interpolation-high", s - r))

    if not candidates:
        raise ValueError(f"(s, r) = ({s}, {r}) falls outside every exponent clause")
    betas = [b for _, b in candidates]
    if max(betas) - min(betas) > 1e-9:
        raise ValueError(
            f"inconsistent exponent clauses at (s, r) = ({s}, {r}): {candidates}")
    regime, beta = candidates[0]
    return HolderCase(s=s, r=r, rho_trivial=rho_trivial, beta=beta, regime=regime)


@dataclass(frozen=True)
class PerturbationFamily:
    """Base datum plus a unit direction and an amplitude ladder.

    The direction has unit norm in H^s x H^{s-2}, so member delta sits
    at initial distance exactly delta from the base, and the whole
    family fits inside the ball of radius h by construction.
    """

    u0: Field
    rho0: Field
    dir_u: Field
    dir_rho: Field
    deltas: np.ndarray
    h: float
    s: float
    base_kind: str
    direction_kind: str
    seed: int

    @property
    def grid(self) -> Grid:
        return self.u0.grid

    @property
    def rho_trivial(self) -> bool:
        return (sobolev_norm(self.rho0, 0.0) == 0.0
                and sobolev_norm(self.dir_rho, 0.0) == 0.0)

    def member(self, delta: float) -> State:
        if delta == 0.0:
            return State(self.u0, self.rho0, 0.0)
        return State(self.u0 + delta * self.dir_u,
                     self.rho0 + delta * self.dir_rho, 0.0)

    def member_y(self, delta: float) -> float:
        st = self.member(delta)
        return sobolev_norm(st.u, self.s) + sobolev_norm(st.rho, self.s - 2.0)


def _base_pair(grid, kind, amplitude, seed, rho_trivial):
    if kind == "gaussian-bump":
        u0 = gaussian_bump(grid, amplitude)
        rho0 = gaussian_bump(grid, 0.5 * amplitude, width=grid.length / 20.0)
    elif kind == "sech2-bump":
        u0 = sech2_bump(grid, amplitude)
        rho0 = sech2_bump(grid, 0.5 * amplitude, width=grid.length / 40.0)
    elif kind == "random-decay":
        u0 = random_field(grid, 6.0, amplitude=amplitude, seed=seed)
        rho0 = random_field(grid, 4.0, amplitude=0.5 * amplitude, seed=seed + 1)
    else:
        raise ValueError(f"unknown base kind {kind!r}; pick one of {BASE_KINDS}")
    if rho_trivial:
        rho0 = Field.zero(grid)
    return u0, rho0


def _direction_pair(grid, kind, s, seed, rho_trivial):
    if kind == "high-mode":
        # half the dealias cutoff: high enough to probe roughness, safely
        # inside the retained band
        dir_u = cosine_mode(grid, grid.n // 6)
        dir_rho = Field.zero(grid)
    elif kind == "random-decay":
        dir_u = random_field(grid, s + 1.0, seed=seed + 2)
        dir_rho = (Field.zero(grid) if rho_trivial
                   else random_field(grid, s - 1.0, seed=seed + 3))
    else:
        raise ValueError(
            f"unknown direction kind {kind!r}; pick one of {DIRECTION_KINDS}")
    scale = sobolev_norm(dir_u, s) + sobolev_norm(dir_rho, s - 2.0)
    if scale == 0.0:
        raise ValueError("perturbation direction is identically zero")
    return (1.0 / scale) * dir_u, (1.0 / scale) * dir_rho


def make_family(grid: Grid, s: float, h: float, base_kind: str = "gaussian-bump",
                direction_kind: str = "high-mode", deltas=None, seed: int = 0,
                base_amplitude: float = 0.5,
                rho_trivial: bool = False) -> PerturbationFamily:
    """Build a perturbation family verified to fit inside the ball B(0, h)."""
    if deltas is None:
        deltas = np.geomspace(1e-2, 1e-5, 7)
    deltas = np.asarray(deltas, dtype=float)
    if len(deltas) < 4:
        raise ValueError("amplitude ladder needs at least 4 points")
    if not np.all(np.diff(deltas) < 0):
        raise ValueError("amplitude ladder must be strictly decreasing")
    if deltas[0] / deltas[-1] < 100.0 * (1.0 - 1e-9):
        raise ValueError("amplitude ladder must span at least two decades")
    logr = np.diff(np.log(deltas))
    if np.abs(logr - logr[0]).max() > 1e-2 * abs(logr[0]):
        raise ValueError("amplitude ladder must be log-spaced")

    u0, rho0 = _base_pair(grid, base_kind, base_amplitude, seed, rho_trivial)
    dir_u, dir_rho = _direction_pair(grid, direction_kind, s, seed, rho_trivial)

    delta_max = float(deltas.max())
    if delta_max >= h:
        raise ValueError(
            f"largest perturbation {delta_max} cannot fit in a ball of radius {h}")
    y_base = sobolev_norm(u0, s) + sobolev_norm(rho0, s - 2.0)
    if y_base + delta_max > h:
        # shrink the base; the unit direction and the ladder stay fixed
        factor = 0.98 * (h - delta_max) / y_base
        u0 = factor * u0
        rho0 = factor * rho0

    fam = PerturbationFamily(u0=u0, rho0=rho0, dir_u=dir_u, dir_rho=dir_rho,
                             deltas=deltas, h=h, s=s, base_kind=base_kind,
                             direction_kind=direction_kind, seed=seed)
    for d in deltas:
        if fam.member_y(float(d)) > h * (1.0 + 1e-12):
            raise ValueError("cannot fit family in the requested ball")
    return fam


@dataclass(frozen=True)
class HolderReport:
    case: HolderCase
    deltas: np.ndarray
    distances: np.ndarray
    slope: float
    intercept: float
    residual: float
    verdict: str
    statuses: tuple
    horizon: float
    dt: float

    def row(self) -> dict:
        c = self.case
        return {
            "case": f"s{c.s:g}-r{c.r:g}",
            "s": c.s,
            "r": c.r,
            "beta_theory": c.beta,
            "slope": self.slope,
            "residual": self.residual,
            "verdict": self.verdict,
        }


def _distance(traj_a, traj_b, r: float) -> float:
    best = 0.0
    for a, b in zip(traj_a.states, traj_b.states):
        best = max(best, sobolev_norm(a.u - b.u, r)
                   + sobolev_norm(a.rho - b.rho, r - 2.0))
    return best


def default_horizon(family: PerturbationFamily, params: SystemParams,
                    s: float, cfl: float = 0.3) -> float:
    """Existence-time bound evaluated at the fitted constant.

    A probe run over the bound at the configured c_s supplies the fit;
    tiny fitted constants are floored at MIN_FITTED_CS, otherwise the
    window grows without bound as the fit approaches zero.
    """
    base = family.member(0.0)
    t_probe = t0_lower_bound(base, s, params)
    if not math.isfinite(t_probe):
        return 1.0
    traj = solve(base, params, s, t_probe, seam_policy="ignore", cfl=cfl)
    if traj.status != COMPLETED or len(traj.times) < 10:
        return t_probe
    c_fit = max(fit_min_cs(traj), MIN_FITTED_CS)
    y0 = traj.y[0]
    return math.log1p(1.0 / y0) / (2.0 * c_fit)


def run_holder(family: PerturbationFamily, params: SystemParams, s: float,
               r: float, T: float | None = None, cfl: float = 0.3,
               seam_policy: str = "ignore") -> HolderReport:
    """Solve the family, measure distances, regress, and judge the slope.

    Every member runs with the same fixed dt (the CFL step of the worst
    initial sup-norm in the family) so trajectories share their time
    grid and distances come from direct state subtraction.
    """
    case = holder_exponent(s, r, rho_trivial=family.rho_trivial)
    if T is None:
        T = default_horizon(family, params, s, cfl)

    worst_sup = max(sup_norm(family.member(0.0).u),
                    sup_norm(family.member(float(family.deltas[0])).u))
    dt = cfl * family.grid.dx / max(1.0, worst_sup)

    base_traj = solve(family.member(0.0), params, s, T, dt_policy=dt,
                      seam_policy=seam_policy)
    trajs = [solve(family.member(float(d)), params, s, T, dt_policy=dt,
                   seam_policy=seam_policy) for d in family.deltas]
    statuses = tuple([base_traj.status] + [t.status for t in trajs])

    nan = float("nan")
    if any(st != COMPLETED for st in statuses):
        return HolderReport(case, family.deltas.copy(), np.full(len(trajs), nan),
                            nan, nan, nan, "no-verdict: member aborted",
                            statuses, T, dt)

    distances = np.array([_distance(t, base_traj, r) for t in trajs])

    # keep regression points clear of accumulated roundoff
    nsteps = len(base_traj.times) - 1
    floor = 1e3 * 2.22e-16 * max(1.0, float(base_traj.y.max())) * max(nsteps, 1)
    live = distances > floor
    if live.sum() < 3:
        return HolderReport(case, family.deltas.copy(), distances,
                            nan, nan, nan, "degenerate: distances at noise floor",
                            statuses, T, dt)

    logd = np.log10(family.deltas[live])
    logdist = np.log10(distances[live])
    slope, intercept = np.polyfit(logd, logdist, 1)
    resid = float(np.sqrt(np.mean((np.polyval([slope, intercept], logd) - logdist) ** 2)))
    ok = slope >= case.beta - 0.1 and resid <= 0.05
    return HolderReport(case, family.deltas.copy(), distances, float(slope),
                        float(intercept), resid, "pass" if ok else "fail",
                        statuses, T, dt)


def _sweep_case(payload) -> HolderReport:
    (s, r, n, length, pdict, h, base_kind, direction_kind, deltas, seed, T,
     base_amplitude, rho_trivial, cfl) = payload
    grid = Grid(n, length)
    params = SystemParams(**pdict)
    family = make_family(grid, s, h, base_kind, direction_kind, deltas, seed,
                         base_amplitude, rho_trivial)
    return run_holder(family, params, s, r, T, cfl)


def sweep(cases, grid: Grid, params: SystemParams, h: float = 2.0,
          base_kind: str = "gaussian-bump", direction_kind: str = "high-mode",
          deltas=None, seed: int = 0, T: float | None = None,
          base_amplitude: float = 0.5, rho_trivial: bool = False,
          cfl: float = 0.3, workers: int = 1):
    """Independent run_holder per (s, r) case, in input order.

    Per-case failures are captured as error rows instead of aborting the
    sweep.  Workers > 1 fans cases out to processes; each worker rebuilds
    its family from the same seed, so results match the serial run.
    """
    if deltas is None:
        deltas = np.geomspace(1e-2, 1e-5, 7)
    payloads = [
        (float(s), float(r), grid.n, grid.length,
         {"b": params.b, "kappa": params.kappa, "alpha": params.alpha,
          "c_s": params.c_s},
         h, base_kind, direction_kind, np.asarray(deltas, dtype=float), seed, T,
         base_amplitude, rho_trivial, cfl)
        for s, r in cases
    ]
    reports = []
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(payloads))) as pool:
            futures = [pool.submit(_sweep_case, p) for p in payloads]
            for (s, r), fut in zip(cases, futures):
                try:
                    reports.append(fut.result())
                except Exception as exc:
                    reports.append(_error_report(float(s), float(r), exc))
    else:
        for (s, r), payload in zip(cases, payloads):
            try:
                reports.append(_sweep_case(payload))
            except Exception as exc:
                reports.append(_error_report(float(s), float(r), exc))
    return reports


def _error_report(s: float, r: float, exc: Exception) -> HolderReport:
    nan = float("nan")
    case = HolderCase(s=s, r=r, rho_trivial=False, beta=nan, regime="invalid")
    return HolderReport(case, np.array([]), np.array([]), nan, nan, nan,
                        f"error: {exc}", (), nan, nan)


def save_reports_csv(reports, path):
    with open(path, "w", newline="") as fh:
        fh.write("case,s,r,beta_theory,slope,residual,verdict\n")
        for rep in reports:
            row = rep.row()
            fh.write(",".join([
                row["case"], repr(row["s"]), repr(row["r"]),
                repr(row["beta_theory"]), repr(row["slope"]),
                repr(row["residual"]), row["verdict"],
            ]) + "\n")


def save_reports_json(reports, path):
    payload = []
    for rep in reports:
        entry = rep.row()
        entry["deltas"] = [float(v) for v in rep.deltas]
        entry["distances"] = [float(v) for v in rep.distances]
        entry["intercept"] = rep.intercept
        entry["statuses"] = list(rep.statuses)
        entry["horizon"] = rep.horizon
        entry["dt"] = rep.dt
        entry["regime"] = rep.case.regime
        payload.append(entry)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_curves_csv(report: HolderReport, path):
    with open(path, "w", newline="") as fh:
        fh.write("delta,distance\n")
        for d, v in zip(report.deltas, report.distances):
            fh.write(f"{float(d)!r},{float(v)!r}\n")
