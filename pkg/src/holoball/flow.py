"""Semigroup flows: adaptive integration of dPhi_t/dt = F(Phi_t).

The stepper is the Dormand-Prince embedded pair (order 5 propagated, order 4
error estimate) with PI step-size control.  Semicomplete fields keep the
exact flow inside the open ball forever, so a numeric exit is treated as
evidence against semicompleteness: steps that would leave the closed ball
are halved, and persistent collapse raises FlowBlowUpError.  Trajectories
that legitimately approach the boundary (Denjoy-Wolff convergence) merely
cross the guard shell at radius 1 - 1e-9; those are flagged, not clamped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FlowBlowUpError, PreconditionError
from .geometry import as_cvec, check_ball_point, kobayashi_distance
from .kernels import green, poisson

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

GUARD_RADIUS = 1.0 - 1e-9   # shell radius: crossing it flags the trajectory
HARD_RADIUS = 1.0 - 1e-15   # numeric boundary: steps beyond it are rejected
MIN_STEP = 1e-14


@dataclass
class Trajectory:
    """An adaptively integrated orbit t -> Phi_t(z0)."""

    times: list
    points: list
    accepted_steps: int
    rejected_steps: int
    max_local_error: float
    local_errors: list
    boundary_contact: bool = False

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def to_csv(self, path):
        """Write columns t, Re/Im of each coordinate, local error."""
        dim = self.points[0].size
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t"]
            for j in range(dim):
                header += [f"re_z{j + 1}", f"im_z{j + 1}"]
            header.append("local_error")
            writer.writerow(header)
            for t, z, err in zip(self.times, self.points, self.local_errors):
                row = [repr(float(t))]
                for v in z:
                    row += [repr(float(v.real)), repr(float(v.imag))]
                row.append(repr(float(err)))
                writer.writerow(row)


def integrate(field_fn, z0, t_end: float, *, rtol: float = 1e-9,
              atol: float = 1e-10, max_steps: int = 200000) -> Trajectory:
    """Integrate the field from z0 up to t_end with local error <= tolerances.

    Raises FlowBlowUpError (with the escape-time estimate) if the step size
    collapses, which is the not-semicomplete diagnostic.
    """
    z = check_ball_point(z0, getattr(field_fn, "dim", None)).astype(complex)
    if t_end < 0:
        raise DomainError("integration time must be nonnegative")
    times = [0.0]
    points = [z.copy()]
    errors = [0.0]
    accepted = rejected = 0
    max_err = 0.0
    contact = bool(np.linalg.norm(z) >= GUARD_RADIUS)
    t = 0.0
    if t_end == 0.0:
        return Trajectory(times, points, 0, 0, 0.0, errors, contact)
    h = min(0.05, t_end)
    prev_err = 1.0
    k_last = field_fn(z)
    steps = 0
    shell_halvings = 0
    while t < t_end:
        if t_end - t <= 1e-16 * max(1.0, t_end):
            break
        if steps > max_steps:
            raise FlowBlowUpError("step budget exhausted", t)
        steps += 1
        h = min(h, t_end - t)
        k = [k_last]
        for i in range(1, 7):
            acc = sum(_A[i][j] * k[j] for j in range(i))
            k.append(field_fn(z + h * acc))
        y5 = z + h * sum(b * ki for b, ki in zip(_B5, k))
        y4 = z + h * sum(b * ki for b, ki in zip(_B4, k))
        scale = atol + rtol * np.maximum(np.abs(z), np.abs(y5))
        err = float(np.sqrt(np.mean((np.abs(y5 - y4) / scale) ** 2)))
        norm5 = np.linalg.norm(y5)
        if norm5 >= HARD_RADIUS:
            # would leave the closed ball numerically: halve and retry
            rejected += 1
            h /= 2
            if h < MIN_STEP:
                raise FlowBlowUpError("flow left the ball; field looks non-semicomplete", t)
            continue
        if err > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < MIN_STEP:
                raise FlowBlowUpError("step size collapsed under error control", t)
            continue
        if norm5 >= GUARD_RADIUS and not contact:
            # crossing into the guard shell: halve a bounded number of times
            # to enter gently, then accept and flag rather than clamp
            if shell_halvings < 8 and h > 2 * MIN_STEP:
                rejected += 1
                shell_halvings += 1
                h /= 2
                continue
            contact = True
        t += h
        z = y5
        k_last = k[6]  # FSAL: the last stage is the field at y5
        accepted += 1
        times.append(t)
        points.append(z.copy())
        errors.append(err)
        max_err = max(max_err, err)
        fac = 0.9 * err ** -0.14 * prev_err ** 0.08 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
        prev_err = max(err, 1e-10)
    return Trajectory(times, points, accepted, rejected, max_err, errors, contact)


def flow_map(field_fn, z0, t: float, **kw) -> np.ndarray:
    """The endpoint Phi_t(z0)."""
    return integrate(field_fn, z0, t, **kw).end


def flow_points(field_fn, z0, t_grid, **kw) -> list:
    """Flow samples at an increasing time grid, integrated segment by segment."""
    t_grid = sorted(float(t) for t in t_grid)
    if any(t < 0 for t in t_grid):
        raise DomainError("time grid must be nonnegative")
    out = []
    z = as_cvec(z0)
    t_prev = 0.0
    for t in t_grid:
        z = integrate(field_fn, z, t - t_prev, **kw).end
        out.append(z)
        t_prev = t
    return out


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a single dynamical-invariant check along trajectories."""

    name: str
    passed: bool
    worst: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "check": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "tolerance": self.tolerance,
            **self.details,
        }


def semigroup_check(field_fn, z0, t: float, s: float, tol: float = 1e-8, **kw) -> CheckReport:
    """Verify Phi_{t+s}(z0) = Phi_t(Phi_s(z0)) within tol."""
    direct = flow_map(field_fn, z0, t + s, **kw)
    through = flow_map(field_fn, flow_map(field_fn, z0, s, **kw), t, **kw)
    gap = float(np.linalg.norm(direct - through))
    return CheckReport("semigroup", gap <= tol, gap, tol, {"t": t, "s": s})


def kobayashi_monotone_check(field_fn, z0, w0, time_grid, slack: float = 1e-10, **kw) -> CheckReport:
    """Verify t -> k(Phi_t z0, Phi_t w0) is non-increasing on the grid."""
    z0 = as_cvec(z0)
    w0 = as_cvec(w0)
    if np.linalg.norm(z0 - w0) == 0:
        raise DomainError("the two starting points must differ")
    zs = [z0] + flow_points(field_fn, z0, time_grid, **kw)
    ws = [w0] + flow_points(field_fn, w0, time_grid, **kw)
    dists = [kobayashi_distance(z, w) for z, w in zip(zs, ws)]
    worst = max(
        (dists[i + 1] - dists[i] for i in range(len(dists) - 1)), default=0.0
    )
    return CheckReport("kobayashi_monotone", worst <= slack, float(worst), slack)


def schwarz_check(field_fn, z_fixed, z, t_grid, slack: float = 1e-10, **kw) -> CheckReport:
    """For a field vanishing at z_fixed, verify G(z_fixed, Phi_t(z)) <= G(z_fixed, z)."""
    z_fixed = as_cvec(z_fixed)
    if np.linalg.norm(field_fn(z_fixed)) > 1e-10:
        raise PreconditionError("the reference point is not a zero of the field")
    base = green(z_fixed, z)
    worst = -np.inf
    for pt in flow_points(field_fn, z, t_grid, **kw):
        worst = max(worst, green(z_fixed, pt) - base)
    return CheckReport("schwarz", worst <= slack, float(worst), slack)


@dataclass(frozen=True)
class AttractorEstimate:
    kind: str          # "interior", "boundary" or "inconclusive"
    point: np.ndarray
    residual_speed: float

    def to_dict(self):
        return {
            "kind": self.kind,
            "point": [[v.real, v.imag] for v in self.point],
            "residual_speed": self.residual_speed,
        }


def longtime_attractor(field_fn, z0, horizon: float = 20.0) -> AttractorEstimate:
    """Estimate the long-time limit of the orbit of z0.

    Interior limits are common zeros of the field; boundary limits are
    Denjoy-Wolff candidates.
    """
    traj = integrate(field_fn, z0, horizon)
    z = traj.end
    speed = float(np.linalg.norm(field_fn(z)))
    norm = np.linalg.norm(z)
    if norm >= 1.0 - 1e-6:
        return AttractorEstimate("boundary", z / norm, speed)
    if speed <= 1e-8:
        return AttractorEstimate("interior", z, speed)
    # not settled: compare against a slightly longer horizon
    z2 = integrate(field_fn, z, 0.25 * horizon).end
    if np.linalg.norm(z2 - z) <= 1e-8:
        return AttractorEstimate("interior", z2, speed)
    if np.linalg.norm(z2) >= 1.0 - 1e-6:
        return AttractorEstimate("boundary", z2 / np.linalg.norm(z2), speed)
    return AttractorEstimate("inconclusive", z2, speed)
