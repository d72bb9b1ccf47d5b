"""Boundary behavior: projected generators, slope limits, BRFP detection.

The scalar field obtained by pushing a ball field through the left inverse
of a complex geodesic controls the boundary dynamics at the geodesic's
endpoint: the endpoint is a boundary regular fixed point of the semigroup
exactly when the radial slopes of these projected fields stay bounded
uniformly over the geodesics through it, and the dilatation exponent is the
supremum of the extrapolated slopes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError, SingularPointError
from .flow import flow_map
from .geometry import (
    ProjectionDevice,
    as_cvec,
    check_boundary_point,
    device_from_carrier,
    geodesic_device,
    parabolic_automorphism,
    unitary_automorphism,
    _unitary_sending_to_e1,
)
from .sampling import SampleSpec, ball_points

# Radial grid r_k = 1 - 2^{-k}; dyadic radii suit Richardson extrapolation in
# (1 - r), and K = 13 keeps combined roundoff well under the slope tolerances.
K_MIN = 3
K_DEFAULT = 13

# |f(r)|/(1-r) growth by >= 4 over the last three k's is divergence; growth
# under 2 is convergence; in between we refuse to guess.
GROWTH_UNBOUNDED = 4.0
GROWTH_BOUNDED = 2.0

_EVAL_ERRORS = (EvaluationError, SingularPointError, DomainError)


@dataclass(frozen=True)
class SlopeEstimate:
    """Radial limit estimate of f(r)/(r-1) with extrapolation diagnostics.

    ``bounded`` reflects the growth test on |f(r)|/(1-r); when it is False
    (or the test is inconclusive) no extrapolated value is reported.
    """

    radii: tuple
    values: tuple
    extrapolated: complex | None
    residual: float
    bounded: bool
    inconclusive: bool = False

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "re_value", "im_value"])
            for r, v in zip(self.radii, self.values):
                writer.writerow([repr(float(r)), repr(v.real), repr(v.imag)])

    def to_dict(self):
        return {
            "radii": [float(r) for r in self.radii],
            "values": [[v.real, v.imag] for v in self.values],
            "extrapolated": None if self.extrapolated is None
            else [self.extrapolated.real, self.extrapolated.imag],
            "residual": self.residual,
            "bounded": self.bounded,
            "inconclusive": self.inconclusive,
        }


def geodesic_generator(field, dev: ProjectionDevice):
    """The disc field zeta -> d(rho_tilde)_{phi(zeta)} . F(phi(zeta)).

    For a semicomplete F this is again a semicomplete field on the disc.
    """
    if field.dim != dev.dim:
        raise DomainError("field and device dimensions differ")

    def f(zeta: complex) -> complex:
        z = dev.geodesic(zeta)
        return dev.rho_tilde_differential(z, field(z))

    return f


def _richardson(values: np.ndarray, max_depth: int = 5) -> tuple[complex, float]:
    """Extrapolate a sequence v_k = A + O(2^{-k}) sampled at consecutive k."""
    table = [np.asarray(values, dtype=complex)]
    depth = min(max_depth, len(values) - 1)
    for j in range(1, depth + 1):
        prev = table[-1]
        fac = 2.0 ** j
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    extrapolated = complex(table[-1][-1])
    if len(table) >= 2 and len(table[-2]) >= 1:
        residual = abs(extrapolated - complex(table[-2][-1]))
    else:
        residual = np.inf
    return extrapolated, float(residual)


def radial_slope(f, k_max: int = K_DEFAULT) -> SlopeEstimate:
    """Slope of a disc-scalar function at 1 along the dyadic radial grid.

    Evaluates f(r_k)/(r_k - 1) on r_k = 1 - 2^{-k}, runs the boundedness
    growth test on the magnitudes and Richardson-extrapolates in (1 - r).
    """
    if k_max <= K_MIN:
        raise DomainError(f"grid depth must exceed {K_MIN}")
    radii, values = [], []
    for k in range(K_MIN, k_max + 1):
        r = 1.0 - 2.0 ** -k
        try:
            values.append(complex(f(r)) / (r - 1.0))
        except _EVAL_ERRORS:
            break
        radii.append(r)
    if len(values) < 3:
        return SlopeEstimate((), (), None, np.inf, False, inconclusive=True)
    mags = np.abs(np.array(values))
    floor = 1e-12 * (1.0 + mags.max())
    if mags[-1] <= floor:
        # identically-vanishing tail: slope zero
        return SlopeEstimate(tuple(radii), tuple(values), 0.0 + 0.0j,
                             float(mags[-1]), True)
    growth = mags[-1] / max(mags[-4] if len(mags) >= 4 else mags[0], floor)
    if growth >= GROWTH_UNBOUNDED:
        return SlopeEstimate(tuple(radii), tuple(values), None, np.inf, False)
    extrapolated, residual = _richardson(np.array(values))
    if growth >= GROWTH_BOUNDED:
        # between the clear regimes: refuse to guess a limit
        return SlopeEstimate(tuple(radii), tuple(values), None, residual,
                             False, inconclusive=True)
    return SlopeEstimate(tuple(radii), tuple(values), extrapolated, residual, True)


@dataclass(frozen=True)
class BrfpScanResult:
    """Outcome of a multi-device boundary fixed-point scan."""

    verdict: str                   # "BRFP", "not-BRFP" or "inconclusive"
    beta: float | None             # sup of extrapolated slopes when BRFP
    worst_slope: float             # largest |f(r)|/(1-r) seen over all devices
    device_count: int
    max_imag: float                # largest |Im| among extrapolated slopes
    estimates: tuple

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "beta": self.beta,
            "worst_slope": self.worst_slope,
            "device_count": self.device_count,
            "max_imag": self.max_imag,
        }


def scan_devices(p, dim: int, device_count: int, seed: int) -> list[ProjectionDevice]:
    """Devices through p: low-discrepancy basepoints in the 0.8-ball, plus the
    parabolic carrier family in dimension 2 (which reaches the boundary
    tangentially and is not seen by interior basepoints)."""
    p = check_boundary_point(p, dim)
    spec = SampleSpec(count=device_count, seed=seed, radius_cap=0.8)
    devices = [geodesic_device(z0, p) for z0 in ball_points(spec, dim)]
    if dim == 2:
        u = _unitary_sending_to_e1(p)
        v_auto = unitary_automorphism(u)
        for s in (0.0, 0.5, 1.0, 2.0):
            for theta in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
                carrier = parabolic_automorphism(s * s / 2.0, theta).compose(v_auto)
                devices.append(device_from_carrier(carrier))
    return devices


def brfp_scan(field, p, device_count: int = 8, seed: int = 0, *,
              k_max: int = K_DEFAULT) -> BrfpScanResult:
    """Scan geodesics through p for a boundary regular fixed point.

    Verdict BRFP requires a bounded radial slope on every sampled device;
    the beta estimate is the largest extrapolated slope.  A single
    diverging device yields not-BRFP.  Finitely many devices make a BRFP
    verdict evidence, not proof; near-threshold growth is reported as
    inconclusive rather than guessed.
    """
    devices = scan_devices(p, field.dim, device_count, seed)
    estimates = []
    worst = 0.0
    evaluable = 0
    any_unbounded = False
    any_inconclusive = False
    for dev in devices:
        est = radial_slope(geodesic_generator(field, dev), k_max)
        estimates.append(est)
        if est.values:
            evaluable += 1
            worst = max(worst, float(np.max(np.abs(est.values))))
        if est.inconclusive:
            any_inconclusive = True
        elif not est.bounded:
            any_unbounded = True
    if evaluable == 0:
        return BrfpScanResult("inconclusive", None, worst, len(devices), np.nan, tuple(estimates))
    if any_unbounded:
        return BrfpScanResult("not-BRFP", None, worst, len(devices), np.nan, tuple(estimates))
    if any_inconclusive:
        return BrfpScanResult("inconclusive", None, worst, len(devices), np.nan, tuple(estimates))
    slopes = [est.extrapolated for est in estimates if est.extrapolated is not None]
    beta = max(s.real for s in slopes)
    max_imag = max(abs(s.imag) for s in slopes)
    return BrfpScanResult("BRFP", float(beta), worst, len(devices), float(max_imag), tuple(estimates))


def brfp_check_map(h, p, dev: ProjectionDevice, k_max: int = K_DEFAULT) -> SlopeEstimate:
    """Dilatation coefficient of a self-map h at p along a device.

    Estimates the limit of (1 - rho_tilde(h(phi(r)))) / (1 - r); for a map
    fixing p regularly this converges to the boundary dilatation
    coefficient, and it diverges when p is not such a point.
    """
    p = check_boundary_point(p, dev.dim)

    def g(r: float) -> complex:
        # reuse the radial-slope machinery: g(r)/(r-1) = ratio
        z = dev.geodesic(r)
        return -(1.0 - dev.rho_tilde(as_cvec(h(z), dev.dim)))

    return radial_slope(g, k_max)


@dataclass(frozen=True)
class DilatationFit:
    """Per-time dilatation estimates alpha_t and the fitted exponent."""

    times: tuple
    alphas: tuple
    beta: float | None
    fit_residual: float
    verdict: str   # "BRFP" or "not-BRFP"

    def to_dict(self):
        return {
            "times": list(self.times),
            "alphas": list(self.alphas),
            "beta": self.beta,
            "fit_residual": self.fit_residual,
            "verdict": self.verdict,
        }


def dilatation_semigroup(field, p, t_grid=(0.25, 0.5, 0.75, 1.0),
                         dev: ProjectionDevice | None = None, *,
                         k_max: int = 11, rtol: float = 1e-10,
                         atol: float = 1e-11) -> DilatationFit:
    """Fit alpha_t = e^{beta t} from flow maps of the field at p.

    Each alpha_t comes from brfp_check_map applied to the integrated time-t
    map; log alpha_t is then fitted against t by least squares through the
    origin.  Any unbounded estimate aborts with a not-BRFP verdict.
    """
    p = check_boundary_point(p, field.dim)
    if dev is None:
        dev = geodesic_device(np.zeros(field.dim), p)
    times, alphas = [], []
    for t in t_grid:
        est = brfp_check_map(lambda z: flow_map(field, z, t, rtol=rtol, atol=atol),
                             p, dev, k_max)
        if est.extrapolated is None:
            return DilatationFit(tuple(times), tuple(alphas), None, np.inf, "not-BRFP")
        times.append(float(t))
        alphas.append(float(est.extrapolated.real))
    times_arr = np.array(times)
    logs = np.log(np.array(alphas))
    beta = float(np.dot(times_arr, logs) / np.dot(times_arr, times_arr))
    residual = float(np.max(np.abs(logs - beta * times_arr)))
    return DilatationFit(tuple(times), tuple(alphas), beta, residual, "BRFP")


@dataclass(frozen=True)
class NtLimitResult:
    """Per-ray non-tangential limit estimates and their agreement."""

    limits: tuple          # per-ray extrapolated values (None on divergence)
    agreement: bool
    value: complex | None  # common limit when agreement holds

    def to_dict(self):
        return {
            "limits": [None if v is None else [v.real, v.imag] for v in self.limits],
            "agreement": self.agreement,
            "value": None if self.value is None else [self.value.real, self.value.imag],
        }


def default_rays(p) -> list:
    """Approach directions at p: radial, two oblique in the complex line of p,
    and (in dimension >= 2) two mixed directions with a tangential component,
    which are what separates functions with no genuine limit."""
    p = check_boundary_point(p)
    rays: list = [0.0, np.pi / 6, -np.pi / 6]
    n = p.size
    if n >= 2:
        u = _unitary_sending_to_e1(p)
        tau = u.conj().T[:, 1]  # unit vector orthogonal to p
        rays.append(p + 0.8 * tau)
        rays.append(p + 0.8j * tau)
    return rays


def nt_limit(g, p, rays=None, k_max: int = K_DEFAULT, *, tol: float = 1e-6) -> NtLimitResult:
    """Non-tangential limit of a scalar function at boundary p.

    Rays may be angles psi (curves (1 - (1-r) e^{i psi}) p) or direction
    vectors d with Re<d, p> > 0 (curves p - (1-r) d).  The verdict requires
    every ray to converge and all extrapolated limits to agree within tol.
    """
    p = check_boundary_point(p)
    if rays is None:
        rays = default_rays(p)
    limits = []
    for ray in rays:
        if np.isscalar(ray) and not isinstance(ray, complex):
            d = np.exp(1j * float(ray)) * p
        else:
            d = as_cvec(ray, p.size)
            if (complex(np.vdot(p, d))).real <= 0:
                raise DomainError("ray direction must point inward: Re<d,p> > 0")
        values = []
        ok = True
        for k in range(K_MIN, k_max + 1):
            delta = 2.0 ** -k
            z = p - delta * d
            try:
                values.append(complex(g(z)))
            except _EVAL_ERRORS:
                ok = False
                break
        if not ok or len(values) < 3:
            limits.append(None)
            continue
        diffs = np.abs(np.diff(np.array(values)))
        if diffs[-1] > tol and diffs[-1] >= 0.9 * diffs[0]:
            # successive values are not settling on this ray
            limits.append(None)
            continue
        extrapolated, _res = _richardson(np.array(values))
        limits.append(extrapolated)
    if any(v is None for v in limits):
        return NtLimitResult(tuple(limits), False, None)
    center = limits[0]
    agreement = all(abs(v - center) <= tol * (1.0 + abs(center)) for v in limits)
    return NtLimitResult(tuple(limits), agreement, center if agreement else None)
