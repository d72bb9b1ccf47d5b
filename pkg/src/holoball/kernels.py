"""Invariant kernels of the ball: Green function, Poisson kernel, horospheres.

All differentials here are real differentials of real-valued functions on
C^n ~ R^{2n}, computed analytically from the closed forms; finite differences
are used only as test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DomainError, EvaluationError, SingularPairError
from .geometry import (
    ProjectionDevice,
    as_cvec,
    check_ball_point,
    check_boundary_point,
    herm,
    kobayashi_distance,
    _moebius_sigma,
)
from .sampling import CertReport, SampleSpec, ball_points, make_report

# Pairs closer than this are rejected by the Green differential: the
# logarithmic pole makes it unbounded, and the generator criteria only ever
# need z != w.
GREEN_PAIR_SEPARATION = 1e-6


def green(z, w) -> float:
    """Pluricomplex Green function of the ball, log |T_z(w)|.

    Symmetric, negative, and -inf exactly on the diagonal.
    """
    z = check_ball_point(z)
    w = check_ball_point(w, z.size)
    sigma = _moebius_sigma(z, w)
    if sigma >= 1.0:
        return -np.inf
    return 0.5 * float(np.log1p(-sigma))


def green_differential(z, w, vz, vw) -> float:
    """Real differential of the Green function at (z, w) applied to (vz, vw)."""
    raw, _scale = green_differential_parts(z, w, vz, vw)
    return raw


def green_differential_parts(z, w, vz, vw) -> tuple[float, float]:
    """Green differential together with a local derivative-magnitude scale.

    The scale (sum of the absolute values of the three constituent terms) is
    what certification margins are normalized with, since the differential
    blows up near the boundary and the diagonal.
    """
    z = check_ball_point(z)
    w = check_ball_point(w, z.size)
    if np.linalg.norm(z - w) < GREEN_PAIR_SEPARATION:
        raise SingularPairError("pair too close to the diagonal for the Green differential")
    vz = as_cvec(vz, z.size)
    vw = as_cvec(vw, z.size)
    sigma = _moebius_sigma(z, w)
    pref = sigma / (1.0 - sigma)
    q = 1.0 - herm(z, w)
    t1 = herm(vz, z).real / (1.0 - float(np.vdot(z, z).real))
    t2 = herm(vw, w).real / (1.0 - float(np.vdot(w, w).real))
    t3 = ((herm(vz, w) + herm(z, vw)) / q).real
    raw = pref * (t1 + t2 - t3)
    scale = pref * (abs(t1) + abs(t2) + abs(t3))
    return raw, scale


def poisson(p, z) -> float:
    """Pluricomplex Poisson kernel of the ball with pole at boundary p.

    u_p(z) = -(1 - |z|^2) / |1 - <z, p>|^2, normalized so u_p(0) = -1.
    """
    p = check_boundary_point(p)
    z = check_ball_point(z, p.size)
    q = 1.0 - herm(z, p)
    return -(1.0 - float(np.vdot(z, z).real)) / abs(q) ** 2


def poisson_differential(p, z, v) -> float:
    """Real differential of the Poisson kernel at z applied to v."""
    p = check_boundary_point(p)
    z = check_ball_point(z, p.size)
    v = as_cvec(v, p.size)
    q = 1.0 - herm(z, p)
    aq2 = abs(q) ** 2
    nz = 1.0 - float(np.vdot(z, z).real)
    return 2.0 * herm(v, z).real / aq2 - 2.0 * nz * (np.conj(q) * herm(v, p)).real / aq2 ** 2


@dataclass(frozen=True)
class HorosphereSpec:
    """Horosphere E(p, R): the sublevel set u_p < -1/R, with basepoint 0."""

    p: np.ndarray
    radius: float
    basepoint: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_boundary_point(self.p))
        if self.radius <= 0:
            raise DomainError(f"horosphere radius must be positive, got {self.radius}")
        _check_origin_basepoint(self.basepoint, self.p.size)


@dataclass(frozen=True)
class KRegionSpec:
    """Non-tangential approach region K(p, R), R > 1, with basepoint 0."""

    p: np.ndarray
    radius: float
    basepoint: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_boundary_point(self.p))
        if self.radius <= 1.0:
            raise DomainError(f"K-region radius must exceed 1, got {self.radius}")
        _check_origin_basepoint(self.basepoint, self.p.size)


def _check_origin_basepoint(basepoint, dim):
    # The ball formulas below are normalized at the origin.
    if basepoint is not None and np.linalg.norm(as_cvec(basepoint, dim)) != 0.0:
        raise DomainError("only the origin basepoint is supported")


def horosphere_contains(spec: HorosphereSpec, z) -> bool:
    """Membership test |1 - <z, p>|^2 / (1 - |z|^2) < R."""
    z = check_ball_point(z, spec.p.size)
    q = 1.0 - herm(z, spec.p)
    ratio = abs(q) ** 2 / (1.0 - float(np.vdot(z, z).real))
    return bool(ratio < spec.radius)


def busemann(p, z) -> float:
    """Horosphere potential lim_{w->p} [k(z, w) - k(0, w)] in closed form."""
    p = check_boundary_point(p)
    z = check_ball_point(z, p.size)
    q = 1.0 - herm(z, p)
    return 0.5 * float(np.log(abs(q) ** 2 / (1.0 - float(np.vdot(z, z).real))))


def kregion_contains(spec: KRegionSpec, z) -> bool:
    """Membership test busemann(p, z) + k(z, 0) < log R."""
    z = check_ball_point(z, spec.p.size)
    zero = np.zeros(spec.p.size)
    return bool(busemann(spec.p, z) + kobayashi_distance(z, zero) < np.log(spec.radius))


def poisson_pullback_factor(dev: ProjectionDevice, *, tol: float = 1e-9) -> float:
    """The positive factor a with u_p(geodesic(zeta)) = a * u_disc(zeta).

    Returned as -u_p(geodesic(0)); constancy of the ratio is verified on a
    zeta-grid and a ConsistencyError is raised if it drifts beyond ``tol``.
    """
    p = dev.target
    a = -poisson(p, dev.geodesic(0.0))
    one = np.ones(1)
    for zeta in (0.2, -0.35, 0.5j, -0.4 - 0.3j, 0.85, 0.6j - 0.2):
        num = poisson(p, dev.geodesic(zeta))
        den = poisson(one, np.array([zeta]))
        ratio = num / den
        if abs(ratio - a) > tol * max(1.0, abs(a)):
            raise ConsistencyError(
                f"Poisson pullback ratio is not constant: {ratio} vs {a} at zeta={zeta}"
            )
    return a


def julia_map_check(h, p, q, alpha: float, samples: SampleSpec | np.ndarray,
                    *, tol: float = 1e-9) -> CertReport:
    """Julia-type inequality check u_q(h(z)) <= (1/alpha) u_p(z) on samples.

    ``h`` is any callable holomorphic self-map of the ball.  The margin at z
    is (1/alpha) u_p(z) - u_q(h(z)), so a pass requires all margins above
    -tol (after normalization by the local kernel magnitude).
    """
    p = check_boundary_point(p)
    q = check_boundary_point(q, p.size)
    if alpha <= 0:
        raise DomainError(f"dilatation coefficient must be positive, got {alpha}")
    if isinstance(samples, SampleSpec):
        pts = ball_points(samples, p.size)
    else:
        pts = np.asarray(samples, dtype=complex)
    margins, witnesses = [], []
    errors = 0
    for z in pts:
        try:
            hz = h(z)
            hz = as_cvec(hz, p.size)
            if np.linalg.norm(hz) >= 1.0:
                raise EvaluationError(f"map image {hz} escapes the closed ball")
            bound = poisson(p, z) / alpha
            value = poisson(q, hz)
            raw = bound - value
            scale = abs(bound) + abs(value)
            margins.append(raw / (1.0 + scale))
            witnesses.append(z)
        except (EvaluationError, DomainError):
            errors += 1
    return make_report(margins, witnesses, tol, errors=errors)
