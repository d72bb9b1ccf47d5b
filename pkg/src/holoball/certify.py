"""Sampled-inequality certifiers for infinitesimal generators.

Each certifier evaluates a criterion margin over a seeded low-discrepancy
sample and reports the worst case.  Margins are normalized by one plus the
local derivative magnitude before they are compared with the tolerance,
because the raw kernel differentials blow up near the boundary and would
otherwise make a single tolerance meaningless across the ball.

A "pass" verdict is evidence over the sample set, not a proof: the report
carries the sample count and worst margin, and ``CertReport.certified_pass``
additionally demands a strictly interior margin.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, EvaluationError, SingularPairError, SingularPointError
from .geometry import as_cvec, check_boundary_point, kobayashi_distance
from .kernels import green_differential_parts, poisson, poisson_differential
from .sampling import CertReport, SampleSpec, ball_pairs, ball_points, make_report, sphere_points

DEFAULT_TOL = 1e-9

_FIELD_ERRORS = (EvaluationError, SingularPointError, SingularPairError, DomainError)


class scalar_field:
    """Adapt a scalar disc map ``zeta -> g(zeta)`` to the vector-field protocol."""

    dim = 1

    def __init__(self, g):
        self._g = g

    def __call__(self, z):
        return np.atleast_1d(np.asarray(self._g(complex(np.atleast_1d(z)[0])), dtype=complex))


class _negated:
    def __init__(self, f):
        self._f = f
        self.dim = f.dim

    def __call__(self, z):
        return -self._f(z)


def certify_generator_green(field, spec: SampleSpec = SampleSpec(), *,
                            tol: float = DEFAULT_TOL) -> CertReport:
    """Generator test via the Green differential: d(G)|_(z,w).(F(z),F(w)) <= 0.

    The margin per pair is minus that pairing, normalized; semicomplete
    fields keep every margin nonnegative.
    """
    z_arr, w_arr = ball_pairs(spec, field.dim)
    margins, witnesses = [], []
    errors = 0
    for z, w in zip(z_arr, w_arr):
        try:
            raw, scale = green_differential_parts(z, w, field(z), field(w))
        except _FIELD_ERRORS:
            errors += 1
            continue
        margins.append(-raw / (1.0 + scale))
        witnesses.append((z, w))
    return make_report(margins, witnesses, tol, errors=errors)


def certify_generator_ball(field, spec: SampleSpec = SampleSpec(), *,
                           tol: float = DEFAULT_TOL) -> CertReport:
    """Generator test via the explicit two-point ball inequality.

    margin(z, w) = Re[(<F(z),w> + <z,F(w)>)/(1 - <z,w>)]
                   - Re<z,F(z)>/(1-|z|^2) - Re<w,F(w)>/(1-|w|^2).
    """
    z_arr, w_arr = ball_pairs(spec, field.dim)
    margins, witnesses = [], []
    errors = 0
    for z, w in zip(z_arr, w_arr):
        try:
            fz, fw = field(z), field(w)
        except _FIELD_ERRORS:
            errors += 1
            continue
        t1 = np.vdot(z, fz).real / (1.0 - np.vdot(z, z).real)
        t2 = np.vdot(w, fw).real / (1.0 - np.vdot(w, w).real)
        t3 = ((np.vdot(w, fz) + np.vdot(fw, z)) / (1.0 - np.vdot(w, z))).real
        raw = t3 - t1 - t2
        scale = abs(t1) + abs(t2) + abs(t3)
        margins.append(raw / (1.0 + scale))
        witnesses.append((z, w))
    return make_report(margins, witnesses, tol, errors=errors)


def certify_generator_shift(field, spec: SampleSpec = SampleSpec(), *,
                            tol: float = DEFAULT_TOL,
                            r_grid=(1e-3, 1e-2, 1e-1)) -> CertReport:
    """Generator test via backward Euler shifts.

    Requires k(z - r F(z), w - r F(w)) >= k(z, w) for every grid r keeping
    both shifted points in the ball; pairs where no grid r qualifies are
    skipped, and the report is inconclusive if that kills every pair.
    """
    z_arr, w_arr = ball_pairs(spec, field.dim)
    margins, witnesses = [], []
    errors = 0
    for z, w in zip(z_arr, w_arr):
        try:
            fz, fw = field(z), field(w)
        except _FIELD_ERRORS:
            errors += 1
            continue
        base = kobayashi_distance(z, w)
        worst = None
        for r in r_grid:
            zs, ws = z - r * fz, w - r * fw
            if max(np.linalg.norm(zs), np.linalg.norm(ws)) > 1.0 - 1e-12:
                continue
            shifted = kobayashi_distance(zs, ws)
            value = (shifted - base) / (1.0 + base)
            worst = value if worst is None else min(worst, value)
        if worst is None:
            errors += 1
            continue
        margins.append(worst)
        witnesses.append((z, w))
    msg = "" if margins else "all pairs left the ball under every grid shift"
    return make_report(margins, witnesses, tol, errors=errors, extra_message=msg)


def certify_group(field, spec: SampleSpec = SampleSpec(), *,
                  tol: float = DEFAULT_TOL) -> CertReport:
    """Group test: both the field and its negative must certify as generators,
    i.e. the Green pairing vanishes identically up to tolerance."""
    fwd = certify_generator_green(field, spec, tol=tol)
    bwd = certify_generator_green(_negated(field), spec, tol=tol)
    if fwd.verdict == "inconclusive" or bwd.verdict == "inconclusive":
        return CertReport(
            verdict="inconclusive", min_margin=np.nan, witness=None, tolerance=tol,
            samples_used=fwd.samples_used + bwd.samples_used,
            message="one direction was inconclusive",
        )
    worse = fwd if fwd.min_margin <= bwd.min_margin else bwd
    verdict = "pass" if (fwd.passed and bwd.passed) else "fail"
    message = "" if verdict == "pass" else (
        "forward direction failed" if not fwd.passed else "reversed field failed"
    )
    return CertReport(
        verdict=verdict, min_margin=worse.min_margin, witness=worse.witness,
        tolerance=tol, samples_used=fwd.samples_used + bwd.samples_used,
        max_margin=max(fwd.max_margin, bwd.max_margin), message=message,
    )


def quadratic_margin(big_a, b, u) -> float:
    """Pointwise sphere margin Re<A u, u> - |<b, u>| of the quadratic criterion."""
    u = as_cvec(u)
    return float(np.vdot(u, np.asarray(big_a) @ u).real) - abs(complex(np.vdot(b, u)))


def certify_quadratic(a, big_a, b, sphere_samples: int = 400, *,
                      seed: int = 0, tol: float = DEFAULT_TOL) -> CertReport:
    """Criterion for G(z) = a - <z,a>z - [Az + <z,b>z] to generate a semigroup:
    |<b, u>| <= Re<A u, u> on the whole unit sphere.

    Quasi-uniform sphere seeds are polished by projected gradient descent
    from the five worst; equality everywhere (within tol) is flagged as a
    group candidate.  The constant term ``a`` does not enter the margin.
    """
    a = as_cvec(a)
    n = a.size
    big_a = np.asarray(big_a, dtype=complex)
    b = as_cvec(b, n)
    if big_a.shape != (n, n):
        raise DomainError(f"matrix must be {n}x{n}, got {big_a.shape}")
    seeds = sphere_points(sphere_samples, n, seed)
    margins = np.array([quadratic_margin(big_a, b, u) for u in seeds])
    order = np.argsort(margins)
    refined = [(margins[k], seeds[k]) for k in order]
    for k in order[:5]:
        u, val = _sphere_descent(lambda x: quadratic_margin(big_a, b, x), seeds[k])
        refined.append((val, u))
    refined.sort(key=lambda t: t[0])
    min_margin, witness = refined[0]
    group_candidate = bool(max(abs(m) for m in margins) <= tol and abs(min_margin) <= tol)
    verdict = "fail" if min_margin < -tol else "pass"
    return CertReport(
        verdict=verdict, min_margin=float(min_margin), witness=witness,
        tolerance=tol, samples_used=sphere_samples,
        max_margin=float(margins.max()), group_candidate=group_candidate,
    )


def _sphere_descent(f, u0, iterations: int = 60, h: float = 1e-7):
    """Projected gradient descent for a smooth function on the unit sphere."""
    n = u0.size
    x = np.concatenate([u0.real, u0.imag])
    x /= np.linalg.norm(x)

    def fx(x):
        u = x[:n] + 1j * x[n:]
        return f(u / np.linalg.norm(u))

    val = fx(x)
    step = 0.1
    for _ in range(iterations):
        grad = np.zeros_like(x)
        for j in range(2 * n):
            e = np.zeros_like(x)
            e[j] = h
            grad[j] = (fx(x + e) - fx(x - e)) / (2 * h)
        grad -= np.dot(grad, x) * x
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-12:
            break
        improved = False
        while step > 1e-12:
            cand = x - step * grad / gnorm
            cand /= np.linalg.norm(cand)
            cval = fx(cand)
            if cval < val - 1e-16:
                x, val, improved = cand, cval, True
                step = min(step * 1.5, 0.5)
                break
            step /= 2
        if not improved:
            break
    u = x[:n] + 1j * x[n:]
    return u / np.linalg.norm(u), val


def certify_brfp_rate(field, p, beta: float, spec: SampleSpec = SampleSpec(), *,
                      tol: float = DEFAULT_TOL) -> CertReport:
    """Boundary rate criterion d(u_p)_z . F(z) + beta u_p(z) <= 0 on samples.

    A pass certifies (in the sampled sense) a boundary regular fixed point
    at p with dilatation coefficients at most e^{beta t}.
    """
    p = check_boundary_point(p, field.dim)
    pts = ball_points(spec, field.dim)
    margins, witnesses = [], []
    errors = 0
    for z in pts:
        try:
            fz = field(z)
        except _FIELD_ERRORS:
            errors += 1
            continue
        du = poisson_differential(p, z, fz)
        u = poisson(p, z)
        raw = -(du + beta * u)
        scale = abs(du) + abs(beta * u)
        margins.append(raw / (1.0 + scale))
        witnesses.append(z)
    return make_report(margins, witnesses, tol, errors=errors)


def certify_stationary(field, p, spec: SampleSpec = SampleSpec(), *,
                       tol: float = DEFAULT_TOL) -> CertReport:
    """Stationary-point criterion at p: the rate criterion with beta = 0."""
    return certify_brfp_rate(field, p, 0.0, spec, tol=tol)


def estimate_rate_b(field, p, spec: SampleSpec = SampleSpec()) -> float:
    """Sampled infimum of d(u_p)_z . F(z) / u_p(z), the decay exponent b
    of the dilatation coefficients e^{-t b} at a boundary regular fixed
    point p (caller-asserted).

    The best sample is refined by a local descent; a dive below -1e6 is
    reported as -inf, which is inconsistent with p being such a point.
    """
    p = check_boundary_point(p, field.dim)

    def ratio(z):
        fz = field(z)
        return poisson_differential(p, z, fz) / poisson(p, z)

    pts = ball_points(spec, field.dim)
    best_val = np.inf
    best_z = None
    for z in pts:
        try:
            val = ratio(z)
        except _FIELD_ERRORS:
            continue
        if val < best_val:
            best_val, best_z = val, z
    if best_z is None:
        raise EvaluationError("no sample point was evaluable")
    val, _z = _ball_descent(ratio, best_z, spec.radius_cap)
    if val < -1e6:
        return -np.inf
    return float(val)


def _ball_descent(f, z0, radius_cap, iterations: int = 80, h: float = 1e-7):
    n = z0.size
    x = np.concatenate([z0.real, z0.imag])

    def fx(x):
        z = x[:n] + 1j * x[n:]
        r = np.linalg.norm(z)
        if r > radius_cap:
            z = z * (radius_cap / r)
        try:
            return f(z)
        except _FIELD_ERRORS:
            return np.inf
    val = fx(x)
    step = 0.05
    for _ in range(iterations):
        grad = np.zeros_like(x)
        for j in range(2 * n):
            e = np.zeros_like(x)
            e[j] = h
            grad[j] = (fx(x + e) - fx(x - e)) / (2 * h)
        gnorm = np.linalg.norm(grad)
        if not np.isfinite(gnorm) or gnorm < 1e-13:
            break
        improved = False
        while step > 1e-12:
            cand = x - step * grad / gnorm
            cval = fx(cand)
            if cval < val - 1e-16:
                x, val, improved = cand, cval, True
                step = min(step * 1.5, 0.2)
                break
            step /= 2
        if not improved:
            break
    z = x[:n] + 1j * x[n:]
    return val, z


def verify_berkson_porta(field, b: complex, spec: SampleSpec = SampleSpec(), *,
                         tol: float = DEFAULT_TOL) -> CertReport:
    """Disc representation check: p(z) = G(z) / ((z - b)(conj(b) z - 1)) must
    have Re p >= 0; samples too close to the denominator zeros are skipped."""
    if field.dim != 1:
        raise DomainError("Berkson-Porta verification is a disc criterion")
    b = complex(b)
    if abs(b) > 1.0 + 1e-12:
        raise DomainError(f"base point must lie in the closed disc, got |b| = {abs(b)}")
    pts = ball_points(spec, 1)
    margins, witnesses = [], []
    errors = 0
    for z in pts:
        zeta = complex(z[0])
        den = (zeta - b) * (np.conj(b) * zeta - 1.0)
        if abs(den) < 1e-8:
            errors += 1
            continue
        try:
            p_val = complex(field(z)[0]) / den
        except _FIELD_ERRORS:
            errors += 1
            continue
        margins.append(p_val.real / (1.0 + abs(p_val)))
        witnesses.append(zeta)
    return make_report(margins, witnesses, tol, errors=errors)
