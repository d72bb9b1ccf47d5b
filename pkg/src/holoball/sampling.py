"""Deterministic low-discrepancy sampling in the ball and certification reports.

Samples come from a seeded scrambled Sobol stream mapped into the complex
ball (radius via the 2n-th-root volume transform), so a fixed seed yields a
bit-identical sample stream and therefore bit-identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.stats import norm, qmc


@dataclass(frozen=True)
class SampleSpec:
    """Reproducible sampling plan for certification runs."""

    count: int = 200
    seed: int = 0
    radius_cap: float = 0.999
    pair_separation: float = 1e-3

    def __post_init__(self):
        if self.count <= 0:
            raise ValueError("count must be positive")
        if not 0.0 < self.radius_cap < 1.0:
            raise ValueError("radius_cap must lie in (0, 1)")


@dataclass(frozen=True)
class CertReport:
    """Outcome of a sampled-inequality certification.

    ``verdict`` is ``"pass"``, ``"fail"`` or ``"inconclusive"``; a pass is
    evidence over the sample set, not a proof.  ``witness`` is the sample (or
    pair) attaining ``min_margin``.  ``certified_pass`` is the stricter flag
    requiring the whole margin distribution to sit strictly above +tolerance.
    """

    verdict: str
    min_margin: float
    witness: Any
    tolerance: float
    samples_used: int
    max_margin: float | None = None
    group_candidate: bool | None = None
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def certified_pass(self) -> bool:
        return self.verdict == "pass" and self.min_margin > self.tolerance

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "min_margin": self.min_margin,
            "witness": _encode(self.witness),
            "tolerance": self.tolerance,
            "samples_used": self.samples_used,
        }
        if self.max_margin is not None:
            out["max_margin"] = self.max_margin
        if self.group_candidate is not None:
            out["group_candidate"] = self.group_candidate
        if self.message:
            out["message"] = self.message
        return out


def _encode(obj):
    if obj is None:
        return None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return [_encode(complex(v)) for v in obj]
    if isinstance(obj, (tuple, list)):
        return [_encode(v) for v in obj]
    return obj


def make_report(margins, witnesses, tolerance, *, errors=0, extra_message="",
                group_tolerance=None) -> CertReport:
    """Assemble a CertReport from per-sample margins.

    The verdict is "fail" iff the worst margin is below -tolerance and
    "inconclusive" when no sample could be evaluated at all.
    """
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        return CertReport(
            verdict="inconclusive", min_margin=np.nan, witness=None,
            tolerance=tolerance, samples_used=0,
            message=extra_message or "no sample could be evaluated",
        )
    k = int(np.argmin(margins))
    min_margin = float(margins[k])
    max_margin = float(margins.max())
    verdict = "fail" if min_margin < -tolerance else "pass"
    group_candidate = None
    if group_tolerance is not None:
        group_candidate = bool(np.max(np.abs(margins)) <= group_tolerance)
    message = extra_message
    if errors:
        message = (message + "; " if message else "") + f"{errors} samples skipped on evaluation errors"
    return CertReport(
        verdict=verdict, min_margin=min_margin, witness=witnesses[k],
        tolerance=tolerance, samples_used=int(margins.size),
        max_margin=max_margin, group_candidate=group_candidate, message=message,
    )


def _sobol_unit(count: int, dims: int, seed: int) -> np.ndarray:
    eng = qmc.Sobol(d=dims, scramble=True, seed=seed)
    # draw a full power-of-2 block for balance, then slice
    m = max(1, int(np.ceil(np.log2(count))))
    u = eng.random_base2(m)[:count]
    return np.clip(u, 1e-12, 1.0 - 1e-12)


def _directions(u: np.ndarray, dim: int) -> np.ndarray:
    g = norm.ppf(u)
    vec = g[:, :dim] + 1j * g[:, dim:]
    norms = np.linalg.norm(vec, axis=1, keepdims=True)
    return vec / norms


def ball_points(spec: SampleSpec, dim: int) -> np.ndarray:
    """``spec.count`` quasi-uniform points in the ball of radius ``radius_cap``."""
    u = _sobol_unit(spec.count, 2 * dim + 1, spec.seed)
    radius = spec.radius_cap * u[:, -1] ** (1.0 / (2 * dim))
    return _directions(u[:, :-1], dim) * radius[:, None]


def ball_pairs(spec: SampleSpec, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (z, w) in the ball with |z - w| >= ``spec.pair_separation``."""
    want = spec.count
    zs, ws = [], []
    for round_ in range(6):
        batch = SampleSpec(count=2 * want, seed=spec.seed + 1013 * round_,
                           radius_cap=spec.radius_cap,
                           pair_separation=spec.pair_separation)
        pts = ball_points(batch, dim)
        z, w = pts[0::2], pts[1::2]
        keep = np.linalg.norm(z - w, axis=1) >= spec.pair_separation
        zs.append(z[keep])
        ws.append(w[keep])
        if sum(len(a) for a in zs) >= want:
            break
    z = np.concatenate(zs)[:want]
    w = np.concatenate(ws)[:want]
    return z, w


def sphere_points(count: int, dim: int, seed: int) -> np.ndarray:
    """Quasi-uniform points on the unit sphere of C^dim."""
    u = _sobol_unit(count, 2 * dim, seed)
    return _directions(u, dim)
