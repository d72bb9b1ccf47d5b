"""Exact geometry of the unit ball of C^n.

Points are plain numpy complex vectors.  Automorphisms of the ball are kept
projectively, as invertible (n+1) x (n+1) complex matrices acting on
homogeneous coordinates [z : 1]; composition is matrix product and inversion
is matrix inversion, so Moebius maps, unitaries and the parabolic family
share one closed algebra.  Complex geodesics and their Lempert projections
are represented by a carrier automorphism that straightens the geodesic onto
the first-axis slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularPointError

# Interior guard radius for ball points and boundary tolerance, chosen for
# double-precision headroom.
INTERIOR_EPS = 1e-12
BOUNDARY_TOL = 1e-12


def as_cvec(z, dim: int | None = None) -> np.ndarray:
    """Coerce ``z`` to a 1-d complex vector, checking finiteness and length."""
    v = np.atleast_1d(np.asarray(z, dtype=complex))
    if v.ndim != 1:
        raise DomainError(f"expected a vector, got array of shape {v.shape}")
    if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
        raise DomainError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise DomainError(f"expected dimension {dim}, got {v.size}")
    return v


def herm(a, b) -> complex:
    """Hermitian inner product <a, b> = sum_j a_j * conj(b_j)."""
    return complex(np.dot(np.asarray(a), np.conj(np.asarray(b))))


def check_ball_point(z, dim: int | None = None) -> np.ndarray:
    """Validate that ``z`` lies in the open ball (within the interior guard)."""
    v = as_cvec(z, dim)
    if np.linalg.norm(v) > 1.0 - INTERIOR_EPS:
        raise DomainError(f"point with norm {np.linalg.norm(v):.17g} is not an interior ball point")
    return v


def check_boundary_point(p, dim: int | None = None) -> np.ndarray:
    """Validate that ``p`` lies on the unit sphere (within tolerance)."""
    v = as_cvec(p, dim)
    if abs(np.linalg.norm(v) - 1.0) > BOUNDARY_TOL:
        raise DomainError(f"point with norm {np.linalg.norm(v):.17g} is not a boundary point")
    return v


class ProjectiveAutomorphism:
    """A ball automorphism stored as a projective-linear map.

    The matrix acts on homogeneous coordinates: with blocks
    ``[[A, b], [c, d]]``, the map is ``z -> (A z + b) / (c . z + d)``
    (plain, non-Hermitian dot in the denominator).
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise DomainError(f"projective matrix must be square of size >= 2, got {m.shape}")
        if abs(np.linalg.det(m)) < 1e-300:
            raise DomainError("projective matrix must be invertible")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    @classmethod
    def identity(cls, dim: int) -> "ProjectiveAutomorphism":
        return cls(np.eye(dim + 1))

    def __call__(self, z) -> np.ndarray:
        return self.apply(z)

    def apply(self, z) -> np.ndarray:
        z = as_cvec(z, self.dim)
        n = self.dim
        num = self.matrix[:n, :n] @ z + self.matrix[:n, n]
        den = np.dot(self.matrix[n, :n], z) + self.matrix[n, n]
        if abs(den) < 1e-14:
            raise SingularPointError(f"projective denominator vanishes at {z}")
        return num / den

    def jacobian(self, z) -> np.ndarray:
        """Holomorphic differential at ``z``, by exact rational differentiation."""
        z = as_cvec(z, self.dim)
        n = self.dim
        a = self.matrix[:n, :n]
        c = self.matrix[n, :n]
        den = np.dot(c, z) + self.matrix[n, n]
        if abs(den) < 1e-14:
            raise SingularPointError(f"projective denominator vanishes at {z}")
        image = (a @ z + self.matrix[:n, n]) / den
        return a / den - np.outer(image, c) / den

    def compose(self, other: "ProjectiveAutomorphism") -> "ProjectiveAutomorphism":
        """The map ``self o other``."""
        return ProjectiveAutomorphism(self.matrix @ other.matrix)

    def __matmul__(self, other: "ProjectiveAutomorphism") -> "ProjectiveAutomorphism":
        return self.compose(other)

    def inverse(self) -> "ProjectiveAutomorphism":
        return ProjectiveAutomorphism(np.linalg.inv(self.matrix))

    def __repr__(self):
        return f"ProjectiveAutomorphism(dim={self.dim})"


def auto_apply(t: ProjectiveAutomorphism, z) -> np.ndarray:
    """Apply an automorphism to a point (dehomogenized image)."""
    return t.apply(z)


def auto_jacobian(t: ProjectiveAutomorphism, z) -> np.ndarray:
    """Exact holomorphic Jacobian matrix of ``t`` at ``z``."""
    return t.jacobian(z)


def moebius_center(a) -> ProjectiveAutomorphism:
    """The Moebius automorphism T_a of the ball with T_a(a) = 0.

    For a = 0 this is the identity.  Otherwise the standard involution
    T_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>), with P_a the orthogonal
    projection onto C a, Q_a = I - P_a and s_a = sqrt(1 - |a|^2).
    """
    a = check_ball_point(a)
    n = a.size
    if np.linalg.norm(a) == 0.0:
        return ProjectiveAutomorphism.identity(n)
    norm2 = float(np.vdot(a, a).real)
    proj = np.outer(a, np.conj(a)) / norm2
    s = np.sqrt(1.0 - norm2)
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[:n, :n] = -(proj + s * (np.eye(n) - proj))
    m[:n, n] = a
    m[n, :n] = -np.conj(a)
    m[n, n] = 1.0
    return ProjectiveAutomorphism(m)


def unitary_automorphism(u) -> ProjectiveAutomorphism:
    """Embed a unitary matrix as a projective automorphism fixing 0."""
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    if not np.allclose(u @ u.conj().T, np.eye(n), atol=1e-10):
        raise DomainError("matrix is not unitary")
    m = np.zeros((n + 1, n + 1), dtype=complex)
    m[:n, :n] = u
    m[n, n] = 1.0
    return ProjectiveAutomorphism(m)


def parabolic_automorphism(beta: float, theta: float) -> ProjectiveAutomorphism:
    """Parabolic automorphism of the 2-ball fixing e_1, with s = sqrt(2 beta).

    Implements
        z -> (-s z2 + (1-beta) z1 + beta, e^{i theta} (z2 + s z1 - s))
             / (-s z2 - beta z1 + 1 + beta).
    """
    if beta < 0:
        raise DomainError(f"beta must be nonnegative, got {beta}")
    s = np.sqrt(2.0 * beta)
    phase = np.exp(1j * theta)
    m = np.array(
        [
            [1.0 - beta, -s, beta],
            [s * phase, phase, -s * phase],
            [-beta, -s, 1.0 + beta],
        ],
        dtype=complex,
    )
    return ProjectiveAutomorphism(m)


def kobayashi_distance(z, w) -> float:
    """Kobayashi distance of the ball, artanh |T_z(w)|.

    Computed through the Moebius identity
    1 - |T_z(w)|^2 = (1 - |z|^2)(1 - |w|^2) / |1 - <z, w>|^2.
    """
    z = check_ball_point(z)
    w = check_ball_point(w, z.size)
    sigma = _moebius_sigma(z, w)
    t = np.sqrt(max(0.0, 1.0 - sigma))
    if t >= 1.0:
        return np.inf
    return float(np.arctanh(t))


def _moebius_sigma(z, w) -> float:
    """(1 - |z|^2)(1 - |w|^2) / |1 - <z, w>|^2, which equals 1 - |T_z(w)|^2."""
    q = 1.0 - herm(z, w)
    nz = 1.0 - float(np.vdot(z, z).real)
    nw = 1.0 - float(np.vdot(w, w).real)
    return nz * nw / abs(q) ** 2


@dataclass(frozen=True)
class ProjectionDevice:
    """A complex geodesic through an interior basepoint and a boundary target.

    ``carrier`` is an automorphism M sending the geodesic onto the axis
    slice, M(geodesic(zeta)) = zeta e_1, with M(basepoint) = 0 and
    M(target) = e_1.  The geodesic is zeta -> M^{-1}(zeta e_1), the left
    inverse of the geodesic is z -> M_1(z) (first component), and the
    Lempert projection retracts along affine fibers.
    """

    basepoint: np.ndarray
    target: np.ndarray
    direction: np.ndarray
    carrier: ProjectiveAutomorphism
    _carrier_inv: ProjectiveAutomorphism = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_carrier_inv", self.carrier.inverse())

    @property
    def dim(self) -> int:
        return self.carrier.dim

    def geodesic(self, zeta: complex) -> np.ndarray:
        """The geodesic parameterization, zeta -> M^{-1}(zeta e_1)."""
        e = np.zeros(self.dim, dtype=complex)
        e[0] = zeta
        return self._carrier_inv.apply(e)

    def rho_tilde(self, z) -> complex:
        """Left inverse of the geodesic: first component of the carrier image."""
        return complex(self.carrier.apply(z)[0])

    def rho(self, z) -> np.ndarray:
        """Lempert projection of the ball onto the geodesic."""
        return self.geodesic(self.rho_tilde(z))

    def rho_tilde_differential(self, z, v) -> complex:
        """d(rho_tilde)_z . v, exact from the projective closed form."""
        z = as_cvec(z, self.dim)
        v = as_cvec(v, self.dim)
        n = self.dim
        m = self.carrier.matrix
        den = np.dot(m[n, :n], z) + m[n, n]
        if abs(den) < 1e-14:
            raise SingularPointError(f"carrier denominator vanishes at {z}")
        value = (np.dot(m[0, :n], z) + m[0, n]) / den
        return complex(np.dot(m[0, :n], v) / den - value * np.dot(m[n, :n], v) / den)


def device_rho_tilde_differential(dev: ProjectionDevice, z, v) -> complex:
    return dev.rho_tilde_differential(z, v)


def _unitary_sending_to_e1(v: np.ndarray) -> np.ndarray:
    """A unitary matrix U with U v = e_1, built by Gram-Schmidt completion."""
    n = v.size
    cols = [v / np.linalg.norm(v)]
    for j in range(n):
        if len(cols) == n:
            break
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        u = e - sum(herm(e, c) * c for c in cols)
        norm = np.linalg.norm(u)
        if norm > 1e-7:
            cols.append(u / norm)
    q = np.stack(cols, axis=1)
    return q.conj().T


def geodesic_device(z0, p) -> ProjectionDevice:
    """The Lempert projection device through interior z0 and boundary p.

    The carrier is U T_{z0} where T_{z0} is the Moebius involution centered
    at z0 and U is a unitary sending the direction v = T_{z0}(p) to e_1;
    the geodesic is then zeta -> T_{z0}^{-1}(zeta v).
    """
    z0 = check_ball_point(z0)
    p = check_boundary_point(p, z0.size)
    t = moebius_center(z0)
    v = t.apply(p)
    vnorm = np.linalg.norm(v)
    if abs(vnorm - 1.0) > 1e-6:
        raise DomainError("degenerate geodesic direction: target does not map to the sphere")
    v = v / vnorm
    u = _unitary_sending_to_e1(v)
    carrier = unitary_automorphism(u).compose(t)
    return ProjectionDevice(basepoint=z0, target=p, direction=v, carrier=carrier)


def device_from_carrier(m: ProjectiveAutomorphism) -> ProjectionDevice:
    """Build a projection device from any automorphism straightening it.

    ``m`` must map some interior point to 0 and some boundary point to e_1;
    the device data is recovered from m^{-1}.
    """
    inv = m.inverse()
    z0 = inv.apply(np.zeros(m.dim, dtype=complex))
    e1 = np.zeros(m.dim, dtype=complex)
    e1[0] = 1.0
    p = inv.apply(e1)
    pnorm = np.linalg.norm(p)
    if abs(pnorm - 1.0) > 1e-9:
        raise DomainError("carrier does not send a boundary point to e_1")
    p = p / pnorm
    z0 = check_ball_point(z0)
    v = moebius_center(z0).apply(p)
    v = v / np.linalg.norm(v)
    return ProjectionDevice(basepoint=z0, target=p, direction=v, carrier=m)
