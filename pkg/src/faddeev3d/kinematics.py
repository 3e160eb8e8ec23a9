"""Jacobi-momentum kinematics for three unequal masses.

Conventions (used by every module downstream):

* CM frame; the single-particle momenta satisfy k1 + k2 + k3 = 0.
* Partition i: spectator i, pair (j,k) in cyclic order.  q_i = k_i and
  p_i = (m_k k_j - m_j k_k)/(m_j + m_k).
* The reference axis (z) points along the beam momentum q0, so the polar
  cosine of q0 itself is 1.  Angles enter only through polar cosines and
  azimuths; a "dihedral" cosine is cos(phi_a - phi_b), the angle between
  the (a, q0) and (b, q0) planes.

All momenta and masses in MeV.  Cosines are clamped into [-1, 1] after a
1e-12 tolerance check; a larger excursion raises, because it indicates a
formula error rather than roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormulaExcursionError, ValidationError
from .masses import MassSet

COS_CLAMP_TOL = 1.0e-12
DIHEDRAL_DEGENERACY_TOL = 1.0e-14

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# momentum containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphericalMomentum:
    """(magnitude, polar cosine, azimuth) triple with q0 as polar axis."""

    mag: float
    cos_theta: float
    phi: float

    def __post_init__(self):
        if self.mag < 0.0:
            raise ValidationError(f"momentum magnitude must be >= 0, got {self.mag!r}")
        if abs(self.cos_theta) > 1.0 + COS_CLAMP_TOL:
            raise FormulaExcursionError("cos_theta", self.cos_theta)
        object.__setattr__(self, "cos_theta", min(1.0, max(-1.0, self.cos_theta)))
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    def to_cartesian(self) -> np.ndarray:
        sin_theta = math.sqrt(max(0.0, 1.0 - self.cos_theta**2))
        return self.mag * np.array(
            [
                sin_theta * math.cos(self.phi),
                sin_theta * math.sin(self.phi),
                self.cos_theta,
            ]
        )

    @classmethod
    def from_cartesian(cls, v: np.ndarray) -> "SphericalMomentum":
        v = np.asarray(v, dtype=float)
        mag = float(np.linalg.norm(v))
        if mag == 0.0:
            return cls(0.0, 1.0, 0.0)
        phi = float(math.atan2(v[1], v[0])) % TWO_PI
        return cls(mag, float(v[2] / mag), phi)


@dataclass(frozen=True)
class PartitionMomenta:
    """Jacobi pair (p, q) tagged by the spectator index."""

    partition: int
    p: SphericalMomentum
    q: SphericalMomentum

    def __post_init__(self):
        if self.partition not in (1, 2, 3):
            raise ValidationError(f"partition must be 1, 2 or 3, got {self.partition!r}")


# ---------------------------------------------------------------------------
# partition changes (the six linear vector relations)
# ---------------------------------------------------------------------------


def jacobi_coefficients(from_partition: int, to_partition: int, masses: MassSet) -> tuple[float, float, float, float]:
    """Coefficients (app, apq, aqp, aqq) of the exact linear partition change

        p_to = app * p_from + apq * q_from
        q_to = aqp * p_from + aqq * q_from
    """
    if from_partition == to_partition:
        raise ValidationError("partition change needs two distinct partitions")
    if from_partition not in (1, 2, 3) or to_partition not in (1, 2, 3):
        raise ValidationError("partition indices must be in {1, 2, 3}")
    m1, m2, m3 = masses.m1, masses.m2, masses.m3
    mtot = masses.total
    table = {
        (2, 1): (-m2 / (m2 + m3), m3 * mtot / ((m1 + m3) * (m2 + m3)), -1.0, -m1 / (m1 + m3)),
        (3, 1): (-m3 / (m2 + m3), -m2 * mtot / ((m1 + m2) * (m2 + m3)), 1.0, -m1 / (m1 + m2)),
        (1, 2): (-m1 / (m1 + m3), -m3 * mtot / ((m2 + m3) * (m1 + m3)), 1.0, -m2 / (m2 + m3)),
        (3, 2): (-m3 / (m1 + m3), m1 * mtot / ((m1 + m2) * (m1 + m3)), -1.0, -m2 / (m1 + m2)),
        (1, 3): (-m1 / (m1 + m2), m2 * mtot / ((m2 + m3) * (m1 + m2)), -1.0, -m3 / (m2 + m3)),
        (2, 3): (-m2 / (m1 + m2), -m1 * mtot / ((m1 + m3) * (m1 + m2)), 1.0, -m3 / (m1 + m3)),
    }
    return table[(from_partition, to_partition)]


def jacobi_transform(from_partition: int, to_partition: int, pm: PartitionMomenta, masses: MassSet) -> PartitionMomenta:
    """Re-express a state given in one partition's Jacobi momenta in another's."""
    if pm.partition != from_partition:
        raise ValidationError(
            f"momenta tagged with partition {pm.partition}, asked to transform from {from_partition}"
        )
    app, apq, aqp, aqq = jacobi_coefficients(from_partition, to_partition, masses)
    p_from = pm.p.to_cartesian()
    q_from = pm.q.to_cartesian()
    p_to = app * p_from + apq * q_from
    q_to = aqp * p_from + aqq * q_from
    return PartitionMomenta(
        to_partition,
        SphericalMomentum.from_cartesian(p_to),
        SphericalMomentum.from_cartesian(q_to),
    )


def kinetic_energy(pm: PartitionMomenta, masses: MassSet) -> float:
    """Free three-body energy p^2/(2 mu_pair) + q^2/(2 nu_spectator), MeV."""
    mu = masses.pair_mu(pm.partition)
    nu = masses.nu(pm.partition)
    return pm.p.mag**2 / (2.0 * mu) + pm.q.mag**2 / (2.0 * nu)


# ---------------------------------------------------------------------------
# scalar angle algebra
# ---------------------------------------------------------------------------


def compose_cosine(cos_a, phi_a, cos_b, phi_b):
    """Mutual cosine of two directions given their polar cosines and azimuths."""
    sin_a = np.sqrt(np.maximum(0.0, 1.0 - np.square(cos_a)))
    sin_b = np.sqrt(np.maximum(0.0, 1.0 - np.square(cos_b)))
    return cos_a * cos_b + sin_a * sin_b * np.cos(phi_a - phi_b)


def _clamp_cosine(value: float, name: str, tol: float = COS_CLAMP_TOL, context: dict | None = None) -> float:
    if abs(value) > 1.0 + tol:
        raise FormulaExcursionError(name, value, context)
    return min(1.0, max(-1.0, value))


def _safe_ratio(num: float, mag: float) -> float:
    # direction cosine of a vector that may have zero length; the zero-length
    # limit always multiplies a vanishing weight downstream
    return num / mag if mag > 0.0 else 0.0


# ---------------------------------------------------------------------------
# kernel argument sets (rows of the coupled T-matrix system)
# ---------------------------------------------------------------------------

# row -> (relabelled mass order, angle sign)
# row 2 swaps m1 and m2 and flips every angle sign; row 3 cycles the masses
# (m1,m2,m3) -> (m3,m1,m2) keeping the signs
_ROW_RELABEL = {1: ((1, 2, 3), 1.0), 2: ((2, 1, 3), -1.0), 3: ((3, 1, 2), 1.0)}

# Green-function variant for (row, term); variants follow the permutation
# chain implemented in singularity_atlas
ROW_TERM_VARIANT = {(1, 1): 1, (1, 2): 2, (2, 1): 3, (2, 2): 4, (3, 1): 5, (3, 2): 6}

# (row, term) -> partition index of the coupled T-matrix under the integral
ROW_TERM_PARTNER = {(1, 1): 2, (1, 2): 3, (2, 1): 1, (2, 2): 3, (3, 1): 1, (3, 2): 2}


@dataclass(frozen=True)
class KernelTermGeometry:
    """Mass factors of one integral term of one row.

    The shifted t-matrix momentum is  sigma_f * (cf * q + q'')  and the
    shifted partner-T momentum is     sigma_g * (q + cg * q''),
    with all four numbers fixed by the row's mass relabelling.
    """

    row: int
    term: int
    cf: float
    cg: float
    sigma_f: float
    sigma_g: float
    variant: int
    partner: int


def kernel_term_geometry(row: int, term: int, masses: MassSet) -> KernelTermGeometry:
    if row not in (1, 2, 3):
        raise ValidationError(f"row must be 1, 2 or 3, got {row!r}")
    if term not in (1, 2):
        raise ValidationError(f"term must be 1 or 2, got {term!r}")
    order, sign = _ROW_RELABEL[row]
    a, b, c = (masses.mass(i) for i in order)
    if term == 1:
        cf = a / (a + c)
        cg = b / (b + c)
        sigma_f, sigma_g = -sign, sign
    else:
        cf = a / (a + b)
        cg = c / (b + c)
        sigma_f, sigma_g = sign, -sign
    return KernelTermGeometry(
        row, term, cf, cg, sigma_f, sigma_g, ROW_TERM_VARIANT[(row, term)], ROW_TERM_PARTNER[(row, term)]
    )


@dataclass(frozen=True)
class KernelArgs:
    """Scalar arguments of one kernel term at one phase-space point."""

    f: float
    theta_f: float
    g: float
    x_g: float
    x_dihedral: float
    y_qqpp: float
    y_pqpp: float
    y_pq: float
    y_qpp_q0: float
    x_qpp: float
    degenerate: bool


def kernel_args(
    row: int,
    term: int,
    p: SphericalMomentum,
    q: SphericalMomentum,
    qpp: SphericalMomentum,
    q0: float,
    masses: MassSet,
) -> KernelArgs:
    """Shifted momenta and cosines feeding one integral term of one row.

    ``q0`` is the beam momentum defining the polar axis; the returned
    scalars depend on it only through that choice of axis.
    """
    del q0  # parametric: defines the axis, does not enter the scalars
    geo = kernel_term_geometry(row, term, masses)

    y_pq = compose_cosine(p.cos_theta, p.phi, q.cos_theta, q.phi)
    y_qqpp = compose_cosine(q.cos_theta, q.phi, qpp.cos_theta, qpp.phi)
    y_pqpp = compose_cosine(p.cos_theta, p.phi, qpp.cos_theta, qpp.phi)
    x_qpp = qpp.cos_theta
    qm, qn = q.mag, qpp.mag

    f = math.sqrt((geo.cf * qm) ** 2 + qn**2 + 2.0 * geo.cf * qm * qn * y_qqpp)
    theta_f = geo.sigma_f * _safe_ratio(geo.cf * qm * y_pq + qn * y_pqpp, f)

    g = math.sqrt(qm**2 + (geo.cg * qn) ** 2 + 2.0 * geo.cg * qm * qn * y_qqpp)
    x_g = geo.sigma_g * _safe_ratio(qm * q.cos_theta + geo.cg * qn * x_qpp, g)
    y_gqpp = geo.sigma_g * _safe_ratio(qm * y_qqpp + geo.cg * qn, g)

    ctx = {"row": row, "term": term, "q": qm, "qpp": qn}
    theta_f = _clamp_cosine(theta_f, "theta_f", context=ctx)
    x_g = _clamp_cosine(x_g, "x_g", context=ctx)
    y_gqpp = _clamp_cosine(y_gqpp, "y_gqpp", context=ctx)

    x_dihedral, degenerate = dihedral_cosine(y_gqpp, x_g, x_qpp, context=ctx)
    return KernelArgs(
        f=f,
        theta_f=theta_f,
        g=g,
        x_g=x_g,
        x_dihedral=x_dihedral,
        y_qqpp=_clamp_cosine(y_qqpp, "y_qqpp", context=ctx),
        y_pqpp=_clamp_cosine(y_pqpp, "y_pqpp", context=ctx),
        y_pq=_clamp_cosine(y_pq, "y_pq", context=ctx),
        y_qpp_q0=x_qpp,
        x_qpp=x_qpp,
        degenerate=degenerate,
    )


def dihedral_cosine(y_ab: float, x_a: float, x_b: float, context: dict | None = None) -> tuple[float, bool]:
    """cos(phi_a - phi_b) from the mutual cosine and the two polar cosines.

    When either vector is (anti)parallel to the axis the dihedral angle is
    undefined; the limit 0 is returned with a degeneracy flag, because every
    integrand multiplies it by the vanishing sine weight.
    """
    denom = math.sqrt(max(0.0, 1.0 - x_a**2)) * math.sqrt(max(0.0, 1.0 - x_b**2))
    if denom < DIHEDRAL_DEGENERACY_TOL:
        return 0.0, True
    value = (y_ab - x_a * x_b) / denom
    # roundoff in the numerator is amplified by 1/denom near degeneracy
    tol = COS_CLAMP_TOL + 64.0 * np.finfo(float).eps / denom
    return _clamp_cosine(value, "x_dihedral", tol=tol, context=context), False


def kernel_args_grid(
    geo: KernelTermGeometry,
    q: float,
    x_q: float,
    qpp: np.ndarray,
    x_pp: np.ndarray,
    phi_pp: np.ndarray,
) -> dict[str, np.ndarray]:
    """Vectorised kernel-term arguments over broadcastable q'' coordinates.

    The outer state has azimuth 0 (only relative azimuths matter); the
    t-matrix polar cosine theta_f is omitted because the separable model is
    s-wave in the pair momentum.
    """
    y_qqpp = compose_cosine(x_q, 0.0, x_pp, phi_pp)
    f = np.sqrt(np.maximum((geo.cf * q) ** 2 + qpp**2 + 2.0 * geo.cf * q * qpp * y_qqpp, 0.0))
    g = np.sqrt(np.maximum(q**2 + (geo.cg * qpp) ** 2 + 2.0 * geo.cg * q * qpp * y_qqpp, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        x_g = np.where(g > 0.0, geo.sigma_g * (q * x_q + geo.cg * qpp * x_pp) / g, 0.0)
        y_gqpp = np.where(g > 0.0, geo.sigma_g * (q * y_qqpp + geo.cg * qpp) / g, 0.0)
    x_g = np.clip(x_g, -1.0, 1.0)
    y_gqpp = np.clip(y_gqpp, -1.0, 1.0)
    denom = np.sqrt(np.maximum(0.0, 1.0 - x_g**2)) * np.sqrt(np.maximum(0.0, 1.0 - x_pp**2))
    with np.errstate(invalid="ignore", divide="ignore"):
        x_dih = np.where(
            denom < DIHEDRAL_DEGENERACY_TOL, 0.0, (y_gqpp - x_g * x_pp) / np.maximum(denom, 1e-300)
        )
    return {
        "f": f,
        "g": g,
        "x_g": x_g,
        "x_dihedral": np.clip(x_dih, -1.0, 1.0),
        "y_qqpp": y_qqpp,
        "x_qpp": np.broadcast_to(x_pp, f.shape).copy(),
    }


def elastic_args_grid(
    k: int,
    masses: MassSet,
    q: float,
    x_q: float,
    qp: np.ndarray,
    x_p: np.ndarray,
    phi_p: np.ndarray,
) -> dict[str, np.ndarray]:
    """Vectorised elastic-term arguments over broadcastable q' coordinates."""
    if k not in (2, 3):
        raise ValidationError(f"elastic term index must be 2 or 3, got {k!r}")
    sign = 1.0 if k == 2 else -1.0
    ck = masses.mass(k) / (masses.m2 + masses.m3)
    y_qq = compose_cosine(x_q, 0.0, x_p, phi_p)
    p_k = np.sqrt(np.maximum(q**2 + (ck * qp) ** 2 + 2.0 * ck * q * qp * y_qq, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        x_pk = np.where(p_k > 0.0, sign * (q * x_q + ck * qp * x_p) / np.maximum(p_k, 1e-300), 0.0)
        y_vq = np.where(p_k > 0.0, sign * (q * y_qq + ck * qp) / np.maximum(p_k, 1e-300), 0.0)
    x_pk = np.clip(x_pk, -1.0, 1.0)
    y_vq = np.clip(y_vq, -1.0, 1.0)
    denom = np.sqrt(np.maximum(0.0, 1.0 - x_pk**2)) * np.sqrt(np.maximum(0.0, 1.0 - x_p**2))
    with np.errstate(invalid="ignore", divide="ignore"):
        x_dih = np.where(
            denom < DIHEDRAL_DEGENERACY_TOL, 0.0, (y_vq - x_pk * x_p) / np.maximum(denom, 1e-300)
        )
    return {"p_k": p_k, "x_pk": x_pk, "x_dihedral": np.clip(x_dih, -1.0, 1.0), "y_qq": y_qq}


# ---------------------------------------------------------------------------
# elastic-amplitude arguments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElasticArgs:
    p_k: float
    x_pk: float
    x_dihedral: float
    c_qq: float
    y_qq: float
    degenerate: bool


def elastic_args(k: int, q: SphericalMomentum, qprime: SphericalMomentum, masses: MassSet) -> ElasticArgs:
    """Arguments of the T_k matrix inside the elastic amplitude, k in {2, 3}.

    The shifted momentum is (-1)^k (q + q' m_k/(m2+m3)); the sign convention
    flips every cosine between k = 2 and k = 3.
    """
    if k not in (2, 3):
        raise ValidationError(f"elastic term index must be 2 or 3, got {k!r}")
    sign = 1.0 if k == 2 else -1.0
    ck = masses.mass(k) / (masses.m2 + masses.m3)
    y_qq = compose_cosine(q.cos_theta, q.phi, qprime.cos_theta, qprime.phi)
    qm, qn = q.mag, qprime.mag
    p_k = math.sqrt(qm**2 + (ck * qn) ** 2 + 2.0 * ck * qm * qn * y_qq)
    x_pk = sign * _safe_ratio(qm * q.cos_theta + ck * qn * qprime.cos_theta, p_k)
    y_vq = sign * _safe_ratio(qm * y_qq + ck * qn, p_k)
    ctx = {"k": k, "q": qm, "qprime": qn}
    x_pk = _clamp_cosine(x_pk, "x_pk", context=ctx)
    y_vq = _clamp_cosine(y_vq, "y_vq", context=ctx)
    x_dihedral, degenerate = dihedral_cosine(y_vq, x_pk, qprime.cos_theta, context=ctx)
    return ElasticArgs(
        p_k=p_k,
        x_pk=x_pk,
        x_dihedral=x_dihedral,
        c_qq=x_pk,
        y_qq=_clamp_cosine(y_qq, "y_qq", context=ctx),
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# breakup-amplitude arguments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BreakupArgs:
    p_k: float
    q_k: float
    x_pk: float
    x_qk: float
    x_dihedral: float
    degenerate: bool


def breakup_coefficients(k: int, masses: MassSet) -> tuple[float, float, float, float]:
    """Linear coefficients of the breakup re-coupling for T_k, k in {2, 3}:

        p_k_vec = A1 * p + B1 * q,    q_k_vec = A2 * p + B2 * q.

    These are the partition-1 relations evaluated on (p, q), i.e. the same
    direction the kernel rows use for their shifted arguments.
    """
    if k not in (2, 3):
        raise ValidationError(f"breakup term index must be 2 or 3, got {k!r}")
    l = 5 - k
    mk, ml = masses.mass(k), masses.mass(l)
    m1, m2, m3 = masses.m1, masses.m2, masses.m3
    sign = 1.0 if k == 2 else -1.0
    a1 = -mk / (m2 + m3)
    b1 = sign * ml * masses.total / ((m2 + m3) * (m1 + ml))
    a2 = -sign
    b2 = -m1 / (m1 + ml)
    return a1, b1, a2, b2


def breakup_args(k: int, p: SphericalMomentum, q: SphericalMomentum, masses: MassSet) -> BreakupArgs:
    """Arguments of T_k inside the breakup amplitude, k in {2, 3}."""
    a1, b1, a2, b2 = breakup_coefficients(k, masses)
    y_pq = compose_cosine(p.cos_theta, p.phi, q.cos_theta, q.phi)
    pm, qm = p.mag, q.mag
    p_k = math.sqrt((a1 * pm) ** 2 + (b1 * qm) ** 2 + 2.0 * a1 * b1 * pm * qm * y_pq)
    q_k = math.sqrt((a2 * pm) ** 2 + (b2 * qm) ** 2 + 2.0 * a2 * b2 * pm * qm * y_pq)
    x_pk = _safe_ratio(a1 * pm * p.cos_theta + b1 * qm * q.cos_theta, p_k)
    x_qk = _safe_ratio(a2 * pm * p.cos_theta + b2 * qm * q.cos_theta, q_k)
    dot = a1 * a2 * pm**2 + (a1 * b2 + a2 * b1) * pm * qm * y_pq + b1 * b2 * qm**2
    y_pkqk = _safe_ratio(_safe_ratio(dot, p_k), q_k)
    ctx = {"k": k, "p": pm, "q": qm}
    x_pk = _clamp_cosine(x_pk, "x_pk", context=ctx)
    x_qk = _clamp_cosine(x_qk, "x_qk", context=ctx)
    y_pkqk = _clamp_cosine(y_pkqk, "y_pkqk", context=ctx)
    x_dihedral, degenerate = dihedral_cosine(y_pkqk, x_pk, x_qk, context=ctx)
    return BreakupArgs(p_k=p_k, q_k=q_k, x_pk=x_pk, x_qk=x_qk, x_dihedral=x_dihedral, degenerate=degenerate)
