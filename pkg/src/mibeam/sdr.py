"""Single-user solver for a point target with a point interferer.

Lifts w to a PSD matrix, drops the rank-one constraint, solves the resulting
semidefinite program with :mod:`mibeam.conic`, and recovers a feasible
rank-one beamformer by Gaussian randomization ranked by the exact mutual
information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .errors import Infeasible, NumericalError
from .linalg import hermitian_sqrt, hermitianize

DEFAULT_RANDOMIZATIONS = 1000


@dataclass(frozen=True)
class SdrInputs:
    """Problem data for the point-target / point-interference design.

    ``p_mat`` and ``q_mat`` are the rank-one response factors a(theta) b^H
    (theta) of the target and the interferer; ``beta2`` / ``gamma2`` their
    average strengths; ``omega`` the minimum received power implied by the
    rate target.
    """

    p_mat: np.ndarray
    q_mat: np.ndarray
    beta2: float
    gamma2: float
    n_slots: int
    sigma_z2: float
    h: np.ndarray
    p0: float
    omega: float
    n_randomizations: int = DEFAULT_RANDOMIZATIONS

    def __post_init__(self):
        if self.n_randomizations < 1:
            raise ValueError("n_randomizations must be >= 1")


def _quadratic_factors(inputs: SdrInputs):
    """The N_T x N_T kernels of the three quadratic forms in w."""
    p, q = inputs.p_mat, inputs.q_mat
    pp = hermitianize(p @ p.conj().T)
    qq = hermitianize(q @ q.conj().T)
    qp = q @ p.conj().T
    return pp, qq, qp


def mutual_information_point(inputs: SdrInputs, w: np.ndarray) -> float:
    """Exact sensing mutual information (nats) for the point/point scenario.

    Uses the 2x2 determinant reduction of the receive covariance; identical
    to the full stacked log-det evaluation.
    """
    pp, qq, qp = _quadratic_factors(inputs)
    scale = float(inputs.n_slots)
    s2 = inputs.sigma_z2
    beta2, gamma2 = inputs.beta2, inputs.gamma2
    target = scale * beta2 * float(np.real(np.vdot(w, pp @ w))) + s2
    interf = scale * gamma2 * float(np.real(np.vdot(w, qq @ w))) + s2
    cross = scale * np.sqrt(beta2 * gamma2) * complex(np.vdot(w, qp @ w))
    num = target * interf - float(np.abs(cross) ** 2)
    return float(np.log(num) - np.log(interf) - np.log(s2))


def build_sdp(inputs: SdrInputs) -> conic.SdpProblem:
    """Rank-relaxed SDP: maximize the auxiliary variable t subject to the
    2x2 LMI, the power bound, and the received-power bound."""
    pp, qq, qp = _quadratic_factors(inputs)
    n = inputs.p_mat.shape[0]
    scale = float(inputs.n_slots)
    s2 = inputs.sigma_z2
    beta = float(np.sqrt(inputs.beta2))
    gamma = float(np.sqrt(inputs.gamma2))

    coeff = np.zeros((2, 2, n, n), dtype=complex)
    coeff[0, 0] = scale * beta * beta * pp
    coeff[0, 1] = scale * gamma * beta * qp
    coeff[1, 0] = scale * beta * gamma * qp.conj().T
    coeff[1, 1] = scale * gamma * gamma * qq
    const = np.array([[s2, 0.0], [0.0, s2]], dtype=complex)
    t_coeff = np.array([[-1.0, 0.0], [0.0, 0.0]], dtype=complex)
    lmi = conic.LmiBlock(coeff=coeff, const=const, t_coeff=t_coeff)

    h = np.asarray(inputs.h, dtype=complex)
    constraints = (
        conic.TraceConstraint(mat=np.eye(n, dtype=complex), bound=inputs.p0, sense="le"),
        conic.TraceConstraint(mat=np.outer(h, h.conj()), bound=inputs.omega, sense="ge"),
    )
    return conic.SdpProblem(
        dim=n,
        obj_mat=np.zeros((n, n), dtype=complex),
        obj_t=-1.0,  # minimize -t
        lmi_blocks=(lmi,),
        trace_constraints=constraints,
    )


def relaxed_mi_bound(t_value: float, sigma_z2: float) -> float:
    """Mutual-information upper bound (nats) implied by the relaxed optimum."""
    return float(np.log(t_value) - np.log(sigma_z2))


def randomize(w_bar: np.ndarray, inputs: SdrInputs, seed) -> np.ndarray:
    """Recover a feasible rank-one beamformer from the relaxed solution.

    Draws candidates from CN(0, w_bar), scales each to the full power budget,
    keeps those meeting the received-power constraint, and returns the one
    with the largest exact mutual information.  Falls back to the scaled
    principal eigenvector when no sample is feasible.
    """
    rng = np.random.default_rng(seed)
    n = w_bar.shape[0]
    root = hermitian_sqrt(w_bar)
    h = np.asarray(inputs.h, dtype=complex)

    draws = (rng.standard_normal((inputs.n_randomizations, n))
             + 1j * rng.standard_normal((inputs.n_randomizations, n))) / np.sqrt(2.0)
    cands = draws @ root.T
    norms = np.linalg.norm(cands, axis=1)
    keep = norms > 1e-14
    cands = cands[keep] * (np.sqrt(inputs.p0) / norms[keep])[:, None]
    received = np.abs(cands @ h.conj()) ** 2
    feasible = cands[received >= inputs.omega]

    if feasible.shape[0] == 0:
        vals, vecs = np.linalg.eigh(w_bar)
        lead = vecs[:, int(np.argmax(vals))]
        lead = np.sqrt(inputs.p0) * lead / np.linalg.norm(lead)
        if float(np.abs(np.vdot(h, lead)) ** 2) < inputs.omega:
            raise Infeasible("no randomized sample or principal direction meets the rate target")
        return lead

    pp, qq, qp = _quadratic_factors(inputs)
    scale = float(inputs.n_slots)
    s2 = inputs.sigma_z2
    target = scale * inputs.beta2 * np.einsum("ij,jk,ik->i", feasible.conj(), pp, feasible).real + s2
    interf = scale * inputs.gamma2 * np.einsum("ij,jk,ik->i", feasible.conj(), qq, feasible).real + s2
    cross = scale * np.sqrt(inputs.beta2 * inputs.gamma2) * np.einsum(
        "ij,jk,ik->i", feasible.conj(), qp, feasible)
    mi = np.log(target * interf - np.abs(cross) ** 2) - np.log(interf) - np.log(s2)
    return feasible[int(np.argmax(mi))]


@dataclass
class SdrReport:
    w: np.ndarray
    mi_nats: float
    bound_nats: float
    conic_report: conic.ConicReport


def solve_point_interference(inputs: SdrInputs, seed) -> SdrReport:
    """Full pipeline: relax, solve, randomize; raises on infeasibility."""
    problem = build_sdp(inputs)
    report = conic.solve_sdp(problem)
    if report.status == conic.INFEASIBLE:
        raise Infeasible("relaxed design problem is infeasible")
    if report.status != conic.OPTIMAL or report.solution is None:
        raise NumericalError(f"relaxed solve ended with status {report.status}")
    w = randomize(report.solution, inputs, seed)
    return SdrReport(
        w=w,
        mi_nats=mutual_information_point(inputs, w),
        bound_nats=relaxed_mi_bound(report.aux, inputs.sigma_z2),
        conic_report=report,
    )
