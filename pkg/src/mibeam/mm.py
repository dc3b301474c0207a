"""Minorize-maximize solvers for the extended-interference designs.

The nonconcave mutual information is minorized at each iterate by a touching
concave quadratic in w.  For a single user the per-iteration subproblem is
solved in closed form through its Lagrangian dual, with a bisection on the
power multiplier; for multiple users the subproblem keeps the linearized
per-user rate constraints and is handed to the dense QCQP solver.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import conic, model
from .closed_form import feasibility_bound
from .errors import BracketFailure, DegenerateConstraint, Infeasible, NumericalError
from .linalg import hermitian_sqrt, hermitianize, pinv, psd_floor, unvec, vec

DEFAULT_EPS_SINGLE = 1e-8
DEFAULT_EPS_MULTI = 1e-6
DEFAULT_MAX_ITERS = 2000
POWER_RTOL = 1e-7          # relative tolerance for "transmit power equals budget"
SUBPROBLEM_GAP_TOL = 1e-9  # conic gap for the multi-user subproblem


@dataclass(frozen=True)
class Surrogate:
    """Touching concave quadratic lower bound of the mutual information.

    value(w) = 2 delta Re(w^H lin) - delta^2 w^H quad w + offset, in nats,
    where w stacks the beamformer columns.  ``quad`` is Hermitian PSD and the
    bound touches the true objective at the iterate it was built from.
    """

    lin: np.ndarray
    quad: np.ndarray
    offset: float
    delta: float

    def value(self, w_vec: np.ndarray) -> float:
        linear = 2.0 * self.delta * float(np.real(np.vdot(w_vec, self.lin)))
        quadratic = (self.delta ** 2) * float(np.real(np.vdot(w_vec, self.quad @ w_vec)))
        return linear - quadratic + self.offset

    def gradient(self, w_vec: np.ndarray) -> np.ndarray:
        """Wirtinger gradient w.r.t. conj(w); equals the objective gradient
        at the expansion point."""
        return self.delta * self.lin - (self.delta ** 2) * (self.quad @ w_vec)


def build_surrogate(inst: model.Instance, w, expansion: Optional[np.ndarray] = None,
                    cov_root: Optional[np.ndarray] = None) -> Surrogate:
    """Construct the minorizer at the current beamformer.

    ``expansion`` is the stacking map from conj(vec(W)) to the vectorized
    receive-stacked filter and ``cov_root`` the Hermitian square root of the
    target covariance; both can be precomputed once per solve.
    """
    cfg = inst.config
    w_mat = model.as_beam_matrix(w, cfg)
    delta = float(cfg.n_slots) / cfg.radar_noise
    if expansion is None:
        expansion = model.vec_expansion_matrix(cfg.n_tx, cfg.n_rx, cfg.n_users)
    if cov_root is None:
        cov_root = hermitian_sqrt(inst.target_cov)

    wt = model.expand_beamformer(w_mat, cfg.n_rx)
    cov_both = inst.target_cov + inst.interf_cov
    eye_rx = np.eye(cfg.n_users * cfg.n_rx)
    gram = eye_rx + delta * hermitianize(wt @ cov_both @ wt.conj().T)

    wt_root = wt @ cov_root
    whitened = np.linalg.solve(gram, wt_root)                # T^{-1} Wt R^{1/2}
    residual = hermitianize(
        np.eye(cfg.n_tx * cfg.n_rx) - delta * (cov_root @ wt.conj().T @ whitened)
    )
    try:
        np.linalg.cholesky(residual)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("surrogate curvature matrix lost positive definiteness") from exc

    res_root = np.linalg.solve(residual, cov_root)
    lin_full = whitened @ res_root                           # (K N_R, N_T N_R)
    gain = hermitianize(whitened @ np.linalg.solve(residual, whitened.conj().T))

    # The stacking map has exactly N_R ones per column, so the congruence
    # with the (cov kron gain) matrix reduces to a gather over those rows;
    # this avoids ever forming the large Kronecker product.
    rows, cols = np.nonzero(expansion)
    idx = rows[np.argsort(cols, kind="stable")].reshape(expansion.shape[1], cfg.n_rx)
    hi, lo = np.divmod(idx, gain.shape[0])
    lin = vec(lin_full).conj()[idx].sum(axis=1)
    quad = np.einsum(
        "iajb,iajb->ij",
        cov_both[hi[:, :, None, None], hi[None, None, :, :]],
        gain.conj()[lo[:, :, None, None], lo[None, None, :, :]],
    )
    quad = psd_floor(quad)

    g_val = model.mutual_information(inst, w_mat)
    touch = 2.0 * delta * float(np.real(np.trace(np.linalg.solve(residual, cov_root @ wt.conj().T @ whitened))))
    curvature = (delta ** 2) * float(np.real(np.trace(gain @ wt @ cov_both @ wt.conj().T)))
    offset = g_val - touch + curvature
    return Surrogate(lin=lin, quad=quad, offset=offset, delta=delta)


@dataclass
class MmReport:
    w: np.ndarray
    mi_trace: list            # objective (nats) per accepted iterate, incl. start
    iterations: int
    status: str               # "converged" | "max_iterations" | "stalled"
    kkt_residual: Optional[float] = None
    comp_power: Optional[float] = None
    comp_rate: Optional[float] = None
    wall_time_s: float = 0.0


class ShiftedCurvature:
    """Pseudo-inverse applications of (delta * quad + tau * I) for many tau.

    One eigendecomposition serves the whole bisection.  Eigenvalues within
    the relative cutoff of zero are treated as an exact null space (dropped
    at tau = 0, inverted as 1/tau otherwise), so the transmit power is a
    continuous function of the multiplier.
    """

    NULL_RTOL = 1e-12

    def __init__(self, sur: Surrogate):
        vals, vecs = np.linalg.eigh(sur.delta * sur.quad)
        vals = np.clip(vals, 0.0, None)
        cutoff = self.NULL_RTOL * max(float(vals.max()), 1e-300)
        self.vals = np.where(vals <= cutoff, 0.0, vals)
        self.vecs = vecs

    def apply(self, rhs: np.ndarray, tau: float) -> np.ndarray:
        shifted = self.vals + tau
        inv = np.divide(1.0, shifted, out=np.zeros_like(shifted), where=shifted > 0.0)
        return self.vecs @ (inv * (self.vecs.conj().T @ rhs))

    def null_component(self, rhs: np.ndarray) -> float:
        """Norm of the projection of rhs onto the exact null space.

        When this is nonzero the unpenalized subproblem is unbounded along a
        flat direction, i.e. the transmit power diverges as the multiplier
        approaches zero.
        """
        coords = self.vecs.conj().T @ rhs
        return float(np.linalg.norm(coords[self.vals == 0.0]))


def rate_constrained_step(sur: Surrogate, h: np.ndarray, w_ref: np.ndarray,
                          omega_shift: float, tau: float,
                          curvature: Optional[ShiftedCurvature] = None):
    """Minimizer of the power-penalized surrogate under the linearized rate
    constraint 2 Re(w_ref^H h h^H w) >= omega_shift.

    Returns (w, mu); mu = 0 when the unconstrained minimizer already
    satisfies the constraint, otherwise mu > 0 enforces it with equality.
    """
    if curvature is None:
        curvature = ShiftedCurvature(sur)
    w_free = curvature.apply(sur.lin, tau)
    received = h * complex(np.vdot(h, w_ref))  # h h^H w_ref
    attained = 2.0 * float(np.real(np.vdot(received, w_free)))
    if attained >= omega_shift:
        return w_free, 0.0
    direction = curvature.apply(received, tau)
    denom = 2.0 * float(np.real(np.vdot(received, direction)))
    if denom <= 1e-14:
        raise DegenerateConstraint("linearized rate constraint has vanishing curvature")
    mu = (omega_shift - attained) / denom
    return w_free + mu * direction, mu


def bisect_power_multiplier(sur: Surrogate, h: np.ndarray, w_ref: np.ndarray,
                            omega_shift: float, p0: float, eps1: float,
                            tau_hi: float = 1.0,
                            curvature: Optional[ShiftedCurvature] = None,
                            power_rtol: Optional[float] = POWER_RTOL):
    """Find the power multiplier with ||w(tau)||^2 = P0 by bisection.

    The transmit power is non-increasing in tau; the caller guarantees the
    unpenalized step exceeds the budget.  Halving stops once the bracket is
    narrower than eps1 and the power sits within ``power_rtol`` (relative)
    of the budget; pass ``power_rtol=None`` for the bracket-only rule.
    Returns (tau, w, mu) from the feasible (upper) side of the bracket.
    """
    if curvature is None:
        curvature = ShiftedCurvature(sur)
    tau_lo = 0.0
    tau = tau_hi
    w_hi, mu_hi = rate_constrained_step(sur, h, w_ref, omega_shift, tau, curvature)
    doublings = 0
    while float(np.linalg.norm(w_hi) ** 2) > p0:
        tau_lo = tau
        tau *= 2.0
        doublings += 1
        if doublings > 80:
            raise BracketFailure("could not bracket the power multiplier")
        w_hi, mu_hi = rate_constrained_step(sur, h, w_ref, omega_shift, tau, curvature)
    tau_hi = tau

    for _ in range(200):
        if (tau_hi - tau_lo) <= eps1:
            if power_rtol is None:
                break
            if abs(float(np.linalg.norm(w_hi) ** 2) - p0) <= power_rtol * p0:
                break
            if (tau_hi - tau_lo) <= 1e-16 * max(tau_hi, 1.0):
                break  # bracket exhausted at machine precision
        mid = 0.5 * (tau_lo + tau_hi)
        w_mid, mu_mid = rate_constrained_step(sur, h, w_ref, omega_shift, mid, curvature)
        if float(np.linalg.norm(w_mid) ** 2) < p0:
            tau_hi, w_hi, mu_hi = mid, w_mid, mu_mid
        else:
            tau_lo = mid
    return tau_hi, w_hi, mu_hi


def _unpenalized_step_valid(sur: Surrogate, curvature: ShiftedCurvature,
                            h: np.ndarray, w_ref: np.ndarray, mu: float,
                            w_free: np.ndarray, p0: float,
                            power_slack: float = 0.0) -> bool:
    """Whether the tau = 0 step is the genuine subproblem minimizer.

    Requires the power budget to hold and, when the curvature is rank
    deficient, the effective right-hand side to have no component along the
    flat directions (otherwise the transmit power diverges as tau -> 0 and
    the multiplier must be found by bisection)."""
    if float(np.linalg.norm(w_free) ** 2) > p0 * (1.0 + power_slack):
        return False
    rhs = sur.lin + mu * (h * complex(np.vdot(h, w_ref)))
    return curvature.null_component(rhs) <= 1e-10 * max(float(np.linalg.norm(rhs)), 1e-300)


def _kkt_certificate(inst: model.Instance, w: np.ndarray, omega: float,
                     expansion, cov_root):
    """Stationarity and complementarity residuals at the returned point.

    Rebuilds the surrogate at w (its gradient there equals the objective
    gradient), re-solves the inner problem for consistent multipliers, and
    maps the subproblem multipliers to the original problem (factor delta).
    """
    cfg = inst.config
    h = inst.channel[0].conj()
    p0 = cfg.power_budget
    sur = build_surrogate(inst, w, expansion, cov_root)
    curvature = ShiftedCurvature(sur)
    omega_shift = float(np.abs(np.vdot(h, w)) ** 2) + omega
    w_free, mu0 = rate_constrained_step(sur, h, w, omega_shift, 0.0, curvature)
    if _unpenalized_step_valid(sur, curvature, h, w, mu0, w_free, p0,
                               power_slack=POWER_RTOL):
        tau, mu = 0.0, mu0
    else:
        tau, _, mu = bisect_power_multiplier(sur, h, w, omega_shift, p0,
                                             DEFAULT_EPS_SINGLE, curvature=curvature,
                                             power_rtol=POWER_RTOL)
    grad = sur.gradient(w)
    station = -grad + sur.delta * tau * w - sur.delta * mu * h * complex(np.vdot(h, w))
    residual = float(np.linalg.norm(station)) / (1.0 + float(np.linalg.norm(grad)))
    comp_power = abs(sur.delta * tau * (float(np.linalg.norm(w) ** 2) - p0))
    comp_rate = abs(sur.delta * mu * (omega - float(np.abs(np.vdot(h, w)) ** 2)))
    return residual, comp_power, comp_rate


def solve_single_user(inst: model.Instance, eps1: float = DEFAULT_EPS_SINGLE,
                      max_iters: int = DEFAULT_MAX_ITERS) -> MmReport:
    """MM solver for one user with arbitrary (e.g. extended) interference.

    Starts from the maximum-ratio-transmission vector at full power, iterates
    touching-minorizer maximization with the dual/bisection inner step, and
    stops on relative objective change <= eps1 or the iteration cap.  The
    objective trace is non-decreasing.
    """
    cfg = inst.config
    if cfg.n_users != 1:
        raise ValueError("solve_single_user requires exactly one user")
    started = time.perf_counter()
    h = inst.channel[0].conj()
    p0 = cfg.power_budget
    omega = model.rate_power_threshold(cfg.rate_targets[0], cfg.comm_noise)
    if feasibility_bound(h, p0) <= omega:
        raise Infeasible("rate target is not strictly feasible under the power budget")

    expansion = model.vec_expansion_matrix(cfg.n_tx, cfg.n_rx, cfg.n_users)
    cov_root = hermitian_sqrt(inst.target_cov)

    w = np.sqrt(p0) * h / np.linalg.norm(h)
    g_val = model.mutual_information(inst, w)
    trace = [g_val]
    status = "max_iterations"
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        sur = build_surrogate(inst, w, expansion, cov_root)
        curvature = ShiftedCurvature(sur)
        omega_shift = float(np.abs(np.vdot(h, w)) ** 2) + omega
        w_free, mu0 = rate_constrained_step(sur, h, w, omega_shift, 0.0, curvature)
        if _unpenalized_step_valid(sur, curvature, h, w, mu0, w_free, p0):
            w_next = w_free
        else:
            _, w_next, _ = bisect_power_multiplier(sur, h, w, omega_shift, p0, eps1,
                                                   curvature=curvature,
                                                   power_rtol=POWER_RTOL)
        g_next = model.mutual_information(inst, w_next)
        if g_next < g_val - 1e-12 * max(1.0, abs(g_val)):
            status = "stalled"
            break
        w = w_next
        trace.append(g_next)
        change = abs(g_next - g_val) / max(abs(g_val), 1e-300)
        g_val = g_next
        if change <= eps1:
            status = "converged"
            break

    residual, comp_power, comp_rate = _kkt_certificate(inst, w, omega, expansion, cov_root)
    return MmReport(w=w[:, None], mi_trace=trace, iterations=iterations, status=status,
                    kkt_residual=residual, comp_power=comp_power, comp_rate=comp_rate,
                    wall_time_s=time.perf_counter() - started)


# ---------------------------------------------------------------------------
# Multi-user


def _column_selector(k: int, n_users: int, n_tx: int) -> np.ndarray:
    """(i_k kron I) so that selector^T @ vec(W) is column k of W."""
    i_k = np.zeros((n_users, 1))
    i_k[k, 0] = 1.0
    return np.kron(i_k, np.eye(n_tx))


def zero_forcing_init(inst: model.Instance) -> np.ndarray:
    """Zero-forcing start scaled to the full power budget.

    Columns are pseudo-inverse directions so the effective channel is
    diagonal; per-user amplitudes meet the rate targets exactly before the
    common full-power scaling.  Raises when even the unscaled allocation
    exceeds the budget.
    """
    cfg = inst.config
    directions = pinv(inst.channel)  # (N_T, K), channel @ directions = I
    amps = np.sqrt([model.rate_power_threshold(r, cfg.comm_noise)
                    for r in cfg.rate_targets])
    base = directions * amps[None, :]
    needed = float(np.linalg.norm(base) ** 2)
    if needed > cfg.power_budget * (1.0 + 1e-12):
        raise Infeasible(
            f"zero-forcing start needs {needed:.6g} W for the rate targets, "
            f"budget is {cfg.power_budget:.6g} W"
        )
    if needed == 0.0:
        return base
    return base * np.sqrt(cfg.power_budget / needed)


def multiuser_subproblem(inst: model.Instance, w_prev, sur: Surrogate) -> conic.QcqpProblem:
    """Convex QCQP in vec(W): surrogate objective, power ball, and the
    linearized per-user rate constraints."""
    cfg = inst.config
    w_mat = model.as_beam_matrix(w_prev, cfg)
    w_vec = vec(w_mat)
    dim = cfg.n_tx * cfg.n_users

    objective = (sur.delta * sur.quad, -sur.lin, 0.0)
    constraints = [(np.eye(dim, dtype=complex), np.zeros(dim, dtype=complex),
                    -cfg.power_budget)]

    selectors = [_column_selector(k, cfg.n_users, cfg.n_tx) for k in range(cfg.n_users)]
    for k in range(cfg.n_users):
        h_k = inst.channel[k].conj()
        nu_k = 2.0 ** cfg.rate_targets[k] - 1.0
        own = selectors[k] @ np.outer(h_k, h_k.conj()) @ selectors[k].T
        quad = np.zeros((dim, dim), dtype=complex)
        for j in range(cfg.n_users):
            if j == k:
                continue
            quad += selectors[j] @ np.outer(h_k, h_k.conj()) @ selectors[j].T
        a_k = hermitianize(nu_k * quad)
        b_k = -(own @ w_vec)
        c_k = float(np.real(np.vdot(w_vec, own @ w_vec))) + nu_k * cfg.comm_noise
        constraints.append((a_k, b_k, c_k))
    return conic.QcqpProblem(dim=dim, objective=objective, constraints=tuple(constraints))


def solve_multi_user(inst: model.Instance, eps2: float = DEFAULT_EPS_MULTI,
                     max_iters: int = DEFAULT_MAX_ITERS) -> MmReport:
    """MM + successive convex approximation for K users.

    Starts from the zero-forcing beamformer, alternates surrogate
    construction with a conic subproblem solve, and stops on relative
    objective change <= eps2 or the iteration cap.  Every iterate meets all
    rate targets and the power budget.
    """
    cfg = inst.config
    started = time.perf_counter()
    expansion = model.vec_expansion_matrix(cfg.n_tx, cfg.n_rx, cfg.n_users)
    cov_root = hermitian_sqrt(inst.target_cov)

    w_mat = zero_forcing_init(inst)
    g_val = model.mutual_information(inst, w_mat)
    trace = [g_val]
    status = "max_iterations"
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        sur = build_surrogate(inst, w_mat, expansion, cov_root)
        problem = multiuser_subproblem(inst, w_mat, sur)
        report = conic.solve_qcqp(problem, tol=SUBPROBLEM_GAP_TOL)
        if report.status == conic.INFEASIBLE:
            raise Infeasible(f"subproblem infeasible at iteration {iterations}")
        if report.status != conic.OPTIMAL or report.solution is None:
            raise NumericalError(
                f"subproblem ended with status {report.status} at iteration {iterations}"
            )
        w_next = unvec(report.solution, cfg.n_tx, cfg.n_users)
        g_next = model.mutual_information(inst, w_next)
        if g_next < g_val - 1e-12 * max(1.0, abs(g_val)):
            status = "stalled"
            break
        w_mat = w_next
        trace.append(g_next)
        change = abs(g_next - g_val) / max(abs(g_val), 1e-300)
        g_val = g_next
        if change <= eps2:
            status = "converged"
            break

    return MmReport(w=w_mat, mi_trace=trace, iterations=iterations, status=status,
                    wall_time_s=time.perf_counter() - started)
