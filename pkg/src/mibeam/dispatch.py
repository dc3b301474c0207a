"""Uniform front door to the four solver regimes.

Validates scheme/scenario compatibility, runs the right solver, and returns
one report shape for the CLI, the sweep drivers, and the evaluation
pipeline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import mm, model, sdr
from .closed_form import ClosedFormInputs, solve_closed_form
from .errors import ConfigError

SCHEMES = ("closed", "sdr", "mm-single", "mm-multi")


@dataclass(frozen=True)
class SolverOptions:
    eps1: float = mm.DEFAULT_EPS_SINGLE
    eps2: float = mm.DEFAULT_EPS_MULTI
    max_iters: int = mm.DEFAULT_MAX_ITERS
    n_randomizations: int = sdr.DEFAULT_RANDOMIZATIONS
    seed: int = 0


@dataclass
class SolveResult:
    scheme: str
    w: np.ndarray                 # (N_T, K)
    mi_nats: float
    mi_bits: float
    rates_bits: np.ndarray
    mi_trace_nats: list
    iterations: int
    status: str
    kkt_residual: Optional[float]
    wall_time_s: float
    extras: dict = field(default_factory=dict)


def _is_silent(scatterer: Optional[model.ScattererModel]) -> bool:
    return scatterer is None or all(s == 0.0 for s in scatterer.strengths)


def validate_scheme(scenario: model.Scenario, scheme: str) -> None:
    cfg = scenario.config
    if scheme not in SCHEMES:
        raise ConfigError(f"solver.name: unknown scheme {scheme!r} (choose from {SCHEMES})")
    if scheme in ("closed", "sdr", "mm-single") and cfg.n_users != 1:
        raise ConfigError(f"solver.name: {scheme!r} requires n_users == 1, got {cfg.n_users}")
    if scenario.target.kind != "point":
        raise ConfigError("target: all solvers assume a point sensing target")
    if scheme == "closed" and not _is_silent(scenario.interference):
        raise ConfigError("solver.name: 'closed' requires no echo interference")
    if scheme == "sdr" and not _is_silent(scenario.interference) \
            and scenario.interference.kind != "point":
        raise ConfigError("solver.name: 'sdr' requires a point (or absent) interferer")


def solve_scenario(scenario: model.Scenario, scheme: str,
                   opts: SolverOptions = SolverOptions()) -> SolveResult:
    validate_scheme(scenario, scheme)
    cfg = scenario.config
    inst = model.build_instance(scenario)
    started = time.perf_counter()

    if scheme == "closed":
        a = model.steering_vector(scenario.target.angles_deg[0], cfg.n_tx)
        h = inst.channel[0].conj()
        omega = model.rate_power_threshold(cfg.rate_targets[0], cfg.comm_noise)
        w = solve_closed_form(ClosedFormInputs(a=a, h=h, p0=cfg.power_budget,
                                               omega=omega))[:, None]
        iterations, status, kkt, trace, extras = 0, "closed_form", None, None, {}
    elif scheme == "sdr":
        theta_t = scenario.target.angles_deg[0]
        if _is_silent(scenario.interference):
            theta_c, gamma2 = -30.0, 0.0
        else:
            theta_c = scenario.interference.angles_deg[0]
            gamma2 = scenario.interference.strengths[0]
        inputs = sdr.SdrInputs(
            p_mat=np.outer(model.steering_vector(theta_t, cfg.n_tx),
                           model.steering_vector(theta_t, cfg.n_rx).conj()),
            q_mat=np.outer(model.steering_vector(theta_c, cfg.n_tx),
                           model.steering_vector(theta_c, cfg.n_rx).conj()),
            beta2=scenario.target.strengths[0], gamma2=gamma2,
            n_slots=cfg.n_slots, sigma_z2=cfg.radar_noise,
            h=inst.channel[0].conj(), p0=cfg.power_budget,
            omega=model.rate_power_threshold(cfg.rate_targets[0], cfg.comm_noise),
            n_randomizations=opts.n_randomizations,
        )
        report = sdr.solve_point_interference(inputs, seed=opts.seed)
        w = report.w[:, None]
        iterations = report.conic_report.iterations
        status, kkt, trace = report.conic_report.status, None, None
        extras = {"mi_bound_bits": model.nats_to_bits(report.bound_nats)}
    elif scheme == "mm-single":
        report = mm.solve_single_user(inst, eps1=opts.eps1, max_iters=opts.max_iters)
        w = report.w
        iterations, status, kkt = report.iterations, report.status, report.kkt_residual
        trace = report.mi_trace
        extras = {"comp_power": report.comp_power, "comp_rate": report.comp_rate}
    else:
        report = mm.solve_multi_user(inst, eps2=opts.eps2, max_iters=opts.max_iters)
        w = report.w
        iterations, status, kkt = report.iterations, report.status, report.kkt_residual
        trace = report.mi_trace
        extras = {}

    wall = time.perf_counter() - started
    mi_nats = model.mutual_information(inst, w)
    if trace is None:
        trace = [mi_nats]
    return SolveResult(
        scheme=scheme, w=w, mi_nats=mi_nats,
        mi_bits=model.nats_to_bits(mi_nats),
        rates_bits=model.achieved_rates(inst, w),
        mi_trace_nats=list(trace), iterations=iterations, status=status,
        kkt_residual=kkt, wall_time_s=wall, extras=extras,
    )
