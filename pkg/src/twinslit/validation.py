"""End-to-end invariant suite behind the `validate` CLI command.

Each check returns a record {name, passed, value, tolerance, detail}.  The
suite covers the analytic identities (total-momentum local value, the
center-of-mass dispersion law, commutator hygiene), quadrature normalization,
and finite-difference agreement of the analytic log-gradients.
"""

import numpy as np
from scipy.integrate import quad

from . import dynamics, packets, sampling
from .config import IntegratorSettings


def _record(name, value, tolerance, passed=None, detail=""):
    ok = bool(value < tolerance) if passed is None else bool(passed)
    return {"name": name, "passed": ok, "value": float(value),
            "tolerance": float(tolerance), "detail": detail}


def _random_points(state, n, rng, t_max=None):
    cfg = state.cfg
    t_max = state.detection_time if t_max is None else t_max
    t = rng.uniform(0.0, t_max, n)
    spread = cfg.Y + 3.0 * abs(packets.sigma_t(cfg, t_max))
    y1 = rng.uniform(-spread, spread, n)
    y2 = rng.uniform(-spread, spread, n)
    return y1, y2, t


def check_total_momentum_identity(state, n=1000, seed=1, tol=1e-10):
    """-i*hbar*(g1+g2) must equal i*hbar*(y1+y2)/(2*sigma0*sigma_t)."""
    cfg = state.cfg
    rng = np.random.default_rng(seed)
    y1, y2, t = _random_points(state, n, rng)
    g1, g2, node = state.log_grad_raw(y1, y2, t)
    lhs = -1j * cfg.hbar * (g1 + g2)
    rhs = state.total_momentum_local(y1, y2, t)
    ok = ~node
    rel = np.abs(lhs[ok] - rhs[ok]) / np.maximum(np.abs(rhs[ok]), 1e-30)
    return _record("total_momentum_identity", rel.max(), tol,
                   detail=f"{int(ok.sum())} points, {int(node.sum())} nodes skipped")


def check_com_closed_form(state, n=20, seed=2, tol=1e-6):
    """Integrated center of mass vs the closed-form dispersion law."""
    cfg = state.cfg
    rng = np.random.default_rng(seed)
    y1 = rng.normal(cfg.Y, cfg.sigma0, n)
    y2 = rng.normal(-cfg.Y, cfg.sigma0, n) + rng.uniform(-1, 1, n)
    y0 = np.column_stack([y1, y2])
    settings = IntegratorSettings()
    t_samples = np.linspace(0.0, state.detection_time, 41)[1:]
    out, status = dynamics.integrate_ensemble(state, y0, settings, t_samples)
    ok = status == dynamics.STATUS_COMPLETED
    com0 = 0.5 * y0[ok].sum(axis=1)
    com = 0.5 * out[ok].sum(axis=2)
    expected = dynamics.com_closed_form(cfg, com0[:, None], t_samples[None, :])
    scale = np.maximum(np.abs(com0)[:, None], cfg.sigma0)
    err = np.max(np.abs(com - expected) / scale)
    return _record("com_closed_form", err, tol, detail=f"{int(ok.sum())}/{n} completed")


def check_log_grad_finite_difference(state, n=1000, seed=3, tol=1e-5):
    """Analytic joint log-gradients vs central differences of ln psi."""
    rng = np.random.default_rng(seed)
    y1, y2, t = _random_points(state, n, rng)
    g1, g2, node = state.log_grad_raw(y1, y2, t)
    h = 1e-6 * state.cfg.sigma0
    fd1 = (np.log(state.psi(y1 + h, y2, t)) - np.log(state.psi(y1 - h, y2, t))) / (2 * h)
    fd2 = (np.log(state.psi(y1, y2 + h, t)) - np.log(state.psi(y1, y2 - h, t))) / (2 * h)
    ok = ~node & np.isfinite(fd1) & np.isfinite(fd2)
    rel1 = np.abs(g1[ok] - fd1[ok]) / np.maximum(np.abs(g1[ok]), 1.0)
    rel2 = np.abs(g2[ok] - fd2[ok]) / np.maximum(np.abs(g2[ok]), 1.0)
    return _record("log_grad_finite_difference", max(rel1.max(), rel2.max()), tol,
                   detail=f"{int(ok.sum())} points")


def check_commutator_order(state, seed=4):
    """Finite-difference commutator residual must shrink as O(h**2)."""
    from .state import commutator_residual

    cfg = state.cfg
    rng = np.random.default_rng(seed)
    y1, y2, t = (rng.uniform(-2, 2) + cfg.Y, rng.uniform(-2, 2) - cfg.Y,
                 rng.uniform(0.1, state.detection_time))
    hs = np.array([1e-2, 1e-3, 1e-4]) * cfg.sigma0
    res = np.array([abs(commutator_residual(cfg, state.psi, y1, y2, t, h)) for h in hs])
    # second-order decay: each 10x step reduction buys ~100x; allow 30x
    ratios = res[:-1] / np.maximum(res[1:], 1e-300)
    passed = bool(np.all(ratios > 30.0))
    return _record("commutator_second_order", -min(ratios), -30.0, passed=passed,
                   detail=f"residuals {res.tolist()}")


def check_normalization(state, tol=1e-4):
    """Joint density integrates to 1 at t in {0, t0/2, t0}."""
    worst = 0.0
    for t in (0.0, 0.5 * state.detection_time, state.detection_time):
        worst = max(worst, abs(1.0 - sampling.total_probability(state, t)))
    return _record("joint_normalization", worst, tol)


def check_packet_normalization(state, tol=1e-6):
    """Single-packet L2 norm is 1 at t in {0, t0/2, t0}."""
    cfg = state.cfg
    worst = 0.0
    for t in (0.0, 0.5 * state.detection_time, state.detection_time):
        lim = abs(cfg.Y) + abs(cfg.hbar * cfg.ky * t / cfg.mass) + 10 * abs(
            packets.sigma_t(cfg, t))
        val, _ = quad(lambda y: np.abs(packets.packet_value(cfg, "A", y, t)) ** 2,
                      -lim, lim, limit=400)
        worst = max(worst, abs(1.0 - val))
    return _record("packet_normalization", worst, tol)


def check_symmetries(state, n=1000, seed=5, tol=1e-13):
    """Exchange and mirror symmetry of psi_eff, pointwise."""
    rng = np.random.default_rng(seed)
    y1, y2, t = _random_points(state, n, rng)
    psi = state.psi(y1, y2, t)
    scale = np.maximum(np.abs(psi), 1e-300)
    exch = np.abs(psi - state.psi(y2, y1, t)) / scale
    mirr = np.abs(psi - state.psi(-y1, -y2, t)) / scale
    return _record("exchange_and_mirror_symmetry", max(exch.max(), mirr.max()), tol)


def run_validation_suite(state):
    """All invariant checks; returns (records, all_passed)."""
    records = [
        check_total_momentum_identity(state),
        check_com_closed_form(state),
        check_log_grad_finite_difference(state),
        check_commutator_order(state),
        check_normalization(state),
        check_packet_normalization(state),
        check_symmetries(state),
    ]
    return records, all(r["passed"] for r in records)
