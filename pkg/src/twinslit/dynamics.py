"""Deterministic pilot-wave trajectory integration.

The pair (y1, y2) follows dy_i/dt = (hbar/m) * Im(d ln psi / dy_i).  The
center of mass obeys the closed form
    y_com(t) = y_com(0) * sqrt(1 + (hbar*t / (2*m*sigma0**2))**2)
which serves as an analytic oracle for the numerics, as does the one-packet
trajectory (same dispersion law around the drifting packet center).

Ensembles integrate in lockstep with per-member adaptive Dormand-Prince 5(4)
steps: each member's step sequence depends only on its own error estimates,
so results are bit-identical under any partitioning of the ensemble.
Detection happens at the fixed time t0 = m*D/(hbar*kx); longitudinal motion
is ballistic at hbar*kx/m, so fixed-time and fixed-plane detection coincide.
"""

from dataclasses import dataclass

import numpy as np

from . import packets
from .config import IntegratorSettings
from .errors import IncompleteTrajectory, NodeError, StepLimitExceeded

STATUS_COMPLETED = "completed"
STATUS_NODE_ABORTED = "node_aborted"

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100])
# 5th-order solution uses _B5 on stages 1..6; the embedded 4th-order estimate
# additionally weights the FSAL stage k7 = f(t+h, y5) with 1/40.
_E = np.append(_B5 - _B4, -1 / 40)


@dataclass
class Trajectory:
    """Time-ordered record of one guided pair."""

    times: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    status: str
    y_com_initial: float

    def arrivals(self):
        """(y1(t0), y2(t0)); only defined for completed trajectories."""
        if self.status != STATUS_COMPLETED:
            raise IncompleteTrajectory(f"trajectory status is {self.status!r}")
        return float(self.y1[-1]), float(self.y2[-1])


def guidance_velocity(state, y1, y2, t, node_epsilon=1e-12):
    """(v1, v2) = (hbar/m) * Im(log-gradient); raises NodeError at nodes."""
    g1, g2 = state.log_grad(y1, y2, t, node_epsilon=node_epsilon)
    k = state.cfg.hbar / state.cfg.mass
    return k * np.imag(g1), k * np.imag(g2)


def com_closed_form(cfg, y_com_0, t):
    """Center-of-mass dispersion law y(0)*sqrt(1 + (hbar*t/(2*m*sigma0**2))**2)."""
    tau = cfg.hbar * np.asarray(t, dtype=float) / (2.0 * cfg.mass * cfg.sigma0**2)
    return y_com_0 * np.sqrt(1.0 + tau * tau)


def single_packet_trajectory(cfg, slit, y_0, t):
    """One-slit guided trajectory: center(t) + (y_0 - center(0)) * spread(t)."""
    tau = cfg.hbar * np.asarray(t, dtype=float) / (2.0 * cfg.mass * cfg.sigma0**2)
    c0 = packets.packet_center(cfg, slit, 0.0)
    return packets.packet_center(cfg, slit, t) + (y_0 - c0) * np.sqrt(1.0 + tau * tau)


def _velocity_batch(state, y, t, node_epsilon):
    """Vectorized guidance velocity on y (n, 2) at per-member times t (n,)."""
    g1, g2, node = state.log_grad_raw(y[:, 0], y[:, 1], t, node_epsilon)
    k = state.cfg.hbar / state.cfg.mass
    return np.stack([k * g1.imag, k * g2.imag], axis=1), node


def integrate_ensemble(state, y0, settings: IntegratorSettings, t_samples):
    """Integrate an ensemble of pairs through the sample-time grid.

    y0: (n, 2) initial positions at t = 0.  t_samples: strictly increasing
    times, all > 0; the last one is the end time.  Returns (samples, status)
    where samples has shape (n, len(t_samples), 2) and status is an array of
    STATUS_* strings.  Node-aborted members carry NaN from the abort onward.
    """
    settings.validate()
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    t_samples = np.asarray(t_samples, dtype=float)
    if t_samples.ndim != 1 or np.any(np.diff(t_samples) <= 0) or t_samples[0] <= 0:
        raise ValueError("t_samples must be strictly increasing and positive")
    if settings.method == "rk4_fixed":
        return _integrate_rk4(state, y0, settings, t_samples)
    return _integrate_dp45(state, y0, settings, t_samples)


def _integrate_dp45(state, y0, settings, t_samples):
    n = y0.shape[0]
    n_samp = len(t_samples)
    atol = settings.abs_tol_factor * state.cfg.sigma0
    rtol = settings.rel_tol
    eps = settings.node_epsilon

    t = np.zeros(n)
    y = y0.copy()
    h = np.full(n, min(settings.dt, t_samples[0]))
    h_floor = 1e-13 * max(float(t_samples[-1]), 1.0)
    samp_idx = np.zeros(n, dtype=np.int64)
    nsteps = np.zeros(n, dtype=np.int64)
    running = np.ones(n, dtype=bool)
    aborted = np.zeros(n, dtype=bool)
    out = np.full((n, n_samp, 2), np.nan)

    while np.any(running):
        idx = np.flatnonzero(running)
        ti = t[idx]
        yi = y[idx]
        target = t_samples[samp_idx[idx]]
        hi = np.minimum(h[idx], target - ti)

        ks = np.empty((7, len(idx), 2))
        node_hit = np.zeros(len(idx), dtype=bool)
        for s in range(6):
            ys = yi + hi[:, None] * np.einsum(
                "s,sij->ij", _A[s], ks[:s]
            ) if s else yi
            v, node = _velocity_batch(state, ys, ti + _C[s] * hi, eps)
            node_hit |= node
            ks[s] = v
        y5 = yi + hi[:, None] * np.einsum("s,sij->ij", _B5, ks[:6])
        v7, node = _velocity_batch(state, y5, ti + hi, eps)
        node_hit |= node
        ks[6] = v7

        err_vec = hi[:, None] * np.einsum("s,sij->ij", _E, ks)
        scale = atol + rtol * np.maximum(np.abs(yi), np.abs(y5))
        with np.errstate(invalid="ignore"):
            err = np.sqrt(np.mean((err_vec / scale) ** 2, axis=1))
        err = np.where(np.isfinite(err), err, np.inf)

        # a node touched during any stage rejects the step; the member retries
        # with a smaller step and aborts only once the step underflows
        accept = (err <= 1.0) & ~node_hit

        gi = idx[accept]
        t[gi] = ti[accept] + hi[accept]
        y[gi] = y5[accept]
        # clamped steps land on the pending sample time up to rounding; snap
        reached = np.abs(t[gi] - t_samples[samp_idx[gi]]) <= 1e-12 * np.maximum(1.0, t[gi])
        ri = gi[reached]
        t[ri] = t_samples[samp_idx[ri]]
        out[ri, samp_idx[ri]] = y[ri]
        samp_idx[ri] += 1
        done = ri[samp_idx[ri] >= n_samp]
        running[done] = False

        # step-size update from this attempt's error estimate
        safe_err = np.maximum(err, 1e-16)
        factor = np.clip(0.9 * safe_err ** (-0.2), 0.2, 5.0)
        factor = np.where(node_hit, 0.2, factor)
        h[idx] = hi * factor

        ab = idx[node_hit & (h[idx] < h_floor)]
        running[ab] = False
        aborted[ab] = True

        nsteps[idx] += 1
        over = idx[nsteps[idx] >= settings.max_steps]
        if over.size and np.any(running[over]):
            raise StepLimitExceeded(
                f"{int(np.sum(running[over]))} member(s) exceeded max_steps={settings.max_steps}"
            )

    status = np.where(aborted, STATUS_NODE_ABORTED, STATUS_COMPLETED)
    return out, status


def _integrate_rk4(state, y0, settings, t_samples):
    n = y0.shape[0]
    n_samp = len(t_samples)
    eps = settings.node_epsilon
    t = np.zeros(n)
    y = y0.copy()
    aborted = np.zeros(n, dtype=bool)
    out = np.full((n, n_samp, 2), np.nan)

    grid = np.concatenate([[0.0], t_samples])
    total_steps = 0
    for j in range(n_samp):
        seg = grid[j + 1] - grid[j]
        n_sub = max(1, int(np.ceil(seg / settings.dt - 1e-12)))
        dt = seg / n_sub
        for _ in range(n_sub):
            total_steps += 1
            if total_steps > settings.max_steps:
                raise StepLimitExceeded(f"exceeded max_steps={settings.max_steps}")
            live = ~aborted
            k1, nd1 = _velocity_batch(state, y, t, eps)
            k2, nd2 = _velocity_batch(state, y + 0.5 * dt * k1, t + 0.5 * dt, eps)
            k3, nd3 = _velocity_batch(state, y + 0.5 * dt * k2, t + 0.5 * dt, eps)
            k4, nd4 = _velocity_batch(state, y + dt * k3, t + dt, eps)
            node = (nd1 | nd2 | nd3 | nd4) & live
            aborted |= node
            step = (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            upd = live & ~node
            y[upd] += step[upd]
            t[upd] += dt
        out[~aborted, j] = y[~aborted]

    status = np.where(aborted, STATUS_NODE_ABORTED, STATUS_COMPLETED)
    return out, status


def integrate_pair(state, y1_0, y2_0, settings: IntegratorSettings, t_end=None):
    """Integrate one pair from t = 0 to t0 with dense output.

    Records settings.n_samples uniformly spaced times (plus t = 0).  A node
    abort yields a partial trajectory with status node_aborted.
    """
    t_end = state.detection_time if t_end is None else t_end
    t_samples = np.linspace(0.0, t_end, settings.n_samples + 1)[1:]
    out, status = integrate_ensemble(
        state, np.array([[y1_0, y2_0]]), settings, t_samples
    )
    ys = out[0]
    good = ~np.isnan(ys[:, 0])
    times = np.concatenate([[0.0], t_samples[good]])
    y1 = np.concatenate([[y1_0], ys[good, 0]])
    y2 = np.concatenate([[y2_0], ys[good, 1]])
    return Trajectory(
        times=times, y1=y1, y2=y2, status=str(status[0]),
        y_com_initial=0.5 * (y1_0 + y2_0),
    )


def arrivals(traj: Trajectory):
    """Screen positions (y1(t0), y2(t0)) of a completed trajectory."""
    return traj.arrivals()
