"""Effective two-particle wavefunction for the detected sector.

The symmetrized four-term state splits at detection into two non-overlapping
longitudinal sectors.  Conditioning on particle 1 reaching the right screen
selects the symmetric combination

    psi_eff(y1, y2, t) = N * [f_A(y1,t)*f_B(y2,t) + f_B(y1,t)*f_A(y2,t)]

whose y-part carries all transverse statistics.  The exchange sign multiplies
only the unselected sector, so no computed density or velocity depends on it;
the configuration records it for report provenance only.

N follows from unit-norm packets: N = [2*(1 + |<f_A|f_B>|**2)]**(-1/2), with
the packet overlap <f_A|f_B> = exp(-Y**2/(2*sigma0**2)) * exp(-2*ky**2*sigma0**2)
at t = 0 (time-invariant under the free evolution).  The analytic value is
cross-checked by quadrature at construction.
"""

import numpy as np
from scipy.integrate import quad

from . import packets
from .errors import NodeError, ValidationError


class EffectiveState:
    """Immutable detected-sector state; all evaluations are pure."""

    def __init__(self, cfg, check_norm=True):
        cfg.validate()
        self.cfg = cfg
        self.overlap = np.exp(-cfg.Y**2 / (2.0 * cfg.sigma0**2)) * np.exp(
            -2.0 * cfg.ky**2 * cfg.sigma0**2
        )
        self.norm_constant = 1.0 / np.sqrt(2.0 * (1.0 + self.overlap**2))
        if check_norm:
            self._check_overlap_quadrature()

    def _check_overlap_quadrature(self):
        cfg = self.cfg
        lim = cfg.Y + 10.0 * cfg.sigma0

        def integrand_re(y):
            return (np.conj(packets.packet_value(cfg, "A", y, 0.0))
                    * packets.packet_value(cfg, "B", y, 0.0)).real

        def integrand_im(y):
            return (np.conj(packets.packet_value(cfg, "A", y, 0.0))
                    * packets.packet_value(cfg, "B", y, 0.0)).imag

        re, _ = quad(integrand_re, -lim, lim, limit=200)
        im, _ = quad(integrand_im, -lim, lim, limit=200)
        ov = abs(re + 1j * im)
        if not np.isclose(ov, self.overlap, rtol=1e-8, atol=1e-12):
            raise ValidationError(
                f"analytic packet overlap {self.overlap} disagrees with quadrature {ov}"
            )

    @property
    def detection_time(self):
        return packets.detection_time(self.cfg)

    def _terms(self, y1, y2, t):
        """The two products f_A(y1)f_B(y2) and f_B(y1)f_A(y2)."""
        cfg = self.cfg
        t1 = packets.packet_value(cfg, "A", y1, t) * packets.packet_value(cfg, "B", y2, t)
        t2 = packets.packet_value(cfg, "B", y1, t) * packets.packet_value(cfg, "A", y2, t)
        return t1, t2

    def psi(self, y1, y2, t):
        """psi_eff(y1, y2, t), normalized over the (y1, y2) plane."""
        t1, t2 = self._terms(y1, y2, t)
        return self.norm_constant * (t1 + t2)

    def density(self, y1, y2, t):
        """|psi_eff|**2, the Born joint density at time t."""
        return np.abs(self.psi(y1, y2, t)) ** 2

    def log_grad_raw(self, y1, y2, t, node_epsilon=1e-12):
        """(g1, g2, node_mask): log-gradients and where the quotient is undefined.

        Vectorized; entries flagged in node_mask hold garbage and must not be
        used.  The node test is |t1 + t2| < node_epsilon * (|t1| + |t2|),
        i.e. relative cancellation of the two product terms.
        """
        cfg = self.cfg
        t1, t2 = self._terms(y1, y2, t)
        total = t1 + t2
        scale = np.abs(t1) + np.abs(t2)
        node = np.abs(total) <= node_epsilon * scale
        node |= scale == 0.0
        safe = np.where(node, 1.0, total)
        ga1 = packets.packet_log_grad(cfg, "A", y1, t)
        gb1 = packets.packet_log_grad(cfg, "B", y1, t)
        ga2 = packets.packet_log_grad(cfg, "A", y2, t)
        gb2 = packets.packet_log_grad(cfg, "B", y2, t)
        g1 = (ga1 * t1 + gb1 * t2) / safe
        g2 = (gb2 * t1 + ga2 * t2) / safe
        return g1, g2, node

    def log_grad(self, y1, y2, t, node_epsilon=1e-12):
        """(d/dy1 ln psi, d/dy2 ln psi); raises NodeError at a node."""
        cfg = self.cfg
        t1, t2 = self._terms(y1, y2, t)
        total = t1 + t2
        if np.any(np.abs(total) <= node_epsilon * (np.abs(t1) + np.abs(t2))) or np.any(
            (np.abs(t1) + np.abs(t2)) == 0.0
        ):
            raise NodeError(y1, y2, t)
        g1 = (packets.packet_log_grad(cfg, "A", y1, t) * t1
              + packets.packet_log_grad(cfg, "B", y1, t) * t2) / total
        g2 = (packets.packet_log_grad(cfg, "B", y2, t) * t1
              + packets.packet_log_grad(cfg, "A", y2, t) * t2) / total
        return g1, g2

    def total_momentum_local(self, y1, y2, t):
        """Local value of p_y1 + p_y2 on psi: i*hbar*(y1 + y2)/(2*sigma0*sigma_t).

        Closed form with no quotient, so it is defined even at nodes; psi is
        an exact eigen-like function of the total transverse momentum.
        """
        cfg = self.cfg
        st = packets.sigma_t(cfg, t)
        return 1j * cfg.hbar * (np.asarray(y1, dtype=float) + np.asarray(y2, dtype=float)) / (
            2.0 * cfg.sigma0 * st
        )

    def domain_halfwidth(self, t, coverage=6.0):
        """Half-width L so [-L, L]**2 holds all but ~exp(-coverage**2/2) mass."""
        cfg = self.cfg
        center = abs(cfg.Y + cfg.hbar * cfg.ky * t / cfg.mass)
        return center + coverage * abs(packets.sigma_t(cfg, t))


def commutator_residual(cfg, testfn, y1, y2, t, h):
    """Finite-difference residual of [p_y1 + p_y2, y1 - y2] applied to testfn.

    The commutator vanishes identically; central differences leave an
    O(h**2) truncation remainder, which is what this returns:
        -i*hbar * (avg_1 - avg_2),  avg_i = mean of testfn shifted +-h in y_i,
    minus the identical cross terms that cancel exactly.
    """
    f = testfn(y1, y2, t)
    f1p = testfn(y1 + h, y2, t)
    f1m = testfn(y1 - h, y2, t)
    f2p = testfn(y1, y2 + h, t)
    f2m = testfn(y1, y2 - h, t)
    q = y1 - y2

    def d1(fp, fm):
        return (fp - fm) / (2.0 * h)

    # P_h (Q f): Q picks up the shift inside the difference quotient.
    p_qf = -1j * cfg.hbar * (
        ((y1 + h - y2) * f1p - (y1 - h - y2) * f1m) / (2.0 * h)
        + ((y1 - y2 - h) * f2p - (y1 - y2 + h) * f2m) / (2.0 * h)
    )
    q_pf = q * (-1j * cfg.hbar) * (d1(f1p, f1m) + d1(f2p, f2m))
    return p_qf - q_pf
