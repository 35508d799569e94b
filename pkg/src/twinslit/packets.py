"""Single-slit Gaussian wavepacket primitives.

Each slit emits a dispersing Gaussian in the transverse coordinate y with
complex width sigma_t = sigma0 * (1 + i*hbar*t / (2*m*sigma0**2)).  Slit A is
centered at +Y, slit B at -Y; B's packet is the mirror image of A's,
f_B(y, t) = f_A(-y, t).  The plane-wave longitudinal factor has unit modulus
and cancels in every transverse density and velocity, so it is never
evaluated; only the y-dependent factor lives here.

All functions broadcast over numpy arrays in y and t.
"""

import numpy as np

SLIT_A = "A"
SLIT_B = "B"
_SIGN = {SLIT_A: 1.0, SLIT_B: -1.0}

_QUARTIC_ROOT_2PI = (2.0 * np.pi) ** (-0.25)


def slit_sign(slit):
    """+1 for slit A (upper, +Y), -1 for slit B (lower, -Y)."""
    return _SIGN[slit]


def sigma_t(cfg, t):
    """Complex packet width sigma0 * (1 + i*hbar*t / (2*m*sigma0**2)).

    Its real part is sigma0 for every t, so the principal square root used in
    the packet prefactor never crosses a branch cut.
    """
    t = np.asarray(t, dtype=float)
    tau = cfg.hbar * t / (2.0 * cfg.mass * cfg.sigma0**2)
    return cfg.sigma0 * (1.0 + 1j * tau)


def detection_time(cfg):
    """Flight time t0 = m*D/(hbar*kx) from the slit plane to the screens."""
    return cfg.mass * cfg.D / (cfg.hbar * cfg.kx)


def packet_center(cfg, slit, t):
    """Center of the slit's packet: s*(Y + hbar*ky*t/m), drifting with ky."""
    s = _SIGN[slit]
    return s * (cfg.Y + cfg.hbar * cfg.ky * np.asarray(t, dtype=float) / cfg.mass)


def packet_value(cfg, slit, y, t):
    """Transverse amplitude of the packet emitted by `slit`, at (y, t).

    (2*pi*sigma_t**2)**(-1/4)
      * exp[-(s*y - Y - hbar*ky*t/m)**2 / (4*sigma0*sigma_t)]
      * exp[ i*ky*(s*y - Y - hbar*ky*t/(2*m)) ]
    with s = +1 for A, -1 for B.  Unit L2 norm in y at every t.
    """
    s = _SIGN[slit]
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    st = sigma_t(cfg, t)
    drift = cfg.hbar * cfg.ky * t / cfg.mass
    u = s * y - cfg.Y - drift
    prefactor = _QUARTIC_ROOT_2PI / np.sqrt(st)
    phase = cfg.ky * (s * y - cfg.Y - 0.5 * drift)
    return prefactor * np.exp(-(u * u) / (4.0 * cfg.sigma0 * st) + 1j * phase)


def packet_log_grad(cfg, slit, y, t):
    """d/dy of ln packet_value: s * [-(s*y - Y - hbar*ky*t/m)/(2*sigma0*sigma_t) + i*ky]."""
    s = _SIGN[slit]
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    st = sigma_t(cfg, t)
    u = s * y - cfg.Y - cfg.hbar * cfg.ky * t / cfg.mass
    return s * (-u / (2.0 * cfg.sigma0 * st) + 1j * cfg.ky)
