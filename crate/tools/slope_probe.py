"""Probe the observed log-log decay slope of the kernel profile phi_{n,s}
over rho in [10, 100] and compare with the asymptotic law -(n + 2s).

phi_{n,s}(rho) = 2 pi rho^{1-n/2} int_0^inf e^{-4 pi^2 r^{2s}} r^{n/2}
                 J_{n/2-1}(2 pi r rho) dr

n = 1: scipy levy_stable (alpha = 2s, scale sigma = (4 pi^2 / (2 pi)^{2s})^{1/(2s)}),
       phi(rho) = pdf(rho).
n = 2: mpmath quadosc against J_0 zeros.
n = 3: reduces to a sine transform: phi = (2/rho) int e^{-4pi^2 r^{2s}} r sin(2 pi r rho) dr.

Also prints phi values for freezing as oracles.
"""
import numpy as np
import mpmath as mp
from scipy.stats import levy_stable

mp.mp.dps = 25

RHOS = [10.0, 17.782794100389228, 31.622776601683793, 56.23413251903491, 100.0]


def phi1(s, rho):
    alpha = 2 * s
    sigma = (4 * np.pi**2 / (2 * np.pi) ** alpha) ** (1 / alpha)
    return levy_stable.pdf(rho, alpha, 0.0, scale=sigma)


def phi2(s, rho):
    r = mp.mpf(rho)

    def f(x):
        return mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x * mp.besselj(0, 2 * mp.pi * x * r)

    val = mp.quadosc(f, [0, mp.inf], zeros=lambda k: (k + 0.75) / (2 * r))
    return 2 * mp.pi * val


def phi3(s, rho):
    r = mp.mpf(rho)

    def f(x):
        return mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x * mp.sin(2 * mp.pi * x * r)

    val = mp.quadosc(f, [0, mp.inf], zeros=lambda k: k / (2 * r))
    return 2 / r * val


def ls_slope(xs, ys):
    lx = np.log(xs)
    ly = np.log(ys)
    A = np.vstack([lx, np.ones_like(lx)]).T
    m, _ = np.linalg.lstsq(A, ly, rcond=None)[0]
    return m


for n, fn in [(1, phi1), (2, phi2), (3, phi3)]:
    for s in [0.55, 0.6, 0.65, 0.7, 0.75]:
        vals = [float(fn(s, r)) for r in RHOS]
        m = ls_slope(RHOS, vals)
        bias = m + n + 2 * s
        flag = "OK " if abs(bias) < 0.035 else "BAD"
        print(f"{flag} n={n} s={s}: slope={m:.5f} target={-(n+2*s):.2f} bias={bias:+.4f}  vals={['%.6e' % v for v in vals]}")
