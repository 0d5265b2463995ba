"""Probe decay slopes and freeze oracle values for the spatial fractional
derivative profile

psi^{(beta)}_{n,s}(rho) = 2 pi rho^{1-n/2} int_0^inf e^{-4 pi^2 r^{2s}}
                           r^{n/2 + 2 beta} J_{n/2-1}(2 pi r rho) dr

Expected tail for non-integer beta: rho^{-(n + 2 beta)}.
n = 1 reduces to a cosine transform, n = 3 to a sine transform.
"""
import numpy as np
import mpmath as mp

mp.mp.dps = 25

RHOS = [10.0, 17.782794100389228, 31.622776601683793, 56.23413251903491, 100.0]


def psi(n, s, beta, rho):
    r = mp.mpf(rho)
    q = 2 * beta
    if n == 1:
        def f(x):
            return 2 * mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x**q * mp.cos(2 * mp.pi * x * r)
        return mp.quadosc(f, [0, mp.inf], zeros=lambda k: (k + 0.5) / (2 * r))
    if n == 2:
        def f(x):
            return 2 * mp.pi * mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x ** (1 + q) * mp.besselj(0, 2 * mp.pi * x * r)
        return mp.quadosc(f, [0, mp.inf], zeros=lambda k: (k + 0.75) / (2 * r))
    if n == 3:
        def f(x):
            return mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x ** (1 + q) * mp.sin(2 * mp.pi * x * r)
        return 2 / r * mp.quadosc(f, [0, mp.inf], zeros=lambda k: k / (2 * r))
    raise ValueError


def ls_slope(xs, ys):
    lx = np.log(xs)
    ly = np.log(np.abs(ys))
    A = np.vstack([lx, np.ones_like(lx)]).T
    m, _ = np.linalg.lstsq(A, ly, rcond=None)[0]
    return m


for n, s, beta in [(1, 0.6, 0.25), (1, 0.6, 0.4), (2, 0.6, 0.3), (3, 0.6, 0.35), (1, 0.75, 0.4)]:
    vals = [psi(n, s, beta, r) for r in RHOS]
    fv = [float(v) for v in vals]
    if any(v <= 0 for v in fv):
        print(f"SIGN n={n} s={s} b={beta}: {fv}")
        continue
    m = ls_slope(RHOS, fv)
    target = -(n + 2 * beta)
    bias = m - target
    flag = "OK " if abs(bias) < 0.035 else "BAD"
    print(f"{flag} n={n} s={s} b={beta}: slope={m:.5f} target={target:.2f} bias={bias:+.4f}")
    print("    vals=", [mp.nstr(v, 15) for v in vals])

# Small-rho anchors for the same instances (oracle for the series route).
for n, s, beta, rho in [(1, 0.6, 0.25, 0.5), (2, 0.6, 0.3, 1.0)]:
    def f(x):
        q = 2 * beta
        if n == 1:
            return 2 * mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x**q * mp.cos(2 * mp.pi * x * rho)
        return 2 * mp.pi * mp.e ** (-4 * mp.pi**2 * x ** (2 * s)) * x ** (1 + q) * mp.besselj(0, 2 * mp.pi * x * rho)
    v = mp.quad(f, [0, mp.mpf("0.05"), mp.mpf("0.2"), 1, mp.inf])
    print(f"anchor n={n} s={s} b={beta} rho={rho}: {mp.nstr(v, 15)}")
