import numpy as np
import mpmath as mp
mp.mp.dps = 25

RHOS = [100.0, 177.82794100389228, 316.22776601683796, 562.3413251903491, 1000.0]

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
    raise ValueError

def ls_slope(xs, ys):
    lx = np.log(xs); ly = np.log(np.abs(ys))
    A = np.vstack([lx, np.ones_like(lx)]).T
    return np.linalg.lstsq(A, ly, rcond=None)[0][0]

for n, s, beta in [(1, 0.6, 0.25), (1, 0.75, 0.4), (2, 0.6, 0.3)]:
    vals = [psi(n, s, beta, r) for r in RHOS]
    fv = [float(v) for v in vals]
    m = ls_slope(RHOS, fv)
    target = -(n + 2 * beta)
    bias = m - target
    flag = "OK " if abs(bias) < 0.045 else "BAD"
    print(f"{flag} n={n} s={s} b={beta}: slope={m:.5f} target={target:.2f} bias={bias:+.4f}")
    print("    vals=", [mp.nstr(v, 15) for v in vals])
