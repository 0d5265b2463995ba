"""Frozen oracle values for the symmetric Marchaud fractional derivative.

Convention under test:
    D^beta f(u) = int_R (f(tau) - f(u)) |tau - u|^{-1-beta} dtau

Cases:
  A. f(t) = exp(-t^2)            (smooth two-sided, rapid decay)
  B. f(t) = cos(w t)             (eigenfunction: -2 c_beta w^beta cos(w u),
                                  c_beta = -Gamma(-beta) cos(pi beta / 2))
  C. f(t) = exp(-1/t) t^{-p} 1_{t>0}   (one-sided with support edge at 0)
"""
import mpmath as mp

mp.mp.dps = 40


def marchaud(f, beta, u, pts_pos, pts_neg):
    # Right side: delta > 0, tau = u + delta.
    def right(d):
        return (f(u + d) - f(u)) * d ** (-1 - beta)

    def left(d):
        return (f(u - d) - f(u)) * d ** (-1 - beta)

    r = mp.quad(right, pts_pos)
    l = mp.quad(left, pts_neg)
    return r + l


def gauss(t):
    return mp.e ** (-t * t)


def one_sided(p):
    def f(t):
        if t <= 0:
            return mp.mpf(0)
        return mp.e ** (-1 / t) * t ** (-p)

    return f


print("# case A: f = exp(-t^2)")
for beta, u in [(0.3, 0.0), (0.3, 0.7), (0.5, 0.7), (0.5, 2.0), (0.9, 0.7), (0.7, -1.3)]:
    pts = [0, mp.mpf("0.5"), 2, 10, 100, mp.inf]
    v = marchaud(gauss, beta, mp.mpf(u), pts, pts)
    print(f"({beta}, {u}, {mp.nstr(v, 17)}),")

print("# case B: analytic eigenvalues, f = cos(w t)")
for beta, w, u in [(0.5, 1.0, 0.4), (0.3, 2.0, 1.1), (0.8, 0.7, 0.0)]:
    c = -mp.gamma(-beta) * mp.cos(mp.pi * beta / 2)
    v = -2 * c * w ** beta * mp.cos(w * u)
    print(f"({beta}, {w}, {u}, {mp.nstr(v, 17)}),")

print("# case C: f = exp(-1/t) t^{-p} for t > 0")
for beta, p, u in [(0.5, 1.5, 0.8), (0.5, 1.5, 0.0), (0.3, 0.5, 2.0), (0.9, 2.5, 0.4), (0.5, 1.5, -0.6)]:
    f = one_sided(p)
    uu = mp.mpf(u)
    # Integration breakpoints must include the support edge crossing.
    if u > 0:
        pts_neg = [0, uu / 2, uu, uu + 2, uu + 20, mp.inf]
    else:
        pts_neg = [0, 1, 10, 100, mp.inf]
    if u >= 0:
        pts_pos = [0, mp.mpf("0.25"), 1, 5, 50, 1000, mp.inf]
    else:
        pts_pos = [0, -uu, -uu + 1, -uu + 10, -uu + 100, mp.inf]
    v = marchaud(f, beta, uu, pts_pos, pts_neg)
    print(f"({beta}, {p}, {u}, {mp.nstr(v, 17)}),")
