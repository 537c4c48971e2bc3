"""Reference values frozen into derived.rs, computed at high precision."""

from mpmath import mp, mpf, log, exp, ceil, log1p

mp.dps = 40

C = [[mpf(1), mpf(3)], [mpf(2), mpf(5)]]
A = [mpf("0.3"), mpf("0.7")]
B = [mpf("0.6"), mpf("0.4")]
TAU = mpf(1)


def kl(x, y):
    return sum((xi * log(xi / yi) if xi > 0 else 0) - xi + yi for xi, yi in zip(x, y))


def golden(f, lo, hi, iters=90):
    g = (mp.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    return f((lo + hi) / 2)


def rsot_value(x, y):
    X = [[x, y], [B[0] - x, B[1] - y]]
    cost = sum(C[i][j] * X[i][j] for i in range(2) for j in range(2))
    return cost + TAU * kl([X[0][0] + X[0][1], X[1][0] + X[1][1]], A)


def rot_value(p, q, r):
    s = 1 - p - q - r
    X = [[p, q], [r, s]]
    cost = sum(C[i][j] * X[i][j] for i in range(2) for j in range(2))
    rows = [p + q, r + s]
    cols = [p + r, q + s]
    return cost + TAU * kl(rows, A) + TAU * kl(cols, B)


rsot = golden(lambda x: golden(lambda y: rsot_value(x, y), 0, B[1]), 0, B[0])
rot = golden(
    lambda p: golden(lambda q: golden(lambda r: rot_value(p, q, r), 0, 1 - p - q, 70), 0, 1 - p, 70),
    0,
    1,
    70,
)


def rsot_entropic(eta, rounds=4000):
    u, v = [mpf(0)] * 2, [mpf(0)] * 2
    damp = TAU / (TAU + eta)
    for _ in range(rounds):
        for i in range(2):
            s = sum(exp((u[i] + v[j] - C[i][j]) / eta) for j in range(2))
            u[i] = damp * (u[i] + eta * log(A[i]) - eta * log(s))
        for j in range(2):
            s = sum(exp((u[i] + v[j] - C[i][j]) / eta) for i in range(2))
            v[j] = v[j] + eta * log(B[j]) - eta * log(s)
    X = [[exp((u[i] + v[j] - C[i][j]) / eta) for j in range(2)] for i in range(2)]
    h = sum(-x * (log(x) - 1) for row in X for x in row)
    cost = sum(C[i][j] * X[i][j] for i in range(2) for j in range(2))
    return cost + TAU * kl([sum(X[0]), sum(X[1])], A) - eta * h


def rsot_schedule(n, eps, tau, cmax, a, b):
    n, eps, tau = mpf(n), mpf(eps), mpf(tau)
    logn = log(n)
    u = max(3 * logn, eps / tau)
    eta = eps / u
    lsup = max(max(abs(log(x)) for x in a), max(abs(log(x)) for x in b))
    r = lsup + max(logn, cmax / eta - logn)
    k1 = log(8 * r * (2 * tau + eta) / (3 * eta)) / log1p(eta / tau)
    k2 = (1 + tau / eta) * log(3 * tau * r * (2 * (eta + tau) + 3 * r * (2 * tau + eta)) / (eta**2 * logn))
    return u, eta, r, k1, k2, int(ceil(1 + 2 * max(k1, k2)))


print("rsot", mp.nstr(rsot, 20))
print("rot", mp.nstr(rot, 20))
print("rsot entropic eta=0.5", mp.nstr(rsot_entropic(mpf("0.5")), 20))
for name, value in zip(["U", "eta", "R", "k1", "k2", "k"], rsot_schedule(2, "0.01", 1, mpf(5), A, B)):
    print(name, mp.nstr(value, 20) if not isinstance(value, int) else value)
