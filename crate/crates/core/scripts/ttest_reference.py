"""Paired t-test reference: t statistic and two-sided p from the t density."""
from mpmath import mp, mpf, quad, gamma, sqrt, pi, inf

mp.dps = 40
d = [mpf("1.1"), mpf("0.9"), mpf("1.0"), mpf("1.2"), mpf("0.8")]
n = len(d)
m = sum(d) / n
var = sum((x - m) ** 2 for x in d) / (n - 1)
t = m / sqrt(var / n)
nu = n - 1
dens = lambda x: gamma((nu + 1) / 2) / (sqrt(nu * pi) * gamma(nu / 2)) * (1 + x * x / nu) ** (-(nu + 1) / 2)
p = 2 * quad(dens, [t, inf])
print("t =", mp.nstr(t, 25))
print("p =", mp.nstr(p, 25))
