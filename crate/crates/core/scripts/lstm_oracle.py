"""Scalar evaluation of one LSTM step (gates: input, forget, candidate, output)."""
from mpmath import mp, mpf, exp, tanh

mp.dps = 40

def sig(x):
    return 1 / (1 + exp(-x))

W = [[0.5, -0.3], [0.1, 0.2], [-0.4, 0.6], [0.3, 0.3], [0.2, -0.1], [0.05, 0.4], [0.7, -0.2], [-0.6, 0.1]]
U = [[0.1, 0.0], [0.0, 0.1], [0.2, -0.2], [0.1, 0.3], [-0.3, 0.2], [0.4, 0.1], [0.0, -0.1], [0.2, 0.2]]
b = [0.0, 0.1, 1.0, 1.0, -0.1, 0.0, 0.2, -0.2]
x = [1.0, -1.0]
h0 = [0.5, -0.5]
c0 = [0.2, -0.3]
H = 2

z = [sum(mpf(W[r][j]) * mpf(x[j]) for j in range(2)) + sum(mpf(U[r][j]) * mpf(h0[j]) for j in range(H)) + mpf(b[r]) for r in range(4 * H)]
for k in range(H):
    i, f, g, o = sig(z[k]), sig(z[H + k]), tanh(z[2 * H + k]), sig(z[3 * H + k])
    c = f * mpf(c0[k]) + i * g
    h = o * tanh(c)
    print(f"h[{k}] = {mp.nstr(h, 20)}  c[{k}] = {mp.nstr(c, 20)}")
