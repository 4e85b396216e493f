"""Regenerates golden.json for the five-atom fit fixture.

Solves the normal equations (G W G + a G) c = G W phi at 50 digits with mpmath.
"""
import json
import pathlib

import mpmath as mp

mp.mp.dps = 50
here = pathlib.Path(__file__).parent

def rows(name):
    lines = [l for l in (here / name).read_text().splitlines() if l and not l.startswith("#")]
    head = lines[0].split(",")
    return [dict(zip(head, map(mp.mpf, l.split(",")))) for l in lines[1:]]

cfg = json.loads((here / "config.json").read_text())
alpha = mp.mpf(cfg["alpha"])
scale = mp.mpf(1)
m = rows("measure.csv")
p = rows("phi.csv")
x = [r["x"] for r in m]
w = [r["w"] for r in m]
phi = [mp.mpc(r["phi_re"], r["phi_im"]) for r in p]
n = len(x)
G = mp.matrix(n, n)
for i in range(n):
    for j in range(n):
        G[i, j] = mp.e ** (-(x[i] - x[j]) ** 2 / (2 * scale**2))
W = mp.diag(w)
c = mp.lu_solve(G * W * G + alpha * G, G * W * mp.matrix(phi))
gc = G * c
rkhs = mp.re(sum(mp.conj(c[i]) * gc[i] for i in range(n)))
fitted = sum(w[i] * abs(gc[i]) ** 2 for i in range(n))
residual = sum(w[i] * abs(phi[i] - gc[i]) ** 2 for i in range(n))
out = {
    "span_coeffs": {"re": [float(mp.re(v)) for v in c], "im": [float(mp.im(v)) for v in c]},
    "rkhs_norm_sq": float(rkhs),
    "ambient_norm_sq": float(alpha * rkhs + fitted),
    "residual_norm_sq": float(residual),
}
(here / "golden.json").write_text(json.dumps(out, indent=2) + "\n")
