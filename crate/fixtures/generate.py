"""Regenerates the expected values in this directory from closed forms.

Run from the repository root: python3 fixtures/generate.py
"""

import math
import random

from scipy.integrate import solve_ivp


def fmt(v):
    return repr(float(v))


def vec(xs):
    return "[" + ", ".join(fmt(x) for x in xs) + "]"


def mat(rows):
    return "[\n" + "".join(f"    {vec(r)},\n" for r in rows) + "]"


def write(name, body):
    with open(f"fixtures/{name}.toml", "w") as f:
        f.write(body)


rng = random.Random(20240601)

# Midpoint map of H = (q^2 + p^2)/2 with q' = p, p' = -q.
dt = 0.1
a = dt / 2
pts = [[rng.uniform(-2, 2), rng.uniform(-2, 2)] for _ in range(20)]
out = [
    [((1 - a * a) * q + 2 * a * p) / (1 + a * a), ((1 - a * a) * p - 2 * a * q) / (1 + a * a)]
    for q, p in pts
]
write(
    "midpoint_equivalence",
    f'''kind = "midpoint_equivalence"
description = "First-order scheme on the canonical plane equals the implicit midpoint rule for the harmonic oscillator"
dt = {fmt(dt)}
tolerance = 1e-10
points = {mat(pts)}
expected = {mat(out)}
''',
)

# S2 = -1/2 sum a_ij x_i x_j dH_i dH_j for {x_i, x_j} = a_ij x_i x_j.
A = [[0.0, 1.5, -0.5], [-1.5, 0.0, 2.0], [0.5, -2.0, 0.0]]


def h(x):
    return x[0] ** 2 * x[1] + 0.5 * x[2] ** 3 - x[0] * x[2] + 2 * x[1]


def dh(x):
    return [2 * x[0] * x[1] - x[2], x[0] ** 2 + 2, 1.5 * x[2] ** 2 - x[0]]


pts = [[rng.uniform(0.2, 1.8) for _ in range(3)] for _ in range(20)]
s2 = []
for x in pts:
    g = dh(x)
    s2.append(-0.5 * sum(A[i][j] * x[i] * x[j] * g[i] * g[j] for i in range(3) for j in range(3)))
write(
    "s2_log_canonical",
    f'''kind = "s2_log_canonical"
description = "Second generating-function coefficient for a log-canonical bracket"
matrix = {mat(A)}
hamiltonian = "x0^2*x1 + 0.5*x2^3 - x0*x2 + 2*x1"
tolerance = 1e-10
points = {mat(pts)}
expected = {vec(s2)}
''',
)


# Kahan steps for H = sum x_i follow the H-flow for 2 artanh(H dt)/H each.
def lv_field(t, x):
    n = len(x)
    return [x[i] * sum((1 if j > i else -1 if j < i else 0) * x[j] for j in range(n)) for i in range(n)]


for n, x0 in [(2, [0.7, 1.1]), (3, [0.6, 0.9, 1.2])]:
    dt, steps = 0.002, 200
    u = sum(x0)
    t = steps * 2 * math.atanh(u * dt) / u
    sol = solve_ivp(lv_field, (0, t), x0, method="DOP853", rtol=1e-13, atol=1e-15)
    write(
        f"kahan_exactness_n{n}",
        f'''kind = "kahan_exactness"
description = "Kahan discretisation of the {n}-species Lotka-Volterra system is a reparametrised exact flow"
dt = {fmt(dt)}
steps = {steps}
initial = {vec(x0)}
h_tolerance = 1e-10
expected_final = {vec(sol.y[:, -1])}
state_tolerance = 1e-8
''',
    )

# e^{dt^k} R(dt) iterated: x_N = e^{N dt^k} R(N dt) x_0.
dt, k, steps, x0 = 0.1, 2, 500, [1.0, 0.0]
g = math.exp(steps * dt**k)
c, s = math.cos(steps * dt), math.sin(steps * dt)
final = [g * (c * x0[0] - s * x0[1]), g * (s * x0[0] + c * x0[1])]
write(
    "counterexample_divergence",
    f'''kind = "counterexample_divergence"
description = "Leaf-preserving non-Hamiltonian scheme grows like exp(N dt^k)"
dt = {fmt(dt)}
k = {k}
steps = {steps}
initial = {vec(x0)}
expected_log_norm = {fmt(steps * dt**k + math.log(math.hypot(*x0)))}
expected_final = {vec(final)}
relative_tolerance = 1e-12
''',
)

# h_t = K(p) + V(q + t K'(p)) with V = q^4/4, K = p^2/2: second coefficient V'(q) K'(p) / 2.
pts = [[rng.uniform(-2, 2), rng.uniform(-2, 2)] for _ in range(20)]
write(
    "magnus_euler_symplectic",
    f'''kind = "magnus_euler_symplectic"
description = "Second modified-Hamiltonian coefficient of symplectic Euler"
tolerance = 1e-10
points = {mat(pts)}
expected = {vec(0.5 * q**3 * p for q, p in pts)}
''',
)
