"""Independent reference values for the spinchain test suite.

Pure numpy/sympy; shares no code with the Rust crate. Run with
`python3 freeze.py` and copy the printed constants into the tests.
"""
import numpy as np
import sympy as sp

HBAR = 1.054571817e-34
C = 299792458.0

# reference parameter set
m, wm, gm = 2e-12, 200e6, 0.2e6
wc, Q, n, r = 193.5e12, 3e7, 1.44, 0.25e-3
kex = wc / Q
kin = kex
xi = wc / r
P = 10e-3


def sagnac(omega):
    return n * r * omega * wc / C * (1 - 1 / n)


def cubic_roots(D0, K, beta, F):
    # K^2 I^3 - 2 D0 K I^2 + (beta^2 + D0^2) I - F = 0
    roots = np.roots([K * K, -2 * D0 * K, beta**2 + D0**2, -F])
    return sorted(x.real for x in roots if abs(x.imag) < 1e-9 * abs(x))


def single_steady(omega, wl):
    beta = 0.5 * (kex + kin)
    F = kex * P / (HBAR * wl)
    x0 = r * omega**2 / wm**2
    K = HBAR * xi**2 / (m * wm**2)
    D0 = wc + sagnac(omega) - wl - xi * x0
    I = cubic_roots(D0, K, beta, F)[0]
    return I, x0 + HBAR * xi * I / (m * wm**2)


# pump frequency meeting the red-sideband condition at rest
wl = wc - wm
for _ in range(200):
    I, x = single_steady(0.0, wl)
    wl = wc - wm - xi * x

print("SAGNAC_100KHZ =", repr(sagnac(1e5)))
print("PUMP_AMPLITUDE_10W =", repr(np.sqrt(10.0 / (HBAR * 193.5e12))))
print("KAPPA_EX =", repr(kex))
print("PUMP_FREQUENCY =", repr(wl))
I0, x0 = single_steady(0.0, wl)
print("INTRACAVITY_PHOTONS_REST =", repr(I0))
for om in (1e5, -1e5):
    I, x = single_steady(om, wl)
    print("XI_X", om, repr(xi * x))

# bistable case: strong pump, large red detuning -> three roots
F_big = kex * 1.0 / (HBAR * wl)
K = HBAR * xi**2 / (m * wm**2)
print("BISTABLE_ROOTS(P=1W, D0=200MHz) =", cubic_roots(200e6, K, kex, F_big))

# term-by-term coefficients of the linearized equations, N = 1
a_s, x_s, eta = sp.symbols("a x eta")
beta_s, D_s, xi_s, m_s, wm_s, gm_s, hb = sp.symbols("beta Delta xi m omega_m gamma_m hbar")
row_a = [beta_s + sp.I * D_s - sp.I * xi_s * x_s - sp.I * eta, 0, -sp.I * xi_s * a_s]
row_b = [0, beta_s - sp.I * D_s + sp.I * xi_s * x_s - sp.I * eta, sp.I * xi_s * sp.conjugate(a_s)]
row_x = [-hb * xi_s / m_s * sp.conjugate(a_s), -hb * xi_s / m_s * a_s,
         wm_s**2 - sp.I * gm_s * eta - eta**2]
a_val = np.sqrt(kex) * np.sqrt(P / (HBAR * wl)) / (0.5 * (kex + kin) + 1j * (wc - wl - xi * x0))
subs = {a_s: sp.nsimplify(0) + complex(a_val).real + sp.I * complex(a_val).imag,
        x_s: x0, eta: wm + 1e6, beta_s: 0.5 * (kex + kin), D_s: wc - wl,
        xi_s: xi, m_s: m, wm_s: wm, gm_s: gm, hb: HBAR}
print("MATRIX_N1 (eta = wm + 1 MHz):")
for row in (row_a, row_b, row_x):
    print([complex(sp.N(sp.sympify(e).subs(subs), 20)) for e in row])
print("A_REST =", repr(complex(a_val)))
