"""Independent finite-difference oracle for the disk potential F = chi_[0,1].

Counts negative eigenvalues channel by channel with LAPACK bisection
(scipy.linalg.eigvalsh_tridiagonal) on a uniform grid in t = ln r with
free (natural) ends and exact cell integrals of G(t) = e^{2t}, t < 0.
Prints N_m, the Dirichlet-at-0 radial count and the 2D total per alpha.
"""
import sys
import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

T_MIN, T_MAX = -14.0, 1.0


def assemble(alpha, h, t_min=T_MIN, t_max=T_MAX):
    n = int(round((t_max - t_min) / h)) + 1
    t = t_min + h * np.arange(n)
    lo = np.maximum(t - h / 2, t_min)
    hi = np.minimum(t + h / 2, t_max)
    lo_c = np.minimum(lo, 0.0)
    hi_c = np.minimum(hi, 0.0)
    mass = 0.5 * (np.exp(2 * hi_c) - np.exp(2 * lo_c))
    width = hi - lo
    d = np.zeros(n)
    d[:-1] += 1.0 / h
    d[1:] += 1.0 / h
    e = -np.ones(n - 1) / h
    return t, d - alpha * mass, e, width


def count_below(d, e, width, energy):
    # eigenvalues of (A - energy*M) with lumped metric M = diag(width): use
    # the symmetric scaling M^{-1/2} A M^{-1/2}; inertia is what we need.
    s = 1.0 / np.sqrt(width)
    ds = d * s * s - energy
    es = e * s[:-1] * s[1:]
    ev = eigvalsh_tridiagonal(ds, es, select="v", select_range=(-1e12, 0.0))
    return len(ev)


def totals(alpha, h):
    t, d, e, width = assemble(alpha, h)
    eps = 1e-9 * alpha
    n0 = count_below(d, e, width, -eps)
    per = [n0]
    m = 1
    while True:
        nm = count_below(d, e, width, -m * m)
        if nm == 0:
            break
        per.append(nm)
        m += 1
    # Dirichlet at t = 0: drop the node at t = 0 (it lies on the grid).
    i0 = int(round(-T_MIN / h))
    assert abs(t[i0]) < 1e-9
    dl, el, wl = d[:i0], e[: i0 - 1], width[:i0]
    rad_d = count_below(dl, el, wl, -eps)
    total = per[0] + 2 * sum(per[1:])
    return per, rad_d, total


if __name__ == "__main__":
    for alpha in [float(a) for a in sys.argv[1:]] or [100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0]:
        k = int(np.ceil(np.sqrt(alpha)))
        for h in [1.0 / (64 * k), 1.0 / (128 * k)]:
            per, rad_d, total = totals(alpha, h)
            print(f"alpha={alpha:g} h={h:.3e} total={total} radial_dirichlet={rad_d} "
                  f"N0={per[0]} per={per}")
