"""Exact bound-state counts for the disk well F = chi_[0,1] via Bessel zeros.

At zero energy the matching condition in channel m >= 1 is J_{m-1}(sqrt(alpha)) = 0,
and in channel 0 it is J_1(sqrt(alpha)) = 0 with the extra state that every
attractive 2D potential binds.  N_m = #{zeros of J_{|m|-1} below sqrt(alpha)}
(+1 for m = 0, using J_{-1} = -J_1).
"""
import sys
import numpy as np
from scipy.special import jn_zeros


def channel_counts(alpha):
    k = np.sqrt(alpha)
    n0 = 1 + int(np.sum(jn_zeros(1, 200) < k))
    per = [n0]
    m = 1
    while True:
        nm = int(np.sum(jn_zeros(m - 1, 200) < k))
        if nm == 0:
            break
        per.append(nm)
        m += 1
    return per


if __name__ == "__main__":
    alphas = [float(a) for a in sys.argv[1:]] or [100, 200, 400, 800, 1600, 3200]
    for a in alphas:
        per = channel_counts(a)
        total = per[0] + 2 * sum(per[1:])
        # Dirichlet radial count: half-line problems at t = 0 (r = 1).  Inside
        # (t < 0) G = e^{2t}: zero-energy solution is J_0(sqrt(a) e^t); outside G = 0.
        print(f"alpha={a:g} total={total} N/alpha={total / a:.6f} dev={abs(total / a - 0.25):.6f} per={per}")
