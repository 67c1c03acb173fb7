"""Compare the closed-form truncation bound with the exact driven state.

Prints the measured truncation error of the ten-term expansion next to its
bound for a few drive strengths, showing the cubic scaling of both.
"""

import math

import numpy as np

from ssiss.bounds import expansion_bound
from ssiss.gwp_core import derive_spread, ground_state
from ssiss.mgwp_expand import driven_state_exact, ten_term_expansion


def main():
    g = ground_state()
    eps = derive_spread(g)
    dk = 0.05 / eps
    x = np.linspace(-30, 30, 60001)
    dx = x[1] - x[0]
    print(f"{'omega0':>8} {'measured':>12} {'bound':>12}")
    for u in (0.01, 0.02, 0.04, 0.08):
        r = ten_term_expansion(g, 2 * u, dk, 0.2)
        eg, ee = driven_state_exact(g, 2 * u, dk, 0.2, x)
        err = math.sqrt(dx * (np.sum(np.abs(eg - r.approx.component("g0", x)) ** 2)
                              + np.sum(np.abs(ee - r.approx.component("e", x)) ** 2)))
        b = expansion_bound("SEQ_639", omega0=u, delta_t=1.0, n=1, dk=dk, eps0=eps)
        print(f"{u:8.3f} {err:12.3e} {b.bound_value:12.3e}")


if __name__ == "__main__":
    main()
