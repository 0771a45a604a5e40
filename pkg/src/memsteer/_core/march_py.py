"""NumPy fallback for the resolvent marching kernel.

Integrates, for every retained mode simultaneously, the scalar Volterra
integro-differential equation

    r'(t) = (-n^2 + b(t)) r(t) - n^2 * int_s^t C(t, v) r(v) dv,  r(s) = 1,

with an exponential-integrator trapezoidal step: the memory-free factor
over each step is applied exactly (so the C == 0 problem is reproduced to
quadrature precision regardless of stiffness) and the memory convolution
is handled by trapezoidal quadrature with the newest node treated
implicitly.  The implicit correction is a scalar division per mode since
the equation is linear.  Global accuracy is O(h^2).
"""

import numpy as np


def march_resolvent(ustep, cvals, nsq, h, s_index, out):
    """March one start index for all modes.

    Parameters
    ----------
    ustep : (N, n_steps) memory-free propagation factor over each step.
    cvals : (S, S) kernel samples cvals[j, i] = C(t_j, t_i) for i <= j.
    nsq : (N,) squared mode numbers.
    h : step size.
    s_index : start index s; out[:, s_index] is set to 1.
    out : (N, S) array receiving r_n(t_j, t_s) in out[:, j] for j >= s.
    """
    n_steps = out.shape[1] - 1
    out[:, s_index] = 1.0
    mem = np.zeros(len(nsq))  # completed memory trapezoid at the current node
    half = 0.5 * h
    for j in range(s_index, n_steps):
        w = cvals[j + 1, s_index : j + 1] * h
        w[0] *= 0.5
        partial = -nsq * (out[:, s_index : j + 1] @ w)
        gee = -nsq * cvals[j + 1, j + 1]
        denom = 1.0 - half * half * gee
        out[:, j + 1] = (
            ustep[:, j] * (out[:, j] + half * mem) + half * partial
        ) / denom
        mem = partial + half * gee * out[:, j + 1]
