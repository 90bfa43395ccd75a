"""Compiled inner loops."""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def ring_segments(force, starts, stops, pole_re, pole_im, amp, tail_re, tail_im, n0, out):
    """Accumulate truncated damped-sinusoid responses of force segments.

    Segment ``g`` covers ``force[starts[g]:stops[g]]`` and rings through the
    modes in row ``g`` of the pole/amplitude arrays. Every input sample rings
    for exactly ``n0`` samples: the complex state gains ``force[t]`` as it
    arrives and loses ``force[t - n0] * pole**n0`` as it leaves (``tail_*``
    holds ``pole**n0``). Output is ``sum_k amp[g, k] * Im(state_k)``.
    """
    nseg, K = pole_re.shape
    sr = np.zeros(K)
    si = np.zeros(K)
    for g in range(nseg):
        a = starts[g]
        b = stops[g]
        pr = pole_re[g]
        pi = pole_im[g]
        ag = amp[g]
        tr = tail_re[g]
        ti = tail_im[g]
        sr[:] = 0.0
        si[:] = 0.0
        for t in range(a, b + n0 - 1):
            inp = force[t] if t < b else 0.0
            m = t - n0
            old = force[m] if m >= a else 0.0
            acc = 0.0
            for k in range(K):
                re = pr[k] * sr[k] - pi[k] * si[k] + inp - old * tr[k]
                im = pr[k] * si[k] + pi[k] * sr[k] - old * ti[k]
                sr[k] = re
                si[k] = im
                acc += ag[k] * im
            out[t] += acc
