import cmath

import numpy as np


def eig2x2(M):
    """Closed-form eigenvalues of a 2x2 matrix (complex in general)."""
    a, b = M[0][0], M[0][1]
    c, d = M[1][0], M[1][1]
    half_tr = 0.5 * (a + d)
    disc = cmath.sqrt(half_tr * half_tr - (a * d - b * c))
    return half_tr + disc, half_tr - disc


def spectral_radius_2x2(M):
    l1, l2 = eig2x2(M)
    return max(abs(l1), abs(l2))


def inv2x2(M):
    a, b = M[0][0], M[0][1]
    c, d = M[1][0], M[1][1]
    det = a * d - b * c
    if abs(det) < 1e-300:
        raise ZeroDivisionError("singular 2x2 matrix")
    return np.array([[d, -b], [-c, a]]) / det
