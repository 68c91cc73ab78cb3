"""Independent oracles used by the test suite.

Everything here is deliberately written without the package's operator
machinery: a plain RK4 shooting integrator for the radial zero-energy
problem, a classical Jacobi rotation eigensolver, and brute-force quadrature
helpers.  The oracles stay independent of the code paths they check.
"""

import numpy as np


def shoot_zero_energy(potential, coupling, r_end, n_steps=8000, two_m=1.0):
    """Integrate u'' = -2m * coupling * V(r) u from u(0)=0, u'(0)=1 by RK4.

    Returns (u(r_end), u'(r_end)).
    """
    h = r_end / n_steps
    r_nodes = np.linspace(0.0, r_end, n_steps + 1)
    v_lo = potential(r_nodes[:-1])
    v_mid = potential(r_nodes[:-1] + 0.5 * h)
    v_hi = potential(r_nodes[1:])
    u, up = 0.0, 1.0
    c = two_m * coupling
    for i in range(n_steps):
        k1u, k1p = up, -c * v_lo[i] * u
        k2u, k2p = up + 0.5 * h * k1p, -c * v_mid[i] * (u + 0.5 * h * k1u)
        k3u, k3p = up + 0.5 * h * k2p, -c * v_mid[i] * (u + 0.5 * h * k2u)
        k4u, k4p = up + h * k3p, -c * v_hi[i] * (u + h * k3u)
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        up += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return u, up


def shooting_critical_coupling(potential, r_end, bracket=(0.5, 10.0), two_m=1.0, iters=60):
    """Critical coupling via bisection on u'(r_end) = 0 (zero-energy matching)."""
    lo, hi = bracket
    f_lo = shoot_zero_energy(potential, lo, r_end, two_m=two_m)[1]
    f_hi = shoot_zero_energy(potential, hi, r_end, two_m=two_m)[1]
    if f_lo * f_hi > 0:
        raise ValueError("shooting bracket does not straddle the resonance")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = shoot_zero_energy(potential, mid, r_end, two_m=two_m)[1]
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def shoot_exterior_wave(potential, coupling, r_support, two_m=1.0):
    """Zero-energy u on [0, r_support], continued as u = C + D r outside.

    Returns (C, D) of the exterior solution matched at r_support.
    """
    u, up = shoot_zero_energy(potential, coupling, r_support, two_m=two_m)
    d = up
    c = u - d * r_support
    return c, d


def jacobi_eigenvalues(matrix, tol=1e-14, max_sweeps=100):
    """Full eigenvalues of a symmetric matrix by classical Jacobi rotations."""
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                cth = 1.0 / np.sqrt(t * t + 1.0)
                sth = t * cth
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = cth
                rot[p, q] = sth
                rot[q, p] = -sth
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def trapezoid_l1_radial(values, nodes, d=3):
    """Brute-force trapezoid of the radial L1 norm, written independently."""
    area = 4.0 * np.pi if d == 3 else 2.0 * np.pi
    integrand = np.abs(values) * nodes ** (d - 1)
    total = np.trapezoid(integrand, nodes)
    total += 0.5 * nodes[0] * integrand[0]  # half cell down to r = 0
    return area * total
