#!/usr/bin/env python3
"""Total Sobol' indices of the full-dimensional benchmark functions.

Brute-force Monte Carlo (Jansen estimator, 2**16 base points) over the
native input box. The six inputs with the largest total index are the ones
kept active in src/funcs.cpp; the rest are frozen at their range midpoints.

    python3 tools/sobol_restriction.py [--log2n 16] [--seed 20240501]
"""
import argparse

import numpy as np


def borehole(x):
    rw, r, tu, hu, tl, hl, l, kw = x.T
    lg = np.log(r / rw)
    return 2 * np.pi * tu * (hu - hl) / (lg * (1 + 2 * l * tu / (lg * rw**2 * kw) + tu / tl))


def otl(x):
    rb1, rb2, rf, rc1, rc2, beta = x.T
    vb1 = 12 * rb2 / (rb1 + rb2)
    den = beta * (rc2 + 9) + rf
    return ((vb1 + 0.74) * beta * (rc2 + 9) / den + 11.35 * rf / den
            + 0.74 * rf * beta * (rc2 + 9) / (den * rc1))


def piston(x):
    m, s, v0, k, p0, ta, t0 = x.T
    a = p0 * s + 19.62 * m - k * v0 / s
    v = s / (2 * k) * (np.sqrt(a**2 + 4 * k * p0 * v0 / t0 * ta) - a)
    return 2 * np.pi * np.sqrt(m / (k + s**2 * p0 * v0 / t0 * ta / v**2))


def robot(x):
    th = x[:, :4]
    ls = x[:, 4:]
    ang = np.cumsum(th, axis=1)
    u = np.sum(ls * np.cos(ang), axis=1)
    v = np.sum(ls * np.sin(ang), axis=1)
    return np.sqrt(u**2 + v**2)


def wing(x):
    sw, wfw, a, lam, q, tap, tc, nz, wdg, wp = x.T
    lam = np.deg2rad(lam)
    return (0.036 * sw**0.758 * wfw**0.0035 * (a / np.cos(lam)**2)**0.6 * q**0.006
            * tap**0.04 * (100 * tc / np.cos(lam))**-0.3 * (nz * wdg)**0.49 + sw * wp)


FUNCTIONS = {
    "Borehole": (borehole, ["rw", "r", "Tu", "Hu", "Tl", "Hl", "L", "Kw"],
                 [(0.05, 0.15), (100, 50000), (63070, 115600), (990, 1110),
                  (63.1, 116), (700, 820), (1120, 1680), (9855, 12045)]),
    "OtlCircuit": (otl, ["Rb1", "Rb2", "Rf", "Rc1", "Rc2", "beta"],
                   [(50, 150), (25, 70), (0.5, 3), (1.2, 2.5), (0.25, 1.2), (50, 300)]),
    "Piston": (piston, ["M", "S", "V0", "k", "P0", "Ta", "T0"],
               [(30, 60), (0.005, 0.020), (0.002, 0.010), (1000, 5000),
                (90000, 110000), (290, 296), (340, 360)]),
    "RobotArm": (robot, ["theta1", "theta2", "theta3", "theta4", "L1", "L2", "L3", "L4"],
                 [(0, 2 * np.pi)] * 4 + [(0, 1)] * 4),
    "WingWeight": (wing, ["Sw", "Wfw", "A", "Lambda", "q", "lambda", "tc", "Nz", "Wdg", "Wp"],
                   [(150, 200), (220, 300), (6, 10), (-10, 10), (16, 45), (0.5, 1),
                    (0.08, 0.18), (2.5, 6), (1700, 2500), (0.025, 0.08)]),
}


def total_indices(f, bounds, n, rng):
    d = len(bounds)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    a = lo + (hi - lo) * rng.random((n, d))
    b = lo + (hi - lo) * rng.random((n, d))
    fa = f(a)
    var = np.var(np.concatenate([fa, f(b)]))
    st = np.empty(d)
    for i in range(d):
        abi = a.copy()
        abi[:, i] = b[:, i]
        st[i] = 0.5 * np.mean((fa - f(abi))**2) / var
    return st


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--log2n", type=int, default=16)
    ap.add_argument("--seed", type=int, default=20240501)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for name, (f, names, bounds) in FUNCTIONS.items():
        st = total_indices(f, bounds, 2**args.log2n, rng)
        order = np.argsort(-st)
        keep = sorted(int(i) for i in order[:6])
        print(f"{name}:")
        for i in range(len(names)):
            mark = "*" if i in keep else " "
            print(f"  {mark} {names[i]:>7s}  ST = {st[i]:.5f}")
        print(f"  active (0-based native index): {keep}")


if __name__ == "__main__":
    main()
