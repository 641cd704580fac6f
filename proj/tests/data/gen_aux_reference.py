#!/usr/bin/env python3
"""Regenerates aux_reference.inc: pinned-point values of the collar and
interior auxiliary functions on the unit ball in d = 3, evaluated
symbolically with exact rational inputs and printed to 17 significant
digits. The formulas here are transcribed independently of the C++
implementation so the two can cross-check each other.

Unit-ball barrier: psi = (1 - |x|^2) / 2, grad psi = -x, hess psi = -I.

Collar functions (0 < psi < lambda):
  gamma1 = 1 + psi (1 - psi / (4 lambda)) / (8 lambda)
  gamma2 = lambda^2 + psi (1 - psi / (4 lambda))
  B1 = gamma2 (gamma1 |xi|^2 + psi_(xi)^2 / psi)
  r1 = -<grad psi, hess psi xi> / |grad psi|^2 + psi_(xi) / psi
  P1 = [(hess psi xi) grad^T - grad (hess psi xi)^T] / |grad psi|^2
  pi1_k = (1 - psi/(2 lambda)) / (2 gamma2)
          * [ (psi_(xi)/psi) <grad, s_k> + gamma1 <xi, s_k> ]

Interior functions (psi > lambda^2):
  B2 = lambda^(3 theta) psi^(1 - 2 theta) (K1 |xi|^2 + psi_(xi)^2 / psi)
  r2 = theta psi_(xi) / psi
  pi2_k = theta (1-2 theta)^2 / (2 (1-3 theta) psi^2)
          * [ K1 psi <xi, s_k> + psi_(xi) <grad, s_k> ]
"""

from fractions import Fraction as F

import sympy as sp


def vec(*entries):
    return sp.Matrix([sp.Rational(e) for e in entries])


def mat3x2(cols):
    return sp.Matrix.hstack(*cols)


def collar(x, xi, lam, sigma):
    psi = (1 - x.dot(x)) / 2
    grad = -x
    hxi = -xi  # hess psi = -I applied to xi
    psixi = grad.dot(xi)
    g2norm = grad.dot(grad)
    gamma1 = 1 + psi * (1 - psi / (4 * lam)) / (8 * lam)
    gamma2 = lam**2 + psi * (1 - psi / (4 * lam))
    b = gamma2 * (gamma1 * xi.dot(xi) + psixi**2 / psi)
    r = -grad.dot(hxi) / g2norm + psixi / psi
    p = (hxi * grad.T - grad * hxi.T) / g2norm
    scale = (1 - psi / (2 * lam)) / (2 * gamma2)
    pi = [
        scale * ((psixi / psi) * grad.dot(sigma.col(k)) + gamma1 * xi.dot(sigma.col(k)))
        for k in range(sigma.cols)
    ]
    return b, r, p, pi


def interior(x, xi, lam, theta, k1, sigma):
    psi = (1 - x.dot(x)) / 2
    grad = -x
    psixi = grad.dot(xi)
    b = lam ** (3 * theta) * psi ** (1 - 2 * theta) * (k1 * xi.dot(xi) + psixi**2 / psi)
    r = theta * psixi / psi
    scale = theta * (1 - 2 * theta) ** 2 / (2 * (1 - 3 * theta) * psi**2)
    pi = [
        scale * (k1 * psi * xi.dot(sigma.col(k)) + psixi * grad.dot(sigma.col(k)))
        for k in range(sigma.cols)
    ]
    return b, r, pi


def num(expr):
    return format(float(sp.N(expr, 30)), ".17g")


SIGMAS = [
    mat3x2([vec(1, 0, 0), vec(0, 1, 0)]),
    mat3x2([vec(F(1, 2), F(-1, 3), F(1, 4)), vec(0, F(2, 3), F(-1, 5))]),
]

# (x, xi, lambda, sigma_index); collar needs 0 < psi < lambda.
COLLAR_CASES = [
    (vec(F(1, 2), 0, 0), vec(1, 0, 0), F(1, 2), 0),
    (vec(F(1, 2), 0, 0), vec(0, 1, 0), F(1, 2), 1),
    (vec(F(3, 10), F(-2, 5), F(1, 5)), vec(F(1, 2), 1, F(-1, 3)), F(1, 2), 0),
    (vec(F(3, 10), F(-2, 5), F(1, 5)), vec(1, 0, 1), F(2, 5), 1),
    (vec(F(-7, 10), F(1, 10), F(1, 5)), vec(F(2, 3), F(-1, 2), F(1, 7)), F(1, 2), 0),
    (vec(F(4, 5), F(1, 10), 0), vec(F(-1, 3), F(1, 4), 1), F(3, 5), 1),
    (vec(F(1, 4), F(1, 4), F(1, 4)), vec(1, 1, 1), F(1, 2), 0),
    (vec(F(9, 10), 0, F(1, 5)), vec(0, F(3, 5), F(-2, 5)), F(2, 5), 1),
    (vec(F(-1, 2), F(-1, 2), F(1, 10)), vec(F(1, 5), F(-1, 5), F(4, 5)), F(3, 5), 0),
    (vec(F(3, 5), F(-1, 5), F(2, 5)), vec(F(-3, 7), F(2, 7), F(6, 7)), F(1, 2), 1),
]

# (x, xi, lambda, theta, K1, sigma_index); interior needs psi > lambda^2.
INTERIOR_CASES = [
    (vec(F(1, 2), 0, 0), vec(1, 0, 0), F(1, 2), F(1, 6), 1, 0),
    (vec(F(1, 2), 0, 0), vec(0, 1, 0), F(1, 2), F(1, 6), 1, 1),
    (vec(F(1, 5), F(1, 5), F(-1, 5)), vec(F(1, 2), F(-1, 2), 1), F(1, 2), F(1, 6), 1, 0),
    (vec(F(1, 5), F(1, 5), F(-1, 5)), vec(1, 1, 0), F(1, 2), F(1, 4), F(3, 2), 1),
    (vec(F(3, 10), F(-1, 10), F(1, 10)), vec(F(2, 5), F(3, 5), F(-1, 5)), F(2, 5), F(1, 6), 1, 0),
    (vec(0, F(1, 2), F(1, 10)), vec(F(-1, 2), F(1, 3), F(1, 6)), F(1, 2), F(1, 5), 2, 1),
    (vec(F(-2, 5), F(1, 5), 0), vec(1, F(-1, 2), F(1, 4)), F(3, 5), F(1, 6), 1, 0),
    (vec(F(1, 10), F(1, 10), F(1, 10)), vec(F(1, 3), F(1, 3), F(1, 3)), F(1, 2), F(3, 10), F(5, 4), 1),
    (vec(F(-1, 4), F(-1, 4), F(1, 4)), vec(0, 1, F(-1, 2)), F(1, 2), F(1, 6), 1, 0),
    (vec(F(2, 5), F(2, 5), F(-1, 10)), vec(F(5, 6), F(-1, 6), F(1, 2)), F(1, 2), F(1, 7), F(11, 10), 1),
]


def emit():
    lines = []
    lines.append("// Generated by gen_aux_reference.py; regenerate rather than edit.")
    lines.append("// Pinned auxiliary-function values on the unit ball, d = 3.")
    lines.append("")
    lines.append("struct CollarRef {")
    lines.append("  double x[3], xi[3], lambda_, sigma[6];  // sigma column-major 3x2")
    lines.append("  double b, r, p[9], pi[2];               // p row-major")
    lines.append("};")
    lines.append("")
    lines.append("struct InteriorRef {")
    lines.append("  double x[3], xi[3], lambda_, theta, k1, sigma[6];")
    lines.append("  double b, r, pi[2];")
    lines.append("};")
    lines.append("")

    lines.append(f"inline constexpr CollarRef kCollarRefs[{len(COLLAR_CASES)}] = {{")
    for x, xi, lam, si in COLLAR_CASES:
        psi = (1 - x.dot(x)) / 2
        assert 0 < psi < lam, f"collar case outside its region: psi={psi}, lambda={lam}"
        sigma = SIGMAS[si]
        b, r, p, pi = collar(x, xi, lam, sigma)
        nums = [num(v) for v in x] + [num(v) for v in xi] + [num(lam)]
        nums += [num(sigma[i, k]) for k in range(2) for i in range(3)]
        nums += [num(b), num(r)]
        nums += [num(p[i, j]) for i in range(3) for j in range(3)]
        nums += [num(v) for v in pi]
        lines.append("    {" + ", ".join(nums) + "},")
    lines.append("};")
    lines.append("")

    lines.append(f"inline constexpr InteriorRef kInteriorRefs[{len(INTERIOR_CASES)}] = {{")
    for x, xi, lam, theta, k1, si in INTERIOR_CASES:
        psi = (1 - x.dot(x)) / 2
        assert psi > lam * lam, f"interior case outside its region: psi={psi}, lambda={lam}"
        sigma = SIGMAS[si]
        b, r, pi = interior(x, xi, lam, sp.Rational(theta), sp.Rational(k1), sigma)
        nums = [num(v) for v in x] + [num(v) for v in xi]
        nums += [num(lam), num(sp.Rational(theta)), num(sp.Rational(k1))]
        nums += [num(sigma[i, k]) for k in range(2) for i in range(3)]
        nums += [num(b), num(r)]
        nums += [num(v) for v in pi]
        lines.append("    {" + ", ".join(nums) + "},")
    lines.append("};")
    lines.append("")
    return "\n".join(lines)


if __name__ == "__main__":
    import pathlib

    out = pathlib.Path(__file__).resolve().parent / "aux_reference.inc"
    out.write_text(emit())
    print(f"wrote {out}")
