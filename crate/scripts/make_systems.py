#!/usr/bin/env python3
"""Writes the example system files in systems/.

The cart-pole model is the third-order Taylor expansion of the equations of
motion around the upright equilibrium, discretized by explicit Euler.
Requires sympy.
"""
import json
import math
from pathlib import Path

import sympy as sp

DT = sp.Rational(1, 100)
OUT = Path(__file__).resolve().parent.parent / "systems"


def poly_json(expr, xs):
    p = sp.Poly(sp.expand(expr), *xs)
    terms = [
        {"exps": list(map(int, e)), "coef": float(c)}
        for e, c in sorted(p.terms(), key=lambda t: (sum(t[0]), [-k for k in t[0]]))
        if float(c) != 0.0
    ]
    return {"n": len(xs), "terms": terms}


def box(bounds):
    return {"type": "box", "bounds": [[float(a), float(b)] for a, b in bounds]}


def ball(n, radius):
    return {"type": "ball", "center": [0.0] * n, "radius": float(radius)}


def control_affine(phi, xs, us):
    """Splits phi(x, u) = f(x) + g(x) u, checking affinity in u."""
    f, g = [], []
    for comp in phi:
        comp = sp.expand(comp)
        zero = {u: 0 for u in us}
        fi = comp.subs(zero)
        gi = [sp.expand(sp.diff(comp, u)) for u in us]
        assert sp.expand(comp - fi - sum(gij * u for gij, u in zip(gi, us))) == 0
        assert all(not gij.has(*us) for gij in gi)
        f.append(fi)
        g.append(gi)
    return f, g


def write(name, description, xs, us, phi, X, U, Z, fixed_point=None):
    f, g = control_affine(phi, xs, us)
    data = {
        "name": name,
        "description": description,
        "n": len(xs),
        "m": len(us),
        "f": [poly_json(fi, xs) for fi in f],
    }
    if us:
        data["g"] = [[poly_json(gij, xs) for gij in row] for row in g]
    data["X"] = X
    if U is not None:
        data["U"] = U
    data["Z"] = Z
    if fixed_point is not None:
        data["fixed_point"] = fixed_point
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(data, indent=2) + "\n")
    print("wrote", path)


def main():
    OUT.mkdir(exist_ok=True)

    x1, x2, x3, x4 = sp.symbols("x1 x2 x3 x4")
    u1, u2 = sp.symbols("u1 u2")

    write(
        "van_der_pol",
        "Reversed-time Van der Pol oscillator, explicit Euler with dt = 0.01 (autonomous).",
        [x1, x2],
        [],
        [x1 + DT * (-2 * x2), x2 + DT * (sp.Rational(8, 10) * x1 + 10 * (x1**2 - sp.Rational(21, 100)) * x2)],
        box([(-1.5, 1.5)] * 2),
        None,
        box([(-0.1, 0.1)] * 2),
    )

    write(
        "double_integrator",
        "Double integrator, explicit Euler with dt = 0.01.",
        [x1, x2],
        [u1],
        [x1 + DT * x2, x2 + DT * u1],
        box([(-1, 1)] * 2),
        box([(-1, 1)]),
        ball(2, 0.05),
        {"x": [0.0, 0.0]},
    )

    write(
        "brockett",
        "Brockett integrator (Dubins car after a change of coordinates), explicit Euler with dt = 0.01.",
        [x1, x2, x3],
        [u1, u2],
        [x1 + DT * u1, x2 + DT * u2, x3 + DT * (x2 * u1 - x1 * u2)],
        box([(-1, 1)] * 3),
        box([(-1, 1)] * 2),
        ball(3, 0.1),
        {"x": [0.0, 0.0, 0.0]},
    )

    write(
        "van_der_pol_3d",
        "Controlled 3D Van der Pol oscillator, explicit Euler with dt = 0.01.",
        [x1, x2, x3],
        [u1],
        [
            x1 - 2 * x2 * DT,
            x2 + (sp.Rational(8, 10) * x1 - sp.Rational(21, 10) * x2 + x3 + 10 * x1**2 * x2) * DT,
            x3 + (-x3 + x3**3 + sp.Rational(1, 2) * u1) * DT,
        ],
        ball(3, 1.0),
        box([(-1, 1)]),
        ball(3, 0.1),
        {"x": [0.0, 0.0, 0.0]},
    )

    # cart-pole: state (cart position, pole angle from upright, cart velocity, angular velocity)
    mc, mp, l, g = sp.Integer(10), sp.Integer(1), sp.Rational(1, 2), sp.Rational(981, 100)
    th, thd, force = sp.symbols("th thd force")
    theta = sp.pi + th
    den = mc + mp * sp.sin(theta) ** 2
    xdd = (force + mp * sp.sin(theta) * (l * thd**2 + g * sp.cos(theta))) / den
    thdd = (-force * sp.cos(theta) - mp * l * thd**2 * sp.cos(theta) * sp.sin(theta) - (mc + mp) * g * sp.sin(theta)) / (l * den)
    eps = sp.Symbol("eps")

    def taylor3(expr):
        scaled = expr.subs({th: eps * x2, thd: eps * x4, force: eps * u1})
        series = sp.series(scaled, eps, 0, 4).removeO()
        return sp.expand(series.subs(eps, 1))

    xdd3, thdd3 = taylor3(xdd), taylor3(thdd)
    write(
        "cart_pole",
        "Cart-pole around the upright equilibrium: third-order Taylor model of the equations of motion "
        "(m_c = 10, m_p = 1, l = 0.5, g = 9.81), explicit Euler with dt = 0.01. The model is polynomial, "
        "so simulations use this expansion rather than the trigonometric equations.",
        [x1, x2, x3, x4],
        [u1],
        [x1 + DT * x3, x2 + DT * x4, x3 + DT * xdd3, x4 + DT * thdd3],
        box([(-4, 4), (-math.pi / 6, math.pi / 6), (-4, 4), (-2, 2)]),
        box([(-40, 40)]),
        box([(-0.5, 0.5)] * 4),
        {"x": [0.0, 0.0, 0.0, 0.0]},
    )


if __name__ == "__main__":
    main()
