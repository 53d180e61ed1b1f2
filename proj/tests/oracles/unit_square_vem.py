#!/usr/bin/env python3
"""Symbolic reference for the lowest-order element operators on the unit square.

Computes, with exact rational/symbolic arithmetic and independently of the C++
implementation:
  * the 3x3 projection system (G, B), the projector coefficients for each
    vertex hat function, and the projected polynomial for the first hat;
  * the 4x4 local stiffness matrix: gradient consistency term plus the
    vertex-value (dofi-dofi) stabilization of the non-projected part.

Monomial basis on an element K: {1, (x - xc)/hK, (y - yc)/hK} with xc the
centroid and hK the diameter.

Run:  python3 unit_square_vem.py
The printed values are frozen into tests/test_vem.cpp.
"""

import sympy as sp

x, y = sp.symbols("x y")

verts = [(0, 0), (1, 0), (1, 1), (0, 1)]
n = len(verts)
xc, yc = sp.Rational(1, 2), sp.Rational(1, 2)
hK = sp.sqrt(2)

monomials = [sp.Integer(1), (x - xc) / hK, (y - yc) / hK]
grads = [(sp.diff(m, x), sp.diff(m, y)) for m in monomials]


def edge_integral(f):
    """Exact line integral of f over the boundary (edges traversed CCW)."""
    total = sp.Integer(0)
    t = sp.symbols("t")
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        seg = f.subs({x: ax + t * (bx - ax), y: ay + t * (by - ay)})
        length = sp.sqrt(sp.Integer((bx - ax) ** 2 + (by - ay) ** 2))
        total += sp.integrate(seg, (t, 0, 1)) * length
    return sp.simplify(total)


def area_integral(f):
    return sp.integrate(sp.integrate(f, (x, 0, 1)), (y, 0, 1))


perimeter = edge_integral(sp.Integer(1))

# hat function traces are piecewise linear along the edges; represent each hat
# by its exact boundary trace for the two integrals that need it
def hat_edge_integral(i):
    """integral over the boundary of the i-th vertex hat (trapezoid-exact)."""
    total = sp.Integer(0)
    for e in range(n):
        a, b = e, (e + 1) % n
        ax, ay = verts[a]
        bx, by = verts[b]
        length = sp.sqrt(sp.Integer((bx - ax) ** 2 + (by - ay) ** 2))
        va = sp.Integer(1) if a == i else sp.Integer(0)
        vb = sp.Integer(1) if b == i else sp.Integer(0)
        total += length * (va + vb) / 2
    return total


def hat_flux_integral(i, grad):
    """integral over the boundary of hat_i * (grad . normal)."""
    gx, gy = grad
    total = sp.Integer(0)
    for e in range(n):
        a, b = e, (e + 1) % n
        ax, ay = verts[a]
        bx, by = verts[b]
        tx, ty = bx - ax, by - ay
        length = sp.sqrt(sp.Integer(tx**2 + ty**2))
        nx, ny = sp.Rational(ty) / length, sp.Rational(-tx) / length
        va = sp.Integer(1) if a == i else sp.Integer(0)
        vb = sp.Integer(1) if b == i else sp.Integer(0)
        total += (gx * nx + gy * ny) * length * (va + vb) / 2
    return sp.simplify(total)


# G: rows = [boundary mean of monomials; gradient Gram rows]
G = sp.zeros(3, 3)
for b in range(3):
    G[0, b] = edge_integral(monomials[b]) / perimeter
for a in range(1, 3):
    for b in range(3):
        gax, gay = grads[a]
        gbx, gby = grads[b]
        G[a, b] = area_integral(gax * gbx + gay * gby)

# B: constraint row + integrated-by-parts gradient rows (hat traces are exact)
B = sp.zeros(3, n)
for i in range(n):
    B[0, i] = hat_edge_integral(i) / perimeter
    for a in range(1, 3):
        B[a, i] = hat_flux_integral(i, grads[a])

PiStar = sp.simplify(G.inv() * B)

D = sp.Matrix([[m.subs({x: vx, y: vy}) for m in monomials] for vx, vy in verts])
Pi = sp.simplify(D * PiStar)

H = sp.zeros(3, 3)
for a in range(3):
    for b in range(3):
        gax, gay = grads[a]
        gbx, gby = grads[b]
        H[a, b] = area_integral(gax * gbx + gay * gby)

consistency = sp.simplify(PiStar.T * H * PiStar)
I = sp.eye(n)
stab = sp.simplify((I - Pi).T * (I - Pi))
K = sp.simplify(consistency + stab)

print("projector coefficients of hat e_1 (monomial basis {1,(x-xc)/h,(y-yc)/h}):")
print([sp.nsimplify(c) for c in PiStar[:, 0]])
print("numeric:", [float(c) for c in PiStar[:, 0]])
print()
print("Pi (dof form):")
sp.pprint(Pi)
print()
print("local stiffness:")
sp.pprint(K)
print("numeric first row:", [float(v) for v in K[0, :]])
