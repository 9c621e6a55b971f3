"""The built-in (group, phi, psi) combinations exercised by the property suite."""
from __future__ import annotations

from symgap import groups as g


def builtin_pairs() -> list[tuple[str, g.Representation, g.Representation]]:
    trivial = g.trivial_group()
    c2, c5, c6 = g.CyclicGroup(2), g.CyclicGroup(5), g.CyclicGroup(6)
    s3, s4 = g.SymmetricGroup(3), g.SymmetricGroup(4)
    d4, d5 = g.DihedralGroup(4), g.DihedralGroup(5)
    so2 = g.TorusSO2(64)
    c3xc2 = g.ProductGroup(g.CyclicGroup(3), c2)
    torus2 = g.ProductGroup(g.TorusSO2(16), g.TorusSO2(16))

    rot = g.rotation_rep(so2)
    pairs = [
        (g.trivial_rep(trivial, 3), g.trivial_rep(trivial, 2)),
        (g.reflection_rep(c2, 5), g.trivial_rep(c2)),
        (g.reflection_rep(c2, 4), g.reflection_rep(c2, 3)),
        (g.permutation_rep(c5), g.permutation_rep(c5)),
        (g.rotation_rep(c6), g.permutation_rep(c6)),
        (g.permutation_rep(s3), g.permutation_rep(s3)),
        (g.permutation_rep(s4), g.trivial_rep(s4)),
        (g.permutation_rep(s4), g.sign_rep(s4)),
        (g.regular_rep(s3), g.permutation_rep(s3)),
        (g.permutation_rep(d4), g.rotation_rep(d4)),
        (g.rotation_rep(d5), g.rotation_rep(d5, 2)),
        (rot, rot),
        (g.rotation_rep(so2, 2), rot),
        (g.direct_sum(rot, g.trivial_rep(so2)), rot),
        (g.product_rep(c3xc2, g.permutation_rep(c3xc2.left), g.reflection_rep(c2, 2), "sum"),
         g.product_rep(c3xc2, g.permutation_rep(c3xc2.left), g.reflection_rep(c2, 2), "tensor")),
        (g.product_rep(torus2, g.rotation_rep(torus2.left), g.rotation_rep(torus2.right), "sum"),
         g.product_rep(torus2, g.rotation_rep(torus2.left), g.rotation_rep(torus2.right), "tensor")),
    ]
    return [(f"{phi.group.name}:{phi.name}->{psi.name}", phi, psi) for phi, psi in pairs]
