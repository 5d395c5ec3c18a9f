"""Invariants of Im w = |z1|^2 + Re(w)|z2|^2 and of two nearby families.

The weighted hypersurface has Segre-jet order kappa = 2.  It is not finitely
nondegenerate, and it contains the complex line z1 = 0 through the origin.
Its linear automorphisms are still fixed by their 4-jets.

    python demos/weighted_invariants.py
"""

from fractions import Fraction

from segrejet import catalog
from segrejet.cr_geometry import analyze
from segrejet.jet_param import prepare, reconstruct_from_jet
from segrejet.series_core import Jet


def show(name, M, kmax=6):
    r = analyze(M, kmax=kmax)
    screen = r.essentially_finite_screen
    line = screen["witness"]["equations"] if screen["witness_found"] else "none found"
    print(f"{name:28s} kappa={r.kappa}  finite nondegeneracy={r.finite_nondeg_order}"
          f"  minimal at order {r.minimality_k1}  line of non-finiteness: {line}")


def main():
    show("weighted", catalog.weighted(10))
    for k in (2, 3, 4):
        show(f"{k}-nondegenerate", catalog.k_nondegenerate(k, 10))
    for k in (3, 4):
        show(f"essentially finite, k={k}", catalog.essentially_finite(k, 12))

    E = 4
    M = catalog.weighted(prepare(catalog.weighted(10)).degrees(E)["manifold_degree"])
    plan = prepare(M)
    H = catalog.weighted_linear((2, 0), (Fraction(3, 5), Fraction(4, 5)), 8)
    rep = reconstruct_from_jet(M, Jet(H, 4), E, plan=plan)
    print(f"\n(2 z1, (3+4i)/5 z2, 4 w) from its 4-jet: certified {rep.certified_degree},"
          f" automorphism {rep.is_automorphism}, equals source {rep.H == H.truncate(E)}")
    print("witness pairs:", plan.witness)


if __name__ == "__main__":
    main()
