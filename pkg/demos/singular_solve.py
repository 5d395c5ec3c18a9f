"""Solving A(u(z)) = b(z) when the lowest order part of A is degenerate.

A = (z1^2, z1^2 + z2^3) has dependent quadratic parts.  The solver first
rewrites the system so all components vanish to one common order, then
recovers u degree by degree from b and the linear part of u.

    python demos/singular_solve.py
"""

from segrejet.series_core import Series, compose, linear_part_matrix, stack
from segrejet.singular_solve import solve_linear, solve_nonlinear


def main():
    D = 6
    z1, z2 = Series.variables(2, 20)
    A = stack([z1 * z1, z1 * z1 + z2 ** 3])
    u0 = stack([z1 + z2 * z2, z2 * 2 - z1 * z1 * 3])
    r = solve_nonlinear(A, compose(A, u0), linear_part_matrix(u0), D)
    print("reduction steps:", len(r.reduction.steps), " ell0 =", r.reduction.ell0)
    print("recovered u0:", r.u == u0.truncate(D), " residual zero:", r.residual_zero)
    print(r.u.to_json())

    # diag(z1, z2) u = (z2, z1) has no power series solution
    zero = Series.zero(2, 1, 8)
    r = solve_linear([[z1.truncate(8), zero], [zero, z2.truncate(8)]],
                     stack([z2.truncate(8), z1.truncate(8)]), 4)
    print("\ndiag(z1, z2) u = (z2, z1): residual zero =", r.residual_zero)


if __name__ == "__main__":
    main()
