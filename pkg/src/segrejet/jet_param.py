"""Recovering automorphisms from finite jets along Segre sets.

The pipeline works for a hypersurface ``M`` (``d = 1``) that is minimal at 0
(``minimality_order == 2``) and has a finite ``kappa``.  For an automorphism
``H = (f, g)`` it reads only the jet of ``H`` of order ``2 kappa`` and:

1. recovers ``H`` along the first Segre set ``v1(t) = (t, 0)`` together with
   its transversal Taylor coefficients ``[w^mu] H(t, w)``, ``mu <= kappa``;
2. propagates to the second Segre set, producing ``H o v2``;
3. solves ``H_rec o v2 = H o v2`` for the Taylor coefficients of ``H_rec``.

Every stage evaluates the reflection identity
``gbar(zeta) = Qbar(fbar(zeta), H(Z))`` on concrete truncated series.  The
degree budget is fixed in advance from the reductions of the singular systems
involved, and each stage reports the degree through which it is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial

from ._qi import cconj, mat_inverse
from .cr_geometry import (
    ManifoldNormalForm,
    is_automorphism,
    kappa as manifold_kappa,
    minimality_order,
    qbar_labels,
    qbar_map,
    qbar_series,
)
from .linalg_homog import SparseElimination, generic_rank, reduce_linear, reduce_nonlinear
from .series_core import (
    Jet,
    Series,
    coefficient_in,
    compose,
    conjugate_series,
    invert_map,
    jacobian,
    linear_part_matrix,
    multi_indices,
    multi_indices_upto,
    rename,
    stack,
)
from .singular_solve import solve_block_system, solve_linear_composed, solve_nonlinear


class PipelineError(ValueError):
    """The manifold or the supplied jet does not meet the pipeline's requirements."""


# --------------------------------------------------------------------------
# slot expansion


def slot_expand_qbar(X: Series, Phi: Series, order: int):
    """Taylor data of ``Qbar`` in its first slot, read off a known family.

    ``X`` and ``Phi`` are series on ``(sigma, params)`` where ``sigma`` is the
    first ``X.ncomps`` variables, and ``Phi(sigma) = Qbar(X(sigma), Y)`` for
    some unknown ``Y = Y(params)``.  With ``dX = X - X(0)`` invertible in
    ``sigma``, the coefficient of ``s^beta`` in ``Phi o dX^{-1}`` equals
    ``Qbar_{chi^beta}(X(0), Y) / beta!``.

    Returns ``{beta: series on params}`` for ``|beta| <= order``.
    """
    n = X.ncomps
    nv = X.nvars
    if Phi.nvars != nv or Phi.layout is not X.layout:
        raise ValueError("X and Phi must share variables")
    if nv < n:
        raise ValueError("X needs at least as many variables as components")
    base = rename(X, nv, [None] * n + list(range(n, nv)), caps=X.caps)
    dX = X - base
    params = [Series.variable(nv, n + j, X.trunc, X.caps) for j in range(nv - n)]
    try:
        G = invert_map(stack(dX.components() + params))
    except ValueError as exc:
        raise ValueError(f"slot family is not invertible: {exc}") from None
    R = compose(Phi, G)
    return {beta: coefficient_in(R, range(n), beta) for beta in multi_indices_upto(n, order)}


def qbar_slot_table(M: ManifoldNormalForm, order: int, D: int | None = None):
    """``F_beta(x0, z, w)``: coefficient of ``s^beta`` in ``Qbar(x0 + s, z, w)``.

    Series on ``(x0, z, w)``, one per ``|beta| <= order``, exact through
    ``D - |beta|``."""
    n, N = M.n, M.N
    D = M.D if D is None else min(D, M.D)
    nv = 2 * n + N
    caps = ((tuple(range(n)), order),)
    var = [Series.variable(nv, j, D, caps) for j in range(nv)]
    inner = stack([var[i] + var[n + i] for i in range(n)] + var[2 * n:])
    E = compose(qbar_series(M).truncate(D), inner)
    return {beta: coefficient_in(E, range(n), beta) for beta in multi_indices_upto(n, order)}


# --------------------------------------------------------------------------
# preparation: witness, reductions, degree budget


def select_witness(M: ManifoldNormalForm, k: int, seed: int = 0):
    """First ``n`` pairs ``(alpha, i)`` in (degree, lex) order whose ``qbar`` components have generic rank ``n``."""
    F = qbar_map(M, k, True)
    labels = qbar_labels(M, k)
    chosen = []
    for idx in range(F.ncomps):
        if F.component(idx).is_zero():
            continue
        trial = stack([F.component(c) for c in chosen + [idx]])
        if generic_rank(trial, seed=seed) == len(chosen) + 1:
            chosen.append(idx)
            if len(chosen) == M.n:
                return [labels[c] for c in chosen]
    raise PipelineError(f"no witness of generic rank {M.n} among |alpha| <= {k}")


def _witness_component(table, pair):
    alpha, i = pair
    return table[alpha].component(i)


def _segre_order(M: ManifoldNormalForm):
    n, d = M.n, M.d
    Qz = rename(M.Q, 2 * n, list(range(2 * n)) + [None] * d)
    o = Qz.order()
    if o is None:
        raise PipelineError("Q(z, chi, 0) vanishes: the manifold is not minimal")
    return o


@dataclass
class PipelinePlan:
    """Fixed data of a manifold for the reconstruction pipeline."""

    M: ManifoldNormalForm
    kappa: int
    witness: list
    ell_first: int
    ell_transversal: int
    ell_block: int
    segre_order: int
    jet_order: int
    seed: int = 0

    def layer_degrees(self, D: int):
        """Target ``t``-degree of the step-1 layer ``[w^m] H`` for ``m = 0..kappa``.

        Layer ``m`` reads the lower layers one degree past its own right-hand
        side, hence the staircase."""
        return [D + (self.kappa - m) * (self.ell_transversal + 1) for m in range(self.kappa + 1)]

    def first_step_degree(self, D: int) -> int:
        Dm = self.layer_degrees(D)
        P1 = max([self.ell_first + Dm[0]] + [self.ell_transversal + Dm[m] + m for m in range(1, self.kappa + 1)])
        return P1

    def degrees(self, E: int):
        """Working degrees needed to certify ``H_rec`` through degree ``E``."""
        Ep = self.segre_order * E
        W2 = self.ell_block + Ep + self.kappa
        P1 = self.first_step_degree(W2)
        W1 = P1 + self.kappa
        return {"target": E, "phi_degree": Ep, "second_step": W2, "first_step_params": P1,
                "first_step": W1, "manifold_degree": W1}

    def max_target(self, manifold_degree: int) -> int:
        E = 0
        while self.degrees(E + 1)["manifold_degree"] <= manifold_degree:
            E += 1
        return E


def _witness_map(M, table, witness):
    n, d = M.n, M.d
    comps = [rename(_witness_component(table, p), n, [None] * n + list(range(n)) + [None] * d)
             for p in witness]
    return stack(comps)


def _block_map(M, table, witness):
    """``(T1, T2) -> (T1, F_beta(T1, T2, Q(T2, T1, 0)))``."""
    n, d = M.n, M.d
    nv = 2 * n
    D = min(table[b].trunc for b in table)
    T = [Series.variable(nv, j, D) for j in range(nv)]
    Qz = rename(M.Q.truncate(D), nv, [n + i for i in range(n)] + list(range(n)) + [None] * d)
    inner = stack(T[:n] + T[n:] + Qz.components())
    comps = [compose(_witness_component(table, p), inner) for p in witness]
    return stack(T[:n] + comps)


def prepare(M: ManifoldNormalForm, kmax: int = 6, seed: int = 0) -> PipelinePlan:
    """Certify the hypotheses and fix witness pairs and reduction orders."""
    if M.d != 1:
        raise PipelineError("reconstruction is assembled for hypersurfaces only (d = 1)")
    k0 = manifold_kappa(M, kmax, seed)
    if k0 is None:
        raise PipelineError(f"kappa not found up to kmax={kmax}, D={M.D}")
    if k0 == 0:
        raise PipelineError("kappa = 0 is impossible in normal coordinates")
    if minimality_order(M, M.D, seed) != 2:
        raise PipelineError("minimality with k1 = 2 not certified")
    witness = select_witness(M, k0, seed)
    table = qbar_slot_table(M, k0)
    A = _witness_map(M, table, witness)
    _, rec_a = reduce_nonlinear(A, seed=seed)
    _, rec_t = reduce_linear(jacobian(A), seed=seed)
    _, rec_b = reduce_nonlinear(_block_map(M, table, witness), seed=seed)
    return PipelinePlan(M, k0, witness, rec_a.ell0, rec_t.ell0, rec_b.ell0,
                        _segre_order(M), (M.d + 1) * k0, seed)


# --------------------------------------------------------------------------
# step data


@dataclass
class SegreStepData:
    """``(d^beta H) o v^m`` for the multi-indices ``beta`` computed at step ``m``.

    ``maps`` is keyed by ``beta`` over ``(z, w)``; values are series on
    ``(t^1, ..., t^m)`` exact through ``certified_degree[beta]``."""

    step: int
    maps: dict
    certified_degree: dict
    witness: list
    residual_zero: bool
    checks: dict = field(default_factory=dict)

    def taylor(self, mu: int) -> Series:
        """``[w^mu] H(t, w)`` from the step-1 transversal entries."""
        if self.step != 1:
            raise ValueError("transversal Taylor data is kept for step 1 only")
        key = self._wkey(mu)
        return self.maps[key] * f"1/{factorial(mu)}"

    def _wkey(self, mu):
        some = next(iter(self.maps))
        return tuple([0] * (len(some) - 1) + [mu])

    def to_json_obj(self):
        return {"step": self.step, "witness": [[list(a), i] for a, i in self.witness],
                "residual_zero": self.residual_zero, "checks": self.checks,
                "entries": [{"beta": list(b), "certified_degree": self.certified_degree[b],
                             "series": s.to_json_obj()} for b, s in sorted(self.maps.items())]}


def _as_jet(jH, order):
    if isinstance(jH, Series):
        jH = Jet(jH, min(order, jH.trunc))
    if jH.order < order:
        raise PipelineError(f"jet of order {jH.order} supplied, order {order} required")
    return Jet(jH.series, order)


def _lambda(jH: Jet, n):
    L = linear_part_matrix(jH.series)
    lam = [row[:n] for row in L[:n]]
    try:
        mat_inverse(lam)
    except ZeroDivisionError:
        raise PipelineError("the f_z(0) block of the jet is singular") from None
    return lam


def _w_layer(S: Series, nt: int, mu) -> Series:
    """``[w^mu] S`` for ``S`` on ``(t, w)``; result on ``t``."""
    return coefficient_in(S, range(nt, S.nvars), tuple(mu))


def first_segre_parametrize(plan: PipelinePlan, jH, D: int) -> SegreStepData:
    """``H`` and its transversal Taylor coefficients along ``v1(t) = (t, 0)``.

    Consumes the jet of ``H`` of order ``2 kappa``.  ``D`` is the degree (in
    ``t``) through which every entry is required."""
    M, k0 = plan.M, plan.kappa
    n, d, N = M.n, M.d, M.N
    jH = _as_jet(jH, plan.jet_order)
    lam = _lambda(jH, n)
    Dm = plan.layer_degrees(D)
    P1 = plan.first_step_degree(D)
    W1 = P1 + k0
    if M.D < W1:
        raise PipelineError(f"manifold known to degree {M.D}, first step needs {W1}")

    # (sigma, t, w) with sigma and w capped at kappa.  Jet terms of order
    # above 2 kappa only reach monomials beyond the caps, so padding the jet
    # with zeros is exact here.
    nv = 2 * n + d
    caps = ((tuple(range(n)), k0), (tuple(range(2 * n, nv)), k0))
    Hb = conjugate_series(jH.series)
    Qb = rename(qbar_series(M).truncate(W1), nv, list(range(nv)), caps=caps)
    sig = [Series.variable(nv, j, W1, caps) for j in range(n)]
    zeta = stack(sig + Qb.components())
    HbZ = compose(Hb.extend(W1), zeta)
    X = stack(HbZ.components()[:n])
    Phi = stack(HbZ.components()[n:])
    K = slot_expand_qbar(X, Phi, k0)
    Kw = stack([_witness_component(K, p) for p in plan.witness])

    table = qbar_slot_table(M, k0)
    A = _witness_map(M, table, plan.witness)
    b0 = _w_layer(Kw, n, (0,) * d)
    r0 = solve_nonlinear(A, b0, lam, Dm[0], seed=plan.seed)
    U0 = r0.u
    residuals = [r0.residual_zero]
    certified = {0: r0.certified_degree}

    # a(w) = fbar(0, w), b(w) = gbar(0, w) on (u, w) with w capped
    ecaps = ((tuple(range(n, N)), k0),)
    to_uw = [None] * n + list(range(n, N))
    ab = rename(Hb, N, to_uw, caps=ecaps).extend(P1)
    a_w = ab.components()[:n]
    b_w = ab.components()[n:]
    u_vars = [Series.variable(N, j, P1, ecaps) for j in range(n)]
    Qfull = M.Q.truncate(P1)
    g_uw = compose(Qfull, stack(u_vars + a_w + b_w))
    inner = stack(a_w + u_vars + g_uw.components())
    calE = stack([compose(_witness_component(table, p).truncate(min(P1, table[p[0]].trunc)), inner)
                  for p in plan.witness])

    Theta = jacobian(A)
    tw_caps = ecaps
    layers = {(0,) * d: U0}
    for m in range(1, k0 + 1):
        Ucur = _assemble(layers, n, d, P1, tw_caps)
        wv = [Series.variable(N, n + j, P1, tw_caps) for j in range(d)]
        lhs = compose(calE, stack(Ucur.components() + wv))
        for mu in multi_indices_upto(d, m):
            if sum(mu) != m:
                continue
            rhs = _w_layer(Kw, n, mu) - _w_layer(lhs, n, mu)
            r = solve_linear_composed(Theta, U0, rhs, Dm[m], seed=plan.seed)
            layers[mu] = r.u
            residuals.append(r.residual_zero)
            certified[m] = r.certified_degree if m not in certified else min(certified[m], r.certified_degree)

    F = _assemble(layers, n, d, P1, tw_caps)
    aw_tw = [rename(c, N, list(range(N)), caps=tw_caps) for c in a_w]
    bw_tw = [rename(c, N, list(range(N)), caps=tw_caps) for c in b_w]
    G = compose(Qfull, stack(F.components() + aw_tw + bw_tw))
    Hfull = stack(F.components() + G.components())
    maps, cert = {}, {}
    top = D
    for mu in multi_indices_upto(d, k0):
        beta = (0,) * n + tuple(mu)
        scale = 1
        for x in mu:
            scale *= factorial(x)
        maps[beta] = _w_layer(Hfull, n, mu).truncate(top) * scale
        cert[beta] = top
    g_zero = stack(maps[(0,) * N].components()[n:]).is_zero()
    ok = all(residuals) and g_zero
    return SegreStepData(1, maps, cert, plan.witness, ok,
                         {"g_on_first_segre_zero": g_zero, "solver_residuals": residuals,
                          "first_step_degree": W1, "jet_order_read": plan.jet_order,
                          "layer_certified_degrees": [certified[m] for m in sorted(certified)]})


def _assemble(layers, n, d, D, caps):
    """``sum_mu U_mu(t) w^mu`` on ``(t, w)``, truncated where every layer is known.

    Layers not yet present are read as zero on purpose: they enter the next
    layer's equation only through its linear term."""
    N = n + d
    D = min([D] + [U.trunc + sum(mu) for mu, U in layers.items()])
    acc = None
    for mu, U in layers.items():
        e = Series.monomial(N, (0,) * n + tuple(mu), 1, D, caps)
        term = rename(U, N, list(range(n)), trunc=D, caps=caps) * e
        acc = term if acc is None else acc + term
    return acc


def propagate_segre(plan: PipelinePlan, prev: SegreStepData, jH, D: int) -> SegreStepData:
    """``H o v2`` on ``(t1, t2)`` from step-1 data, exact through ``D``."""
    if prev.step != 1:
        raise PipelineError("propagation is assembled from step 1 to step 2 (hypersurface case)")
    M, k0 = plan.M, plan.kappa
    n, d, N = M.n, M.d, M.N
    jH = _as_jet(jH, plan.jet_order)
    lam = _lambda(jH, n)
    W2 = plan.ell_block + D + k0
    if min(prev.certified_degree.values()) < W2:
        raise PipelineError("step-1 data is not certified to the degree propagation needs")

    nv = 3 * n
    # variables (sigma, t1, t2), sigma capped at kappa
    caps = ((tuple(range(n)), k0),)
    var = [Series.variable(nv, j, W2, caps) for j in range(nv)]
    x = stack([var[n + i] + var[i] for i in range(n)])
    v2 = rename(segre_map_two(M, W2), nv, list(range(n, nv)), caps=caps)
    tau = compose(qbar_series(M).truncate(W2), stack(x.components() + v2.components()))

    Hbz = None
    for mu in range(0, k0 + 1):
        Gm = conjugate_series(prev.taylor(mu).truncate(W2))
        term = compose(Gm, x) * (tau ** mu if mu else Series.constant(1, nv, W2, caps))
        Hbz = term if Hbz is None else Hbz + term
    X = stack(Hbz.components()[:n])
    Phi = stack(Hbz.components()[n:])
    K2 = slot_expand_qbar(X, Phi, k0)

    table = qbar_slot_table(M, k0)
    A_big = _block_map(M, table, plan.witness)
    U0bar = conjugate_series(prev.maps[(0,) * N])
    T1 = rename(stack(U0bar.components()[:n]), 2 * n, list(range(n)))
    b_big = stack(T1.components() + [_witness_component(K2, p) for p in plan.witness])
    lam_bar = [[cconj(v) for v in row] for row in lam]
    zero = (0, 0)
    lam_big = ([row + [zero] * n for row in lam_bar] + [[zero] * n + row for row in lam])
    res = solve_block_system(A_big, b_big, lam_big, D, seed=plan.seed)
    T = res.u
    T1s, T2s = T.components()[:n], T.components()[n:]
    Qz = rename(M.Q.truncate(res.certified_degree), n + n, list(range(2 * n)) + [None] * d)
    gpart = compose(Qz, stack(T2s + T1s))
    Hv2 = stack(T2s + gpart.components())

    lin_ok = linear_part_matrix(T) == [[_norm(v) for v in row] for row in lam_big]
    consistency = compose(qbar_series(M).truncate(res.certified_degree),
                          stack(T1s + Hv2.components())).is_zero()
    return SegreStepData(2, {(0,) * N: Hv2}, {(0,) * N: res.certified_degree}, plan.witness,
                         res.residual_zero and consistency,
                         {"block_one_jet_ok": lin_ok, "step_consistency": consistency,
                          "block_residual_zero": res.residual_zero, "second_step_degree": W2,
                          "block_reduction": res.reduction.to_json_obj()})


def _norm(v):
    from ._qi import to_mpq
    return (to_mpq(v[0]), to_mpq(v[1]))


def segre_map_two(M: ManifoldNormalForm, D: int) -> Series:
    from .cr_geometry import segre_map
    return segre_map(M, 2, D)


# --------------------------------------------------------------------------
# composition inversion


def _v2_monomials(v2: Series, n: int, d: int, weight_cap: int, nu: int):
    """Columns ``(a, k)`` with ``|a| + nu |k| <= weight_cap`` and their images ``z^a w^k o v2``."""
    cols = []
    for tot in range(1, weight_cap + 1):
        for e in multi_indices(n + d, tot):
            if sum(e[:n]) + nu * sum(e[n:]) <= weight_cap:
                cols.append(tuple(e))
    comps = v2.components()
    memo = {}

    def image(e):
        if e in memo:
            return memo[e]
        if sum(e) == 0:
            r = Series.constant(1, v2.nvars, v2.trunc)
        else:
            j = next(i for i, x in enumerate(e) if x)
            prev = list(e)
            prev[j] -= 1
            r = image(tuple(prev)) * comps[j]
        memo[e] = r
        return r

    return cols, [image(c) for c in cols]


def solve_composition(v2: Series, Phi: Series, n: int, d: int, nu: int, E: int):
    """Find ``H`` with ``H o v2 = Phi`` through degree ``E``.

    Returns ``(H, certified, weight_cap, consistent)`` where ``certified`` is
    the largest degree all of whose monomials are pinned by the exact linear
    system.  ``consistent`` is False when ``Phi`` is not of the form
    ``H o v2``; ``H`` is then a least squares fit and must not be trusted."""
    N = n + d
    top = Phi.trunc
    Ep = nu * E
    while Ep <= top:
        cols, imgs = _v2_monomials(v2.truncate(Ep), n, d, Ep, nu)
        rowidx = {}
        rows = []
        for c, img in enumerate(imgs):
            for part, tabs in ((0, img.re[0]), (1, img.im[0])):
                for key, val in tabs.items():
                    if img.layout.deg(key) > Ep:
                        continue
                    r = rowidx.setdefault(key, len(rows))
                    if r == len(rows):
                        rows.append({})
                    old = rows[r].get(c, (0, 0))
                    rows[r][c] = (old[0] + val, old[1]) if part == 0 else (old[0], old[1] + val)
        elim = SparseElimination(rows, len(cols))
        if elim.full_column_rank:
            break
        Ep += 1
    else:
        raise PipelineError("composition with v2 did not reach full column rank within the known degree")
    terms = [dict() for _ in range(N)]
    lay = Phi.layout
    ok = True
    for comp in range(N):
        rhs = {}
        for key, r in rowidx.items():
            re = Phi.re[comp].get(key, 0)
            im = Phi.im[comp].get(key, 0)
            if re or im:
                rhs[r] = (re, im)
        for key in list(Phi.re[comp]) + list(Phi.im[comp]):
            if lay.deg(key) <= Ep and key not in rowidx:
                ok = False
        x, consistent = elim.solve(rhs)
        if not consistent:
            ok = False
            x = elim.least_squares(rhs)
        for c, val in x.items():
            if sum(cols[c]) <= E:
                terms[comp][cols[c]] = val
    return Series(N, N, E, terms), Ep // nu, Ep, ok


# --------------------------------------------------------------------------
# assembly


@dataclass
class ReconstructionReport:
    H: Series
    certified_degree: int
    witness: list
    is_automorphism: bool
    jet_agreement: bool
    residual_zero: bool
    jet_order_read: int
    degrees: dict
    checks: dict = field(default_factory=dict)

    def to_json_obj(self):
        return {"series": self.H.to_json_obj(), "num_vars": self.H.nvars,
                "certified_degree": self.certified_degree,
                "witness": [[list(a), i] for a, i in self.witness],
                "is_automorphism": self.is_automorphism, "jet_agreement": self.jet_agreement,
                "residual_zero": self.residual_zero, "jet_order_read": self.jet_order_read,
                "degrees": self.degrees, "checks": self.checks}

    def to_json(self, **kw):
        return json.dumps(self.to_json_obj(), **kw)


def reconstruct_from_jet(M: ManifoldNormalForm, jH, D: int, kmax: int = 6, seed: int = 0,
                         plan: PipelinePlan | None = None) -> ReconstructionReport:
    """Reconstruct an automorphism of the hypersurface ``M`` from its ``2 kappa``-jet.

    ``D`` is the target certified degree; it is lowered when ``M`` is not
    known to the degree the pipeline needs (see :meth:`PipelinePlan.degrees`).
    """
    if plan is None:
        plan = prepare(M, kmax, seed)
    n, d, N = M.n, M.d, M.N
    E = min(D, plan.max_target(M.D))
    if E < 1:
        raise PipelineError(f"manifold degree {M.D} is too small for any certified output")
    deg = plan.degrees(E)
    jet = _as_jet(jH, plan.jet_order)
    s1 = first_segre_parametrize(plan, jet, deg["second_step"])
    s2 = propagate_segre(plan, s1, jet, deg["phi_degree"])
    Phi = s2.maps[(0,) * N]
    v2 = segre_map_two(M, Phi.trunc)
    H, cert, Ep, image_ok = solve_composition(v2, Phi, n, d, plan.segre_order, E)
    H = H.truncate(min(cert, H.trunc))
    cert = H.trunc
    auto = is_automorphism(M, H, min(cert, M.D))
    k = min(plan.jet_order, cert)
    jet_ok = H.truncate(k) == jet.series.truncate(k)
    deg = dict(deg, weight_cap=Ep)
    checks = {"first_step": s1.checks, "second_step": s2.checks,
              "first_step_residual_zero": s1.residual_zero,
              "second_step_residual_zero": s2.residual_zero,
              "composition_consistent": image_ok}
    return ReconstructionReport(H, cert, plan.witness, auto, jet_ok,
                                s1.residual_zero and s2.residual_zero and image_ok,
                                plan.jet_order, deg, checks)
