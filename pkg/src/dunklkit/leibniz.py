"""Exact symbolic engine: averaging operators, commutator lemmas, and
higher-order Leibniz expansions of D^alpha(m g) with g radial.

Everything here is exact: coefficients are sympy rationals, the
multiplicities are carried as formal symbols by default (so identities
hold for every kappa at once), and evaluation on concrete polynomial
data is polynomial-identity equality, not floating comparison.

Objects
-------
* NuFunction: a weight nu on R u {0}; A_nu m(x) = sum nu(lam) m(sigma_lam x).
  For Z2^d both roots +-sqrt(2) e_j reflect axis j, so a nu-value is
  keyed by 0 (identity) or (axis, sign).
* Chains: tuples of NuFunction, representing A_{nu_1} o ... o A_{nu_n} m.
* LeibnizTerm(coeff, beta, gamma, chain, k): one term
      coeff * x^beta * D^gamma (chain m) * Dr^k h,
  subject to 2k + |gamma| - |beta| = |alpha|.
* RadialLeibnizTerm(poly, j, k, l): P_j(x) * Dr^k m0 * Dr^l h with
  2(k + l) - j = |alpha| and k + l <= |alpha|  (both m and g radial).

Here Dr = r^{-1} d/dr; on profiles written in r^2 it acts as twice the
d/d(r^2) derivative, which keeps polynomial profiles polynomial.

Key reductions used for Z2^d (all derived from the general root-system
formulas, which become diagonal here):

* monomials stay monomials under reflections:
      A_nu (x^alpha m) = x^alpha A_{nu_alpha} m,
      nu_alpha(axis j root) = (-1)^(alpha_j) nu(root), nu_alpha(0) = nu(0);
* pushing an averaging operator through derivatives twists signs:
      A_nu o D^gamma = D^gamma o A_{nu_gamma},
  same sign rule with gamma in place of alpha (the general identity is
  A_nu o D_j = sum_l D_l o A_{nu_{j,l}} with
  nu_{j,l}(lam) = nu(lam) (e_l . sigma_lam(e_j)); for Z2^d only l = j
  survives);
* the first-order commutator
      D_j (x_l m) - x_l D_j m = A_nu m,
      nu(0) = delta_{jl},  nu(lam) = kappa(lam) lam_j lam_l / 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import sympy as sp

from .errors import DomainError, InternalConsistencyError

R2 = sp.Symbol("r2", nonnegative=True)  # stands for r^2 in radial profiles


# ---------------------------------------------------------------------------
# group context
# ---------------------------------------------------------------------------

class SymbolicGroup:
    """Z2^d with exact (possibly symbolic) multiplicities."""

    def __init__(self, d: int, kappas=None):
        if d < 1:
            raise DomainError("d must be >= 1")
        self.d = d
        if kappas is None:
            kappas = sp.symbols(f"kappa1:{d + 1}", nonnegative=True)
        self.kappas = tuple(sp.sympify(k) for k in kappas)
        if len(self.kappas) != d:
            raise DomainError(f"expected {d} multiplicities")
        self.xs = sp.symbols(f"x1:{d + 1}", real=True)
        #: keys of R u {0}: 0, then (axis, +1), (axis, -1)
        self.keys = (0,) + tuple(
            (j, s) for j in range(d) for s in (+1, -1)
        )

    def reflect_expr(self, expr, axis: int):
        return expr.subs({self.xs[axis]: -self.xs[axis]}, simultaneous=True)

    def dunkl(self, expr, j: int):
        xj = self.xs[j]
        refl = self.reflect_expr(expr, j)
        quot = sp.cancel(sp.together((expr - refl) / xj))
        return sp.diff(expr, xj) + self.kappas[j] * quot

    def dunkl_multi(self, expr, alpha):
        out = expr
        for j, a in enumerate(alpha):
            for _ in range(int(a)):
                out = self.dunkl(out, j)
        return out


class NuFunction:
    """Finite weight nu on R u {0} with exact values."""

    __slots__ = ("group", "values")

    def __init__(self, group: SymbolicGroup, values: dict):
        self.group = group
        self.values = {
            k: sp.expand(sp.sympify(v)) for k, v in values.items() if sp.sympify(v) != 0
        }

    def __getitem__(self, key):
        return self.values.get(key, sp.Integer(0))

    def __eq__(self, other):
        return isinstance(other, NuFunction) and self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def canonical(self):
        return tuple(sorted((str(k), sp.srepr(v)) for k, v in self.values.items()))

    def is_zero(self) -> bool:
        return not self.values

    def total(self):
        """c_nu = sum over R u {0}; A_nu m = c_nu m for radial m."""
        return sp.expand(sum(self.values.values(), sp.Integer(0)))

    def scaled(self, c) -> "NuFunction":
        return NuFunction(self.group, {k: c * v for k, v in self.values.items()})

    def __add__(self, other: "NuFunction") -> "NuFunction":
        vals = dict(self.values)
        for k, v in other.values.items():
            vals[k] = vals.get(k, sp.Integer(0)) + v
        return NuFunction(self.group, vals)

    def monomial_twist(self, alpha) -> "NuFunction":
        """nu_alpha with nu_alpha(root at axis j) = (-1)^(alpha_j) nu."""
        vals = {}
        for key, v in self.values.items():
            if key == 0:
                vals[0] = vals.get(0, sp.Integer(0)) + v
            else:
                j, s = key
                vals[key] = vals.get(key, sp.Integer(0)) + v * (-1) ** int(alpha[j])
        return NuFunction(self.group, vals)

    def apply_expr(self, expr):
        """A_nu applied to a concrete sympy expression."""
        out = self[0] * expr
        for key, v in self.values.items():
            if key == 0:
                continue
            j, _s = key
            out = out + v * self.group.reflect_expr(expr, j)
        return sp.expand(out)

    def __repr__(self):
        if not self.values:
            return "nu{0}"
        parts = []
        for key in self.group.keys:
            v = self[key]
            if v != 0:
                name = "id" if key == 0 else f"({key[0] + 1},{'+' if key[1] > 0 else '-'})"
                parts.append(f"{name}:{v}")
        return "nu{" + ", ".join(parts) + "}"


def delta_nu(group: SymbolicGroup) -> NuFunction:
    """nu = delta_0, A_nu = identity."""
    return NuFunction(group, {0: sp.Integer(1)})


def apply_avg(nu: NuFunction, target):
    """A_nu applied to an expression (evaluates the finite sum) or to a
    chain tuple (prepends, i.e. composes on the left)."""
    if isinstance(target, tuple):
        return (nu,) + target
    return nu.apply_expr(sp.sympify(target))


def apply_chain(chain, expr):
    """(A_{nu_1} o ... o A_{nu_n}) expr, leftmost applied last."""
    out = sp.sympify(expr)
    for nu in reversed(chain):
        out = nu.apply_expr(out)
    return out


def avg_of_monomial(nu: NuFunction, alpha) -> list:
    """Lemma: A_nu (x^alpha m) = sum_beta x^beta A_{nu_beta} m.

    For Z2^d the reflections are diagonal, so the sum collapses to the
    single beta = alpha with the sign-twisted weight.
    """
    return [(tuple(int(a) for a in alpha), nu.monomial_twist(alpha))]


def commutator_first_order(group: SymbolicGroup, j: int, l: int) -> NuFunction:
    """nu with D_j(x_l m) - x_l D_j m = A_nu m.

    nu(0) = delta_{jl}; nu(lam) = kappa(lam) lam_j lam_l / 2, which for
    Z2^d roots +-sqrt(2) e_i is kappa_i delta_{ij} delta_{il}.
    """
    if not (0 <= j < group.d and 0 <= l < group.d):
        raise DomainError("axis out of range")
    vals = {}
    if j == l:
        vals[0] = sp.Integer(1)
        vals[(j, +1)] = group.kappas[j]
        vals[(j, -1)] = group.kappas[j]
    return NuFunction(group, vals)


@lru_cache(maxsize=None)
def _commutator_monomial_cached(group_id, j, alpha):
    group = _GROUP_REGISTRY[group_id]
    alpha = tuple(alpha)
    total = sum(alpha)
    if total == 0:
        return ()
    if total == 1:
        l = alpha.index(1)
        nu = commutator_first_order(group, j, l)
        beta0 = tuple(0 for _ in alpha)
        return ((beta0, nu),) if not nu.is_zero() else ()
    # strip one factor x_k and recurse:  D_j(x_k x^a m) =
    #   x_k D_j(x^a m) + A_nu(x^a m),   nu = first-order commutator (j,k)
    k = next(i for i, a in enumerate(alpha) if a > 0)
    sub = tuple(a - 1 if i == k else a for i, a in enumerate(alpha))
    terms: dict = {}

    def _add(beta, nu):
        if beta in terms:
            terms[beta] = terms[beta] + nu
        else:
            terms[beta] = nu

    for beta, nu in _commutator_monomial_cached(group_id, j, sub):
        bk = tuple(b + 1 if i == k else b for i, b in enumerate(beta))
        _add(bk, nu)
    nu0 = commutator_first_order(group, j, k)
    if not nu0.is_zero():
        for beta, nu in avg_of_monomial(nu0, sub):
            _add(beta, nu)
    return tuple((b, nu) for b, nu in terms.items() if not nu.is_zero())


_GROUP_REGISTRY: dict = {}


def _gid(group: SymbolicGroup):
    key = (group.d, tuple(sp.srepr(k) for k in group.kappas))
    _GROUP_REGISTRY[key] = group
    return key


def commutator_monomial(group: SymbolicGroup, j: int, alpha) -> list:
    """D_j(x^alpha m) - x^alpha D_j m = sum_{|beta| = |alpha| - 1}
    x^beta A_{nu_j(beta)} m, built by the inductive proof."""
    return list(_commutator_monomial_cached(_gid(group), j, tuple(int(a) for a in alpha)))


def push_nu_through(nu: NuFunction, gamma) -> NuFunction:
    """A_nu o D^gamma = D^gamma o A_{nu'} for Z2^d (diagonal twist)."""
    return nu.monomial_twist(gamma)


def push_derivative_through_chain(
    group: SymbolicGroup, alpha, nu: NuFunction, nu_prime: NuFunction | None = None
) -> list:
    """A_nu o D^alpha o A_nu' as a sum of D^alpha o (chains).

    The general identity branches over d^N sign patterns
    (nu_{j,l}(lam) = nu(lam) (e_l . sigma_lam(e_j))); Z2^d reflections
    are diagonal so exactly one branch survives.  Returns a list of
    chains (tuples of NuFunction) to compose after D^alpha.
    """
    alpha = tuple(int(a) for a in alpha)
    pushed = push_nu_through(nu, alpha)
    chain = (pushed,) if nu_prime is None else (pushed, nu_prime)
    return [chain]


# ---------------------------------------------------------------------------
# Leibniz expansions
# ---------------------------------------------------------------------------

MAX_ORDER = 4


@dataclass(frozen=True)
class LeibnizTerm:
    coeff: sp.Rational
    beta: tuple
    gamma: tuple
    chain: tuple  # tuple[NuFunction, ...]
    k: int

    def order_residual(self, alpha) -> int:
        return 2 * self.k + sum(self.gamma) - sum(self.beta) - sum(alpha)


@dataclass(frozen=True)
class LeibnizExpansion:
    group: SymbolicGroup
    alpha: tuple
    terms: tuple

    def check_orders(self):
        for t in self.terms:
            if t.order_residual(self.alpha) != 0:
                raise InternalConsistencyError(
                    f"term {t} violates 2k+|gamma|-|beta|=|alpha| for alpha={self.alpha}"
                )

    def pretty(self) -> str:
        lines = [f"D^{list(self.alpha)} (m g), g = h(|x|), Dr = r^-1 d/dr:"]
        for t in sorted(
            self.terms, key=lambda t: (t.k, t.gamma, t.beta, len(t.chain))
        ):
            chain = "".join(f"A[{nu!r}] " for nu in t.chain)
            lines.append(
                f"  {t.coeff} * x^{list(t.beta)} * D^{list(t.gamma)} {chain}m * Dr^{t.k} h"
            )
        return "\n".join(lines)


def _zero_multi(d):
    return tuple(0 for _ in range(d))


def _inc(tup, j):
    return tuple(v + 1 if i == j else v for i, v in enumerate(tup))


def leibniz_expand(group: SymbolicGroup, alpha, max_order: int = MAX_ORDER) -> LeibnizExpansion:
    """Expansion of D^alpha(m g) for radial g = h(|x|), abstract m.

    Built by the inductive proof: each unit derivative D_j maps a term
    c x^beta D^gamma(chain m) Dr^k h to
      (i)  c x^(beta+e_j) D^gamma(chain m) Dr^(k+1) h,
      (ii) c x^beta D^(gamma+e_j)(chain m) Dr^k h,
      (iii) the commutator terms c x^beta' D^gamma(A-extended chain m) Dr^k h.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != group.d:
        raise DomainError(f"alpha must have length {group.d}")
    if sum(alpha) > max_order:
        raise DomainError(f"|alpha| = {sum(alpha)} exceeds max order {max_order}")

    d = group.d
    terms = {(_zero_multi(d), _zero_multi(d), (), 0): sp.Integer(1)}

    def _apply_dj(cur: dict, j: int) -> dict:
        out: dict = {}

        def _add(beta, gamma, chain, k, coeff):
            key = (beta, gamma, chain, k)
            out[key] = out.get(key, sp.Integer(0)) + coeff

        for (beta, gamma, chain, k), coeff in cur.items():
            # radial factor picks up one more Dr
            _add(_inc(beta, j), gamma, chain, k + 1, coeff)
            # derivative falls on the m-part
            _add(beta, _inc(gamma, j), chain, k, coeff)
            # commutator of D_j with x^beta
            for beta_p, nu in commutator_monomial(group, j, beta):
                chains = push_derivative_through_chain(group, gamma, nu)
                for extra in chains:
                    _add(beta_p, gamma, extra + chain, k, coeff)
        return {key: c for key, c in out.items() if sp.simplify(c) != 0}

    for j, a in enumerate(alpha):
        for _ in range(int(a)):
            terms = _apply_dj(terms, j)

    expansion = LeibnizExpansion(
        group=group,
        alpha=alpha,
        terms=tuple(
            LeibnizTerm(coeff=sp.nsimplify(c), beta=b, gamma=g, chain=ch, k=k)
            for (b, g, ch, k), c in terms.items()
        ),
    )
    expansion.check_orders()
    return expansion


def dr_power_on_profile(h_expr, k: int):
    """Dr^k h for a profile given as a function of r2 = r^2: Dr = 2 d/dr2."""
    out = sp.sympify(h_expr)
    for _ in range(int(k)):
        out = 2 * sp.diff(out, R2)
    return out


def evaluate_expansion(expansion: LeibnizExpansion, m_expr, h_expr_r2):
    """Exact value of the expansion as a sympy expression in x (and
    kappa symbols): m polynomial in x1..xd, h polynomial (or smooth
    expression) in r2."""
    group = expansion.group
    xs = group.xs
    r2 = sum(x**2 for x in xs)
    total = sp.Integer(0)
    for t in expansion.terms:
        mono = sp.Integer(1)
        for x, b in zip(xs, t.beta):
            mono *= x**b
        m_part = apply_chain(t.chain, m_expr)
        m_part = group.dunkl_multi(m_part, t.gamma)
        h_part = dr_power_on_profile(h_expr_r2, t.k).subs(R2, r2)
        total += t.coeff * mono * m_part * h_part
    return sp.expand(total)


def iterated_reference(group: SymbolicGroup, alpha, m_expr, h_expr_r2):
    """Oracle: D^alpha(m g) by direct iterated exact differentiation."""
    xs = group.xs
    r2 = sum(x**2 for x in xs)
    g = sp.sympify(h_expr_r2).subs(R2, r2)
    return sp.expand(group.dunkl_multi(sp.expand(sp.sympify(m_expr) * g), alpha))


# ---------------------------------------------------------------------------
# both-radial expansion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialLeibnizTerm:
    poly: sp.Expr  # homogeneous polynomial P_j in x
    j: int         # its degree
    k: int         # Dr-order on m0
    l: int         # Dr-order on h


def _dunkl_monomial(group: SymbolicGroup, expr_poly, axis: int):
    """Exact D_axis on a polynomial (used for the P_j factors)."""
    return sp.expand(group.dunkl(sp.expand(expr_poly), axis))


def radial_leibniz_expand(group: SymbolicGroup, alpha, max_order: int = MAX_ORDER) -> list:
    """D^alpha(m g) for radial m = m0(|x|) and g = h(|x|):

        sum P_j(x) Dr^k m0 Dr^l h,  2(k + l) - j = |alpha|, k + l <= |alpha|.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != group.d:
        raise DomainError(f"alpha must have length {group.d}")
    n = sum(alpha)
    if n > max_order:
        raise DomainError(f"|alpha| = {n} exceeds max order {max_order}")

    # terms keyed by (k, l) with polynomial coefficients
    terms: dict = {(0, 0): sp.Integer(1)}

    def _apply_dj(cur: dict, axis: int) -> dict:
        out: dict = {}

        def _add(k, l, poly):
            out[(k, l)] = sp.expand(out.get((k, l), sp.Integer(0)) + poly)

        for (k, l), poly in cur.items():
            xj = group.xs[axis]
            # leib-1 with the radial factor: P x_j Dr(...) + (D_j P)(...)
            _add(k + 1, l, poly * xj)
            _add(k, l + 1, poly * xj)
            dp = _dunkl_monomial(group, poly, axis)
            if dp != 0:
                _add(k, l, dp)
        return {kl: p for kl, p in out.items() if sp.expand(p) != 0}

    for j, a in enumerate(alpha):
        for _ in range(int(a)):
            terms = _apply_dj(terms, j)

    result = []
    for (k, l), poly in terms.items():
        deg = 2 * (k + l) - n
        if k + l > n or deg < 0:
            raise InternalConsistencyError(
                f"radial term (k={k}, l={l}) violates the order constraint for {alpha}"
            )
        if poly != 0 and sp.Poly(poly, *group.xs).homogeneous_order() != deg:
            raise InternalConsistencyError(
                f"P has degree != {deg} for term (k={k}, l={l})"
            )
        result.append(RadialLeibnizTerm(poly=poly, j=deg, k=k, l=l))
    return result


def evaluate_radial_expansion(group: SymbolicGroup, terms, m0_expr_r2, h_expr_r2):
    xs = group.xs
    r2 = sum(x**2 for x in xs)
    total = sp.Integer(0)
    for t in terms:
        m_part = dr_power_on_profile(m0_expr_r2, t.k).subs(R2, r2)
        h_part = dr_power_on_profile(h_expr_r2, t.l).subs(R2, r2)
        total += t.poly * m_part * h_part
    return sp.expand(total)


# ---------------------------------------------------------------------------
# decay certificates
# ---------------------------------------------------------------------------

@dataclass
class DecayCertificate:
    """Per-term exponent bookkeeping for the Hörmander integral bound.

    With hypotheses |D^gamma m| <= C |xi|^{-|gamma|}  (any chain of
    averaging operators preserves this) and the heat-window bounds
    |Dr^k h_t(r)| <= C r^{2K - 2k} e^{-a t r^2}, every expansion term is
    bounded by C |xi|^{net} e^{-a t |xi|^2} with the same net power
    net = 2K - |alpha|; the squared weighted integral then scales like
    t^{-(2K - |alpha|) - d_k/2}.
    """

    alpha: tuple
    window_power: int  # K in h_t(r) = r^{2K} e^{-t r^2}
    term_exponents: list
    net_power: int
    squared_power: int
    t_exponent_with_dk: str
    decay_rate_a: float = 0.5

    def implied_t_exponent(self, d_k: float) -> float:
        return -(self.net_power) - d_k / 2.0


def decay_check(expansion, window_power: int | None = None) -> DecayCertificate:
    """Certify per-term exponents for a LeibnizExpansion or a list of
    RadialLeibnizTerm; ``window_power`` is K in h_t = r^{2K} e^{-t r^2}
    (defaults to |alpha|, the paper's pairing)."""
    if isinstance(expansion, LeibnizExpansion):
        alpha = expansion.alpha
        n = sum(alpha)
        K = n if window_power is None else int(window_power)
        exps = []
        for t in expansion.terms:
            if t.order_residual(alpha) != 0:
                raise InternalConsistencyError(f"term {t} violates the order constraint")
            exps.append(sum(t.beta) - sum(t.gamma) + 2 * K - 2 * t.k)
    else:
        terms = list(expansion)
        n = 2 * (terms[0].k + terms[0].l) - terms[0].j if terms else 0
        for t in terms:
            if 2 * (t.k + t.l) - t.j != n:
                raise InternalConsistencyError("radial terms disagree on |alpha|")
        alpha = (n,)
        K = n if window_power is None else int(window_power)
        exps = [t.j - 2 * t.k + 2 * K - 2 * t.l for t in terms]

    net = 2 * K - n
    if any(e != net for e in exps):
        raise InternalConsistencyError(
            f"net exponents {exps} differ from 2K - |alpha| = {net}"
        )
    return DecayCertificate(
        alpha=tuple(alpha),
        window_power=K,
        term_exponents=exps,
        net_power=net,
        squared_power=2 * net,
        t_exponent_with_dk=f"-{net} - d_k/2",
    )
