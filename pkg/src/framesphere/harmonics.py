"""Harmonic subspaces of L^2 on the complex unit sphere.

The space P^{p,q} of bidegree-(p, q) polynomials restricted to S^{2n-1}
contains the harmonic subspace H^n_{(p,q)} = P^{p,q} ∩ ker(Laplacian); these
subspaces are mutually orthogonal, irreducible under the unitary group, and
together span L^2 of the sphere.  Bases are built over exact rationals: the
Laplacian kernel is computed by fraction-free row reduction and then
orthogonalised by Gram-Schmidt, so orthogonality and kernel membership are
exact statements about rational numbers.  Unit normalisation would leave the
rational field (norms are rational, their square roots are not), so each
subspace stores exact orthogonal polynomials together with their exact
squared norms, and exposes the unit-normalised float basis as a derived view.

Zonal polynomials R^n_{p,q} are generated by

    (1 - xi*z - eta*conj(z) + xi*eta)^(1-n) = sum_{p,q} R^n_{p,q}(z) xi^p eta^q

and computed two independent ways: a three-term recurrence in p (production
path) and direct Taylor expansion of the generating function (oracle); the
test suite requires the two tables to agree exactly.
"""

from __future__ import annotations

import csv
import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionUnsupportedError,
    ResourceGuardError,
    ShapeMismatchError,
)
from .exact import GaussianRational, conj_scalar, is_exact
from .measure import (
    MCEstimate,
    RngStream,
    _mc_integrate,
    exact_monomial_moment,
    haar_sample_batch,
)
from .polynomials import (
    BiDegreePolynomial,
    apply_laplacian,
    compose_with_linear,
    inner_product,
    poly_from_records,
    poly_to_records,
)

#: Refuse to build bases whose ambient monomial space exceeds this size.
DEFAULT_MAX_MONOMIALS = 2000


class BiDegree(NamedTuple):
    p: int
    q: int


def _as_bidegree(j) -> BiDegree:
    p, q = j
    p, q = int(p), int(q)
    if p < 0 or q < 0:
        raise ShapeMismatchError(f"bidegree must be nonnegative, got ({p}, {q})")
    return BiDegree(p, q)


def _require_dimension(n: int) -> None:
    if n < 3:
        raise DimensionUnsupportedError(f"ambient dimension n={n} is not supported; need n >= 3")


# ---------------------------------------------------------------------------
# dimensions and monomial bookkeeping
# ---------------------------------------------------------------------------


def _dim_poly_space(n: int, d: int) -> int:
    """dim of the degree-d polynomials in n variables; 0 for negative d."""
    if d < 0:
        return 0
    return math.comb(d + n - 1, n - 1)


def dimension(n: int, j) -> int:
    """Dimension of the harmonic subspace H^n_{(p,q)}.

    Equals dim P^{p,q} - dim P^{p-1,q-1} with dim P^{p,q} =
    C(p+n-1, n-1) * C(q+n-1, n-1); the test suite validates this closed form
    against explicit Laplacian kernel ranks.
    """
    _require_dimension(n)
    p, q = _as_bidegree(j)
    return _dim_poly_space(n, p) * _dim_poly_space(n, q) - _dim_poly_space(
        n, p - 1
    ) * _dim_poly_space(n, q - 1)


@lru_cache(maxsize=None)
def _monomials(n: int, d: int) -> tuple:
    """All exponent tuples of length n summing to d, lexicographically sorted."""
    if d < 0:
        return ()
    if n == 1:
        return ((d,),)
    out = []
    for first in range(d + 1):
        for rest in _monomials(n - 1, d - first):
            out.append((first,) + rest)
    return tuple(sorted(out))


def _pair_monomials(n: int, p: int, q: int) -> list:
    return [(a, b) for a in _monomials(n, p) for b in _monomials(n, q)]


# ---------------------------------------------------------------------------
# exact Laplacian kernel
# ---------------------------------------------------------------------------


def _laplacian_rows(n: int, p: int, q: int):
    """Sparse integer matrix of the Laplacian P^{p,q} -> P^{p-1,q-1}.

    Rows are indexed by target monomials, columns by source monomials;
    entry 4 * alpha_k * beta_k sits at (source - e_k in both indices).
    """
    sources = _pair_monomials(n, p, q)
    targets = {m: i for i, m in enumerate(_pair_monomials(n, p - 1, q - 1))}
    rows = [dict() for _ in targets]
    for col, (alpha, beta) in enumerate(sources):
        for k in range(n):
            if alpha[k] == 0 or beta[k] == 0:
                continue
            tgt = (
                tuple(a - 1 if i == k else a for i, a in enumerate(alpha)),
                tuple(b - 1 if i == k else b for i, b in enumerate(beta)),
            )
            row = rows[targets[tgt]]
            row[col] = row.get(col, 0) + 4 * alpha[k] * beta[k]
    return rows, len(sources)


def _rref(rows, ncols: int):
    """In-place reduced row echelon form over Fractions; returns pivot list."""
    rows = [{c: Fraction(v) for c, v in r.items() if v} for r in rows]
    pivots = []
    pivot_of_row = 0
    for col in range(ncols):
        pivot = None
        for i in range(pivot_of_row, len(rows)):
            if rows[i].get(col):
                pivot = i
                break
        if pivot is None:
            continue
        rows[pivot_of_row], rows[pivot] = rows[pivot], rows[pivot_of_row]
        prow = rows[pivot_of_row]
        inv = 1 / prow[col]
        for c in list(prow):
            prow[c] *= inv
        for i, r in enumerate(rows):
            if i == pivot_of_row:
                continue
            factor = r.get(col)
            if not factor:
                continue
            for c, v in prow.items():
                nv = r.get(c, Fraction(0)) - factor * v
                if nv:
                    r[c] = nv
                else:
                    r.pop(c, None)
        pivots.append((pivot_of_row, col))
        pivot_of_row += 1
        if pivot_of_row == len(rows):
            break
    return rows, pivots


def laplacian_kernel_dim(n: int, j) -> int:
    """Kernel dimension of the Laplacian on P^{p,q}, by explicit row reduction."""
    _require_dimension(n)
    p, q = _as_bidegree(j)
    if p == 0 or q == 0:
        return _dim_poly_space(n, p) * _dim_poly_space(n, q)
    rows, ncols = _laplacian_rows(n, p, q)
    _, pivots = _rref(rows, ncols)
    return ncols - len(pivots)


def _kernel_vectors(n: int, p: int, q: int):
    """Exact rational basis of ker(Laplacian) on P^{p,q}, as dense columns."""
    rows, ncols = _laplacian_rows(n, p, q)
    if not rows:
        return [
            [Fraction(1) if i == k else Fraction(0) for i in range(ncols)]
            for k in range(ncols)
        ]
    rref_rows, pivots = _rref(rows, ncols)
    pivot_cols = {col: row for row, col in pivots}
    free_cols = [c for c in range(ncols) if c not in pivot_cols]
    vectors = []
    for fc in free_cols:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for pc, row in pivot_cols.items():
            coeff = rref_rows[row].get(fc)
            if coeff:
                v[pc] = -coeff
        vectors.append(v)
    return vectors


# ---------------------------------------------------------------------------
# harmonic subspaces
# ---------------------------------------------------------------------------


class HarmonicSubspace:
    """An orthogonal basis of H^n_{(p,q)} over exact rationals.

    ``polys[m]`` are pairwise orthogonal with exact squared norms
    ``norms_sq[m]``; the unit-normalised basis Z_m = polys[m]/sqrt(norms_sq[m])
    is available as the float view ``basis``.
    """

    def __init__(self, n: int, j: BiDegree, polys, norms_sq):
        self.n = n
        self.j = _as_bidegree(j)
        self.polys = tuple(polys)
        self.norms_sq = tuple(Fraction(r) for r in norms_sq)
        if len(self.polys) != len(self.norms_sq):
            raise ShapeMismatchError("polys and norms_sq must have equal length")
        self._basis_float = None
        self._char_static = None

    @property
    def dim(self) -> int:
        return len(self.polys)

    @property
    def basis(self) -> tuple:
        """Unit-normalised basis as float-coefficient polynomials."""
        if self._basis_float is None:
            normalised = []
            for poly, r in zip(self.polys, self.norms_sq):
                scale = 1.0 / math.sqrt(float(r))
                normalised.append(
                    BiDegreePolynomial(
                        poly.n,
                        poly.p,
                        poly.q,
                        {k: complex(c) * scale for k, c in poly.terms.items()},
                    )
                )
            self._basis_float = tuple(normalised)
        return self._basis_float

    def __repr__(self):
        return f"HarmonicSubspace(n={self.n}, j={tuple(self.j)}, dim={self.dim})"


def _gram_blocks(n: int, p: int, q: int):
    """Monomial Gram data for P^{p,q}, grouped by the charge vector alpha-beta.

    <z^a zbar^b, z^a' zbar^b'> is nonzero only when a - b == a' - b' (as
    integer vectors), in which case it equals the exact moment of b + a'.
    """
    monos = _pair_monomials(n, p, q)
    groups: dict = {}
    for idx, (alpha, beta) in enumerate(monos):
        charge = tuple(x - y for x, y in zip(alpha, beta))
        groups.setdefault(charge, []).append(idx)
    blocks = []
    for charge in sorted(groups):
        idxs = groups[charge]
        size = len(idxs)
        mat = [[Fraction(0)] * size for _ in range(size)]
        for i, gi in enumerate(idxs):
            alpha_i, beta_i = monos[gi]
            for k, gk in enumerate(idxs):
                alpha_k, beta_k = monos[gk]
                m = tuple(x + y for x, y in zip(beta_i, alpha_k))
                mat[i][k] = exact_monomial_moment(m, m, n)
        blocks.append((idxs, mat))
    return monos, blocks


def _gram_apply(blocks, v):
    """G @ v for the block Gram matrix, exact."""
    out = [Fraction(0)] * len(v)
    for idxs, mat in blocks:
        sub = [v[i] for i in idxs]
        for i, gi in enumerate(idxs):
            acc = Fraction(0)
            for k, x in enumerate(sub):
                if x:
                    acc += mat[i][k] * x
            out[gi] = acc
    return out


_BASIS_CACHE: dict = {}


def build_basis(n: int, j, max_monomials: int = DEFAULT_MAX_MONOMIALS) -> HarmonicSubspace:
    """Construct an exact orthogonal basis of H^n_{(p,q)}.

    Computes the Laplacian kernel on P^{p,q} by exact row reduction and
    orthogonalises it by Gram-Schmidt in the exact L2 inner product.  Raises
    ``ResourceGuardError`` when dim P^{p,q} exceeds ``max_monomials``.
    Results are cached per (n, p, q).
    """
    _require_dimension(n)
    p, q = _as_bidegree(j)
    ambient = _dim_poly_space(n, p) * _dim_poly_space(n, q)
    if ambient > max_monomials:
        raise ResourceGuardError(
            f"dim P^({p},{q}) = {ambient} exceeds the monomial bound {max_monomials}"
        )
    key = (n, p, q)
    if key in _BASIS_CACHE:
        return _BASIS_CACHE[key]

    monos, blocks = _gram_blocks(n, p, q)
    kernel = _kernel_vectors(n, p, q)

    ortho = []
    gram_applied = []
    norms = []
    for v in kernel:
        v = list(v)
        for u, gu, ru in zip(ortho, gram_applied, norms):
            # exact projection coefficient <u, v>/<u, u>; everything is real
            coeff = sum(gu[i] * v[i] for i in range(len(v)) if v[i]) / ru
            if coeff:
                for i in range(len(v)):
                    if u[i]:
                        v[i] -= coeff * u[i]
        gv = _gram_apply(blocks, v)
        rv = sum(gv[i] * v[i] for i in range(len(v)) if v[i])
        if rv == 0:
            raise ShapeMismatchError("kernel vectors were not linearly independent")
        ortho.append(v)
        gram_applied.append(gv)
        norms.append(rv)

    polys = []
    for v in ortho:
        terms = {monos[i]: v[i] for i in range(len(v)) if v[i]}
        polys.append(BiDegreePolynomial(n, p, q, terms))
    space = HarmonicSubspace(n, (p, q), polys, norms)
    expected = dimension(n, (p, q))
    if space.dim != expected:
        raise ShapeMismatchError(
            f"kernel dimension {space.dim} disagrees with closed form {expected}"
        )
    _BASIS_CACHE[key] = space
    return space


# ---------------------------------------------------------------------------
# zonal polynomials
# ---------------------------------------------------------------------------


class ZonalPolynomial:
    """The zonal polynomial R^n_{p,q} in one complex variable.

    Stored as exact coefficients {(a, b): Fraction} of z^a * conj(z)^b; only
    exponents (p-k, q-k) occur.
    """

    __slots__ = ("n", "p", "q", "coeffs")

    def __init__(self, n: int, p: int, q: int, coeffs):
        self.n = n
        self.p = p
        self.q = q
        self.coeffs = {k: Fraction(v) for k, v in coeffs.items() if v}

    def at_one(self) -> Fraction:
        return sum(self.coeffs.values(), Fraction(0))

    def at_zero(self) -> Fraction:
        return self.coeffs.get((0, 0), Fraction(0))

    def __call__(self, w: complex) -> complex:
        w = complex(w)
        return sum(
            float(c) * w**a * np.conj(w) ** b for (a, b), c in self.coeffs.items()
        )

    def __eq__(self, other):
        if not isinstance(other, ZonalPolynomial):
            return NotImplemented
        return (self.n, self.p, self.q) == (other.n, other.p, other.q) and (
            self.coeffs == other.coeffs
        )

    def __repr__(self):
        return f"ZonalPolynomial(n={self.n}, p={self.p}, q={self.q}, {self.coeffs})"


def _shift(coeffs: dict, da: int, db: int) -> dict:
    return {(a + da, b + db): c for (a, b), c in coeffs.items()}


def _combine(*weighted) -> dict:
    out: dict = {}
    for weight, coeffs in weighted:
        if not weight:
            continue
        for k, c in coeffs.items():
            v = out.get(k, Fraction(0)) + weight * c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
    return out


@lru_cache(maxsize=None)
def _zonal_coeffs(n: int, p: int, q: int) -> tuple:
    """Zonal coefficient table via the recurrence

    p * R_{p,q} = (p+n-2) * (z * R_{p-1,q} - R_{p-1,q-1}) + p * conj(z) * R_{p,q-1}

    with R_{0,0} = 1 and R at any negative index equal to zero; the p = 0
    column follows from the xi <-> eta symmetry of the generating function,
    which swaps z with conj(z):  R_{0,q}(z) = R_{q,0}(conj(z)).
    """
    if p < 0 or q < 0:
        return ()
    if p == 0 and q == 0:
        return (((0, 0), Fraction(1)),)
    if p == 0:
        return tuple(((b, a), c) for (a, b), c in _zonal_coeffs(n, q, 0))
    prev_p = dict(_zonal_coeffs(n, p - 1, q))
    prev_pq = dict(_zonal_coeffs(n, p - 1, q - 1)) if q >= 1 else {}
    prev_q = dict(_zonal_coeffs(n, p, q - 1)) if q >= 1 else {}
    w = Fraction(p + n - 2, p)
    coeffs = _combine(
        (w, _shift(prev_p, 1, 0)),
        (-w, prev_pq),
        (Fraction(1), _shift(prev_q, 0, 1)),
    )
    return tuple(sorted(coeffs.items()))


def zonal_polynomial(n: int, j) -> ZonalPolynomial:
    """R^n_{p,q} computed by the three-term recurrence (exact coefficients)."""
    _require_dimension(n)
    p, q = _as_bidegree(j)
    return ZonalPolynomial(n, p, q, dict(_zonal_coeffs(n, p, q)))


def zonal_from_generating_function(n: int, j) -> ZonalPolynomial:
    """R^n_{p,q} by direct Taylor expansion of (1 - xi z - eta conj(z) + xi eta)^(1-n).

    Independent of the recurrence: uses the binomial series
    (1-u)^{-(n-1)} = sum_m C(n-2+m, m) u^m with u = xi z + eta conj(z) - xi eta
    and collects the coefficient of xi^p eta^q.  Serves as the oracle the
    recurrence is validated against.
    """
    _require_dimension(n)
    p, q = _as_bidegree(j)
    coeffs: dict = {}
    for k in range(min(p, q) + 1):
        i, jj = p - k, q - k
        m = i + jj + k
        c = (
            Fraction((-1) ** k)
            * math.comb(n - 2 + m, m)
            * Fraction(math.factorial(m), math.factorial(i) * math.factorial(jj) * math.factorial(k))
        )
        coeffs[(i, jj)] = c
    return ZonalPolynomial(n, p, q, coeffs)


def zonal_frame_sum(n: int, j) -> Fraction:
    """The exact selection-rule value R^n_j(1) + (n-1) * R^n_j(0).

    Summing the zonal harmonic with pole e_1 over the standard basis gives
    this number; it vanishes among j != (0,0) exactly at j = (1,1), which is
    why frame functions only see the constant and the (1,1) component.
    """
    r = zonal_polynomial(n, j)
    return r.at_one() + (n - 1) * r.at_zero()


def _unit_vector(t, n: int):
    coords = getattr(t, "coords", t)
    if isinstance(coords, np.ndarray) or not all(
        is_exact(c) or isinstance(c, GaussianRational) for c in coords
    ):
        arr = np.asarray(coords, dtype=complex)
        if arr.shape != (n,):
            raise ShapeMismatchError(f"expected a vector of length {n}, got shape {arr.shape}")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-12:
            raise ShapeMismatchError(f"pole vector must be unit norm; measured norm {norm!r}")
        return list(arr), False
    coords = list(coords)
    if len(coords) != n:
        raise ShapeMismatchError(f"expected a vector of length {n}, got {len(coords)}")
    norm_sq = sum(
        (c.re * c.re + c.im * c.im) if isinstance(c, GaussianRational) else Fraction(c) ** 2
        for c in coords
    )
    if norm_sq != 1:
        raise ShapeMismatchError(f"pole vector must be unit norm; norm^2 = {norm_sq}")
    return coords, True


def zonal_harmonic(n: int, j, t, u) -> complex:
    """Evaluate the zonal harmonic with pole ``t`` at the point ``u``.

    Both vectors must be unit norm.  The value is R^n_{p,q}(w) with the
    pairing w = sum_k u_k * conj(t_k), which is holomorphic of degree p in u,
    so the function of u lies in H^n_{(p,q)}.
    """
    _require_dimension(n)
    r = zonal_polynomial(n, j)
    tc, _ = _unit_vector(t, n)
    uc, _ = _unit_vector(u, n)
    w = complex(sum(complex(a) * np.conj(complex(b)) for a, b in zip(uc, tc)))
    return complex(r(w))


def zonal_harmonic_components(n: int, j, t) -> dict:
    """The zonal harmonic with pole ``t`` as polynomials in u, one per bidegree.

    R^n_{p,q}(w) with w = sum_k u_k conj(t_k) expands into terms of bidegree
    (p-k, q-k) in u; the returned dict maps each bidegree to its polynomial.
    Exact pole coordinates give exact coefficients.
    """
    _require_dimension(n)
    p, q = _as_bidegree(j)
    r = zonal_polynomial(n, (p, q))
    tc, exact = _unit_vector(t, n)
    if exact:
        tconj = [conj_scalar(GaussianRational(c) if not isinstance(c, GaussianRational) else c) for c in tc]
        one = GaussianRational(1)
    else:
        tconj = [np.conj(complex(c)) for c in tc]
        one = 1 + 0j
    zero = (0,) * n

    w_poly = BiDegreePolynomial(
        n,
        1,
        0,
        {
            (tuple(1 if i == k else 0 for i in range(n)), zero): tconj[k]
            for k in range(n)
            if tconj[k]
        },
    )
    wbar_poly = BiDegreePolynomial(
        n,
        0,
        1,
        {
            (zero, tuple(1 if i == k else 0 for i in range(n))): conj_scalar(tconj[k])
            for k in range(n)
            if tconj[k]
        },
    )

    def power(poly, e):
        acc = BiDegreePolynomial(n, 0, 0, {(zero, zero): one})
        for _ in range(e):
            acc = acc * poly
        return acc

    out: dict = {}
    for (a, b), c in r.coeffs.items():
        term = power(w_poly, a) * power(wbar_poly, b)
        term = term * (c if exact else float(c))
        key = BiDegree(a, b)
        out[key] = out[key] + term if key in out else term
    return out


# ---------------------------------------------------------------------------
# representation matrices and characters
# ---------------------------------------------------------------------------


def representation_matrix(space: HarmonicSubspace, g) -> np.ndarray:
    """Matrix of the action f -> f o g^{-1} on the unit-normalised basis.

    Entry (m, m') is <Z_m, Z_{m'} o g^{-1}>, evaluated by exact quadrature of
    the composed polynomials; the result is unitary to float precision.
    """
    basis = space.basis
    dim = space.dim
    out = np.zeros((dim, dim), dtype=complex)
    composed = [compose_with_linear(bp, g, inverse=True) for bp in basis]
    for m in range(dim):
        for mp in range(dim):
            out[m, mp] = complex(inner_product(basis[m], composed[mp]))
    return out


def character(space: HarmonicSubspace, g) -> complex:
    """Trace of the representation matrix at g."""
    return complex(np.trace(representation_matrix(space, g)))


def _char_static(space: HarmonicSubspace):
    """Precompute the contraction tensor used by the batched character path.

    With K = (sum_m c_m c_m^T / r_m) G in the monomial-pair basis, the
    character at g is tr(M(g) K) where M(g) is the composition matrix; M
    factors over the holomorphic and antiholomorphic monomials, giving the
    einsum in ``character_batch``.
    """
    if space._char_static is not None:
        return space._char_static
    n, (p, q) = space.n, space.j
    monos_p = _monomials(n, p)
    monos_q = _monomials(n, q)
    np_, nq_ = len(monos_p), len(monos_q)
    pair_index = {m: i for i, m in enumerate(_pair_monomials(n, p, q))}

    size = np_ * nq_
    w = np.zeros((size, size))
    for poly, r in zip(space.polys, space.norms_sq):
        c = np.zeros(size)
        for key, coeff in poly.terms.items():
            c[pair_index[key]] = float(coeff)
        w += np.outer(c, c) / float(r)

    gram = np.zeros((size, size))
    monos = _pair_monomials(n, p, q)
    for i, (alpha, beta) in enumerate(monos):
        for k, (alpha2, beta2) in enumerate(monos):
            left = tuple(x + y for x, y in zip(beta, alpha2))
            right = tuple(x + y for x, y in zip(alpha, beta2))
            if left == right:
                gram[i, k] = float(exact_monomial_moment(left, left, n))

    k4 = (w @ gram).reshape(np_, nq_, np_, nq_)

    # Static index maps for building symmetric-power composition matrices.
    # Everything is indexed by sorted monomial lists (never raw variable
    # numbers): perm translates degree-1 monomial positions to variables.
    monos1 = _monomials(n, 1)
    perm = np.array([mono.index(1) for mono in monos1], dtype=np.int64)
    mono1_index = {m: i for i, m in enumerate(monos1)}

    def degree_maps(monos_d, monos_prev):
        prev_index = {m: i for i, m in enumerate(monos_prev)}
        d_index = {m: i for i, m in enumerate(monos_d)}
        iprev = np.empty(len(monos_d), dtype=np.int64)
        kmono = np.empty(len(monos_d), dtype=np.int64)
        for col, mono in enumerate(monos_d):
            k = next(i for i, e in enumerate(mono) if e > 0)
            prev = tuple(e - 1 if i == k else e for i, e in enumerate(mono))
            ek = tuple(1 if i == k else 0 for i in range(n))
            iprev[col], kmono[col] = prev_index[prev], mono1_index[ek]
        # selection tensor: sel[o, m, j] = 1 when mono_m + monos1[j] == mono_o
        sel = np.zeros((len(monos_d), len(monos_prev), n))
        for m_i, mono in enumerate(monos_prev):
            for j_i, ej in enumerate(monos1):
                target = tuple(e + f for e, f in zip(mono, ej))
                sel[d_index[target], m_i, j_i] = 1.0
        return iprev, kmono, sel

    ladders = {}
    for d in {p, q}:
        steps = []
        for dd in range(2, d + 1):
            steps.append(degree_maps(_monomials(n, dd), _monomials(n, dd - 1)))
        ladders[d] = steps

    space._char_static = (perm, k4, ladders)
    return space._char_static


def _symmetric_power_batch(a1m: np.ndarray, d: int, steps) -> np.ndarray:
    """A_d(h) for a batch: A_d[s, m_out, m_in] = coeff of z^{m_out} in mono_{m_in}(h z).

    Built degree by degree from the degree-1 matrix through
    mono = mono_prev * z_k with k the leading variable; the selection tensor
    merges products landing on the same output monomial.  All three axes use
    sorted-monomial indexing (a1m is already permuted from variable order).
    """
    if d == 0:
        return np.ones(a1m.shape[:1] + (1, 1), dtype=complex)
    acc = a1m
    for iprev, kmono, sel in steps:
        acc = np.einsum(
            "smc,sjc,omj->soc", acc[:, :, iprev], a1m[:, :, kmono], sel, optimize=True
        )
    return acc


def character_batch(space: HarmonicSubspace, gs: np.ndarray) -> np.ndarray:
    """Characters tr D^j(g) for a batch of unitaries, vectorised.

    Agrees with ``character`` (tested); used for Schur statistics and the
    character projection, where one character per Haar sample is needed.
    """
    gs = np.asarray(gs, dtype=complex)
    if gs.ndim == 2:
        gs = gs[None]
    n, (p, q) = space.n, space.j
    if gs.shape[1:] != (n, n):
        raise ShapeMismatchError(f"expected unitaries of shape ({n},{n}), got {gs.shape[1:]}")
    perm, k4, ladders = _char_static(space)
    # composition matrix M for f -> f(g^{-1} z) uses h = g^{-1} = g^dagger
    h = np.conj(gs).swapaxes(1, 2)
    a1 = h.swapaxes(1, 2)  # A_1[s, j, k] = h[s, k, j], variable-indexed
    a1m = a1[:, perm][:, :, perm]  # reindex both axes by sorted degree-1 monomials
    ap = _symmetric_power_batch(a1m, p, ladders[p])
    aq = _symmetric_power_batch(a1m, q, ladders[q])
    return np.einsum("sua,svb,abuv->s", ap, np.conj(aq), k4, optimize=True)


class _CharacterIntegrand:
    """conj(chi_j(g)) paired with another batched factor, for Haar MC."""

    def __init__(self, space, factor=None):
        self.space = space
        self.factor = factor

    def evaluate_batch(self, gs):
        chi = np.conj(character_batch(self.space, gs))
        if self.factor is None:
            return chi
        return chi * self.factor(gs)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def _polynomial_parts(f):
    """View ``f`` as a list of polynomials if it has one, else None."""
    if isinstance(f, BiDegreePolynomial):
        return [f]
    if isinstance(f, (list, tuple)) and all(isinstance(x, BiDegreePolynomial) for x in f):
        return list(f)
    parts = getattr(f, "polynomial_parts", None)
    if parts is not None:
        value = parts() if callable(parts) else parts
        return None if value is None else list(value)
    return None


def _batch_evaluator(f):
    if hasattr(f, "evaluate_batch"):
        return f.evaluate_batch
    parts = _polynomial_parts(f)
    if parts is not None:
        return lambda pts: sum(p.evaluate_batch(pts) for p in parts)
    if callable(f):
        return lambda pts: np.asarray([f(x) for x in pts], dtype=complex)
    raise ConfigurationError(f"cannot evaluate object of type {type(f).__name__}")


def project_basis(
    f,
    space: HarmonicSubspace,
    integration: str = "exact",
    n_samples: int | None = None,
    rng: RngStream | None = None,
    workers: int = 1,
) -> BiDegreePolynomial:
    """Orthogonal projection of ``f`` onto the subspace, in the basis route.

    f_j = sum_m <Z_m, f> Z_m.  With ``integration="exact"`` the inner
    products are exact quadrature (f must be a polynomial or a sum of
    polynomials; exact inputs give exact outputs since the square roots of
    the basis norms cancel).  With ``integration="mc"`` the coefficients are
    Monte Carlo estimates over ``n_samples`` sphere points shared across the
    basis.
    """
    if integration == "exact":
        parts = _polynomial_parts(f)
        if parts is None:
            raise ConfigurationError(
                "exact projection needs a polynomial input; use integration='mc'"
            )
        zero = BiDegreePolynomial(space.n, space.j.p, space.j.q, {})
        result = zero
        for v, r in zip(space.polys, space.norms_sq):
            num = None
            for part in parts:
                val = inner_product(v, part)
                num = val if num is None else num + val
            coeff = num / r
            if not (isinstance(coeff, complex) and coeff == 0):
                result = result + v * coeff
        return result
    if integration == "mc":
        if not n_samples or n_samples < 2:
            raise ConfigurationError("Monte Carlo projection needs n_samples >= 2")
        if rng is None:
            raise ConfigurationError("Monte Carlo projection needs an RngStream")
        from .measure import sphere_sample_batch

        evaluate = _batch_evaluator(f)
        pts = sphere_sample_batch(space.n, n_samples, rng)
        values = np.asarray(evaluate(pts), dtype=complex)
        result = BiDegreePolynomial(space.n, space.j.p, space.j.q, {})
        for z_m in space.basis:
            coeff = complex(np.mean(np.conj(z_m.evaluate_batch(pts)) * values))
            result = result + z_m * coeff
        return result
    raise ConfigurationError(f"unknown integration mode {integration!r}")


def project_character(
    f,
    space: HarmonicSubspace,
    u,
    n_samples: int,
    rng: RngStream,
    workers: int = 1,
) -> MCEstimate:
    """Group-averaged projection evaluated at the point ``u``.

    Estimates dim(H_j) * int tr(conj D^j(g)) f(g^{-1} u) dHaar(g) by Monte
    Carlo; for f in L^2 this equals the basis-route projection evaluated at
    u.  Returns the estimate with its standard error.
    """
    if n_samples < 2:
        raise ConfigurationError("character projection needs n_samples >= 2")
    u_coords = np.asarray(getattr(u, "coords", u), dtype=complex)
    if u_coords.shape != (space.n,):
        raise ShapeMismatchError(f"point has shape {u_coords.shape}, expected ({space.n},)")
    evaluate = _batch_evaluator(f)
    dim = space.dim

    class _Integrand:
        def evaluate_batch(self, gs):
            chi = np.conj(character_batch(space, gs))
            pts = np.einsum("sji,j->si", np.conj(gs), u_coords)
            return dim * chi * np.asarray(evaluate(pts), dtype=complex)

    return _mc_integrate(_Integrand(), space.n, n_samples, rng, workers, haar_sample_batch)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def subspace_to_dict(space: HarmonicSubspace) -> dict:
    """Serializable form: header {n, p, q, dim} plus the exact basis."""
    return {
        "n": space.n,
        "p": space.j.p,
        "q": space.j.q,
        "dim": space.dim,
        "norms_sq": [str(r) for r in space.norms_sq],
        "basis": [poly_to_records(poly) for poly in space.polys],
    }


def subspace_from_dict(data: dict) -> HarmonicSubspace:
    polys = [poly_from_records(rec) for rec in data["basis"]]
    norms = [Fraction(s) for s in data["norms_sq"]]
    space = HarmonicSubspace(int(data["n"]), (int(data["p"]), int(data["q"])), polys, norms)
    if space.dim != int(data["dim"]):
        raise ShapeMismatchError("header dim disagrees with basis length")
    return space


def write_character_table(path, samples) -> None:
    """CSV of character samples: columns sample_index, re_chi, im_chi."""
    samples = np.asarray(samples, dtype=complex)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "re_chi", "im_chi"])
        for i, v in enumerate(samples):
            writer.writerow([i, repr(float(v.real)), repr(float(v.imag))])
