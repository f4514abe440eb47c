import numpy as np
import pytest
from fractions import Fraction

from framesphere.errors import (
    ConfigurationError,
    NegativityWarning,
    ParseError,
    ShapeMismatchError,
    UnderdeterminedDataError,
    UnsupportedEvaluationError,
)
from framesphere.exact import GaussianRational
from framesphere.frame import (
    FrameFunction,
    FrameResidualReport,
    GleasonReport,
    OperatorMatrix,
    OrthonormalBasis,
    basis_sum,
    basis_weight_sums,
    check_frame_property,
    evaluate_frame,
    frame_residual,
    gleason_additivity_check,
    hermitian_check,
    polarization_uniqueness_check,
    random_orthonormal_basis,
    reconstruct_harmonic,
    reconstruct_moment,
    sample_component_fit,
)
from framesphere.harmonics import BiDegree, build_basis
from framesphere.measure import RngStream, sphere_sample_batch
from framesphere.polynomials import BiDegreePolynomial


def _quartic_frame(n=3):
    """|z1|^4 as a harmonic-model frame function (not a quadratic form)."""
    poly = BiDegreePolynomial.monomial(n, (2,) + (0,) * (n - 1), (2,) + (0,) * (n - 1))
    comps = {
        (0, 0): None,
        (1, 1): None,
        (2, 2): None,
    }
    from framesphere.harmonics import project_basis

    return FrameFunction(
        harmonic={j: project_basis(poly, build_basis(n, j)) for j in comps}
    )


def _random_hermitian(n, gen):
    b = gen.uniform(-1, 1, (n, n)) + 1j * gen.uniform(-1, 1, (n, n))
    return (b + np.conj(b.T)) / 2


# ---------------------------------------------------------------------------
# OperatorMatrix
# ---------------------------------------------------------------------------


def test_operator_matrix_validation():
    a = OperatorMatrix(np.diag([1.0, 2.0, 3.0]))
    assert a.n == 3
    assert a.is_hermitian
    assert a.trace() == pytest.approx(6.0)
    with pytest.raises(ShapeMismatchError):
        OperatorMatrix(np.ones((2, 3)))
    with pytest.raises(ShapeMismatchError):
        OperatorMatrix(np.array([[np.inf, 0], [0, 1]]))


def test_operator_matrix_hermitian_boundary():
    eps = np.zeros((3, 3), dtype=complex)
    eps[0, 1] = 5e-11  # below tolerance: still Hermitian
    assert OperatorMatrix(np.eye(3) + eps).is_hermitian
    eps[0, 1] = 5e-9
    assert not OperatorMatrix(np.eye(3) + eps).is_hermitian


def test_operator_matrix_normalized():
    a = OperatorMatrix(np.diag([1.0, 2.0, 3.0])).normalized()
    assert a.trace() == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        OperatorMatrix(np.diag([1.0, -1.0, 0.0])).normalized()


def test_operator_matrix_dict_round_trip():
    a = OperatorMatrix(np.array([[1.0, 2j, 0], [-2j, 0.5, 1], [0, 1, -1]]))
    back = OperatorMatrix.from_dict(a.to_dict())
    assert np.array_equal(back.entries, a.entries)
    with pytest.raises(ParseError):
        OperatorMatrix.from_dict({"n": 3, "re": [[1, 0], [0, 1]], "im": []})


# ---------------------------------------------------------------------------
# FrameFunction
# ---------------------------------------------------------------------------


def test_frame_function_requires_exactly_one_model():
    with pytest.raises(ConfigurationError):
        FrameFunction()
    with pytest.raises(ConfigurationError):
        FrameFunction(operator=np.eye(3), harmonic={})


def test_operator_model_evaluates_quadratic_form():
    f = FrameFunction(operator=np.diag([1.0, 2.0, 3.0]))
    assert evaluate_frame(f, [1.0, 0.0, 0.0]) == pytest.approx(1.0)
    assert evaluate_frame(f, [0.0, 1.0, 0.0]) == pytest.approx(2.0)
    v = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    assert evaluate_frame(f, v) == pytest.approx(1.5)


def test_evaluate_rejects_non_unit_points():
    f = FrameFunction(operator=np.eye(3))
    with pytest.raises(ShapeMismatchError):
        f.evaluate([1.0, 1.0, 0.0])


def test_harmonic_model_rejects_non_harmonic_components():
    bad = BiDegreePolynomial.monomial(3, (1, 0, 0), (1, 0, 0))  # |z1|^2 alone
    with pytest.raises(ConfigurationError):
        FrameFunction(harmonic={(1, 1): bad})


def test_harmonic_model_rejects_mismatched_key():
    space = build_basis(3, (1, 1))
    with pytest.raises(ShapeMismatchError):
        FrameFunction(harmonic={(2, 2): space.polys[0]})


def test_samples_model_stores_but_cannot_evaluate():
    pts = sphere_sample_batch(3, 10, RngStream(seed=1))
    vals = np.ones(10)
    f = FrameFunction(samples=(pts, vals))
    assert f.model == "samples"
    assert f.n == 3
    with pytest.raises(UnsupportedEvaluationError):
        f.evaluate([1.0, 0.0, 0.0])
    assert f.polynomial_parts() is None


def test_samples_model_checks_unit_norm():
    pts = sphere_sample_batch(3, 4, RngStream(seed=2))
    pts[2] *= 1.5
    with pytest.raises(ShapeMismatchError, match="point 2"):
        FrameFunction(samples=(pts, np.ones(4)))


# ---------------------------------------------------------------------------
# bases and weights
# ---------------------------------------------------------------------------


def test_orthonormal_basis_validation():
    assert len(OrthonormalBasis(np.eye(3))) == 3
    with pytest.raises(ShapeMismatchError):
        OrthonormalBasis(np.ones((3, 3)))


def test_random_orthonormal_basis_is_orthonormal():
    basis = random_orthonormal_basis(4, RngStream(seed=3))
    gram = basis.vectors @ np.conj(basis.vectors.T)
    assert np.max(np.abs(gram - np.eye(4))) < 1e-12


def test_weight_equals_trace_for_quadratic_forms():
    # sum over any orthonormal basis of <b|Ab> is tr A, basis-independent
    rng = RngStream(seed=4)
    for n in (3, 4, 5):
        gen = rng.child(n).generator
        a = _random_hermitian(n, gen)
        f = FrameFunction(operator=a)
        sums = basis_weight_sums(f, 10, rng.child(100 + n))
        assert np.max(np.abs(sums - np.trace(a))) < 1e-8


def test_non_frame_function_has_basis_dependent_sums():
    # |z1|^4 sums to 1 over the standard basis but 1/2 over a rotated one
    f = _quartic_frame()
    std = basis_sum(f, OrthonormalBasis(np.eye(3)))
    assert std == pytest.approx(1.0)
    rot = np.array(
        [
            [1 / np.sqrt(2), 1 / np.sqrt(2), 0],
            [1 / np.sqrt(2), -1 / np.sqrt(2), 0],
            [0, 0, 1],
        ]
    )
    assert basis_sum(f, OrthonormalBasis(rot)) == pytest.approx(0.5)


def test_check_frame_property_verdicts():
    f = FrameFunction(operator=np.diag([1.0, 2.0, 3.0]))
    ok = check_frame_property(f, 20, rng=RngStream(seed=40))
    assert ok.verdict
    assert ok.weight == pytest.approx(6.0)
    assert ok.max_deviation < 1e-10

    bad = check_frame_property(_quartic_frame(), 20, rng=RngStream(seed=41))
    assert not bad.verdict
    assert bad.max_deviation > 0.1


# ---------------------------------------------------------------------------
# reconstruction: moment route
# ---------------------------------------------------------------------------


def test_reconstruct_moment_constant_function():
    one = BiDegreePolynomial.constant(3, GaussianRational(1))
    f = FrameFunction(harmonic={(0, 0): one})
    a = reconstruct_moment(f)
    assert np.max(np.abs(a.entries - np.eye(3))) < 1e-14


def test_reconstruct_moment_diagonal_operator():
    f = FrameFunction(operator=np.diag([1.0, 2.0, 3.0]))
    a = reconstruct_moment(f)
    assert np.max(np.abs(a.entries - np.diag([1.0, 2.0, 3.0]))) < 1e-13


def test_reconstruct_moment_exact_rational_entries():
    # rational operators round-trip with exact arithmetic end to end
    rng = np.random.default_rng(20260817)
    for n in (3, 4):
        for _ in range(3):
            re = rng.integers(-100, 100, (n, n))
            im = rng.integers(-100, 100, (n, n))
            entries = [
                [
                    GaussianRational(
                        Fraction(int(re[k][l] + re[l][k]), 200),
                        Fraction(int(im[k][l] - im[l][k]), 200),
                    )
                    for l in range(n)
                ]
                for k in range(n)
            ]
            a = np.array([[complex(c) for c in row] for row in entries])
            poly = BiDegreePolynomial(
                n,
                1,
                1,
                {
                    (
                        tuple(1 if i == l else 0 for i in range(n)),
                        tuple(1 if i == k else 0 for i in range(n)),
                    ): entries[k][l]
                    for k in range(n)
                    for l in range(n)
                    if entries[k][l]
                },
            )
            got = reconstruct_moment(poly)
            assert np.max(np.abs(got.entries - a)) < 1e-12


def test_reconstruct_moment_monte_carlo_within_stderr():
    a = np.diag([1.0, 2.0, 3.0])
    f = FrameFunction(operator=a)
    op, se = reconstruct_moment(f, n_samples=200_000, rng=RngStream(seed=5), return_stderr=True)
    frob = float(np.sqrt(np.sum(np.abs(op.entries - a) ** 2)))
    assert frob <= 4 * se


def test_reconstruct_moment_worker_split_is_deterministic():
    f = FrameFunction(operator=np.eye(3))
    a1 = reconstruct_moment(f, n_samples=10_000, rng=RngStream(seed=6), workers=3)
    a2 = reconstruct_moment(f, n_samples=10_000, rng=RngStream(seed=6), workers=3)
    assert np.array_equal(a1.entries, a2.entries)


def test_reconstruct_moment_stderr_needs_mc_route():
    f = FrameFunction(operator=np.eye(3))
    with pytest.raises(ConfigurationError):
        reconstruct_moment(f, return_stderr=True)


def test_reconstruct_moment_from_samples_least_squares():
    gen = np.random.default_rng(7)
    a = _random_hermitian(3, gen)
    pts = sphere_sample_batch(3, 400, RngStream(seed=8))
    vals = np.einsum("sk,kl,sl->s", np.conj(pts), a, pts)
    f = FrameFunction(samples=(pts, vals))
    got = reconstruct_moment(f)
    assert np.max(np.abs(got.entries - a)) < 1e-10


def test_reconstruct_moment_underdetermined_sample_sets():
    pts = sphere_sample_batch(3, 5, RngStream(seed=9))  # fewer than n^2 = 9
    f = FrameFunction(samples=(pts, np.ones(5)))
    with pytest.raises(UnderdeterminedDataError):
        reconstruct_moment(f)

    # enough rows but rank-deficient: the same point repeated
    pts = np.tile(np.array([[1.0 + 0j, 0, 0]]), (12, 1))
    f = FrameFunction(samples=(pts, np.ones(12)))
    with pytest.raises(UnderdeterminedDataError):
        reconstruct_moment(f)


# ---------------------------------------------------------------------------
# reconstruction: harmonic route
# ---------------------------------------------------------------------------


def test_reconstruct_harmonic_identity():
    one = BiDegreePolynomial.constant(3, GaussianRational(1))
    f = FrameFunction(harmonic={(0, 0): one})
    a = reconstruct_harmonic(f)
    assert np.max(np.abs(a.entries - np.eye(3))) < 1e-14


def test_reconstruct_both_routes_agree_exactly():
    gen = np.random.default_rng(10)
    a = _random_hermitian(4, gen)
    f = FrameFunction(operator=a)
    m_route = reconstruct_moment(f)
    h_route = reconstruct_harmonic(f)
    assert np.max(np.abs(m_route.entries - a)) < 1e-12
    assert np.max(np.abs(h_route.entries - a)) < 1e-12
    assert np.max(np.abs(m_route.entries - h_route.entries)) < 1e-12


def test_reconstruct_harmonic_monte_carlo():
    a = np.diag([0.5, 0.25, 0.25])
    f = FrameFunction(operator=a)
    got = reconstruct_harmonic(f, n_samples=100_000, rng=RngStream(seed=11))
    assert np.max(np.abs(got.entries - a)) < 0.05
    assert abs(np.trace(got.entries) - 1.0) < 0.05


# ---------------------------------------------------------------------------
# residual
# ---------------------------------------------------------------------------


def test_frame_residual_exact_quartic():
    poly = BiDegreePolynomial.monomial(3, (2, 0, 0), (2, 0, 0))
    report = frame_residual(poly, 4, detail=True)
    assert isinstance(report, FrameResidualReport)
    assert report.norm_sq == Fraction(1, 300)
    assert report.components[BiDegree(2, 2)] == Fraction(1, 300)
    others = {j: c for j, c in report.components.items() if j != (2, 2)}
    assert all(c == 0 for c in others.values())
    assert float(report) == pytest.approx(float(np.sqrt(1 / 300)))


def test_frame_residual_zero_for_quadratic_forms():
    # float operator entries keep the quadrature in floats, so the residual
    # is zero only to rounding; an exact-coefficient quadratic form gives 0
    f = FrameFunction(operator=np.diag([1.0, 2.0, 3.0]))
    assert frame_residual(f, 4) < 1e-12

    exact = BiDegreePolynomial(
        3,
        1,
        1,
        {
            ((1, 0, 0), (1, 0, 0)): GaussianRational(1),
            ((0, 1, 0), (0, 1, 0)): GaussianRational(2),
            ((0, 0, 1), (0, 0, 1)): GaussianRational(3),
        },
    )
    report = frame_residual(exact, 4, detail=True)
    assert report.norm_sq == 0
    assert all(c == 0 for c in report.components.values())


def test_frame_residual_parseval_for_injected_component():
    # a pure (2,2) harmonic has residual exactly equal to its own norm
    space = build_basis(3, (2, 2))
    v = space.polys[0]
    report = frame_residual(v, 4, detail=True)
    assert report.norm_sq == space.norms_sq[0]
    assert report.components[BiDegree(2, 2)] == space.norms_sq[0]


def test_frame_residual_monte_carlo_within_stderr():
    poly = BiDegreePolynomial.monomial(3, (2, 0, 0), (2, 0, 0))
    report = frame_residual(poly, 4, n_samples=200_000, rng=RngStream(seed=12), detail=True)
    assert abs(report.norm_sq - 1 / 300) <= 4 * report.stderr


def test_frame_residual_argument_checks():
    poly = BiDegreePolynomial.monomial(3, (1, 0, 0), (1, 0, 0))
    with pytest.raises(ConfigurationError):
        frame_residual(poly, -1)
    with pytest.raises(ConfigurationError):
        frame_residual(poly, 4, n_samples=100)  # missing rng


def test_sample_component_fit_recovers_exact_norms():
    poly = BiDegreePolynomial.monomial(3, (2, 0, 0), (2, 0, 0))
    pts = sphere_sample_batch(3, 400, RngStream(seed=13))
    f = FrameFunction(samples=(pts, poly.evaluate_batch(pts)))
    components, rms = sample_component_fit(f, 4)
    assert components[BiDegree(0, 0)] == pytest.approx(1 / 36, abs=1e-10)
    assert components[BiDegree(1, 1)] == pytest.approx(8 / 225, abs=1e-10)
    assert components[BiDegree(2, 2)] == pytest.approx(1 / 300, abs=1e-10)
    assert rms < 1e-10


def test_sample_component_fit_needs_enough_points():
    pts = sphere_sample_batch(3, 20, RngStream(seed=14))
    f = FrameFunction(samples=(pts, np.ones(20)))
    with pytest.raises(UnderdeterminedDataError):
        sample_component_fit(f, 4)


# ---------------------------------------------------------------------------
# uniqueness / symmetry / additivity
# ---------------------------------------------------------------------------


def test_polarization_detects_equal_and_unequal():
    a = OperatorMatrix(np.diag([1.0, 2.0, 3.0]))
    same = polarization_uniqueness_check(a, OperatorMatrix(np.diag([1.0, 2.0, 3.0])), 64)
    assert bool(same)
    assert same.witness is None

    b = OperatorMatrix(np.diag([1.0, 2.0, 3.5]))
    diff = polarization_uniqueness_check(a, b, 64)
    assert not diff
    assert diff.witness is not None
    assert abs(evaluate_frame(FrameFunction(operator=a), diff.witness)
               - evaluate_frame(FrameFunction(operator=b), diff.witness)) > 1e-6


def test_polarization_flags_subthreshold_operator_gap():
    # values agree to sampling tolerance but the operators differ beyond 1e-8
    a = OperatorMatrix(np.eye(3))
    b = OperatorMatrix(np.eye(3) + np.diag([1e-7, 0, 0]))
    res = polarization_uniqueness_check(a, b, 64)
    assert res.max_value_gap <= 1e-6
    assert not res.equal
    assert res.witness is None


def test_hermitian_check_directions():
    gen = np.random.default_rng(15)
    a = OperatorMatrix(_random_hermitian(3, gen))
    res = hermitian_check(FrameFunction(operator=a), a)
    assert res.real_valued and res.hermitian and bool(res)

    skew = np.zeros((3, 3), dtype=complex)
    skew[0, 1] = 1.0  # not Hermitian: complex values, no constraint
    res = hermitian_check(FrameFunction(operator=OperatorMatrix(skew)), OperatorMatrix(skew))
    assert not res.real_valued
    assert bool(res)

    # real values paired with a non-Hermitian reconstruction: inconsistent
    res = hermitian_check(FrameFunction(operator=a), OperatorMatrix(skew))
    assert res.real_valued and not res.hermitian and not bool(res)


def test_gleason_additivity_for_density_operators():
    maximal = OperatorMatrix(np.eye(3) / 3)
    res = gleason_additivity_check(maximal, 50, RngStream(seed=16))
    assert res.max_error < 1e-10
    assert not res.negative_eigenvalues

    gen = np.random.default_rng(17)
    b = gen.normal(size=(4, 4)) + 1j * gen.normal(size=(4, 4))
    rho = b @ np.conj(b.T)
    rho /= np.trace(rho).real
    res = gleason_additivity_check(OperatorMatrix(rho), 50, RngStream(seed=18))
    assert res.max_error < 1e-10


def test_gleason_additivity_warns_on_negative_eigenvalues():
    t = OperatorMatrix(np.diag([0.8, 0.5, -0.3]))
    with pytest.warns(NegativityWarning):
        res = gleason_additivity_check(t, 10, RngStream(seed=19))
    assert res.negative_eigenvalues == [pytest.approx(-0.3)]
    assert res.max_error < 1e-10  # additivity holds regardless of positivity


def test_gleason_additivity_preconditions():
    skew = np.zeros((3, 3), dtype=complex)
    skew[0, 1] = 1.0
    with pytest.raises(ConfigurationError):
        gleason_additivity_check(OperatorMatrix(skew), 5, RngStream(seed=20))
    with pytest.raises(ConfigurationError):
        gleason_additivity_check(OperatorMatrix(np.eye(3)), 5, RngStream(seed=21))


def test_gleason_report_round_trip():
    report = GleasonReport(
        weight_estimates=[1.0 + 0j, 1.0 + 0j],
        max_deviation=1e-12,
        reconstruction=OperatorMatrix(np.eye(3)),
        residual_l2=0.0,
        additivity_max_error=1e-15,
    )
    d = report.to_dict()
    assert d["weight_estimates"] == [[1.0, 0.0], [1.0, 0.0]]
    assert d["reconstruction"]["n"] == 3
