import itertools
import random

import pytest
import sympy as sp

from schrodclass.equiv import (
    IDENTITY,
    AdmissibleTransform,
    EquivTransform,
    InversionError,
    SubclassEquivTransform,
    TransformError,
    check_superposition,
    compose,
    equiv_generator_action,
    factor_admissible,
    inverse,
    invert_tfunction,
    pushforward,
    symmetry_action,
    transform_gamma,
    transform_potential,
    transform_solution,
)
from schrodclass.lie import D, G, I, M, StructuredField, commutator
from schrodclass.symexpr import is_zero, t, x


def fields_equal(q1, q2):
    return all(is_zero(p) for p in (q1 - q2).params())


def boost(v):
    v = sp.Rational(v)
    return EquivTransform(t, v * t, v**2 * t / 4, 0)


class TestTransformPotential:
    def test_identity(self):
        V = x**2 + sp.I * x
        assert transform_potential(V, IDENTITY) == V

    def test_galilean_boost_preserves_free(self):
        assert is_zero(transform_potential(0, boost(sp.Rational(1, 3))))

    def test_amplitude_change_adds_imaginary_constant(self):
        g = EquivTransform(t, 0, 0, 2 * t)
        assert is_zero(transform_potential(0, g) + 2 * sp.I)

    def test_wigner_reflection_conjugates(self):
        g = EquivTransform(-t, domain_point=0.75)
        V = x**2 + sp.I * x
        assert is_zero(transform_potential(V, g) - (x**2 - sp.I * x))

    def test_harmonic_to_free(self):
        g = EquivTransform(sp.exp(2 * t) / 2, 0, 0, -t / 2)
        assert is_zero(transform_potential(x**2 / 4, g))

    def test_inverted_harmonic_to_free(self):
        # T = tan(t) straightens the repulsive quadratic potential
        g = EquivTransform(
            sp.sin(t) / sp.cos(t), 0, 0, -sp.Rational(1, 4) * sp.log(sp.cos(t) ** -2)
        )
        assert is_zero(transform_potential(-(x**2) / 4, g))

    def test_moving_linear_source_to_quadratic(self):
        b = sp.Rational(2)
        V = sp.I * b * sp.Abs(t) ** sp.Rational(-3, 2) * x
        g = EquivTransform(
            sp.log(t) / 4,
            0,
            0,
            -sp.Rational(1, 4) * sp.log(sp.Rational(1, 4) / t),
            domain_point=2.0,
        )
        expected = x**2 + 8 * sp.I * b * x
        assert is_zero(sp.simplify(transform_potential(V, g) - expected))

    def test_decaying_linear_source_to_elliptic_canonical(self):
        b = sp.Rational(3)
        V = sp.I * b * (t**2 + 1) ** sp.Rational(-3, 2) * x
        g = EquivTransform(
            sp.atan(t), 0, 0, -sp.Rational(1, 4) * sp.log(1 / (t**2 + 1))
        )
        expected = -(x**2) / 4 + sp.I * b * x
        assert is_zero(sp.simplify(transform_potential(V, g) - expected))


class TestTransformSolution:
    def test_identity(self):
        psi = sp.exp(sp.I * x**2 / (4 * t)) / sp.sqrt(t)
        adm = AdmissibleTransform(IDENTITY)
        assert is_zero(transform_solution(adm, psi) - psi)

    def test_boost_multiplier_on_constant(self):
        v = sp.Rational(1, 3)
        adm = AdmissibleTransform(boost(v))
        expected = sp.exp(sp.I * v / 2 * x - sp.I * v**2 / 4 * t)
        assert is_zero(transform_solution(adm, 1) - expected)

    def test_superposition_shift_of_zero(self):
        phi = sp.exp(sp.I * x - sp.I * t)
        adm = AdmissibleTransform(IDENTITY, phi)
        assert is_zero(transform_solution(adm, 0) - phi)

    def test_maps_solutions_to_solutions(self):
        V = x**2 / 4
        psi = sp.exp(-t / 2 + sp.I * x**2 / 4)
        g = EquivTransform(sp.exp(2 * t) / 2, 0, 0, -t / 2)
        target_v = transform_potential(V, g)
        mapped = transform_solution(AdmissibleTransform(g), psi)
        residual = sp.I * sp.diff(mapped, t) + sp.diff(mapped, x, 2) + target_v * mapped
        assert is_zero(residual)

    def test_superposition_check(self):
        assert check_superposition(sp.exp(sp.I * x - sp.I * t), 0)
        assert not check_superposition(sp.exp(sp.I * x + sp.I * t), 0)


class TestGroupStructure:
    def test_compose_with_inverse_is_identity(self):
        g = EquivTransform(2 * t, t, t**2, 3 * t)
        assert compose(g, inverse(g)).is_identity

    def test_shifts_add(self):
        g = compose(EquivTransform(t, 1), EquivTransform(t, 2))
        assert g.X0 == 3 and g.T == t and g.eps == 1

    def test_inverse_of_scaling(self):
        g = inverse(EquivTransform(2 * t))
        assert g.T == t / 2

    def test_potential_round_trips(self):
        rng = random.Random(23)
        times = [2 * t, t + 1, t / 2, 3 * t - 1]
        shifts = [sp.S.Zero, sp.S.One, t, t**2 / 2]
        phases = [sp.S.Zero, t, t**2]
        potentials = [sp.S.Zero, x**2, x ** (-2), sp.I * x, x**3 + t * x]
        for _ in range(20):
            g = EquivTransform(
                rng.choice(times),
                rng.choice(shifts),
                rng.choice(phases),
                rng.choice(phases),
                rng.choice([1, -1]),
            )
            V = rng.choice(potentials)
            there = transform_potential(V, g)
            back = transform_potential(there, inverse(g))
            assert is_zero(sp.simplify(back - V))

    def test_unsupported_inverse_raises(self):
        with pytest.raises(InversionError):
            invert_tfunction(t + sp.exp(t) + sp.sin(t))


class TestPushforward:
    def test_scaling_on_time_translation(self):
        assert fields_equal(pushforward(EquivTransform(2 * t), D(1)), D(2))

    def test_shift_on_space_translation(self):
        expected = G(1) + sp.Rational(1, 2) * M
        assert fields_equal(pushforward(EquivTransform(t, t), G(1)), expected)

    def test_constant_phase_is_trivial(self):
        g = EquivTransform(t, 0, sp.Integer(5))
        assert fields_equal(pushforward(g, D(t**2)), D(t**2))

    def test_phase_on_dilation(self):
        g = EquivTransform(t, 0, t)
        assert fields_equal(pushforward(g, D(t)), D(t) + StructuredField(sigma=t))

    def test_amplitude_on_dilation(self):
        g = EquivTransform(t, 0, 0, t)
        assert fields_equal(pushforward(g, D(t)), D(t) + StructuredField(rho=t))

    def test_time_reparameterization_on_boosts(self):
        # D_*(T) G(chi) = G(T_t^(1/2) chi) re-expressed through the new time
        g = EquivTransform(2 * t)
        out = pushforward(g, G(t))
        assert fields_equal(out, G(sp.sqrt(2) * t / 2))

    def test_bracket_homomorphism(self):
        transforms = [
            EquivTransform(2 * t),
            EquivTransform(t, t**2),
            EquivTransform(t, 0, t),
            EquivTransform(t, 0, 0, t),
        ]
        fields = [D(1), D(t), G(1), G(t), M, I]
        rng = random.Random(31)
        pairs = list(itertools.combinations(fields, 2))
        for g in transforms:
            for q1, q2 in rng.sample(pairs, 6):
                lhs = pushforward(g, commutator(q1, q2))
                rhs = commutator(pushforward(g, q1), pushforward(g, q2))
                assert fields_equal(lhs, rhs)


class TestGeneratorActions:
    def test_constant_phase_acts_trivially(self):
        assert equiv_generator_action("M", 3, x**2 + sp.I * x) == 0

    def test_boost_on_imaginary_linear(self):
        b = sp.Rational(5)
        assert equiv_generator_action("G", 1, sp.I * b * x) == -sp.I * b

    def test_dilation_on_inverse_square(self):
        assert is_zero(equiv_generator_action("D", t, x ** (-2)))

    def test_known_symmetries_act_trivially(self):
        q = D(t**2) - sp.Rational(1, 2) * StructuredField(rho=t)
        assert is_zero(symmetry_action(q, 0))
        assert is_zero(symmetry_action(D(t), x ** (-2)))
        gamma = sp.Integer(4)
        q2 = G(1) - StructuredField(rho=gamma * t)
        assert is_zero(symmetry_action(q2, sp.I * gamma * x))

    def test_corrupted_symmetry_detected(self):
        q = D(t**2)  # missing the -t/2 I correction
        assert not is_zero(symmetry_action(q, 0))


class TestSubclass:
    def test_identity_moebius_fixes_gamma(self):
        g = SubclassEquivTransform()
        gamma = t**2 + 1
        assert is_zero(transform_gamma(gamma, g) - gamma)

    def test_uniform_part_fixes_gamma(self):
        g = SubclassEquivTransform(b0=1, b1=2, c=3 * sp.I)
        assert is_zero(transform_gamma(t, g) - t)

    def test_time_inversion_preserves_decay_shape(self):
        b = sp.Rational(7)
        g = SubclassEquivTransform(a0=-1, a1=0, a2=0, a3=1, domain_point=2.0)
        gamma = b * sp.Abs(t) ** sp.Rational(-3, 2)
        assert is_zero(sp.simplify(transform_gamma(gamma, g) - gamma))

    def test_constant_gamma_under_shift(self):
        g = SubclassEquivTransform(a0=3, a1=1, a2=1, a3=0)
        assert is_zero(transform_gamma(5, g) - 5)

    def test_full_transform_preserves_linear_shape(self):
        # a genuine Moebius map: the transformed potential is again
        # i*gamma~(t)*x with gamma~ given by transform_gamma
        g = SubclassEquivTransform(a0=0, a1=1, a2=1, a3=1)
        gamma = sp.S.One
        full = g.to_equiv(gamma)
        moved = transform_potential(sp.I * gamma * x, full)
        expected = sp.I * transform_gamma(gamma, g) * x
        assert is_zero(sp.simplify(moved - expected))

    def test_determinant_validation(self):
        with pytest.raises(ValueError):
            SubclassEquivTransform(a0=0, a1=2, a2=1, a3=0)

    def test_serialization_roundtrip(self):
        g = SubclassEquivTransform(
            a0=1, a1=2, a2=1, a3=1, b0=sp.Rational(1, 2), b1=3, c=1 + 2 * sp.I, eps=-1
        )
        assert SubclassEquivTransform.from_dict(g.to_dict()) == g


class TestFactorization:
    def test_trivial_phi(self):
        adm = AdmissibleTransform(boost(1), 0)
        sup, equiv_part = factor_admissible(adm, 0)
        assert sup.base.is_identity and sup.Phi == 0
        assert equiv_part == adm.base

    def test_boost_with_constant_phi(self):
        adm = AdmissibleTransform(boost(sp.Rational(1, 2)), 1)
        sup, equiv_part = factor_admissible(adm, 0)
        assert sup.base.is_identity and sup.Phi == 1
        # applying the parts in order reproduces the joint action
        joint = transform_solution(adm, sp.exp(sp.I * x - sp.I * t))
        step1 = transform_solution(sup, sp.exp(sp.I * x - sp.I * t))
        step2 = transform_solution(AdmissibleTransform(equiv_part), step1)
        assert is_zero(sp.simplify(joint - step2))

    def test_identity_base_with_phi(self):
        phi = sp.exp(sp.I * x - sp.I * t)
        adm = AdmissibleTransform(IDENTITY, phi)
        sup, equiv_part = factor_admissible(adm, 0)
        assert equiv_part.is_identity and is_zero(sup.Phi - phi)

    def test_rejects_non_solution_phi(self):
        adm = AdmissibleTransform(IDENTITY, sp.exp(sp.I * x + sp.I * t))
        with pytest.raises(TransformError):
            factor_admissible(adm, 0)


class TestSerialization:
    def test_roundtrip(self):
        g = EquivTransform(2 * t, t, t**2 / 4, -t / 2, -1)
        assert EquivTransform.from_dict(g.to_dict()) == g
