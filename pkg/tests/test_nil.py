from fractions import Fraction

import numpy as np
import pytest

from u3kit.errors import BadArity, EvenN, NotInSigma, TooManyFrequencies
from u3kit.groups import parse_group
from u3kit.nil import (
    CANONICAL_CUTOFF,
    FundamentalFactor,
    NilPoint,
    NilSystem,
    bracket_to_nilsystem,
    bracket_weight,
    delta_atom,
    hall_petresco_next,
    lipschitz_slack,
    nil_frac,
    nilsequence,
    nilsequence_obstruction_check,
    orbit_point,
    per_term_blocks,
    point_distance,
    step_point,
)
from u3kit.norms import gowers_norm
from u3kit.quadratic import BracketQuadratic


def test_orbit_examples():
    sk = FundamentalFactor("skew", alpha=0.3, beta=0.0, m=1)
    x, y = sk.orbit((0, 0), 2)
    assert abs(nil_frac(x - 0.6)) < 1e-12 and abs(nil_frac(y - 0.9)) < 1e-12
    sysm = NilSystem((sk,))
    assert orbit_point(sysm, sysm.zero_point(), 0) == sysm.zero_point()
    circ = FundamentalFactor("circle", alpha=3 / 101)
    seq = [circ.orbit((0,), n)[0] for n in range(5)]
    assert all(abs(nil_frac(v - 3 * n / 101)) < 1e-12 for n, v in enumerate(seq))


def test_heis_closed_form_vs_iterate(rng):
    for _ in range(5):
        h = FundamentalFactor(
            "heis", alpha=rng.uniform(), beta=rng.uniform(), gamma=rng.uniform()
        )
        sysm = NilSystem((h,))
        x0 = NilPoint((tuple(rng.uniform(-0.5, 0.5, 3)),))
        cur = x0
        for n in range(1, 1001):
            cur = step_point(sysm, cur)
            if n % 97 == 0:
                assert point_distance(sysm, cur, orbit_point(sysm, x0, n)) < 1e-9
        assert point_distance(sysm, cur, orbit_point(sysm, x0, 1000)) < 1e-9


def test_orbit_homomorphism(rng):
    h = FundamentalFactor("heis", alpha=0.31, beta=0.05, gamma=0.73)
    sk = FundamentalFactor("skew", alpha=0.41, beta=0.13, m=2)
    sysm = NilSystem((h, sk))
    x0 = NilPoint((tuple(rng.uniform(-0.5, 0.5, 3)), tuple(rng.uniform(-0.5, 0.5, 2))))
    for _ in range(20):
        n, m = int(rng.integers(-1000, 1000)), int(rng.integers(-1000, 1000))
        a = orbit_point(sysm, orbit_point(sysm, x0, n), m)
        b = orbit_point(sysm, x0, n + m)
        assert point_distance(sysm, a, b) < 1e-9


def test_nilsequence_basics():
    circ = FundamentalFactor("circle", alpha=3 / 101)
    sysm = NilSystem((circ,))
    from u3kit.nil import BlockFunction, NilFunction, e

    F = NilFunction(sysm, [BlockFunction(0, 1, lambda x: e(x), 2 * np.pi)], 2 * np.pi)
    seq = nilsequence(F, sysm, sysm.zero_point(), 101)
    expect = np.exp(2j * np.pi * 3 * np.arange(101) / 101)
    assert np.max(np.abs(seq.values - expect)) < 1e-9
    ones = NilFunction(sysm, [], 0.0)
    seq1 = nilsequence(ones, sysm, sysm.zero_point(), 7)
    assert np.allclose(seq1.values, 1.0)
    with pytest.raises(EvenN):
        nilsequence(F, sysm, sysm.zero_point(), 100)


def test_skew_generates_pure_square_phase():
    # the block used for e(q a g n^2): skew with parameters (1, -qag; 2qag)
    q, a, g = 3, 17 / 101, 23 / 101
    sk = FundamentalFactor("skew", alpha=2 * q * a * g, beta=-q * a * g, m=1)
    for n in range(-50, 51):
        _, y = sk.orbit((0.0, 0.0), n)
        expect = q * a * g * n * n
        assert abs(nil_frac(y - expect)) < 1e-9


def test_bracket_factorization_identity_exact():
    # q {an}{gn} = q a g n^2 - q a n [gn] - q g n [an] mod 1, exactly
    N = 101
    for q in (1, 2, 5):
        for xi, xj in ((1, 2), (17, 23)):
            a, g = Fraction(xi, N), Fraction(xj, N)
            for n in range(-50, 51):
                lhs = (q * (a * n - round(a * n)) * 0 + q * _fr(a * n) * _fr(g * n)) % 1
                rhs = (q * a * g * n * n - q * a * n * _ip(g * n) - q * g * n * _ip(a * n)) % 1
                assert lhs == rhs


def _fr(t: Fraction) -> Fraction:
    from u3kit.quadratic import frac_part

    return frac_part(t)


def _ip(t: Fraction):
    from u3kit.quadratic import round_half_up

    return round_half_up(t)


def test_bracket_to_nilsystem_pointwise(rng):
    N = 101
    for trial in range(6):
        s = int(rng.integers(1, 3))
        freqs = tuple(sorted(rng.choice(np.arange(1, N), size=s, replace=False).tolist()))
        quad = np.zeros((s, s))
        for i in range(s):
            for j in range(i, s):
                quad[i, j] = quad[j, i] = rng.uniform(-3, 3)
        lin = rng.uniform(-3, 3, size=s)
        bq = BracketQuadratic(N, freqs, tuple(map(tuple, quad)), tuple(lin))
        sysm, F, x0 = bracket_to_nilsystem(bq)
        w = bracket_weight(bq)
        for n in range(-(N // 2), N // 2 + 1):
            gen = F(orbit_point(sysm, x0, n))
            tgt = w(n) * np.exp(-2j * np.pi * float(bq.eval(n)))
            assert abs(gen - tgt) < 1e-9
        for dim, K in per_term_blocks(bq):
            assert dim <= 9 and K <= 50


def test_bracket_single_linear_term():
    N = 101
    bq = BracketQuadratic(N, (7,), ((0.0,),), (1.75,))
    sysm, F, x0 = bracket_to_nilsystem(bq)
    assert sysm.dimension == 2
    chi = CANONICAL_CUTOFF
    for n in range(-50, 51):
        gen = F(orbit_point(sysm, x0, n))
        tgt = chi(7 * n / N) * np.exp(-2j * np.pi * float(bq.eval(n)))
        assert abs(gen - tgt) < 1e-9


def test_bracket_zero_and_frequency_cap():
    bq0 = BracketQuadratic(101, (1,), ((0.0,),), (0.0,))
    sysm, F, x0 = bracket_to_nilsystem(bq0)
    assert sysm.dimension == 0  # no active terms: trivial system
    assert abs(F(x0) - 1.0) < 1e-12
    too_many = BracketQuadratic(
        101, (1, 2, 3, 4, 5), tuple(tuple(0.0 for _ in range(5)) for _ in range(5)),
        tuple(0.0 for _ in range(5)),
    )
    with pytest.raises(TooManyFrequencies):
        bracket_to_nilsystem(too_many)


def test_hall_petresco_k3():
    assert abs(nil_frac(hall_petresco_next([0.1, 0.4], 3) - 0.7)) < 1e-12
    with pytest.raises(BadArity):
        hall_petresco_next([0.1], 3)


def test_hall_petresco_k4(rng):
    worst = 0.0
    for _ in range(1000):
        g = FundamentalFactor(
            "heis", alpha=rng.uniform(), beta=rng.uniform(), gamma=rng.uniform()
        )
        x = tuple(rng.uniform(-0.5, 0.5, 3))
        res = hall_petresco_next([x, g.orbit(x, 1), g.orbit(x, 2)], 4)
        sysm = NilSystem((g,))
        worst = max(
            worst, point_distance(sysm, NilPoint((tuple(res),)), NilPoint((g.orbit(x, 3),)))
        )
    assert worst < 1e-9


def test_hall_petresco_membership_violation(rng):
    g = FundamentalFactor("heis", alpha=0.31, beta=0.21, gamma=0.47)
    x = (0.1, 0.0, 0.2)
    pts = [x, g.orbit(x, 1), list(g.orbit(x, 2))]
    pts[2][0] = nil_frac(pts[2][0] + 0.1)  # perturb a constrained coordinate
    with pytest.raises(NotInSigma):
        hall_petresco_next(pts, 4)


def test_delta_atoms():
    h = FundamentalFactor("heis", alpha=0.1, beta=0.1, gamma=0.1)
    sysm = NilSystem((h,))
    zero = sysm.zero_point()
    assert delta_atom(sysm, zero, 10) == (5, 5, 5)
    p1 = NilPoint(((0.101, 0.202, -0.303),))
    p2 = NilPoint(((0.109, 0.209, -0.301),))
    assert delta_atom(sysm, p1, 10) == delta_atom(sysm, p2, 10)
    # boundary identification: x = -1/2 matches its image at x = +1/2
    pa = NilPoint(((-0.5, 0.2, 0.3),))
    pb = NilPoint(((0.5, 0.2 + 0.3, 0.3),))
    assert delta_atom(sysm, pa, 10) == delta_atom(sysm, pb, 10)


def test_lipschitz_slack(rng):
    circ = FundamentalFactor("circle", alpha=0.3)
    sysm = NilSystem((circ,))
    from u3kit.nil import BlockFunction, NilFunction, e

    const = NilFunction(sysm, [BlockFunction(0, 1, lambda x: 1.0, 0.0)], 0.0)
    assert abs(lipschitz_slack(const, 5.0, 10) - 0.5) < 1e-12
    Fe = NilFunction(sysm, [BlockFunction(0, 1, lambda x: e(x), 2 * np.pi)], 2 * np.pi)
    assert lipschitz_slack(Fe, 2 * np.pi, 16, samples=2000, seed=1) >= -1e-9
    # tensor of two factors declared at the summed constant
    sys2 = NilSystem((circ, FundamentalFactor("circle", alpha=0.7)))
    F2 = NilFunction(
        sys2,
        [BlockFunction(0, 1, lambda x: e(x), 2 * np.pi), BlockFunction(1, 1, lambda x: e(x), 2 * np.pi)],
        4 * np.pi,
    )
    assert lipschitz_slack(F2, 4 * np.pi, 16, samples=2000, seed=2) >= -1e-9


def test_obstruction_check_self_correlation():
    N = 101
    bq = BracketQuadratic(N, (17,), ((1.3,),), (0.4,))
    sysm, F, x0 = bracket_to_nilsystem(bq)
    seq = nilsequence(F, sysm, x0, N)
    corr, u3 = nilsequence_obstruction_check(seq, F, sysm, x0)
    mass = float(np.mean(np.abs(seq.values) ** 2))
    assert abs(corr - mass) < 1e-9  # f = the sequence itself
    assert u3 > 0.1


def test_tgnx_stability(rng):
    # fixed system and function; U3 of the truncation stays >= 0.1 and moves
    # by < 20% relative across N
    bqparams = (0.41421356, 0.2, 0.61803399)
    h = FundamentalFactor("heis", alpha=bqparams[0], beta=bqparams[1], gamma=bqparams[2])
    sysm = NilSystem((h,))
    from u3kit.nil import BlockFunction, NilFunction, e

    chi = CANONICAL_CUTOFF
    F = NilFunction(
        sysm,
        [BlockFunction(0, 1, lambda x, y, z: chi(x) * e(y), chi.max_slope + 2 * np.pi)],
        chi.max_slope + 2 * np.pi,
    )
    vals = []
    for N in (101, 211, 401, 809):
        f = nilsequence(F, sysm, sysm.zero_point(), N)
        vals.append(gowers_norm(f, 3, unchecked=True).value)
    assert min(vals) >= 0.1
    assert (max(vals) - min(vals)) / max(vals) < 0.2
