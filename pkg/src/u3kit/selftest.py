"""Quick in-process invariant suites behind `u3kit selftest`.

A curated, fast subset of the property checks: exact pairing bilinearity,
Plancherel and the convolution identity, norm monotonicity and the degree-2
Fourier identity, the von Neumann slack, Bohr size bounds, and the
parallelepiped constraint.  The pytest suite is the full surface; this is a
smoke check for installations.
"""

from __future__ import annotations

import numpy as np

from .fourier import convolve, dft
from .forms import gvn_slack
from .groups import GroupFunction, GroupSpec, pair, parse_group
from .norms import gowers_norm, u2_bias


def _random_bounded(spec: GroupSpec, rng) -> GroupFunction:
    mags = rng.uniform(0, 1, spec.order)
    args = rng.uniform(0, 1, spec.order)
    return GroupFunction(spec, mags * np.exp(2j * np.pi * args))


def run_selftest() -> list[tuple[str, bool]]:
    rng = np.random.default_rng(0)
    out: list[tuple[str, bool]] = []

    spec = parse_group("Z/4xZ/9")
    ok = True
    for _ in range(50):
        xi = spec.dual_by_index(int(rng.integers(spec.order)))
        xj = spec.dual_by_index(int(rng.integers(spec.order)))
        x = spec.element_by_index(int(rng.integers(spec.order)))
        y = spec.element_by_index(int(rng.integers(spec.order)))
        ok &= (pair(xi + xj, x) - pair(xi, x) - pair(xj, x)) % 1 == 0
        ok &= (pair(xi, x + y) - pair(xi, x) - pair(xi, y)) % 1 == 0
    out.append(("pairing bilinearity (exact)", ok))

    spec = parse_group("Z/60")
    f = _random_bounded(spec, rng)
    F = dft(f)
    ok = abs(np.mean(np.abs(f.values) ** 2) - np.sum(np.abs(F.values) ** 2)) < 1e-10
    out.append(("Plancherel identity", bool(ok)))

    g = _random_bounded(spec, rng)
    lhs = dft(convolve(f, g)).values
    rhs = dft(f).values * dft(g).values
    out.append(("convolution identity", bool(np.max(np.abs(lhs - rhs)) < 1e-10)))

    spec = parse_group("Z/31")
    f = _random_bounded(spec, rng)
    u1 = gowers_norm(f, 1).value
    u2 = gowers_norm(f, 2).value
    u3 = gowers_norm(f, 3).value
    out.append(("norm monotonicity U1<=U2<=U3", u1 <= u2 + 1e-9 and u2 <= u3 + 1e-9))
    d2 = gowers_norm(f, 2, method="direct").value
    out.append(("U2 direct vs Fourier", abs(d2 - u2) < 1e-9))
    out.append(("u2 <= U2 <= sqrt(u2)",
                u2_bias(f).value <= u2 + 1e-9 and u2 <= u2_bias(f).value ** 0.5 + 1e-9))

    fs = [_random_bounded(spec, rng) for _ in range(4)]
    out.append(("von Neumann slack >= 0", gvn_slack(fs) >= -1e-9))

    from fractions import Fraction

    from .bohr import bohr_set

    spec = parse_group("Z/97")
    ok = True
    for _ in range(10):
        d = int(rng.integers(1, 4))
        S = [spec.dual_by_index(int(rng.integers(1, spec.order))) for _ in range(d)]
        rho = Fraction(int(rng.integers(5, 40)), 100)
        B = bohr_set(spec, S, rho)
        ok &= len(B) >= float(rho) ** d * spec.order
        ok &= len(B.with_rho(2 * rho)) <= 5**d * len(B)
    out.append(("Bohr size bounds", ok))

    from .nil import FundamentalFactor, NilPoint, NilSystem, hall_petresco_next, point_distance

    ok = True
    for _ in range(50):
        g = FundamentalFactor("heis", alpha=rng.uniform(), beta=rng.uniform(), gamma=rng.uniform())
        x = tuple(rng.uniform(-0.5, 0.5, size=3))
        res = hall_petresco_next([x, g.orbit(x, 1), g.orbit(x, 2)], 4)
        sysm = NilSystem((g,))
        ok &= point_distance(sysm, NilPoint((tuple(res),)), NilPoint((g.orbit(x, 3),))) < 1e-9
    out.append(("parallelepiped constraint k=4", ok))
    return out
