import numpy as np
import pytest

from u3kit.errors import BudgetExceeded, Has4Ap, NotPrime, TooSmall
from u3kit.experiments import (
    FwSpec,
    IncrementThresholds,
    ap_free_search,
    density_increment_f5,
    fw_counterexample,
    quadratic_correlation_scan,
    smooth_cutoff,
    szemeredi_driver,
)
from u3kit.forms import count_aps
from u3kit.groups import GroupFunction, parse_group


def test_fw_spec():
    assert FwSpec.for_modulus(1009).M == 31
    with pytest.raises(NotPrime):
        FwSpec.for_modulus(1000)
    with pytest.raises(TooSmall):
        FwSpec.for_modulus(101)


def test_fw_center_and_cutoff_boundary():
    f = fw_counterexample(401)
    assert abs(f.values[0] - 1.0) < 1e-12  # f(0) = psi(0)^2 = 1
    # support shape: indices y M + z with both cutoffs nonzero
    M = FwSpec.for_modulus(401).M  # 20
    assert abs(f.values[1]) == smooth_cutoff(0) * smooth_cutoff(1 / M)
    assert np.max(np.abs(f.values)) <= 1.0 + 1e-12
    # exact support check
    expected = set()
    for y in range(-M // 10 - 1, M // 10 + 2):
        for z in range(-M // 10 - 1, M // 10 + 2):
            if smooth_cutoff(y / M) > 0 and smooth_cutoff(z / M) > 0:
                expected.add((y * M + z) % 401)
    got = {i for i, v in enumerate(f.values) if abs(v) > 0}
    assert got == expected


def test_fw_boundary_value_vanishes():
    # at N = 401 with M = 20, psi(2/20) = psi(0.1) = 0
    f = fw_counterexample(401)
    assert f.values[2] == 0


def test_scan_planted_quadratic():
    spec = parse_group("Z/101")
    x = np.arange(101)
    f = GroupFunction(spec, np.exp(2j * np.pi * (3 * x * x + x) / 101))
    res = quadratic_correlation_scan(f, "exhaustive")
    assert res.value > 1 - 1e-9 and (res.a, res.b) == (3, 1)
    res2 = quadratic_correlation_scan(f, "sampled", seed=4, samples=20000)
    assert res2.value > 1 - 1e-9 or (res2.a, res2.b) == (3, 1) or res2.value >= res.value - 0.2


def test_scan_zero_and_budget():
    spec = parse_group("Z/101")
    zero = GroupFunction.constant(spec, 0.0)
    assert quadratic_correlation_scan(zero, "exhaustive").value == 0.0
    big = GroupFunction.constant(parse_group("Z/1009"), 0.0)
    with pytest.raises(BudgetExceeded):
        quadratic_correlation_scan(big, "exhaustive")


def test_scan_consistency_planted(rng):
    # exhaustive and sampled agree on the argmax for planted pure quadratics
    spec = parse_group("Z/101")
    x = np.arange(101)
    for _ in range(3):
        a, b = int(rng.integers(101)), int(rng.integers(101))
        f = GroupFunction(spec, np.exp(2j * np.pi * (a * x * x + b * x) / 101))
        ex = quadratic_correlation_scan(f, "exhaustive")
        assert (ex.a, ex.b) == (a, b)


def test_ap_free_search():
    Z13 = parse_group("Z/13")
    best = ap_free_search(Z13, 4, "exhaustive")
    assert count_aps(Z13, best, 4).proper == 0
    assert len(best) >= 4  # {0,1,2,4} is 4-AP-free
    Z5 = parse_group("Z/5")
    s = ap_free_search(Z5, 4, "greedy", seed=1)
    assert count_aps(Z5, s, 4).proper == 0
    Z1 = parse_group("Z/1")
    assert ap_free_search(Z1, 4, "exhaustive") in ([], [0])
    with pytest.raises(BudgetExceeded):
        ap_free_search(parse_group("Z/101"), 4, "exhaustive")


def test_density_increment_planted_quadric(rng):
    spec = parse_group("F5^3")
    coords = spec.decode(np.arange(125))
    M = np.array([[1, 2, 0], [2, 0, 1], [0, 1, 4]])
    q = (np.einsum("ni,ij,nj->n", coords, M, coords) + coords @ np.array([1, 0, 2])) % 5
    A = [int(i) for i in np.nonzero(q == 0)[0]]
    rep = density_increment_f5(spec, A, IncrementThresholds(force=True))
    assert rep.new_density > rep.old_density
    # densities re-derivable from A and the coset by direct counting
    basis = np.array(rep.coset_basis, dtype=np.int64).reshape(-1, 3)
    base = spec.index_of(list(rep.coset_base))
    in_A = np.zeros(125)
    in_A[A] = 1
    k = basis.shape[0]
    if k:
        grids = np.meshgrid(*[np.arange(5)] * k, indexing="ij")
        t = np.stack([g.reshape(-1) for g in grids], axis=-1)
        pts = spec.add_indices(spec.encode((t @ basis) % 5), np.int64(base))
        assert abs(float(np.mean(in_A[pts])) - rep.new_density) < 1e-12


def test_density_increment_guards():
    spec = parse_group("F5^2")
    with pytest.raises(Has4Ap):
        density_increment_f5(spec, range(25))
    from u3kit.errors import DensityTooLow

    with pytest.raises(DensityTooLow):
        density_increment_f5(spec, [])


def test_driver_terminal_states(rng):
    spec = parse_group("F5^3")
    # random dense set: has a 4-AP immediately
    A = [int(i) for i in np.nonzero(rng.uniform(size=125) < 0.9)[0]]
    trace = szemeredi_driver(spec, A)
    assert trace[-1].outcome == "has-4ap" and trace[-1].depth == 0
    # planted quadric level set: strictly increasing densities until terminal
    coords = spec.decode(np.arange(125))
    M = np.array([[1, 2, 0], [2, 0, 1], [0, 1, 4]])
    q = (np.einsum("ni,ij,nj->n", coords, M, coords)) % 5
    A2 = [int(i) for i in np.nonzero(q == 0)[0]]
    # remove the 4-APs greedily to satisfy the driver precondition
    A2free = []
    for x in A2:
        if count_aps(spec, A2free + [x], 4).proper == 0:
            A2free.append(x)
    trace = szemeredi_driver(spec, A2free)
    densities = [s.density for s in trace]
    assert all(b >= a - 1e-12 for a, b in zip(densities, densities[1:]))
    assert trace[-1].outcome in ("has-4ap", "full-density", "dimension-floor", "pipeline-empty")
