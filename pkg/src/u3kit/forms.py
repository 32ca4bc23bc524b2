"""The k-linear progression-counting form, AP detection, and the
von Neumann / lack-of-progressions inequalities as executable checks.

Lambda_k(f_0,...,f_{k-1}) = E_{x,r} f_0(x) f_1(x+r) ... f_{k-1}(x+(k-1)r)
is evaluated by a direct O(N^2) double loop (vectorized over x, looped over
r) rather than through convolutions: at desk scale this is fast and avoids
transform error in a quantity that other tests use as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, gcd

import numpy as np

from .errors import BadGroupOrder, HasProperAp, TooSmallN
from .groups import GroupFunction, GroupSpec
from .norms import gowers_norm


@dataclass
class ApCount:
    total: int  # (x, r) pairs including r = 0
    proper: int  # r != 0 and k distinct values
    k: int
    gcd_warning: bool = False

    def to_json(self) -> dict:
        return {"total": self.total, "proper": self.proper, "k": self.k,
                "gcd_warning": self.gcd_warning}


def _gcd_condition(spec: GroupSpec, k: int) -> bool:
    return gcd(spec.order, factorial(k - 1)) == 1


def lambda_k(fs: list[GroupFunction]) -> complex:
    """E_{x,r} prod_j T^{jr} f_j(x) for k = len(fs) in {3,4,5}."""
    k = len(fs)
    if k not in (3, 4, 5):
        raise ValueError("k must be 3, 4 or 5")
    spec = fs[0].owner
    for f in fs:
        if f.owner.orders != spec.orders:
            from .errors import SpecMismatch

            raise SpecMismatch("lambda_k operands on different groups")
    N = spec.order
    xs = np.arange(N, dtype=np.int64)
    total = 0j
    for r in range(N):
        prod = fs[0].values.copy()
        for j in range(1, k):
            idx = spec.add_indices(xs, spec.scale_indices(j, np.int64(r)))
            prod = prod * fs[j].values[idx]
        total += np.sum(prod)
    return complex(total) / (N * N)


def count_aps(spec: GroupSpec, A, k: int) -> ApCount:
    """Progression counts in A: total includes r = 0; proper requires r != 0
    and, when gcd(N,(k-1)!) > 1, additionally k distinct values."""
    A_idx = sorted(set(int(a) for a in A))
    ind = np.zeros(spec.order, dtype=np.int64)
    ind[A_idx] = 1
    N = spec.order
    xs = np.arange(N, dtype=np.int64)
    total = 0
    proper = 0
    warn = not _gcd_condition(spec, k)
    for r in range(N):
        prod = ind.copy()
        steps = [0]
        for j in range(1, k):
            idx = spec.add_indices(xs, spec.scale_indices(j, np.int64(r)))
            prod = prod * ind[idx]
            steps.append(int(spec.scale_indices(j, np.int64(r))))
        c = int(np.sum(prod))
        total += c
        if r != 0 and len(set(steps)) == k:
            proper += c
    return ApCount(total=total, proper=proper, k=k, gcd_warning=warn)


def gvn_slack(fs: list[GroupFunction], unchecked: bool = False) -> float:
    """min_j ||f_j||_{U^{k-1}} - |Lambda_k(fs)|; nonnegative (within 1e-9)
    whenever gcd(N, (k-1)!) = 1 and all functions are bounded."""
    k = len(fs)
    spec = fs[0].owner
    if not _gcd_condition(spec, k):
        raise BadGroupOrder(f"need gcd(N, {k - 1}!) = 1")
    norms = [gowers_norm(f, k - 1, unchecked=unchecked).value for f in fs]
    return min(norms) - abs(lambda_k(fs))


@dataclass
class ProgUnifReport:
    slack: float
    norm: float
    bound: float
    alpha: float
    n_hypothesis_ok: bool  # N >= 2 / alpha^{k-1}
    gcd_warning: bool


def prog_unif_slack(spec: GroupSpec, A, k: int = 4, enforce_n_bound: bool = False) -> ProgUnifReport:
    """Slack of ||1_A - alpha||_{U^{k-1}} >= 2^{-k-1} alpha^{k-1} for a
    nonempty A with no proper k-term progression.

    The size hypothesis N >= 2/alpha^{k-1} is surfaced in the report (and
    enforced only on request): at desk scale it routinely fails while the
    displayed inequality still holds with a wide margin.
    """
    A_idx = sorted(set(int(a) for a in A))
    if not A_idx:
        raise TooSmallN("A must be nonempty")
    counts = count_aps(spec, A_idx, k)
    if counts.proper > 0:
        raise HasProperAp(f"A contains {counts.proper} proper {k}-APs")
    alpha = len(A_idx) / spec.order
    n_ok = spec.order >= 2.0 / alpha ** (k - 1)
    if enforce_n_bound and not n_ok:
        raise TooSmallN(f"N = {spec.order} < 2/alpha^{k - 1}")
    ind = GroupFunction.indicator(spec, A_idx)
    f = GroupFunction(spec, ind.values - alpha)
    norm = gowers_norm(f, k - 1, unchecked=True).value
    bound = 2.0 ** (-k - 1) * alpha ** (k - 1)
    return ProgUnifReport(
        slack=norm - bound,
        norm=norm,
        bound=bound,
        alpha=alpha,
        n_hypothesis_ok=n_ok,
        gcd_warning=counts.gcd_warning,
    )
