"""Factorisation of a summable sequence as (summable) x (null sequence).

Given ``a`` with ``A = sum |a_n|``, let ``k_j`` be the first index whose
partial sum of ``|a_n|`` reaches ``(6A/pi^2) sum_{n<=j} 1/n^2``.  The
distinct values of the ladder ``k_j`` mark blocks; ``s_1 < s_2 < ...`` are
the first j attaining each of them.  On block ``k_{s_j} + 1 <= n <=
k_{s_{j+1}}`` the multiplier is ``lambda_n = sqrt(s_j + 1)``, and

    b_n = a_n lambda_n,    c_n = 1 / lambda_n,

so ``b_n c_n = a_n`` while ``c_n`` decreases to 0 and ``sum |b_n|`` stays
below ``sum_{n <= k_{s_1}} |a_n| + (12A/pi^2) zeta(3/2)``.

Partial sums are compared through their tails ``R_k = sum_{n>k} |a_n|``
against ``(6A/pi^2) psi'(j+1)`` (``psi'`` the trigamma function, equal to
``sum_{n>j} 1/n^2``), which avoids cancellation when both sides are close
to A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import polygamma, zeta

# The ladder stops once s_j passes this value; sqrt(s+1) stays exact enough
# and psi'(s+1) ~ 1/s is still resolved in double precision.
S_CAP = 1 << 53
SIX_OVER_PI2 = 6.0 / math.pi**2


@dataclass(frozen=True)
class SummableSeq:
    """Finite prefix ``a_1, ..., a_N``; every later entry is zero."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        arr = arr.astype(complex if np.iscomplexobj(arr) else float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("sequence entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    @property
    def total(self) -> float:
        """``A = sum |a_n|`` with compensated summation."""
        return math.fsum(np.abs(self.values))


def tail_sums(a: np.ndarray) -> np.ndarray:
    """``R[k] = sum_{n > k} |a_n|`` for k = 0..N, compensated (Kahan) from the end."""
    mags = np.abs(np.asarray(a))
    R = np.zeros(mags.size + 1)
    s, comp = 0.0, 0.0
    for i in range(mags.size - 1, -1, -1):
        y = mags[i] - comp
        t = s + y
        comp = (t - s) - y
        s = t
        R[i] = s
    return R


def _threshold(A: float, j) -> np.ndarray:
    """``(6A/pi^2) sum_{n > j} 1/n^2``."""
    return SIX_OVER_PI2 * A * polygamma(1, np.asarray(j, dtype=float) + 1.0)


def ladder_index(R: np.ndarray, A: float, j: int) -> int:
    """``k_j = min{k : R_k <= (6A/pi^2) psi'(j+1)}`` (0-based tail index, so k counts terms)."""
    t = float(_threshold(A, j))
    # R is non-increasing; find the first k with R[k] <= t.
    return int(np.searchsorted(-R, -t, side="left"))


def _next_s(A: float, tail: float, table: np.ndarray | None = None) -> int:
    """Smallest j with ``(6A/pi^2) psi'(j+1) < tail``, or ``S_CAP + 1`` if beyond the cap.

    ``table[j]`` may hold precomputed thresholds for small j.
    """
    if table is not None and table[-1] < tail:
        return int(np.searchsorted(-table, -tail, side="right"))
    if float(_threshold(A, S_CAP)) >= tail:
        return S_CAP + 1
    # psi'(j+1) ~ 1/(j+1/2), so the answer is near (6A/pi^2)/tail; gallop out from there.
    guess = max(int(SIX_OVER_PI2 * A / tail), 1)
    step = 1
    if float(_threshold(A, guess)) < tail:
        hi = guess
        while hi - step > 0 and float(_threshold(A, hi - step)) < tail:
            hi, step = hi - step, step * 2
        lo = max(hi - step, 0)
    else:
        lo = guess
        while float(_threshold(A, lo + step)) >= tail:
            lo, step = lo + step, step * 2
        hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if float(_threshold(A, mid)) < tail:
            hi = mid
        else:
            lo = mid
    return hi if float(_threshold(A, lo)) >= tail else lo


@dataclass
class FactorizationResult:
    b: np.ndarray
    c: np.ndarray
    lam: np.ndarray
    s: list
    breakpoints: list
    total: float
    truncated: bool = False
    notes: list = field(default_factory=list)

    def blocks(self) -> list:
        """``(j, s_j, start, stop)`` for non-empty blocks, 1-based inclusive ranges ``k_{s_j}+1 .. k_{s_{j+1}}``."""
        N = self.b.size
        out = []
        for i, (s, k) in enumerate(zip(self.s, self.breakpoints)):
            stop = self.breakpoints[i + 1] if i + 1 < len(self.breakpoints) else N
            if stop > k:
                out.append((i, s, k + 1, stop))
        return out

    def to_json(self) -> dict:
        def enc(x):
            x = np.asarray(x)
            if np.iscomplexobj(x):
                return [[float(v.real), float(v.imag)] for v in x]
            return [float(v) for v in x]

        return {"b": enc(self.b), "c": enc(self.c), "s": [int(s) for s in self.s],
                "breakpoints": [int(k) for k in self.breakpoints], "truncated": self.truncated,
                "notes": list(self.notes)}


def factorize_l1(a) -> FactorizationResult:
    """Construct ``a = b c`` with b summable and c decreasing to 0 along blocks.

    The ladder runs over the finite prefix until every index is covered; the
    last (partial) block keeps ``lambda = sqrt(s_J + 1)``.  Indices up to
    ``k_{s_1}`` get ``lambda = 1``.
    """
    seq = a if isinstance(a, SummableSeq) else SummableSeq(a)
    x = seq.values
    N = x.size
    lam = np.ones(N)
    A = seq.total
    if A == 0:
        return FactorizationResult(x.copy(), np.ones(N), lam, [], [], 0.0,
                                   notes=["zero sequence: trivial factorisation"])
    R = tail_sums(x)
    table = _threshold(A, np.arange(min(max(4 * N, 1024), 1 << 22)))
    s_list, k_list = [], []
    s = 1
    truncated = False
    while True:
        t = table[s] if s < table.size else float(_threshold(A, s))
        k = int(np.searchsorted(-R, -t, side="left"))
        s_list.append(s)
        k_list.append(k)
        if k >= N or R[k] == 0:
            break
        nxt = _next_s(A, float(R[k]), table)
        if nxt > S_CAP:
            truncated = True
            break
        s = nxt
    notes = []
    for i, (sj, kj) in enumerate(zip(s_list, k_list)):
        stop = k_list[i + 1] if i + 1 < len(k_list) else N
        lam[kj:stop] = math.sqrt(sj + 1)
    if k_list and k_list[-1] < N:
        notes.append("finite prefix: the final block runs to N with lambda = sqrt(s_J + 1)")
    if truncated:
        notes.append(f"ladder stopped at s > {S_CAP}")
    b = x * lam
    c = 1.0 / lam
    return FactorizationResult(b, c, lam, s_list, k_list, A, truncated, notes)


@dataclass
class CheckReport:
    name: str
    passed: bool
    detail: str = ""
    block: int | None = None

    def to_json(self) -> dict:
        return {"passed": self.passed, "detail": self.detail, "block": self.block}


def verify_factorization(a, result: FactorizationResult) -> dict:
    """Check the four properties of the construction.

    (i) ``b_n c_n = a_n`` to relative 1e-15; (ii) c block-constant and
    strictly decreasing across blocks with value ``1/sqrt(s_j + 1)``;
    (iii) the mass of block j is at most ``(6A/pi^2) sum_{s_j < n <= s_{j+2}} 1/n^2``
    (``s_{j+2} = inf`` past the last block); (iv) ``sum |b| <= sum_{n <= k_{s_1}} |a_n|
    + (12A/pi^2) zeta(3/2)``.  Returns ``{name: CheckReport}``.
    """
    seq = a if isinstance(a, SummableSeq) else SummableSeq(a)
    x = seq.values
    A = seq.total
    checks = {}

    err = np.abs(result.b * result.c - x)
    rel = err / np.maximum(np.abs(x), 1e-300)
    bad = np.flatnonzero((rel > 1e-15) & (err > 0))
    checks["reconstruction"] = CheckReport(
        "reconstruction", bad.size == 0,
        f"max relative error {float(rel.max(initial=0.0)):.3g}"
        + (f" first at n={int(bad[0]) + 1}" if bad.size else ""),
    )

    blocks = result.blocks()
    ok, detail, where = True, "", None
    head = result.breakpoints[0] if result.breakpoints else x.size
    if np.any(result.c[:head] != 1.0):
        ok, detail, where = False, "head entries must carry c = 1", 0
    prev = 1.0 if head > 0 else math.inf
    for j, sj, start, stop in blocks:
        vals = result.c[start - 1 : stop]
        expect = 1.0 / math.sqrt(sj + 1)
        if not ok:
            break
        if np.any(vals != vals[0]) or abs(vals[0] - expect) > 1e-15 * expect:
            ok, detail, where = False, f"block {j} is not constant at 1/sqrt(s+1)={expect:.17g}", j
        elif not vals[0] < prev:
            ok, detail, where = False, f"block {j} does not decrease from {prev:.17g}", j
        prev = vals[0]
    checks["monotone"] = CheckReport("monotone", ok, detail or f"{len(blocks)} blocks", where)

    ok, detail, where = True, "", None
    mags = np.abs(x)
    trig = polygamma(1, np.asarray(result.s, dtype=float) + 1.0)
    for j, sj, start, stop in blocks:
        mass = math.fsum(mags[start - 1 : stop])
        bound_tail = float(trig[j]) - (float(trig[j + 2]) if j + 2 < len(result.s) else 0.0)
        bound = SIX_OVER_PI2 * A * bound_tail
        if mass > bound * (1 + 1e-12):
            ok, detail, where = False, f"block {j} (n={start}..{stop}) mass {mass:.17g} > {bound:.17g}", j
            break
    checks["block_bound"] = CheckReport("block_bound", ok, detail or "all blocks within bound", where)

    head_mass = math.fsum(mags[:head])
    total_b = math.fsum(np.abs(result.b))
    bound = head_mass + 2 * SIX_OVER_PI2 * A * float(zeta(1.5))
    checks["tail_bound"] = CheckReport(
        "tail_bound", total_b <= bound * (1 + 1e-12),
        f"sum|b| = {total_b:.17g}, bound = {bound:.17g}",
    )
    return checks


def all_passed(checks: dict) -> bool:
    return all(r.passed for r in checks.values())


def corrupt(result: FactorizationResult, block: int = 0) -> FactorizationResult:
    """Negative control: halve lambda (and so b, but not c) on the given block with nonzero mass."""
    blocks = [blk for blk in result.blocks() if np.any(result.b[blk[2] - 1 : blk[3]] != 0)]
    if not blocks:
        raise ValueError("no block with nonzero entries to corrupt")
    _, _, start, stop = blocks[min(block, len(blocks) - 1)]
    lam = result.lam.copy()
    lam[start - 1 : stop] *= 0.5
    b = result.b.copy()
    b[start - 1 : stop] *= 0.5
    return FactorizationResult(b, result.c.copy(), lam, list(result.s), list(result.breakpoints),
                               result.total, result.truncated, list(result.notes))
