"""Measure-theoretic verification harness.

Exact side: symbolic cylinder measures (products of inverse branch factors),
branch-family measure sums with closed-form tails, and the exact mixing
identity on cylinders.  Monte Carlo side: Birkhoff averages of the digit
observables and invariance checks on random cylinders, with exact rational
accumulation and 4-standard-error tolerances.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .cfsystems import (
    ONE_DIM,
    SystemSpec,
    branch_lft,
    digit_functionals,
    enumerate_branches,
    step,
)
from .errors import (
    ExpansionTerminated,
    IncompatibleWords,
    InsufficientData,
    PrecisionExhausted,
    WordTooShort,
)
from .lft import iota
from .padic_core import (
    INF,
    Ball,
    PrimeCtx,
    ProductCylinder,
    haar_sample_vector,
    measure,
)


@dataclass(frozen=True)
class SymbolicCylinder:
    """The set of points whose first n digits form the given word."""

    system: SystemSpec
    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))
        for d in self.word:
            branch_lft(self.system, d)  # validates

    def __len__(self):
        return len(self.word)


@dataclass(frozen=True)
class StatReport:
    """A Monte Carlo estimate with its uncertainty and the exact target."""

    estimate: float
    stderr: float
    n_samples: int
    n_steps: int
    theoretical: Fraction | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.stderr < 0 or self.n_samples < 1:
            raise ValueError("invalid report")

    def within(self, n_sigma: float = 4.0) -> bool:
        if self.theoretical is None:
            return True
        return abs(self.estimate - float(self.theoretical)) <= n_sigma * self.stderr

    def to_obj(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "theoretical": None if self.theoretical is None else float(self.theoretical),
            "n_samples": self.n_samples,
            "n_steps": self.n_steps,
            "seed": self.seed,
        }


def cylinder_measure(c: SymbolicCylinder) -> Fraction:
    """Product of 1/iota over the letters; 1 for the empty word."""
    out = Fraction(1)
    for d in c.word:
        f = branch_lft(c.system, d)
        out /= iota(f)
    return out


def iota_sum(spec: SystemSpec, iota_bound) -> Fraction:
    """Sum of 1/iota over all branches with iota <= iota_bound.

    Monotone in the bound, always <= 1, and converging to 1 as the bound
    grows; the complement is the exact measure of the omitted branches.
    """
    total = Fraction(0)
    for _, f in enumerate_branches(spec, iota_bound):
        total += 1 / iota(f)
    return total


def iota_sum_closed_form(spec: SystemSpec, iota_bound) -> Fraction:
    """Exact value of iota_sum for one-dimensional systems.

    Branches of pivot valuation d carry total measure (p-1)/p**d, so the sum
    over every complete class included by the bound is 1 - p**-D with D the
    deepest included class.
    """
    if spec.kind != ONE_DIM:
        raise ValueError("closed form available for one-dimensional systems only")
    p = spec.ctx.p
    d = 0
    while True:
        nxt = d + 1
        if spec.ell == INF:
            expo = 2 * nxt
        else:
            expo = max(nxt - spec.ell, 0) + 2 * min(nxt, spec.ell)
        if p**expo > iota_bound:
            break
        d = nxt
    return 1 - Fraction(1, p**d)


def theoretical_digit_means(p: int, ell) -> tuple[Fraction, Fraction]:
    """Almost-everywhere limits of the running means of the digit observables
    a (the subtracted value) and b (the p-exponent)."""
    mean_a = Fraction(p, 2)
    if ell == INF:
        return mean_a, Fraction(0)
    return mean_a, Fraction(p, p**ell * (p - 1))


def _run_sharded(worker, n_samples: int, seed: int, chunk: int, threads: int) -> list:
    """Split a sample budget into fixed-size shards with seeds seed, seed+1, ...

    The shard layout depends only on n_samples, never on the thread count, so
    results are reproducible whether or not the run is parallel.
    """
    jobs = []
    offset = 0
    idx = 0
    while offset < n_samples:
        size = min(chunk, n_samples - offset)
        jobs.append((seed + idx, size))
        offset += size
        idx += 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, jobs))
    return [worker(job) for job in jobs]


def digit_mean_reports(
    spec: SystemSpec,
    n_samples: int,
    n_steps: int,
    seed: int,
    precision: int | None = None,
    threads: int = 1,
) -> tuple[StatReport, StatReport]:
    """Monte Carlo means of both digit observables over Haar-random orbits.

    Every sample is expanded for n_steps (orbits that run out of precision
    contribute the digits they produced).  Both observables are accumulated
    exactly in one pass; floats appear only in the reports.
    """
    if spec.kind != ONE_DIM:
        raise ValueError("digit observables are defined for one-dimensional systems")
    if precision is None:
        precision = 4 * n_steps

    def run_shard(args):
        shard_seed, shard_samples = args
        rng = random.Random(shard_seed)
        tot_a = Fraction(0)
        tot_a_sq = Fraction(0)
        tot_b = 0
        tot_b_sq = 0
        count = 0
        for _ in range(shard_samples):
            x = haar_sample_vector(spec.ctx, 1, precision, rng)[0]
            for _ in range(n_steps):
                try:
                    digit, x = step(spec, x)
                except (PrecisionExhausted, ExpansionTerminated):
                    break
                a, b = digit_functionals(digit)
                tot_a += a
                tot_a_sq += a * a
                tot_b += b
                tot_b_sq += b * b
                count += 1
        return tot_a, tot_a_sq, tot_b, tot_b_sq, count

    results = _run_sharded(run_shard, n_samples, seed, chunk=250, threads=threads)
    count = sum(r[4] for r in results)
    if count < (n_samples * n_steps) // 2:
        raise InsufficientData(
            f"only {count} of {n_samples * n_steps} digit observations completed"
        )
    theo_a, theo_b = theoretical_digit_means(spec.ctx.p, spec.ell)
    reports = []
    for total, total_sq, theo in (
        (sum((r[0] for r in results), Fraction(0)), sum((r[1] for r in results), Fraction(0)), theo_a),
        (Fraction(sum(r[2] for r in results)), Fraction(sum(r[3] for r in results)), theo_b),
    ):
        mean = total / count
        var = total_sq / count - mean * mean
        reports.append(
            StatReport(
                estimate=float(mean),
                stderr=math.sqrt(max(float(var), 0.0) / count),
                n_samples=n_samples,
                n_steps=n_steps,
                theoretical=theo,
                seed=seed,
            )
        )
    return reports[0], reports[1]


def birkhoff_average(
    spec: SystemSpec,
    functional: str,
    n_samples: int,
    n_steps: int,
    seed: int,
    precision: int | None = None,
    threads: int = 1,
) -> StatReport:
    """Monte Carlo mean of one digit observable ('a' or 'b')."""
    if functional not in ("a", "b"):
        raise ValueError("functional must be 'a' or 'b'")
    rep_a, rep_b = digit_mean_reports(
        spec, n_samples, n_steps, seed, precision=precision, threads=threads
    )
    return rep_a if functional == "a" else rep_b


def _cylinder_mc(
    spec: SystemSpec,
    c: ProductCylinder,
    n_samples: int,
    seed: int,
    preimage: bool,
    threads: int = 1,
) -> StatReport:
    if c.m != spec.m:
        raise ValueError("cylinder dimension mismatch")
    precision = max(c.levels) + 48

    def run_shard(args):
        shard_seed, shard_samples = args
        rng = random.Random(shard_seed)
        hits = 0
        done = 0
        for _ in range(shard_samples):
            xs = haar_sample_vector(spec.ctx, spec.m, precision, rng)
            try:
                if preimage:
                    _, img = step(spec, xs if spec.m > 1 else xs[0])
                    point = img if isinstance(img, tuple) else (img,)
                else:
                    point = xs
                inside = c.contains(point)
            except (PrecisionExhausted, ExpansionTerminated):
                continue
            done += 1
            hits += inside
        return hits, done

    results = _run_sharded(run_shard, n_samples, seed, chunk=10_000, threads=threads)
    hits = sum(r[0] for r in results)
    done = sum(r[1] for r in results)
    if done < n_samples // 2:
        raise InsufficientData(f"only {done} of {n_samples} samples completed")
    est = Fraction(hits, done)
    stderr = math.sqrt(float(est * (1 - est)) / done)
    return StatReport(
        estimate=float(est),
        stderr=stderr,
        n_samples=done,
        n_steps=1 if preimage else 0,
        theoretical=measure(c),
        seed=seed,
    )


def invariance_mc(
    spec: SystemSpec, c: ProductCylinder, n_samples: int, seed: int, threads: int = 1
) -> StatReport:
    """Estimate the measure of the inverse image of a cylinder.

    Invariance of Haar measure makes the target equal measure(c), which is
    stored in the report's theoretical field.
    """
    return _cylinder_mc(spec, c, n_samples, seed, preimage=True, threads=threads)


def membership_mc(
    spec: SystemSpec, c: ProductCylinder, n_samples: int, seed: int, threads: int = 1
) -> StatReport:
    """Estimate the measure of a cylinder directly (no dynamics)."""
    return _cylinder_mc(spec, c, n_samples, seed, preimage=False, threads=threads)


@dataclass(frozen=True)
class MixingReport:
    """Both sides of the cylinder mixing identity plus the truncation tail."""

    lhs: Fraction
    rhs: Fraction
    tail_bound: Fraction
    n: int


def mixing_exact(
    A: SymbolicCylinder, B: SymbolicCylinder, n: int, iota_bound=None
) -> MixingReport:
    """Exact correlation of two symbolic cylinders after n iterations.

    The inverse image of A after n steps meets B in the words B-w-A with w of
    length n - len(B), so the correlation factorises as
    measure(B) * S**(n - len(B)) * measure(A) with S the branch measure sum.
    With the complete branch family S = 1 and the identity is exact; with a
    truncated family the defect is bounded by the reported tail.
    """
    if A.system != B.system:
        raise ValueError("cylinders must share one system")
    if n < len(B):
        raise WordTooShort(f"need n >= {len(B)}")
    mu_a = cylinder_measure(A)
    mu_b = cylinder_measure(B)
    rhs = mu_a * mu_b
    middle = n - len(B)
    if iota_bound is None:
        s = Fraction(1)
    else:
        s = iota_sum(A.system, iota_bound)
    lhs = mu_b * s**middle * mu_a
    return MixingReport(lhs=lhs, rhs=rhs, tail_bound=rhs - lhs, n=n)


def conditional_density_check(
    A: SymbolicCylinder, X: SymbolicCylinder, letter
) -> tuple[Fraction, Fraction]:
    """Conditional measure of X inside A, before and after prepending a letter.

    Returns (ratio with the letter prepended to both words, plain ratio);
    the two are equal exactly because the branch factor cancels.
    """
    if A.system != X.system:
        raise ValueError("cylinders must share one system")
    wa, wx = A.word, X.word
    if len(wa) <= len(wx):
        if wx[: len(wa)] != wa:
            raise IncompatibleWords("words are not nested")
        inner = wx
    else:
        if wa[: len(wx)] != wx:
            raise IncompatibleWords("words are not nested")
        inner = wa
    spec = A.system
    plain = cylinder_measure(SymbolicCylinder(spec, inner)) / cylinder_measure(A)
    pre_inner = SymbolicCylinder(spec, (letter,) + inner)
    pre_a = SymbolicCylinder(spec, (letter,) + wa)
    prepended = cylinder_measure(pre_inner) / cylinder_measure(pre_a)
    return prepended, plain


# -- random generators for tests and the CLI ---------------------------------


def random_cylinder(
    rng: random.Random,
    ctx: PrimeCtx,
    m: int,
    max_level: int = 4,
    uniform: bool = False,
) -> ProductCylinder:
    """A random cylinder inside (p*Z_p)^m with canonical ball centers."""
    p = ctx.p
    levels = [rng.randint(1, max_level) for _ in range(m)]
    if uniform:
        levels = [levels[0]] * m
    balls = []
    for lv in levels:
        center = p * rng.randrange(p ** (lv - 1))
        balls.append(Ball(ctx, Fraction(center), lv))
    return ProductCylinder(tuple(balls))


def random_word(
    rng: random.Random, spec: SystemSpec, length: int, iota_bound=None
) -> tuple:
    """A random digit word drawn from the branches within the given bound."""
    if iota_bound is None:
        iota_bound = spec.ctx.p ** 4
    branches = enumerate_branches(spec, iota_bound)
    return tuple(rng.choice(branches)[0] for _ in range(length))
