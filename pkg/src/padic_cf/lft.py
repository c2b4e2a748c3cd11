"""m-dimensional linear fractional transformations.

A branch of a continued fraction algorithm is the map

    y_k = p_k / x_i - q_k                 for k = s,
    y_k = p_k * x_{sigma(k)} / x_i - q_k  otherwise,

with parameter (i, sigma, p-vector, q-vector) and s = sigma^{-1}(i).  The
hyperbolicity conditions force the inverse branch to contract (p*Z_p)^m by a
factor 1/p, and give it a constant Jacobian with respect to Haar measure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionByZeroAtPrecision, NotHyperbolicError, PrecisionExhausted
from .padic_core import (
    INF,
    Ball,
    PadicApprox,
    PrimeCtx,
    ProductCylinder,
    format_rational,
    measure,
    parse_rational,
    valuation,
)


@dataclass(frozen=True)
class LftParams:
    """Parameter (i, sigma, pvec, qvec) of one m-dimensional branch.

    sigma is stored as a tuple with sigma[k-1] = sigma(k), indices 1-based.
    """

    ctx: PrimeCtx
    m: int
    i: int
    sigma: tuple[int, ...]
    pvec: tuple[Fraction, ...]
    qvec: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(self.sigma))
        object.__setattr__(self, "pvec", tuple(Fraction(v) for v in self.pvec))
        object.__setattr__(self, "qvec", tuple(Fraction(v) for v in self.qvec))
        if self.m < 1 or not (1 <= self.i <= self.m):
            raise ValueError("need m >= 1 and 1 <= i <= m")
        if sorted(self.sigma) != list(range(1, self.m + 1)):
            raise ValueError("sigma must be a permutation of 1..m")
        if len(self.pvec) != self.m or len(self.qvec) != self.m:
            raise ValueError("pvec and qvec must have length m")
        if any(v == 0 for v in self.pvec):
            raise ValueError("pvec entries must be nonzero")

    @property
    def s(self) -> int:
        """sigma^{-1}(i), the coordinate whose image carries 1/x_i alone."""
        return self.sigma.index(self.i) + 1

    def sigma_inv(self, k: int) -> int:
        return self.sigma.index(k) + 1

    def to_obj(self) -> dict:
        return {
            "m": self.m,
            "i": self.i,
            "sigma": list(self.sigma),
            "p": [format_rational(v) for v in self.pvec],
            "q": [format_rational(v) for v in self.qvec],
        }

    @classmethod
    def from_obj(cls, obj: dict, ctx: PrimeCtx) -> "LftParams":
        return cls(
            ctx,
            int(obj["m"]),
            int(obj["i"]),
            tuple(int(v) for v in obj["sigma"]),
            tuple(parse_rational(v) for v in obj["p"]),
            tuple(parse_rational(v) for v in obj["q"]),
        )


@dataclass(frozen=True)
class HyperbolicCert:
    """Derived constants of a hyperbolic branch: u = -ord(q_s), v = ord(p_s),
    h = max_k(ord(p_s) - ord(p_k))."""

    u: int
    v: int
    h: int

    def __post_init__(self):
        if self.v + self.u <= 0:
            raise ValueError("hyperbolicity requires v + u > 0")
        if self.h < 0:
            raise ValueError("h must be >= 0")


def certify_hyperbolic(f: LftParams) -> HyperbolicCert:
    """Check the four hyperbolicity conditions; raise NotHyperbolicError with
    the failing condition number otherwise."""
    ctx = f.ctx
    pord = [valuation(v, ctx) for v in f.pvec]
    if any(o < 0 for o in pord):
        raise NotHyperbolicError(1, "some ord(p_k) < 0")
    s = f.s
    qs = f.qvec[s - 1]
    if qs == 0 or valuation(qs, ctx) > 0:
        raise NotHyperbolicError(2, "ord(q_s) <= 0 required")
    u = -valuation(qs, ctx)
    v = pord[s - 1]
    if v + u <= 0:
        raise NotHyperbolicError(2, "ord(p_s/q_s) > 0 required")
    for k in range(1, f.m + 1):
        if k == s:
            continue
        qk = f.qvec[k - 1]
        ak = pord[k - 1]
        if qk != 0 and valuation(qk, ctx) <= 0:
            if (v + u) - (ak - valuation(qk, ctx)) <= 0:
                raise NotHyperbolicError(3, f"coordinate {k}")
        else:
            # ord(q_k) > 0, including q_k = 0 (whose ord is +inf)
            if (v + u) - ak <= 0:
                raise NotHyperbolicError(4, f"coordinate {k}")
    h = max(v - o for o in pord)
    return HyperbolicCert(u, v, h)


def is_hyperbolic(f: LftParams) -> bool:
    try:
        certify_hyperbolic(f)
        return True
    except NotHyperbolicError:
        return False


def iota(f: LftParams, cert: HyperbolicCert | None = None) -> Fraction:
    """The constant Jacobian factor of the inverse branch, a power of p.

    1/iota is the Haar measure of the branch's first-digit cylinder.
    """
    if cert is None:
        cert = certify_hyperbolic(f)
    ctx = f.ctx
    s = f.s
    expo = f.m * cert.v + (f.m + 1) * cert.u
    for k in range(1, f.m + 1):
        if k != s:
            expo -= valuation(f.pvec[k - 1], ctx)
    return Fraction(ctx.p**expo)


def _coord_val_ge_1(x, ctx: PrimeCtx) -> bool:
    """True when the coordinate is certainly in p*Z_p; may raise PrecisionExhausted."""
    if isinstance(x, PadicApprox):
        if x.is_exact_zero:
            return True
        if x.is_zero_at_precision:
            if x.abs_prec >= 1:
                return True
            raise PrecisionExhausted("membership in p*Z_p not determined")
        return x.valuation() >= 1
    return valuation(Fraction(x), ctx) >= 1


def apply_forward(f: LftParams, xs) -> tuple:
    """Evaluate the branch at an m-vector; exact on rational inputs."""
    if len(xs) != f.m:
        raise ValueError("dimension mismatch")
    xi = xs[f.i - 1]
    if isinstance(xi, PadicApprox):
        inv = xi.inverse()
    else:
        xi = Fraction(xi)
        if xi == 0:
            raise DivisionByZeroAtPrecision("pivot coordinate is zero")
        inv = 1 / xi
    s = f.s
    out = []
    for k in range(1, f.m + 1):
        pk = f.pvec[k - 1]
        qk = f.qvec[k - 1]
        if k == s:
            out.append(pk * inv - qk)
        else:
            xk = xs[f.sigma[k - 1] - 1]
            out.append(pk * xk * inv - qk)
    return tuple(out)


def apply_inverse(f: LftParams, ys, cert: HyperbolicCert | None = None) -> tuple:
    """Evaluate the inverse branch on a vector in (p*Z_p)^m.

    Hyperbolicity makes this total there, with every output coordinate back
    in p*Z_p.
    """
    if cert is None:
        certify_hyperbolic(f)
    if len(ys) != f.m:
        raise ValueError("dimension mismatch")
    ctx = f.ctx
    for y in ys:
        if not _coord_val_ge_1(y, ctx):
            raise ValueError("inverse branch expects a vector in (p*Z_p)^m")
    s = f.s
    ps = f.pvec[s - 1]
    denom = ys[s - 1] + f.qvec[s - 1]
    if isinstance(denom, PadicApprox):
        dinv = denom.inverse()
    else:
        dinv = 1 / denom
    out = []
    for k in range(1, f.m + 1):
        if k == f.i:
            out.append(ps * dinv)
        else:
            t = f.sigma_inv(k)
            out.append(ps * (ys[t - 1] + f.qvec[t - 1]) * dinv / f.pvec[t - 1])
    return tuple(out)


def sufficient_hyperbolic(f: LftParams, witness) -> bool:
    """Image test: does the branch map the witness into (p*Z_p)^m?

    Under the structural preconditions (ord(q_s) <= 0; every p_k nonzero with
    ord(p_k) >= 0; ord(q_k) > 0 forces ord(p_k) = 0) a single witness in
    (p*Z_p)^m whose image lands back in (p*Z_p)^m certifies hyperbolicity.
    """
    ctx = f.ctx
    s = f.s
    qs = f.qvec[s - 1]
    if qs == 0 or valuation(qs, ctx) > 0:
        raise ValueError("precondition ord(q_s) <= 0 violated")
    for k in range(1, f.m + 1):
        pk = f.pvec[k - 1]
        qk = f.qvec[k - 1]
        if valuation(pk, ctx) < 0:
            raise ValueError("precondition ord(p_k) >= 0 violated")
        if (qk == 0 or valuation(qk, ctx) > 0) and valuation(pk, ctx) != 0:
            raise ValueError("precondition ord(q_k) > 0 => ord(p_k) = 0 violated")
    if not all(_coord_val_ge_1(x, ctx) for x in witness):
        raise ValueError("witness must lie in (p*Z_p)^m")
    image = apply_forward(f, witness)
    return all(_coord_val_ge_1(y, ctx) for y in image)


def preimage_cylinder(
    f: LftParams, c: ProductCylinder, cert: HyperbolicCert | None = None
) -> list[ProductCylinder]:
    """Exact decomposition of the inverse image of a uniform-level cylinder.

    Returns p**h pairwise disjoint product cylinders whose measures sum to
    measure(c) / iota(f).
    """
    if cert is None:
        cert = certify_hyperbolic(f)
    if c.m != f.m:
        raise ValueError("dimension mismatch")
    ctx = f.ctx
    p = ctx.p
    n = c.uniform_level()
    centers = [b.center for b in c.balls]
    for a in centers:
        if a != 0 and valuation(a, ctx) < 1:
            raise ValueError("cylinder must be contained in (p*Z_p)^m")
    s = f.s
    ps = f.pvec[s - 1]
    base = ps / (centers[s - 1] + f.qvec[s - 1])
    scale = Fraction(p ** (n + cert.v + 2 * cert.u))
    out = []
    for y in range(p**cert.h):
        offset = base + scale * y
        balls = [None] * f.m
        balls[f.i - 1] = Ball(ctx, offset, n + cert.v + 2 * cert.u + cert.h)
        for k in range(1, f.m + 1):
            if k == f.i:
                continue
            t = f.sigma_inv(k)
            pt = f.pvec[t - 1]
            w = offset / pt
            level = n + cert.v + cert.u - valuation(pt, ctx)
            balls[k - 1] = Ball(ctx, w * (centers[t - 1] + f.qvec[t - 1]), level)
        out.append(ProductCylinder(tuple(balls)))
    return out


def random_hyperbolic(rng: random.Random, ctx: PrimeCtx, m: int) -> LftParams:
    """A random hyperbolic branch for property tests.

    Valuation targets are sampled to satisfy the four conditions with margin
    at least 1, then numerators are dressed with random p-adic units.
    """
    p = ctx.p

    def unit() -> Fraction:
        # small rational with valuation 0
        while True:
            num = rng.randint(1, 9)
            den = rng.randint(1, 9)
            if num % p and den % p:
                sign = -1 if rng.random() < 0.5 else 1
                return Fraction(sign * num, den)

    i = rng.randint(1, m)
    sigma = list(range(1, m + 1))
    rng.shuffle(sigma)
    s = sigma.index(i) + 1
    a_s = rng.randint(0, 2)  # ord(p_s)
    b_s = a_s - rng.randint(1, 3)  # ord(q_s) <= a_s - 1, and <= 0
    b_s = min(b_s, 0)
    depth = a_s - b_s  # = v + u >= 1
    pvec = [None] * m
    qvec = [None] * m
    pvec[s - 1] = Fraction(p**a_s) * unit()
    qvec[s - 1] = (Fraction(p**b_s) if b_s >= 0 else Fraction(1, p**-b_s)) * unit()
    for k in range(1, m + 1):
        if k == s:
            continue
        choice = rng.random()
        if choice < 0.3:
            # q_k = 0: condition (iv) needs depth > ord(p_k)
            a_k = rng.randint(0, max(depth - 1, 0))
            qvec[k - 1] = Fraction(0)
        elif choice < 0.45:
            # ord(q_k) > 0: also condition (iv)
            a_k = rng.randint(0, max(depth - 1, 0))
            qvec[k - 1] = Fraction(p ** rng.randint(1, 2)) * unit()
        else:
            # ord(q_k) <= 0: condition (iii) needs depth > ord(p_k) - ord(q_k)
            b_k = -rng.randint(0, 2)
            a_k = rng.randint(0, max(depth - 1 + b_k, 0))
            if a_k - b_k >= depth:
                b_k = a_k - depth + 1
            qvec[k - 1] = (
                Fraction(p**b_k) if b_k >= 0 else Fraction(1, p**-b_k)
            ) * unit()
        pvec[k - 1] = Fraction(p**a_k) * unit()
    f = LftParams(ctx, m, i, tuple(sigma), tuple(pvec), tuple(qvec))
    certify_hyperbolic(f)
    return f
