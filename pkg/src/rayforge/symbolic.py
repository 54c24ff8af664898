"""Tracts, fundamental domains and external addresses for exp and cosine maps.

Exp partitions: one tract ``Re z > ln(R/|lam|)`` cut into horizontal strips;
strip ``k`` is ``Im z - (pi - arg lam)`` in ``(2 pi (k-1), 2 pi k)``, so strip 0
contains the line ``Im z = -arg lam`` where ``f`` is positive real.

Cosine partitions: a right tract ``Re z > c(R)`` and a left tract
``Re z < -c(R)`` with ``c(R) = ln(2R / min(|a|, |b|))``. Strips inside the right
tract are the branches of ``log`` of the large root ``u`` of ``a u^2 - w u + b``;
the left tract is the right tract of ``(b, a)`` seen through ``z -> -z``.
A cosine symbol is ``side * (zigzag(k) + 1)`` with ``zigzag(k) = 2k`` for
``k >= 0`` and ``-2k - 1`` for ``k < 0``, ``side = +1`` right and ``-1`` left.

The reference curve alpha is the negative real ray ``(-inf, -R]`` for exp
maps. Cosine ray tails map towards both ``+inf`` and ``-inf``, so there alpha
is the ray ``-i [R, inf)`` instead and both directions lie inside every strip.
Strip labels are relative to alpha and ``R``, so addresses are only comparable
for equal partitions.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import COSINE, EXP, MapSpec, evaluate, principal_arg
from .errors import (
    AddressSyntaxError,
    InvalidSymbol,
    MapOverflow,
    RadiusTooSmall,
    UnsupportedFamily,
)

TWO_PI = 2.0 * math.pi
CUT_TOL = 1e-12


class _NotInTract:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NotInTract"

    def __bool__(self):
        return False


NotInTract = _NotInTract()


# ---------------------------------------------------------------------------
# addresses


def _primitive(word: list[int]) -> list[int]:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


@dataclass(frozen=True)
class ExternalAddress:
    preperiod: tuple
    period: tuple

    def __post_init__(self):
        if not self.period:
            raise ValueError("period must be nonempty")

    @property
    def is_periodic(self) -> bool:
        return not self.preperiod

    def symbol(self, j: int) -> int:
        if j < len(self.preperiod):
            return self.preperiod[j]
        return self.period[(j - len(self.preperiod)) % len(self.period)]

    def prefix(self, n: int) -> list[int]:
        return [self.symbol(j) for j in range(n)]

    def __str__(self) -> str:
        return format_address(self)


def normalize(preperiod: Sequence[int], period: Sequence[int]) -> ExternalAddress:
    """Primitive period, minimal preperiod."""
    per = [int(s) for s in period]
    if not per:
        raise ValueError("period must be nonempty")
    pre = [int(s) for s in preperiod]
    per = _primitive(per)
    while pre and pre[-1] == per[-1]:
        per = [pre.pop()] + per[:-1]
    return ExternalAddress(tuple(pre), tuple(per))


def shift(address: ExternalAddress) -> ExternalAddress:
    if address.preperiod:
        return normalize(address.preperiod[1:], address.period)
    per = address.period
    return normalize((), per[1:] + per[:1])


_ADDRESS_RE = re.compile(r"^\[\s*((?:-?\d+\s+)*(?:-?\d+)?)\s*\|\s*((?:-?\d+\s+)*(?:-?\d+)?)\s*\]$")


def parse_address(text: str) -> ExternalAddress:
    """Parse ``"[p1 p2 | k1 k2]"``; the preperiod may be empty, the period may not."""
    m = _ADDRESS_RE.match(text.strip())
    if not m:
        raise AddressSyntaxError(f"malformed address {text!r}")
    pre = [int(t) for t in m.group(1).split()]
    per = [int(t) for t in m.group(2).split()]
    if not per:
        raise AddressSyntaxError("empty period")
    return normalize(pre, per)


def format_address(address: ExternalAddress) -> str:
    pre = " ".join(str(s) for s in address.preperiod)
    per = " ".join(str(s) for s in address.period)
    return f"[{pre} | {per}]" if pre else f"[| {per}]"


# ---------------------------------------------------------------------------
# cosine symbol encoding


def zigzag(k: int) -> int:
    return 2 * k if k >= 0 else -2 * k - 1


def unzigzag(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2


def encode_cosine_symbol(side: int, strip: int) -> int:
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    return side * (zigzag(strip) + 1)


def decode_cosine_symbol(symbol: int) -> tuple[int, int]:
    if symbol == 0:
        raise InvalidSymbol("0 is not a cosine symbol")
    side = 1 if symbol > 0 else -1
    return side, unzigzag(abs(symbol) - 1)


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class PartitionSpec:
    map: MapSpec
    radius: float
    cutoff: float

    @property
    def family(self) -> str:
        return self.map.family


def build_partition(m: MapSpec, radius: float) -> PartitionSpec:
    radius = float(radius)
    if m.family == EXP:
        if not abs(m.lam) < radius:
            raise RadiusTooSmall(f"R={radius} must exceed |lambda|={abs(m.lam)}")
        return PartitionSpec(m, radius, math.log(radius / abs(m.lam)))
    if m.family == COSINE:
        if not abs(m.a) + abs(m.b) < radius:
            raise RadiusTooSmall(f"R={radius} must exceed |a|+|b|")
        return PartitionSpec(m, radius, math.log(2 * radius / min(abs(m.a), abs(m.b))))
    raise UnsupportedFamily("tracts are only available for exp and cosine maps")


def default_partition(m: MapSpec) -> PartitionSpec:
    if m.family == EXP:
        return build_partition(m, max(2.0, 2.0 * abs(m.lam)))
    return build_partition(m, 2.0 * (abs(m.a) + abs(m.b)) + 1.0)


def strip_cut_lines(part: PartitionSpec, k: int) -> tuple[float, float]:
    """Lower and upper ``Im z`` of exp strip ``k``."""
    if part.family != EXP:
        raise UnsupportedFamily("straight cut lines only exist for exp partitions")
    base = math.pi - principal_arg(part.map.lam)
    return base + TWO_PI * (k - 1), base + TWO_PI * k


def strip_center(coef: complex, k: int) -> float:
    return TWO_PI * k - principal_arg(coef)


def _exp_strip(y: float, coef_arg: float) -> tuple[int, float]:
    """Strip index of height ``y`` and its distance to the nearest cut."""
    t = y - (math.pi - coef_arg)
    k = math.ceil(t / TWO_PI)
    d = min(abs(t - TWO_PI * k), abs(t - TWO_PI * (k - 1)))
    return k, d


def _large_root(a: complex, b: complex, w: complex) -> complex:
    """Root of ``a u^2 - w u + b = 0`` of larger modulus (continuous for |w| large)."""
    s = cmath.sqrt(w * w - 4 * a * b)
    if (s * w.conjugate()).real < 0:
        s = -s
    return (w + s) / (2 * a)


def _cosine_arg(w: complex) -> float:
    """Argument in ``(-pi/2, 3pi/2]``, cut along the negative imaginary axis."""
    return principal_arg(-1j * w) + math.pi / 2


def _cosine_strip(y: float, coef_arg: float) -> tuple[int, float]:
    t = y + coef_arg + math.pi / 2
    k = math.floor(t / TWO_PI)
    d = min(t - TWO_PI * k, TWO_PI * (k + 1) - t)
    return k, d


def _right_theta(a: complex, b: complex, w: complex) -> complex:
    """Strip-0 logarithm of the large root: ``ln|u| + i theta(w)``."""
    u = _large_root(a, b, w)
    corr = principal_arg(u * a / w)
    return complex(math.log(abs(u)), _cosine_arg(w) - principal_arg(a) + corr)


def symbol_of(part: PartitionSpec, z: complex):
    """Fundamental-domain symbol of ``z``, or ``NotInTract``."""
    z = complex(z)
    if not cmath.isfinite(z):
        return NotInTract
    m = part.map
    if part.family == EXP:
        if z.real <= part.cutoff:
            return NotInTract
        k, d = _exp_strip(z.imag, principal_arg(m.lam))
        return NotInTract if d < CUT_TOL else k
    if z.real > part.cutoff:
        side, a, b, zz = 1, m.a, m.b, z
    elif z.real < -part.cutoff:
        side, a, b, zz = -1, m.b, m.a, -z
    else:
        return NotInTract
    if zz.real > 700:
        k, d = _cosine_strip(zz.imag, principal_arg(a))
    else:
        w = a * cmath.exp(zz) + b * cmath.exp(-zz)
        th = _right_theta(a, b, w).imag
        k = round((zz.imag - th) / TWO_PI)
        # Angular distance of w from the cut, pulled back by |dz/dw| ~ 1/|w|.
        d = abs(principal_arg(1j * w)) * abs(w) / abs(a * cmath.exp(zz) - b * cmath.exp(-zz))
    if d < CUT_TOL:
        return NotInTract
    return encode_cosine_symbol(side, k)


@dataclass(frozen=True)
class AddressFailure:
    at_index: int

    def __bool__(self):
        return False


def address_of(part: PartitionSpec, z: complex, depth: int):
    """Symbols of ``z, f(z), ..., f^{depth-1}(z)`` or ``AddressFailure(j)``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    out = []
    for j in range(depth):
        s = symbol_of(part, z)
        if s is NotInTract:
            return AddressFailure(j)
        out.append(s)
        if j + 1 < depth:
            try:
                z = evaluate(part.map, z)
            except MapOverflow:
                return AddressFailure(j + 1)
    return out


# ---------------------------------------------------------------------------
# inverse branches


def validate_symbol(m: MapSpec, symbol: int) -> None:
    if m.family == EXP:
        return
    if m.family == COSINE:
        decode_cosine_symbol(symbol)
        return
    raise UnsupportedFamily("no inverse branches for this family")


def inverse_branch(m: MapSpec, symbol: int, w: complex) -> complex:
    """The preimage of ``w`` in the fundamental domain labelled ``symbol``."""
    w = complex(w)
    if w == 0:
        raise MapOverflow("0 has no preimage in a tract")
    if m.family == EXP:
        return complex(
            math.log(abs(w)) - math.log(abs(m.lam)),
            principal_arg(w) - principal_arg(m.lam) + TWO_PI * symbol,
        )
    if m.family == COSINE:
        side, k = decode_cosine_symbol(symbol)
        a, b = (m.a, m.b) if side == 1 else (m.b, m.a)
        z = _right_theta(a, b, w) + 1j * TWO_PI * k
        return z if side == 1 else -z
    raise UnsupportedFamily("no inverse branches for this family")


def tail_coefficient(m: MapSpec, symbol: int) -> complex:
    """Dominant coefficient of ``f`` in the tract of ``symbol``."""
    if m.family == EXP:
        return m.lam
    side, _ = decode_cosine_symbol(symbol)
    return m.a if side == 1 else m.b


def asymptotic_tail_point(m: MapSpec, symbol: int, x: float, next_symbol: Optional[int] = None) -> complex:
    """Point of modulus ~``x`` on the far end of a ray starting in ``symbol``'s strip.

    For cosine maps the image of the tail runs to ``+inf`` or ``-inf``
    depending on the side of ``next_symbol`` (right when omitted).
    """
    if m.family == EXP:
        return complex(x, strip_center(m.lam, symbol))
    side, k = decode_cosine_symbol(symbol)
    coef = m.a if side == 1 else m.b
    y = strip_center(coef, k)
    if next_symbol is not None and decode_cosine_symbol(next_symbol)[0] == -1:
        y += math.pi
    return side * complex(x, y)


def preimage_candidates(m: MapSpec, w: complex, near: complex, spread: int = 1) -> list[complex]:
    """Preimages of ``w`` closest to ``near`` (all root families, nearby branches)."""
    w = complex(w)
    out = []
    if m.family == EXP:
        base = inverse_branch(m, 0, w)
        k0 = round((near.imag - base.imag) / TWO_PI)
        out = [base + 1j * TWO_PI * (k0 + d) for d in range(-spread, spread + 1)]
    elif m.family == COSINE:
        big = _large_root(m.a, m.b, w)
        # The small root from the product of roots avoids cancellation.
        roots = [big, m.b / (m.a * big)] if big != 0 else []
        for u in roots:
            if u == 0:
                continue
            base = cmath.log(u)
            k0 = round((near.imag - base.imag) / TWO_PI)
            out.extend(base + 1j * TWO_PI * (k0 + d) for d in range(-spread, spread + 1))
    else:
        raise UnsupportedFamily("closed-form preimages unavailable")
    out.sort(key=lambda c: abs(c - near))
    return out
