"""Schottky groups on the Riemann sphere: parameters, generators, words.

A rank-g Schottky group is generated by g loxodromic Mobius maps. Each
generator is encoded by the sewing relation

    (z' - w_{-a}) (z - w_a) = rho_a,

so the generator acts as  gamma_a z = w_{-a} + rho_a / (z - w_a).  The two
isometric circles (centers w_a and w_{-a}, common radius |rho_a|^{1/2})
bound the standard fundamental domain: gamma_a maps the exterior of the
disc at w_a onto the interior of the disc at w_{-a}.  Parameters are
admissible when the 2g closed discs are pairwise disjoint,

    |w_a - w_b| > |rho_a|^{1/2} + |rho_b|^{1/2}    for all a != b,

with signed indices running over {1, -1, ..., g, -g} and rho_{-a} := rho_a.

The classical coordinates (repelling fixed point W_a, attracting fixed
point W_{-a}, multiplier q_a with 0 < |q_a| < 1) are related to the disc
coordinates by

    w_a     = (W_a - q_a W_{-a}) / (1 - q_a),
    w_{-a}  = (W_{-a} - q_a W_a) / (1 - q_a),
    rho_a   = -q_a (W_a - W_{-a})^2 / (1 - q_a)^2.

Group elements are indexed by reduced words in the generators.  The
enumeration order (by length, then lexicographically in the generator
order 1, -1, 2, -2, ...) is fixed once and for all so that truncated
orbit sums are bit-for-bit reproducible.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "INFINITY",
    "is_infinity",
    "SchottkyError",
    "InvalidParameterError",
    "DegenerateMapError",
    "DomainExitError",
    "MobiusMap",
    "IDENTITY_MAP",
    "SchottkyParams",
    "ClassicalParams",
    "GroupWord",
    "TruncationPolicy",
    "PairSeparation",
    "ValidityReport",
    "signed_indices",
    "params_from_classical",
    "classical_from_params",
    "ordered_fixed_points",
    "generator_map",
    "apply_mobius",
    "enumerate_group",
    "word_count",
    "validate",
    "mobius_act_on_params",
    "in_fundamental_domain",
    "default_mode_cutoff",
]


# Canonical point at infinity.  Any non-finite complex is treated as the
# same point of the sphere; this constant is what the library returns.
INFINITY = complex(math.inf, 0.0)


def is_infinity(z: complex) -> bool:
    """True if z represents the point at infinity (any non-finite value)."""
    z = complex(z)
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


class SchottkyError(ValueError):
    """Base class for all parameter and domain errors raised here."""


class InvalidParameterError(SchottkyError):
    """Malformed or inadmissible input parameters."""


class DegenerateMapError(InvalidParameterError):
    """A Mobius map degenerated (zero determinant, parabolic or elliptic)."""


class DomainExitError(InvalidParameterError):
    """An operation produced parameters outside the admissible domain.

    Carries the validity report of the offending parameter set in the
    ``report`` attribute.
    """

    def __init__(self, message: str, report: "ValidityReport | None" = None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# Mobius maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MobiusMap:
    """A Mobius transformation z -> (az + b) / (cz + d).

    The library keeps maps normalized to determinant 1 (call
    :meth:`normalized`); composition of long words stays stable that way
    and derivative formulas simplify.  The normalization uses the
    principal square root, so it is determined up to an overall sign that
    never affects the action on points.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "d", complex(self.d))

    def determinant(self) -> complex:
        return self.a * self.d - self.b * self.c

    def normalized(self) -> "MobiusMap":
        """Rescale entries so the determinant is exactly 1."""
        det = self.determinant()
        if det == 0:
            raise DegenerateMapError("Mobius map has zero determinant")
        s = cmath.sqrt(det)
        return MobiusMap(self.a / s, self.b / s, self.c / s, self.d / s)

    def __call__(self, z: complex) -> complex:
        return apply_mobius(self, z)

    def derivative(self, z: complex) -> complex:
        """d(mz)/dz = 1 / (cz + d)^2 for a det-1 map.

        Assumes the matrix is normalized.  The determinant is never
        recomputed here: for long words the entries are large and
        ad - bc would be pure cancellation noise, while the product of
        det-1 factors is det-1 exactly.
        """
        den = self.c * complex(z) + self.d
        return 1.0 / (den * den)

    def second_derivative(self, z: complex) -> complex:
        """d^2(mz)/dz^2 = -2c / (cz + d)^3 for a det-1 map."""
        den = self.c * complex(z) + self.d
        return -2.0 * self.c / (den * den * den)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """Return self after other (matrix product self @ other)."""
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MobiusMap":
        """Inverse map; for a det-1 map this is again det-1."""
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def is_close_to_identity(self, tol: float = 1e-12) -> bool:
        """True if the map fixes the sphere pointwise to tolerance.

        Compares against +/- the identity matrix, since both represent
        the identity transformation.
        """
        for sign in (1.0, -1.0):
            if (
                abs(self.a - sign) <= tol
                and abs(self.b) <= tol
                and abs(self.c) <= tol
                and abs(self.d - sign) <= tol
            ):
                return True
        return False


IDENTITY_MAP = MobiusMap(1.0, 0.0, 0.0, 1.0)


def apply_mobius(m: MobiusMap, z: complex) -> complex:
    """Evaluate m at z with one-point-compactification conventions."""
    if is_infinity(z):
        if m.c == 0:
            return INFINITY
        return m.a / m.c
    z = complex(z)
    den = m.c * z + m.d
    if den == 0:
        return INFINITY
    return (m.a * z + m.b) / den


# ---------------------------------------------------------------------------
# Parameter spaces
# ---------------------------------------------------------------------------

def signed_indices(genus: int) -> tuple[int, ...]:
    """Generator order (1, -1, 2, -2, ..., g, -g) used everywhere."""
    out: list[int] = []
    for h in range(1, genus + 1):
        out.append(h)
        out.append(-h)
    return tuple(out)


@dataclass(frozen=True)
class SchottkyParams:
    """Disc coordinates of a rank-g Schottky group.

    ``w_plus[h-1]`` and ``w_minus[h-1]`` are the isometric-circle centers
    w_h and w_{-h}; ``rho[h-1]`` is the sewing parameter of handle h
    (shared by both signs).  Admissibility is *not* checked at
    construction; call :func:`validate`.
    """

    genus: int
    w_plus: tuple[complex, ...]
    w_minus: tuple[complex, ...]
    rho: tuple[complex, ...]

    def __post_init__(self):
        if not isinstance(self.genus, int) or self.genus < 1:
            raise InvalidParameterError(f"genus must be a positive integer, got {self.genus!r}")
        for name in ("w_plus", "w_minus", "rho"):
            vals = tuple(complex(v) for v in getattr(self, name))
            if len(vals) != self.genus:
                raise InvalidParameterError(
                    f"{name} must have length {self.genus}, got {len(vals)}"
                )
            object.__setattr__(self, name, vals)

    @property
    def signed_indices(self) -> tuple[int, ...]:
        return signed_indices(self.genus)

    def center(self, a: int) -> complex:
        """Isometric-circle center w_a for a signed index a."""
        self._check_index(a)
        return self.w_plus[a - 1] if a > 0 else self.w_minus[-a - 1]

    def rho_signed(self, a: int) -> complex:
        """Sewing parameter rho_a (independent of the sign of a)."""
        self._check_index(a)
        return self.rho[abs(a) - 1]

    def radius(self, a: int) -> float:
        """Isometric-circle radius |rho_a|^{1/2}."""
        return math.sqrt(abs(self.rho_signed(a)))

    def _check_index(self, a: int) -> None:
        if not isinstance(a, int) or a == 0 or abs(a) > self.genus:
            raise InvalidParameterError(
                f"signed index must lie in +/-1..+/-{self.genus}, got {a!r}"
            )


@dataclass(frozen=True)
class ClassicalParams:
    """Fixed-point coordinates: repelling W_h, attracting W_{-h}, multiplier q_h."""

    W_plus: tuple[complex, ...]
    W_minus: tuple[complex, ...]
    q: tuple[complex, ...]

    def __post_init__(self):
        for name in ("W_plus", "W_minus", "q"):
            vals = tuple(complex(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
        g = len(self.q)
        if g < 1 or len(self.W_plus) != g or len(self.W_minus) != g:
            raise InvalidParameterError("W_plus, W_minus, q must share a positive length")
        for h, (Wp, Wm, qh) in enumerate(zip(self.W_plus, self.W_minus, self.q), start=1):
            if Wp == Wm:
                raise InvalidParameterError(f"handle {h}: coincident fixed points")
            if not abs(qh) < 1:
                raise InvalidParameterError(
                    f"handle {h}: multiplier must satisfy |q| < 1, got |q| = {abs(qh)}"
                )

    @property
    def genus(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class GroupWord:
    """A reduced word in the generators, stored as signed indices."""

    letters: tuple[int, ...]

    def __post_init__(self):
        letters = tuple(int(a) for a in self.letters)
        object.__setattr__(self, "letters", letters)
        for x, y in zip(letters, letters[1:]):
            if x == -y:
                raise InvalidParameterError(f"word {letters} is not reduced")
        if any(a == 0 for a in letters):
            raise InvalidParameterError("0 is not a generator index")

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return not self.letters


@dataclass(frozen=True)
class TruncationPolicy:
    """Shared truncation knobs: word length L, mode cutoff M, tolerance.

    ``max_word_length`` bounds the reduced words kept in orbit sums,
    ``mode_cutoff`` bounds the local mode index in the coupling matrices,
    and ``tol`` is the accuracy target the caller is aiming for (used by
    convergence prechecks, not enforced as a guarantee).
    """

    max_word_length: int = 6
    mode_cutoff: int = 20
    tol: float = 1e-9

    def __post_init__(self):
        if not isinstance(self.max_word_length, int) or self.max_word_length < 0:
            raise InvalidParameterError("max_word_length must be an integer >= 0")
        if not isinstance(self.mode_cutoff, int) or self.mode_cutoff < 1:
            raise InvalidParameterError("mode_cutoff must be an integer >= 1")
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise InvalidParameterError("tol must be a positive real")


def default_mode_cutoff(max_word_length: int) -> int:
    """Default coupling of the mode cutoff to the word length, M = 2L + 8."""
    return 2 * max_word_length + 8


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------

def params_from_classical(cp: ClassicalParams) -> SchottkyParams:
    """Convert fixed-point coordinates to disc coordinates.

    Validity of the result is not asserted; degenerate inputs (q close
    to 0, nearly touching discs) pass through so the caller can inspect
    the report from :func:`validate`.
    """
    w_plus, w_minus, rho = [], [], []
    for h, (Wp, Wm, qh) in enumerate(zip(cp.W_plus, cp.W_minus, cp.q), start=1):
        den = 1.0 - qh
        if den == 0:
            raise InvalidParameterError(f"handle {h}: multiplier q = 1")
        w_plus.append((Wp - qh * Wm) / den)
        w_minus.append((Wm - qh * Wp) / den)
        rho.append(-qh * (Wp - Wm) ** 2 / (den * den))
    return SchottkyParams(cp.genus, tuple(w_plus), tuple(w_minus), tuple(rho))


def classical_from_params(sp: SchottkyParams) -> ClassicalParams:
    """Recover fixed points and multipliers from disc coordinates.

    The fixed points of each generator are the roots of

        z^2 - (w_h + w_{-h}) z + (w_h w_{-h} - rho_h) = 0,

    and the multiplier at a fixed point W is -rho_h / (W - w_h)^2.  The
    two multipliers are exact reciprocals; the attracting root (modulus
    below 1) becomes W_{-h}.  A vanishing discriminant means a parabolic
    generator and raises :class:`DegenerateMapError`.
    """
    W_plus, W_minus, q = [], [], []
    for h in range(1, sp.genus + 1):
        wa = sp.w_plus[h - 1]
        wma = sp.w_minus[h - 1]
        rho = sp.rho[h - 1]
        if rho == 0:
            raise InvalidParameterError(f"handle {h}: rho = 0")
        s = wa + wma
        p = wa * wma - rho
        disc = s * s - 4.0 * p  # equals (wa - wma)^2 + 4 rho
        if disc == 0:
            raise DegenerateMapError(f"handle {h}: parabolic generator (zero discriminant)")
        root = cmath.sqrt(disc)
        z1 = 0.5 * (s + root)
        z2 = 0.5 * (s - root)
        m1 = -rho / ((z1 - wa) ** 2)
        if abs(m1) < 1.0:
            attracting, repelling, mult = z1, z2, m1
        else:
            m2 = -rho / ((z2 - wa) ** 2)
            if not abs(m2) < 1.0:
                raise DegenerateMapError(f"handle {h}: generator is not loxodromic")
            attracting, repelling, mult = z2, z1, m2
        W_plus.append(repelling)
        W_minus.append(attracting)
        q.append(mult)
    return ClassicalParams(tuple(W_plus), tuple(W_minus), tuple(q))


def ordered_fixed_points(sp: SchottkyParams) -> tuple[complex, ...]:
    """Generator fixed points interleaved in handle order.

    (W_1, W_{-1}, W_2, W_{-2}, ...): the repelling then attracting point
    of each handle.  This fixed ordering is what the weight-N expansion
    bases are sliced from, so every consumer sees the same basis.
    """
    cp = classical_from_params(sp)
    pts: list[complex] = []
    for h in range(sp.genus):
        pts.append(cp.W_plus[h])
        pts.append(cp.W_minus[h])
    return tuple(pts)


# ---------------------------------------------------------------------------
# Generators and words
# ---------------------------------------------------------------------------

def generator_map(sp: SchottkyParams, a: int) -> MobiusMap:
    """Det-1 matrix of the generator gamma_a, for a signed index a.

    gamma_a z = w_{-a} + rho_a / (z - w_a); the matrix
    [[w_{-a}, rho_a - w_{-a} w_a], [1, -w_a]] has determinant -rho_a and
    is rescaled by the principal square root.  generator_map(-a) is the
    inverse transformation of generator_map(a) (the matrices may differ
    by an overall sign, which acts trivially).
    """
    wa = sp.center(a)
    wma = sp.center(-a)
    rho = sp.rho_signed(a)
    if rho == 0:
        raise InvalidParameterError(f"handle {abs(a)}: rho = 0 gives no group element")
    return MobiusMap(wma, rho - wma * wa, 1.0, -wa).normalized()


def word_count(genus: int, max_word_length: int) -> int:
    """Number of reduced words of length <= L in the free group of rank g."""
    g = genus
    total = 1
    for k in range(1, max_word_length + 1):
        total += 2 * g * (2 * g - 1) ** (k - 1)
    return total


def enumerate_group(
    sp: SchottkyParams, max_word_length: int
) -> list[tuple[GroupWord, MobiusMap]]:
    """All reduced words of length <= L with their composed det-1 matrices.

    Deterministic order: by length, then lexicographic on letters in the
    generator order (1, -1, 2, -2, ...).  Each generator matrix is
    normalized to det 1 once; products of det-1 factors stay det-1, and
    the composed matrices are deliberately *not* renormalized (for long
    words the entries are large and a recomputed ad - bc is cancellation
    noise, so dividing by its square root would corrupt the matrix).
    """
    if not isinstance(max_word_length, int) or max_word_length < 0:
        raise InvalidParameterError("max_word_length must be an integer >= 0")
    gens = {a: generator_map(sp, a) for a in sp.signed_indices}
    result: list[tuple[GroupWord, MobiusMap]] = [(GroupWord(()), IDENTITY_MAP)]
    frontier: list[tuple[tuple[int, ...], MobiusMap]] = [((), IDENTITY_MAP)]
    for _ in range(max_word_length):
        extended: list[tuple[tuple[int, ...], MobiusMap]] = []
        for letters, mat in frontier:
            last = letters[-1] if letters else 0
            for a in sp.signed_indices:
                if a == -last:
                    continue
                extended.append((letters + (a,), mat.compose(gens[a])))
        frontier = extended
        result.extend((GroupWord(letters), mat) for letters, mat in extended)
    return result


# ---------------------------------------------------------------------------
# Validity and the fundamental domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairSeparation:
    """Separation record for one unordered pair of isometric circles."""

    index_a: int
    index_b: int
    separation: float
    radius_sum: float

    @property
    def margin(self) -> float:
        return self.separation - self.radius_sum


@dataclass(frozen=True)
class ValidityReport:
    """Result of the pairwise disc-separation check.

    ``ok`` is True iff every pair satisfies the strict inequality and no
    structural issue (zero rho) was found.  ``violations`` lists the
    failing pairs; ``pairs`` lists every pair with its margin so callers
    can see how much room a parameter set has.
    """

    ok: bool
    pairs: tuple[PairSeparation, ...]
    violations: tuple[PairSeparation, ...]
    issues: tuple[str, ...]

    @property
    def min_margin(self) -> float:
        if not self.pairs:
            return math.inf
        return min(p.margin for p in self.pairs)


def validate(sp: SchottkyParams) -> ValidityReport:
    """Check the strict pairwise disc condition over all signed indices."""
    issues: list[str] = []
    for h in range(1, sp.genus + 1):
        if sp.rho[h - 1] == 0:
            issues.append(f"handle {h}: rho = 0")
    idx = sp.signed_indices
    pairs: list[PairSeparation] = []
    violations: list[PairSeparation] = []
    for i, a in enumerate(idx):
        for b in idx[i + 1:]:
            sep = abs(sp.center(a) - sp.center(b))
            rsum = sp.radius(a) + sp.radius(b)
            rec = PairSeparation(a, b, sep, rsum)
            pairs.append(rec)
            if not sep > rsum:
                violations.append(rec)
    ok = not issues and not violations
    return ValidityReport(ok, tuple(pairs), tuple(violations), tuple(issues))


def in_fundamental_domain(sp: SchottkyParams, z: complex) -> bool:
    """True iff z lies outside or on every isometric circle.

    The boundary counts as inside the fundamental domain (closed
    convention); the point at infinity is always inside.
    """
    if is_infinity(z):
        return True
    z = complex(z)
    for a in sp.signed_indices:
        if abs(z - sp.center(a)) < sp.radius(a):
            return False
    return True


# ---------------------------------------------------------------------------
# Mobius action on the parameter space
# ---------------------------------------------------------------------------

def mobius_act_on_params(sp: SchottkyParams, m: MobiusMap) -> SchottkyParams:
    """Transport disc coordinates along a global Mobius change of coordinate.

    For a det-1 map with rows (A, B; C, D) each handle transforms as

        den     = (C w_a + D)(C w_{-a} + D) - rho_a C^2,
        w_a'    = ((A w_a + B)(C w_{-a} + D) - rho_a A C) / den,
        w_{-a}' = ((A w_{-a} + B)(C w_a + D) - rho_a A C) / den,
        rho_a'  = rho_a / den^2.

    Acting by m1 then m2 equals acting by m2 composed with m1.  If the
    image parameters violate the disc condition a :class:`DomainExitError`
    carrying the validity report is raised.
    """
    m = m.normalized()
    A, B, C, D = m.a, m.b, m.c, m.d
    w_plus, w_minus, rho = [], [], []
    for wa, wma, rh in zip(sp.w_plus, sp.w_minus, sp.rho):
        den = (C * wa + D) * (C * wma + D) - rh * C * C
        if den == 0:
            raise DegenerateMapError("a disc center is sent to infinity by this map")
        w_plus.append(((A * wa + B) * (C * wma + D) - rh * A * C) / den)
        w_minus.append(((A * wma + B) * (C * wa + D) - rh * A * C) / den)
        rho.append(rh / (den * den))
    out = SchottkyParams(sp.genus, tuple(w_plus), tuple(w_minus), tuple(rho))
    report = validate(out)
    if not report.ok:
        raise DomainExitError(
            "transformed parameters violate the disc condition", report=report
        )
    return out
