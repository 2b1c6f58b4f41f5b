"""Polynomial Hamiltonians in the variables (v_k, conj v_k), k >= 0.

A polynomial is a sparse map from monomial keys ``(anti, holo)`` (sorted
tuples of mode indices for the conj(v) and v factors) to coefficients.
Coefficients are either all :class:`GaussianRational` (exact mode) or
Python complex numbers (floating mode); mixing promotes to floating.

Vector fields follow the convention X_H(v)_k = -2i dH/d(conj v_k), and the
bracket is {F,G} = (2/i) sum_k (dF/dconj(v_k) dG/dv_k - dG/dconj(v_k) dF/dv_k).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Tuple

import numpy as np

from .errors import ContractError, InternalConsistencyError
from .gaussian import GaussianRational

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]  # (anti, holo)

_REAL_RTOL = 1e-12


@dataclass(frozen=True)
class Monomial:
    holo: Tuple[int, ...]
    anti: Tuple[int, ...]
    coeff: object

    def __post_init__(self):
        if any(k < 0 for k in self.holo + self.anti):
            raise ContractError("mode indices must be nonnegative")
        object.__setattr__(self, "holo", tuple(sorted(self.holo)))
        object.__setattr__(self, "anti", tuple(sorted(self.anti)))

    @property
    def key(self) -> Key:
        return (self.anti, self.holo)

    @property
    def degree(self):
        return len(self.holo) + len(self.anti)


def _is_exact(c):
    return isinstance(c, GaussianRational)


def _to_float(c):
    return complex(c)


def _scalar(x, exact):
    return GaussianRational.coerce(x) if exact else complex(x)


def _merge(a, b):
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _drop_one(t, k):
    i = t.index(k)
    return t[:i] + t[i + 1:]


class PolyHamiltonian:
    """Immutable sparse polynomial in (v, conj v)."""

    __slots__ = ("_terms", "exact", "_cache")

    def __init__(self, terms: Dict[Key, object] | None = None, exact: bool | None = None):
        terms = dict(terms or {})
        if exact is None:
            exact = all(_is_exact(c) for c in terms.values())
        clean = {}
        for (anti, holo), c in terms.items():
            c = GaussianRational.coerce(c) if exact else _to_float(c)
            if c:
                clean[(tuple(sorted(anti)), tuple(sorted(holo)))] = c
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "exact", bool(exact))
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("PolyHamiltonian is immutable")

    # construction helpers
    @classmethod
    def zero(cls, exact=True):
        return cls({}, exact=exact)

    @classmethod
    def from_terms(cls, items: Iterable, exact: bool | None = None):
        """Build from (holo, anti, coeff) triples; repeated keys are summed."""
        acc: Dict[Key, object] = {}
        items = list(items)
        if exact is None:
            exact = all(_is_exact(c) for _, _, c in items)
        for holo, anti, c in items:
            key = (tuple(sorted(anti)), tuple(sorted(holo)))
            c = GaussianRational.coerce(c) if exact else _to_float(c)
            if key in acc:
                acc[key] = acc[key] + c
            else:
                acc[key] = c
        return cls(acc, exact=exact)

    @classmethod
    def from_monomials(cls, monos: Iterable[Monomial], exact=None):
        return cls.from_terms(((m.holo, m.anti, m.coeff) for m in monos), exact=exact)

    # access
    @property
    def terms(self) -> Dict[Key, object]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def monomials(self):
        for (anti, holo), c in sorted(self._terms.items()):
            yield Monomial(holo, anti, c)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self):
        return not self._terms

    def coeff(self, holo=(), anti=()):
        key = (tuple(sorted(anti)), tuple(sorted(holo)))
        return self._terms.get(key, GaussianRational() if self.exact else 0j)

    def degrees(self):
        return sorted({len(a) + len(h) for a, h in self._terms})

    def max_mode(self):
        return max((max(a + h) for a, h in self._terms if a + h), default=-1)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"PolyHamiltonian({len(self)} terms, {kind}, degrees={self.degrees()})"

    # algebra
    def as_float(self):
        if not self.exact:
            return self
        return PolyHamiltonian({k: complex(c) for k, c in self._terms.items()}, exact=False)

    def _align(self, other):
        if self.exact and other.exact:
            return self, other, True
        return self.as_float(), other.as_float(), False

    def __add__(self, other):
        if not isinstance(other, PolyHamiltonian):
            return NotImplemented
        a, b, exact = self._align(other)
        out = dict(a._terms)
        for k, c in b._terms.items():
            out[k] = out[k] + c if k in out else c
        return PolyHamiltonian(out, exact=exact)

    def __neg__(self):
        return PolyHamiltonian({k: -c for k, c in self._terms.items()}, exact=self.exact)

    def __sub__(self, other):
        if not isinstance(other, PolyHamiltonian):
            return NotImplemented
        return self + (-other)

    def scale(self, s):
        if self.exact and not isinstance(s, (float, complex)):
            s = GaussianRational.coerce(s)
            return PolyHamiltonian({k: c * s for k, c in self._terms.items()}, exact=True)
        s = complex(s)
        return PolyHamiltonian({k: c * s for k, c in self.as_float()._terms.items()}, exact=False)

    def __mul__(self, other):
        if isinstance(other, PolyHamiltonian):
            a, b, exact = self._align(other)
            out: Dict[Key, object] = {}
            for (aa, ah), ca in a._terms.items():
                for (ba, bh), cb in b._terms.items():
                    key = (_merge(aa, ba), _merge(ah, bh))
                    v = ca * cb
                    out[key] = out[key] + v if key in out else v
            return PolyHamiltonian(out, exact=exact)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def conjugate(self):
        return PolyHamiltonian({(h, a): c.conjugate() for (a, h), c in self._terms.items()},
                               exact=self.exact)

    def __eq__(self, other):
        if not isinstance(other, PolyHamiltonian):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def chop(self, tol):
        """Drop coefficients with modulus <= tol (floating mode helper)."""
        return PolyHamiltonian({k: c for k, c in self._terms.items() if abs(c) > tol},
                               exact=self.exact)

    def restrict(self, predicate):
        """Keep the monomials whose key satisfies ``predicate(anti, holo)``."""
        return PolyHamiltonian({k: c for k, c in self._terms.items() if predicate(*k)},
                               exact=self.exact)

    # realness
    def realness_defect(self) -> float:
        """Largest |c(anti,holo) - conj c(holo,anti)| over the term set."""
        worst = 0.0
        zero = GaussianRational() if self.exact else 0j
        for (a, h), c in self._terms.items():
            d = c - self._terms.get((h, a), zero).conjugate()
            if d:
                worst = max(worst, abs(d))
        return worst

    @property
    def is_real(self) -> bool:
        if "real" not in self._cache:
            if self.exact:
                ok = self.realness_defect() == 0
            else:
                ok = self.realness_defect() <= _REAL_RTOL * max(1.0, self.max_abs_coeff())
            self._cache["real"] = ok
        return self._cache["real"]

    # calculus
    def _grad_tables(self):
        """Per-mode derivatives: (conj-gradient table, holo-gradient table)."""
        if "grad" not in self._cache:
            dbar = defaultdict(list)
            dhol = defaultdict(list)
            for (a, h), c in self._terms.items():
                for k in set(a):
                    dbar[k].append(((_drop_one(a, k), h), c * a.count(k)))
                for k in set(h):
                    dhol[k].append(((a, _drop_one(h, k)), c * h.count(k)))
            self._cache["grad"] = (dict(dbar), dict(dhol))
        return self._cache["grad"]

    def conj_gradient(self, k: int):
        dbar, _ = self._grad_tables()
        return PolyHamiltonian.from_terms(((h, a, c) for (a, h), c in dbar.get(k, [])),
                                          exact=self.exact)

    def holo_gradient(self, k: int):
        _, dhol = self._grad_tables()
        return PolyHamiltonian.from_terms(((h, a, c) for (a, h), c in dhol.get(k, [])),
                                          exact=self.exact)

    def support_modes(self):
        out = set()
        for a, h in self._terms:
            out.update(a)
            out.update(h)
        return out

    # numerics
    def _compiled(self, which):
        key = "compiled_" + which
        if key not in self._cache:
            if which == "value":
                rows = [(0, h, a, c) for (a, h), c in self._terms.items()]
            else:
                dbar, _ = self._grad_tables()
                rows = [(k, h, a, c) for k, lst in dbar.items() for (a, h), c in lst]
            self._cache[key] = _Compiled(rows)
        return self._cache[key]

    # text format
    def dump(self) -> str:
        lines = []
        for (a, h), c in sorted(self._terms.items()):
            if self.exact:
                re, im = str(c.re), str(c.im)
            else:
                re, im = repr(float(c.real)), repr(float(c.imag))
            lines.append(f"{re} {im} | holo:{','.join(map(str, h))} | anti:{','.join(map(str, a))}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def load(cls, text: str, exact: bool = True):
        items = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                cpart, hpart, apart = (p.strip() for p in line.split("|"))
                re_s, im_s = cpart.split()
                if not hpart.startswith("holo:") or not apart.startswith("anti:"):
                    raise ValueError("missing holo:/anti: tags")
                holo = tuple(int(x) for x in hpart[5:].split(",") if x)
                anti = tuple(int(x) for x in apart[5:].split(",") if x)
                if exact:
                    c = GaussianRational(Fraction(re_s), Fraction(im_s))
                else:
                    c = complex(float(re_s), float(im_s))
            except ValueError as exc:
                raise ContractError(f"line {lineno}: cannot parse {line!r} ({exc})") from None
            items.append((holo, anti, c))
        return cls.from_terms(items, exact=exact)


class _Compiled:
    """Vectorised evaluation of sum_rows c * prod v[holo] * prod conj(v[anti]).

    Rows are grouped by (len(holo), len(anti)) so that each group is a pair of
    dense index matrices; results are scattered into ``target`` slots.
    """

    def __init__(self, rows):
        groups = defaultdict(lambda: ([], [], [], []))
        self.max_mode = -1
        for tgt, h, a, c in rows:
            g = groups[(len(h), len(a))]
            g[0].append(tgt)
            g[1].append(complex(c))
            g[2].append(h)
            g[3].append(a)
            if h or a:
                self.max_mode = max(self.max_mode, max(h + a))
            self.max_mode = max(self.max_mode, tgt)
        self.groups = []
        for (nh, na), (tgt, cs, hs, as_) in groups.items():
            self.groups.append((
                np.asarray(tgt, dtype=np.intp),
                np.asarray(cs, dtype=np.complex128),
                np.asarray(hs, dtype=np.intp).reshape(len(cs), nh),
                np.asarray(as_, dtype=np.intp).reshape(len(cs), na),
            ))

    def terms(self, v):
        for tgt, cs, hidx, aidx in self.groups:
            t = cs.copy()
            if hidx.shape[1]:
                t *= np.prod(v[hidx], axis=1)
            if aidx.shape[1]:
                t *= np.prod(np.conj(v[aidx]), axis=1)
            yield tgt, t

    def scatter(self, v, size):
        out = np.zeros(size, dtype=np.complex128)
        for tgt, t in self.terms(v):
            out += np.bincount(tgt, weights=t.real, minlength=size)
            out += 1j * np.bincount(tgt, weights=t.imag, minlength=size)
        return out


def _vec(v):
    from .spectral import as_coeffs
    return np.asarray(as_coeffs(v), dtype=np.complex128)


def poisson_bracket(F: PolyHamiltonian, G: PolyHamiltonian) -> PolyHamiltonian:
    """Exact bracket {F,G}; both operands must be real-valued."""
    if not F.is_real:
        raise ContractError("first bracket operand is not real-valued")
    if not G.is_real:
        raise ContractError("second bracket operand is not real-valued")
    F, G, exact = F._align(G)
    fbar, fhol = F._grad_tables()
    gbar, ghol = G._grad_tables()
    out: Dict[Key, object] = {}

    def accumulate(xs, ys, sign):
        for (xa, xh), cx in xs:
            for (ya, yh), cy in ys:
                key = (_merge(xa, ya), _merge(xh, yh))
                val = cx * cy if sign > 0 else -(cx * cy)
                out[key] = out[key] + val if key in out else val

    for k in set(fbar) & set(ghol):
        accumulate(fbar[k], ghol[k], +1)
    for k in set(gbar) & set(fhol):
        accumulate(gbar[k], fhol[k], -1)
    pref = _scalar(GaussianRational(0, -2), exact) if exact else -2j
    return PolyHamiltonian({k: c * pref for k, c in out.items()}, exact=exact)


def conj_gradient(H: PolyHamiltonian, k: int) -> PolyHamiltonian:
    return H.conj_gradient(k)


def vector_field(H: PolyHamiltonian, v):
    """Numeric X_H(v) with X_H(v)_k = -2i (dH/d conj v_k)(v); returns a coefficient array."""
    from .spectral import SzegoField
    x = _vec(v)
    comp = H._compiled("grad")
    if comp.max_mode >= x.size:
        raise ContractError(f"polynomial involves mode {comp.max_mode} beyond truncation N={x.size - 1}")
    out = -2j * comp.scatter(x, x.size)
    return SzegoField(out) if isinstance(v, SzegoField) else out


def vector_field_array(H: PolyHamiltonian, x: np.ndarray) -> np.ndarray:
    """Same as :func:`vector_field` on a raw coefficient array, without checks."""
    return -2j * H._compiled("grad").scatter(x, x.size)


def evaluate(H: PolyHamiltonian, v) -> float:
    if not H.is_real:
        raise ContractError("evaluate needs a real-valued polynomial")
    x = _vec(v)
    comp = H._compiled("value")
    if comp.max_mode >= x.size:
        raise ContractError(f"polynomial involves mode {comp.max_mode} beyond truncation N={x.size - 1}")
    total = 0j
    mag = 0.0
    for _, t in comp.terms(x):
        total += t.sum()
        mag += np.abs(t).sum()
    if abs(total.imag) > 1e-12 * max(mag, 1e-300) and abs(total.imag) > 0:
        raise InternalConsistencyError(
            f"imaginary residue {total.imag:.3e} exceeds 1e-12 of magnitude {mag:.3e}")
    return float(total.real)


def support_modes(H: PolyHamiltonian):
    return H.support_modes()


# ---- standard energies ----

def _c(x, exact):
    if exact:
        return GaussianRational.coerce(x if not isinstance(x, float) else Fraction(x))
    return complex(x)


def n2(N: int, exact=True) -> PolyHamiltonian:
    """N_2 = sum |v_k|^2."""
    return PolyHamiltonian.from_terms((((k,), (k,), _c(1, exact)) for k in range(N + 1)), exact=exact)


def n2_tilde(m: int, N: int, exact=True) -> PolyHamiltonian:
    """sum_{n >= 2m+1} |v_n|^2."""
    return PolyHamiltonian.from_terms((((k,), (k,), _c(1, exact)) for k in range(2 * m + 1, N + 1)),
                                      exact=exact)


def quartic_tuples(N: int):
    """Ordered (k1,k2,k3,k4) in [0,N]^4 with k1 - k2 + k3 - k4 = 0."""
    for k1 in range(N + 1):
        for k3 in range(N + 1):
            s = k1 + k3
            for k2 in range(max(0, s - N), min(N, s) + 1):
                yield k1, k2, k3, s - k2


def n4(N: int, exact=True) -> PolyHamiltonian:
    """N_4 = ||v||_{L^4}^4 on modes <= N."""
    one = _c(1, exact)
    return PolyHamiltonian.from_terms((((k1, k3), (k2, k4), one) for k1, k2, k3, k4 in quartic_tuples(N)),
                                      exact=exact)


def h0(N: int, exact=True) -> PolyHamiltonian:
    """H_0 = (1/2) sum k^2 |v_k|^2."""
    return PolyHamiltonian.from_terms((((k,), (k,), _c(Fraction(k * k, 2), exact)) for k in range(1, N + 1)),
                                      exact=exact)


def r_term(N: int, exact=True) -> PolyHamiltonian:
    """R = (1/4)(sum over non-resonant quadruples - sum |v_k|^4)."""
    q = _c(Fraction(1, 4), exact)
    items = [((k1, k3), (k2, k4), q) for k1, k2, k3, k4 in quartic_tuples(N)
             if k1 * k1 - k2 * k2 + k3 * k3 - k4 * k4 != 0]
    items += [((k, k), (k, k), -q) for k in range(N + 1)]
    return PolyHamiltonian.from_terms(items, exact=exact)


def r_tilde(N: int, exact=True) -> PolyHamiltonian:
    """R~ = -(1/4) sum |v_k|^4."""
    q = _c(Fraction(-1, 4), exact)
    return PolyHamiltonian.from_terms((((k, k), (k, k), q) for k in range(N + 1)), exact=exact)


def h0_m(m: int, N: int, dispersion=1, exact=None) -> PolyHamiltonian:
    """Quadratic part of the plane-wave frame energy.

    (D/2) sum n^2|v_n|^2 + ((1 - m^2 D)/2) sum |v_n|^2 + (1/2) Re sum_{j+k=2m} conj(v_j v_k),
    where D = ``dispersion`` (epsilon**alpha). Exact when D is an int or Fraction.
    """
    if exact is None:
        exact = isinstance(dispersion, (int, Fraction, GaussianRational))
    D = _c(dispersion, exact) if exact else complex(dispersion)
    half = _c(Fraction(1, 2), exact)
    quarter = _c(Fraction(1, 4), exact)
    items = []
    for n in range(N + 1):
        c = half * D * (n * n) + half * (_c(1, exact) - D * (m * m))
        items.append(((n,), (n,), c))
    for j in range(0, min(2 * m, N) + 1):
        k = 2 * m - j
        if k > N:
            continue
        items.append(((), (j, k), quarter))
        items.append(((j, k), (), quarter))
    return PolyHamiltonian.from_terms(items, exact=exact)


def h1_m(m: int, N: int, exact=True) -> PolyHamiltonian:
    """Re sum_{k - l + n = m} v_k conj(v_l) v_n (ordered in k, n)."""
    half = _c(Fraction(1, 2), exact)
    items = []
    for k in range(N + 1):
        for n in range(N + 1):
            l = k + n - m
            if 0 <= l <= N:
                items.append(((k, n), (l,), half))
                items.append(((l,), (k, n), half))
    return PolyHamiltonian.from_terms(items, exact=exact)


def l_m(m: int, exact=True) -> PolyHamiltonian:
    """L_m = Re v_m."""
    half = _c(Fraction(1, 2), exact)
    return PolyHamiltonian.from_terms([((m,), (), half), ((), (m,), half)], exact=exact)
