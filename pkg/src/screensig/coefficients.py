"""Surface coefficients of the screen in arc-length parametrization.

Each coefficient is a :class:`PiecewiseField` on ``[0, L]`` made of constant
or linear pieces.  ``beta`` is stored split into its real part ``beta_r``
and the absorption parameter ``beta_i``; the complex value at wave number
``k`` is ``beta_r + 1j * beta_i / k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, DomainError

_TOL = 1e-12


@dataclass(frozen=True)
class Piece:
    s0: float
    s1: float
    v0: complex
    v1: complex

    @property
    def is_constant(self) -> bool:
        return self.v0 == self.v1

    def at(self, s):
        if self.s1 == self.s0:
            return np.full_like(np.asarray(s, dtype=float), self.v0, dtype=complex)
        t = (np.asarray(s, dtype=float) - self.s0) / (self.s1 - self.s0)
        return self.v0 + (self.v1 - self.v0) * t


class PiecewiseField:
    """Piecewise constant/linear scalar field; left-limit at breakpoints."""

    def __init__(self, pieces):
        pieces = sorted(pieces, key=lambda p: p.s0)
        if not pieces:
            raise ValueError("a field needs at least one piece")
        for p, q in zip(pieces, pieces[1:]):
            if abs(p.s1 - q.s0) > _TOL:
                raise ValueError(f"pieces must tile the interval (gap at s={p.s1})")
        for p in pieces:
            if p.s1 <= p.s0:
                raise ValueError("empty piece")
        self.pieces = tuple(pieces)
        self.breaks = np.array([p.s0 for p in pieces] + [pieces[-1].s1])

    @classmethod
    def constant(cls, value, length):
        return cls([Piece(0.0, float(length), value, value)])

    @property
    def length(self) -> float:
        return float(self.breaks[-1])

    @property
    def is_real(self) -> bool:
        return all(np.isreal(p.v0) and np.isreal(p.v1) for p in self.pieces)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.breaks[0], self.breaks[-1]
        if np.any(s < lo - _TOL) or np.any(s > hi + _TOL):
            raise DomainError(f"arc parameter outside [{lo}, {hi}]")
        # left-limit: s on a breakpoint belongs to the piece ending there
        idx = np.searchsorted(self.breaks, s, side="left") - 1
        idx = np.clip(idx, 0, len(self.pieces) - 1)
        out = np.empty(s.shape, dtype=complex)
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = p.at(s[sel])
        if self.is_real:
            return out.real
        return out

    def bounds(self):
        """Exact (inf |f|, inf Re f, sup Re f, inf Im f, sup Im f) over the pieces."""
        inf_abs = np.inf
        vals = []
        for p in self.pieces:
            a, b = complex(p.v0), complex(p.v1)
            vals += [a, b]
            # |f| on a segment of the complex plane: distance from origin
            d = b - a
            dd = abs(d) ** 2
            if dd == 0:  # constant, or a slope so small its square underflows
                m = min(abs(a), abs(b))
            else:
                t = np.clip(-(a.conjugate() * d).real / dd, 0.0, 1.0)
                m = abs(a + t * d)
            inf_abs = min(inf_abs, m)
        vals = np.array(vals)
        return (float(inf_abs), float(vals.real.min()), float(vals.real.max()),
                float(vals.imag.min()), float(vals.imag.max()))

    def patched(self, s0, s1, factor) -> "PiecewiseField":
        """Copy with the field multiplied by ``factor`` on ``[s0, s1]``."""
        cuts = sorted({s0, s1} | set(self.breaks.tolist()))
        out = []
        for a, b in zip(cuts, cuts[1:]):
            if b - a <= _TOL:
                continue
            va, vb = self._inside(a, b)
            f = factor if (a >= s0 - _TOL and b <= s1 + _TOL) else 1.0
            out.append(Piece(a, b, va * f, vb * f))
        return PiecewiseField(out)

    def _inside(self, a, b):
        mid = 0.5 * (a + b)
        for p in self.pieces:
            if p.s0 <= mid <= p.s1:
                return p.at(a).item(), p.at(b).item()
        raise DomainError(mid)

    def to_list(self):
        out = []
        for p in self.pieces:
            v0, v1 = _real(p.v0), _real(p.v1)
            out.append({"s0": p.s0, "s1": p.s1, "value": v0 if p.is_constant else [v0, v1]})
        return out

    @classmethod
    def from_list(cls, items):
        pieces = []
        for it in items:
            v = it["value"]
            v0, v1 = (v[0], v[1]) if isinstance(v, (list, tuple)) else (v, v)
            pieces.append(Piece(float(it["s0"]), float(it["s1"]), float(v0), float(v1)))
        return cls(pieces)

    def __eq__(self, other):
        return isinstance(other, PiecewiseField) and self.pieces == other.pieces

    def __repr__(self):
        return f"PiecewiseField({list(self.pieces)!r})"


def _real(v):
    v = complex(v)
    if v.imag != 0:
        raise ValueError("only real-valued pieces can be serialized")
    return v.real


@dataclass(frozen=True)
class AdmissibilityReport:
    inf_abs_alpha: float
    inf_mu: float
    sup_im_beta: float  # sup of beta_i; Im(beta) = beta_i / k


@dataclass(frozen=True)
class SurfaceCoefficients:
    """Screen coefficients ``alpha, mu, beta`` on ``[0, L]``."""

    alpha: PiecewiseField
    mu: PiecewiseField
    beta_r: PiecewiseField
    beta_i: PiecewiseField

    def __post_init__(self):
        lengths = {f.length for f in (self.alpha, self.mu, self.beta_r, self.beta_i)}
        if max(lengths) - min(lengths) > 1e-9:
            raise ValueError("all coefficient fields must live on the same arc")

    @classmethod
    def constant(cls, length, alpha=1.0, mu=1.0, beta_r=1.0, beta_i=0.0):
        c = PiecewiseField.constant
        return cls(c(alpha, length), c(mu, length), c(beta_r, length), c(beta_i, length))

    @property
    def length(self) -> float:
        return self.alpha.length

    def evaluate(self, s, k):
        """``(alpha(s), mu(s), beta(s))`` with ``beta = beta_r + i beta_i / k``."""
        beta = self.beta_r(s) + 1j * self.beta_i(s) / k
        return self.alpha(s), self.mu(s), beta

    def validate(self) -> AdmissibilityReport:
        inf_abs_alpha = self.alpha.bounds()[0]
        inf_mu = self.mu.bounds()[1]
        sup_bi = self.beta_i.bounds()[2]
        if not inf_abs_alpha > 0:
            raise AdmissibilityError(f"inf |alpha| = {inf_abs_alpha:g}; 1/alpha must be bounded")
        if not inf_mu > 0:
            raise AdmissibilityError(f"inf mu = {inf_mu:g}; mu must be uniformly positive")
        if sup_bi > 0:
            raise AdmissibilityError(f"sup Im beta = {sup_bi:g} > 0; beta must be absorbing")
        return AdmissibilityReport(inf_abs_alpha, inf_mu, sup_bi)

    def patched(self, name, s0, s1, factor) -> "SurfaceCoefficients":
        fields = {"alpha": self.alpha, "mu": self.mu, "beta_r": self.beta_r,
                  "beta_i": self.beta_i}
        if name == "beta":
            fields["beta_r"] = self.beta_r.patched(s0, s1, factor)
            fields["beta_i"] = self.beta_i.patched(s0, s1, factor)
        else:
            fields[name] = fields[name].patched(s0, s1, factor)
        return SurfaceCoefficients(**fields)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha.to_list(), "mu": self.mu.to_list(),
                "beta_re": self.beta_r.to_list(), "beta_im": self.beta_i.to_list()}

    @classmethod
    def from_dict(cls, data) -> "SurfaceCoefficients":
        f = PiecewiseField.from_list
        return cls(f(data["alpha"]), f(data["mu"]), f(data["beta_re"]), f(data["beta_im"]))
