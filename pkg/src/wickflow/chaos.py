"""Chaos expansions ``F = sum_alpha f_alpha H_alpha`` and the Wick algebra.

Coefficients come in three kinds:

* ``scalar``: real numbers
* ``vector``: arrays of shape ``(d,)``
* ``trajectory``: arrays of shape ``(len(grid), d)`` sampled on a time grid

The basis ``H_alpha`` itself is never evaluated; an expansion is the sparse
map from index to coefficient.  Hermite polynomials are the probabilists'
family, Hermite functions are the L2(R)-orthonormal family with
``xi_1(x) = pi^(-1/4) exp(-x^2/2)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import KindMismatchError
from .multiindex import MultiIndex, Truncation, factorial, log_weight

__all__ = [
    "ChaosExpansion",
    "KondratievNorm",
    "HermiteBasis",
    "wick",
    "wick_power",
    "kondratiev_norm_sq",
    "hermite_poly",
    "hermite_fn",
    "hermite_fn_deriv",
    "hermite_fns",
    "brownian_coeffs",
    "white_noise_coeffs",
    "expectation",
    "variance",
    "truncate",
    "truncation_tail",
    "to_csv",
    "from_csv",
    "summary",
]

KINDS = ("scalar", "vector", "trajectory")


def _is_zero(c) -> bool:
    return not np.any(c)


class ChaosExpansion:
    """Sparse, immutable map from :class:`MultiIndex` to coefficient."""

    __slots__ = ("_coeffs", "kind", "dim", "grid")

    def __init__(self, coeffs: Mapping[MultiIndex, object] | None = None, kind: str = "scalar",
                 dim: int | None = None, grid=None):
        if kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {kind!r}")
        self.kind = kind
        self.grid = None if grid is None else np.asarray(grid, dtype=float)
        if kind == "trajectory" and self.grid is None:
            raise ValueError("trajectory expansions need a time grid")
        store: dict[MultiIndex, object] = {}
        for alpha, c in (coeffs or {}).items():
            if not isinstance(alpha, MultiIndex):
                alpha = MultiIndex(alpha)
            c = self._coerce(c)
            if dim is None and kind != "scalar":
                dim = c.shape[-1]
            if kind != "scalar" and c.shape[-1] != dim:
                raise KindMismatchError(f"coefficient at {alpha} has dimension {c.shape[-1]}, expected {dim}")
            if not _is_zero(c):
                store[alpha] = c
        self.dim = 1 if kind == "scalar" else dim
        self._coeffs = MappingProxyType(dict(sorted(store.items(), key=lambda kv: kv[0].sort_key())))

    def _coerce(self, c):
        if self.kind == "scalar":
            return float(c)
        arr = np.array(c, dtype=float)
        if self.kind == "vector" and arr.ndim != 1:
            raise KindMismatchError("vector coefficients must be 1-d arrays")
        if self.kind == "trajectory":
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[0] != len(self.grid):
                raise KindMismatchError("trajectory coefficient length does not match the grid")
        arr.setflags(write=False)
        return arr

    @classmethod
    def unit(cls) -> ChaosExpansion:
        return cls({MultiIndex.zero(): 1.0})

    @classmethod
    def basis(cls, alpha: MultiIndex, coeff=1.0) -> ChaosExpansion:
        """Single-term scalar expansion ``coeff * H_alpha``."""
        return cls({alpha: coeff})

    @property
    def coeffs(self) -> Mapping[MultiIndex, object]:
        return self._coeffs

    def support(self) -> list[MultiIndex]:
        return list(self._coeffs)

    def __getitem__(self, alpha: MultiIndex):
        if alpha in self._coeffs:
            return self._coeffs[alpha]
        return self.zero_coeff()

    def zero_coeff(self):
        if self.kind == "scalar":
            return 0.0
        if self.kind == "vector":
            return np.zeros(self.dim)
        return np.zeros((len(self.grid), self.dim))

    def items(self):
        return self._coeffs.items()

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(self._coeffs)

    def like(self, coeffs: Mapping[MultiIndex, object]) -> ChaosExpansion:
        return ChaosExpansion(coeffs, kind=self.kind, dim=self.dim, grid=self.grid)

    def _check_same(self, other: ChaosExpansion):
        if self.kind != other.kind or (self.kind != "scalar" and self.dim != other.dim):
            raise KindMismatchError(f"cannot combine {self.kind}({self.dim}) and {other.kind}({other.dim})")

    def __add__(self, other: ChaosExpansion) -> ChaosExpansion:
        self._check_same(other)
        out = dict(self._coeffs)
        for alpha, c in other.items():
            out[alpha] = out[alpha] + c if alpha in out else c
        return self.like(out)

    def __sub__(self, other: ChaosExpansion) -> ChaosExpansion:
        return self + (-1.0) * other

    def __neg__(self) -> ChaosExpansion:
        return (-1.0) * self

    def __mul__(self, s: float) -> ChaosExpansion:
        if isinstance(s, ChaosExpansion):
            raise TypeError("use wick() for products of expansions")
        return self.like({a: s * c for a, c in self.items()})

    __rmul__ = __mul__

    def map(self, fn) -> ChaosExpansion:
        """Apply ``fn(alpha, coeff)`` coefficientwise, keeping the kind."""
        return self.like({a: fn(a, c) for a, c in self.items()})

    def max_abs_diff(self, other: ChaosExpansion) -> float:
        keys = set(self._coeffs) | set(other.coeffs)
        if not keys:
            return 0.0
        return max(float(np.max(np.abs(np.asarray(self[a]) - np.asarray(other[a])))) for a in keys)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChaosExpansion):
            return NotImplemented
        if self.kind != other.kind or set(self._coeffs) != set(other.coeffs):
            return False
        return all(np.array_equal(c, other.coeffs[a]) for a, c in self.items())

    __hash__ = None

    def __repr__(self) -> str:
        terms = ", ".join(f"{a.serialize()}: {c!r}" for a, c in list(self.items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"ChaosExpansion<{self.kind}>({{{terms}{more}}})"


@dataclass(frozen=True)
class KondratievNorm:
    """Weight ``(2N)^(-p alpha)`` (distribution side, ``sign=-1``) or
    ``(alpha!)^2 (2N)^(p alpha)`` (test side, ``sign=+1``)."""

    p: float
    sign: int = -1

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("Kondratiev weight exponent must be non-negative")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    def log_factor(self, alpha: MultiIndex) -> float:
        if self.sign < 0:
            return -self.p * log_weight(alpha)
        return 2.0 * math.log(factorial(alpha)) + self.p * log_weight(alpha)


def _product(f, g, kind_f: str, kind_g: str):
    if kind_f == "scalar" or kind_g == "scalar":
        return f * g
    raise KindMismatchError(f"Wick product of {kind_f} by {kind_g} coefficients is undefined")


def wick(F: ChaosExpansion, G: ChaosExpansion) -> ChaosExpansion:
    """``(F <> G)_gamma = sum_{alpha+beta=gamma} f_alpha g_beta`` over the full supports."""
    if F.kind != "scalar" and G.kind != "scalar":
        raise KindMismatchError(f"Wick product of {F.kind} by {G.kind} coefficients is undefined")
    if F.kind == "scalar":
        kind, dim, grid = G.kind, G.dim, G.grid
    else:
        kind, dim, grid = F.kind, F.dim, F.grid
    out: dict[MultiIndex, object] = {}
    for alpha, f in F.items():
        for beta, g in G.items():
            gamma = alpha + beta
            term = _product(f, g, F.kind, G.kind)
            out[gamma] = out[gamma] + term if gamma in out else term
    return ChaosExpansion(out, kind=kind, dim=dim, grid=grid)


def wick_power(F: ChaosExpansion, n: int) -> ChaosExpansion:
    if F.kind != "scalar":
        raise KindMismatchError("Wick powers are defined for scalar expansions")
    if n < 0:
        raise ValueError("Wick power must be non-negative")
    out = ChaosExpansion.unit()
    for _ in range(n):
        out = wick(out, F)
    return out


def _coeff_sq(c, kind: str):
    if kind == "scalar":
        return c * c
    if kind == "vector":
        return float(np.dot(c, c))
    return np.einsum("ij,ij->i", c, c)


def kondratiev_norm_sq(F: ChaosExpansion, w: KondratievNorm, reduce: str | None = None):
    """Weighted squared norm.

    Trajectory expansions give one value per grid node, or with
    ``reduce="sup"`` the norm of the pointwise-sup coefficients
    ``sum sup_t |f_alpha(t)|^2 w_alpha``.
    """
    terms = []
    for alpha, c in F.items():
        sq = _coeff_sq(c, F.kind)
        if F.kind == "trajectory" and reduce == "sup":
            sq = float(np.max(sq))
        terms.append(sq * math.exp(w.log_factor(alpha)))
    if F.kind == "trajectory" and reduce != "sup":
        return np.sum(terms, axis=0) if terms else np.zeros(len(F.grid))
    return math.fsum(terms)


# -- Hermite polynomials and functions ------------------------------------

def hermite_poly(n: int, x):
    """Probabilists' Hermite polynomial ``h_n`` (``h_2 = x^2 - 1``)."""
    x = np.asarray(x, dtype=float)
    if n < 0:
        raise ValueError("degree must be >= 0")
    h_prev, h = np.ones_like(x), x.copy()
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for j in range(1, n):
        h_prev, h = h, x * h - j * h_prev
    return h if h.ndim else float(h)


def hermite_fns(n_max: int, x) -> np.ndarray:
    """Rows ``xi_1 .. xi_{n_max}`` evaluated at ``x``; shape ``(n_max,) + x.shape``.

    Uses the three-term recurrence of the orthonormal functions, which is
    stable for large degree where the polynomial form overflows.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max,) + x.shape)
    if n_max == 0:
        return out
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for j in range(1, n_max - 1):
        out[j + 1] = math.sqrt(2.0 / (j + 1)) * x * out[j] - math.sqrt(j / (j + 1)) * out[j - 1]
    return out


def hermite_fn(n: int, x):
    """Hermite function ``xi_n``, ``n >= 1``."""
    if n < 1:
        raise ValueError("Hermite functions are indexed from 1")
    v = hermite_fns(n, x)[n - 1]
    return v if np.ndim(v) else float(v)


def hermite_fn_deriv(n: int, x):
    """``d/dx xi_n`` via ``psi_j' = sqrt(j/2) psi_{j-1} - sqrt((j+1)/2) psi_{j+1}``."""
    if n < 1:
        raise ValueError("Hermite functions are indexed from 1")
    j = n - 1
    psi = hermite_fns(n + 1, x)
    d = -math.sqrt((j + 1) / 2.0) * psi[j + 1]
    if j > 0:
        d = d + math.sqrt(j / 2.0) * psi[j - 1]
    return d if np.ndim(d) else float(d)


class HermiteBasis:
    """Cached Hermite polynomial coefficients and a Gauss-Hermite rule for ``xi_n``."""

    def __init__(self, max_degree: int, max_mode: int, nodes: int | None = None):
        self.max_degree = max_degree
        self.max_mode = max_mode
        self.poly_coeffs = [np.polynomial.hermite_e.herme2poly([0] * n + [1]) for n in range(max_degree + 1)]
        # xi_i xi_j = exp(-x^2) * poly of degree i+j-2: exact for 2*nodes-1 >= that degree
        self.n_nodes = nodes or max(max_mode + 2, 8)
        self.nodes, self.weights = np.polynomial.hermite.hermgauss(self.n_nodes)

    def poly(self, n: int, x):
        return np.polynomial.polynomial.polyval(x, self.poly_coeffs[n])

    def _poly_part(self, x) -> np.ndarray:
        # xi_n(x) * exp(x^2/2), via the same recurrence without the Gaussian
        out = np.empty((self.max_mode,) + np.shape(x))
        out[0] = np.pi ** -0.25
        if self.max_mode > 1:
            out[1] = math.sqrt(2.0) * x * out[0]
        for j in range(1, self.max_mode - 1):
            out[j + 1] = math.sqrt(2.0 / (j + 1)) * x * out[j] - math.sqrt(j / (j + 1)) * out[j - 1]
        return out

    def gram(self) -> np.ndarray:
        """``int xi_i xi_j dx`` for ``i, j <= max_mode`` by quadrature."""
        P = self._poly_part(self.nodes)
        return (P * self.weights) @ P.T


# -- canonical processes --------------------------------------------------

def brownian_coeffs(t: float, m: int) -> ChaosExpansion:
    """``B(t) = sum_k (int_0^t xi_k) H_{eps_k}`` for ``k <= m``.

    Composite Gauss-Legendre on unit panels; the node count grows with the
    local wavenumber ``sqrt(2m)`` of ``xi_m`` so the rule stays resolved.
    """
    if t < 0:
        raise ValueError("Brownian motion is indexed by t >= 0")
    if t == 0 or m == 0:
        return ChaosExpansion({})
    panels = max(1, math.ceil(t))
    x, w = np.polynomial.legendre.leggauss(48 + 4 * math.isqrt(2 * m))
    edges = np.linspace(0.0, t, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (0.5 * (edges[1:] + edges[:-1])[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    vals = hermite_fns(m, nodes) @ weights
    return ChaosExpansion({MultiIndex.unit(k): float(vals[k - 1]) for k in range(1, m + 1)})


def white_noise_coeffs(t: float, m: int) -> ChaosExpansion:
    """``W(t) = sum_k xi_k(t) H_{eps_k}`` for ``k <= m``."""
    vals = hermite_fns(m, t)
    return ChaosExpansion({MultiIndex.unit(k): vals[k - 1] for k in range(1, m + 1)})


# -- moments and truncation -----------------------------------------------

def expectation(F: ChaosExpansion):
    return F[MultiIndex.zero()]


def variance(F: ChaosExpansion) -> float:
    """``sum_{alpha > 0} alpha! |f_alpha|^2`` (finite sum; L2-representable part)."""
    if F.kind == "trajectory":
        raise KindMismatchError("variance needs scalar or vector coefficients")
    return math.fsum(factorial(a) * _coeff_sq(c, F.kind) for a, c in F.items() if a)


def truncate(F: ChaosExpansion, t: Truncation) -> ChaosExpansion:
    return F.like({a: c for a, c in F.items() if a in t})


def truncation_tail(F: ChaosExpansion, t: Truncation, p: float) -> float:
    """Weighted mass ``sum |f_alpha|^2 (2N)^(-p alpha)`` of the dropped coefficients."""
    dropped = F.like({a: c for a, c in F.items() if a not in t})
    return kondratiev_norm_sq(dropped, KondratievNorm(p), reduce="sup")


# -- serialization --------------------------------------------------------

def to_csv(F: ChaosExpansion) -> str:
    """Coefficient dump: ``alpha`` column plus one column per component."""
    if F.kind == "trajectory":
        raise KindMismatchError("trajectory expansions are written by the solvers")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if F.kind == "scalar":
        w.writerow(["alpha", "coeff"])
        for a, c in F.items():
            w.writerow([a.serialize(), repr(float(c))])
    else:
        w.writerow(["alpha"] + [f"coeff_{i + 1}" for i in range(F.dim)])
        for a, c in F.items():
            w.writerow([a.serialize()] + [repr(float(x)) for x in c])
    return buf.getvalue()


def from_csv(text: str) -> ChaosExpansion:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "alpha" or len(rows[0]) < 2:
        raise ValueError("coefficient CSV must start with an 'alpha' header")
    header = rows[0]
    scalar = header[1:] == ["coeff"]
    coeffs = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} columns, got {len(row)}")
        alpha = MultiIndex.parse(row[0])
        vals = [float(x) for x in row[1:]]
        if alpha in coeffs:
            raise ValueError(f"line {lineno}: duplicate index {row[0]}")
        coeffs[alpha] = vals[0] if scalar else np.array(vals)
    if scalar:
        return ChaosExpansion(coeffs)
    return ChaosExpansion(coeffs, kind="vector", dim=len(header) - 1)


def summary(F: ChaosExpansion, ps: Iterable[float] = (0.5, 1.0, 2.0, 4.0)) -> dict:
    out = {
        "kind": F.kind,
        "dim": F.dim,
        "terms": len(F),
        "norms_sq": {repr(float(p)): kondratiev_norm_sq(F, KondratievNorm(p), reduce="sup") for p in ps},
    }
    if F.kind != "trajectory":
        e = expectation(F)
        out["expectation"] = float(e) if F.kind == "scalar" else [float(x) for x in e]
        out["variance"] = variance(F)
    return out
