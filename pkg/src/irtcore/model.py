"""Core IRT model: response data, parameter containers, pointwise losses,
conditional/joint negative log-likelihoods, and signed design construction.

Conventions. Responses are Y_ij in {-1, +1} for item i and examinee j. Item
parameters are alpha_i = (a_i, b_i) plus a guessing probability c_i; ability
parameters are beta_j = (theta_j, -1). The probability of a correct answer is

    p = c + (1 - c) * sigmoid(a * theta - b).

Conditional problems are phrased over signed rows x = -Y * (fixed vector), so
that a failed response contributes the shifted logistic loss

    g(z) = ln(1 + e^z) - ln(1 - c)

and a passed response contributes the bounded sigmoidal loss

    h(z) = -ln(c + (1 - c) / (1 + e^z)) = softplus(z) - softplus(z + ln c),

both evaluated at z = x . eta.  With c = 0 both reduce to softplus(z), the
plain logistic loss, and the joint negative log-likelihood over all (i, j)
factorizes both by item and by examinee.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelKind",
    "LossKind",
    "Orientation",
    "ResponseMatrix",
    "ItemParameters",
    "AbilityParameters",
    "SignedDesign",
    "icc_probability",
    "pointwise_loss",
    "conditional_nll",
    "full_nll",
    "build_signed_design",
    "softplus",
    "sigmoid",
]


class ModelKind(enum.Enum):
    ONE_PL = "1pl"
    TWO_PL = "2pl"
    THREE_PL = "3pl"

    @classmethod
    def parse(cls, text):
        try:
            return cls(str(text).lower())
        except ValueError:
            raise ValueError(f"unknown model kind: {text!r}") from None

    @property
    def has_guessing(self):
        return self is ModelKind.THREE_PL


class LossKind(enum.Enum):
    FAIL = -1  # label -1, g-loss
    PASS = +1  # label +1, h-loss


class Orientation(enum.Enum):
    BY_ITEM = "by_item"  # compress over examinees: rows are -Y_ij * beta_j
    BY_EXAMINEE = "by_examinee"  # compress over items: rows are -Y_ij * alpha_i


def sigmoid(z):
    """Numerically stable logistic function 1 / (1 + exp(-z))."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0, e) / (1.0 + e)


def softplus(z):
    """ln(1 + exp(z)) computed as max(z, 0) + log1p(exp(-|z|))."""
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def softplus_sigmoid(z):
    """(softplus(z), sigmoid(z)) sharing one exponential evaluation."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    sp = np.maximum(z, 0.0) + np.log1p(e)
    return sp, np.where(z >= 0, 1.0, e) / (1.0 + e)


@dataclass
class ResponseMatrix:
    """Dense m x n matrix of responses with entries in {-1, +1}.

    Stored row-major by item as int8. Treat instances as immutable.
    """

    entries: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.entries)
        if y.ndim != 2 or y.size == 0:
            raise ValueError("response matrix must be 2-d and non-empty")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("response entries must be -1 or +1")
        self.entries = np.ascontiguousarray(y, dtype=np.int8)

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    @classmethod
    def from_zero_one(cls, y01):
        """Build from a {0, 1} matrix, mapping 0 -> -1."""
        y01 = np.asarray(y01)
        if not np.all(np.isin(y01, (0, 1))):
            raise ValueError("expected entries in {0, 1}")
        return cls(np.where(y01 == 0, -1, 1).astype(np.int8))

    def packed(self):
        """Bit-packed copy (1 bit per entry, +1 -> 1)."""
        return np.packbits(self.entries > 0, axis=1), self.entries.shape

    @classmethod
    def from_packed(cls, bits, shape):
        m, n = shape
        y01 = np.unpackbits(bits, axis=1, count=n)
        return cls.from_zero_one(y01[:m, :n])


def _as_float_vector(x, name):
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass
class ItemParameters:
    """Per-item (a, b, c): discrimination, difficulty, guessing probability."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        self.a = _as_float_vector(self.a, "a")
        self.b = _as_float_vector(self.b, "b")
        if self.c is None:
            self.c = np.zeros_like(self.a)
        self.c = _as_float_vector(self.c, "c")
        if not (self.a.shape == self.b.shape == self.c.shape):
            raise ValueError("a, b, c must have equal length")
        if np.any(self.a <= 0):
            raise ValueError("discrimination a must be positive")
        if np.any((self.c < 0) | (self.c >= 0.5)):
            raise ValueError("guessing c must lie in [0, 0.5)")

    @property
    def m(self):
        return self.a.shape[0]

    def alpha(self):
        """Stacked rows alpha_i = (a_i, b_i), shape (m, 2)."""
        return np.column_stack([self.a, self.b])

    def difficulty_scaled(self):
        """Difficulties in the alternative b' = b / a parameterization."""
        return self.b / self.a


@dataclass
class AbilityParameters:
    """Per-examinee ability theta."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = _as_float_vector(self.theta, "theta")

    @property
    def n(self):
        return self.theta.shape[0]

    def beta(self):
        """Stacked rows beta_j = (theta_j, -1), shape (n, 2)."""
        return np.column_stack([self.theta, -np.ones_like(self.theta)])


@dataclass
class SignedDesign:
    """Rows x = -Y * (fixed vector) with weights, loss kinds, and guessing values.

    ``is_pass[r]`` is True for rows carrying the h-loss (label +1) and False
    for rows carrying the g-loss (label -1). ``c`` holds the guessing value
    attached to each row's loss (all zeros for 1PL/2PL designs).
    """

    rows: np.ndarray
    weights: np.ndarray = None
    is_pass: np.ndarray = None
    c: np.ndarray = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise ValueError("design rows must have shape (r, 2)")
        if not np.all(np.isfinite(rows)):
            raise ValueError("design rows must be finite")
        r = rows.shape[0]
        self.rows = rows
        self.weights = (
            np.ones(r) if self.weights is None
            else _as_float_vector(self.weights, "weights")
        )
        if self.is_pass is None:
            self.is_pass = np.zeros(r, dtype=bool)
        self.is_pass = np.asarray(self.is_pass, dtype=bool)
        self.c = (
            np.zeros(r) if self.c is None else _as_float_vector(self.c, "c")
        )
        if not (len(self.weights) == len(self.is_pass) == len(self.c) == r):
            raise ValueError("rows, weights, is_pass, c must have equal length")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(self.weights > 0):
            raise ValueError("at least one weight must be positive")
        if np.any((self.c < 0) | (self.c >= 0.5)):
            raise ValueError("guessing c must lie in [0, 0.5)")

    @property
    def size(self):
        return self.rows.shape[0]


# --- pointwise losses and their derivatives ---------------------------------

def _loss_fail(z, c):
    # g(z) = softplus(z) - ln(1 - c); strictly positive, convex.
    return softplus(z) - np.log1p(-c)


def _loss_pass(z, c):
    # h(z) = softplus(z) - softplus(z + ln c); equals softplus(z) at c = 0 and
    # increases from 0 to ln(1/c).
    z = np.asarray(z, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    base = softplus(z)
    out = np.array(base, copy=True)
    pos = np.broadcast_to(c > 0, out.shape)
    if np.any(pos):
        zc = np.broadcast_to(z, out.shape)[pos]
        cc = np.broadcast_to(c, out.shape)[pos]
        out[pos] = np.broadcast_to(base, out.shape)[pos] - softplus(zc + np.log(cc))
    return out


def _log_c(c):
    # ln c with c = 0 mapped to -inf (the shifted term then vanishes)
    with np.errstate(divide="ignore"):
        return np.log(c)


def _shifted_margins(z, is_pass, c):
    """z + ln c on pass rows, -inf elsewhere (their shifted terms drop out)."""
    cb = np.broadcast_to(np.asarray(c, dtype=np.float64), z.shape)
    return np.where(is_pass, z + _log_c(cb), -np.inf), cb


def loss_matrix(z, is_pass, c):
    """Pointwise loss over an array of margins; is_pass and c broadcast to z.

    Fail rows: softplus(z) - log1p(-c). Pass rows: softplus(z) -
    softplus(z + ln c). With all guessing values zero both reduce to
    softplus(z) and the label split is irrelevant.
    """
    z = np.asarray(z, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if not np.any(c > 0):
        return softplus(z)
    zs, cb = _shifted_margins(z, is_pass, c)
    correction = np.where(is_pass, softplus(zs), np.log1p(-cb))
    return softplus(z) - correction


def dloss_dz(z, is_pass, c):
    """First derivative of the pointwise loss in its margin argument."""
    z = np.asarray(z, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if not np.any(c > 0):
        return sigmoid(z)
    zs, _ = _shifted_margins(z, is_pass, c)
    return sigmoid(z) - np.where(is_pass, sigmoid(zs), 0.0)


def d2loss_dz2(z, is_pass, c):
    """Second derivative of the pointwise loss in its margin argument."""
    z = np.asarray(z, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    s = sigmoid(z)
    out = s * (1.0 - s)
    if not np.any(c > 0):
        return out
    zs, _ = _shifted_margins(z, is_pass, c)
    sc = sigmoid(zs)
    return out - np.where(is_pass, sc * (1.0 - sc), 0.0)


def dloss_dc(z, is_pass, c):
    """Derivative of the pointwise loss in the guessing value c.

    Fail rows: 1 / (1 - c). Pass rows: -e^z / (1 + c e^z), evaluated stably.
    """
    z = np.asarray(z, dtype=np.float64)
    is_pass = np.broadcast_to(np.asarray(is_pass, dtype=bool), z.shape)
    cb = np.broadcast_to(np.asarray(c, dtype=np.float64), z.shape)
    out = np.empty_like(z)
    out[~is_pass] = 1.0 / (1.0 - cb[~is_pass])
    zp = z[is_pass]
    cp = cb[is_pass]
    # -e^z / (1 + c e^z) = -exp(z - softplus(z + ln c)) for c > 0.
    res = np.empty_like(zp)
    czero = cp == 0
    res[czero] = -np.exp(zp[czero])
    if np.any(~czero):
        res[~czero] = -np.exp(zp[~czero] - softplus(zp[~czero] + np.log(cp[~czero])))
    out[is_pass] = res
    return out


def d2loss_dc2(z, is_pass, c):
    z = np.asarray(z, dtype=np.float64)
    is_pass = np.broadcast_to(np.asarray(is_pass, dtype=bool), z.shape)
    cb = np.broadcast_to(np.asarray(c, dtype=np.float64), z.shape)
    out = np.empty_like(z)
    out[~is_pass] = 1.0 / (1.0 - cb[~is_pass]) ** 2
    dc = dloss_dc(z, is_pass, cb)
    out[is_pass] = dc[is_pass] ** 2
    return out


def d2loss_dzdc(z, is_pass, c):
    z = np.asarray(z, dtype=np.float64)
    is_pass = np.broadcast_to(np.asarray(is_pass, dtype=bool), z.shape)
    cb = np.broadcast_to(np.asarray(c, dtype=np.float64), z.shape)
    out = np.zeros_like(z)
    dc = dloss_dc(z, is_pass, cb)
    zp = z[is_pass]
    cp = cb[is_pass]
    with np.errstate(divide="ignore"):
        lnc = np.where(cp > 0, np.log(np.where(cp > 0, cp, 1.0)), -np.inf)
    out[is_pass] = dc[is_pass] * sigmoid(-(zp + lnc))
    return out


# --- public operations -------------------------------------------------------

def icc_probability(item, theta):
    """Probability of a correct answer, c + (1 - c) * sigmoid(a*theta - b).

    ``item`` is an (a, b, c) triple; scalars and arrays broadcast.
    """
    a, b, c = (np.asarray(v, dtype=np.float64) for v in item)
    theta = np.asarray(theta, dtype=np.float64)
    for name, v in (("a", a), ("b", b), ("c", c), ("theta", theta)):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} must be finite")
    if np.any(a <= 0):
        raise ValueError("a must be positive")
    if np.any((c < 0) | (c >= 0.5)):
        raise ValueError("c must lie in [0, 0.5)")
    return c + (1.0 - c) * sigmoid(a * theta - b)


def pointwise_loss(kind, c, z):
    """Single pointwise loss value for a Fail (g) or Pass (h) row."""
    c = float(c)
    z = float(z)
    if not (0.0 <= c < 0.5):
        raise ValueError("c must lie in [0, 0.5)")
    if not np.isfinite(z):
        raise ValueError("z must be finite")
    if kind is LossKind.FAIL:
        return float(_loss_fail(z, c))
    if kind is LossKind.PASS:
        return float(_loss_pass(np.float64(z), np.float64(c)))
    raise ValueError(f"unknown loss kind: {kind!r}")


def conditional_nll(design, eta):
    """Weighted conditional negative log-likelihood sum over a signed design.

    The reduction uses numpy's pairwise summation over a single contiguous
    array, so the result does not depend on thread count.
    """
    eta = np.asarray(eta, dtype=np.float64)
    if eta.shape != (2,):
        raise ValueError("eta must be a 2-vector")
    z = design.rows @ eta
    terms = design.weights * loss_matrix(z, design.is_pass, design.c)
    return float(np.sum(terms))


def full_nll(Y, items, abilities):
    """Joint negative log-likelihood of the response matrix.

    Equals the sum of per-item conditional objectives and the sum of
    per-examinee conditional objectives.
    """
    if items.m != Y.m or abilities.n != Y.n:
        raise ValueError("parameter dimensions do not match the response matrix")
    yf = Y.entries.astype(np.float64)
    z = -yf * (items.a[:, None] * abilities.theta[None, :] - items.b[:, None])
    terms = loss_matrix(z, Y.entries == 1, items.c[:, None])
    return float(np.sum(terms))


def build_signed_design(Y, fixed, orientation, index, c=None):
    """Signed design for one conditional subproblem.

    BY_ITEM i: n rows x_j = -Y_ij * (theta_j, -1); ``fixed`` must be
    AbilityParameters and ``c`` (scalar, default 0) is attached to every row.
    BY_EXAMINEE j: m rows x_i = -Y_ij * (a_i, b_i); ``fixed`` must be
    ItemParameters and each row carries its item's c.
    """
    orientation = Orientation(orientation)
    if orientation is Orientation.BY_ITEM:
        if not isinstance(fixed, AbilityParameters):
            raise TypeError("BY_ITEM designs require AbilityParameters")
        if not 0 <= index < Y.m:
            raise IndexError(f"item index {index} out of range [0, {Y.m})")
        y = Y.entries[index, :].astype(np.float64)
        rows = -y[:, None] * fixed.beta()
        c_row = np.full(Y.n, 0.0 if c is None else float(c))
    else:
        if not isinstance(fixed, ItemParameters):
            raise TypeError("BY_EXAMINEE designs require ItemParameters")
        if not 0 <= index < Y.n:
            raise IndexError(f"examinee index {index} out of range [0, {Y.n})")
        y = Y.entries[:, index].astype(np.float64)
        rows = -y[:, None] * fixed.alpha()
        c_row = fixed.c.copy()
    return SignedDesign(rows=rows, is_pass=(y == 1), c=c_row)
