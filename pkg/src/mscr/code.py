"""The MDS array code: parameters, parity checks, encoding, and erasure decoding.

A codeword stores, per node i, symbols c[i, b, a] over planes b in [1, P]
(P = d-k+h) and index vectors a in Z_s^n.  Every (t, b, a) with t in [0, r)
imposes the check

    sum_i lambda_i^t c[i,b,a]  +  sum_i delta(a_i) sum_e mu_e^t c[i,b,a(i,e)] = 0.

The checks never mix planes, and substitutions a(i, e) only touch digit i, so
for an erased node set E the unknowns split into independent blocks: fix the
digits of a outside E and the |E|*s^|E| unknowns of that block close under
the coupling.  The block coefficient matrix depends only on E (not on the
plane or the frozen digits), so it is row-reduced exactly once and the
resulting operator is applied to every block's right-hand side in batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .field import (
    FieldContext,
    SingularMatrixError,
    is_prime,
    reduction_operator,
    smallest_prime_at_least,
)
from .indexing import delta, sub_index, vec_to_int


class InconsistentCodewordError(ValueError):
    """Supplied symbols do not lie on any codeword."""


@dataclass(frozen=True)
class CodeParams:
    """Validated parameter set; construct via validate_params."""

    n: int
    k: int
    d: int
    h: int
    r: int
    s: int
    planes: int  # d - k + h
    N: int  # (d - k + h) * s**n, symbols per node
    p: int
    lambdas: tuple[int, ...]
    mus: tuple[int, ...]
    field: FieldContext = dc_field(repr=False)

    @property
    def s_pow_n(self) -> int:
        return self.s**self.n

    @property
    def message_length(self) -> int:
        return self.k * self.N


def validate_params(
    n: int,
    k: int,
    d: int,
    h: int,
    p: int | None = None,
    lambdas: tuple[int, ...] | None = None,
    mus: tuple[int, ...] | None = None,
) -> CodeParams:
    """Check every structural constraint and fill in defaults.

    Default field: the smallest prime >= n+s-1.  Default evaluation points:
    lambda_i = i and mu_e = n-1+e, which are distinct whenever p >= n+s-1.
    """
    for name, v in (("n", n), ("k", k), ("d", d), ("h", h)):
        if not isinstance(v, int) or v < 1:
            raise ValueError(f"parameter {name}={v!r} must be a positive integer")
    if not k < d <= n - 1:
        raise ValueError(f"need k < d <= n-1, got k={k}, d={d}, n={n}")
    if not 1 <= h <= n - d:
        raise ValueError(f"need 1 <= h <= n-d, got h={h}, n-d={n - d}")
    r = n - k
    s = d - k + 1
    planes = d - k + h
    if p is None:
        p = smallest_prime_at_least(n + s - 1)
    if not is_prime(p):
        raise ValueError(f"field modulus p={p} is composite")
    if p < n + s - 1:
        raise ValueError(f"field too small: p={p} < n+s-1 = {n + s - 1}")
    if p >= 2**16:
        raise ValueError(f"field modulus p={p} exceeds the supported 16-bit symbol width")
    ctx = FieldContext(p)
    if lambdas is None:
        lambdas = tuple(range(n))
    if mus is None:
        mus = tuple(n - 1 + e for e in range(1, s))
    lambdas = tuple(lambdas)
    mus = tuple(mus)
    if len(lambdas) != n:
        raise ValueError(f"need n={n} lambda points, got {len(lambdas)}")
    if len(mus) != s - 1:
        raise ValueError(f"need s-1={s - 1} mu points, got {len(mus)}")
    for x in lambdas + mus:
        ctx.check(x)
    points = lambdas + mus
    if len(set(points)) != len(points):
        raise ValueError(f"evaluation points must be pairwise distinct, got {points}")
    return CodeParams(
        n=n, k=k, d=d, h=h, r=r, s=s, planes=planes,
        N=planes * s**n, p=p, lambdas=lambdas, mus=mus, field=ctx,
    )


@dataclass(eq=False)
class NodeVector:
    """One node's stored column: symbols[b-1, a] = c[index, b, a]."""

    index: int
    symbols: np.ndarray  # shape (planes, s**n), dtype int64, values in [0, p)

    def symbol(self, b: int, a: int) -> int:
        return int(self.symbols[b - 1, a])

    def copy(self) -> "NodeVector":
        return NodeVector(self.index, self.symbols.copy())


def _as_column_array(params: CodeParams, symbols) -> np.ndarray:
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.shape == (params.N,):
        arr = arr.reshape(params.planes, params.s_pow_n)
    if arr.shape != (params.planes, params.s_pow_n):
        raise ValueError(
            f"column must hold {params.N} symbols shaped {(params.planes, params.s_pow_n)}, "
            f"got shape {arr.shape}"
        )
    if arr.min() < 0 or arr.max() >= params.p:
        raise ValueError(f"column symbols must be reduced into [0,{params.p})")
    return arr


def make_node_vector(params: CodeParams, index: int, symbols) -> NodeVector:
    if not 0 <= index < params.n:
        raise ValueError(f"node index {index} out of range [0,{params.n})")
    return NodeVector(index, _as_column_array(params, symbols))


class Codeword:
    """n node columns plus the parameters they satisfy."""

    def __init__(self, params: CodeParams, columns: list[NodeVector]):
        if len(columns) != params.n:
            raise ValueError(f"codeword needs {params.n} columns, got {len(columns)}")
        by_index = {c.index for c in columns}
        if by_index != set(range(params.n)):
            raise ValueError(f"column indices must be 0..{params.n - 1}, got {sorted(by_index)}")
        self.params = params
        self.columns = [
            NodeVector(c.index, _as_column_array(params, c.symbols))
            for c in sorted(columns, key=lambda c: c.index)
        ]

    @classmethod
    def zero(cls, params: CodeParams) -> "Codeword":
        shape = (params.planes, params.s_pow_n)
        return cls(params, [NodeVector(i, np.zeros(shape, dtype=np.int64)) for i in range(params.n)])

    @classmethod
    def from_array(cls, params: CodeParams, arr: np.ndarray) -> "Codeword":
        return cls(params, [NodeVector(i, arr[i].copy()) for i in range(params.n)])

    def column(self, i: int) -> NodeVector:
        return self.columns[i]

    def as_array(self) -> np.ndarray:
        """Stacked symbols, shape (n, planes, s**n)."""
        return np.stack([c.symbols for c in self.columns])

    def symbol(self, i: int, b: int, a) -> int:
        if not isinstance(a, int):
            a = vec_to_int(tuple(a), self.params.s)
        return int(self.columns[i].symbols[b - 1, a])

    def message(self) -> np.ndarray:
        """The systematic content: columns [0, k) flattened in (node, b, a) order."""
        k = self.params.k
        return np.concatenate([self.columns[i].symbols.reshape(-1) for i in range(k)])

    def __eq__(self, other):
        return (
            isinstance(other, Codeword)
            and self.params == other.params
            and all(np.array_equal(a.symbols, b.symbols) for a, b in zip(self.columns, other.columns))
        )


def parity_residual(cw: Codeword, t: int, b: int, a) -> int:
    """Scalar evaluation of one parity check; zero on valid codewords.

    Deliberately independent of the vectorized solver path: plain field
    arithmetic over the definition, usable as an oracle against it.
    """
    params = cw.params
    ctx = params.field
    if not 0 <= t < params.r:
        raise ValueError(f"power index t={t} out of range [0,{params.r})")
    if not 1 <= b <= params.planes:
        raise ValueError(f"plane {b} out of range [1,{params.planes}]")
    if isinstance(a, int):
        if not 0 <= a < params.s_pow_n:
            raise ValueError(f"index {a} out of range [0,{params.s_pow_n})")
        a_int = a
        digits = tuple((a_int // params.s**i) % params.s for i in range(params.n))
    else:
        digits = tuple(a)
        if len(digits) != params.n:
            raise ValueError(f"index vector must have length n={params.n}")
        a_int = vec_to_int(digits, params.s)
    acc = 0
    for i in range(params.n):
        acc = ctx.add(acc, ctx.mul(ctx.pow(params.lambdas[i], t), cw.symbol(i, b, a_int)))
        if delta(digits[i]):
            for e in range(1, params.s):
                a_sub = sub_index(a_int, i, e, params.s)
                acc = ctx.add(acc, ctx.mul(ctx.pow(params.mus[e - 1], t), cw.symbol(i, b, a_sub)))
    return acc


# --- vectorized machinery -------------------------------------------------

@lru_cache(maxsize=None)
def _plane_geometry(params: CodeParams):
    """Per-coordinate zero-digit masks and substitution index maps.

    Returns (masks, subs): masks[i] is a bool array over Z_s^n marking a_i == 0,
    subs[i][e-1][a] is the integer index of a(i, e).
    """
    n, s = params.n, params.s
    size = params.s_pow_n
    idx = np.arange(size)
    masks = []
    subs = []
    for i in range(n):
        w = s**i
        digit = (idx // w) % s
        masks.append(digit == 0)
        subs.append([idx + (e - digit) * w for e in range(1, s)])
    return masks, subs


def _known_contrib(params: CodeParams, plane: np.ndarray, known_nodes) -> np.ndarray:
    """K[t, a] = sum over known nodes j of their check contributions at (t, a)."""
    masks, subs = _plane_geometry(params)
    p = params.p
    out = np.zeros((params.r, params.s_pow_n), dtype=np.int64)
    for j in known_nodes:
        col = plane[j]
        for t in range(params.r):
            out[t] += pow(params.lambdas[j], t, p) * col
        folded = [masks[j] * col[subs[j][e - 1]] for e in range(1, params.s)]
        for t in range(params.r):
            for e in range(1, params.s):
                out[t] += pow(params.mus[e - 1], t, p) * folded[e - 1]
        out %= p
    return out


@lru_cache(maxsize=None)
def _erasure_operator(params: CodeParams, erased: tuple[int, ...]):
    """Exact solve operator for the block system of an erased node set.

    Returns (op, m, block_index) where op is the row-operation matrix from
    field.reduction_operator as int64, m = |erased| * s^|erased| is the
    unknown count, and block_index[pat, f] is the full index of the vector
    whose erased-coordinate digits spell pat and whose remaining digits
    spell the frozen assignment f (both little-endian, ascending).
    """
    n, s, r, p = params.n, params.s, params.r, params.p
    me = len(erased)
    others = [w for w in range(n) if w not in erased]
    pat_count = s**me
    m = me * pat_count

    rows = []
    for t in range(r):
        for pat in range(pat_count):
            row = [0] * m
            for q, node in enumerate(erased):
                row[q * pat_count + pat] = (row[q * pat_count + pat] + pow(params.lambdas[node], t, p)) % p
                if (pat // s**q) % s == 0:
                    for e in range(1, s):
                        pat2 = pat + e * s**q
                        row[q * pat_count + pat2] = (
                            row[q * pat_count + pat2] + pow(params.mus[e - 1], t, p)
                        ) % p
            rows.append(row)
    op = np.array(reduction_operator(params.field, rows), dtype=np.int64)

    pat_offsets = np.zeros(pat_count, dtype=np.int64)
    for pat in range(pat_count):
        pat_offsets[pat] = sum(((pat // s**q) % s) * s ** erased[q] for q in range(me))
    frozen_count = s ** len(others)
    frozen_offsets = np.zeros(frozen_count, dtype=np.int64)
    for f in range(frozen_count):
        frozen_offsets[f] = sum(((f // s**q) % s) * s**w for q, w in enumerate(others))
    block_index = pat_offsets[:, None] + frozen_offsets[None, :]
    return op, m, block_index


def _solve_erased(params: CodeParams, arr: np.ndarray, erased: tuple[int, ...], check: bool) -> np.ndarray:
    """Fill the erased columns of arr (n, planes, s^n) in place and return it.

    With check=True, tail rows of each block solve (and, when nothing is
    erased, the full residual sweep) must vanish, else the supplied symbols
    lie on no codeword and InconsistentCodewordError is raised.
    """
    known = [j for j in range(params.n) if j not in erased]
    if not erased:
        if check and not residuals_zero_array(params, arr):
            raise InconsistentCodewordError("symbols fail the parity checks")
        return arr
    op, m, block_index = _erasure_operator(params, erased)
    p = params.p
    for b0 in range(params.planes):
        plane = arr[:, b0, :]
        kc = _known_contrib(params, plane, known)
        rhs = (-kc[:, block_index]).reshape(op.shape[1], -1) % p
        solved = (op @ rhs) % p
        if check and solved[m:].any():
            raise InconsistentCodewordError(
                f"symbols are not jointly on any codeword (plane {b0 + 1})"
            )
        pat_count = params.s ** len(erased)
        unknowns = solved[:m].reshape(len(erased), pat_count, -1)
        for q, node in enumerate(erased):
            flat = plane[node]
            flat[block_index] = unknowns[q]
    return arr


def residuals_array(params: CodeParams, arr: np.ndarray) -> np.ndarray:
    """All parity residuals of stacked columns, shape (planes, r, s^n)."""
    out = np.empty((params.planes, params.r, params.s_pow_n), dtype=np.int64)
    for b0 in range(params.planes):
        out[b0] = _known_contrib(params, arr[:, b0, :], range(params.n))
    return out


def residuals_zero_array(params: CodeParams, arr: np.ndarray) -> bool:
    return not residuals_array(params, arr).any()


def residuals_zero(cw: Codeword) -> bool:
    """True when every parity check of the codeword evaluates to zero."""
    return residuals_zero_array(cw.params, cw.as_array())


# --- public encode / decode ------------------------------------------------

def random_message(params: CodeParams, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, params.p, size=params.message_length, dtype=np.int64)


def encode(message, params: CodeParams) -> Codeword:
    """Systematic encode: columns [0, k) store the message verbatim."""
    msg = np.asarray(message, dtype=np.int64)
    if msg.shape != (params.message_length,):
        raise ValueError(f"message must hold k*N = {params.message_length} symbols, got {msg.shape}")
    if msg.size and (msg.min() < 0 or msg.max() >= params.p):
        raise ValueError(f"message symbols must be reduced into [0,{params.p})")
    arr = np.zeros((params.n, params.planes, params.s_pow_n), dtype=np.int64)
    arr[: params.k] = msg.reshape(params.k, params.planes, params.s_pow_n)
    erased = tuple(range(params.k, params.n))
    try:
        _solve_erased(params, arr, erased, check=False)
    except SingularMatrixError as exc:  # impossible for validated params
        raise AssertionError(f"encoder solve failed for valid params: {exc}") from exc
    return Codeword.from_array(params, arr)


def _gather_available(params: CodeParams, available) -> tuple[np.ndarray, tuple[int, ...]]:
    seen: dict[int, NodeVector] = {}
    for col in available:
        if not isinstance(col, NodeVector):
            raise TypeError("available columns must be NodeVector instances")
        if not 0 <= col.index < params.n:
            raise ValueError(f"node index {col.index} out of range [0,{params.n})")
        if col.index in seen:
            raise ValueError(f"duplicate column for node {col.index}")
        seen[col.index] = col
    arr = np.zeros((params.n, params.planes, params.s_pow_n), dtype=np.int64)
    for i, col in seen.items():
        arr[i] = _as_column_array(params, col.symbols)
    erased = tuple(i for i in range(params.n) if i not in seen)
    return arr, erased


def erase_decode(available, params: CodeParams) -> Codeword:
    """Recover up to r = n-k missing columns from the ones supplied.

    With fewer than r columns missing the system is overdetermined and the
    supplied symbols are rejected (InconsistentCodewordError) unless they lie
    on a codeword, matching the residual sweep exactly.
    """
    arr, erased = _gather_available(params, available)
    if len(erased) > params.r:
        raise ValueError(f"{len(erased)} columns missing but only r={params.r} erasures are correctable")
    _solve_erased(params, arr, erased, check=True)
    return Codeword.from_array(params, arr)


def reconstruct(available, params: CodeParams) -> Codeword:
    """Rebuild the unique codeword agreeing with exactly k supplied columns."""
    cols = list(available)
    if len(cols) != params.k:
        raise ValueError(f"reconstruct needs exactly k={params.k} columns, got {len(cols)}")
    arr, erased = _gather_available(params, cols)
    _solve_erased(params, arr, erased, check=False)
    if not residuals_zero_array(params, arr):
        raise InconsistentCodewordError("reconstructed symbols fail the parity checks")
    return Codeword.from_array(params, arr)
