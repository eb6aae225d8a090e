"""Prime-field arithmetic and the exact linear solvers everything else builds on.

Field elements are plain ints reduced into [0, p).  Public operations reject
unreduced inputs instead of normalizing silently, so a stray unreduced value
is caught where it first appears.  The solvers work on lists of lists of ints
and stay exact; batched callers convert the resulting operators to numpy.
"""

from __future__ import annotations


class SingularMatrixError(ValueError):
    """Raised when a linear system has no unique solution over F_p."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def smallest_prime_at_least(m: int) -> int:
    p = max(2, m)
    while not is_prime(p):
        p += 1
    return p


class FieldContext:
    """Arithmetic in F_p for a fixed prime p.  Immutable and shareable."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        if not is_prime(p):
            raise ValueError(f"field modulus {p} is not prime")
        self.p = p

    def __repr__(self):
        return f"FieldContext(p={self.p})"

    def __eq__(self, other):
        return isinstance(other, FieldContext) and other.p == self.p

    def __hash__(self):
        return hash(("FieldContext", self.p))

    def check(self, a: int) -> int:
        """Reject values outside [0, p); returns the value unchanged."""
        if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < self.p:
            raise ValueError(f"{a!r} is not a reduced element of F_{self.p}")
        return a

    def add(self, a: int, b: int) -> int:
        return (self.check(a) + self.check(b)) % self.p

    def sub(self, a: int, b: int) -> int:
        return (self.check(a) - self.check(b)) % self.p

    def mul(self, a: int, b: int) -> int:
        return (self.check(a) * self.check(b)) % self.p

    def neg(self, a: int) -> int:
        return (-self.check(a)) % self.p

    def inv(self, a: int) -> int:
        if self.check(a) == 0:
            raise ZeroDivisionError(
                f"inverse of zero in F_{self.p}: singular computation"
            )
        return pow(a, self.p - 2, self.p)

    def pow(self, a: int, t: int) -> int:
        if t < 0:
            return self.inv(self.pow(a, -t))
        return pow(self.check(a), t, self.p)


def vandermonde_matrix(ctx: FieldContext, points: list[int], rows: int) -> list[list[int]]:
    """Matrix with entry (t, j) = points[j]**t for t in [0, rows)."""
    if rows < 1:
        raise ValueError("vandermonde_matrix needs rows >= 1")
    for x in points:
        ctx.check(x)
    if len(set(points)) != len(points):
        raise ValueError(f"vandermonde points must be pairwise distinct, got {points}")
    return [[ctx.pow(x, t) for x in points] for t in range(rows)]


def solve_square(ctx: FieldContext, matrix: list[list[int]], rhs: list[int]) -> list[int]:
    """Solve A x = rhs for square A by Gaussian elimination over F_p.

    Pivoting picks the first nonzero entry scanning down from the diagonal
    (lowest row index wins; there is no magnitude over F_p).  Raises
    SingularMatrixError instead of ever returning a garbage vector.
    """
    m = len(matrix)
    if m < 1 or any(len(row) != m for row in matrix):
        raise ValueError("matrix must be square and nonempty")
    if len(rhs) != m:
        raise ValueError(f"rhs length {len(rhs)} != matrix size {m}")
    p = ctx.p
    a = [[ctx.check(x) for x in row] for row in matrix]
    y = [ctx.check(x) for x in rhs]

    for col in range(m):
        pivot = next((r for r in range(col, m) if a[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError(f"matrix is singular over F_{p} (column {col})")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            y[col], y[pivot] = y[pivot], y[col]
        inv = pow(a[col][col], p - 2, p)
        a[col] = [(v * inv) % p for v in a[col]]
        y[col] = (y[col] * inv) % p
        for r in range(col + 1, m):
            f = a[r][col]
            if f:
                a[r] = [(v - f * w) % p for v, w in zip(a[r], a[col])]
                y[r] = (y[r] - f * y[col]) % p

    x = [0] * m
    for col in range(m - 1, -1, -1):
        acc = y[col]
        for j in range(col + 1, m):
            acc = (acc - a[col][j] * x[j]) % p
        x[col] = acc
    return x


def reduction_operator(ctx: FieldContext, matrix: list[list[int]]) -> list[list[int]]:
    """Row-operation matrix E with E A = [[I], [0]] for full-column-rank A.

    A may have more rows than columns.  For a right-hand side y of a system
    A x = y, x = (E y)[:cols] and the tail (E y)[cols:] is zero exactly when
    the system is consistent.  For square invertible A, E is the inverse.
    Raises SingularMatrixError when A does not have full column rank.
    """
    rows = len(matrix)
    if rows < 1:
        raise ValueError("matrix must be nonempty")
    cols = len(matrix[0])
    if any(len(row) != cols for row in matrix):
        raise ValueError("matrix rows must have equal length")
    if cols > rows:
        raise SingularMatrixError(f"{rows}x{cols} matrix cannot have full column rank")
    p = ctx.p
    a = [[ctx.check(x) for x in row] for row in matrix]
    e = [[1 if i == j else 0 for j in range(rows)] for i in range(rows)]

    for col in range(cols):
        pivot = next((r for r in range(col, rows) if a[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrixError(f"matrix rank-deficient over F_{p} (column {col})")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            e[col], e[pivot] = e[pivot], e[col]
        inv = pow(a[col][col], p - 2, p)
        a[col] = [(v * inv) % p for v in a[col]]
        e[col] = [(v * inv) % p for v in e[col]]
        for r in range(rows):
            if r == col:
                continue
            f = a[r][col]
            if f:
                a[r] = [(v - f * w) % p for v, w in zip(a[r], a[col])]
                e[r] = [(v - f * w) % p for v, w in zip(e[r], e[col])]
    return e


def matrix_inverse(ctx: FieldContext, matrix: list[list[int]]) -> list[list[int]]:
    m = len(matrix)
    if any(len(row) != m for row in matrix):
        raise ValueError("matrix must be square")
    return reduction_operator(ctx, matrix)


def mat_vec(ctx: FieldContext, matrix: list[list[int]], vec: list[int]) -> list[int]:
    p = ctx.p
    return [sum(a * b for a, b in zip(row, vec)) % p for row in matrix]
