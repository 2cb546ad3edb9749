"""
Finite Field Arithmetic
Exact arithmetic and linear algebra over GF(2^e), built on galois field arrays,
plus the GF(2) expansion that turns GF(2^e)-linear maps into binary checks.

Field elements travel between modules as plain integer arrays (the polynomial
representation galois uses), so addition is XOR on the raw integers and only
multiplication needs the field tables.
"""

import functools
import itertools
from dataclasses import dataclass
from math import prod
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import galois
import numpy as np

from .core.logging import get_logger
from .errors import BudgetExceeded, ConstructionError, CubeSheafError

logger = get_logger(__name__)

MAX_DEGREE = 16
_BASIS_SEARCH_WIDTH = 32


class DegreeOutOfRange(CubeSheafError, ValueError):
    """Extension degree outside 1..16"""

    def __init__(self, e):
        super().__init__(f"extension degree {e} outside [1, {MAX_DEGREE}]")
        self.e = e


class DimensionMismatch(CubeSheafError, ValueError):
    """Operand shapes do not agree"""
    pass


class NoSolution(CubeSheafError, ArithmeticError):
    """Right-hand side is not in the image of the matrix"""
    pass


def raw(values) -> np.ndarray:
    """Integer view of field elements (FieldArray or array-like)"""
    if isinstance(values, np.ndarray):
        return np.array(values.view(np.ndarray), dtype=np.int64)
    return np.asarray(values, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Field:
    """GF(2^e) with a verified irreducible modulus and a self-dual basis"""
    e: int
    GF: type
    modulus: int
    selfdual_basis: Tuple[int, ...]

    @property
    def q(self) -> int:
        return 1 << self.e

    def __call__(self, values) -> galois.FieldArray:
        return self.GF(raw(values))

    def __repr__(self) -> str:
        return f"Field(q={self.q}, modulus={self.modulus:#x})"

    def zeros(self, shape) -> galois.FieldArray:
        return self.GF.Zeros(shape)

    def identity(self, n: int) -> galois.FieldArray:
        return self.GF.Identity(n)

    def random(self, shape, rng: np.random.Generator) -> galois.FieldArray:
        return self.GF(rng.integers(0, self.q, size=shape, dtype=np.int64))

    def random_nonzero(self, shape, rng: np.random.Generator) -> galois.FieldArray:
        return self.GF(rng.integers(1, self.q, size=shape, dtype=np.int64))

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product of raw integer arrays"""
        if np.size(a) == 0:
            return np.zeros(np.broadcast_shapes(np.shape(a), np.shape(b)), dtype=np.int64)
        return raw(self.GF(raw(a)) * self.GF(raw(b)))

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Raw product of 2-d (or 2-d by 1-d) arrays, allowing empty dimensions"""
        a, b = raw(a), raw(b)
        shape = a.shape[:-1] + b.shape[1:]
        if a.size == 0 or b.size == 0:
            return np.zeros(shape, dtype=np.int64)
        return raw(self.GF(a) @ self.GF(b)).reshape(shape)

    def dot(self, a: np.ndarray, b: np.ndarray) -> int:
        """Bilinear pairing sum_i a_i b_i"""
        products = self.mul(a, b)
        return int(np.bitwise_xor.reduce(products.ravel())) if products.size else 0

    def trace(self, values) -> np.ndarray:
        """Absolute trace to GF(2), as 0/1 integers"""
        return raw(self(values).field_trace())

    @functools.cached_property
    def expansion_table(self) -> np.ndarray:
        """(q, e, e) binary matrices of multiplication-by-alpha in the self-dual basis"""
        return expansion_table(self, self.selfdual_basis)


def _verify_irreducible(modulus: galois.Poly, e: int) -> None:
    """Trial division by every GF(2) polynomial of degree 1..e/2"""
    for degree in range(1, e // 2 + 1):
        for code in range(1 << degree, 1 << (degree + 1)):
            if int(modulus % galois.Poly.Int(code)) == 0:
                raise ConstructionError(f"modulus {modulus} has factor {galois.Poly.Int(code)}")


def _find_selfdual_basis(GF: type, e: int) -> Tuple[int, ...]:
    """Depth-first search for b_1..b_e with Tr(b_i b_j) = delta_ij"""
    elements = GF.elements
    traces = raw(elements.field_trace())

    def extend(chosen: Tuple[int, ...], allowed: np.ndarray) -> Optional[Tuple[int, ...]]:
        if len(chosen) == e:
            return chosen
        # Tr(c*c) = Tr(c), so unit-norm candidates are exactly the trace-one elements
        for c in np.flatnonzero(allowed & (traces == 1))[:_BASIS_SEARCH_WIDTH]:
            orthogonal = raw((elements * GF(int(c))).field_trace()) == 0
            found = extend(chosen + (int(c),), allowed & orthogonal)
            if found is not None:
                return found
        return None

    basis = extend((), np.ones(GF.order, dtype=bool))
    if basis is None:
        raise ConstructionError(f"no self-dual basis found for GF(2^{e})")
    return basis


def expansion_table(field: Field, basis: Sequence[int]) -> np.ndarray:
    """Multiplication matrices for every field element in an arbitrary basis

    ``table[alpha][i, j]`` is coordinate i of ``alpha * basis[j]``.
    """
    GF, e = field.GF, field.e
    b = GF(raw(list(basis)))
    V = b.vector().reshape(e, e)
    if np.linalg.matrix_rank(V) < e:
        raise ValueError(f"{list(basis)} is not a basis of GF(2^{e})")
    V_inv = np.linalg.inv(V)

    table = np.zeros((field.q, e, e), dtype=np.uint8)
    for j in range(e):
        images = (GF.elements * b[j]).vector().reshape(field.q, e)
        table[:, :, j] = raw(images @ V_inv)
    return table


@functools.lru_cache(maxsize=None)
def field_make(e: int) -> Field:
    """Construct GF(2^e) and verify its modulus and self-dual basis"""
    if isinstance(e, bool) or not isinstance(e, (int, np.integer)) or not 1 <= e <= MAX_DEGREE:
        raise DegreeOutOfRange(e)
    e = int(e)

    # galois compiles lookup-table (log/antilog) ufuncs for orders below 2^20
    GF = galois.GF(2 ** e)
    modulus = GF.irreducible_poly
    _verify_irreducible(modulus, e)

    basis = _find_selfdual_basis(GF, e)
    b = GF(list(basis))
    gram = raw((b[:, None] * b[None, :]).field_trace())
    if not np.array_equal(gram, np.eye(e, dtype=np.int64)):
        raise ConstructionError(f"basis {basis} is not trace-orthonormal")

    logger.debug("Built field", extra={"q": 2 ** e, "modulus": int(modulus), "selfdual_basis": basis})
    return Field(e=e, GF=GF, modulus=int(modulus), selfdual_basis=basis)


def binary_field() -> Field:
    return field_make(1)


class FieldVector:
    """Sparse vector over a Field: sorted indices with nonzero values"""

    __slots__ = ("field", "length", "indices", "values")

    def __init__(self, field: Field, length: int, indices, values):
        indices = np.asarray(indices, dtype=np.int64).ravel()
        values = raw(values).ravel()
        keep = values != 0
        indices, values = indices[keep], values[keep]
        if indices.size and (indices.min() < 0 or indices.max() >= length):
            raise IndexError(f"vector index outside [0, {length})")
        order = np.argsort(indices, kind="stable")
        indices, values = indices[order], values[order]
        if np.any(indices[1:] == indices[:-1]):
            raise ValueError("duplicate vector index")
        indices.setflags(write=False)
        values.setflags(write=False)
        self.field = field
        self.length = int(length)
        self.indices = indices
        self.values = values

    @classmethod
    def from_dense(cls, field: Field, x) -> "FieldVector":
        x = raw(x).ravel()
        nz = np.flatnonzero(x)
        return cls(field, x.size, nz, x[nz])

    @classmethod
    def zeros(cls, field: Field, length: int) -> "FieldVector":
        return cls(field, length, [], [])

    @classmethod
    def unit(cls, field: Field, length: int, index: int, value: int = 1) -> "FieldVector":
        return cls(field, length, [index], [value])

    def to_dense(self) -> galois.FieldArray:
        out = np.zeros(self.length, dtype=np.int64)
        out[self.indices] = self.values
        return self.field(out)

    def to_raw(self) -> np.ndarray:
        out = np.zeros(self.length, dtype=np.int64)
        out[self.indices] = self.values
        return out

    @property
    def weight(self) -> int:
        """Hamming weight"""
        return int(self.indices.size)

    def block_weight(self, offsets: np.ndarray) -> int:
        """Number of blocks holding a nonzero entry; ``offsets`` are block starts"""
        if self.indices.size == 0:
            return 0
        blocks = np.searchsorted(np.asarray(offsets), self.indices, side="right") - 1
        return int(np.unique(blocks).size)

    def __add__(self, other: "FieldVector") -> "FieldVector":
        if other.length != self.length:
            raise DimensionMismatch(f"lengths {self.length} and {other.length}")
        return FieldVector.from_dense(self.field, self.to_raw() ^ other.to_raw())

    def __bool__(self) -> bool:
        return bool(self.indices.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldVector):
            return NotImplemented
        return (self.length == other.length and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self) -> str:
        return f"FieldVector(length={self.length}, nnz={self.indices.size})"


class FieldMatrix:
    """Sparse matrix over a Field in sorted row-major coordinate form

    Duplicate coordinates passed to the constructor are summed; zeros are
    dropped. Instances are immutable.
    """

    __slots__ = ("field", "shape", "rows", "cols", "vals", "_row_starts")

    def __init__(self, field: Field, shape: Tuple[int, int], rows, cols, vals):
        nrows, ncols = int(shape[0]), int(shape[1])
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = raw(vals).ravel()
        if not (rows.size == cols.size == vals.size):
            raise DimensionMismatch("coordinate arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
            raise IndexError(f"entry outside shape {(nrows, ncols)}")

        if rows.size:
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            keys = rows * ncols + cols
            starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
            if starts.size != keys.size:
                vals = np.bitwise_xor.reduceat(vals, starts)
                rows, cols = rows[starts], cols[starts]
            keep = vals != 0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]

        for array in (rows, cols, vals):
            array.setflags(write=False)
        self.field = field
        self.shape = (nrows, ncols)
        self.rows = rows
        self.cols = cols
        self.vals = vals
        self._row_starts = None

    @classmethod
    def from_dense(cls, field: Field, array) -> "FieldMatrix":
        array = raw(array)
        if array.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d array, got shape {array.shape}")
        r, c = np.nonzero(array)
        return cls(field, array.shape, r, c, array[r, c])

    @classmethod
    def zeros(cls, field: Field, shape: Tuple[int, int]) -> "FieldMatrix":
        return cls(field, shape, [], [], [])

    @classmethod
    def identity(cls, field: Field, n: int) -> "FieldMatrix":
        idx = np.arange(n)
        return cls(field, (n, n), idx, idx, np.ones(n, dtype=np.int64))

    @property
    def nrows(self) -> int:
        return self.shape[0]

    @property
    def ncols(self) -> int:
        return self.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self.field, (self.ncols, self.nrows), self.cols, self.rows, self.vals)

    def row_starts(self) -> np.ndarray:
        """CSR row pointer"""
        if self._row_starts is None:
            self._row_starts = np.searchsorted(self.rows, np.arange(self.nrows + 1))
        return self._row_starts

    def to_raw(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int64)
        out[self.rows, self.cols] = self.vals
        return out

    def to_dense(self) -> galois.FieldArray:
        return self.field(self.to_raw())

    def is_zero(self) -> bool:
        return self.nnz == 0

    def row_weights(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.nrows)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self.cols, minlength=self.ncols)

    def submatrix(self, row_index: Sequence[int], col_index: Sequence[int]) -> "FieldMatrix":
        """Rows/cols picked (and reordered) by index lists"""
        row_index = np.asarray(row_index, dtype=np.int64)
        col_index = np.asarray(col_index, dtype=np.int64)
        row_map = np.full(self.nrows, -1, dtype=np.int64)
        col_map = np.full(self.ncols, -1, dtype=np.int64)
        row_map[row_index] = np.arange(row_index.size)
        col_map[col_index] = np.arange(col_index.size)
        r, c = row_map[self.rows], col_map[self.cols]
        keep = (r >= 0) & (c >= 0)
        return FieldMatrix(self.field, (row_index.size, col_index.size), r[keep], c[keep], self.vals[keep])

    def apply(self, x) -> np.ndarray:
        """Raw product with a dense raw vector (n,) or matrix (n, k)"""
        x = raw(x)
        if x.shape[0] != self.ncols:
            raise DimensionMismatch(f"matrix has {self.ncols} columns, operand has {x.shape[0]} rows")
        out = np.zeros((self.nrows,) + x.shape[1:], dtype=np.int64)
        if self.nnz == 0 or x.size == 0:
            return out
        picked = x[self.cols]
        coeff = self.vals.reshape((-1,) + (1,) * (x.ndim - 1))
        products = self.field.mul(np.broadcast_to(coeff, picked.shape), picked)
        np.bitwise_xor.at(out, self.rows, products)
        return out

    def __matmul__(self, other):
        if isinstance(other, FieldMatrix):
            return _sparse_product(self, other)
        if isinstance(other, FieldVector):
            return FieldVector.from_dense(self.field, self.apply(other.to_raw()))
        return self.field(self.apply(other))

    def __add__(self, other: "FieldMatrix") -> "FieldMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"shapes {self.shape} and {other.shape}")
        return FieldMatrix(
            self.field, self.shape,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.vals, other.vals])
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return (self.shape == other.shape and self.field.e == other.field.e
                and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols)
                and np.array_equal(self.vals, other.vals))

    __hash__ = None

    def __repr__(self) -> str:
        return f"FieldMatrix(q={self.field.q}, shape={self.shape}, nnz={self.nnz})"


def _sparse_product(A: FieldMatrix, B: FieldMatrix) -> FieldMatrix:
    """Sparse product by joining A's columns with B's rows"""
    if A.ncols != B.nrows:
        raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
    starts = B.row_starts()
    counts = starts[A.cols + 1] - starts[A.cols]
    total = int(counts.sum())
    if total == 0:
        return FieldMatrix.zeros(A.field, (A.nrows, B.ncols))
    a_idx = np.repeat(np.arange(A.nnz), counts)
    within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    b_idx = starts[A.cols][a_idx] + within
    vals = A.field.mul(A.vals[a_idx], B.vals[b_idx])
    return FieldMatrix(A.field, (A.nrows, B.ncols), A.rows[a_idx], B.cols[b_idx], vals)


MatrixLike = Union[FieldMatrix, galois.FieldArray]


def _dense(M: MatrixLike, field: Optional[Field] = None) -> galois.FieldArray:
    if isinstance(M, FieldMatrix):
        return M.to_dense()
    return M if field is None else field(M)


def rref(A: galois.FieldArray, ncols: Optional[int] = None) -> Tuple[galois.FieldArray, np.ndarray]:
    """Reduced row echelon form pivoting on the first ``ncols`` columns

    Pivots are taken left to right on the first nonzero entry, so results are
    reproducible. Returns the reduced matrix and the pivot columns.
    """
    m, n = A.shape
    ncols = n if ncols is None else ncols
    if m == 0 or ncols == 0:
        return A.copy(), np.zeros(0, dtype=np.int64)
    R = A.row_reduce(ncols=ncols)
    leading = raw(R[:, :ncols]) != 0
    has_pivot = leading.any(axis=1)
    return R, np.asarray(leading.argmax(axis=1)[has_pivot], dtype=np.int64)


def rank(M: MatrixLike) -> int:
    A = _dense(M)
    if 0 in A.shape:
        return 0
    return int(len(rref(A)[1]))


def kernel_matrix(M: MatrixLike) -> galois.FieldArray:
    """Rows form a basis of the right kernel, one per free column in order"""
    A = _dense(M)
    n = A.shape[1]
    R, pivots = rref(A)
    free = np.setdiff1d(np.arange(n), pivots)
    GF = type(A)
    K = GF.Zeros((free.size, n))
    if free.size == 0:
        return K
    K[np.arange(free.size), free] = 1
    if pivots.size:
        # characteristic 2: the negated pivot-row entries equal themselves
        K[:, pivots] = R[:pivots.size][:, free].T
    return K


def kernel_basis(M: FieldMatrix) -> List[FieldVector]:
    """Basis of the right kernel; size = cols - rank"""
    K = kernel_matrix(M)
    return [FieldVector.from_dense(M.field, row) for row in K]


def row_space_basis(M: MatrixLike) -> galois.FieldArray:
    """Rows of the reduced echelon form spanning the row space"""
    A = _dense(M)
    R, pivots = rref(A)
    return R[:pivots.size]


def column_space_basis(M: MatrixLike) -> galois.FieldArray:
    """Independent columns of M (first-pivot order), returned as rows"""
    A = _dense(M)
    if 0 in A.shape:
        return type(A).Zeros((0, A.shape[0]))
    _, pivots = rref(A)
    return A[:, pivots].T


class LinearSolver:
    """Reusable solver for M x = b

    Free variables are set to zero, so a zero right-hand side gives the zero
    solution and supports stay on pivot columns.
    """

    def __init__(self, M: MatrixLike, field: Optional[Field] = None):
        A = _dense(M, field)
        self.GF = type(A)
        self.shape = A.shape
        m, n = A.shape
        augmented = self.GF(np.hstack([raw(A), np.eye(m, dtype=np.int64)]))
        R, pivots = rref(augmented, ncols=n)
        self.rank = int(pivots.size)
        self.pivots = pivots
        self._transform = R[:, n:]

    def solve(self, b) -> galois.FieldArray:
        """Solve for a vector (m,) or several right-hand sides (m, k)"""
        b = self.GF(raw(b))
        m, n = self.shape
        if b.shape[0] != m:
            raise DimensionMismatch(f"right-hand side has {b.shape[0]} rows, matrix has {m}")
        x = self.GF.Zeros((n,) + b.shape[1:])
        if m == 0:
            return x
        y = self._transform @ b
        if np.any(raw(y[self.rank:]) != 0):
            raise NoSolution("right-hand side is not in the column space")
        if self.rank:
            x[self.pivots] = y[:self.rank]
        return x

    def consistent(self, b) -> bool:
        try:
            self.solve(b)
        except NoSolution:
            return False
        return True


def solve_linear(M: FieldMatrix, b: FieldVector) -> FieldVector:
    """Some x with Mx = b; raises NoSolution when b is outside the image"""
    if b.length != M.nrows:
        raise DimensionMismatch(f"b has length {b.length}, matrix has {M.nrows} rows")
    x = LinearSolver(M).solve(b.to_raw())
    return FieldVector.from_dense(M.field, x)


def f2_expand(M: FieldMatrix, basis: Optional[Sequence[int]] = None) -> FieldMatrix:
    """Replace each entry alpha by the e x e binary matrix of multiplication by alpha

    The default self-dual basis makes the expansion commute with transposition.
    ``basis`` overrides it (used to exercise the non-self-dual failure mode).
    """
    field = M.field
    e = field.e
    table = field.expansion_table if basis is None else expansion_table(field, basis)
    blocks = table[M.vals]
    entry, i, j = np.nonzero(blocks)
    rows = M.rows[entry] * e + i
    cols = M.cols[entry] * e + j
    return FieldMatrix(binary_field(), (M.nrows * e, M.ncols * e), rows, cols, np.ones(entry.size, dtype=np.int64))


def f2_expand_vector(x: FieldVector) -> FieldVector:
    """Coordinates of each entry in the self-dual basis, Tr(x b_i)"""
    field = x.field
    out = np.zeros(x.length * field.e, dtype=np.int64)
    if x.indices.size:
        b = field(list(field.selfdual_basis))
        coords = raw((field(x.values)[:, None] * b[None, :]).field_trace())
        out[(x.indices[:, None] * field.e + np.arange(field.e)).ravel()] = coords.ravel()
    return FieldVector.from_dense(binary_field(), out)


def coefficient_block(q: int, k: int, start: int, stop: int) -> np.ndarray:
    """Base-q digits of start..stop-1, first coordinate most significant"""
    idx = np.arange(start, stop, dtype=np.int64)
    if k == 0:
        return np.zeros((idx.size, 0), dtype=np.int64)
    powers = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def span_size(q: int, k: int) -> int:
    return q ** k


def iterate_span(
    field: Field,
    basis: np.ndarray,
    chunk: int,
    budget: Optional[int] = None,
    label: str = "span"
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """All linear combinations of the rows of ``basis``, chunk by chunk

    Yields (coefficients, vectors) as raw integer arrays.
    """
    basis = raw(basis)
    k, n = basis.shape
    total = span_size(field.q, k)
    if budget is not None and total > budget:
        raise BudgetExceeded(f"{label}: {total} elements exceed budget {budget}", needed=total, budget=budget)
    B = field(basis) if k else None
    for start in range(0, total, chunk):
        coeffs = coefficient_block(field.q, k, start, min(total, start + chunk))
        if k == 0:
            yield coeffs, np.zeros((coeffs.shape[0], n), dtype=np.int64)
        else:
            yield coeffs, raw(field(coeffs) @ B)


def block_weights(vectors: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    """Block-Hamming weight of each row, blocks given by consecutive sizes"""
    nz = raw(vectors) != 0
    if nz.ndim == 1:
        nz = nz[None, :]
    sizes = np.asarray(sizes, dtype=np.int64)
    keep = sizes > 0
    starts = (np.cumsum(sizes) - sizes)[keep]
    if starts.size == 0 or nz.shape[1] == 0:
        return np.zeros(nz.shape[0], dtype=np.int64)
    return np.logical_or.reduceat(nz, starts, axis=1).sum(axis=1).astype(np.int64)


def block_support_count(sizes: Sequence[int], q: int, weight: int) -> int:
    """Number of vectors with block weight exactly ``weight``"""
    # elementary symmetric polynomial of (q^d - 1) over the blocks
    poly = [1]
    for d in sizes:
        c = q ** int(d) - 1
        if c == 0:
            continue
        poly = [a + (c * poly[i - 1] if i else 0) for i, a in enumerate(poly + [0])]
    return poly[weight] if weight < len(poly) else 0


def block_weight_cap(sizes: Sequence[int], q: int, budget: int, limit: Optional[int] = None) -> int:
    """Largest w such that all vectors of block weight 1..w fit in ``budget``"""
    limit = int(np.count_nonzero(np.asarray(sizes))) if limit is None else limit
    cap, spent = 0, 0
    while cap < limit:
        need = block_support_count(sizes, q, cap + 1)
        if spent + need > budget:
            break
        spent += need
        cap += 1
    return cap


def iterate_block_support(sizes: Sequence[int], q: int, weight: int, chunk: int) -> Iterator[np.ndarray]:
    """All vectors of block weight exactly ``weight``, chunk by chunk

    Supports come in lexicographic block order; within a support, values run
    through base-q digits with the last block fastest.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    dim = int(offsets[-1])
    blocks = [i for i, d in enumerate(sizes) if d > 0]
    for support in itertools.combinations(blocks, weight):
        counts = [q ** int(sizes[i]) - 1 for i in support]
        total = prod(counts)
        for start in range(0, total, chunk):
            rest = np.arange(start, min(total, start + chunk), dtype=np.int64)
            x = np.zeros((rest.size, dim), dtype=np.int64)
            for i, c in reversed(list(zip(support, counts))):
                digit = rest % c + 1
                rest = rest // c
                d = int(sizes[i])
                powers = q ** np.arange(d - 1, -1, -1, dtype=np.int64)
                x[:, offsets[i]:offsets[i + 1]] = (digit[:, None] // powers[None, :]) % q
            yield x


def hamming_weights(vectors: np.ndarray) -> np.ndarray:
    nz = raw(vectors) != 0
    if nz.ndim == 1:
        nz = nz[None, :]
    return nz.sum(axis=1).astype(np.int64)


def row_keys(vectors: np.ndarray) -> np.ndarray:
    """Hashable per-row keys (void scalars) for grouping rows by value"""
    rows = np.ascontiguousarray(raw(vectors))
    if rows.ndim == 1:
        rows = rows[None, :]
    width = rows.dtype.itemsize * max(rows.shape[1], 1)
    if rows.shape[1] == 0:
        rows = np.zeros((rows.shape[0], 1), dtype=np.int64)
    return rows.view(np.dtype((np.void, width))).ravel()


class CosetMinima:
    """Running minimum of a weight per key (coset label), with a representative

    Feed chunks of (keys, weights, vectors); ties keep the first vector seen,
    so the result only depends on feed order.
    """

    def __init__(self):
        self.best: Dict[bytes, Tuple[int, np.ndarray]] = {}

    def update(self, keys: np.ndarray, weights: np.ndarray, vectors: np.ndarray) -> None:
        if keys.size == 0:
            return
        uniq, inverse = np.unique(keys, return_inverse=True)
        inverse = inverse.ravel()
        order = np.lexsort((np.arange(weights.size), weights, inverse))
        grouped = inverse[order]
        firsts = order[np.r_[True, grouped[1:] != grouped[:-1]]]
        for idx in firsts:
            key = keys[idx].tobytes()
            weight = int(weights[idx])
            current = self.best.get(key)
            if current is None or weight < current[0]:
                self.best[key] = (weight, vectors[idx].copy())

    def merge(self, other: "CosetMinima") -> "CosetMinima":
        """Fold in a later scan; earlier entries win ties"""
        for key, (weight, vector) in other.best.items():
            current = self.best.get(key)
            if current is None or weight < current[0]:
                self.best[key] = (weight, vector)
        return self

    def items(self):
        return self.best.items()

    def __len__(self) -> int:
        return len(self.best)
