"""Block-partitioned data matrices and spectral/Gram primitives.

The data matrix X is d x n with one column per sample.  A partition
assigns every column index to exactly one of K worker blocks; each
worker sees its local column slice X_[k] and the matching slice of any
length-n dual vector.
"""

import numpy as np

__all__ = [
    "FeatureMatrix",
    "BlockPartition",
    "BlockView",
    "SpectralBound",
    "block_views",
    "gram_seminorm_sq",
    "spectral_bound",
    "tau_star",
    "psd_gap_check",
    "PSD_DENSE_GUARD",
]

# psd_gap_check densifies an n x n matrix; refuse above this size.
PSD_DENSE_GUARD = 2000


class FeatureMatrix:
    """Dense d x n data matrix, columns are samples.

    Storage is column-major so per-sample access and block extraction
    are contiguous.  The array is frozen after construction.
    """

    def __init__(self, entries):
        entries = np.asfortranarray(entries, dtype=np.float64)
        if entries.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        d, n = entries.shape
        if d < 1 or n < 1:
            raise ValueError("need d >= 1 and n >= 1, got shape %r" % (entries.shape,))
        if not np.all(np.isfinite(entries)):
            raise ValueError("entries must be finite")
        entries.setflags(write=False)
        self.entries = entries
        self.d = d
        self.n = n

    def column(self, i):
        return self.entries[:, i]

    def matvec(self, v):
        """X v for a length-n vector v."""
        return self.entries @ v

    def rmatvec(self, w):
        """X^T w for a length-d vector w."""
        return self.entries.T @ w


class BlockPartition:
    """Disjoint cover of column indices {0..n-1} by K blocks."""

    def __init__(self, blocks, n):
        blocks = [np.sort(np.asarray(b, dtype=np.intp)) for b in blocks]
        if len(blocks) < 1:
            raise ValueError("need at least one block")
        sizes = [len(b) for b in blocks]
        if any(s < 1 for s in sizes):
            raise ValueError("every block must be nonempty")
        allidx = np.concatenate(blocks)
        if len(allidx) != n or not np.array_equal(np.sort(allidx), np.arange(n)):
            raise ValueError("blocks must disjointly cover 0..n-1")
        self.blocks = blocks
        self.n = n
        self.K = len(blocks)
        self.sizes = sizes

    def __iter__(self):
        return iter(self.blocks)


class BlockView:
    """Worker k's slice of the data: local columns plus dual accessors.

    Local columns are taken in ascending index order, so extraction and
    scatter are mutually inverse.
    """

    def __init__(self, X, partition, k):
        idx = partition.blocks[k]
        self.k = k
        self.indices = idx
        self.X_local = np.asfortranarray(X.entries[:, idx])
        self.X_local.setflags(write=False)
        self.d = X.d
        self.n_local = len(idx)

    def take(self, v):
        """Extract this block's slice of a length-n vector."""
        return v[self.indices]

    def scatter(self, v_local, out):
        """Write a local slice back into a length-n vector in place."""
        out[self.indices] = v_local
        return out

    def matvec(self, u):
        """X_[k] u for a local vector u."""
        return self.X_local @ u

    def rmatvec(self, w):
        """X_[k]^T w."""
        return self.X_local.T @ w

    def gram(self):
        """Dense X_[k]^T X_[k]; verification paths only."""
        return self.X_local.T @ self.X_local


def block_views(X, partition):
    return [BlockView(X, partition, k) for k in range(partition.K)]


def gram_seminorm_sq(view, u):
    """Squared Gram seminorm ||u||^2 restricted to worker k.

    Computes ||X_[k] u||_2^2 through a single matrix-vector product;
    the n_k x n_k Gram matrix is never formed.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (view.n_local,):
        raise ValueError(
            "expected local vector of length %d, got shape %r" % (view.n_local, u.shape)
        )
    y = view.X_local @ u
    return float(y @ y)


class SpectralBound:
    """Certified upper bound on a largest eigenvalue.

    ``converged`` is False when power iteration hit its budget and the
    Frobenius fallback was returned instead.
    """

    __slots__ = ("value", "converged")

    def __init__(self, value, converged):
        self.value = float(value)
        self.converged = bool(converged)

    def __repr__(self):
        return "SpectralBound(value=%r, converged=%r)" % (self.value, self.converged)


def spectral_bound(view, tol=1e-6, max_iter=500):
    """Upper bound on lambda_max(X_[k]^T X_[k]) by power iteration.

    The start vector is the normalized all-ones vector so repeated runs
    give bit-identical results.  The converged Rayleigh estimate is
    inflated by (1 + tol) so the return value certifiably dominates the
    true eigenvalue despite iteration error.  If the iteration does not
    settle within ``max_iter`` steps the squared Frobenius norm of the
    block is returned instead (always an upper bound) and the result is
    flagged.

    Parameters
    ----------
    view : BlockView
    tol : float
        Relative settling tolerance for the Rayleigh quotient; also the
        inflation factor.
    max_iter : int
        Power iteration budget.

    Returns
    -------
    SpectralBound
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = view.n_local
    u = np.full(m, 1.0 / np.sqrt(m))
    lam = 0.0
    for _ in range(max_iter):
        y = view.X_local @ u
        gu = view.X_local.T @ y
        norm = np.linalg.norm(gu)
        if norm == 0.0:
            # block maps the iterate to zero: spectrum is {0} on this ray
            return SpectralBound(0.0, True)
        u_next = gu / norm
        lam_next = float(u_next @ (view.X_local.T @ (view.X_local @ u_next)))
        if abs(lam_next - lam) <= tol * max(abs(lam_next), 1e-300):
            return SpectralBound(lam_next * (1.0 + tol), True)
        lam = lam_next
        u = u_next
    fro = float(np.sum(view.X_local * view.X_local))
    return SpectralBound(fro, False)


def tau_star(views, tol=1e-6, max_iter=500):
    """max_k lambda_max(X_[k]^T X_[k]) as a certified bound.

    Returns a SpectralBound whose flag is the conjunction of the
    per-block flags.
    """
    if not views:
        raise ValueError("need at least one block")
    bounds = [spectral_bound(v, tol=tol, max_iter=max_iter) for v in views]
    value = max(b.value for b in bounds)
    converged = all(b.converged for b in bounds)
    return SpectralBound(value, converged)


def psd_gap_check(X, partition):
    """Smallest eigenvalue of K blockdiag(X_[k]^T X_[k]) - X^T X.

    Verification-only primitive: densifies an n x n matrix, so n is
    guarded at PSD_DENSE_GUARD.  The returned eigenvalue is predicted
    to be nonnegative up to round-off for every partition.
    """
    n = X.n
    if n > PSD_DENSE_GUARD:
        raise ValueError(
            "psd_gap_check densifies an n x n matrix; n=%d exceeds guard %d"
            % (n, PSD_DENSE_GUARD)
        )
    K = partition.K
    M = -(X.entries.T @ X.entries)
    for idx in partition.blocks:
        Xk = X.entries[:, idx]
        M[np.ix_(idx, idx)] += K * (Xk.T @ Xk)
    M = 0.5 * (M + M.T)
    return float(np.linalg.eigvalsh(M)[0])
