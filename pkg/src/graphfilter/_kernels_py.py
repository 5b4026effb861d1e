"""Numpy fallback for the compiled CSR kernels in ``_kernels.pyx``.

Same signatures and the same per-row accumulation order (nonzeros in stored
order), processed in row blocks so the gathered ``nnz x m`` buffer stays
bounded.
"""
import numpy as np

# max gathered elements per block (~64 MB of float64)
_BLOCK_ELEMS = 1 << 23


def csr_spmm(indptr, indices, data, x):
    n_rows = indptr.shape[0] - 1
    m = x.shape[1]
    out = np.zeros((n_rows, m), dtype=np.float64)
    if m == 0 or indptr[-1] == 0:
        return out
    row_nnz = np.diff(indptr)
    rows_per_block = max(1, int(_BLOCK_ELEMS // max(m * max(row_nnz.mean(), 1.0), 1)))
    for start in range(0, n_rows, rows_per_block):
        stop = min(n_rows, start + rows_per_block)
        lo, hi = indptr[start], indptr[stop]
        if lo == hi:
            continue
        gathered = data[lo:hi, None] * x[indices[lo:hi]]
        counts = row_nnz[start:stop]
        nonempty = counts > 0
        offsets = (indptr[start:stop] - lo)[nonempty]
        # reduceat over empty segments returns the next element, so skip them
        out[start:stop][nonempty] = np.add.reduceat(gathered, offsets, axis=0)
    return out


def csr_spmm_add(indptr, indices, data, x, b, beta):
    return b + beta * csr_spmm(indptr, indices, data, x)
