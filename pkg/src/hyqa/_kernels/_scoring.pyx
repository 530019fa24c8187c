# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled BM25 postings-accumulation kernel.

Must stay arithmetically identical to pyimpl.bm25_accumulate: per posting,
idf * ((tf * (k1+1)) / (tf + length_norm[ordinal])) in double precision.
"""


def bm25_accumulate(
    const int[::1] ordinals,
    const double[::1] tfs,
    const double[::1] length_norm,
    double idf,
    double k1_plus_one,
    double[::1] scores,
):
    cdef Py_ssize_t i, n = ordinals.shape[0]
    cdef int o
    cdef double tf
    for i in range(n):
        o = ordinals[i]
        tf = tfs[i]
        scores[o] += idf * ((tf * k1_plus_one) / (tf + length_norm[o]))
