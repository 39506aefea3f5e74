# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ordered-tree edit distance kernel.

Same keyroot/forest recurrence as _ted_py.tree_distance; selected at import
by tsrkit.teds.distance when the extension built successfully.
"""

from libc.stdlib cimport free, malloc


def tree_distance(
    long[::1] lmld1,
    long[::1] labels1,
    long[::1] keyroots1,
    long[::1] lmld2,
    long[::1] labels2,
    long[::1] keyroots2,
    double insert_cost,
    double delete_cost,
    double rename_mismatch_cost,
):
    cdef Py_ssize_t n1 = lmld1.shape[0]
    cdef Py_ssize_t n2 = lmld2.shape[0]
    if n1 == 0 or n2 == 0:
        return n1 * delete_cost + n2 * insert_cost

    cdef double *td = <double *> malloc(n1 * n2 * sizeof(double))
    cdef double *fd = <double *> malloc((n1 + 1) * (n2 + 1) * sizeof(double))
    if td == NULL or fd == NULL:
        free(td)
        free(fd)
        raise MemoryError()

    cdef Py_ssize_t fstride = n2 + 1
    cdef Py_ssize_t ki, kj, i, j, li, lj, m, n, x, y, node1, node2, p, q
    cdef double best, alt, rename
    cdef bint whole1

    try:
        for ki in range(keyroots1.shape[0]):
            i = keyroots1[ki]
            li = lmld1[i]
            m = i - li + 2
            for kj in range(keyroots2.shape[0]):
                j = keyroots2[kj]
                lj = lmld2[j]
                n = j - lj + 2

                fd[0] = 0.0
                for x in range(1, m):
                    fd[x * fstride] = fd[(x - 1) * fstride] + delete_cost
                for y in range(1, n):
                    fd[y] = fd[y - 1] + insert_cost

                for x in range(1, m):
                    node1 = x + li - 1
                    whole1 = lmld1[node1] == li
                    for y in range(1, n):
                        node2 = y + lj - 1
                        if whole1 and lmld2[node2] == lj:
                            rename = 0.0 if labels1[node1] == labels2[node2] else rename_mismatch_cost
                            best = fd[(x - 1) * fstride + (y - 1)] + rename
                            alt = fd[(x - 1) * fstride + y] + delete_cost
                            if alt < best:
                                best = alt
                            alt = fd[x * fstride + (y - 1)] + insert_cost
                            if alt < best:
                                best = alt
                            fd[x * fstride + y] = best
                            td[node1 * n2 + node2] = best
                        else:
                            p = lmld1[node1] - li
                            q = lmld2[node2] - lj
                            best = fd[p * fstride + q] + td[node1 * n2 + node2]
                            alt = fd[(x - 1) * fstride + y] + delete_cost
                            if alt < best:
                                best = alt
                            alt = fd[x * fstride + (y - 1)] + insert_cost
                            if alt < best:
                                best = alt
                            fd[x * fstride + y] = best

        return td[(n1 - 1) * n2 + (n2 - 1)]
    finally:
        free(td)
        free(fd)
