# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled move generation and observation encoding.

Submove codes in the absolute frame are ``(cell * 6 + dir) * 2 + is_jump``.
"""

cimport cython


def legal_codes(const signed char[::1] board,
                const int[::1] pegs,
                const int[:, ::1] step,
                const int[:, ::1] jump,
                const unsigned char[::1] visited,
                int active,
                int player,
                const int[::1] to_canon,
                int[::1] out_abs,
                int[::1] out_can):
    """Fill absolute and canonical action codes of every legal move/jump.

    End-turn is not emitted; the caller adds it. Returns the count.
    """
    cdef Py_ssize_t k, npeg = pegs.shape[0]
    cdef int src, d, mid, dst, n = 0, cd
    if active >= 0:
        src = active
        for d in range(6):
            dst = jump[src, d]
            if dst < 0 or board[dst] != -1 or visited[dst]:
                continue
            mid = step[src, d]
            if board[mid] == -1:
                continue
            cd = (d + player) % 6
            out_abs[n] = (src * 6 + d) * 2 + 1
            out_can[n] = (to_canon[src] * 6 + cd) * 2 + 1
            n += 1
        return n
    for k in range(npeg):
        src = pegs[k]
        for d in range(6):
            mid = step[src, d]
            if mid < 0:
                continue
            cd = (d + player) % 6
            if board[mid] == -1:
                out_abs[n] = (src * 6 + d) * 2
                out_can[n] = (to_canon[src] * 6 + cd) * 2
                n += 1
            else:
                dst = jump[src, d]
                if dst >= 0 and board[dst] == -1:
                    out_abs[n] = (src * 6 + d) * 2 + 1
                    out_can[n] = (to_canon[src] * 6 + cd) * 2 + 1
                    n += 1
    return n


def encode_obs(const signed char[::1] board,
               int player,
               const int[::1] to_canon,
               const int[::1] chain,
               int chain_len,
               float[::1] out):
    """Write the 8-layer observation for ``player`` into ``out`` (zeroed here)."""
    cdef Py_ssize_t i, k, ncell = board.shape[0]
    cdef int owner
    for i in range(8 * ncell):
        out[i] = 0.0
    for i in range(ncell):
        owner = board[i]
        if owner >= 0:
            out[((owner - player + 6) % 6) * ncell + to_canon[i]] = 1.0
    if chain_len > 0:
        for k in range(chain_len - 1):
            out[6 * ncell + to_canon[chain[k]]] = 1.0
        out[7 * ncell + to_canon[chain[chain_len - 1]]] = 1.0


def obs_indices(const signed char[::1] board,
                int player,
                const int[::1] to_canon,
                const int[::1] chain,
                int chain_len,
                int[::1] out):
    """Sparse form of :func:`encode_obs`: the flat indices of its ones. Returns the count."""
    cdef Py_ssize_t i, k, ncell = board.shape[0]
    cdef int owner, n = 0
    for i in range(ncell):
        owner = board[i]
        if owner >= 0:
            out[n] = ((owner - player + 6) % 6) * ncell + to_canon[i]
            n += 1
    if chain_len > 0:
        for k in range(chain_len - 1):
            out[n] = 6 * ncell + to_canon[chain[k]]
            n += 1
        out[n] = 7 * ncell + to_canon[chain[chain_len - 1]]
        n += 1
    return n
