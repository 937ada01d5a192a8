"""Pure numpy fallback with the same signatures as the compiled kernels."""

import numpy as np

_DIRS = np.arange(6, dtype=np.int64)


def legal_codes(board, pegs, step, jump, visited, active, player, to_canon, out_abs, out_can):
    if active >= 0:
        src = np.array([active], dtype=np.int64)
    else:
        src = np.asarray(pegs, dtype=np.int64)
    mid = step[src]  # (k, 6)
    dst = jump[src]
    mid_ok = mid >= 0
    mid_val = np.where(mid_ok, board[np.where(mid_ok, mid, 0)], -2)
    dst_ok = dst >= 0
    dst_val = np.where(dst_ok, board[np.where(dst_ok, dst, 0)], -2)
    can_jump = (mid_val >= 0) & (dst_val == -1)
    if active >= 0:
        can_jump &= visited[np.where(dst_ok, dst, 0)] == 0
        can_move = np.zeros_like(can_jump)
    else:
        can_move = mid_val == -1

    src_col = src[:, None]
    cdir = (_DIRS[None, :] + player) % 6
    base_abs = src_col * 6 + _DIRS[None, :]
    base_can = to_canon[src_col] * 6 + cdir
    # same emission order as the compiled kernel: peg-major, direction-minor
    legal = can_move | can_jump
    is_jump = can_jump.astype(np.int64)
    a = (base_abs * 2 + is_jump)[legal]
    c = (base_can * 2 + is_jump)[legal]
    n = a.size
    out_abs[:n] = a
    out_can[:n] = c
    return n


def encode_obs(board, player, to_canon, chain, chain_len, out):
    ncell = board.shape[0]
    out[:] = 0.0
    cells = np.flatnonzero(board >= 0)
    out[((board[cells].astype(np.int64) - player) % 6) * ncell + to_canon[cells]] = 1.0
    if chain_len > 0:
        out[6 * ncell + to_canon[chain[: chain_len - 1]]] = 1.0
        out[7 * ncell + to_canon[chain[chain_len - 1]]] = 1.0


def obs_indices(board, player, to_canon, chain, chain_len, out):
    ncell = board.shape[0]
    cells = np.flatnonzero(board >= 0)
    idx = ((board[cells].astype(np.int64) - player) % 6) * ncell + to_canon[cells]
    n = idx.size
    out[:n] = idx
    if chain_len > 0:
        m = chain_len - 1
        out[n : n + m] = 6 * ncell + to_canon[chain[:m]]
        out[n + m] = 7 * ncell + to_canon[chain[m]]
        n += chain_len
    return n
