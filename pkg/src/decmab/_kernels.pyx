# cython: language_level=3
"""Compiled episode loops for the hot simulation paths.

Each function mirrors the pure-Python round loop in simulator.py operation for
operation (same draw order, same compensated summation, same tie-breaking), so
the two paths produce bit-identical ledgers.
"""

from libc.math cimport fabs, log, sqrt

import numpy as np


cdef class Buffers:
    """Chunked per-(tuple, player) reward draws pulled from a bound environment."""

    cdef double[:, ::1] buf
    cdef long[::1] pos
    cdef object source
    cdef long chunk
    cdef long m

    def __init__(self, source, long n_tuples, long m, long chunk):
        self.source = source
        self.chunk = chunk
        self.m = m
        self.buf = np.zeros((n_tuples * m, chunk), dtype=np.float64)
        self.pos = np.full(n_tuples * m, chunk, dtype=np.int64)

    cdef double draw(self, long k, long i):
        cdef long s = k * self.m + i
        cdef long p = self.pos[s]
        cdef double v
        if p == self.chunk:
            self._refill(s, k, i)
            p = 0
        v = self.buf[s, p]
        self.pos[s] = p + 1
        return v

    cdef void _refill(self, long s, long k, long i):
        cdef double[::1] fresh = self.source.next_chunk(k, i)
        self.buf[s, :] = fresh


cdef void _strides(long[::1] dims, long[::1] out):
    cdef long m = dims.shape[0]
    cdef long i
    out[m - 1] = 1
    for i in range(m - 2, -1, -1):
        out[i] = out[i + 1] * dims[i + 1]


cdef inline long _component(long flat, long stride, long dim):
    return (flat / stride) % dim


cdef inline void _fold(double[:, ::1] mean, long[:, ::1] n, long i, long k, double x):
    cdef long n1 = n[i, k] + 1
    cdef double m = mean[i, k]
    n[i, k] = n1
    mean[i, k] = m + (x - m) / n1


cdef long _argmax_ucb(double[:, ::1] mean, long[:, ::1] n, long i, long k_max,
                      double bonus_num):
    cdef long k, best
    cdef double v, best_val
    for k in range(k_max):
        if n[i, k] == 0:
            return k
    best = 0
    best_val = mean[i, 0] + sqrt(bonus_num / n[i, 0])
    for k in range(1, k_max):
        v = mean[i, k] + sqrt(bonus_num / n[i, k])
        if v > best_val:
            best_val = v
            best = k
    return best


def run_mucb_iid(long[::1] dims, double[::1] gaps, long horizon, long[::1] grid,
                 object bound, long chunk, bint common, long tail_window):
    cdef long m = dims.shape[0]
    cdef long n_grid = grid.shape[0]
    cdef long k_max = 1
    cdef long i, k, t, kk, gi, comp, n_streams
    cdef double x, x0, bonus_num, y, tt, total, dot, err
    for i in range(m):
        k_max *= dims[i]

    stride_arr = np.zeros(m, dtype=np.int64)
    cdef long[::1] stride = stride_arr
    _strides(dims, stride)

    n_arr = np.zeros((m, k_max), dtype=np.int64)
    mean_arr = np.zeros((m, k_max), dtype=np.float64)
    best_arr = np.zeros(m, dtype=np.int64)
    pulls_arr = np.zeros(k_max, dtype=np.int64)
    tail_arr = np.zeros(k_max, dtype=np.int64)
    cps_arr = np.zeros(n_grid, dtype=np.float64)
    cdef long[:, ::1] n = n_arr
    cdef double[:, ::1] mean = mean_arr
    cdef long[::1] best = best_arr
    cdef long[::1] pulls = pulls_arr
    cdef long[::1] tail = tail_arr
    cdef double[::1] cps = cps_arr

    n_streams = 1 if common else m
    cdef Buffers bufs = Buffers(bound, k_max, n_streams, chunk)

    cdef double ps = 0.0, pc = 0.0, rs = 0.0, rc = 0.0, max_err = 0.0
    cdef long mism = 0
    gi = 0
    x0 = 0.0

    for t in range(1, horizon + 1):
        if t <= k_max:
            kk = t - 1
            for i in range(m):
                best[i] = kk
        else:
            bonus_num = 4.0 * log(<double> t)
            for i in range(m):
                best[i] = _argmax_ucb(mean, n, i, k_max, bonus_num)
            kk = 0
            for i in range(m):
                comp = _component(best[i], stride[i], dims[i])
                kk += comp * stride[i]
        for i in range(m):
            if best[i] != kk:
                mism += 1
                break

        if common:
            x = bufs.draw(kk, 0)
            for i in range(m):
                _fold(mean, n, i, best[i], x)
            x0 = x
        else:
            for i in range(m):
                x = bufs.draw(kk, i)
                _fold(mean, n, i, kk, x)
                if i == 0:
                    x0 = x

        y = gaps[kk] - pc
        tt = ps + y
        pc = (tt - ps) - y
        ps = tt
        y = x0 - rc
        tt = rs + y
        rc = (tt - rs) - y
        rs = tt

        pulls[kk] += 1
        if tail_window > 0 and t > horizon - tail_window:
            tail[kk] += 1
        if gi < n_grid and t == grid[gi]:
            total = ps - pc
            dot = 0.0
            for k in range(k_max):
                dot += gaps[k] * pulls[k]
            err = fabs(total - dot)
            if err > max_err:
                max_err = err
            cps[gi] = total
            gi += 1

    return {
        "checkpoints": cps_arr,
        "pulls": pulls_arr,
        "pseudo": ps - pc,
        "realized": rs - rc,
        "max_decomp_err": max_err,
        "mismatches": mism,
        "final_commit": -1,
        "tail": tail_arr,
    }


def run_mucb_markov(long[::1] dims, double[::1] gaps, long horizon, long[::1] grid,
                    object bound, long chunk,
                    double[:, ::1] rewards, double[:, :, ::1] cum,
                    long[::1] nstates, long[::1] states, long tail_window):
    cdef long m = dims.shape[0]
    cdef long n_grid = grid.shape[0]
    cdef long k_max = 1
    cdef long i, k, t, kk, gi, comp, s, j
    cdef double x, bonus_num, y, tt, total, dot, err, u
    for i in range(m):
        k_max *= dims[i]

    stride_arr = np.zeros(m, dtype=np.int64)
    cdef long[::1] stride = stride_arr
    _strides(dims, stride)

    n_arr = np.zeros((m, k_max), dtype=np.int64)
    mean_arr = np.zeros((m, k_max), dtype=np.float64)
    best_arr = np.zeros(m, dtype=np.int64)
    pulls_arr = np.zeros(k_max, dtype=np.int64)
    tail_arr = np.zeros(k_max, dtype=np.int64)
    cps_arr = np.zeros(n_grid, dtype=np.float64)
    cdef long[:, ::1] n = n_arr
    cdef double[:, ::1] mean = mean_arr
    cdef long[::1] best = best_arr
    cdef long[::1] pulls = pulls_arr
    cdef long[::1] tail = tail_arr
    cdef double[::1] cps = cps_arr

    cdef Buffers bufs = Buffers(bound, k_max, 1, chunk)

    cdef double ps = 0.0, pc = 0.0, rs = 0.0, rc = 0.0, max_err = 0.0
    cdef long mism = 0
    gi = 0

    for t in range(1, horizon + 1):
        if t <= k_max:
            kk = t - 1
            for i in range(m):
                best[i] = kk
        else:
            bonus_num = 4.0 * log(<double> t)
            for i in range(m):
                best[i] = _argmax_ucb(mean, n, i, k_max, bonus_num)
            kk = 0
            for i in range(m):
                comp = _component(best[i], stride[i], dims[i])
                kk += comp * stride[i]
        for i in range(m):
            if best[i] != kk:
                mism += 1
                break

        # reward of the current state, then the pulled chain advances one step
        s = states[kk]
        x = rewards[kk, s]
        u = bufs.draw(kk, 0)
        j = 0
        while j < nstates[kk] - 1 and u >= cum[kk, s, j]:
            j += 1
        states[kk] = j
        for i in range(m):
            _fold(mean, n, i, best[i], x)

        y = gaps[kk] - pc
        tt = ps + y
        pc = (tt - ps) - y
        ps = tt
        y = x - rc
        tt = rs + y
        rc = (tt - rs) - y
        rs = tt

        pulls[kk] += 1
        if tail_window > 0 and t > horizon - tail_window:
            tail[kk] += 1
        if gi < n_grid and t == grid[gi]:
            total = ps - pc
            dot = 0.0
            for k in range(k_max):
                dot += gaps[k] * pulls[k]
            err = fabs(total - dot)
            if err > max_err:
                max_err = err
            cps[gi] = total
            gi += 1

    return {
        "checkpoints": cps_arr,
        "pulls": pulls_arr,
        "pseudo": ps - pc,
        "realized": rs - rc,
        "max_decomp_err": max_err,
        "mismatches": mism,
        "final_commit": -1,
        "tail": tail_arr,
    }


def run_agnostic_iid(long[::1] dims, double[::1] gaps, long horizon, long[::1] grid,
                     object bound, long chunk, long tail_window):
    cdef long m = dims.shape[0]
    cdef long n_grid = grid.shape[0]
    cdef long k_max = 1
    cdef long i, k, t, kk, gi, a, arm
    cdef double x, bonus_num, y, tt, total, dot, err, v, best_val
    for i in range(m):
        k_max *= dims[i]

    stride_arr = np.zeros(m, dtype=np.int64)
    cdef long[::1] stride = stride_arr
    _strides(dims, stride)

    cdef long dim_max = 0
    for i in range(m):
        if dims[i] > dim_max:
            dim_max = dims[i]
    n_arr = np.zeros((m, dim_max), dtype=np.int64)
    mean_arr = np.zeros((m, dim_max), dtype=np.float64)
    arms_arr = np.zeros(m, dtype=np.int64)
    pulls_arr = np.zeros(k_max, dtype=np.int64)
    tail_arr = np.zeros(k_max, dtype=np.int64)
    cps_arr = np.zeros(n_grid, dtype=np.float64)
    cdef long[:, ::1] n = n_arr
    cdef double[:, ::1] mean = mean_arr
    cdef long[::1] arms = arms_arr
    cdef long[::1] pulls = pulls_arr
    cdef long[::1] tail = tail_arr
    cdef double[::1] cps = cps_arr

    cdef Buffers bufs = Buffers(bound, k_max, 1, chunk)

    cdef double ps = 0.0, pc = 0.0, rs = 0.0, rc = 0.0, max_err = 0.0
    gi = 0

    for t in range(1, horizon + 1):
        bonus_num = 4.0 * log(<double> t)
        for i in range(m):
            if t <= dims[i]:
                arms[i] = t - 1
            else:
                arm = -1
                for a in range(dims[i]):
                    if n[i, a] == 0:
                        arm = a
                        break
                if arm < 0:
                    arm = 0
                    best_val = mean[i, 0] + sqrt(bonus_num / n[i, 0])
                    for a in range(1, dims[i]):
                        v = mean[i, a] + sqrt(bonus_num / n[i, a])
                        if v > best_val:
                            best_val = v
                            arm = a
                arms[i] = arm
        kk = 0
        for i in range(m):
            kk += arms[i] * stride[i]

        x = bufs.draw(kk, 0)
        for i in range(m):
            _fold(mean, n, i, arms[i], x)

        y = gaps[kk] - pc
        tt = ps + y
        pc = (tt - ps) - y
        ps = tt
        y = x - rc
        tt = rs + y
        rc = (tt - rs) - y
        rs = tt

        pulls[kk] += 1
        if tail_window > 0 and t > horizon - tail_window:
            tail[kk] += 1
        if gi < n_grid and t == grid[gi]:
            total = ps - pc
            dot = 0.0
            for k in range(k_max):
                dot += gaps[k] * pulls[k]
            err = fabs(total - dot)
            if err > max_err:
                max_err = err
            cps[gi] = total
            gi += 1

    return {
        "checkpoints": cps_arr,
        "pulls": pulls_arr,
        "pseudo": ps - pc,
        "realized": rs - rc,
        "max_decomp_err": max_err,
        "mismatches": -1,
        "final_commit": -1,
        "tail": tail_arr,
    }


cdef long _pick_commit(double[:, ::1] smean, long i, long k_max, object rng,
                       long[::1] scratch):
    cdef double best = smean[i, 0]
    cdef long k, cnt
    for k in range(1, k_max):
        if smean[i, k] > best:
            best = smean[i, k]
    cnt = 0
    for k in range(k_max):
        if smean[i, k] == best:
            scratch[cnt] = k
            cnt += 1
    if cnt > 1:
        return scratch[<long> rng.integers(cnt)]
    return scratch[0]


def run_mdsee_iid(long[::1] dims, double[::1] gaps, long horizon, long[::1] grid,
                  object bound, long chunk, long[::1] kvals, long min_exponent,
                  list tie_rngs, bint common, long tail_window):
    cdef long m = dims.shape[0]
    cdef long n_grid = grid.shape[0]
    cdef long k_max = 1
    cdef long i, k, t, kk, gi, comp, n_streams
    cdef double x, x0, y, tt, total, dot, err
    for i in range(m):
        k_max *= dims[i]

    stride_arr = np.zeros(m, dtype=np.int64)
    cdef long[::1] stride = stride_arr
    _strides(dims, stride)

    counts_arr = np.zeros((m, k_max), dtype=np.int64)
    smean_arr = np.zeros((m, k_max), dtype=np.float64)
    commit_arr = np.full(m, -1, dtype=np.int64)
    scratch_arr = np.zeros(k_max, dtype=np.int64)
    pulls_arr = np.zeros(k_max, dtype=np.int64)
    tail_arr = np.zeros(k_max, dtype=np.int64)
    cps_arr = np.zeros(n_grid, dtype=np.float64)
    cdef long[:, ::1] counts = counts_arr
    cdef double[:, ::1] smean = smean_arr
    cdef long[::1] commit = commit_arr
    cdef long[::1] scratch = scratch_arr
    cdef long[::1] pulls = pulls_arr
    cdef long[::1] tail = tail_arr
    cdef double[::1] cps = cps_arr

    n_streams = 1 if common else m
    cdef Buffers bufs = Buffers(bound, k_max, n_streams, chunk)

    cdef double ps = 0.0, pc = 0.0, rs = 0.0, rc = 0.0, max_err = 0.0
    cdef long lam = 1
    cdef long reps = kvals[1]
    cdef long block = reps * k_max
    cdef long pos = 0
    cdef bint committed = False
    cdef long boundary = 0
    cdef long b
    cdef long final_commit = -1
    gi = 0
    x0 = 0.0

    for t in range(1, horizon + 1):
        if committed and t == boundary:
            lam += 1
            if lam >= kvals.shape[0]:
                raise RuntimeError("phase budget table exhausted")
            reps = kvals[lam]
            block = reps * k_max
            pos = 0
            committed = False
        if not committed:
            kk = pos / reps
        else:
            kk = 0
            for i in range(m):
                comp = _component(commit[i], stride[i], dims[i])
                kk += comp * stride[i]

        if common:
            x = bufs.draw(kk, 0)
            if not committed:
                for i in range(m):
                    _fold(smean, counts, i, kk, x)
            x0 = x
        else:
            for i in range(m):
                x = bufs.draw(kk, i)
                if not committed:
                    _fold(smean, counts, i, kk, x)
                if i == 0:
                    x0 = x

        if not committed:
            pos += 1
            if pos == block:
                for i in range(m):
                    commit[i] = _pick_commit(smean, i, k_max, tie_rngs[i], scratch)
                committed = True
                b = (<long> 1) << min_exponent
                while b <= t:
                    b <<= 1
                boundary = b
                final_commit = 0
                for i in range(m):
                    comp = _component(commit[i], stride[i], dims[i])
                    final_commit += comp * stride[i]

        y = gaps[kk] - pc
        tt = ps + y
        pc = (tt - ps) - y
        ps = tt
        y = x0 - rc
        tt = rs + y
        rc = (tt - rs) - y
        rs = tt

        pulls[kk] += 1
        if tail_window > 0 and t > horizon - tail_window:
            tail[kk] += 1
        if gi < n_grid and t == grid[gi]:
            total = ps - pc
            dot = 0.0
            for k in range(k_max):
                dot += gaps[k] * pulls[k]
            err = fabs(total - dot)
            if err > max_err:
                max_err = err
            cps[gi] = total
            gi += 1

    return {
        "checkpoints": cps_arr,
        "pulls": pulls_arr,
        "pseudo": ps - pc,
        "realized": rs - rc,
        "max_decomp_err": max_err,
        "mismatches": -1,
        "final_commit": final_commit,
        "tail": tail_arr,
    }
