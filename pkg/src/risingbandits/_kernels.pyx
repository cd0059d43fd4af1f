# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation loops, one per policy family.

Every loop reproduces the arithmetic of the pure-Python policies in the same
order, so both paths return identical pull sequences for the same inputs.
``rewards[i, j]`` is the reward of arm ``i`` at its ``j+1``-th pull (rested)
or at round ``j+1`` (restless).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, exp, floor, INFINITY
from libc.stdint cimport int64_t
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_uniform, random_beta

cnp.import_array()

cdef double FIXED_SCALE = 4294967296.0
cdef double KL_TOL = 1e-6
cdef int KL_MAX_ITER = 100


cdef bitgen_t* _bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("rng does not expose a numpy BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline int64_t _argmax(double* values, const int64_t[::1] order, int64_t K) noexcept nogil:
    cdef int64_t best = order[0], i, k
    cdef double best_val = values[best]
    for k in range(1, K):
        i = order[k]
        if values[i] > best_val:
            best = i
            best_val = values[i]
    return best


cdef inline double _reward(const double[:, ::1] rewards, bint rested, int64_t arm,
                           int64_t* counts, int64_t t) noexcept nogil:
    if rested:
        return rewards[arm, counts[arm]]
    return rewards[arm, t - 1]


cdef inline int64_t _quantize(double r) noexcept nogil:
    if r <= 0.0:
        return 0
    if r >= 1.0:
        return <int64_t> FIXED_SCALE
    return <int64_t> (r * FIXED_SCALE + 0.5)


cdef inline double _clip01(double x) noexcept nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


# -- rising policies ----------------------------------------------------------

def run_rising(const double[:, ::1] rewards, bint rested, int64_t T, const int64_t[::1] order,
               double epsilon, double alpha, double sigma, int mode, bint deterministic):
    """``mode``: 0 rested, 1 restless, 2 restless heuristic."""
    cdef int64_t K = rewards.shape[0]
    arms_np = np.empty(T, dtype=np.int64)
    cdef int64_t[::1] arms = arms_np
    cdef double[:, ::1] hist = np.empty((K, T), dtype=np.float64)
    cdef int64_t[:, ::1] times = np.empty((K, T), dtype=np.int64)
    cdef int64_t[::1] n = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] hw = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] counts = np.zeros(K, dtype=np.int64)
    cdef double[::1] acc_a = np.zeros(K), acc_b = np.zeros(K), acc_c = np.zeros(K), acc_d = np.zeros(K)
    cdef double[::1] h_r = np.zeros(K), h_s = np.zeros(K), h_ts = np.zeros(K)
    cdef double[::1] idx = np.empty(K)
    cdef bint heuristic = mode == 2
    cdef int64_t t, i, arm, nn, h, h_prev, l, tl, tp, ni
    cdef double r, lid, est, s_new, s_old, hr, hs, hts, s, mu_last, mu_prev
    cdef double* hrow
    cdef int64_t* trow

    with nogil:
        for t in range(1, T + 1):
            lid = alpha * log(<double> t)
            for i in range(K):
                ni = n[i]
                if deterministic:
                    if ni < 2:
                        idx[i] = INFINITY
                    elif mode == 0:
                        mu_last = hist[i, ni - 1]
                        idx[i] = mu_last + (<double> (t - ni)) * (mu_last - hist[i, ni - 2])
                    else:
                        mu_last = hist[i, ni - 1]
                        mu_prev = hist[i, ni - 2]
                        tl = times[i, ni - 1]
                        tp = times[i, ni - 2]
                        idx[i] = mu_last + (<double> (t - tl)) * (mu_last - mu_prev) / (<double> (tl - tp))
                    continue
                h = hw[i]
                if h == 0 or h > ni // 2:
                    idx[i] = INFINITY
                    continue
                if heuristic:
                    est = (h_r[i] + (<double> t) * h_s[i] - h_ts[i]) / (<double> h)
                else:
                    est = (acc_a[i] + (<double> t) * (acc_a[i] - acc_b[i]) / (<double> h)
                           - (acc_c[i] - acc_d[i]) / (<double> h)) / (<double> h)
                idx[i] = est + sigma * (<double> (t - ni + h - 1)) * sqrt(10.0 * lid / (<double> (h * h * h)))
            arm = _argmax(&idx[0], order, K)
            arms[t - 1] = arm
            r = _reward(rewards, rested, arm, &counts[0], t)
            counts[arm] += 1

            # update the pulled arm
            nn = n[arm] + 1
            n[arm] = nn
            hist[arm, nn - 1] = r
            times[arm, nn - 1] = t
            hrow = &hist[arm, 0]
            trow = &times[arm, 0]
            h_prev = hw[arm]
            h = <int64_t> floor(epsilon * (<double> nn))
            hw[arm] = h
            if h == 0:
                continue
            if h == h_prev:
                acc_a[arm] = acc_a[arm] + hrow[nn - 1] - hrow[nn - h - 1]
                acc_b[arm] = acc_b[arm] + hrow[nn - h - 1] - hrow[nn - 2 * h - 1]
                acc_c[arm] = acc_c[arm] + (<double> nn) * hrow[nn - 1] - (<double> (nn - h)) * hrow[nn - h - 1]
                acc_d[arm] = acc_d[arm] + (<double> nn) * hrow[nn - h - 1] - (<double> (nn - h)) * hrow[nn - 2 * h - 1]
            else:
                acc_a[arm] = acc_a[arm] + hrow[nn - 1]
                acc_b[arm] = acc_b[arm] + hrow[nn - 2 * h]
                acc_c[arm] = acc_c[arm] + (<double> nn) * hrow[nn - 1]
                acc_d[arm] = acc_d[arm] + (<double> (nn - h)) * hrow[nn - 2 * h] + acc_b[arm]
            if heuristic:
                if h == h_prev:
                    s_new = (hrow[nn - 1] - hrow[nn - h - 1]) / (<double> (trow[nn - 1] - trow[nn - h - 1]))
                    s_old = (hrow[nn - h - 1] - hrow[nn - 2 * h - 1]) / (<double> (trow[nn - h - 1] - trow[nn - 2 * h - 1]))
                    h_r[arm] = h_r[arm] + hrow[nn - 1] - hrow[nn - h - 1]
                    h_s[arm] = h_s[arm] + s_new - s_old
                    h_ts[arm] = h_ts[arm] + (<double> trow[nn - 1]) * s_new - (<double> trow[nn - h - 1]) * s_old
                else:
                    hr = 0.0
                    hs = 0.0
                    hts = 0.0
                    for l in range(nn - h + 1, nn + 1):
                        s = (hrow[l - 1] - hrow[l - h - 1]) / (<double> (trow[l - 1] - trow[l - h - 1]))
                        hr = hr + hrow[l - 1]
                        hs = hs + s
                        hts = hts + (<double> trow[l - 1]) * s
                    h_r[arm] = hr
                    h_s[arm] = hs
                    h_ts[arm] = hts
    return arms_np


# -- KL-UCB family --------------------------------------------------------------

cdef inline double _kl(double p, double q) noexcept nogil:
    if p <= 0.0:
        return -log(1.0 - q)
    if p >= 1.0:
        return -log(q)
    return p * log(p / q) + (1.0 - p) * log((1.0 - p) / (1.0 - q))


cdef inline double _budget(double m, double c) noexcept nogil:
    cdef double lm, b
    if m <= 1.0:
        return 0.0
    lm = log(m)
    b = lm + c * log(lm)
    return b if b > 0.0 else 0.0


cdef double _klucb(double mean, int64_t n, double budget) noexcept nogil:
    cdef double lo, hi, mid, dn = <double> n
    cdef int it
    if mean >= 1.0:
        return 1.0
    if mean < 0.0:
        mean = 0.0
    if budget <= 0.0:
        return mean
    lo = mean
    hi = mean + sqrt(budget / (2.0 * dn))
    if hi > 1.0:
        hi = 1.0
    if hi < 1.0 and dn * _kl(mean, hi) <= budget:
        return hi
    for it in range(KL_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if dn * _kl(mean, mid) <= budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= KL_TOL and budget - dn * _kl(mean, lo) <= KL_TOL:
            break
    return lo


def klucb_bound(double mean, int64_t n, double budget):
    return _klucb(mean, n, budget)


def run_klucb(const double[:, ::1] rewards, bint rested, int64_t T, const int64_t[::1] order, double c):
    cdef int64_t K = rewards.shape[0]
    arms_np = np.empty(T, dtype=np.int64)
    cdef int64_t[::1] arms = arms_np
    cdef int64_t[::1] counts = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] pulls = np.zeros(K, dtype=np.int64)
    cdef double[::1] sums = np.zeros(K)
    cdef double[::1] idx = np.empty(K)
    cdef int64_t t, i, arm
    cdef double budget
    with nogil:
        for t in range(1, T + 1):
            budget = _budget(<double> t, c)
            for i in range(K):
                if counts[i] == 0:
                    idx[i] = INFINITY
                else:
                    idx[i] = _klucb(sums[i] / (<double> counts[i]), counts[i], budget)
            arm = _argmax(&idx[0], order, K)
            arms[t - 1] = arm
            sums[arm] += _clip01(_reward(rewards, rested, arm, &pulls[0], t))
            pulls[arm] += 1
            counts[arm] += 1
    return arms_np


# -- sliding-window policies ------------------------------------------------------

cdef struct Window:
    int64_t tau
    int64_t size
    int64_t head
    int64_t* buf_arm
    int64_t* buf_q
    int64_t* sums
    int64_t* counts


cdef inline void _window_add(Window* w, int64_t arm, double reward) noexcept nogil:
    cdef int64_t q = _quantize(reward)
    cdef int64_t slot, old
    w.sums[arm] += q
    w.counts[arm] += 1
    if w.size < w.tau:
        slot = (w.head + w.size) % w.tau
        w.buf_arm[slot] = arm
        w.buf_q[slot] = q
        w.size += 1
    else:
        old = w.buf_arm[w.head]
        w.sums[old] -= w.buf_q[w.head]
        w.counts[old] -= 1
        w.buf_arm[w.head] = arm
        w.buf_q[w.head] = q
        w.head = (w.head + 1) % w.tau


def run_sliding(const double[:, ::1] rewards, bint rested, int64_t T, const int64_t[::1] order,
                int kind, int64_t tau, double param, object rng=None):
    """``kind``: 0 SW-UCB (param = xi), 1 SW-KL-UCB (param = c), 2 SW-TS."""
    cdef int64_t K = rewards.shape[0]
    arms_np = np.empty(T, dtype=np.int64)
    cdef int64_t[::1] arms = arms_np
    cdef int64_t[::1] buf_arm = np.zeros(tau, dtype=np.int64)
    cdef int64_t[::1] buf_q = np.zeros(tau, dtype=np.int64)
    cdef int64_t[::1] sums = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] counts = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] pulls = np.zeros(K, dtype=np.int64)
    cdef double[::1] idx = np.empty(K)
    cdef Window w
    cdef bitgen_t* bg = NULL
    cdef int64_t t, i, arm, m
    cdef double budget, sq
    if kind == 2:
        bg = _bitgen(rng)
    w.tau = tau
    w.size = 0
    w.head = 0
    w.buf_arm = &buf_arm[0]
    w.buf_q = &buf_q[0]
    w.sums = &sums[0]
    w.counts = &counts[0]
    with nogil:
        for t in range(1, T + 1):
            m = t if t < tau else tau
            if kind == 1:
                budget = _budget(<double> m, param)
            for i in range(K):
                if kind == 2:
                    sq = (<double> sums[i]) / FIXED_SCALE
                    idx[i] = random_beta(bg, 1.0 + sq, 1.0 + ((<double> counts[i]) - sq))
                elif counts[i] == 0:
                    idx[i] = INFINITY
                elif kind == 0:
                    idx[i] = ((<double> sums[i]) / FIXED_SCALE) / (<double> counts[i]) + \
                        sqrt(param * log(<double> m) / (<double> counts[i]))
                else:
                    idx[i] = _klucb((<double> sums[i]) / FIXED_SCALE / (<double> counts[i]), counts[i], budget)
            arm = _argmax(&idx[0], order, K)
            arms[t - 1] = arm
            _window_add(&w, arm, _reward(rewards, rested, arm, &pulls[0], t))
            pulls[arm] += 1
    return arms_np


# -- randomised policies --------------------------------------------------------

def run_rexp3(const double[:, ::1] rewards, bint rested, int64_t T, const int64_t[::1] order,
              double gamma, int64_t block, object rng):
    cdef int64_t K = rewards.shape[0]
    arms_np = np.empty(T, dtype=np.int64)
    cdef int64_t[::1] arms = arms_np
    cdef int64_t[::1] pulls = np.zeros(K, dtype=np.int64)
    cdef double[::1] lw = np.zeros(K)
    cdef double[::1] w = np.zeros(K)
    cdef double[::1] p = np.zeros(K)
    cdef bitgen_t* bg = _bitgen(rng)
    cdef int64_t t, i, arm
    cdef double mx, total, u, cum, x
    with nogil:
        for t in range(1, T + 1):
            if (t - 1) % block == 0:
                for i in range(K):
                    lw[i] = 0.0
            mx = lw[0]
            for i in range(1, K):
                if lw[i] > mx:
                    mx = lw[i]
            total = 0.0
            for i in range(K):
                w[i] = exp(lw[i] - mx)
                total = total + w[i]
            for i in range(K):
                p[i] = (1.0 - gamma) * w[i] / total + gamma / (<double> K)
            u = random_standard_uniform(bg)
            cum = 0.0
            arm = K - 1
            for i in range(K):
                cum = cum + p[i]
                if u < cum:
                    arm = i
                    break
            arms[t - 1] = arm
            x = _clip01(_reward(rewards, rested, arm, &pulls[0], t))
            pulls[arm] += 1
            lw[arm] = lw[arm] + gamma * (x / p[arm]) / (<double> K)
    return arms_np


def run_ser4(const double[:, ::1] rewards, bint rested, int64_t T, const int64_t[::1] order,
             double delta, double explore, double reset, double horizon, object rng):
    cdef int64_t K = rewards.shape[0]
    arms_np = np.empty(T, dtype=np.int64)
    cdef int64_t[::1] arms = arms_np
    cdef int64_t[::1] pulls = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] active = np.arange(K, dtype=np.int64)
    cdef int64_t[::1] queue = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] counts = np.zeros(K, dtype=np.int64)
    cdef double[::1] sums = np.zeros(K)
    cdef double[::1] means = np.zeros(K)
    cdef bitgen_t* bg = _bitgen(rng)
    cdef double log_term = log(4.0 * (<double> K) * horizon * horizon / delta)
    cdef int64_t n_active = K, q_len = 0, q_pos = 0
    cdef int64_t t, i, j, k, arm, m, tmp, kept
    cdef bint explored
    cdef double r, best, threshold
    with nogil:
        for t in range(1, T + 1):
            if random_standard_uniform(bg) < reset:
                n_active = K
                for i in range(K):
                    active[i] = i
                    sums[i] = 0.0
                    counts[i] = 0
                q_len = 0
                q_pos = 0
            explored = random_standard_uniform(bg) < explore
            if explored:
                arm = <int64_t> (random_standard_uniform(bg) * (<double> K))
                if arm > K - 1:
                    arm = K - 1
            else:
                if q_pos >= q_len:
                    for i in range(n_active):
                        queue[i] = active[i]
                    for i in range(n_active - 1, 0, -1):
                        j = <int64_t> (random_standard_uniform(bg) * (<double> (i + 1)))
                        tmp = queue[i]
                        queue[i] = queue[j]
                        queue[j] = tmp
                    q_len = n_active
                    q_pos = 0
                arm = queue[q_pos]
                q_pos += 1
            arms[t - 1] = arm
            r = _reward(rewards, rested, arm, &pulls[0], t)
            pulls[arm] += 1
            if explored:
                continue
            sums[arm] += r
            counts[arm] += 1
            if q_pos >= q_len:
                m = counts[active[0]]
                for k in range(1, n_active):
                    if counts[active[k]] < m:
                        m = counts[active[k]]
                if m == 0:
                    continue
                best = -INFINITY
                for k in range(n_active):
                    i = active[k]
                    means[i] = sums[i] / (<double> counts[i])
                    if means[i] > best:
                        best = means[i]
                threshold = 2.0 * sqrt(log_term / (2.0 * (<double> m)))
                kept = 0
                for k in range(n_active):
                    i = active[k]
                    if best - means[i] < threshold:
                        active[kept] = i
                        kept += 1
                n_active = kept
    return arms_np
