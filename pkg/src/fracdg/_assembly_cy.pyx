# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for fractional stiffness block accumulation.

Same contract as fracdg._assembly_py.accumulate_blocks; the modal basis is
evaluated by the homogenized Dubiner recurrences (division-free Legendre in
the collapsed direction, classical Jacobi in the other), so points far
outside the source element are exact polynomial extensions.
"""

from libc.math cimport fabs, pow


def accumulate_blocks(const long[::1] ent_slot, const long[::1] ent_m,
                      const long[::1] ent_q,
                      const double[::1] ent_lo, const double[::1] ent_hi,
                      const double[::1] ent_tgt, const double[::1] ent_fix,
                      int ax, bint toward_min, double gamma_ord,
                      double inv_gamma, double sing_tol,
                      const double[:, ::1] rmap, const double[:, ::1] smap,
                      const double[::1] gj_nodes, const double[::1] gj_weights,
                      const double[:, ::1] vinv, int degree,
                      const double[::1] mode_norm,
                      const double[:, ::1] outer,
                      double[:, :, ::1] out_blocks):
    cdef Py_ssize_t C = ent_slot.shape[0]
    cdef int n = gj_nodes.shape[0]
    cdef int Np = vinv.shape[0]
    cdef int N = degree
    cdef Py_ssize_t c
    cdef long m, slot, q
    cdef int ipass, g, i, j, sk
    cdef double tgt, fix, anchor, sign, half, mid, scale, xi, px, py
    cdef double r, s, w, u, v, v2, a, cc, c1, c2, c3, c4, pj, pjm1, pnew
    cdef double qq[16]
    cdef double imodal[64]
    cdef double inodal[64]
    cdef double acc, oi

    if Np > 64 or N > 14:
        raise ValueError("degree exceeds compiled kernel limits")

    for c in range(C):
        m = ent_m[c]
        tgt = ent_tgt[c]
        fix = ent_fix[c]
        for sk in range(Np):
            imodal[sk] = 0.0

        for ipass in range(2):
            if ipass == 0:
                anchor = ent_lo[c] if toward_min else ent_hi[c]
                sign = 1.0
            else:
                if toward_min:
                    if ent_tgt[c] - ent_hi[c] <= sing_tol:
                        continue
                    anchor = ent_hi[c]
                else:
                    if ent_lo[c] - ent_tgt[c] <= sing_tol:
                        continue
                    anchor = ent_lo[c]
                sign = -1.0
            half = 0.5 * fabs(tgt - anchor)
            mid = 0.5 * (tgt + anchor)
            scale = sign * pow(half, gamma_ord)

            for g in range(n):
                xi = mid + half * gj_nodes[g]
                if ax == 0:
                    px = xi
                    py = fix
                else:
                    px = fix
                    py = xi
                r = rmap[m, 0] + rmap[m, 1] * px + rmap[m, 2] * py
                s = smap[m, 0] + smap[m, 1] * px + smap[m, 2] * py
                w = scale * gj_weights[g]

                u = 2.0 * r + 1.0 + s
                v = 1.0 - s
                v2 = v * v
                qq[0] = 1.0
                if N >= 1:
                    qq[1] = u
                for i in range(1, N):
                    qq[i + 1] = ((2.0 * i + 1.0) * u * qq[i]
                                 - i * v2 * qq[i - 1]) / (i + 1.0)
                sk = 0
                for i in range(N + 1):
                    a = 2.0 * i + 1.0
                    pjm1 = 0.0
                    pj = 1.0
                    for j in range(N + 1 - i):
                        imodal[sk] += w * mode_norm[sk] * qq[i] * pj
                        sk += 1
                        if j == N - i:
                            break
                        if j == 0:
                            pnew = 0.5 * (a + (a + 2.0) * s)
                        else:
                            cc = 2.0 * j + a
                            c1 = 2.0 * (j + 1.0) * (j + a + 1.0) * cc
                            c2 = (cc + 1.0) * a * a
                            c3 = cc * (cc + 1.0) * (cc + 2.0)
                            c4 = 2.0 * (j + a) * j * (cc + 2.0)
                            pnew = ((c2 + c3 * s) * pj - c4 * pjm1) / c1
                        pjm1 = pj
                        pj = pnew

        for j in range(Np):
            acc = 0.0
            for sk in range(Np):
                acc += vinv[sk, j] * imodal[sk]
            inodal[j] = acc * inv_gamma

        slot = ent_slot[c]
        q = ent_q[c]
        for i in range(Np):
            oi = outer[q, i]
            for j in range(Np):
                out_blocks[slot, i, j] += oi * inodal[j]


def walk_trace(const double[:, ::1] T, const double[:, ::1] F,
               const long[:, ::1] e2e, const long[:, ::1] e2f,
               long host, double tcoord, double fcoord,
               bint toward_min, double tol,
               double lo_bound, double hi_bound,
               long[::1] out_elems, double[::1] out_breaks):
    """Face-adjacency walk along an axis-aligned segment.

    T/F hold the traveling/fixed coordinate of each triangle's vertices.
    Writes the crossed-element chain (host outward) into out_elems and the
    interval breakpoints into out_breaks (one more entry than elements);
    returns the element count, or -1 on a degenerate configuration (vertex on
    the line, inconsistent crossings) so the caller can fall back to the
    exhaustive tracer.
    """
    cdef long K = T.shape[0]
    cdef long k = host
    cdef long nxt
    cdef int enter_face = -1
    cdef int f, g, nc, exit_f, i
    cdef double cur = tcoord
    cdef double fa, fb, tcross, exit_t, enter_t, target_bound
    cdef double cross_t[3]
    cdef int cross_f[3]
    cdef Py_ssize_t nelem = 1
    cdef Py_ssize_t step

    target_bound = lo_bound if toward_min else hi_bound
    out_elems[0] = host
    out_breaks[0] = tcoord

    for step in range(K + 2):
        nc = 0
        for f in range(3):
            g = (f + 1) % 3
            fa = F[k, f] - fcoord
            fb = F[k, g] - fcoord
            if fabs(fa) <= tol or fabs(fb) <= tol:
                return -1
            if (fa > 0.0) != (fb > 0.0):
                if nc >= 3:
                    return -1
                cross_t[nc] = T[k, f] + (T[k, g] - T[k, f]) * fa / (fa - fb)
                cross_f[nc] = f
                nc += 1
        if nc != 2:
            return -1
        if toward_min:
            i = 0 if cross_t[0] <= cross_t[1] else 1
        else:
            i = 0 if cross_t[0] >= cross_t[1] else 1
        exit_t = cross_t[i]
        exit_f = cross_f[i]
        if enter_face >= 0:
            enter_t = cross_t[1 - i]
            if fabs(enter_t - cur) > 100.0 * tol + 1e-12 * fabs(cur):
                return -1
        if exit_f == enter_face:
            return -1
        out_breaks[nelem] = exit_t
        cur = exit_t
        nxt = e2e[k, exit_f]
        if nxt == k:
            if fabs(exit_t - target_bound) > 1e4 * tol:
                return -1
            out_breaks[nelem] = target_bound
            return nelem
        enter_face = <int> e2f[k, exit_f]
        k = nxt
        out_elems[nelem] = k
        nelem += 1
    return -1
