"""Numba kernels for the dense complex eigensolver.

balance -> Householder Hessenberg -> single-shift complex QR (Wilkinson
shift, exceptional shifts at 10 and 20 stalled sweeps, Ahues-Tisseur
deflation test as in LAPACK zlahqr). Eigenvalues only.
"""
import numpy as np
from numba import njit

_ULP = np.finfo(np.float64).eps
_SAFMIN = np.finfo(np.float64).tiny


@njit(cache=True, nogil=True)
def _abs1(z):
    return abs(z.real) + abs(z.imag)


@njit(cache=True, nogil=True)
def balance(A):
    """Diagonal power-of-two scaling reducing row/column norm imbalance (in place)."""
    n = A.shape[0]
    radix = 2.0
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += _abs1(A[j, i])
                    r += _abs1(A[i, j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= radix * radix
            g = r * radix
            while c >= g:
                f /= radix
                c /= radix * radix
            if (c + r * f * f) / f < 0.95 * s:
                # A <- D^-1 A D with D_ii = f
                converged = False
                for j in range(n):
                    A[i, j] /= f
                for j in range(n):
                    A[j, i] *= f
    return A


@njit(cache=True, nogil=True)
def hessenberg(A):
    """Reduce A to upper Hessenberg form by Householder similarities (in place)."""
    n = A.shape[0]
    v = np.empty(n, dtype=np.complex128)
    s = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        nrm2 = 0.0
        for i in range(k + 1, n):
            nrm2 += A[i, k].real ** 2 + A[i, k].imag ** 2
        if nrm2 == 0.0:
            continue
        nrm = np.sqrt(nrm2)
        x0 = A[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0 else 1.0 + 0j
        alpha = -phase * nrm
        m = n - k - 1
        for i in range(m):
            v[i] = A[k + 1 + i, k]
        v[0] -= alpha
        vn2 = 0.0
        for i in range(m):
            vn2 += v[i].real ** 2 + v[i].imag ** 2
        if vn2 == 0.0:
            continue
        beta = 2.0 / vn2
        # left: rows k+1.., columns k..
        for j in range(k, n):
            s[j] = 0.0
        for i in range(m):
            cv = np.conj(v[i])
            for j in range(k, n):
                s[j] += cv * A[k + 1 + i, j]
        for i in range(m):
            vi = v[i] * beta
            for j in range(k, n):
                A[k + 1 + i, j] -= vi * s[j]
        # right: all rows, columns k+1..
        for i in range(n):
            t = 0.0 + 0j
            for j in range(m):
                t += A[i, k + 1 + j] * v[j]
            t *= beta
            for j in range(m):
                A[i, k + 1 + j] -= t * np.conj(v[j])
        A[k + 1, k] = alpha
        for i in range(k + 2, n):
            A[i, k] = 0.0
    return A


@njit(cache=True, nogil=True)
def _eig2(a, b, c, d):
    tr2 = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    e1 = tr2 + disc
    e2 = tr2 - disc
    # recover the smaller root from the determinant when cancellation bites
    det = a * d - b * c
    if abs(e1) >= abs(e2):
        if abs(e1) > 0:
            e2 = det / e1
    else:
        e1 = det / e2
    return e1, e2


@njit(cache=True, nogil=True)
def hqr(H, maxit):
    """Eigenvalues of upper Hessenberg H (destroyed). Returns (w, status, sweeps)."""
    n = H.shape[0]
    w = np.zeros(n, dtype=np.complex128)
    smlnum = _SAFMIN * (n / _ULP)
    ihi = n - 1
    sweeps = 0
    its = 0
    while ihi >= 0:
        # locate the active block [l, ihi]
        l = 0
        k = ihi
        while k > 0:
            hk = _abs1(H[k, k - 1])
            if hk <= smlnum:
                l = k
                break
            tst = _abs1(H[k - 1, k - 1]) + _abs1(H[k, k])
            if tst == 0.0:
                if k - 2 >= 0:
                    tst += _abs1(H[k - 1, k - 2])
                if k + 1 <= ihi:
                    tst += _abs1(H[k + 1, k])
            if hk <= _ULP * tst:
                ab = max(hk, _abs1(H[k - 1, k]))
                ba = min(hk, _abs1(H[k - 1, k]))
                aa = max(_abs1(H[k, k]), _abs1(H[k - 1, k - 1] - H[k, k]))
                bb = min(_abs1(H[k, k]), _abs1(H[k - 1, k - 1] - H[k, k]))
                s = aa + ab
                if ba * (ab / s) <= max(smlnum, _ULP * (bb * (aa / s))):
                    l = k
                    break
            k -= 1
        if l > 0:
            H[l, l - 1] = 0.0
        if l == ihi:
            w[ihi] = H[ihi, ihi]
            ihi -= 1
            its = 0
            continue
        if l == ihi - 1:
            e1, e2 = _eig2(H[l, l], H[l, ihi], H[ihi, l], H[ihi, ihi])
            w[l] = e1
            w[ihi] = e2
            ihi -= 2
            its = 0
            continue
        sweeps += 1
        if sweeps > maxit:
            return w, 1, sweeps
        its += 1
        if its == 10:
            mu = 0.75 * abs(H[l + 1, l].real) + H[l, l]
        elif its == 20:
            mu = 0.75 * abs(H[ihi, ihi - 1].real) + H[ihi, ihi]
        else:
            a = H[ihi - 1, ihi - 1]
            b = H[ihi - 1, ihi]
            c = H[ihi, ihi - 1]
            d = H[ihi, ihi]
            e1, e2 = _eig2(a, b, c, d)
            mu = e1 if abs(e1 - d) <= abs(e2 - d) else e2
        x = H[l, l] - mu
        y = H[l + 1, l]
        for k in range(l, ihi):
            if k > l:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            ax = abs(x)
            ay = abs(y)
            if ay == 0.0:
                continue
            if ax == 0.0:
                cs = 0.0
                sn = 1.0 + 0j
            else:
                nrm = np.hypot(ax, ay)
                cs = ax / nrm
                sn = (x / ax) * np.conj(y) / nrm
            j0 = k - 1 if k > l else l
            for j in range(j0, ihi + 1):
                a = H[k, j]
                b = H[k + 1, j]
                H[k, j] = cs * a + sn * b
                H[k + 1, j] = -np.conj(sn) * a + cs * b
            if k > l:
                H[k + 1, k - 1] = 0.0
            i1 = min(k + 2, ihi)
            for i in range(l, i1 + 1):
                a = H[i, k]
                b = H[i, k + 1]
                H[i, k] = cs * a + np.conj(sn) * b
                H[i, k + 1] = -sn * a + cs * b
    return w, 0, sweeps
