"""Cyclic Jacobi eigensolver for stacks of small Hermitian matrices.

Two implementations of the same sweep: a numba kernel that walks the batch
one matrix at a time, and a numpy kernel that applies every plane rotation
to the whole batch at once.  ``jacobi_eigh`` dispatches on the backend flag.

Each rotation for pivot ``(p, q)`` first removes the phase of ``a[p, q]``
and then applies the classical real rotation, i.e. ``A <- U^H A U`` with
``U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]`` on the ``(p, q)`` plane.
"""
import numpy as np

from . import _backend

TOL_REL = 1e-14
MAX_SWEEPS = 100


def _jacobi_one(a, v, tol_rel, max_sweeps):
    """Diagonalise ``a`` in place, accumulating rotations into ``v``.

    Returns the number of sweeps used, or -1 when ``max_sweeps`` was hit.
    """
    n = a.shape[0]
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += a[i, j].real ** 2 + a[i, j].imag ** 2
    thresh = tol_rel * np.sqrt(norm)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j].real ** 2 + a[i, j].imag ** 2
        if np.sqrt(off) <= thresh:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                # componentwise: complex division overflows for subnormal r
                ph = complex(apq.real / r, apq.imag / r)
                # stable root of t^2 + 2 t theta - 1 = 0
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                upp = c + 0.0j
                upq = s + 0.0j
                uqp = -s * ph.conjugate()
                uqq = c * ph.conjugate()
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * upp + akq * uqp
                    a[k, q] = akp * upq + akq * uqq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = upp.conjugate() * apk + uqp.conjugate() * aqk
                    a[q, k] = upq.conjugate() * apk + uqq.conjugate() * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * upp + vkq * uqp
                    v[k, q] = vkp * upq + vkq * uqq
    return -1


def _jacobi_batch_numpy(a, tol_rel=TOL_REL, max_sweeps=MAX_SWEEPS):
    a = np.array(a, dtype=np.complex128, copy=True)
    nb, n = a.shape[0], a.shape[1]
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    offmask = ~np.eye(n, dtype=bool)
    thresh = tol_rel * np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    sweeps = np.full(nb, -1, dtype=np.int64)
    active = np.ones(nb, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        done = active & (off <= thresh)
        sweeps[done] = sweep
        active &= ~done
        if not active.any() or sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                r = np.abs(apq)
                live = r > 0.0
                safe_r = np.where(live, r, 1.0)
                ph = np.where(live, apq.real / safe_r + 1j * (apq.imag / safe_r), 1.0)
                with np.errstate(over="ignore"):  # inf lands in the large-theta branch
                    theta = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe_r)
                big = np.abs(theta) > 1e150
                tb = np.where(big, 0.0, theta)
                t = np.where(
                    big,
                    0.5 / np.where(big, theta, 1.0),
                    np.where(tb < 0.0, -1.0, 1.0) / (np.abs(tb) + np.sqrt(tb * tb + 1.0)),
                )
                t = np.where(live, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                upp = c.astype(np.complex128)
                upq = s.astype(np.complex128)
                uqp = -s * ph.conj()
                uqq = c * ph.conj()
                akp = a[:, :, p].copy()
                akq = a[:, :, q]
                a[:, :, p] = akp * upp[:, None] + akq * uqp[:, None]
                a[:, :, q] = akp * upq[:, None] + akq * uqq[:, None]
                apk = a[:, p, :].copy()
                aqk = a[:, q, :]
                a[:, p, :] = upp.conj()[:, None] * apk + uqp.conj()[:, None] * aqk
                a[:, q, :] = upq.conj()[:, None] * apk + uqq.conj()[:, None] * aqk
                a[live, p, q] = 0.0
                a[live, q, p] = 0.0
                a[:, p, p] = a[:, p, p].real
                a[:, q, q] = a[:, q, q].real
                vkp = v[:, :, p].copy()
                vkq = v[:, :, q]
                v[:, :, p] = vkp * upp[:, None] + vkq * uqp[:, None]
                v[:, :, q] = vkp * upq[:, None] + vkq * uqq[:, None]
    w = np.real(np.diagonal(a, axis1=1, axis2=2)).copy()
    return w, v, sweeps


if _backend.HAVE_NUMBA:
    from numba import njit, prange

    _jacobi_one_nb = njit(cache=True)(_jacobi_one)

    @njit(cache=True, parallel=True)
    def _jacobi_batch_numba(a, tol_rel=TOL_REL, max_sweeps=MAX_SWEEPS):
        nb, n = a.shape[0], a.shape[1]
        w = np.empty((nb, n))
        v = np.zeros((nb, n, n), dtype=np.complex128)
        sweeps = np.empty(nb, dtype=np.int64)
        for b in prange(nb):
            work = a[b].copy()
            vb = np.zeros((n, n), dtype=np.complex128)
            for i in range(n):
                vb[i, i] = 1.0
            sweeps[b] = _jacobi_one_nb(work, vb, tol_rel, max_sweeps)
            v[b] = vb
            for i in range(n):
                w[b, i] = work[i, i].real
        return w, v, sweeps
else:  # pragma: no cover
    _jacobi_batch_numba = None


def jacobi_eigh(a, backend=None):
    """Unsorted eigenpairs of a stack ``(B, n, n)`` of Hermitian matrices.

    Returns ``(w, v, sweeps)``; ``sweeps[b] == -1`` flags non-convergence.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError(f"expected a (B, n, n) stack, got shape {a.shape}")
    backend = backend or _backend.backend_name()
    if backend == "numba":
        if _jacobi_batch_numba is None:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _jacobi_batch_numba(a, TOL_REL, MAX_SWEEPS)
    if backend == "numpy":
        return _jacobi_batch_numpy(a, TOL_REL, MAX_SWEEPS)
    raise ValueError(f"unknown backend {backend!r}")
