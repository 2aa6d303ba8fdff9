"""Floating-point evaluation of Fourier functions.

Exact coefficients are rounded to double only here.  A compiled evaluator
gathers the distinct monomials, forms and denominator products once and then
evaluates batches of points with numpy.
"""

from __future__ import annotations

from typing import Optional, Sequence

import mpmath
import numpy as np
import scipy.sparse as sp

from .coefficient import c_terms
from .fourier import FourierFunction

_CHUNK_ENTRIES = 2_000_000


class DenominatorVanishes(ZeroDivisionError):
    """A linear form in a denominator is zero at the evaluation point."""


class CompiledFunction:
    """Vectorized evaluator for one :class:`FourierFunction`."""

    def __init__(self, f: FourierFunction):
        self.n = f.n
        self.real = f.real
        items = sorted(f._modes.items())
        if self.real:
            # keep mu = 0 and one representative of each conjugate pair
            items = [(mu, c) for mu, c in items if mu >= tuple(-v for v in mu)]
        self.mus = np.array([mu for mu, _ in items], dtype=float).reshape(-1, self.n)
        self.is_zero_mode = np.array([not any(mu) for mu, _ in items], dtype=bool)
        monos, dens, forms = {}, {}, {}
        rows, cols, vals = [], [], []
        term_mono, term_den = [], []
        t = 0
        for m, (mu, c) in enumerate(items):
            for (mono, dd), (re, im) in c_terms(c):
                term_mono.append(monos.setdefault(mono, len(monos)))
                for form, _ in dd:
                    forms.setdefault(form, len(forms))
                term_den.append(dens.setdefault(dd, len(dens)))
                rows.append(t)
                cols.append(m)
                vals.append(complex(float(re), float(im)))
                t += 1
        self.n_terms = t
        self.forms = list(forms)
        self.form_matrix = np.array(self.forms, dtype=float).reshape(-1, self.n)
        self.monos = np.array(list(monos), dtype=int).reshape(-1, self.n)
        self.dens = [tuple((forms[fm], p) for fm, p in dd) for dd in dens]
        self.term_mono = np.array(term_mono, dtype=int)
        self.term_den = np.array(term_den, dtype=int)
        self.S = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)),
                               shape=(t, len(items)))

    def coefficients(self, I: np.ndarray) -> np.ndarray:
        """Coefficient values, shape (P, modes)."""
        P = I.shape[0]
        dtype = complex if np.iscomplexobj(I) else float
        mono_vals = np.ones((P, len(self.monos)), dtype=dtype)
        for i in range(self.n):
            col = self.monos[:, i]
            if col.any():
                mono_vals *= I[:, i:i + 1] ** col[None, :]
        fv = I @ self.form_matrix.T if len(self.forms) else np.zeros((P, 0))
        if fv.size and np.any(fv == 0):
            bad = np.argwhere(fv == 0)[0][1]
            raise DenominatorVanishes(f"linear form {self.forms[bad]} vanishes")
        den_vals = np.ones((P, len(self.dens)), dtype=fv.dtype if fv.size else dtype)
        for d, dd in enumerate(self.dens):
            for j, p in dd:
                den_vals[:, d] /= fv[:, j] ** p
        tv = mono_vals[:, self.term_mono] * den_vals[:, self.term_den]
        return np.asarray(self.S.T.dot(tv.T).T)

    def __call__(self, I, phi) -> np.ndarray:
        I = np.asarray(I)
        phi = np.asarray(phi)
        single = I.ndim == 1
        I = np.atleast_2d(I)
        phi = np.atleast_2d(phi)
        if I.shape[1] != self.n or phi.shape[1] != self.n:
            raise ValueError("point dimension does not match n")
        real_in = not np.iscomplexobj(I) and not np.iscomplexobj(phi)
        P = I.shape[0]
        out = np.empty(P, dtype=float if (self.real and real_in) else complex)
        step = max(1, _CHUNK_ENTRIES // max(1, self.n_terms))
        for s in range(0, P, step):
            sl = slice(s, s + step)
            coef = self.coefficients(I[sl])
            if coef.shape[1] == 0:
                out[sl] = 0.0
                continue
            ph = np.exp(1j * (phi[sl] @ self.mus.T))
            prod = coef * ph
            if self.real and real_in:
                w = np.where(self.is_zero_mode, 1.0, 2.0)
                out[sl] = (prod.real * w[None, :]).sum(axis=1)
            elif self.real:
                # complex point: the pair (mu, -mu) is added explicitly
                conj_coef = self._conj_coefficients(I[sl])
                ph_neg = np.exp(-1j * (phi[sl] @ self.mus.T))
                extra = (conj_coef * ph_neg)[:, ~self.is_zero_mode].sum(axis=1)
                out[sl] = prod.sum(axis=1) + extra
            else:
                out[sl] = prod.sum(axis=1)
        return out[0] if single else out

    def _conj_coefficients(self, I: np.ndarray) -> np.ndarray:
        # f_{-mu}(I) = conj(f_mu(conj I)) for real functions
        return np.conj(self.coefficients(np.conj(I)))


def compile_function(f: FourierFunction) -> CompiledFunction:
    return CompiledFunction(f)


def evaluate(f: FourierFunction, I: Sequence, phi: Sequence):
    """Value of ``f`` at one point or a batch of points (rows)."""
    return CompiledFunction(f)(I, phi)


def evaluate_mp(f: FourierFunction, I: Sequence, phi: Sequence, dps: int = 50):
    """High-precision value at a single point using mpmath."""
    with mpmath.workdps(dps):
        Iv = [mpmath.mpmathify(x) for x in I]
        pv = [mpmath.mpmathify(x) for x in phi]
        total = mpmath.mpc(0)
        for mu, c in f._modes.items():
            ph = mpmath.exp(1j * mpmath.fsum(m * p for m, p in zip(mu, pv) if m))
            acc = mpmath.mpc(0)
            for (mono, dens), (re, im) in c_terms(c):
                v = mpmath.mpc(mpmath.mpf(int(re.numerator)) / int(re.denominator),
                               mpmath.mpf(int(im.numerator)) / int(im.denominator))
                for x, a in zip(Iv, mono):
                    if a:
                        v *= x ** a
                for form, p in dens:
                    fv = mpmath.fsum(x * y for x, y in zip(Iv, form) if y)
                    if fv == 0:
                        raise DenominatorVanishes(f"linear form {form} vanishes")
                    v /= fv ** p
                acc += v
            total += acc * ph
        return total


__all__ = ["CompiledFunction", "compile_function", "evaluate", "evaluate_mp",
           "DenominatorVanishes"]
