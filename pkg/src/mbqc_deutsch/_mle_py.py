"""Pure numpy implementation of the diluted R-rho-R iteration.

Works directly with the rank-one projector kets of every (setting, outcome)
pair.  The compiled kernel in ``_mle_kernel.pyx`` exposes the same
``rrho_iterate`` signature.
"""

from functools import lru_cache

import numpy as np

from .qcore import KETS

# rows: outcome-0 ket, outcome-1 ket; codes 1=X, 2=Y, 3=Z
_EIGENKETS = {
    1: (KETS["+"], KETS["-"]),
    2: (KETS["R"], KETS["L"]),
    3: (KETS["0"], KETS["1"]),
}


@lru_cache(maxsize=8)
def _projector_kets(codes_key):
    codes = np.frombuffer(codes_key[1], dtype=np.int8).reshape(codes_key[0])
    n_settings, n = codes.shape
    kets = []
    for row in codes:
        per_qubit = [np.array(_EIGENKETS[int(c)]) for c in row]
        block = per_qubit[0]
        for k in per_qubit[1:]:
            block = np.einsum("ai,bj->abij", block, k).reshape(block.shape[0] * 2, -1)
        kets.append(block)
    return np.concatenate(kets, axis=0)


def projector_kets(codes: np.ndarray) -> np.ndarray:
    """Stack of ``3**n * 2**n`` kets, setting-major then outcome."""
    codes = np.ascontiguousarray(codes, dtype=np.int8)
    return _projector_kets((codes.shape, codes.tobytes()))


def probabilities(kets: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return np.einsum("ki,ki->k", kets.conj(), kets @ rho.T).real


def rrho_iterate(codes, freqs, rho0, epsilon, tol, patience, max_iter, floor):
    """Run the fixed-point iteration; returns ``(rho, history, iterations, converged)``.

    ``freqs`` has one row per setting and sums to one overall.
    """
    kets = projector_kets(codes)
    f = np.ascontiguousarray(freqs, dtype=float).reshape(-1)
    mask = f > 0
    fk = f[mask]
    km = kets[mask]
    d = kets.shape[1]
    eye = np.eye(d)
    rho = np.array(rho0, dtype=complex)

    p = np.maximum(probabilities(km, rho), floor)
    loglik = float(fk @ np.log(p))
    history = [loglik]
    small = 0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        r = (km.T * (fk / p)) @ km.conj()
        m = eye + epsilon * r
        rho = m @ rho @ m
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        p = np.maximum(probabilities(km, rho), floor)
        new = float(fk @ np.log(p))
        history.append(new)
        small = small + 1 if new - loglik < tol else 0
        loglik = new
        if small >= patience:
            converged = True
            break
    return rho, np.array(history), it, converged
