"""Over-complete Pauli-basis tomography with maximum-likelihood reconstruction.

Every qubit is measured in the X, Y or Z eigenbasis, so ``n`` qubits give
``3**n`` settings with ``2**n`` outcomes each (1296 projectors for four
qubits).  Outcome bit 0 selects the +1 eigenvector (``|0>``, ``|+>``, ``|R>``).

The reconstruction loop runs in a compiled extension when it is available
and falls back to numpy otherwise; set ``MBQC_DEUTSCH_PURE_PYTHON=1`` to
force the fallback.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _mle_py, qcore
from .cluster import BISEPARABLE_BOUND, build_phi_c
from .errors import ConfigurationError, EstimationError

try:
    if os.environ.get("MBQC_DEUTSCH_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from . import _mle_kernel
except ImportError:
    _mle_kernel = None

BACKEND = "compiled" if _mle_kernel is not None else "python"

AXES = "XYZ"
_AXIS_CODE = {"X": 1, "Y": 2, "Z": 3}
_OUTCOME_LABEL = {"X": "+-", "Y": "RL", "Z": "01"}
MODES = ("multinomial", "poisson", "expected")


@dataclass(frozen=True)
class SettingsPlan:
    """All ``3**n`` local Pauli settings, qubit 1 first in each label."""

    n: int
    settings: tuple[str, ...] = field(repr=False)
    outcomes: tuple[str, ...] = field(repr=False)

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def n_projectors(self) -> int:
        return self.n_settings * self.n_outcomes

    @property
    def codes(self) -> np.ndarray:
        return np.array([[_AXIS_CODE[a] for a in s] for s in self.settings], dtype=np.int8)

    def projector_label(self, setting: str, outcome: str) -> str:
        """Eigenstate labels, e.g. ``("XZ", "10") -> "-0"``."""
        return "".join(_OUTCOME_LABEL[a][int(b)] for a, b in zip(setting, outcome))

    def projector_kets(self) -> np.ndarray:
        """``(n_projectors, 2**n)`` array of kets, setting-major."""
        return _mle_py.projector_kets(self.codes)


def settings_plan(n: int) -> SettingsPlan:
    if n not in (2, 4):
        raise ConfigurationError(f"tomography plans exist for 2 or 4 qubits, not {n!r}")
    settings = tuple("".join(s) for s in itertools.product(AXES, repeat=n))
    outcomes = tuple("".join(o) for o in itertools.product("01", repeat=n))
    return SettingsPlan(n, settings, outcomes)


def born_probabilities(rho: np.ndarray, plan: SettingsPlan) -> np.ndarray:
    """``(n_settings, n_outcomes)`` outcome probabilities."""
    p = _mle_py.probabilities(plan.projector_kets(), np.asarray(rho, dtype=complex))
    p = np.clip(p, 0.0, None).reshape(plan.n_settings, plan.n_outcomes)
    return p / p.sum(axis=1, keepdims=True)


@dataclass(eq=False)
class CountTable:
    """Counts per (setting, outcome).

    ``mode`` records how they were produced: ``multinomial`` (each row sums to
    ``shots``), ``poisson`` (independent draws with mean ``shots * p``) or
    ``expected`` (noise-free ``shots * p``, possibly non-integer).
    """

    plan: SettingsPlan
    shots: int
    counts: np.ndarray
    mode: str = "multinomial"
    seed: int | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.counts.shape != (self.plan.n_settings, self.plan.n_outcomes):
            raise ConfigurationError(f"count array has shape {self.counts.shape}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown count mode {self.mode!r}")
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise ConfigurationError("counts must be finite and nonnegative")

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        total = self.total
        if total <= 0:
            raise EstimationError("count table is empty")
        return self.counts / total

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            seed = "none" if self.seed is None else str(self.seed)
            fh.write(f"# shots={self.shots} mode={self.mode} seed={seed}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["setting", "outcome", "count"])
            integral = self.mode != "expected"
            for i, s in enumerate(self.plan.settings):
                for j, o in enumerate(self.plan.outcomes):
                    c = self.counts[i, j]
                    w.writerow([s, o, int(c) if integral else repr(float(c))])

    @classmethod
    def from_csv(cls, path) -> "CountTable":
        meta = {}
        rows = []
        with open(path, newline="") as fh:
            lines = []
            for line in fh:
                if line.startswith("#"):
                    for item in line[1:].split():
                        k, _, v = item.partition("=")
                        meta[k] = v
                else:
                    lines.append(line)
            for row in csv.DictReader(lines):
                rows.append(row)
        if not rows:
            raise ConfigurationError(f"{path}: no count rows")
        n = len(rows[0]["setting"])
        plan = settings_plan(n)
        mode = meta.get("mode", "multinomial")
        counts = np.zeros((plan.n_settings, plan.n_outcomes), dtype=float if mode == "expected" else np.int64)
        s_index = {s: i for i, s in enumerate(plan.settings)}
        o_index = {o: i for i, o in enumerate(plan.outcomes)}
        try:
            for row in rows:
                value = float(row["count"]) if mode == "expected" else int(row["count"])
                counts[s_index[row["setting"]], o_index[row["outcome"]]] = value
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"{path}: malformed row ({exc})") from None
        seed = meta.get("seed", "none")
        return cls(plan, int(meta.get("shots", 0)), counts, mode,
                   None if seed == "none" else int(seed))


def simulate_counts(rho: np.ndarray, plan: SettingsPlan, shots: int, rng=None,
                    mode: str = "multinomial") -> CountTable:
    """Draw synthetic counts for every setting of ``plan``."""
    qcore.check_density(rho, tol=1e-8)
    if shots < 1:
        raise ConfigurationError("shots must be at least 1")
    if mode not in MODES:
        raise ConfigurationError(f"unknown count mode {mode!r}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    probs = born_probabilities(rho, plan)
    if mode == "multinomial":
        counts = np.stack([rng.multinomial(shots, p) for p in probs])
    elif mode == "poisson":
        counts = rng.poisson(shots * probs)
    else:
        counts = shots * probs
    return CountTable(plan, shots, counts, mode, None if seed is None else int(seed))


def expected_counts(rho: np.ndarray, plan: SettingsPlan, shots: float = 1.0) -> CountTable:
    """Noise-free counts ``shots * p``."""
    return CountTable(plan, int(shots), shots * born_probabilities(rho, plan), "expected")


@dataclass(eq=False)
class MLEResult:
    """Reconstruction output.

    ``log_likelihood`` is the frequency-weighted mean log-probability
    ``sum_k f_k log p_k`` with ``f`` normalized to one; ``history`` holds its
    value at the start and after every R-rho-R iteration and Newton step.
    """

    rho: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    history: np.ndarray = field(repr=False)
    newton_steps: int = 0


@lru_cache(maxsize=4)
def _pauli_design(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Projector-vs-Pauli table and the non-identity Pauli matrices.

    Row ``k`` of the table holds ``tr(Pi_k P)`` for every non-identity Pauli
    string ``P``, so ``p_k = (1 + table[k] @ x) / 2**n`` when
    ``rho = (I + sum_P x_P P) / 2**n``.
    """
    # rows (axis, outcome) for axis X, Y, Z; columns I, X, Y, Z
    single = np.zeros((3, 2, 4))
    single[:, :, 0] = 1.0
    for a in range(3):
        single[a, :, a + 1] = (1.0, -1.0)
    table = single
    for _ in range(n - 1):
        table = np.einsum("aop,bqr->aboqpr", table, single)
        sh = table.shape
        table = table.reshape(sh[0] * sh[1], sh[2] * sh[3], sh[4] * sh[5])
    table = table.reshape(6**n, 4**n)[:, 1:]
    paulis = [qcore.I2, qcore.X, qcore.Y, qcore.Z]
    mats = np.array([qcore.tensor(*(paulis[a] for a in idx))
                     for idx in itertools.product(range(4), repeat=n)])[1:]
    return table, mats


def _newton_refine(plan: SettingsPlan, freqs: np.ndarray, rho: np.ndarray,
                   max_steps: int = 30, tol: float = 1e-15):
    """Damped Newton ascent of the log-likelihood inside the positive-definite cone.

    Every accepted step raises the likelihood (Armijo backtracking) and keeps
    the estimate strictly positive, so the result stays physical.  Stops when
    the Newton decrement falls below ``tol`` or no admissible step remains.
    Returns ``(rho, history, steps, reached_tol)``.
    """
    d = 2**plan.n
    table, mats = _pauli_design(plan.n)
    f = freqs.reshape(-1)
    keep = f > 0
    f, table = f[keep], table[keep]
    x = np.einsum("pij,ji->p", mats, rho).real

    def evaluate(x):
        r = (np.eye(d) + np.tensordot(x, mats, axes=1)) / d
        p = (1.0 + table @ x) / d
        if p.min() <= 0 or np.linalg.eigvalsh(r).min() <= 0:
            return r, p, -np.inf
        return r, p, float(f @ np.log(p))

    rho, p, loglik = evaluate(x)
    history = []
    if not np.isfinite(loglik):
        return rho, history, 0, False
    for step in range(max_steps):
        grad = table.T @ (f / p) / d
        curv = (table.T * (f / p**2)) @ table / d**2
        delta = np.linalg.lstsq(curv, grad, rcond=1e-12)[0]
        decrement = float(grad @ delta)
        if decrement < tol:
            return rho, history, step, True
        t = 1.0
        while t > 1e-10:
            r_new, p_new, l_new = evaluate(x + t * delta)
            if l_new >= loglik + 1e-4 * t * decrement:
                break
            t *= 0.5
        else:
            return rho, history, step, False
        x, rho, p, loglik = x + t * delta, r_new, p_new, l_new
        history.append(loglik)
    return rho, history, max_steps, False


def _kernel(backend: str | None):
    if backend in (None, "auto"):
        return _mle_kernel or _mle_py
    if backend == "python":
        return _mle_py
    if backend == "compiled":
        if _mle_kernel is None:
            raise ConfigurationError("compiled MLE kernel is not available")
        return _mle_kernel
    raise ConfigurationError(f"unknown backend {backend!r}")


def mle_reconstruct(counts: CountTable, epsilon: float = 0.1, tol: float = 1e-10,
                    patience: int = 3, max_iter: int = 5000, floor: float = 1e-12,
                    refine: bool = True, backend: str | None = None) -> MLEResult:
    """Maximum-likelihood density matrix by the diluted R-rho-R iteration.

    Starting from the maximally mixed state, repeats
    ``rho <- (I + eps R) rho (I + eps R) / tr`` with
    ``R = sum_k f_k / p_k(rho) Pi_k``, stopping once the log-likelihood gains
    less than ``tol`` on ``patience`` consecutive steps or after ``max_iter``.

    R-rho-R slows to a crawl along directions with small eigenvalues, so with
    ``refine`` the result is polished by likelihood-increasing Newton steps
    that stay inside the positive-definite cone.
    """
    if epsilon <= 0:
        raise ConfigurationError("epsilon must be positive")
    freqs = counts.frequencies()
    d = 2**counts.plan.n
    rho0 = np.eye(d, dtype=complex) / d
    rho, history, iterations, converged = _kernel(backend).rrho_iterate(
        counts.plan.codes, np.ascontiguousarray(freqs, dtype=float), rho0,
        float(epsilon), float(tol), int(patience), int(max_iter), float(floor),
    )
    if not np.all(np.isfinite(rho)):
        raise EstimationError("reconstruction diverged")
    steps = 0
    if refine:
        rho, extra, steps, reached = _newton_refine(counts.plan, freqs, rho)
        history = np.concatenate([history, extra])
        converged = converged or reached
    return MLEResult(rho, float(history[-1]), int(iterations), bool(converged), history, steps)


@dataclass(frozen=True)
class ErrorBar:
    mean: float
    std: float
    runs: int
    samples: tuple[float, ...] = field(default=(), repr=False)

    def __str__(self):
        return f"{self.mean:.4f} +/- {self.std:.4f} ({self.runs} runs)"


def monte_carlo_errorbar(counts: CountTable, target: np.ndarray, runs: int = 100,
                         seed: int | None = 0, **mle_options) -> ErrorBar:
    """Fidelity spread from Poisson-resampled count tables.

    Each run replaces every count by a Poisson draw whose mean is the observed
    count, reconstructs, and records the fidelity with ``target``.  Run ``i``
    uses its own stream spawned from ``seed``.
    """
    if runs < 2:
        raise ConfigurationError("Monte Carlo needs at least two runs")
    streams = np.random.SeedSequence(seed).spawn(runs)
    fids = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        resampled = CountTable(counts.plan, counts.shots, rng.poisson(counts.counts), "poisson")
        result = mle_reconstruct(resampled, **mle_options)
        fids.append(qcore.fidelity(result.rho, target))
    fids = np.array(fids)
    return ErrorBar(float(fids.mean()), float(fids.std(ddof=1)), runs, tuple(fids.tolist()))


def biseparability_witness(rho: np.ndarray, ideal: np.ndarray | None = None) -> tuple[float, bool]:
    """Fidelity with the ideal resource and whether it beats the biseparable bound.

    ``ideal`` defaults to ``Phi_c``; any locally equivalent cluster (such as
    the linear one) carries the same 0.5 bound.  The comparison is strict,
    with a margin of ``qcore.ALGEBRA_TOL`` so that round-off at the boundary
    never counts as a pass.
    """
    rho = np.asarray(rho)
    if rho.shape != (16, 16):
        raise ConfigurationError(f"witness needs a 4-qubit state, got shape {rho.shape}")
    f = qcore.fidelity(rho, build_phi_c() if ideal is None else ideal)
    return f, f > BISEPARABLE_BOUND + qcore.ALGEBRA_TOL


def write_density_json(rho: np.ndarray, path) -> None:
    rho = np.asarray(rho, dtype=complex)
    doc = {"n": qcore.num_qubits(rho.shape[0]), "re": rho.real.tolist(), "im": rho.imag.tolist()}
    Path(path).write_text(json.dumps(doc))


def read_density_json(path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
        rho = np.array(doc["re"], dtype=float) + 1j * np.array(doc["im"], dtype=float)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"{path}: not a density-matrix file ({exc})") from None
    if rho.shape != (2 ** doc["n"],) * 2:
        raise ConfigurationError(f"{path}: shape {rho.shape} does not match n={doc['n']}")
    return rho
