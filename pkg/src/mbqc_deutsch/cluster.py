"""Ideal four-qubit cluster resources and simple noise channels on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .errors import ConfigurationError

BISEPARABLE_BOUND = 0.5


class ResourceKind(enum.Enum):
    PHI_C = "phi-c"
    PHI_LIN = "phi-lin"


def build_phi_c() -> np.ndarray:
    """``(|0000> + |0011> + |1100> - |1111>) / 2``."""
    psi = np.zeros(16, dtype=complex)
    psi[[0, 3, 12]] = 0.5
    psi[15] = -0.5
    return psi


def build_linear_cluster(n: int = 4) -> np.ndarray:
    """``|+>^n`` followed by CPHASE on every nearest-neighbour pair."""
    psi = qcore.ket("+" * n)
    for j in range(1, n):
        psi = qcore.apply(psi, qcore.CPHASE, [j, j + 1])
    return psi


def build_resource(kind: ResourceKind) -> np.ndarray:
    return build_phi_c() if ResourceKind(kind) is ResourceKind.PHI_C else build_linear_cluster()


@dataclass(frozen=True)
class NoiseSpec:
    """Noise applied to an ideal resource.

    ``model`` is ``"none"``, ``"white"`` (parameter ``p`` is the weight kept on
    the ideal state) or ``"dephase"`` (``q`` holds one phase-flip probability
    per qubit).
    """

    model: str = "none"
    p: float = 1.0
    q: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.model not in ("none", "white", "dephase"):
            raise ConfigurationError(f"unknown noise model {self.model!r}")
        if self.model == "white" and not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"white-noise weight {self.p!r} outside [0, 1]")
        if self.model == "dephase":
            if not self.q or any(not 0.0 <= qj <= 1.0 for qj in self.q):
                raise ConfigurationError(f"dephasing probabilities {self.q!r} outside [0, 1]")

    @classmethod
    def white(cls, p: float) -> "NoiseSpec":
        return cls("white", p=float(p))

    @classmethod
    def dephase(cls, *q: float) -> "NoiseSpec":
        return cls("dephase", q=tuple(float(x) for x in q))

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        """Parse ``none``, ``white:p`` or ``dephase:q1,q2,q3,q4``."""
        text = text.strip().lower()
        if text == "none":
            return cls()
        name, _, args = text.partition(":")
        try:
            values = [float(v) for v in args.split(",")] if args else []
        except ValueError:
            raise ConfigurationError(f"cannot parse noise spec {text!r}") from None
        if name == "white" and len(values) == 1:
            return cls.white(values[0])
        if name == "dephase" and values:
            return cls.dephase(*values)
        raise ConfigurationError(f"cannot parse noise spec {text!r}")

    def __str__(self):
        if self.model == "white":
            return f"white:{self.p:g}"
        if self.model == "dephase":
            return "dephase:" + ",".join(f"{q:g}" for q in self.q)
        return "none"


def apply_noise(state: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Density matrix of ``state`` after the channel described by ``spec``."""
    rho = qcore.density(state) if np.ndim(state) == 1 else np.array(state, dtype=complex)
    d = rho.shape[0]
    n = qcore.num_qubits(d)
    if spec.model == "white":
        return spec.p * rho + (1.0 - spec.p) * np.eye(d) / d
    if spec.model == "dephase":
        if len(spec.q) != n:
            raise ConfigurationError(f"need {n} dephasing probabilities, got {len(spec.q)}")
        for j, qj in enumerate(spec.q, start=1):
            if qj:
                rho = (1.0 - qj) * rho + qj * qcore.apply_dm(rho, qcore.Z, [j])
        return rho
    return rho


def calibrate_white_noise(target_fidelity: float, dim: int = 16) -> float:
    """White-noise weight ``p`` whose fidelity with the ideal state is ``target_fidelity``.

    Inverts ``F = p + (1 - p)/dim``.
    """
    floor = 1.0 / dim
    if not floor <= target_fidelity <= 1.0:
        raise ConfigurationError(
            f"target fidelity {target_fidelity!r} outside [{floor:g}, 1]"
        )
    return (target_fidelity - floor) / (1.0 - floor)


def biseparability_threshold_weight(dim: int = 16) -> float:
    """White-noise weight above which ``F > 0.5`` for the ideal resource."""
    return calibrate_white_noise(BISEPARABLE_BOUND, dim)
