"""Optical elements and channels as single-photon label-rewrite rules.

Each ElementOp is a sparse linear map over (polarization, frequency, path)
labels.  Rule inputs and outputs may leave fields as None: a None input field
matches any value, and a None output field copies the matched input's value.
That lets path- and frequency-independent elements (the collective-noise
unitary, for one) stay finite rule tables no matter how many paths a circuit
registers.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

from .qstate import (
    ALGEBRA_TOL,
    NORM_TOL,
    BasisLabel,
    EnsembleState,
    H,
    PathId,
    PureState,
    V,
    W1,
    W2,
)

Rule = tuple[BasisLabel, complex]


class UndefinedInputError(ValueError):
    """An element was applied to a label outside its declared support."""


def _matches(pattern: BasisLabel, label: BasisLabel) -> bool:
    return (
        (pattern.polarization is None or pattern.polarization is label.polarization)
        and (pattern.frequency is None or pattern.frequency is label.frequency)
        and (pattern.path is None or pattern.path == label.path)
    )


def _fill(out: BasisLabel, label: BasisLabel) -> BasisLabel:
    return BasisLabel(
        out.polarization if out.polarization is not None else label.polarization,
        out.frequency if out.frequency is not None else label.frequency,
        out.path if out.path is not None else label.path,
    )


class ElementOp:
    """Single-photon isometry given by explicit rules plus optional passthrough.

    Labels matching no rule are identity-mapped when ``passthrough`` is true
    and are outside the op's support otherwise (applying the op there raises
    UndefinedInputError).  Column orthonormality over the explicit rules is
    checked at construction.
    """

    __slots__ = ("name", "rules", "passthrough")

    def __init__(
        self,
        name: str,
        rules: dict[BasisLabel, tuple[Rule, ...]],
        *,
        passthrough: bool = False,
    ):
        self.name = name
        self.rules = {
            BasisLabel(*pat): tuple((BasisLabel(*out), complex(c)) for out, c in outs)
            for pat, outs in rules.items()
        }
        self.passthrough = passthrough
        self._check_isometry()

    def _check_isometry(self) -> None:
        cols = list(self.rules.items())
        for i, (pat_i, outs_i) in enumerate(cols):
            for pat_j, outs_j in cols[i:]:
                dot = 0j
                for out_i, ci in outs_i:
                    for out_j, cj in outs_j:
                        if out_i == out_j:
                            dot += ci.conjugate() * cj
                expected = 1.0 if pat_i == pat_j else 0.0
                if abs(dot - expected) > ALGEBRA_TOL:
                    raise ValueError(
                        f"{self.name}: columns {pat_i} / {pat_j} not orthonormal"
                    )

    def expand(self, label: BasisLabel) -> list[Rule]:
        for pattern, outs in self.rules.items():
            if _matches(pattern, label):
                return [(_fill(out, label), coef) for out, coef in outs]
        if self.passthrough:
            return [(label, 1.0 + 0j)]
        raise UndefinedInputError(f"{self.name} is undefined on label {label}")

    def rule_table(self) -> str:
        lines = [f"{self.name}:"]
        for pattern, outs in self.rules.items():
            rhs = " + ".join(f"({coef:.6g}) {out.text()}" for out, coef in outs)
            lines.append(f"  {pattern.text()} -> {rhs}")
        if self.passthrough:
            lines.append("  otherwise -> identity")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"ElementOp({self.name!r}, {len(self.rules)} rules)"


@dataclass(frozen=True)
class NoiseParams:
    """Amplitudes (alpha, beta) of the channel's action on |H>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        total = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {total!r}, expected 1")

    @staticmethod
    def identity() -> "NoiseParams":
        return NoiseParams(1.0, 0.0)


@dataclass(frozen=True)
class NoiseAngles:
    """(theta, phi) parameterization: alpha = cos(theta), beta = e^{i phi} sin(theta).

    Always yields normalized NoiseParams, so user input cannot violate the
    normalization constraint.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi / 2:
            raise ValueError(f"theta must be in [0, pi/2], got {self.theta}")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise ValueError(f"phi must be in [0, 2*pi), got {self.phi}")

    def to_params(self) -> NoiseParams:
        return NoiseParams(math.cos(self.theta), cmath.exp(1j * self.phi) * math.sin(self.theta))


@dataclass(frozen=True)
class MixedNoiseWeights:
    """Probabilities of the four definite polarization outcomes (HH, HV, VH, VV)."""

    f1: float
    f2: float
    f3: float
    f4: float

    def __post_init__(self):
        weights = (self.f1, self.f2, self.f3, self.f4)
        if any(w < 0 for w in weights):
            raise ValueError(f"weights must be >= 0, got {weights}")
        if abs(sum(weights) - 1.0) > NORM_TOL:
            raise ValueError(f"weights sum to {sum(weights)!r}, expected 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.f1, self.f2, self.f3, self.f4)


def collective_noise(p: NoiseParams) -> ElementOp:
    """Channel unitary acting on polarization alone, same for every frequency and path.

    |H> -> alpha|H> + beta|V>; the action on |V> is the SU(2) completion
    |V> -> -conj(beta)|H> + conj(alpha)|V>.  Any other unitary completion
    differs only by a phase on the |V> column, which drops out of every
    post-selection probability and fidelity downstream.
    """
    a, b = complex(p.alpha), complex(p.beta)
    wild = lambda pol: BasisLabel(pol, None, None)
    return ElementOp(
        "noise",
        {
            wild(H): ((wild(H), a), (wild(V), b)),
            wild(V): ((wild(H), -b.conjugate()), (wild(V), a.conjugate())),
        },
    )


def wdm(in_path: PathId, upper: PathId, lower: PathId) -> ElementOp:
    """Polarization-independent router: w1 on in_path -> upper, w2 -> lower."""
    if len({in_path, upper, lower}) != 3:
        raise ValueError("wdm needs three distinct paths")
    return ElementOp(
        "wdm",
        {
            BasisLabel(None, W1, in_path): ((BasisLabel(None, W1, upper), 1.0),),
            BasisLabel(None, W2, in_path): ((BasisLabel(None, W2, lower), 1.0),),
        },
    )


def frequency_shifter(path: PathId) -> ElementOp:
    """Lossless w1 -> w2 conversion on one path; identity everywhere else."""
    return ElementOp(
        "fs",
        {BasisLabel(None, W1, path): ((BasisLabel(None, W2, path), 1.0),)},
        passthrough=True,
    )


def half_wave_plate(path: PathId) -> ElementOp:
    """|H> <-> |V> on one path; identity everywhere else."""
    return ElementOp(
        "hwp",
        {
            BasisLabel(H, None, path): ((BasisLabel(V, None, path), 1.0),),
            BasisLabel(V, None, path): ((BasisLabel(H, None, path), 1.0),),
        },
        passthrough=True,
    )


def pbs(in_upper: PathId, in_lower: PathId, out1: PathId, out2: PathId) -> ElementOp:
    """Polarizing beam splitter: H transmits, V reflects, unit coefficients.

    (H, upper) -> out1, (V, upper) -> out2, (V, lower) -> out1,
    (H, lower) -> out2.  Reflection phases would be global per output port and
    cancel in all probabilities and fidelities, so they are omitted.
    """
    if len({in_upper, in_lower, out1, out2}) != 4:
        raise ValueError("pbs needs four distinct paths")
    return ElementOp(
        "pbs",
        {
            BasisLabel(H, None, in_upper): ((BasisLabel(H, None, out1), 1.0),),
            BasisLabel(V, None, in_upper): ((BasisLabel(V, None, out2), 1.0),),
            BasisLabel(V, None, in_lower): ((BasisLabel(V, None, out1), 1.0),),
            BasisLabel(H, None, in_lower): ((BasisLabel(H, None, out2), 1.0),),
        },
    )


def polarization_flip() -> ElementOp:
    """Ideal bit flip |H> <-> |V> on any frequency and path (no phase)."""
    return ElementOp(
        "xflip",
        {
            BasisLabel(H, None, None): ((BasisLabel(V, None, None), 1.0),),
            BasisLabel(V, None, None): ((BasisLabel(H, None, None), 1.0),),
        },
    )


def mixed_polarization_noise(
    w: MixedNoiseWeights,
) -> Callable[[PureState], EnsembleState]:
    """Channel sending the all-H two-photon source to a four-component mixture.

    Each component keeps the source's frequency factor and has its photons'
    polarizations set to HH, HV, VH or VV with weight f1..f4; zero-weight
    components are dropped.
    """
    from .qstate import apply_element  # local import keeps module load order simple

    flip = polarization_flip()
    pol_patterns = ((H, H), (H, V), (V, H), (V, V))

    def channel(source: PureState) -> EnsembleState:
        if source.n_photons != 2:
            raise ValueError("mixed polarization noise is defined for photon pairs")
        for labels in source.amplitudes:
            if any(lab.polarization is not H for lab in labels):
                raise ValueError("source must have both photons H-polarized")
        components = []
        for weight, pols in zip(w.as_tuple(), pol_patterns):
            if weight == 0:
                continue
            state = source
            for i, pol in enumerate(pols):
                if pol is V:
                    state = apply_element(state, i, flip)
            components.append((weight, state))
        return EnsembleState(tuple(components))

    return channel
