"""Sparse multi-photon state vectors over (polarization, frequency, path) labels.

A ``PureState`` maps n-photon label tuples to complex amplitudes; only nonzero
amplitudes are stored.  Photon index i belongs to party i throughout.  All
values are immutable after construction: every operation builds a new state,
so states can be shared freely between concurrent workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional

NORM_TOL = 1e-9       # allowed |norm^2 - 1| on construction
ALGEBRA_TOL = 1e-12   # tolerance for algebraic identities (isometry, sums)


class Polarization(Enum):
    H = "H"
    V = "V"

    def flipped(self) -> "Polarization":
        return Polarization.V if self is Polarization.H else Polarization.H


class FrequencyMode(Enum):
    W1 = "w1"
    W2 = "w2"


H = Polarization.H
V = Polarization.V
W1 = FrequencyMode.W1
W2 = FrequencyMode.W2

# Paths are plain integers; a PathRegistry maps them to circuit port names.
PathId = int


class PathRegistry:
    """Assigns unique integer ids to named circuit ports."""

    def __init__(self) -> None:
        self._by_name: dict[str, int] = {}
        self._by_id: dict[int, str] = {}

    def add(self, name: str) -> PathId:
        if name in self._by_name:
            raise ValueError(f"path name {name!r} already registered")
        pid = len(self._by_name)
        self._by_name[name] = pid
        self._by_id[pid] = name
        return pid

    def id_of(self, name: str) -> PathId:
        return self._by_name[name]

    def name_of(self, pid: PathId) -> str:
        return self._by_id.get(pid, str(pid))

    def names(self) -> list[str]:
        return list(self._by_name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._by_name)


class BasisLabel(NamedTuple):
    """One photon's classical label.

    ``frequency`` is None for states that carry no frequency information
    (after ``strip_frequency``).  Element rule tables additionally use None
    fields as wildcards; state labels always have concrete polarization and
    path.
    """

    polarization: Optional[Polarization]
    frequency: Optional[FrequencyMode]
    path: Optional[PathId]

    def sort_key(self):
        p = self.polarization.value if self.polarization is not None else ""
        f = self.frequency.value if self.frequency is not None else ""
        return (p, f, self.path if self.path is not None else -1)

    def text(self, registry: PathRegistry | None = None) -> str:
        p = self.polarization.value if self.polarization is not None else "*"
        f = self.frequency.value if self.frequency is not None else "-"
        if self.path is None:
            q = "*"
        else:
            q = registry.name_of(self.path) if registry is not None else str(self.path)
        return f"({p},{f},{q})"


LabelTuple = tuple  # tuple[BasisLabel, ...]


def _check_label(label) -> BasisLabel:
    if not isinstance(label, BasisLabel):
        label = BasisLabel(*label)
    if label.polarization is None or label.path is None:
        raise ValueError(f"state labels need concrete polarization and path, got {label}")
    return label


def _term_key(labels: Iterable[BasisLabel]):
    return tuple(lab.sort_key() for lab in labels)


class PureState:
    """n-photon state as a sparse amplitude table over label tuples.

    The public constructor requires squared norm 1 within ``NORM_TOL``;
    sub-normalized amplitude dicts only ever exist as internal intermediates
    of post-selection and measurement.
    """

    __slots__ = ("n_photons", "_amps")

    def __init__(self, n_photons: int, amplitudes: Mapping[LabelTuple, complex]):
        if n_photons < 1:
            raise ValueError(f"n_photons must be >= 1, got {n_photons}")
        amps: dict[LabelTuple, complex] = {}
        for labels, amp in amplitudes.items():
            if len(labels) != n_photons:
                raise ValueError(
                    f"label tuple {labels} has {len(labels)} photons, expected {n_photons}"
                )
            amp = complex(amp)
            if amp == 0:
                continue
            amps[tuple(_check_label(l) for l in labels)] = amp
        norm_sq = sum(abs(a) ** 2 for a in amps.values())
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: squared norm {norm_sq!r}")
        object.__setattr__(self, "n_photons", n_photons)
        object.__setattr__(self, "_amps", amps)

    def __setattr__(self, name, value):
        raise AttributeError("PureState is immutable")

    @property
    def amplitudes(self) -> Mapping[LabelTuple, complex]:
        return MappingProxyType(self._amps)

    def amplitude(self, labels: LabelTuple) -> complex:
        return self._amps.get(tuple(labels), 0j)

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self._amps.values())

    def terms(self) -> list[tuple[LabelTuple, complex]]:
        """Terms in canonical order: photon-major (H<V, w1<w2, path asc)."""
        return sorted(self._amps.items(), key=lambda kv: _term_key(kv[0]))

    def paths_of(self, photon_index: int) -> set[PathId]:
        return {labels[photon_index].path for labels in self._amps}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PureState)
            and self.n_photons == other.n_photons
            and self._amps == other._amps
        )

    def __hash__(self):
        return hash((self.n_photons, frozenset(self._amps.items())))

    def __repr__(self) -> str:
        return f"PureState(n={self.n_photons}, terms={len(self._amps)})"

    def serialize(self, registry: PathRegistry | None = None) -> str:
        """Debug text form, one line per term: "amp_re amp_im : (pol,freq,path)...".

        Terms appear in the canonical label order, so output is reproducible
        bit for bit.
        """
        lines = []
        for labels, amp in self.terms():
            kets = "".join(lab.text(registry) for lab in labels)
            lines.append(f"{amp.real!r} {amp.imag!r} : {kets}")
        return "\n".join(lines)


@dataclass(frozen=True)
class EnsembleState:
    """Probabilistic mixture of pure states with positive weights summing to 1."""

    components: tuple[tuple[float, PureState], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("ensemble needs at least one component")
        total = 0.0
        n = self.components[0][1].n_photons
        for weight, state in self.components:
            if weight <= 0:
                raise ValueError(f"ensemble weights must be > 0, got {weight}")
            if state.n_photons != n:
                raise ValueError("ensemble components must have equal photon counts")
            total += weight
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"ensemble weights sum to {total!r}, expected 1")

    @property
    def n_photons(self) -> int:
        return self.components[0][1].n_photons


def tensor(a: PureState, b: PureState, *, allow_shared_paths: bool = False) -> PureState:
    """Tensor product; b's photons are appended after a's.

    Photons live on distinct paths unless the caller asserts compatibility,
    since shared paths would make separate photons indistinguishable here.
    """
    if not allow_shared_paths:
        paths_a = {lab.path for labels in a.amplitudes for lab in labels}
        paths_b = {lab.path for labels in b.amplitudes for lab in labels}
        shared = paths_a & paths_b
        if shared:
            raise ValueError(f"tensor factors share paths {sorted(shared)}")
    amps: dict[LabelTuple, complex] = {}
    for la, va in a.amplitudes.items():
        for lb, vb in b.amplitudes.items():
            amps[la + lb] = va * vb
    return PureState(a.n_photons + b.n_photons, amps)


def apply_element(state: PureState, photon_index: int, op) -> PureState:
    """Apply a single-photon linear map to one photon slot.

    ``op`` is anything with ``expand(label) -> [(out_label, coefficient), ...]``
    (see elements.ElementOp); it must be defined on every occupied input label.
    """
    if not 0 <= photon_index < state.n_photons:
        raise ValueError(
            f"photon index {photon_index} out of range for {state.n_photons}-photon state"
        )
    amps: dict[LabelTuple, complex] = {}
    for labels, amp in state.amplitudes.items():
        for out_label, coef in op.expand(labels[photon_index]):
            key = labels[:photon_index] + (out_label,) + labels[photon_index + 1 :]
            val = amps.get(key, 0j) + amp * coef
            if val == 0:
                amps.pop(key, None)
            else:
                amps[key] = val
    return PureState(state.n_photons, amps)


def inner_product(a: PureState, b: PureState) -> complex:
    """Sesquilinear <a|b> over the shared label basis (conjugates a)."""
    if a.n_photons != b.n_photons:
        raise ValueError(
            f"photon count mismatch: {a.n_photons} vs {b.n_photons}"
        )
    small, large = (a, b) if len(a.amplitudes) <= len(b.amplitudes) else (b, a)
    total = 0j
    for labels, amp in small.amplitudes.items():
        other = large.amplitude(labels)
        if other:
            if small is a:
                total += amp.conjugate() * other
            else:
                total += other.conjugate() * amp
    return total


def fidelity(state: PureState | EnsembleState, reference: PureState) -> float:
    """|<ref|state>|^2, weight-averaged for ensembles.

    Inputs are renormalized defensively, so slightly sub-normalized states
    are measured against their normalized direction.
    """
    ref_norm = reference.norm_squared()
    if ref_norm == 0:
        raise ValueError("zero-norm reference")
    if isinstance(state, EnsembleState):
        return sum(w * fidelity(s, reference) for w, s in state.components)
    norm = state.norm_squared()
    if norm == 0:
        raise ValueError("zero-norm state")
    return abs(inner_product(reference, state)) ** 2 / (norm * ref_norm)


def project_paths(
    state: PureState, pattern: Mapping[int, PathId]
) -> tuple[float, PureState | None]:
    """Post-select on photons exiting the given paths.

    Returns (probability, conditional state); the conditional is renormalized
    and is None when the pattern has probability 0.
    """
    selected: dict[LabelTuple, complex] = {}
    prob = 0.0
    for labels, amp in state.amplitudes.items():
        if all(labels[i].path == p for i, p in pattern.items()):
            selected[labels] = amp
            prob += abs(amp) ** 2
    if prob == 0.0:
        return 0.0, None
    scale = 1.0 / math.sqrt(prob)
    conditional = PureState(
        state.n_photons, {labels: amp * scale for labels, amp in selected.items()}
    )
    return prob, conditional


def strip_frequency(state: PureState) -> PureState:
    """Drop the frequency labels once every photon has a definite frequency.

    Valid only when, for each photon slot, all occupied labels carry the same
    frequency (as after the frequency shifters); otherwise the frequency is
    still entangled and cannot be separated.
    """
    per_photon: list[Optional[FrequencyMode]] = [None] * state.n_photons
    for labels in state.amplitudes:
        for i, lab in enumerate(labels):
            if lab.frequency is None:
                raise ValueError(f"photon {i} already has no frequency label")
            if per_photon[i] is None:
                per_photon[i] = lab.frequency
            elif per_photon[i] is not lab.frequency:
                raise ValueError(
                    f"photon {i} is in a superposition of frequencies; cannot strip"
                )
    amps = {
        tuple(BasisLabel(lab.polarization, None, lab.path) for lab in labels): amp
        for labels, amp in state.amplitudes.items()
    }
    return PureState(state.n_photons, amps)


def single_photon(
    polarization: Polarization,
    frequency: Optional[FrequencyMode],
    path: PathId,
) -> PureState:
    return PureState(1, {(BasisLabel(polarization, frequency, path),): 1.0})
