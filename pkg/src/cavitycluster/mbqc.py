"""Measurement patterns with feedforward on cluster-state registers.

Conventions (fixed here and validated against the circuit model in the
test suite):

* An equatorial measurement at angle theta measures cos(theta) X +
  sin(theta) Y; the +1 eigenstate is (|0> + e^{i theta} |1>)/sqrt(2).
  Outcome +1 is recorded as bit s = 0, outcome -1 as s = 1.
* Measuring one wire qubit at angle t teleports the logical state one
  site down the wire and applies X^s H Rz(-t), with Rz(t) = diag(1,
  e^{i t}).  Feedforward therefore flips the sign of a step's angle by
  the outcome parity of the steps listed in its adapt set.
* A Z measurement detaches the site from the graph; outcome s = 1 leaves
  a Z byproduct on each former neighbor.
* Byproduct rules apply X or Z to an output site when the referenced
  outcome parity is odd.

Pattern files are plain text, one directive per line; see
docs/pattern_format.md for the grammar.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .effective import PAULI, QubitRegister, apply_single_qubit

__all__ = [
    "MeasurementStep",
    "ByproductRule",
    "MeasurementPattern",
    "MeasurementRecord",
    "PatternParseError",
    "measure_qubit",
    "run_pattern",
    "wire_rotation_pattern",
    "cnot_pattern",
    "parse_pattern",
    "format_pattern",
]

Site = tuple[int, int]


@dataclass(frozen=True)
class MeasurementStep:
    """One projective measurement: site, basis and feedforward rule.

    basis is 'X', 'Y', 'Z' or 'EQ' (equatorial at `angle`); X and Y are
    shorthand for EQ at 0 and pi/2.  adapt lists earlier step indices
    whose outcome parity flips the sign of the angle.
    """

    site: Site
    basis: str
    angle: float = 0.0
    adapt: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.basis not in ("X", "Y", "Z", "EQ"):
            raise ValueError(f"unknown basis {self.basis!r}")

    def effective_angle(self, outcomes: list[int]) -> float:
        if self.basis == "X":
            theta = 0.0
        elif self.basis == "Y":
            theta = math.pi / 2
        else:
            theta = self.angle
        parity = sum(outcomes[i] for i in self.adapt) % 2
        return -theta if parity else theta


@dataclass(frozen=True)
class ByproductRule:
    """Apply `pauli` ('X' or 'Z') to `site` when the outcome parity of
    `steps` is odd."""

    site: Site
    pauli: str
    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.pauli not in ("X", "Z"):
            raise ValueError("byproduct operator must be X or Z")


@dataclass(frozen=True)
class MeasurementPattern:
    steps: tuple[MeasurementStep, ...]
    byproducts: tuple[ByproductRule, ...] = ()
    outputs: tuple[Site, ...] = ()

    def __post_init__(self) -> None:
        seen: set[Site] = set()
        for i, step in enumerate(self.steps):
            if step.site in seen:
                raise ValueError(f"site {step.site} measured twice")
            seen.add(step.site)
            if any(j >= i for j in step.adapt):
                raise ValueError(f"step {i} adapts on a later or same step")
        for site in self.outputs:
            if site in seen:
                raise ValueError(f"output site {site} is measured")


@dataclass
class MeasurementRecord:
    outcomes: list[int] = field(default_factory=list)
    probabilities: list[float] = field(default_factory=list)
    seed: int | None = None


def _equatorial_eigenstate(theta: float, outcome_bit: int) -> np.ndarray:
    sign = -1.0 if outcome_bit else 1.0
    return np.array([1.0, sign * np.exp(1j * theta)], dtype=complex) / math.sqrt(2.0)


def _z_eigenstate(outcome_bit: int) -> np.ndarray:
    return np.array([1.0 - outcome_bit, float(outcome_bit)], dtype=complex)


def measure_qubit(
    reg: QubitRegister,
    site: Site,
    basis: str,
    angle: float = 0.0,
    forced_outcome: int | None = None,
    rng: random.Random | None = None,
) -> tuple[int, QubitRegister]:
    """Projectively measure one site; returns (outcome bit, collapsed register).

    The collapsed register keeps full dimension with the measured site
    left in the observed eigenstate.  forced_outcome (0 or 1) selects a
    branch deterministically; a zero-probability branch is an error.
    """
    if site in reg.measured:
        raise ValueError(f"site {site} was already measured")
    if basis == "X":
        basis, angle = "EQ", 0.0
    elif basis == "Y":
        basis, angle = "EQ", math.pi / 2
    if basis == "EQ":
        eigvec = _equatorial_eigenstate
    elif basis == "Z":
        eigvec = lambda theta, bit: _z_eigenstate(bit)  # noqa: E731
    else:
        raise ValueError(f"unknown basis {basis!r}")

    ax = reg.site_axis(site)
    t = reg.view()
    probs = []
    for bit in (0, 1):
        v = eigvec(angle, bit)
        amp = np.tensordot(v.conj(), t, axes=([0], [ax]))
        probs.append(float(np.linalg.norm(amp) ** 2))
    if forced_outcome is None:
        r = (rng or random).random()
        outcome = 0 if r < probs[0] / (probs[0] + probs[1]) else 1
    else:
        outcome = int(forced_outcome)
        if probs[outcome] < 1e-24:
            raise ValueError(f"forced outcome {outcome} has zero probability")

    out = reg.copy()
    v = eigvec(angle, outcome)
    proj = np.outer(v, v.conj())
    apply_single_qubit(out, site, proj)
    out.amps /= math.sqrt(probs[outcome])
    out.measured.add(site)
    return outcome, out


def _extract_output_state(
    reg: QubitRegister, pattern: MeasurementPattern, eigvecs: list[tuple[Site, np.ndarray]]
) -> np.ndarray:
    """Contract measured sites against their post-measurement eigenstates,
    returning the state on the output sites in row-major site order."""
    t = reg.view()
    axes_order = sorted(range(reg.n_qubits))
    # contract measured axes from highest axis index down so indices stay valid
    for site, vec in sorted(eigvecs, key=lambda sv: -reg.site_axis(sv[0])):
        t = np.tensordot(vec.conj(), t, axes=([0], [reg.site_axis(site)]))
    remaining = [s for s in axes_order if divmod(s, reg.N) not in {sv[0] for sv in eigvecs}]
    wanted = [reg.site_axis(site) for site in pattern.outputs]
    perm = [remaining.index(ax) for ax in wanted]
    t = np.transpose(t, perm + [i for i in range(len(remaining)) if i not in perm])
    out = t.reshape(-1)
    return out / np.linalg.norm(out)


def run_pattern(
    reg: QubitRegister,
    pattern: MeasurementPattern,
    forced_outcomes: list[int] | None = None,
    seed: int | None = None,
) -> tuple[np.ndarray, MeasurementRecord]:
    """Execute a pattern with feedforward; returns (output state, record).

    The output state is the pure state on pattern.outputs (row-major site
    order) after byproduct corrections.
    """
    for step in pattern.steps:
        reg.site_axis(step.site)  # validates range
    rng = random.Random(seed)
    record = MeasurementRecord(seed=seed)
    work = reg.copy()
    eigvecs: list[tuple[Site, np.ndarray]] = []
    for i, step in enumerate(pattern.steps):
        theta = step.effective_angle(record.outcomes)
        forced = None if forced_outcomes is None else forced_outcomes[i]
        ax = work.site_axis(step.site)
        t = work.view()
        if step.basis == "Z":
            vec = lambda bit: _z_eigenstate(bit)  # noqa: E731
        else:
            vec = lambda bit: _equatorial_eigenstate(theta, bit)  # noqa: E731
        probs = [
            float(np.linalg.norm(np.tensordot(vec(b).conj(), t, axes=([0], [ax]))) ** 2)
            for b in (0, 1)
        ]
        outcome, work = measure_qubit(
            work,
            step.site,
            "Z" if step.basis == "Z" else "EQ",
            angle=theta,
            forced_outcome=forced,
            rng=rng,
        )
        record.outcomes.append(outcome)
        record.probabilities.append(probs[outcome])
        eigvecs.append((step.site, vec(outcome)))
    for rule in pattern.byproducts:
        if sum(record.outcomes[i] for i in rule.steps) % 2:
            apply_single_qubit(work, rule.site, PAULI[rule.pauli])
    state = _extract_output_state(work, pattern, eigvecs) if pattern.outputs else np.array(
        [], dtype=complex
    )
    return state, record


def wire_rotation_pattern(theta1: float, theta2: float, theta3: float) -> MeasurementPattern:
    """Euler rotation Rx(theta3) Rz(theta2) Rx(theta1) on a 1x5 wire.

    The wire input is the cluster's first qubit (logical |+>); the output
    lives on site (0, 4).  Measured angles are the negated Euler angles
    with standard sign feedforward; byproducts are X^(s1+s3) Z^(s0+s2).
    """
    steps = (
        MeasurementStep(site=(0, 0), basis="X"),
        MeasurementStep(site=(0, 1), basis="EQ", angle=-theta1, adapt=(0,)),
        MeasurementStep(site=(0, 2), basis="EQ", angle=-theta2, adapt=(1,)),
        MeasurementStep(site=(0, 3), basis="EQ", angle=-theta3, adapt=(0, 2)),
    )
    byproducts = (
        ByproductRule(site=(0, 4), pauli="X", steps=(1, 3)),
        ByproductRule(site=(0, 4), pauli="Z", steps=(0, 2)),
    )
    return MeasurementPattern(steps=steps, byproducts=byproducts, outputs=((0, 4),))


def cnot_pattern() -> MeasurementPattern:
    """Controlled-NOT on a 3x2 open-boundary cluster patch.

    The target wire runs down column 1 (input (0,1), output (2,1)); the
    control qubit (1,0) is both input and output.  Sites (0,0) and (2,0)
    are carved off with Z measurements.  After byproduct correction the
    logical action is exactly CNOT with control (1,0) and target
    (0,1) -> (2,1); the two X-measured wire steps contribute H twice.
    """
    steps = (
        MeasurementStep(site=(0, 0), basis="Z"),
        MeasurementStep(site=(2, 0), basis="Z"),
        MeasurementStep(site=(0, 1), basis="X"),
        MeasurementStep(site=(1, 1), basis="X"),
    )
    byproducts = (
        # Z-carve byproducts: neighbors of (0,0) are (0,1) [measured, folds
        # into step 2's frame] and (1,0); of (2,0): (2,1) and (1,0)
        ByproductRule(site=(1, 0), pauli="Z", steps=(0,)),
        ByproductRule(site=(1, 0), pauli="Z", steps=(1,)),
        ByproductRule(site=(2, 1), pauli="Z", steps=(1,)),
        # wire byproducts, validated against the circuit model
        ByproductRule(site=(2, 1), pauli="X", steps=(3,)),
        ByproductRule(site=(2, 1), pauli="Z", steps=(2, 0)),
        ByproductRule(site=(1, 0), pauli="Z", steps=(2, 0)),
    )
    return MeasurementPattern(steps=steps, byproducts=byproducts, outputs=((1, 0), (2, 1)))


class PatternParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def _parse_indices(text: str, line_no: int) -> tuple[int, ...]:
    if text == "-":
        return ()
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise PatternParseError(line_no, f"bad index list {text!r}") from None


def parse_pattern(text: str) -> MeasurementPattern:
    """Parse the plain-text pattern grammar (docs/pattern_format.md)."""
    steps: list[MeasurementStep] = []
    byproducts: list[ByproductRule] = []
    outputs: list[Site] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "byproduct":
            if len(parts) != 5:
                raise PatternParseError(line_no, "byproduct needs: m n X|Z steps")
            try:
                site = (int(parts[1]), int(parts[2]))
            except ValueError:
                raise PatternParseError(line_no, f"bad site {parts[1]} {parts[2]}") from None
            if parts[3] not in ("X", "Z"):
                raise PatternParseError(line_no, f"bad byproduct operator {parts[3]!r}")
            byproducts.append(
                ByproductRule(site=site, pauli=parts[3], steps=_parse_indices(parts[4], line_no))
            )
        elif parts[0] == "output":
            if len(parts) != 3:
                raise PatternParseError(line_no, "output needs: m n")
            try:
                outputs.append((int(parts[1]), int(parts[2])))
            except ValueError:
                raise PatternParseError(line_no, f"bad site {parts[1]} {parts[2]}") from None
        else:
            if len(parts) != 5:
                raise PatternParseError(line_no, "step needs: m n basis angle adapt")
            try:
                site = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise PatternParseError(line_no, f"bad site {parts[0]} {parts[1]}") from None
            basis = parts[2]
            if basis not in ("X", "Y", "Z", "EQ"):
                raise PatternParseError(line_no, f"unknown basis {basis!r}")
            if parts[3] == "-":
                angle = 0.0
            else:
                try:
                    angle = float(parts[3])
                except ValueError:
                    raise PatternParseError(line_no, f"bad angle {parts[3]!r}") from None
            steps.append(
                MeasurementStep(
                    site=site, basis=basis, angle=angle, adapt=_parse_indices(parts[4], line_no)
                )
            )
    try:
        return MeasurementPattern(
            steps=tuple(steps), byproducts=tuple(byproducts), outputs=tuple(outputs)
        )
    except ValueError as exc:
        raise PatternParseError(0, str(exc)) from None


def format_pattern(pattern: MeasurementPattern) -> str:
    """Serialize a pattern to the plain-text grammar."""
    lines = []
    for step in pattern.steps:
        adapt = ",".join(map(str, step.adapt)) if step.adapt else "-"
        angle = repr(step.angle) if step.basis == "EQ" else "-"
        lines.append(f"{step.site[0]} {step.site[1]} {step.basis} {angle} {adapt}")
    for rule in pattern.byproducts:
        steps = ",".join(map(str, rule.steps))
        lines.append(f"byproduct {rule.site[0]} {rule.site[1]} {rule.pauli} {steps}")
    for site in pattern.outputs:
        lines.append(f"output {site[0]} {site[1]}")
    return "\n".join(lines) + "\n"
