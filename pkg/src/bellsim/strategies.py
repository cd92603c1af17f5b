"""Adversarial source strategies and the honest entangled-pair baseline.

Each strategy decides, per trial and before the parties pick their bases,
what goes down the two channels: a classical pulse pair for the faking
models, or (for the honest baseline) one half of an entangled state. The
locality structure is enforced by the split between ``emit_batch`` (no
access to settings) and ``resolve_batch`` (settings known, outcomes
produced).

Batch methods operate on arrays and are what the engine runs; the scalar
operations exported here are thin single-trial wrappers over the same
code paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .core import (
    Angle,
    DoubleClickPolicy,
    MeasurementSettings,
    Outcome,
    PulsePair,
    SettingPair,
    ValidationError,
)
from .detector import DetectorModel, StepThreshold
from .optics import (
    OUT_INCONCLUSIVE,
    OUT_MINUS,
    OUT_PLUS,
    OUTCOME_BY_CODE,
    analyze_batch,
)

__all__ = [
    "InfeasibleGeometry",
    "ExistingModelSpec",
    "ImprovedModelSpec",
    "PerfectMode",
    "PerfectModelSpec",
    "QuantumSpec",
    "StationConfig",
    "BatchOutcomes",
    "ControlRow",
    "CONTROL_ROWS",
    "control_row_probabilities",
    "feasible_intensity_window",
    "control_pulse_for",
    "source_polarization_cells",
    "ExistingStrategy",
    "ImprovedStrategy",
    "PerfectStrategy",
    "QuantumStrategy",
    "build_strategy",
    "existing_emit",
    "ImprovedEmission",
    "improved_emit",
    "symmetrize",
    "perfect_emit",
    "PerfectTrialPlan",
    "perfect_joint_distribution",
    "perfect_no_signalling_discrepancy",
    "TwoQubitState",
    "bell_phi_plus",
    "quantum_joint_probabilities",
    "quantum_correlation",
    "quantum_emit",
    "QuantumTrialPlan",
]


class InfeasibleGeometry(ValidationError):
    """No pulse intensity satisfies a control row's constraints for these angles."""


def _check_unit(name: str, value: float) -> float:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# Strategy parameter specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ExistingModelSpec:
    """Deterministic-forcing source tuned to a per-setting correlation.

    The source emits one of sixteen polarization pairs; "similar" pairs get
    weight ``n_sim/4`` each, "different" pairs ``n_dif/4``, normalized so
    ``2(n_sim + n_dif) = 1`` and ``n_sim/n_dif = (1+E)/(1-E)``.
    """

    e_target: float

    def __post_init__(self) -> None:
        _check_unit("e_target", self.e_target)

    @property
    def n_sim(self) -> float:
        return (1.0 + self.e_target) / 4.0

    @property
    def n_dif(self) -> float:
        return (1.0 - self.e_target) / 4.0


@dataclass(frozen=True, slots=True)
class ImprovedModelSpec:
    """Mixture of deterministic forcing (weight 1-p2) and midpoint pulses (p2).

    ``phi_a``/``phi_b`` are the half-separations of each party's two
    analyzer angles, in degrees. The shared trigger intensity must sit in
    [1/cos^2(max phi), 2) so a midpoint pulse always fires exactly one
    detector while a forced pulse still vanishes on basis mismatch.
    """

    p2: float
    phi_a: float
    phi_b: float
    trigger_intensity: float

    def __post_init__(self) -> None:
        _check_unit("p2", self.p2)
        for name, phi in (("phi_a", self.phi_a), ("phi_b", self.phi_b)):
            if not (math.isfinite(phi) and 0.0 <= phi < 45.0):
                raise InfeasibleGeometry(
                    f"{name} must lie in [0, 45) degrees for single-detector control, got {phi!r}"
                )
        lo = self.min_trigger_intensity
        if not (math.isfinite(self.trigger_intensity) and lo <= self.trigger_intensity < 2.0):
            raise ValidationError(
                f"trigger intensity must lie in [{lo!r}, 2), got {self.trigger_intensity!r}"
            )

    @property
    def min_trigger_intensity(self) -> float:
        phi = math.radians(max(self.phi_a, self.phi_b))
        return 1.0 / math.cos(phi) ** 2

    @classmethod
    def for_settings(
        cls,
        p2: float,
        settings: MeasurementSettings,
        trigger_intensity: float | None = None,
    ) -> "ImprovedModelSpec":
        """Build a spec from actual analyzer angles.

        Without an explicit trigger intensity the midpoint of the feasible
        window is used, maximizing margin against detector noise.
        """
        phi_a = settings.alpha0.separation_to(settings.alpha1) / 2.0
        phi_b = settings.beta0.separation_to(settings.beta1) / 2.0
        for name, phi in (("alice", phi_a), ("bob", phi_b)):
            if phi >= 45.0:
                raise InfeasibleGeometry(
                    f"{name} analyzer angles are perpendicular; midpoint pulses cannot "
                    "drive a single detector"
                )
        if trigger_intensity is None:
            lo = 1.0 / math.cos(math.radians(max(phi_a, phi_b))) ** 2
            trigger_intensity = (lo + 2.0) / 2.0
        return cls(p2=p2, phi_a=phi_a, phi_b=phi_b, trigger_intensity=trigger_intensity)


class PerfectMode(Enum):
    """How the perfect model produces outcomes.

    ANALYTIC_TABLE samples the joint outcome table directly from a
    per-trial hidden variable; PHYSICAL_PULSES drives the controlled side
    with actual pulses through the analyzer and detector models.
    """

    ANALYTIC_TABLE = "analytic"
    PHYSICAL_PULSES = "physical"


@dataclass(frozen=True, slots=True)
class PerfectModelSpec:
    """Perfect local model: conclusive with probability ``a`` on basis match
    at the controlled party, ``b`` (random sign) on mismatch; the other
    party is deterministic and always conclusive."""

    a: float
    b: float
    mode: PerfectMode = PerfectMode.ANALYTIC_TABLE
    role_reversal: bool = True

    def __post_init__(self) -> None:
        _check_unit("a", self.a)
        _check_unit("b", self.b)


@dataclass(frozen=True, eq=False)
class QuantumSpec:
    """Honest baseline: a shared two-qubit state measured at true efficiency."""

    state: "TwoQubitState"
    eta_true: float = 1.0

    def __post_init__(self) -> None:
        _check_unit("eta_true", self.eta_true)


# ---------------------------------------------------------------------------
# Shared batch plumbing
# ---------------------------------------------------------------------------


class BatchOutcomes(NamedTuple):
    alice: np.ndarray
    bob: np.ndarray
    alice_double: np.ndarray
    bob_double: np.ndarray


@dataclass(frozen=True)
class StationConfig:
    """The measurement-side configuration shared by all trials of a run."""

    alice_deg: tuple[float, float]
    bob_deg: tuple[float, float]
    detector: DetectorModel
    policy: DoubleClickPolicy

    @classmethod
    def from_settings(
        cls,
        settings: MeasurementSettings,
        detector: DetectorModel | None = None,
        policy: DoubleClickPolicy = DoubleClickPolicy.DISCARD,
    ) -> "StationConfig":
        return cls(
            alice_deg=(settings.alpha0.degrees, settings.alpha1.degrees),
            bob_deg=(settings.beta0.degrees, settings.beta1.degrees),
            detector=detector if detector is not None else StepThreshold(),
            policy=policy,
        )

    def alice_angles(self, a_set: np.ndarray) -> np.ndarray:
        return np.where(a_set == 1, self.alice_deg[1], self.alice_deg[0])

    def bob_angles(self, b_set: np.ndarray) -> np.ndarray:
        return np.where(b_set == 1, self.bob_deg[1], self.bob_deg[0])


def _categorical(cum: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` indices from a cumulative distribution (last entry 1.0)."""
    return np.searchsorted(cum, rng.random(n), side="right").astype(np.int8)


def _cumulative(weights) -> np.ndarray:
    cum = np.cumsum(np.asarray(weights, dtype=float))
    cum[-1] = 1.0
    return cum


def _flip_signs(codes: np.ndarray, where: np.ndarray) -> None:
    """Swap +/- codes in place on the selected trials; others untouched."""
    swap = where & (codes <= OUT_MINUS)
    codes[swap] ^= 1


# ---------------------------------------------------------------------------
# Existing model: deterministic forcing from a sixteen-cell source table
# ---------------------------------------------------------------------------

# Which of the 16 (alice pol, bob pol) cells produce equal-sign coincidences.
# Rows: a0, a0-perp, a1, a1-perp; columns: b0, b0-perp, b1, b1-perp.
_SIM_CELLS = frozenset(
    {(0, 0), (0, 3), (1, 1), (1, 2), (2, 0), (2, 2), (3, 1), (3, 3)}
)


def source_polarization_cells(settings: MeasurementSettings) -> list[tuple[Angle, Angle, bool]]:
    """The sixteen source polarization pairs with their similar/different role."""
    alice_pols = (
        settings.alpha0,
        settings.alpha0.perpendicular(),
        settings.alpha1,
        settings.alpha1.perpendicular(),
    )
    bob_pols = (
        settings.beta0,
        settings.beta0.perpendicular(),
        settings.beta1,
        settings.beta1.perpendicular(),
    )
    return [
        (pa, pb, (i, j) in _SIM_CELLS)
        for i, pa in enumerate(alice_pols)
        for j, pb in enumerate(bob_pols)
    ]


class ExistingStrategy:
    """Forces outcomes by emitting threshold-intensity pulses in setting bases."""

    def __init__(self, spec: ExistingModelSpec, settings: MeasurementSettings):
        self.spec = spec
        self.settings = settings
        cells = source_polarization_cells(settings)
        self.cells = cells
        self._pol_a = np.array([c[0].degrees for c in cells])
        self._pol_b = np.array([c[1].degrees for c in cells])
        weights = [spec.n_sim / 4.0 if sim else spec.n_dif / 4.0 for _, _, sim in cells]
        self._cum = _cumulative(weights)
        self.label = f"existing(e_target={spec.e_target:.12g})"

    def emit_batch(self, n: int, start: int, rng: np.random.Generator) -> np.ndarray:
        return _categorical(self._cum, n, rng)

    def pulse_for_cell(self, idx: int) -> PulsePair:
        pa, pb, _ = self.cells[idx]
        return PulsePair(pa, 1.0, pb, 1.0)

    def resolve_batch(
        self,
        plan: np.ndarray,
        a_set: np.ndarray,
        b_set: np.ndarray,
        stations: StationConfig,
        rng: np.random.Generator,
    ) -> BatchOutcomes:
        n = len(plan)
        ones = np.ones(n)
        out_a, dbl_a = analyze_batch(
            self._pol_a[plan], ones, stations.alice_angles(a_set),
            stations.detector, stations.detector, stations.policy, rng,
        )
        out_b, dbl_b = analyze_batch(
            self._pol_b[plan], ones, stations.bob_angles(b_set),
            stations.detector, stations.detector, stations.policy, rng,
        )
        return BatchOutcomes(out_a, out_b, dbl_a, dbl_b)


def existing_emit(
    spec: ExistingModelSpec, settings: MeasurementSettings, rng: np.random.Generator
) -> PulsePair:
    """Draw one source emission of the deterministic-forcing model."""
    strategy = ExistingStrategy(spec, settings)
    return strategy.pulse_for_cell(int(strategy.emit_batch(1, 0, rng)[0]))


# ---------------------------------------------------------------------------
# Improved model: probabilistic mixture with midpoint pulses
# ---------------------------------------------------------------------------


class ImprovedBatch(NamedTuple):
    method2: np.ndarray
    cell: np.ndarray


class ImprovedStrategy:
    """Mixes deterministic forcing (S=4, eta=1/2) with always-click pulses (S=2, eta=1)."""

    def __init__(self, spec: ImprovedModelSpec, settings: MeasurementSettings):
        self.spec = spec
        self.settings = settings
        self._method1 = ExistingStrategy(ExistingModelSpec(1.0), settings)
        self._mid_a = settings.alpha0.midpoint_toward(settings.alpha1).degrees
        self._mid_b = settings.beta0.midpoint_toward(settings.beta1).degrees
        self.label = (
            f"improved(p2={spec.p2:.12g}, trigger={spec.trigger_intensity:.12g})"
        )

    def emit_batch(self, n: int, start: int, rng: np.random.Generator) -> ImprovedBatch:
        method2 = rng.random(n) < self.spec.p2
        cell = self._method1.emit_batch(n, start, rng)
        return ImprovedBatch(method2, cell)

    def pulse_pair(self, emission: "ImprovedBatch", idx: int = 0) -> PulsePair:
        if emission.method2[idx]:
            i = self.spec.trigger_intensity
            return PulsePair(Angle(self._mid_a), i, Angle(self._mid_b), i)
        return self._method1.pulse_for_cell(int(emission.cell[idx]))

    def resolve_batch(
        self,
        plan: ImprovedBatch,
        a_set: np.ndarray,
        b_set: np.ndarray,
        stations: StationConfig,
        rng: np.random.Generator,
    ) -> BatchOutcomes:
        pol_a = np.where(plan.method2, self._mid_a, self._method1._pol_a[plan.cell])
        pol_b = np.where(plan.method2, self._mid_b, self._method1._pol_b[plan.cell])
        intensity = np.where(plan.method2, self.spec.trigger_intensity, 1.0)
        out_a, dbl_a = analyze_batch(
            pol_a, intensity, stations.alice_angles(a_set),
            stations.detector, stations.detector, stations.policy, rng,
        )
        out_b, dbl_b = analyze_batch(
            pol_b, intensity, stations.bob_angles(b_set),
            stations.detector, stations.detector, stations.policy, rng,
        )
        # Joint sign flip on half the midpoint trials balances ++ against --
        # while leaving every correlation at +1.
        flip = rng.random(len(pol_a)) < 0.5
        selected = plan.method2 & flip
        _flip_signs(out_a, selected)
        _flip_signs(out_b, selected)
        return BatchOutcomes(out_a, out_b, dbl_a, dbl_b)


class ImprovedEmission(NamedTuple):
    pulse: PulsePair
    method2: bool


def improved_emit(
    spec: ImprovedModelSpec, settings: MeasurementSettings, rng: np.random.Generator
) -> ImprovedEmission:
    """Draw one emission of the mixture model, tagged with the method used."""
    strategy = ImprovedStrategy(spec, settings)
    batch = strategy.emit_batch(1, 0, rng)
    return ImprovedEmission(strategy.pulse_pair(batch), bool(batch.method2[0]))


def symmetrize(
    outcomes: tuple[Outcome, Outcome], rng: np.random.Generator
) -> tuple[Outcome, Outcome]:
    """With probability 1/2, flip both parties' signs (midpoint-pulse trials only).

    The joint flip preserves each setting's correlation while equalizing the
    ++ and -- populations.
    """
    if rng.random() < 0.5:
        return outcomes[0].flipped(), outcomes[1].flipped()
    return outcomes


# ---------------------------------------------------------------------------
# Control-pulse table for the perfect model's controlled side
# ---------------------------------------------------------------------------


class ControlRow(Enum):
    """The four faked-state classes aimed at the controlled party.

    PLAIN_ALIGNED (probability a-b): pulse in the keyed basis, conclusive
    only on basis match. MIDPOINT_UP / MIDPOINT_DOWN (b/2 each): bisector
    pulses, conclusive in both bases, landing on opposite ports on
    mismatch. VACUUM (1-a): never detected.
    """

    PLAIN_ALIGNED = "plain-aligned"
    MIDPOINT_UP = "midpoint-up"
    MIDPOINT_DOWN = "midpoint-down"
    VACUUM = "vacuum"


CONTROL_ROWS = (
    ControlRow.PLAIN_ALIGNED,
    ControlRow.MIDPOINT_UP,
    ControlRow.MIDPOINT_DOWN,
    ControlRow.VACUUM,
)


def control_row_probabilities(a: float, b: float) -> tuple[float, float, float, float]:
    """Row probabilities (a-b, b/2, b/2, 1-a); requires a >= b."""
    _check_unit("a", a)
    _check_unit("b", b)
    if a < b:
        raise ValidationError(f"need a >= b for non-negative row probabilities, got a={a!r}, b={b!r}")
    return (a - b, b / 2.0, b / 2.0, 1.0 - a)


# Windows narrower than this (threshold units) are rounding slivers of a
# mathematically empty interval, e.g. [1/cos^2(45), 1/sin^2(45)).
_MIN_WINDOW_WIDTH = 1e-9


def _window_or_none(lo: float, hi: float) -> tuple[float, float] | None:
    return None if hi - lo <= _MIN_WINDOW_WIDTH else (lo, hi)


def _ramp_window(phi_deg: float) -> tuple[float, float] | None:
    c2 = math.cos(math.radians(phi_deg)) ** 2
    s2 = math.sin(math.radians(phi_deg)) ** 2
    if c2 == 0.0:
        return None
    lo = 1.0 / c2
    hi = math.inf if s2 == 0.0 else 1.0 / s2
    return _window_or_none(lo, hi)


def feasible_intensity_window(
    row: ControlRow, phi0_deg: float, phi1_deg: float
) -> tuple[float, float] | None:
    """Intensity interval [lo, hi) satisfying a control row's click constraints.

    ``phi0_deg`` is half the separation between the party's two analyzer
    angles; ``phi1_deg`` half the separation to the other angle's
    perpendicular. Intensities are in threshold units. Returns ``None``
    when the constraints are contradictory.
    """
    for name, phi in (("phi0_deg", phi0_deg), ("phi1_deg", phi1_deg)):
        if not (math.isfinite(phi) and 0.0 <= phi <= 90.0):
            raise ValidationError(f"{name} must lie in [0, 90], got {phi!r}")
    if row is ControlRow.VACUUM:
        return (0.0, math.inf)
    if row is ControlRow.MIDPOINT_UP:
        return _ramp_window(phi0_deg)
    if row is ControlRow.MIDPOINT_DOWN:
        return _ramp_window(phi1_deg)
    # Plain aligned pulse: must click on match, must vanish in both ports
    # on mismatch, where the offsets are 2*phi0 and 90 - 2*phi0.
    c2 = math.cos(math.radians(2.0 * phi0_deg)) ** 2
    s2 = math.sin(math.radians(2.0 * phi0_deg)) ** 2
    hi = math.inf
    if c2 > 0.0:
        hi = min(hi, 1.0 / c2)
    if s2 > 0.0:
        hi = min(hi, 1.0 / s2)
    return _window_or_none(1.0, hi)


def control_pulse_for(
    target_behavior: ControlRow | None,
    a: float,
    b: float,
    alice_angles: tuple[Angle, Angle],
    rng: np.random.Generator | None = None,
) -> tuple[Angle | None, float]:
    """One controlled-side pulse half: (polarization, intensity).

    ``alice_angles`` is ``(base, other)``: the analyzer angle the pulse is
    keyed to and the same party's other analyzer angle. When
    ``target_behavior`` is ``None`` a row is sampled with probabilities
    (a-b, b/2, b/2, 1-a), which requires ``rng``. The intensity is the
    midpoint of the row's feasible window; an empty window raises
    :class:`InfeasibleGeometry`.
    """
    probs = control_row_probabilities(a, b)
    if target_behavior is None:
        if rng is None:
            raise ValidationError("sampling a control row requires an rng")
        target_behavior = CONTROL_ROWS[int(_categorical(_cumulative(probs), 1, rng)[0])]
    if target_behavior is ControlRow.VACUUM:
        return None, 0.0
    base, other = alice_angles
    phi0 = base.separation_to(other) / 2.0
    phi1 = base.separation_to(other.perpendicular()) / 2.0
    window = feasible_intensity_window(target_behavior, phi0, phi1)
    if window is None:
        raise InfeasibleGeometry(
            f"no intensity satisfies row {target_behavior.value} for "
            f"phi0={phi0:g} deg, phi1={phi1:g} deg"
        )
    intensity = (window[0] + window[1]) / 2.0
    if target_behavior is ControlRow.PLAIN_ALIGNED:
        return base, intensity
    if target_behavior is ControlRow.MIDPOINT_UP:
        return base.midpoint_toward(other), intensity
    return base.midpoint_toward(other.perpendicular()), intensity


# ---------------------------------------------------------------------------
# Perfect model
# ---------------------------------------------------------------------------


class PerfectBatch(NamedTuple):
    label: np.ndarray
    reversed_: np.ndarray
    hidden_u: np.ndarray | None
    row: np.ndarray | None


def _deterministic_minus(
    label: np.ndarray, det_basis: np.ndarray, reversed_: np.ndarray
) -> np.ndarray:
    """Where the deterministic party reports "-".

    Keyed so the subtracted CHSH setting is the anti-correlated one in
    both orientations: the plain table puts the minus on (source 0,
    basis 1) at Bob; with roles reversed it must sit on (source 1,
    basis 0) at Alice, the transpose, or the reversed trials would cancel
    the plain trials' correlation at the subtracted setting.
    """
    plain = (label == 0) & (det_basis == 1)
    swapped = (label == 1) & (det_basis == 0)
    return np.where(reversed_, swapped, plain)


class PerfectStrategy:
    """Source emitting one of two setting-basis labels, with one controlled party."""

    def __init__(self, spec: PerfectModelSpec, settings: MeasurementSettings):
        self.spec = spec
        self.settings = settings
        if spec.mode is PerfectMode.PHYSICAL_PULSES:
            control_row_probabilities(spec.a, spec.b)  # physical control needs a >= b
            self._row_cum = _cumulative(control_row_probabilities(spec.a, spec.b))
            self._build_pulse_tables()
        self.label = (
            f"perfect(a={spec.a:.12g}, b={spec.b:.12g}, mode={spec.mode.value}, "
            f"role_reversal={spec.role_reversal})"
        )

    def _build_pulse_tables(self) -> None:
        # pol/intensity per (controlled party: 0=alice, 1=bob) x label x row.
        probs = control_row_probabilities(self.spec.a, self.spec.b)
        geometries = [
            (self.settings.alpha0, self.settings.alpha1),
            (self.settings.beta0, self.settings.beta1),
        ]
        sides = (0, 1) if self.spec.role_reversal else (0,)
        pol = np.zeros((2, 2, 4))
        inten = np.zeros((2, 2, 4))
        for side in sides:
            angles = geometries[side]
            for label in (0, 1):
                base, other = angles[label], angles[1 - label]
                for k, row in enumerate(CONTROL_ROWS):
                    if probs[k] == 0.0 and row is not ControlRow.VACUUM:
                        continue  # unreachable row; geometry need not support it
                    p, i = control_pulse_for(row, self.spec.a, self.spec.b, (base, other))
                    pol[side, label, k] = 0.0 if p is None else p.degrees
                    inten[side, label, k] = i
        self._pol_table = pol
        self._int_table = inten

    def control_pulse(self, reversed_: bool, label: int, row: ControlRow) -> tuple[Angle | None, float]:
        k = CONTROL_ROWS.index(row)
        if row is ControlRow.VACUUM:
            return None, 0.0
        side = 1 if reversed_ else 0
        return Angle(self._pol_table[side, label, k]), float(self._int_table[side, label, k])

    def emit_batch(self, n: int, start: int, rng: np.random.Generator) -> PerfectBatch:
        label = rng.integers(0, 2, size=n).astype(np.int8)
        if self.spec.mode is PerfectMode.ANALYTIC_TABLE:
            hidden_u, row = rng.random(n), None
        else:
            hidden_u, row = None, _categorical(self._row_cum, n, rng)
        if self.spec.role_reversal:
            reversed_ = ((start + np.arange(n)) % 2).astype(bool)
        else:
            reversed_ = np.zeros(n, dtype=bool)
        return PerfectBatch(label, reversed_, hidden_u, row)

    def resolve_batch(
        self,
        plan: PerfectBatch,
        a_set: np.ndarray,
        b_set: np.ndarray,
        stations: StationConfig,
        rng: np.random.Generator,
    ) -> BatchOutcomes:
        n = len(plan.label)
        ctrl_basis = np.where(plan.reversed_, b_set, a_set)
        det_basis = np.where(plan.reversed_, a_set, b_set)
        minus = _deterministic_minus(plan.label, det_basis, plan.reversed_)
        out_det = np.where(minus, OUT_MINUS, OUT_PLUS).astype(np.int8)

        if self.spec.mode is PerfectMode.ANALYTIC_TABLE:
            a, b = self.spec.a, self.spec.b
            u = plan.hidden_u
            match = ctrl_basis == plan.label
            out_ctrl = np.full(n, OUT_INCONCLUSIVE, dtype=np.int8)
            out_ctrl[match & (u < a)] = OUT_PLUS
            out_ctrl[~match & (u < b / 2.0)] = OUT_PLUS
            out_ctrl[~match & (u >= b / 2.0) & (u < b)] = OUT_MINUS
            dbl_ctrl = np.zeros(n, dtype=bool)
        else:
            side = plan.reversed_.astype(np.intp)
            pol = self._pol_table[side, plan.label.astype(np.intp), plan.row.astype(np.intp)]
            inten = self._int_table[side, plan.label.astype(np.intp), plan.row.astype(np.intp)]
            ctrl_angle = np.where(
                plan.reversed_, stations.bob_angles(b_set), stations.alice_angles(a_set)
            )
            out_ctrl, dbl_ctrl = analyze_batch(
                pol, inten, ctrl_angle,
                stations.detector, stations.detector, stations.policy, rng,
            )

        out_a = np.where(plan.reversed_, out_det, out_ctrl).astype(np.int8)
        out_b = np.where(plan.reversed_, out_ctrl, out_det).astype(np.int8)
        return BatchOutcomes(out_a, out_b, dbl_ctrl & ~plan.reversed_, dbl_ctrl & plan.reversed_)


@dataclass(frozen=True)
class PerfectTrialPlan:
    """One emitted trial of the perfect model, resolvable once settings exist."""

    strategy: PerfectStrategy
    label: int
    role_reversed: bool
    hidden_u: float | None
    row: ControlRow | None

    @property
    def control_pulse(self) -> tuple[Angle | None, float] | None:
        if self.row is None:
            return None
        return self.strategy.control_pulse(self.role_reversed, self.label, self.row)

    def resolve(
        self,
        pair: SettingPair,
        rng: np.random.Generator,
        detector: DetectorModel | None = None,
        policy: DoubleClickPolicy = DoubleClickPolicy.DISCARD,
    ) -> tuple[Outcome, Outcome]:
        batch = PerfectBatch(
            label=np.array([self.label], dtype=np.int8),
            reversed_=np.array([self.role_reversed]),
            hidden_u=None if self.hidden_u is None else np.array([self.hidden_u]),
            row=None if self.row is None else np.array([CONTROL_ROWS.index(self.row)], dtype=np.int8),
        )
        stations = StationConfig.from_settings(self.strategy.settings, detector, policy)
        out = self.strategy.resolve_batch(
            batch, np.array([pair.alice], dtype=np.int8), np.array([pair.bob], dtype=np.int8),
            stations, rng,
        )
        return OUTCOME_BY_CODE[int(out.alice[0])], OUTCOME_BY_CODE[int(out.bob[0])]


def perfect_emit(
    spec: PerfectModelSpec,
    settings: MeasurementSettings,
    rng: np.random.Generator,
    trial_index: int = 0,
) -> PerfectTrialPlan:
    """Draw one emission of the perfect model.

    With role reversal enabled the controlled party alternates with the
    trial index (even trials control Alice, odd trials Bob).
    """
    strategy = PerfectStrategy(spec, settings)
    batch = strategy.emit_batch(1, trial_index, rng)
    return PerfectTrialPlan(
        strategy=strategy,
        label=int(batch.label[0]),
        role_reversed=bool(batch.reversed_[0]),
        hidden_u=None if batch.hidden_u is None else float(batch.hidden_u[0]),
        row=None if batch.row is None else CONTROL_ROWS[int(batch.row[0])],
    )


def perfect_joint_distribution(
    label: int,
    alice_basis: int,
    bob_basis: int,
    a: float,
    b: float,
    role_reversed: bool = False,
) -> dict[tuple[Outcome, Outcome], float]:
    """Exact joint outcome distribution for one source label and setting pair.

    Probabilities over {+, -, ?} x {+, -, ?}; zero-probability outcomes are
    omitted. This is the closed form the samplers are tested against.
    """
    _check_unit("a", a)
    _check_unit("b", b)
    if label not in (0, 1) or alice_basis not in (0, 1) or bob_basis not in (0, 1):
        raise ValidationError("label and basis indices must be 0 or 1")
    ctrl_basis = bob_basis if role_reversed else alice_basis
    det_basis = alice_basis if role_reversed else bob_basis
    if role_reversed:
        det_minus = label == 1 and det_basis == 0
    else:
        det_minus = label == 0 and det_basis == 1
    det_out = Outcome.MINUS if det_minus else Outcome.PLUS
    if ctrl_basis == label:
        ctrl_dist = {Outcome.PLUS: a, Outcome.INCONCLUSIVE: 1.0 - a}
    else:
        ctrl_dist = {
            Outcome.PLUS: b / 2.0,
            Outcome.MINUS: b / 2.0,
            Outcome.INCONCLUSIVE: 1.0 - b,
        }
    dist: dict[tuple[Outcome, Outcome], float] = {}
    for ctrl_out, p in ctrl_dist.items():
        if p == 0.0:
            continue
        key = (det_out, ctrl_out) if role_reversed else (ctrl_out, det_out)
        dist[key] = dist.get(key, 0.0) + p
    return dist


_MARGINAL_OUTCOMES = (Outcome.PLUS, Outcome.MINUS, Outcome.INCONCLUSIVE)


def perfect_no_signalling_discrepancy(a: float, b: float, role_reversal: bool = False) -> float:
    """Largest cross-setting change of either party's outcome marginals.

    Exactly zero for every (a, b): each party's marginal depends only on
    its own basis and the source label. Computed numerically as the oracle
    for the no-signalling acceptance check.
    """
    mixtures = [(0.5, False), (0.5, True)] if role_reversal else [(1.0, False)]

    def marginal(party: str, own: int, remote: int) -> dict[Outcome, float]:
        out: dict[Outcome, float] = {o: 0.0 for o in _MARGINAL_OUTCOMES}
        for weight, rev in mixtures:
            for label in (0, 1):
                ab_basis = (own, remote) if party == "alice" else (remote, own)
                dist = perfect_joint_distribution(label, ab_basis[0], ab_basis[1], a, b, rev)
                for (out_a, out_b), p in dist.items():
                    o = out_a if party == "alice" else out_b
                    out[o] += 0.5 * weight * p
        return out

    worst = 0.0
    for party in ("alice", "bob"):
        for own in (0, 1):
            m0 = marginal(party, own, 0)
            m1 = marginal(party, own, 1)
            for o in _MARGINAL_OUTCOMES:
                worst = max(worst, abs(m0[o] - m1[o]))
    return worst


# ---------------------------------------------------------------------------
# Honest quantum baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A normalized two-qubit polarization state (amplitude order HH, HV, VH, VV)."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValidationError(f"state needs 4 amplitudes, got shape {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"state must be normalized, got |psi|^2 = {norm!r}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def rotated(self, alice_deg: float = 0.0, bob_deg: float = 0.0) -> "TwoQubitState":
        """Apply a polarization-plane rotation to each qubit."""

        def rot(deg: float) -> np.ndarray:
            t = math.radians(deg)
            return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])

        return TwoQubitState(np.kron(rot(alice_deg), rot(bob_deg)) @ self.amplitudes)


def bell_phi_plus() -> TwoQubitState:
    """(|HH> + |VV>) / sqrt(2): perfectly correlated in every shared linear basis."""
    return TwoQubitState(np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0))


def _basis_vectors(theta_deg: float) -> tuple[np.ndarray, np.ndarray]:
    t = math.radians(theta_deg)
    return (
        np.array([math.cos(t), math.sin(t)]),
        np.array([-math.sin(t), math.cos(t)]),
    )


def quantum_joint_probabilities(alpha: Angle, beta: Angle, state: TwoQubitState) -> np.ndarray:
    """2x2 joint outcome probabilities (rows: Alice +/-, columns: Bob +/-)."""
    a_plus, a_minus = _basis_vectors(alpha.degrees)
    b_plus, b_minus = _basis_vectors(beta.degrees)
    probs = np.empty((2, 2))
    for i, va in enumerate((a_plus, a_minus)):
        for j, vb in enumerate((b_plus, b_minus)):
            amp = np.kron(va, vb) @ state.amplitudes
            probs[i, j] = float(np.abs(amp) ** 2)
    return probs / probs.sum()


def quantum_correlation(alpha: Angle, beta: Angle, state: TwoQubitState) -> float:
    """E(alpha, beta) from the full state-vector joint distribution."""
    p = quantum_joint_probabilities(alpha, beta, state)
    return float(p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0])


class QuantumStrategy:
    """Samples joint outcomes from the state, then erases each side at 1 - eta."""

    def __init__(self, spec: QuantumSpec, settings: MeasurementSettings):
        self.spec = spec
        self.settings = settings
        cum = np.empty((4, 4))
        for a_i in (0, 1):
            for b_i in (0, 1):
                p = quantum_joint_probabilities(
                    settings.alice_angle(a_i), settings.bob_angle(b_i), spec.state
                ).ravel()
                cum[a_i * 2 + b_i] = _cumulative(p)
        self._cum = cum
        amps = ", ".join(f"{z:.6g}" for z in spec.state.amplitudes)
        self.label = f"quantum(eta_true={spec.eta_true:.12g}, state=[{amps}])"

    def emit_batch(self, n: int, start: int, rng: np.random.Generator) -> int:
        # The shared state is the whole emission; nothing classical to draw.
        return n

    def resolve_batch(
        self,
        plan: int,
        a_set: np.ndarray,
        b_set: np.ndarray,
        stations: StationConfig,
        rng: np.random.Generator,
    ) -> BatchOutcomes:
        n = len(a_set)
        cum = self._cum[(a_set.astype(np.intp) * 2 + b_set.astype(np.intp))]
        u = rng.random(n)
        cat = (u[:, None] >= cum[:, :3]).sum(axis=1)
        out_a = (cat >> 1).astype(np.int8)
        out_b = (cat & 1).astype(np.int8)
        eta = self.spec.eta_true
        out_a[rng.random(n) >= eta] = OUT_INCONCLUSIVE
        out_b[rng.random(n) >= eta] = OUT_INCONCLUSIVE
        zeros = np.zeros(n, dtype=bool)
        return BatchOutcomes(out_a, out_b, zeros, zeros)


@dataclass(frozen=True)
class QuantumTrialPlan:
    """One prepared entangled pair; outcomes are sampled at measurement time."""

    strategy: QuantumStrategy

    def resolve(self, pair: SettingPair, rng: np.random.Generator) -> tuple[Outcome, Outcome]:
        out = self.strategy.resolve_batch(
            1,
            np.array([pair.alice], dtype=np.int8),
            np.array([pair.bob], dtype=np.int8),
            StationConfig.from_settings(self.strategy.settings),
            rng,
        )
        return OUTCOME_BY_CODE[int(out.alice[0])], OUTCOME_BY_CODE[int(out.bob[0])]


def quantum_emit(
    state: TwoQubitState,
    settings: MeasurementSettings,
    eta_true: float,
    rng: np.random.Generator,
) -> QuantumTrialPlan:
    """Prepare one honest trial at true per-side efficiency ``eta_true``."""
    return QuantumTrialPlan(QuantumStrategy(QuantumSpec(state, eta_true), settings))


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

StrategySpec = ExistingModelSpec | ImprovedModelSpec | PerfectModelSpec | QuantumSpec
Strategy = ExistingStrategy | ImprovedStrategy | PerfectStrategy | QuantumStrategy


def build_strategy(spec: StrategySpec, settings: MeasurementSettings) -> Strategy:
    if isinstance(spec, ExistingModelSpec):
        return ExistingStrategy(spec, settings)
    if isinstance(spec, ImprovedModelSpec):
        return ImprovedStrategy(spec, settings)
    if isinstance(spec, PerfectModelSpec):
        return PerfectStrategy(spec, settings)
    if isinstance(spec, QuantumSpec):
        return QuantumStrategy(spec, settings)
    raise ValidationError(f"unknown strategy spec: {spec!r}")
