"""Deterministic synthetic sequences with exact ground truth.

Scenes are described by a SynthSpec: a background, one textured target with
a scripted trajectory, and an ordered list of perturbations (noise,
occluders, appearance changes, background swaps).  Rendering is
back-to-front and every random value comes from an explicitly seeded
splitmix64 stream, so equal specs produce bit-identical frames on any
platform.  The splitmix64 algorithm itself is part of the fixture
contract; do not swap it for another generator.

Specs round-trip through a flat key=value text format (see parse_spec),
which is what the command line consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import FormatError, SpecError
from .evaluation import GroundTruth
from .imaging import BBox, GrayFrame

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FRAME_STRIDE = 0xD1B54A32D192ED03  # decorrelates per-frame noise streams


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of the splitmix64 stream for ``seed``.

    Uses the closed form state_n = seed + n * golden, so the whole stream
    vectorizes; results equal the scalar iterative definition exactly.
    """
    with np.errstate(over="ignore"):
        n = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed & _MASK64) + n * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


# --- patterns -------------------------------------------------------------


@dataclass(frozen=True)
class UniformPattern:
    value: int

    def render(self, w: int, h: int) -> np.ndarray:
        return np.full((h, w), self.value, dtype=np.uint8)

    def spec_text(self) -> str:
        return f"uniform:{self.value}"


@dataclass(frozen=True)
class CheckerPattern:
    a: int
    b: int
    cell: int

    def render(self, w: int, h: int) -> np.ndarray:
        ys, xs = np.mgrid[0:h, 0:w]
        odd = ((xs // self.cell) + (ys // self.cell)) % 2
        return np.where(odd == 0, self.a, self.b).astype(np.uint8)

    def spec_text(self) -> str:
        return f"checker:{self.a}:{self.b}:{self.cell}"


@dataclass(frozen=True)
class NoisePattern:
    """Static texture: one splitmix64 draw per pixel, row-major."""

    seed: int
    lo: int
    hi: int

    def render(self, w: int, h: int) -> np.ndarray:
        draws = splitmix64(self.seed, w * h)
        span = np.uint64(self.hi - self.lo + 1)
        vals = np.uint64(self.lo) + draws % span
        return vals.astype(np.uint8).reshape(h, w)

    def spec_text(self) -> str:
        return f"noise:{self.seed}:{self.lo}:{self.hi}"


Pattern = Union[UniformPattern, CheckerPattern, NoisePattern]


def parse_pattern(text: str) -> Pattern:
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "uniform" and len(parts) == 2:
            return UniformPattern(int(parts[1]))
        if kind == "checker" and len(parts) == 4:
            return CheckerPattern(int(parts[1]), int(parts[2]), int(parts[3]))
        if kind == "noise" and len(parts) == 4:
            return NoisePattern(int(parts[1]), int(parts[2]), int(parts[3]))
    except ValueError as exc:
        raise SpecError(f"bad pattern {text!r}: {exc}") from exc
    raise SpecError(f"unknown pattern {text!r} (expected uniform:V, checker:A:B:CELL or noise:SEED:LO:HI)")


def _check_pattern(pattern: Pattern, what: str) -> None:
    if isinstance(pattern, UniformPattern):
        vals = [pattern.value]
    elif isinstance(pattern, CheckerPattern):
        vals = [pattern.a, pattern.b]
        if pattern.cell < 1:
            raise SpecError(f"{what}: checker cell must be at least 1")
    else:
        vals = [pattern.lo, pattern.hi]
        if pattern.lo > pattern.hi:
            raise SpecError(f"{what}: noise range {pattern.lo}..{pattern.hi} is empty")
    for v in vals:
        if not 0 <= v <= 255:
            raise SpecError(f"{what}: intensity {v} outside [0, 255]")


# --- motion ---------------------------------------------------------------


@dataclass(frozen=True)
class ConstantVelocity:
    vx: int
    vy: int

    def displacement(self, t: int) -> tuple[int, int]:
        return (self.vx, self.vy)

    def spec_text(self) -> str:
        return f"velocity:{self.vx}:{self.vy}"


@dataclass(frozen=True)
class ScriptedMotion:
    """Explicit displacement list; frames past the end stay still."""

    steps: tuple[tuple[int, int], ...]

    def displacement(self, t: int) -> tuple[int, int]:
        return self.steps[t - 1] if t - 1 < len(self.steps) else (0, 0)

    def spec_text(self) -> str:
        return "script:" + ";".join(f"{dx},{dy}" for dx, dy in self.steps)


@dataclass(frozen=True)
class PiecewiseVelocity:
    """(last_frame, vx, vy) segments; a frame uses the first segment whose
    last_frame it does not exceed, and stays still past the final one."""

    segments: tuple[tuple[int, int, int], ...]

    def displacement(self, t: int) -> tuple[int, int]:
        for last, vx, vy in self.segments:
            if t <= last:
                return (vx, vy)
        return (0, 0)

    def spec_text(self) -> str:
        return "piecewise:" + "|".join(f"{last}:{vx}:{vy}" for last, vx, vy in self.segments)


Motion = Union[ConstantVelocity, ScriptedMotion, PiecewiseVelocity]


def parse_motion(text: str) -> Motion:
    kind, _, rest = text.partition(":")
    try:
        if kind == "velocity":
            vx, vy = rest.split(":")
            return ConstantVelocity(int(vx), int(vy))
        if kind == "script":
            steps = []
            for chunk in rest.split(";"):
                dx, dy = chunk.split(",")
                steps.append((int(dx), int(dy)))
            return ScriptedMotion(tuple(steps))
        if kind == "piecewise":
            segments = []
            for chunk in rest.split("|"):
                last, vx, vy = chunk.split(":")
                segments.append((int(last), int(vx), int(vy)))
            return PiecewiseVelocity(tuple(segments))
    except ValueError as exc:
        raise SpecError(f"bad motion {text!r}: {exc}") from exc
    raise SpecError(f"unknown motion {text!r} (expected velocity:, script: or piecewise:)")


# --- perturbations --------------------------------------------------------


@dataclass(frozen=True)
class NoiseEffect:
    """Additive integer noise in [-amplitude, amplitude], clamped to [0, 255].

    Each frame draws its own splitmix64 stream (seed offset by the frame
    index) with one draw per pixel in row-major order.
    """

    first: int
    last: int
    seed: int
    amplitude: int

    def active(self, t: int) -> bool:
        return self.first <= t <= self.last

    def apply(self, canvas: np.ndarray, t: int) -> None:
        span = 2 * self.amplitude + 1
        frame_seed = (self.seed + (t + 1) * _FRAME_STRIDE) & _MASK64
        draws = splitmix64(frame_seed, canvas.size)
        delta = (draws % np.uint64(span)).astype(np.int64) - self.amplitude
        mixed = canvas.astype(np.int64) + delta.reshape(canvas.shape)
        canvas[:] = np.clip(mixed, 0, 255).astype(np.uint8)

    def spec_text(self) -> str:
        return f"perturb=noise:{self.first}:{self.last}:{self.seed}:{self.amplitude}"


@dataclass(frozen=True)
class OccluderEffect:
    """A patterned box sliding at constant velocity from its start position."""

    first: int
    last: int
    x: int
    y: int
    vx: int
    vy: int
    w: int
    h: int
    pattern: Pattern

    def active(self, t: int) -> bool:
        return self.first <= t <= self.last

    def box_at(self, t: int) -> BBox:
        return BBox(self.x + self.vx * (t - self.first), self.y + self.vy * (t - self.first), self.w, self.h)

    def apply(self, canvas: np.ndarray, t: int) -> None:
        box = self.box_at(t)
        _stamp(canvas, self.pattern.render(self.w, self.h), box.x, box.y)

    def spec_text(self) -> str:
        return (
            f"perturb=occluder:{self.first}:{self.last}:{self.x}:{self.y}"
            f":{self.vx}:{self.vy}:{self.w}:{self.h}:{self.pattern.spec_text()}"
        )


@dataclass(frozen=True)
class AppearanceEffect:
    """Overwrites a target-local subregion with a flat intensity."""

    first: int
    last: int
    rx: int
    ry: int
    rw: int
    rh: int
    value: int

    def active(self, t: int) -> bool:
        return self.first <= t <= self.last

    def apply_at(self, canvas: np.ndarray, target: BBox) -> None:
        patch = np.full((self.rh, self.rw), self.value, dtype=np.uint8)
        _stamp(canvas, patch, target.x + self.rx, target.y + self.ry)

    def spec_text(self) -> str:
        return (
            f"perturb=appearance:{self.first}:{self.last}"
            f":{self.rx}:{self.ry}:{self.rw}:{self.rh}:{self.value}"
        )


@dataclass(frozen=True)
class BackgroundEffect:
    """Replaces the background pattern for a frame range."""

    first: int
    last: int
    pattern: Pattern

    def active(self, t: int) -> bool:
        return self.first <= t <= self.last

    def spec_text(self) -> str:
        return f"perturb=background:{self.first}:{self.last}:{self.pattern.spec_text()}"


Effect = Union[NoiseEffect, OccluderEffect, AppearanceEffect, BackgroundEffect]


def _parse_effect(text: str) -> Effect:
    kind, _, rest = text.partition(":")
    parts = rest.split(":")
    try:
        if kind == "noise" and len(parts) == 4:
            return NoiseEffect(int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]))
        if kind == "occluder" and len(parts) >= 9:
            return OccluderEffect(
                *(int(p) for p in parts[:8]), pattern=parse_pattern(":".join(parts[8:]))
            )
        if kind == "appearance" and len(parts) == 7:
            return AppearanceEffect(*(int(p) for p in parts))
        if kind == "background" and len(parts) >= 3:
            return BackgroundEffect(int(parts[0]), int(parts[1]), parse_pattern(":".join(parts[2:])))
    except ValueError as exc:
        raise SpecError(f"bad perturbation {text!r}: {exc}") from exc
    raise SpecError(f"unknown perturbation {text!r}")


# --- the scene description and its renderer -------------------------------


@dataclass(frozen=True)
class SynthSpec:
    width: int
    height: int
    length: int
    background: Pattern
    target_pattern: Pattern
    target_box: BBox
    motion: Motion
    perturbations: tuple[Effect, ...] = ()

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise SpecError(f"frame size {self.width}x{self.height} must be positive")
        if self.length < 1:
            raise SpecError(f"length must be at least 1, got {self.length}")
        _check_pattern(self.background, "background")
        _check_pattern(self.target_pattern, "target")
        for effect in self.perturbations:
            if effect.first > effect.last:
                raise SpecError(f"perturbation range {effect.first}..{effect.last} is empty")
            if isinstance(effect, (OccluderEffect, BackgroundEffect)):
                _check_pattern(effect.pattern, "perturbation")
            if isinstance(effect, AppearanceEffect) and not 0 <= effect.value <= 255:
                raise SpecError(f"appearance value {effect.value} outside [0, 255]")
        # the trajectory must stay within the frame inflated by one target
        # size per side, the region a padded search can still reach
        box = self.target_box
        for t in range(self.length):
            if t > 0:
                dx, dy = self.motion.displacement(t)
                box = box.shifted(dx, dy)
            if not (-box.w <= box.x <= self.width and -box.h <= box.y <= self.height):
                raise SpecError(
                    f"target box leaves the reachable region at frame {t}: {box}"
                )

    def trajectory(self) -> list[BBox]:
        boxes = [self.target_box]
        for t in range(1, self.length):
            dx, dy = self.motion.displacement(t)
            boxes.append(boxes[-1].shifted(dx, dy))
        return boxes


def _stamp(canvas: np.ndarray, patch: np.ndarray, x: int, y: int) -> None:
    """Draw a patch clipped to the canvas."""
    H, W = canvas.shape
    h, w = patch.shape
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, W), min(y + h, H)
    if x1 <= x0 or y1 <= y0:
        return
    canvas[y0:y1, x0:x1] = patch[y0 - y : y1 - y, x0 - x : x1 - x]


OCCLUSION_ABSENT_COVERAGE = 0.9


def _occluded_fraction(target: BBox, occluders: list[BBox]) -> float:
    """Fraction of the target covered by the union of occluder boxes."""
    if not occluders:
        return 0.0
    mask = np.zeros((target.h, target.w), dtype=bool)
    for box in occluders:
        x0 = max(box.x - target.x, 0)
        y0 = max(box.y - target.y, 0)
        x1 = min(box.right - target.x, target.w)
        y1 = min(box.bottom - target.y, target.h)
        if x1 > x0 and y1 > y0:
            mask[y0:y1, x0:x1] = True
    return float(mask.mean())


def generate(spec: SynthSpec) -> tuple[list[GrayFrame], GroundTruth]:
    """Render all frames plus the exact scripted ground truth.

    Truth is absent on frames where active occluders cover at least 90% of
    the target box.
    """
    spec.validate()
    boxes = spec.trajectory()
    target = spec.target_pattern.render(spec.target_box.w, spec.target_box.h)
    frames: list[GrayFrame] = []
    truth_entries: list[tuple[int, Optional[BBox]]] = []
    for t, box in enumerate(boxes):
        background = spec.background
        for effect in spec.perturbations:
            if isinstance(effect, BackgroundEffect) and effect.active(t):
                background = effect.pattern
        canvas = background.render(spec.width, spec.height)
        _stamp(canvas, target, box.x, box.y)
        occluders: list[BBox] = []
        for effect in spec.perturbations:
            if isinstance(effect, BackgroundEffect) or not effect.active(t):
                continue
            if isinstance(effect, AppearanceEffect):
                effect.apply_at(canvas, box)
            elif isinstance(effect, OccluderEffect):
                effect.apply(canvas, t)
                occluders.append(effect.box_at(t))
            else:
                effect.apply(canvas, t)
        frames.append(GrayFrame(canvas))
        covered = _occluded_fraction(box, occluders)
        truth_entries.append((t, None if covered >= OCCLUSION_ABSENT_COVERAGE else box))
    return frames, GroundTruth.from_pairs(truth_entries)


# --- flat text format -----------------------------------------------------

_REQUIRED_KEYS = (
    "width",
    "height",
    "length",
    "background",
    "target",
    "target_x",
    "target_y",
    "target_w",
    "target_h",
    "motion",
)


def parse_spec(text: str) -> SynthSpec:
    """Parse the flat key=value format; one perturb= line per perturbation."""
    values: dict[str, str] = {}
    effects: list[Effect] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(number, f"line {number}: expected key=value, got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key == "perturb":
            try:
                effects.append(_parse_effect(value))
            except SpecError as exc:
                raise FormatError(number, f"line {number}: {exc}") from exc
        elif key in _REQUIRED_KEYS:
            if key in values:
                raise FormatError(number, f"line {number}: duplicate key {key!r}")
            values[key] = value
        else:
            raise FormatError(number, f"line {number}: unknown key {key!r}")
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise SpecError(f"spec missing keys: {', '.join(missing)}")
    try:
        box = BBox(
            int(values["target_x"]),
            int(values["target_y"]),
            int(values["target_w"]),
            int(values["target_h"]),
        )
        spec = SynthSpec(
            width=int(values["width"]),
            height=int(values["height"]),
            length=int(values["length"]),
            background=parse_pattern(values["background"]),
            target_pattern=parse_pattern(values["target"]),
            target_box=box,
            motion=parse_motion(values["motion"]),
            perturbations=tuple(effects),
        )
    except ValueError as exc:
        raise SpecError(f"bad spec value: {exc}") from exc
    spec.validate()
    return spec


def format_spec(spec: SynthSpec) -> str:
    """Writer symmetric to parse_spec."""
    lines = [
        f"width={spec.width}",
        f"height={spec.height}",
        f"length={spec.length}",
        f"background={spec.background.spec_text()}",
        f"target={spec.target_pattern.spec_text()}",
        f"target_x={spec.target_box.x}",
        f"target_y={spec.target_box.y}",
        f"target_w={spec.target_box.w}",
        f"target_h={spec.target_box.h}",
        f"motion={spec.motion.spec_text()}",
    ]
    lines.extend(effect.spec_text() for effect in spec.perturbations)
    return "\n".join(lines) + "\n"


# --- scripted scenario builders ------------------------------------------


@dataclass(frozen=True)
class DecoyScene:
    """Two frames where a minority of the target turns into outliers.

    The second frame shows the target at ``true_box`` with its bottom rows
    replaced by saturated values (large differences, a small pixel count)
    and a decoy at ``decoy_box`` whose every pixel sits a uniform moderate
    step away from the template (small differences, every pixel).  An
    outlier-insensitive score keeps the true location; a plain
    sum-of-differences prefers the decoy.
    """

    first_frame: GrayFrame
    second_frame: GrayFrame
    init_box: BBox
    true_box: BBox
    decoy_box: BBox


def decoy_scene() -> DecoyScene:
    width, height = 160, 120
    background = 230
    init_box = BBox(40, 30, 16, 16)
    true_box = BBox(46, 34, 16, 16)  # offset (6, 4)
    decoy_box = BBox(25, 44, 16, 16)  # offset (-15, 14)
    pattern = NoisePattern(seed=2024, lo=60, hi=170).render(16, 16)

    first = np.full((height, width), background, dtype=np.uint8)
    _stamp(first, pattern, init_box.x, init_box.y)

    corrupted = pattern.copy()
    corrupted[12:, :] = 255  # bottom 4 rows: 25% of the pixels become outliers
    decoy = pattern + 30  # every pixel a moderate 30 away

    second = np.full((height, width), background, dtype=np.uint8)
    _stamp(second, corrupted, true_box.x, true_box.y)
    _stamp(second, decoy, decoy_box.x, decoy_box.y)
    return DecoyScene(
        first_frame=GrayFrame(first),
        second_frame=GrayFrame(second),
        init_box=init_box,
        true_box=true_box,
        decoy_box=decoy_box,
    )


def edge_exit_spec() -> SynthSpec:
    """A target that walks out of the right frame edge and stops just outside."""
    return SynthSpec(
        width=120,
        height=90,
        length=14,
        background=UniformPattern(15),
        target_pattern=NoisePattern(seed=3, lo=90, hi=200),
        target_box=BBox(70, 40, 20, 20),
        motion=PiecewiseVelocity(((10, 5, 0),)),
    )


def slow_occlusion_spec() -> SynthSpec:
    """A textured occluder crossing a static target over ~27 frames.

    With the template refreshed on every detection, the occluder's pixels
    gradually take the template over; once they dominate, the tracked box
    leaves with the occluder instead of staying on the target.
    """
    return SynthSpec(
        width=200,
        height=120,
        length=71,
        background=UniformPattern(25),
        target_pattern=NoisePattern(seed=11, lo=60, hi=140),
        target_box=BBox(88, 48, 24, 24),
        motion=ConstantVelocity(0, 0),
        perturbations=(
            OccluderEffect(
                first=0, last=70, x=8, y=44, vx=2, vy=0, w=32, h=32,
                pattern=NoisePattern(seed=12, lo=170, hi=250),
            ),
        ),
    )
