"""Robot descriptions: serial-chain arms, end-effector apertures and shape
tables, planar base footprint. Loaded from ``*.robot.json`` files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Tuple

from .idf import SideHint, _check, register_type
from .kinematics import SerialChain


class UnknownArm(Exception):
    pass


@dataclass(frozen=True)
class EndEffector:
    """Gripper/hand description; shape names map to finger joint values."""

    kind: str  # "fiveFinger" | "parallel"
    aperture_min: float
    aperture_max: float
    shape_table: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)
    open_shapes: Tuple[str, ...] = ("open",)

    def __post_init__(self) -> None:
        _check(self.kind in ("fiveFinger", "parallel"),
               f"unknown end-effector kind {self.kind!r}")
        _check(0.0 <= self.aperture_min < self.aperture_max,
               "0 <= apertureMin < apertureMax")
        object.__setattr__(self, "shape_table",
                           {k: tuple(float(x) for x in v)
                            for k, v in self.shape_table.items()})
        object.__setattr__(self, "open_shapes", tuple(self.open_shapes))

    def is_open_shape(self, name: str) -> bool:
        return name in self.open_shapes

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "apertureMin": self.aperture_min,
            "apertureMax": self.aperture_max,
            "shapeTable": {k: list(v) for k, v in sorted(self.shape_table.items())},
            "openShapes": list(self.open_shapes),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EndEffector":
        return cls(
            kind=str(d["kind"]),
            aperture_min=float(d["apertureMin"]),
            aperture_max=float(d["apertureMax"]),
            shape_table={k: tuple(float(x) for x in v)
                         for k, v in d.get("shapeTable", {}).items()},
            open_shapes=tuple(d.get("openShapes", ["open"])),
        )


@dataclass(frozen=True)
class Arm:
    chain: SerialChain
    handedness: SideHint
    end_effector: EndEffector
    home: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        _check(self.handedness in (SideHint.Left, SideHint.Right),
               "arm handedness is Left or Right")
        if self.home is not None:
            home = tuple(float(v) for v in self.home)
            _check(len(home) == self.chain.dof, "home length = chain dof")
            object.__setattr__(self, "home", home)

    @property
    def name(self) -> str:
        return self.chain.name

    def home_config(self) -> Tuple[float, ...]:
        if self.home is not None:
            return self.home
        return tuple(self.chain.midpoints())

    def to_dict(self) -> dict:
        d = self.chain.to_dict()
        d["handedness"] = self.handedness.name.lower()
        d["endEffector"] = self.end_effector.to_dict()
        if self.home is not None:
            d["home"] = list(self.home)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Arm":
        return cls(
            chain=SerialChain.from_dict(d),
            handedness=SideHint[str(d["handedness"]).capitalize()],
            end_effector=EndEffector.from_dict(d["endEffector"]),
            home=tuple(float(v) for v in d["home"]) if "home" in d else None,
        )


@dataclass(frozen=True)
class RobotDescription:
    name: str
    arms: Tuple[Arm, ...]
    footprint_radius: float = 0.3
    comfort_height: float = 0.9
    wrist_radius: float = 0.07
    manipulability_block: str = "full"

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", tuple(self.arms))
        _check(len(self.arms) >= 1, "robot has >= 1 arm")
        names = [a.name for a in self.arms]
        _check(len(names) == len(set(names)), "arm names unique")
        _check(self.footprint_radius > 0.0, "footprintRadius > 0")
        _check(self.manipulability_block in ("full", "position"),
               "manipulabilityBlock is 'full' or 'position'")

    @property
    def arm_count(self) -> int:
        return len(self.arms)

    def arm_by_name(self, name: str) -> Arm:
        for arm in self.arms:
            if arm.name == name:
                return arm
        raise UnknownArm(f"robot {self.name!r} has no arm {name!r}")

    def arms_for_side(self, side: SideHint) -> Tuple[Arm, ...]:
        if side is SideHint.Either:
            return self.arms
        return tuple(a for a in self.arms if a.handedness is side)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base": {"footprintRadius": self.footprint_radius},
            "comfortHeight": self.comfort_height,
            "wristRadius": self.wrist_radius,
            "manipulabilityBlock": self.manipulability_block,
            "arms": [a.to_dict() for a in self.arms],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RobotDescription":
        return cls(
            name=str(d["name"]),
            arms=tuple(Arm.from_dict(a) for a in d["arms"]),
            footprint_radius=float(d.get("base", {}).get("footprintRadius", 0.3)),
            comfort_height=float(d.get("comfortHeight", 0.9)),
            wrist_radius=float(d.get("wristRadius", 0.07)),
            manipulability_block=str(d.get("manipulabilityBlock", "full")),
        )


register_type(RobotDescription)


def load_robot(path: "str | Path") -> RobotDescription:
    return RobotDescription.from_dict(json.loads(Path(path).read_text()))
