"""Class/kind registry shared by the simulator, dataset store and model."""

from __future__ import annotations

# In-distribution human activities (stage-2 classifier targets).
ID_KINDS = ("sit", "stand", "walk")

# Disturber kinds. Only the first two are ever exposed during training (OE);
# the rest appear exclusively in the test split.
OE_OOD_KINDS = ("fan", "toy_car")
HELD_OUT_OOD_KINDS = ("swinging", "stationary_clutter", "vacuum")
OOD_KINDS = OE_OOD_KINDS + HELD_OUT_OOD_KINDS

ALL_KINDS = ID_KINDS + OOD_KINDS

KIND_TO_CODE = {kind: code for code, kind in enumerate(ALL_KINDS)}
CODE_TO_KIND = {code: kind for kind, code in KIND_TO_CODE.items()}

ID_CODES = frozenset(KIND_TO_CODE[k] for k in ID_KINDS)
OOD_CODES = frozenset(KIND_TO_CODE[k] for k in OOD_KINDS)

SPLITS = ("train", "oe", "calibration", "test")


def is_id(label: int) -> bool:
    return label in ID_CODES


def kind_code(kind: str) -> int:
    try:
        return KIND_TO_CODE[kind]
    except KeyError:
        raise ValueError(f"unknown kind {kind!r}; expected one of {ALL_KINDS}") from None
