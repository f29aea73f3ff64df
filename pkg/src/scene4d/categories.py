"""Semantic category table shared by the synthetic scenes and the loss
weighting, serialized as categories.json (id -> name) inside datasets."""

from __future__ import annotations

import json
from pathlib import Path

# Categories whose loss weight is boosted: vehicles 3x, people/animals 7x.
VEHICLE_NAMES = (
    "Bus",
    "Car",
    "Caravan/RV",
    "ConstructionVehicle",
    "Bicycle",
    "Motorcycle",
    "OwnCar",
    "Truck",
    "WheeledSlow",
)
PERSON_NAMES = (
    "Animal",
    "Bicyclist",
    "Motorcyclist",
    "OtherRider",
    "Pedestrian",
)

CATEGORY_NAMES: dict[int, str] = {
    0: "Void",
    1: "Ground",
    2: "Car",
    3: "Truck",
    4: "Bus",
    5: "Bicycle",
    6: "Motorcycle",
    7: "Caravan/RV",
    8: "ConstructionVehicle",
    9: "OwnCar",
    10: "WheeledSlow",
    11: "Pedestrian",
    12: "Animal",
    13: "Bicyclist",
    14: "Motorcyclist",
    15: "OtherRider",
    16: "Building",
    17: "Vegetation",
    18: "Crate",
    19: "Ball",
}

VOID_ID = 0
GROUND_ID = 1

# Labels cycled over the spheres of generated scenes; mixes boosted and
# unboosted categories so weight maps and mIoU see variety.
SPHERE_LABEL_CYCLE = (2, 11, 3, 12, 19, 18, 4, 16, 5, 17, 6, 13)


def ids_for_names(names, table: dict[int, str] | None = None) -> frozenset[int]:
    table = CATEGORY_NAMES if table is None else table
    wanted = set(names)
    return frozenset(i for i, n in table.items() if n in wanted)


def write_categories_json(path) -> None:
    payload = {str(i): name for i, name in sorted(CATEGORY_NAMES.items())}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_categories_json(path) -> dict[int, str]:
    raw = json.loads(Path(path).read_text())
    return {int(k): str(v) for k, v in raw.items()}
