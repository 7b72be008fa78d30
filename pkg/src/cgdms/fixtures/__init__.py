"""Packaged example configurations."""
from __future__ import annotations

from importlib import resources

from ..config import SystemConfig, parse_config
from ..system import Cgdms

__all__ = ["NAMES", "SUITE", "fixture_path", "load_fixture", "fixture_system"]

NAMES = ("ternary", "perturbed_ternary", "golden_mean", "construction_2x2", "golden_matrix",
         "ratios_half_quarter", "ternary_conjugate", "half_ratio", "touching")

# fixtures exercised by the end-to-end report
SUITE = ("ternary", "perturbed_ternary", "golden_mean", "construction_2x2")


def fixture_path(name: str):
    if name not in NAMES:
        raise KeyError(f"unknown fixture {name!r}")
    return resources.files(__name__).joinpath(f"{name}.json")


def load_fixture(name: str) -> SystemConfig:
    path = fixture_path(name)
    return parse_config(path.read_bytes(), f"{name}.json")


def fixture_system(name: str) -> Cgdms:
    """The fixture's system with every verifier run."""
    return load_fixture(name).verified()
