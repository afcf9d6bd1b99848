"""Reference families used by the fixtures, tests and CLI."""

from __future__ import annotations

import json
import os

import numpy as np

from .core import OneParamFamily

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")


def rotation(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


R90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def rot45_pair() -> OneParamFamily:
    """{t Q x, t 0.4 Q (x - (1,0)) + (1,0)} with Q the rotation by pi/4."""
    Q = rotation(np.pi / 4)
    a2 = -(0.4 / np.sqrt(2.0)) * np.ones(2)
    return OneParamFamily.from_arrays([Q, 0.4 * Q], [[0, 0], a2], [[0, 0], [1, 0]], name="rot45_pair")


def flip_interval() -> OneParamFamily:
    """{-tx + t + 1, -tx - t - 1}; attractor [-(1+t)/(1-t), (1+t)/(1-t)] for t >= 1/2."""
    return OneParamFamily.from_arrays([[[-1.0]], [[-1.0]]], [[1.0], [-1.0]], [[1.0], [-1.0]],
                                      name="flip_interval")


def shear_common_point() -> OneParamFamily:
    """Two maps sharing the fixed point (1/(1-t), t/(1-t)); not linear."""
    L2 = np.array([[0.0, 1.0], [-1.0, 2.0]])
    return OneParamFamily.from_arrays([np.eye(2), L2], [[0, 1], [1, 2]], [[1, 0], [1, 0]],
                                      name="shear_common_point")


def diagonal_dust() -> OneParamFamily:
    """Images of the two maps stay apart for every t < 1."""
    return OneParamFamily.from_arrays([np.diag([1.0, 0.1]), np.diag([0.1, 0.1])],
                                      [[0, 0], [-0.1, -0.1]], [[0, 0], [1, 1]], name="diagonal_dust")


def complex_pair(phi: float = 0.0, m: complex = 1.0, c1: complex = 0.0, c2: complex = 1.0) -> OneParamFamily:
    """{tau z + c1, tau m z + c2} with tau = t e^{i phi}, encoded as real 2x2 maps."""
    L1 = rotation(phi)
    mz = complex(m)
    L2 = abs(mz) * rotation(phi + np.angle(mz))
    q1 = [complex(c1).real, complex(c1).imag]
    q2 = [complex(c2).real, complex(c2).imag]
    return OneParamFamily.from_arrays([L1, L2], [[0, 0], [0, 0]], [q1, q2],
                                      name=f"complex_pair(phi={phi!r})")


def complex_pair_semilinear(phi: float = 0.0) -> OneParamFamily:
    """{tau z, tau (z - 1) + 1}, tau = t e^{i phi}.

    For each tau the attractor is (1 - tau) times that of {tau z, tau z + 1}.
    """
    L = rotation(phi)
    a2 = -(L @ np.array([1.0, 0.0]))
    return OneParamFamily.from_arrays([L, L], [[0, 0], a2], [[0, 0], [1, 0]],
                                      name=f"complex_pair_semilinear(phi={phi!r})")


def real_pair() -> OneParamFamily:
    """{tx, tx + 1} on the line."""
    return OneParamFamily.from_arrays([[[1.0]], [[1.0]]], [[0.0], [0.0]], [[0.0], [1.0]], name="real_pair")


def real_pair_semilinear() -> OneParamFamily:
    """{tx, t(x - 1) + 1}: conjugate of {tx, tx + 1} with both offsets fixed."""
    return OneParamFamily.from_arrays([[[1.0]], [[1.0]]], [[0.0], [-1.0]], [[0.0], [1.0]],
                                      name="real_pair_semilinear")


def rot90_shrink(alpha: float = 0.3) -> OneParamFamily:
    """{t R x, t alpha (x - (1,0)) + (1,0)}, R the quarter turn; bounded."""
    return OneParamFamily.from_arrays([R90, alpha * np.eye(2)], [[0, 0], [-alpha, 0]],
                                      [[0, 0], [1, 0]], name=f"rot90_shrink(alpha={alpha!r})")


def spiral_approach(alpha: float = 0.5) -> OneParamFamily:
    """{t x, t alpha R (x - (1,0)) + (1,0)}; the orbit of 0 spirals into (1,0)."""
    return OneParamFamily.from_arrays([np.eye(2), alpha * R90], [[0, 0], [0, -alpha]],
                                      [[0, 0], [1, 0]], name=f"spiral_approach(alpha={alpha!r})")


def rot45_counter(alpha: float = 0.4) -> OneParamFamily:
    """{t Q x, t alpha Q^T (x - (1,0)) + (1,0)}."""
    Q = rotation(np.pi / 4)
    a2 = -alpha * (Q.T @ np.array([1.0, 0.0]))
    return OneParamFamily.from_arrays([Q, alpha * Q.T], [[0, 0], a2], [[0, 0], [1, 0]],
                                      name=f"rot45_counter(alpha={alpha!r})")


def quarter_line() -> OneParamFamily:
    """{(t/4) x, t(x - 1) + 1}; bounded with special point 1."""
    return OneParamFamily.from_arrays([[[0.25]], [[1.0]]], [[0.0], [-1.0]], [[0.0], [1.0]],
                                      name="quarter_line")


BUILDERS = {
    "rot45_pair": rot45_pair,
    "flip_interval": flip_interval,
    "shear_common_point": shear_common_point,
    "diagonal_dust": diagonal_dust,
    "complex_pair": complex_pair,
    "complex_pair_semilinear": complex_pair_semilinear,
    "real_pair": real_pair,
    "real_pair_semilinear": real_pair_semilinear,
    "rot90_shrink": rot90_shrink,
    "rot90_shrink_04": lambda: rot90_shrink(0.4),
    "spiral_approach": spiral_approach,
    "rot45_counter": rot45_counter,
    "quarter_line": quarter_line,
}


def fixture_names():
    return sorted(f[:-5] for f in os.listdir(FIXTURE_DIR) if f.endswith(".json"))


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURE_DIR, name + ".json")


def load_fixture(name: str) -> OneParamFamily:
    from .io import parse_family
    path = fixture_path(name)
    if not os.path.exists(path):
        raise KeyError(f"unknown fixture {name!r}; have {fixture_names()}")
    fam = parse_family(path)
    return OneParamFamily(fam.members, name)


def write_fixtures(directory: str = FIXTURE_DIR):
    from .io import write_family
    os.makedirs(directory, exist_ok=True)
    for name, build in BUILDERS.items():
        fam = build()
        write_family(os.path.join(directory, name + ".json"), OneParamFamily(fam.members, name))
