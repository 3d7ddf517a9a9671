"""Built-in examples, shipped as presentation files in the documented format."""

from __future__ import annotations

from dataclasses import dataclass

from .core import Presentation, parse_presentation
from .errors import SelfSimError

ADDING_MACHINE = """\
# binary odometer: adds 1 to a least-significant-digit-first binary number
alphabet = 2
gens = tau
tau : perm = (0 1) ; 0 -> 1 ; 1 -> tau
"""

Z2M1 = """\
# iterated monodromy group of z^2 - 1 (a: loop around -1, b: loop around 0)
alphabet = 2
gens = a b
a : perm = (0 1) ; 0 -> b ; 1 -> 1
b : perm = ()    ; 0 -> a ; 1 -> 1
"""

Z2M2 = """\
# iterated monodromy group of z^2 - 2, the infinite dihedral group
# (a: loop around -2, b: loop around 2)
alphabet = 2
gens = a b
a : perm = (0 1) ; 0 -> 1 ; 1 -> 1
b : perm = ()    ; 0 -> b ; 1 -> a
"""

TRIVIAL = """\
alphabet = 2
gens = e
e : perm = () ; 0 -> 1 ; 1 -> 1
"""


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    recursion: str | None = None
    c: complex | None = None
    group: dict | None = None


PRESETS = {
    p.name: p
    for p in [
        Preset("adding-machine", "binary odometer tau=(1,tau)s", ADDING_MACHINE,
               group={"kind": "lattice", "matrix": [[2]], "digits": [(0,), (1,)]}),
        Preset("z2", "IMG(z^2): the adding machine", ADDING_MACHINE, c=0j),
        Preset("z2m1", "IMG(z^2-1): a=(b,1)s, b=(a,1)", Z2M1, c=-1 + 0j),
        Preset("z2m2", "IMG(z^2-2): a=(1,1)s, b=(b,a)", Z2M2, c=-2 + 0j),
        Preset("dragon", "Z^2 with A=[[-1,1],[-1,-1]], digits (0,0),(1,0)",
               group={"kind": "lattice", "matrix": [[-1, 1], [-1, -1]], "digits": [(0, 0), (1, 0)]}),
        Preset("heisenberg22", "integer Heisenberg group, p=q=2",
               group={"kind": "heisenberg", "p": 2, "q": 2}),
        Preset("lattes2", "affine group z -> +-z + w over Z[i], alpha=2",
               group={"kind": "lattes", "basis": (1 + 0j, 1j), "alpha": 2 + 0j}),
        Preset("trivial", "one generator acting trivially", TRIVIAL),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise SelfSimError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def preset_presentation(name: str) -> Presentation:
    """Presentation of a preset; group presets are converted through their triple closure."""
    p = get_preset(name)
    if p.recursion is not None:
        return parse_presentation(p.recursion)
    from .virtual_endo import closure_presentation, group_from_spec

    group, gens = group_from_spec(p.group)
    return closure_presentation(group, gens)
