"""Symmetric quadrature rules on the reference triangle.

The reference triangle has vertices (0, 0), (1, 0), (0, 1) and area 1/2.
Points are stored as barycentric triples ``(l0, l1, l2)``; the Cartesian
reference coordinates are ``(x, y) = (l1, l2)``.

Rules of degree 3 and up are the fully symmetric Dunavant point sets,
polished to full double precision against the monomial moment equations.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TriangleQuadrature",
    "rule_for_degree",
    "integrate_on_triangle",
    "MAX_DEGREE",
]

MAX_DEGREE = 10


@dataclass(frozen=True)
class TriangleQuadrature:
    """Quadrature rule on the reference triangle.

    ``weights`` sum to 1/2, the reference area, so ``sum(w * f(p))``
    approximates the integral over the reference triangle directly.
    """

    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,)
    exact_degree: int

    @property
    def xy(self):
        """Reference Cartesian coordinates, shape (nq, 2)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


# Orbit notation (weights normalised to sum to one):
#   ("c", w)        centroid
#   ("3", a, w)     permutations of (a, a, 1 - 2a)
#   ("6", a, b, w)  permutations of (a, b, 1 - a - b)
_ORBITS = {
    1: [("c", 1.0)],
    2: [("m", 1.0 / 3.0)],
    3: [("c", -0.5625), ("3", 0.2, 0.52083333333333333333)],
    4: [
        ("3", 0.44594849091596488632, 0.2233815896780114657),
        ("3", 0.09157621350977074346, 0.10995174365532186764),
    ],
    5: [
        ("c", 0.225),
        ("3", 0.47014206410511508977, 0.13239415278850618074),
        ("3", 0.1012865073234563388, 0.1259391805448271526),
    ],
    6: [
        ("3", 0.24928674517091042129, 0.11678627572637936603),
        ("3", 0.06308901449150222834, 0.050844906370206816921),
        ("6", 0.053145049844816947353, 0.31035245103378440542, 0.082851075618373575194),
    ],
    7: [
        ("c", -0.14957004446768175063),
        ("3", 0.26034596607903982693, 0.17561525743320781175),
        ("3", 0.065130102902215811538, 0.05334723560883849127),
        ("6", 0.048690315425316411793, 0.31286549600487386141, 0.07711376089025714026),
    ],
    8: [
        ("c", 0.14431560767778716825),
        ("3", 0.45929258829272315603, 0.095091634267284624794),
        ("3", 0.17056930775176020662, 0.10321737053471825028),
        ("3", 0.050547228317030975458, 0.032458497623198080311),
        ("6", 0.0083947774099576053372, 0.26311282963463811342, 0.027230314174434994265),
    ],
    9: [
        ("c", 0.097135796282798833819),
        ("3", 0.48968251919873762778, 0.031334700227139070537),
        ("3", 0.43708959149293663727, 0.077827541004774279317),
        ("3", 0.18820353561903273024, 0.079647738927210253033),
        ("3", 0.044729513394452709865, 0.025577675658698031262),
        ("6", 0.036838412054736283635, 0.22196298916076569568, 0.043283539377289377289),
    ],
    10: [
        ("c", 0.090817990382753580095),
        ("3", 0.48557763338365737737, 0.036725957756466704717),
        ("3", 0.1094815754850370548, 0.045321059435527934783),
        ("6", 0.14170721941487995476, 0.30793983876412095017, 0.072757916845420108604),
        ("6", 0.025003534762686386074, 0.24667256063990269392, 0.028327242531057484837),
        ("6", 0.0095408154002994575802, 0.066803251012200265774, 0.0094216669637328234599),
    ],
}


def _expand(orbits):
    pts, ws = [], []
    for orb in orbits:
        kind = orb[0]
        if kind == "c":
            pts.append((1.0 / 3.0,) * 3)
            ws.append(orb[1])
        elif kind == "m":
            # edge midpoints
            for lam in [(0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)]:
                pts.append(lam)
                ws.append(orb[1])
        elif kind == "3":
            a, w = orb[1], orb[2]
            c = 1.0 - 2.0 * a
            for lam in [(c, a, a), (a, c, a), (a, a, c)]:
                pts.append(lam)
                ws.append(w)
        else:
            a, b, w = orb[1], orb[2], orb[3]
            c = 1.0 - a - b
            for lam in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]:
                pts.append(lam)
                ws.append(w)
    return np.array(pts, dtype=float), 0.5 * np.array(ws, dtype=float)


_RULES = {}
for _d, _orbits in _ORBITS.items():
    _p, _w = _expand(_orbits)
    _RULES[_d] = TriangleQuadrature(_p, _w, _d)
    _p.setflags(write=False)
    _w.setflags(write=False)


def rule_for_degree(d):
    """Return the rule exact for polynomials of total degree ``d``.

    Raises ``ValueError`` outside ``1 <= d <= 10``.
    """
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {d!r} (need 1..{MAX_DEGREE})")
    return _RULES[int(d)]


def integrate_on_triangle(f, tri, rule):
    """Integrate ``f(x, y)`` over the affine triangle with vertices ``tri``.

    ``tri`` is a (3, 2) array of vertex coordinates in any orientation.
    ``f`` must accept numpy arrays of x and y.
    """
    tri = np.asarray(tri, dtype=float)
    pts = rule.points @ tri
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    jac = abs(e1[0] * e2[1] - e1[1] * e2[0])
    vals = np.asarray(f(pts[:, 0], pts[:, 1]))
    return jac * np.sum(rule.weights * vals)
