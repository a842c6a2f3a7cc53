"""Independent scalar reference computations used by the tests.

Nothing here imports the package under test; every value is built from
explicit loops over the physical definitions.
"""
import cmath
import math

C0 = 299_792_458.0


def k0(f):
    return 2 * math.pi * f / C0


def dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def green(a, b, f):
    d = dist(a, b)
    return cmath.exp(-1j * k0(f) * d) / d


def field_at(point, elements, phases, antenna, f):
    """Sum over elements of incident * exp(i*phase) * green(element, point)."""
    total = 0j
    for pos, ph in zip(elements, phases):
        total += green(antenna, pos, f) * cmath.exp(1j * ph) * green(pos, point, f)
    return total


def panel_elements(origin, rows, cols, s):
    out = []
    for m in range(rows):
        for n in range(cols):
            out.append((origin[0] + (n - (cols - 1) / 2) * s, origin[1] + (m - (rows - 1) / 2) * s, origin[2]))
    return out


def steering_angles(origin, point):
    """Angles whose gradient sends the beam from origin toward point.

    The beam of gradient k*(x sin t cos p + y sin t sin p) under exp(-ikd)
    propagation leaves along (-sin t cos p, -sin t sin p, cos t).
    """
    d = [p - o for p, o in zip(point, origin)]
    n = math.sqrt(sum(v * v for v in d))
    u = [v / n for v in d]
    return math.acos(u[2]), math.atan2(-u[1], -u[0])
