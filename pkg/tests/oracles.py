"""Independent slow reference implementations used as test oracles."""
import math

import numpy as np


def brute_pairs(pattern, i, j, rmax):
    """O(n^2) ordered pairs (source xy, distance) from type i to type j."""
    out = []
    n = len(pattern)
    for a in range(n):
        if pattern.marks[a] != i:
            continue
        for b in range(n):
            if a == b or pattern.marks[b] != j:
                continue
            dx = float(pattern.x[a]) - float(pattern.x[b])
            dy = float(pattern.y[a]) - float(pattern.y[b])
            d = math.sqrt(dx * dx + dy * dy)
            if 0 < d <= rmax:
                out.append(((float(pattern.x[a]), float(pattern.y[a])), d))
    return out


def arc_fraction(x, y, t, w):
    """Fraction of the circle inside the rectangle via exact crossing angles."""
    angles = [0.0, 2 * math.pi]
    for edge in (w.xmin, w.xmax):
        c = (edge - x) / t
        if -1 < c < 1:
            a = math.acos(c)
            angles += [a, 2 * math.pi - a]
    for edge in (w.ymin, w.ymax):
        s = (edge - y) / t
        if -1 < s < 1:
            a = math.asin(s)
            angles += [a % (2 * math.pi), (math.pi - a) % (2 * math.pi)]
    angles.sort()
    inside = 0.0
    for lo, hi in zip(angles[:-1], angles[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        px, py = x + t * math.cos(mid), y + t * math.sin(mid)
        if w.xmin <= px <= w.xmax and w.ymin <= py <= w.ymax:
            inside += hi - lo
    return inside / (2 * math.pi)


def circle_sampling_fraction(x, y, t, w, n=100_000):
    """Share of n equally spaced circle points inside the rectangle."""
    theta = (np.arange(n) + 0.5) * 2 * np.pi / n
    px = x + t * np.cos(theta)
    py = y + t * np.sin(theta)
    return float(np.mean((px >= w.xmin) & (px <= w.xmax) & (py >= w.ymin) & (py <= w.ymax)))


def brute_k(pattern, i, j, nodes, correction, R=None):
    """Direct K estimate (naive, border or isotropic) by double loop."""
    w = pattern.window
    n_i = int(np.sum(pattern.marks == i))
    n_j = int(np.sum(pattern.marks == j))
    area = w.area()
    li, lj = n_i / area, n_j / area
    norm_area = area
    if correction == "border":
        inner = (w.xmin + R, w.xmax - R, w.ymin + R, w.ymax - R)
        norm_area = (inner[1] - inner[0]) * (inner[3] - inner[2])
    rmax = max(nodes)
    weighted = []
    for (sx, sy), d in brute_pairs(pattern, i, j, rmax):
        if correction == "none":
            wt = 1.0
        elif correction == "border":
            wt = 1.0 if (inner[0] <= sx <= inner[1] and inner[2] <= sy <= inner[3]) else 0.0
        else:
            wt = 1.0 / arc_fraction(sx, sy, d, w)
        weighted.append((d, wt))
    out = []
    for h in nodes:
        total = 0.0
        for d, wt in sorted(weighted):
            if d <= h:
                total += wt
        out.append(total / (norm_area * li * lj))
    return np.array(out)


def trapezoid_k(cov_fn, r, panels=1_000_000):
    """2 pi int_0^r h exp(C(h)) dh with a fine composite trapezoid rule."""
    h = np.linspace(0.0, r, panels + 1)
    f = h * np.exp(cov_fn(h))
    return 2 * np.pi * (r / panels) * (f.sum() - 0.5 * (f[0] + f[-1]))
