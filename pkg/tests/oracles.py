"""Slow, obviously-correct reference implementations used only by the tests."""

import math

import numpy as np


def central_diff(f, x, h):
    """Central finite differences of scalar ``f`` at array ``x`` (copied)."""
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        orig = x.flat[i]
        x.flat[i] = orig + h
        fp = f(x)
        x.flat[i] = orig - h
        fm = f(x)
        x.flat[i] = orig
        grad.flat[i] = (fp - fm) / (2 * h)
    return grad


def rel_error(a, b):
    """Norm-wise relative error."""
    a = np.ravel(a)
    b = np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


def logistic_loss(w, b, x, y, l2):
    total = 0.0
    for xi, yi in zip(x, y):
        z = sum(wj * xj for wj, xj in zip(w, xi)) + b
        p = 1.0 / (1.0 + math.exp(-z))
        total -= yi * math.log(p) + (1 - yi) * math.log(1 - p)
    return total / len(y) + 0.5 * l2 * sum(wj * wj for wj in w)


def tally_confusion(y_true, y_pred):
    cells = {"tn": 0, "fp": 0, "fn": 0, "tp": 0}
    for t, p in zip(y_true, y_pred):
        if t == 0 and p == 0:
            cells["tn"] += 1
        elif t == 0 and p == 1:
            cells["fp"] += 1
        elif t == 1 and p == 0:
            cells["fn"] += 1
        else:
            cells["tp"] += 1
    return cells


def median_filter(img, r):
    h, w = img.shape
    out = np.zeros_like(img, dtype=float)
    for y in range(h):
        for x in range(w):
            vals = []
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    vals.append(img[yy, xx])
            vals.sort()
            out[y, x] = vals[len(vals) // 2]
    return out


def gaussian_filter_2d(img, sigma):
    r = math.ceil(3 * sigma)
    ks = [[math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) for dx in range(-r, r + 1)]
          for dy in range(-r, r + 1)]
    total = sum(map(sum, ks))
    h, w = img.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    acc += ks[dy + r][dx + r] * img[yy, xx]
            out[y, x] = acc / total
    return np.clip(out, 0, 255)


def group_stats(rows):
    """rows: (threat_type, attempts, impact) -> {key: (total, mean_attempts, mean_impact, n)}"""
    acc = {}
    for key, att, imp in rows:
        t, s_imp, n = acc.get(key, (0, 0, 0))
        acc[key] = (t + att, s_imp + imp, n + 1)
    return {k: (t, t / n, s / n, n) for k, (t, s, n) in acc.items()}


def hog_naive(img, cell, block, bins, signed=False, eps=1e-6):
    """Per-pixel loops; returns blocks as a list in row-major block order."""
    h, w = img.shape
    span = 360.0 if signed else 180.0
    width = span / bins

    def px(y, x):
        return float(img[min(max(y, 0), h - 1), min(max(x, 0), w - 1)])

    ncy, ncx = h // cell, w // cell
    hist = [[[0.0] * bins for _ in range(ncx)] for _ in range(ncy)]
    for y in range(ncy * cell):
        for x in range(ncx * cell):
            gx = px(y, x + 1) - px(y, x - 1)
            gy = px(y + 1, x) - px(y - 1, x)
            mag = math.hypot(gx, gy)
            ang = math.degrees(math.atan2(gy, gx)) % span
            pos = ang / width
            lo = int(math.floor(pos))
            frac = pos - lo
            hist[y // cell][x // cell][lo % bins] += mag * (1 - frac)
            hist[y // cell][x // cell][(lo + 1) % bins] += mag * frac
    out = []
    for by in range(ncy - block + 1):
        for bx in range(ncx - block + 1):
            v = [b for cy in range(by, by + block) for cx in range(bx, bx + block) for b in hist[cy][cx]]
            norm = math.sqrt(sum(t * t for t in v) + eps * eps)
            out.append([t / norm for t in v])
    return out


def histogram_exact(values, bins, lo=0, hi=100):
    """Bin membership decided with exact rational edges."""
    from fractions import Fraction
    edges = [Fraction(lo) + Fraction(hi - lo) * i / bins for i in range(bins + 1)]
    counts = [0] * bins
    for v in values:
        v = Fraction(v)
        for i in range(bins):
            last = i == bins - 1
            if edges[i] <= v and (v < edges[i + 1] or (last and v == edges[i + 1])):
                counts[i] += 1
                break
    return counts


def quantile_sorted(values, q):
    """Textbook linear-interpolation quantile on a sorted copy."""
    s = sorted(values)
    pos = q * (len(s) - 1)
    i = int(math.floor(pos))
    if i + 1 >= len(s):
        return float(s[-1])
    return s[i] + (pos - i) * (s[i + 1] - s[i])


def pearson_exact(x, y):
    """Rational sums, one final square root; ``None`` for a constant column."""
    from fractions import Fraction
    n = len(x)
    fx = [Fraction(v) for v in x]
    fy = [Fraction(v) for v in y]
    mx, my = sum(fx) / n, sum(fy) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(fx, fy))
    sxx = sum((a - mx) ** 2 for a in fx)
    syy = sum((b - my) ** 2 for b in fy)
    if sxx == 0 or syy == 0:
        return None
    return float(sxy) / math.sqrt(float(sxx * syy))
