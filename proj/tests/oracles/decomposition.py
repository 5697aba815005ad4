#!/usr/bin/env python3
"""Halo messages by point enumeration. For every destination rank, every
stored cell it owns and every access offset, the cell read is attributed to
the rank whose interior holds it; each (src, dst) pair reports the bounding
box of those cells. Frozen in test_lowering.cpp."""
import itertools


def block(n, k):
    base, rem = divmod(n, k)
    small = k - rem
    parts, lb = [], 0
    for i in range(k):
        ln = base + (1 if i >= small else 0)
        parts.append((lb, lb + ln))
        lb += ln
    return parts


def messages(extents, P, Q, lo, hi, offsets):
    """Stored cells are lo..hi-1 (0-based, inclusive-exclusive) per dim."""
    rows, cols = (P * Q, 1) if len(extents) == 1 else (P, Q)
    d0 = block(extents[0], rows)
    d1 = block(extents[1], cols) if len(extents) > 1 else [(0, 1)]
    ranks = []
    for p in range(rows):
        for q in range(cols):
            box = [d0[p]] + ([d1[q]] if len(extents) > 1 else []) + [(0, e) for e in extents[2:]]
            ranks.append(box)

    def owner(cell):
        for r, box in enumerate(ranks):
            if all(b[0] <= c < b[1] for c, b in zip(cell, box)):
                return r
        return None

    need = {}
    for dst, box in enumerate(ranks):
        ranges = [range(max(a, l), min(b, h)) for (a, b), l, h in zip(box, lo, hi)]
        for cell in itertools.product(*ranges):
            for off in offsets:
                src_cell = tuple(c + o for c, o in zip(cell, off))
                src = owner(src_cell)
                if src is None or src == dst:
                    continue
                need.setdefault((src, dst), []).append(src_cell)
    out = {}
    for key, cells in sorted(need.items()):
        out[key] = [(min(c[d] for c in cells), max(c[d] for c in cells) + 1) for d in range(len(extents))]
    return ranks, out


def show(name, *args):
    ranks, msgs = messages(*args)
    print(name)
    for r, box in enumerate(ranks):
        print("  rank %d interior %s" % (r, box))
    for (src, dst), box in msgs.items():
        print("  %d -> %d %s" % (src, dst, box))


if __name__ == "__main__":
    print("block(10,3) =", block(10, 3))
    print("block(7,4) =", block(7, 4))
    five = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    show("average 8x8 on 2x2, cells 1..6", [8, 8], 2, 2, [1, 1], [7, 7], five)
    diag = [(1, 1, 0), (-2, 0, 1), (0, -1, -1)]
    show("3d 9x7x4 on 2x2, cells 2..6 x 1..5 x 1..2", [9, 7, 4], 2, 2, [2, 1, 1], [7, 6, 3], diag)
    show("1d 12 on 2x2 (4x1), cells 2..9", [12], 2, 2, [2], [10], [(-2,), (1,)])
