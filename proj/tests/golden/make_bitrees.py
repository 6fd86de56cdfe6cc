#!/usr/bin/env python3
"""Writes bitrees_J<k>.txt: every chronicle of length k with its node table.

Independent of the C++ code. Chronicles are listed with the terminal chosen at
each generation running over ids in increasing order.
"""
import sys
from pathlib import Path


def nodes_of(chronicle):
    nodes = [(0, -1, 0, 1, 0), (1, -1, 0, -1, 0)]
    for gen, a in enumerate(chronicle, start=1):
        eps = nodes[a][3]
        base = len(nodes)
        for slot, parity in ((1, eps), (2, -eps), (3, eps)):
            nodes.append((base + slot - 1, a, slot, parity, gen))
    return nodes


def chronicles(J):
    out = []

    def grow(prefix):
        if len(prefix) == J:
            out.append(list(prefix))
            return
        count = 2 + 3 * len(prefix)
        for a in range(count):
            if a not in prefix:
                grow(prefix + [a])

    grow([0])
    return out


def main(target):
    for J in (1, 2, 3):
        lines = []
        for k, ch in enumerate(chronicles(J)):
            lines.append(f"# tree {k} chronicle={','.join(map(str, ch))}")
            lines.extend(", ".join(map(str, n)) for n in nodes_of(ch))
        (target / f"bitrees_J{J}.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent)
