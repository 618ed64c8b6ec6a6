#!/usr/bin/env python3
"""Build the bundled allcurves extract from PARI's elldata package.

elldata (J. E. Cremona's tables, packaged for PARI/GP) ships one file per
block of 1000 conductors.  Each entry is [N, [label, [a1,a2,a3,a4,a6], gens], ...];
the rank is the number of Mordell-Weil generators.  Torsion orders are
recomputed with cypari2.

Usage:
    python3 scripts/make_allcurves_extract.py ELLDATA_DIR MAX_CONDUCTOR > data/allcurves.00001-20000

The elldata directory can be obtained from the `passagemath-pari-elldata`
wheel (sage_wheels/share/pari/elldata) or from the PARI packages page.
"""

import re
import sys

import cypari2

LABEL = re.compile(r"^(\d+)([a-z]+)(\d+)$")


def main():
    elldata, max_n = sys.argv[1], int(sys.argv[2])
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9, silent=True)
    for block in range(0, max_n // 1000 + 1):
        raw = open(f"{elldata}/ell{block}").read()
        for entry in pari(raw):
            n = int(entry[0])
            if n > max_n:
                continue
            for curve in entry[1:]:
                label = str(curve[0])
                m = LABEL.match(label)
                ainvs = [int(a) for a in curve[1]]
                rank = len(curve[2])
                tors = int(pari.elltors(pari.ellinit(ainvs))[0])
                print(f"{n} {m.group(2)} {m.group(3)} [{','.join(map(str, ainvs))}] {rank} {tors}")


if __name__ == "__main__":
    main()
