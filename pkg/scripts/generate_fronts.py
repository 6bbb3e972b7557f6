"""Regenerate the stored MultiZeno reference fronts with the exhaustive oracle."""
import sys
import time
from pathlib import Path

from aggplan.multizeno import STORED_TAX2, ZenoSpec, front_search
from aggplan.objectives import write_front_csv

OUT = Path(__file__).resolve().parents[1] / "src" / "aggplan" / "data"


def main(argv):
    sizes = [int(a) for a in argv] or [3, 6, 9]
    for n in sizes:
        for tag, tax2 in STORED_TAX2.items():
            spec = ZenoSpec(passengers=n, tax2=tax2)
            t0 = time.time()
            front = front_search(spec)
            dt = time.time() - t0
            write_front_csv(
                OUT / f"zeno{n}_tax2-{tag}.csv",
                front,
                comment=f"zeno{n} tax(city2)={tag}: exhaustive bi-objective search "
                f"(aggplan.oracle.pareto_search), {len(front)} points",
            )
            print(f"zeno{n} tax2={tag}: {len(front)} points in {dt:.1f}s", flush=True)


if __name__ == "__main__":
    main(sys.argv[1:])
