"""Print the three MSE comparison tables over several seeds.

    python scripts/reproduce_tables.py --seeds 0 1 2 3 4 --parallel 4
"""
import argparse

from uuvnav.evaluation import run_comparison
from uuvnav.experiments import TABLES, TITLES, table_axes, table_configs
from uuvnav.sim import ScenarioConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--duration", type=float, default=200.0)
    ap.add_argument("--parallel", type=int, default=1)
    ap.add_argument("--tables", nargs="+", default=list(TABLES), choices=TABLES)
    args = ap.parse_args()

    base = ScenarioConfig(duration=args.duration)
    for table in args.tables:
        rep = run_comparison(table_configs(table, base), args.seeds, workers=args.parallel)
        print(rep.to_table(table_axes(table), title=f"{table}: {TITLES[table]}"))


if __name__ == "__main__":
    main()
