"""Multiresolution demo at the demo omega0 and, for contrast, at omega0 = 6.

    python scripts/run_resolution_demo.py --out results/demo
"""

import argparse
import json
import sys
from pathlib import Path

from tfbench.cwt import CwtConfig
from tfbench.demo import DemoConfig, run_demo


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/demo")
    p.add_argument("--omegas", nargs="+", type=float, default=[10.0, 6.0])
    args = p.parse_args(argv)

    for omega0 in args.omegas:
        out = Path(args.out) / f"omega0_{omega0:g}"
        verdict = run_demo(DemoConfig(cwt=CwtConfig(omega0=omega0)), out)
        failed = [k for k, ok in verdict["checks"].items() if not ok]
        print(f"omega0={omega0:g}: {'pass' if verdict['pass'] else 'fail'}" + (f" ({', '.join(failed)})" if failed else ""))
        print(json.dumps(verdict["observed"]["scalogram"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
