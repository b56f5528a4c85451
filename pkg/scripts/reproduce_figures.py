"""Run the registered figure scenarios to first collapse and tabulate the result.

    python scripts/reproduce_figures.py                 # short scenarios only
    python scripts/reproduce_figures.py --allow-long    # include p=n=4 and p=5.5
    python scripts/reproduce_figures.py fig-pi --out results/
"""
import argparse
import json
import time
from pathlib import Path

from slowlayers.harness import SCENARIOS, reproduce


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="scenario names (default: every fig-* scenario)")
    ap.add_argument("--allow-long", action="store_true")
    ap.add_argument("--out", help="directory for per-scenario artifacts")
    args = ap.parse_args()

    names = args.names or [k for k in SCENARIOS if k.startswith("fig-")]
    rows = []
    for name in names:
        if SCENARIOS[name].long and not args.allow_long:
            print(f"{name:22s} skipped (long; pass --allow-long)")
            continue
        out = str(Path(args.out) / name) if args.out else None
        t0 = time.perf_counter()
        res, verdict = reproduce(name, allow_long=args.allow_long, output_dir=out)
        wall = time.perf_counter() - t0
        t, ref = verdict["t_collapse"], verdict["reference_t"]
        ref_s = f"{ref:.3g}" if ref else "-"
        t_s = f"{t:.3g}" if t is not None else "none"
        print(f"{name:22s} t_collapse={t_s:>9s}  reference={ref_s:>7s}  "
              f"factor10={verdict['within_factor_10']!s:5s}  steps={res.summary()['steps']:6d}  {wall:6.1f}s")
        rows.append({**verdict, "wall_s": wall})
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "figures.json").write_text(json.dumps(rows, indent=2) + "\n")


if __name__ == "__main__":
    main()
