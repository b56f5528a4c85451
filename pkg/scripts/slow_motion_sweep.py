"""Desk-scale slow-motion dichotomy: two layers on [-1, 1], collapse time against eps.

Fits log t against 1/eps for n = p = 2 and against log(1/eps) for p = 2, n = 4,
and prints both fits with the ratio of collapse times at the smallest eps.
"""
import argparse
from pathlib import Path

from slowlayers.harness import RunConfig, SweepConfig, run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.10, 0.12, 0.14])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", help="directory for sweep.csv / fit.csv / sweep.json")
    args = ap.parse_args()

    eps = tuple(sorted(args.eps))
    results = {}
    for label, n in (("critical", 2.0), ("degenerate", 4.0)):
        base = RunConfig(p=2.0, n=n, eps=eps[0], domain=(-1.0, 1.0), jumps=(-0.5, 0.4), t_end=1e9,
                         name=f"desk-{label}")
        out = str(Path(args.out) / label) if args.out else None
        res = run_sweep(SweepConfig(base, "eps", eps, workers=args.workers, output_dir=out))
        results[label] = res
        print(f"{label} (p=2, n={n:g})")
        for row in res.rows:
            t = f"{row.t_collapse:.4g}" if row.t_collapse is not None else "-"
            print(f"  eps={row.value:<6g} t_collapse={t:>10s}  {row.status}")
        if res.fit is not None:
            print(f"  slope={res.fit.slope:.4g}  R2={res.fit.r2:.5f}")
        else:
            print(f"  no fit: {res.fit_error}")
    tc = results["critical"].rows[0].t_collapse
    td = results["degenerate"].rows[0].t_collapse
    if tc and td:
        print(f"ratio at eps={eps[0]:g}: {tc / td:.1f}")


if __name__ == "__main__":
    main()
