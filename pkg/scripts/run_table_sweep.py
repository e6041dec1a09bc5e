"""Run the feed x interval sweep and print the error table with its trend report.

    python3 scripts/run_table_sweep.py [--config cfg.json] [--out out/sweep.csv]
"""

import argparse
import os

from hobsim.harness import check_trends, load_config, provenance_line, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out", default="out/sweep.csv")
    args = ap.parse_args()
    cfg = load_config(args.config)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    cfg = type(cfg)(**{**cfg.__dict__, "table_path": args.out})
    print(provenance_line(cfg))
    table = run_sweep(cfg, lambda r: print(f"  feed {r.feed:g}, {r.interval:g} deg: "
                                           f"{r.error or f'{r.max_abs_error:.5f} um'}", flush=True))
    print(table.format())
    print("\n".join(check_trends(table).lines()))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
