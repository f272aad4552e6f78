"""LE-vs-N plot data for tensors without LRLE, with the fitted decay and
the contraction bound.

    python scripts/le_curves.py --out results/decay
"""

from __future__ import annotations

import argparse
import csv
import json
from dataclasses import dataclass
from pathlib import Path

from lrle import catalog as cat
from lrle.le import estimate_decay


@dataclass
class Config:
    s_max: int = 6
    noise: float = 1e-2
    random_seeds: int = 5
    seed: int = 0
    out: Path = Path("results/decay")


def tensors(cfg: Config):
    yield "product", cat.make_product().tensor
    yield f"example2_noise{cfg.noise:g}", cat.perturbed(cat.make_example2(), cfg.noise, seed=cfg.seed)
    for s in range(cfg.random_seeds):
        yield f"random_d2_D2_seed{s}", cat.make_random_canonical(2, 2, s).tensor
        yield f"random_d2_D3_seed{s}", cat.make_random_canonical(2, 3, s).tensor


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Config.out)
    ap.add_argument("--smax", type=int, default=Config.s_max)
    ap.add_argument("--noise", type=float, default=Config.noise)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = Config(s_max=args.smax, noise=args.noise, seed=args.seed, out=args.out)
    cfg.out.mkdir(parents=True, exist_ok=True)

    fits = {}
    with open(cfg.out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tensor", "N", "raw_sum"])
        for name, t in tensors(cfg):
            de = estimate_decay(t, s_max=cfg.s_max, seed=cfg.seed)
            for n, r in zip(de.Ns, de.raw_sums):
                w.writerow([name, n, repr(r)])
            fits[name] = {k: v for k, v in de.to_dict().items() if k not in ("Ns", "raw_sums")}
            print(f"{name:24s} rate={de.fit_rate:10.4g} R2={de.fit_r2:.6f} delta*={de.delta_star:.3g} s*={de.s_star}")
    (cfg.out / "fits.json").write_text(json.dumps(fits, indent=1, sort_keys=True, default=str) + "\n")


if __name__ == "__main__":
    main()
