"""Print comfort and critical scene counts per layout class and participant mix.

    python3 scripts/count_sweep.py [--ppl N]

Handy for checking how the catalog size grows with grid density.
"""

import argparse

from sceneforge.kbformat import load_kb, sample_kb_path
from sceneforge.pipeline import GenerationConfig, generate
from sceneforge.scene import CapacityError

MIXES = ({"Car": 1}, {"Car": 2}, {"Car": 1, "Truck": 1}, {"Car": 3})


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--ppl", type=int, default=1)
    ap.add_argument("--weather", default="Sunny")
    args = ap.parse_args()
    kb = load_kb(sample_kb_path())
    print(f"{'layout':8} {'mix':16} {'layouts':>7} {'candidates':>10} {'comfort':>8} {'critical':>8}")
    for owner in ("RQ31", "RQ36", "RQ43_5"):
        for mix in MIXES:
            cfg = GenerationConfig(layouts=(owner,), positions_per_lane=args.ppl, participants=mix, weather=(args.weather,), jobs=1)
            try:
                r = generate(cfg, kb).report()
            except CapacityError:
                continue
            label = ",".join(f"{k}={v}" for k, v in mix.items())
            print(f"{owner:8} {label:16} {r['layouts']:7} {r['candidate_scenes']:10} {r['comfort_scenes']:8} {r['critical_scenes']:8}")


if __name__ == "__main__":
    main()
