"""Mean channel entropy against best CS over the default matrix, across a noise ladder.

    python3 scripts/entropy_vs_cs.py --noise 0,1,4,16,64
"""
import argparse

import numpy as np

from lpcmbench.bench import best_cs, enumerate_matrix, run_matrix, spearman
from lpcmbench.entropy import analyze_corpus
from lpcmbench.synth import SynthSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", default="0,1,4,16,64")
    ap.add_argument("--rate", type=int, default=12_000)
    ap.add_argument("--seconds", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=8)
    args = ap.parse_args()

    specs = enumerate_matrix()
    print("noise_lsb mean_entropy_bits best_cs_pct best_spec")
    H, cs = [], []
    for noise in (float(x) for x in args.noise.split(",")):
        spec = SynthSpec(sampling_rate=args.rate, duration=args.seconds, noise_lsb=noise,
                         harmonics=[(3, 0.08, 0.4)], amplitude_utilization=0.8, seed=args.seed)
        ds = generate(spec)
        H.append(float(np.mean([r.entropy_bits for r in analyze_corpus([ds])])))
        records = run_matrix([ds], specs, f"noise{noise:g}")
        cs.append(best_cs(records))
        top = min(records, key=lambda r: (r.cs_pct, r.spec_name))
        print(f"{noise:g} {H[-1]:.3f} {cs[-1]:.2f} {top.spec_name}")
    print(f"# spearman {spearman(H, cs):.3f}")


if __name__ == "__main__":
    main()
