"""Top-N representation ranking for two contrasting synthetic corpora.

A well-calibrated corpus (85% of full scale, realistic noise) against an
under-calibrated one (5% of full scale, little noise).

    python3 scripts/matrix_ranking.py --top 30
"""
import argparse

from lpcmbench.bench import enumerate_matrix, ranking_markdown, run_matrix
from lpcmbench.entropy import analyze_corpus, reports_to_table
from lpcmbench.synth import SynthSpec, generate

CORPORA = {
    "well-calibrated": dict(amplitude_utilization=0.85, noise_lsb=24.0, harmonics=[(3, 0.1, 0.3), (5, 0.05, 1.0)]),
    "under-calibrated": dict(amplitude_utilization=0.05, noise_lsb=1.0, harmonics=[(3, 0.1, 0.3)]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--top", type=int, default=30)
    ap.add_argument("--rate", type=int, default=50_000)
    ap.add_argument("--seconds", type=float, default=1.0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    specs = enumerate_matrix()
    for name, kw in CORPORA.items():
        spec = SynthSpec(sampling_rate=args.rate, duration=args.seconds, freq_wander_hz=0.02, seed=1, **kw)
        ds = generate(spec, ["voltage", "current_l1", "current_l2"])
        print(f"## {name}\n")
        print(reports_to_table(name, analyze_corpus([ds])))
        print(ranking_markdown(run_matrix([ds], specs, name, jobs=args.jobs), args.top))


if __name__ == "__main__":
    main()
