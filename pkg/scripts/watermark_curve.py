"""Watermark study: expand 45 + 68 synthetic bases into a watermarked
corpus and print accuracy and tree size against sample size.

    python scripts/watermark_curve.py --per-class 1000 --sizes 200,500,1000,2000
"""

import argparse
import tempfile

from sidechannel.classifiers import train
from sidechannel.dataset import ingest_corpus
from sidechannel.evaluation import TrainerSpec, format_learning_curve, learning_curve
from sidechannel.synth import BaseSpec, ClassTexture, default_watermark, generate_synthetic_bases, synth_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--per-class", type=int, default=1000)
    ap.add_argument("--sizes", default="200,500,1000,2000")
    ap.add_argument("--alpha", type=float, default=0.25)
    ap.add_argument("--algo", default="j48")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = BaseSpec(
        {"nature": ClassTexture(16, sigma_jitter=10), "nonnature": ClassTexture(24, sigma_jitter=10)},
        {"nature": 45, "nonnature": 68},
    )
    bases = generate_synthetic_bases(spec, args.seed)
    with tempfile.TemporaryDirectory() as tmp:
        synth_corpus(bases, default_watermark(), args.alpha, args.per_class, args.seed, tmp)
        ds = ingest_corpus(tmp).dataset
    sizes = [int(s) for s in args.sizes.split(",")]
    print(format_learning_curve(learning_curve(TrainerSpec(args.algo), ds, sizes, 10, args.seed)), end="")
    forest = train("forest", ds, seed=args.seed)
    print(f"\nforest on all {len(ds)} images: out-of-bag error {forest.oob_error:.4f}")


if __name__ == "__main__":
    main()
