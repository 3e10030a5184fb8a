"""Byte-statistics table for a handful of files (for example a text file,
a BMP, a WAV, a JPEG and an MP3) in the column layout of the classic
randomness-test comparison.

    python scripts/ent_table.py novel.txt image.bmp sound.wav photo.jpg song.mp3
"""

import argparse
from pathlib import Path

from scipy.stats import chi2

from sidechannel.stats import fingerprint_file

ROWS = [
    ("entropy", lambda f: f"{f.entropy:.2f}"),
    ("compression %", lambda f: f"{f.compression_rate:.0f}"),
    ("chi-square", lambda f: f"{f.chisq_statistic:.2f}"),
    ("chi-square p %", lambda f: f"{100 * chi2.sf(f.chisq_statistic, 255):.2f}"),
    ("mean", lambda f: f"{f.arith_mean:.2f}"),
    ("monte-carlo pi", lambda f: f"{f.monte_pi:.4f}"),
    ("pi error %", lambda f: f"{f.err_monte_pi:.2f}"),
    ("serial corr", lambda f: "undefined" if f.corr_undefined else f"{f.serial_corr:.6f}"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="+")
    args = ap.parse_args()
    fps = [fingerprint_file(p) for p in args.files]
    names = [Path(p).name[:14] for p in args.files]
    print(f"{'':<16}" + "".join(f"{n:>16}" for n in names))
    for label, fmt in ROWS:
        print(f"{label:<16}" + "".join(f"{fmt(fp):>16}" for fp in fps))


if __name__ == "__main__":
    main()
