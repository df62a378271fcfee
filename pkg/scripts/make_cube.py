"""Write a synthetic low-rank multispectral cube as 16-bit PGM bands."""
import argparse

import numpy as np

from nnsr.imaging import ImagePlane, write_image


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--bands", type=int, default=8)
    ap.add_argument("--rank", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results/cube")
    a = ap.parse_args()

    rng = np.random.default_rng(a.seed)
    # smooth spatial endmembers mixed with random spectra
    yy, xx = np.mgrid[0:a.size, 0:a.size] / a.size
    freqs = rng.uniform(0.5, 3, (a.rank, 2))
    maps = np.stack([0.5 + 0.5 * np.sin(2 * np.pi * (fx * xx + fy * yy))
                     for fx, fy in freqs], axis=-1).reshape(-1, a.rank, order="F")
    cube = maps @ rng.random((a.rank, a.bands))
    cube /= cube.max()
    for b in range(a.bands):
        band = ImagePlane(cube[:, b].reshape(a.size, a.size, order="F"), source_depth=16)
        write_image(band, f"{a.out_dir}/band_{b:02d}.pgm")
    print(f"wrote {a.bands} bands of {a.size}x{a.size} to {a.out_dir}")


if __name__ == "__main__":
    main()
