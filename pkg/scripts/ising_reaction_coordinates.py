#!/usr/bin/env python3
"""Diffusion-map reaction coordinates of Metropolis Ising samples.

Usage:
    python scripts/ising_reaction_coordinates.py                   # L=16, 1000 samples
    python scripts/ising_reaction_coordinates.py --L 20 --n-samples 2000
    python scripts/ising_reaction_coordinates.py --temperature 2.25 --target-temperature 2.25
"""

from __future__ import annotations

import argparse
import json
import logging
from dataclasses import asdict

from pathchain.experiments import ISING_THINNING, ising_reaction_coordinates
from pathchain.ising import metropolis_sample

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    datefmt="%H:%M:%S",
)


def main():
    parser = argparse.ArgumentParser(description="RNMC vs energy-biased PNMC on Ising samples")
    parser.add_argument("--L", type=int, default=16, help="Lattice side")
    parser.add_argument("--temperature", type=float, default=2.4, help="Sampling k_B T")
    parser.add_argument("--target-temperature", type=float, default=2.25, help="k_B T the PNMC reweights to")
    parser.add_argument("--n-samples", type=int, default=1000)
    parser.add_argument("--percentile", type=float, default=10.0, help="Bandwidth percentile")
    parser.add_argument("--thinning", type=int, default=ISING_THINNING, help="Sweeps between records")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sample = metropolis_sample(
        L=args.L, k_BT=args.temperature, n_samples=args.n_samples, thinning=args.thinning, seed=args.seed,
    )
    results = ising_reaction_coordinates(sample, args.percentile, args.target_temperature)
    print(json.dumps({name: asdict(r) for name, r in results.items()}, indent=2))


if __name__ == "__main__":
    main()
