import argparse
import json
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    datefmt="%H:%M:%S",
)

from pathchain import io
from pathchain.chains import MarkovChain, entropy_rate, mean_squared_step, rnmc, validate
from pathchain.config import OUTPUT_DIR_ENV, PipelineConfig, dump_config, load_pipeline_config
from pathchain.embedding import diffusion_map
from pathchain.errors import InputError, PathchainError
from pathchain.geometry import (
    DistanceMatrix,
    KernelMatrix,
    PointCloud,
    anisotropic_kernel,
    bandwidth_percentile,
    gaussian_kernel,
    pairwise_distances,
    phate_kernel,
)
from pathchain.ising import DEFAULT_BURN_IN, DEFAULT_L, DEFAULT_THINNING, metropolis_sample
from pathchain.maxent import (
    chain_from_perron,
    chain_from_scaling,
    perron,
    prior_kernel,
    sinkhorn_scale,
)
from pathchain.targets import (
    StationaryTarget,
    energy_bias_target,
    entropy_logistic_target,
    uniform_target,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_INPUT = 2


def _build_kernel(config: PipelineConfig, distances: DistanceMatrix) -> KernelMatrix:
    if config.kernel == "phate":
        kernel = phate_kernel(distances, k=config.k, beta=config.beta)
    else:
        epsilon = config.epsilon or bandwidth_percentile(distances, config.percentile)
        kernel = gaussian_kernel(distances, epsilon)
    return anisotropic_kernel(kernel, config.alpha)


def _build_target(config: PipelineConfig, cloud: PointCloud, meta) -> StationaryTarget | None:
    if config.target is None:
        return None
    if config.target == "uniform":
        return uniform_target(cloud.size, cloud.ids)
    if config.target == "energy-bias":
        if config.energy_column not in meta.columns:
            raise InputError(f"input has no {config.energy_column!r} column for the energy-bias target")
        energies = meta[config.energy_column].to_numpy()
        return energy_bias_target(energies, config.beta_new, config.beta_old, cloud.ids)
    if config.target == "entropy":
        return entropy_logistic_target(cloud.points, cloud.ids)
    return io.read_target(Path(config.target_file), cloud.ids)


def _build_chain(
    config: PipelineConfig, kernel: KernelMatrix, target: StationaryTarget | None, telemetry: dict,
) -> MarkovChain:
    if config.chain == "rnmc":
        return rnmc(kernel)

    provenance = "pnmc_update" if config.chain == "pnmc-update" else None
    if config.chain == "pnmc-update":
        prior = io.read_chain(Path(config.prior_chain), Path(config.prior_stationary))
        if prior.ids != kernel.ids:
            raise InputError("prior chain ids do not match the point cloud")
        kernel = prior_kernel(kernel, prior)

    if target is None:
        pair = perron(kernel, tol=config.tol, method=config.perron_method)
        telemetry["perron"] = pair.to_dict()
        return chain_from_perron(kernel, pair, provenance or "pnmc_free")

    scaling = sinkhorn_scale(kernel, target, tol=config.tol, max_iter=config.max_iter)
    telemetry["sinkhorn"] = scaling.to_dict()
    return chain_from_scaling(kernel, target, scaling, provenance or "pnmc_prescribed")


def cmd_embed(
    config: PipelineConfig,
    input_path: Path,
    write_chain: bool = False,
    with_telemetry: bool = False,
    meta_columns: tuple[str, ...] = io.SAMPLE_META_COLUMNS,
) -> int:
    out_dir = config.resolve_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    # the energy column feeds the energy-bias target, never the geometry
    meta_columns = tuple(dict.fromkeys([*meta_columns, config.energy_column]))
    cloud, meta = io.read_point_cloud(input_path, meta_columns=meta_columns)
    distances = pairwise_distances(cloud)
    kernel = _build_kernel(config, distances)
    target = _build_target(config, cloud, meta)
    telemetry: dict = {}
    chain = _build_chain(config, kernel, target, telemetry)
    embedding = diffusion_map(chain, m=config.m, tol=config.audit_tol)
    report = validate(chain, tol=config.audit_tol)

    dump_config(config, out_dir / "config.yaml")
    io.write_embedding(out_dir / "embedding.csv", embedding, cloud.ids)
    io.write_json(out_dir / "eigenvalues.json", embedding.to_dict())
    io.write_json(out_dir / "diagnostics.json", {
        "kernel": kernel.describe(),
        "chain": chain.provenance,
        "report": report.to_dict(),
        "mean_squared_step": mean_squared_step(chain, distances.d),
        "entropy_rate": entropy_rate(chain),
    })
    if write_chain:
        io.write_chain(out_dir, chain, cloud.ids)
    if with_telemetry:
        io.write_json(out_dir / "telemetry.json", telemetry)

    print(f"Embedding of {cloud.size} points written to {out_dir}")
    return EXIT_OK if report.passed else EXIT_CONTRACT


def cmd_ising(args) -> int:
    sample = metropolis_sample(
        L=args.L, k_BT=args.temperature, n_samples=args.n_samples,
        burn_in=args.burn_in, thinning=args.thinning, seed=args.seed, start=args.start,
    )
    out = Path(args.out) if args.out else PipelineConfig().resolve_output_dir() / "ising.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_ising_sample(out, sample)
    print(f"{sample.size} configurations written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    chain = io.read_chain(Path(args.chain), Path(args.stationary))
    report = validate(chain, tol=args.tol)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.passed else EXIT_CONTRACT


def cmd_target(args) -> int:
    if args.kind == "custom":
        target = io.read_target(Path(args.input))
        ids = target.ids
    else:
        cloud, meta = io.read_point_cloud(Path(args.input))
        ids = cloud.ids
        if args.kind == "uniform":
            target = uniform_target(cloud.size, ids)
        elif args.kind == "entropy":
            target = entropy_logistic_target(cloud.points, ids)
        else:
            if args.beta_new is None or args.beta_old is None:
                raise InputError("energy-bias targets need --beta-new and --beta-old")
            if args.energy_column not in meta.columns:
                raise InputError(f"input has no {args.energy_column!r} column")
            target = energy_bias_target(meta[args.energy_column].to_numpy(), args.beta_new, args.beta_old, ids)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_target(out, target, ids)
    print(f"{target.provenance} target over {target.size} points written to {out}")
    return EXIT_OK


def _fail(payload: dict, code: int) -> int:
    print(json.dumps(payload), file=sys.stderr)
    return code


def _pipeline_overrides(args) -> dict:
    return {
        "kernel": args.kernel,
        "epsilon": args.epsilon,
        "percentile": args.percentile,
        "alpha": args.alpha,
        "k": args.k,
        "beta": args.beta,
        "chain": args.chain,
        "target": args.target,
        "target_file": args.target_file,
        "energy_column": args.energy_column,
        "beta_new": args.beta_new,
        "beta_old": args.beta_old,
        "prior_chain": args.prior_chain,
        "prior_stationary": args.prior_stationary,
        "m": args.m,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "audit_tol": args.audit_tol,
        "perron_method": args.perron_method,
        "output_dir": args.out,
    }


def _meta_columns(args) -> tuple[str, ...]:
    if args.meta_columns is None:
        return io.SAMPLE_META_COLUMNS
    return tuple(c.strip() for c in args.meta_columns.split(",") if c.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Markov chains and diffusion maps on point clouds")
    parser.add_argument("--verbose", action="store_true", help="Log solver iterations")
    sub = parser.add_subparsers(dest="command", required=True)

    embed = sub.add_parser("embed", help="Kernel -> chain -> diffusion map for a CSV point cloud")
    embed.add_argument("input", type=str, help="CSV with id column then coordinates")
    embed.add_argument("--config", type=str, default=None, help="Pipeline YAML config (flags override it)")
    embed.add_argument("--out", type=str, default=None, help=f"Output directory (default: ${OUTPUT_DIR_ENV})")
    embed.add_argument("--kernel", choices=["gaussian", "phate"], default=None)
    embed.add_argument("--epsilon", type=float, default=None, help="Gaussian bandwidth (overrides --percentile)")
    embed.add_argument("--percentile", type=float, default=None, help="Bandwidth percentile of pairwise distances")
    embed.add_argument("--alpha", type=float, default=None, help="Anisotropy exponent in [0, 1]")
    embed.add_argument("--k", type=int, default=None, help="PHATE nearest-neighbour rank")
    embed.add_argument("--beta", type=float, default=None, help="PHATE shape parameter")
    embed.add_argument("--chain", choices=["rnmc", "pnmc-free", "pnmc-prescribed", "pnmc-update"], default=None)
    embed.add_argument("--target", choices=["uniform", "energy-bias", "entropy", "custom"], default=None)
    embed.add_argument("--target-file", type=str, default=None, help="Custom target CSV (id, probability)")
    embed.add_argument("--energy-column", type=str, default=None)
    embed.add_argument("--beta-new", type=float, default=None, help="Inverse temperature to reweight to")
    embed.add_argument("--beta-old", type=float, default=None, help="Inverse temperature of the samples")
    embed.add_argument("--prior-chain", type=str, default=None, help="Prior q.csv for pnmc-update")
    embed.add_argument("--prior-stationary", type=str, default=None, help="Prior p.csv for pnmc-update")
    embed.add_argument("--m", type=int, default=None, help="Number of diffusion coordinates")
    embed.add_argument("--tol", type=float, default=None, help="Solver tolerance")
    embed.add_argument("--max-iter", type=int, default=None, help="Scaling iteration cap")
    embed.add_argument("--audit-tol", type=float, default=None, help="Tolerance of the chain audit")
    embed.add_argument("--perron-method", choices=["eigh", "power"], default=None)
    embed.add_argument("--write-chain", action="store_true", help="Also write q.csv and p.csv")
    embed.add_argument("--telemetry", action="store_true", help="Write solver telemetry JSON")
    embed.add_argument(
        "--meta-columns", type=str, default=None,
        help="Comma-separated columns kept out of the coordinates (default: energy,magnetization)",
    )

    ising = sub.add_parser("ising", help="Sample 2-D Ising configurations with Metropolis")
    ising.add_argument("--L", type=int, default=DEFAULT_L, help="Lattice side")
    ising.add_argument("--temperature", type=float, default=2.4, help="k_B T")
    ising.add_argument("--n-samples", type=int, default=1000)
    ising.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN, help="Sweeps before recording")
    ising.add_argument("--thinning", type=int, default=DEFAULT_THINNING, help="Sweeps between records")
    ising.add_argument("--start", choices=["random", "up"], default="random")
    ising.add_argument("--seed", type=int, default=0)
    ising.add_argument("--out", type=str, default=None, help="Output CSV path")

    check = sub.add_parser("validate", help="Audit a chain written by embed --write-chain")
    check.add_argument("--chain", type=str, required=True, help="q.csv")
    check.add_argument("--stationary", type=str, required=True, help="p.csv")
    check.add_argument("--tol", type=float, default=1e-8)

    target = sub.add_parser("target", help="Build a stationary target CSV")
    target.add_argument("kind", choices=["uniform", "energy-bias", "entropy", "custom"])
    target.add_argument("input", type=str, help="Point cloud CSV (or target CSV for custom)")
    target.add_argument("--out", type=str, required=True)
    target.add_argument("--beta-new", type=float, default=None)
    target.add_argument("--beta-old", type=float, default=None)
    target.add_argument("--energy-column", type=str, default="energy")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger("pathchain").setLevel(logging.DEBUG)

    config = None
    if args.command == "embed":
        config_path = Path(args.config) if args.config else None
        try:
            config = load_pipeline_config(config_path).with_overrides(_pipeline_overrides(args))
        except (OSError, ValueError, TypeError) as e:
            return _fail({"error": "ConfigError", "message": str(e)}, EXIT_INPUT)

    try:
        if args.command == "embed":
            return cmd_embed(config, Path(args.input), args.write_chain, args.telemetry, _meta_columns(args))
        if args.command == "ising":
            return cmd_ising(args)
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_target(args)
    except InputError as e:
        return _fail(e.to_dict(), EXIT_INPUT)
    except OSError as e:
        path = None if e.filename is None else str(e.filename)
        return _fail({"error": "InputError", "message": str(e), "path": path}, EXIT_INPUT)
    except PathchainError as e:
        return _fail(e.to_dict(), EXIT_CONTRACT)


def main():
    sys.exit(run())
