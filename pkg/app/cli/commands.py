# coding:utf-8
"""
holovox command line

    holovox train [--config FILE] [--resume CKPT] [--<config-key> VALUE ...]
    holovox sample --checkpoint CKPT [--n 16] [--cols 4] [--seed 0]
    holovox sweep --checkpoint CKPT [--axis azimuth|elevation] [--steps 8]
    holovox interpolate --checkpoint CKPT --seed-a A --seed-b B [--steps 8]
    holovox mix --checkpoint CKPT --seeds-3d 1,2,3 --seeds-2d 4,5
    holovox gradcheck [--instances 3]

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
import argparse
import dataclasses
import logging
import sys
from typing import List, Sequence

import numpy as np

from core.common.config import readKeyValueFile
from core.common.exception_handler import ConfigError, HoloError
from core.common.image_utils import writeGrid
from core.nn.geometry import Pose
from core.tensor.tensor import Tensor, get_default_dtype, no_grad

from ..common.config import LOSS_FILE, VERSION, TrainConfig
from ..common.loss_log import loadLossLog, summarizeLossLog
from ..train.sampling import sample_latent, sample_poses, sweep_angles
from ..train.trainer import TrainState, load_checkpoint, resume_config, train
from .gradcheck_suite import run_suite


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# ---------------------------------------------------------------- helpers

def flagName(key: str) -> str:
    """ config key -> command line flag, `batch_size` -> `--batch-size` """
    return "--" + key.replace("_", "-")


def _seeds(text: str) -> List[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")

    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")

    return seeds


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")

    return value


def _latent(seed: int, dim: int) -> Tensor:
    return sample_latent(np.random.default_rng(seed), dim, 1)


def _render(state: TrainState, z1: Tensor, z2: Tensor, pose: Pose) -> np.ndarray:
    with no_grad():
        return state.generator(z1, z2, pose).numpy()[0]


def _write(images: Sequence[np.ndarray], cols: int, path: str):
    writeGrid(list(images), cols, path)
    logger.info("wrote %d image(s) to %s", len(images), path)


# ---------------------------------------------------------------- commands

def cmd_train(args) -> int:
    # only keys set in --config or on the command line count as overrides
    overrides = readKeyValueFile(args.config) if args.config else {}
    for item in TrainConfig.items():
        value = getattr(args, item.name)
        if value is not None:
            overrides[item.name] = value

    if args.resume:
        cfg = resume_config(args.resume, overrides)
    else:
        cfg = TrainConfig()
        for key, value in overrides.items():
            cfg.set(key, value)

    cfg.validate()
    state = train(cfg, resume=args.resume, progress=not args.no_progress)

    summary = summarizeLossLog(loadLossLog(str(state.cfg.outDir / LOSS_FILE)))
    logger.info("finished at step %d, loss means (first vs last window):\n%s", state.step, summary.to_string())
    return 0


def cmd_sample(args) -> int:
    state = load_checkpoint(args.checkpoint)
    rng = np.random.default_rng(args.seed)
    z = sample_latent(rng, state.cfg.latentDim, args.n)
    poses = sample_poses(rng, state.poseRange, args.n)
    with no_grad():
        images = state.generator(z, z, poses).numpy()

    _write(images, args.cols, args.out)
    return 0


def sweep_poses(state: TrainState, axis: str, steps: int) -> List[Pose]:
    """ poses along one axis of the configured range, the other components at their midpoint """
    r, mid = state.poseRange, state.poseRange.midpoint()
    if axis == "azimuth":
        return [dataclasses.replace(mid, azimuth=float(a)) for a in sweep_angles(r.azimuth_min, r.azimuth_max, steps)]

    return [dataclasses.replace(mid, elevation=float(e))
            for e in sweep_angles(r.elevation_min, r.elevation_max, steps)]


def cmd_sweep(args) -> int:
    state = load_checkpoint(args.checkpoint)
    z = _latent(args.seed, state.cfg.latentDim)
    images = [batch[0] for batch in state.generator.render_sweep(z, z, sweep_poses(state, args.axis, args.steps))]
    _write(images, args.steps, args.out)
    return 0


def interpolate_latents(za: Tensor, zb: Tensor, steps: int) -> List[Tensor]:
    """ `(1 - t) * za + t * zb` for `steps` values of t evenly spaced over [0, 1] """
    a, b = za.numpy(), zb.numpy()
    return [Tensor((1.0 - t) * a + t * b, dtype=get_default_dtype()) for t in np.linspace(0.0, 1.0, steps)]


def cmd_interpolate(args) -> int:
    state = load_checkpoint(args.checkpoint)
    dim, pose = state.cfg.latentDim, state.poseRange.midpoint()
    codes = interpolate_latents(_latent(args.seed_a, dim), _latent(args.seed_b, dim), args.steps)
    _write([_render(state, z, z, pose) for z in codes], args.steps, args.out)
    return 0


def cmd_mix(args) -> int:
    """ row i uses the 3D code of `seeds_3d[i]`, column j the 2D code of `seeds_2d[j]` """
    state = load_checkpoint(args.checkpoint)
    dim, pose = state.cfg.latentDim, state.poseRange.midpoint()
    if state.cfg.traditionalZ:
        logger.warning("generator maps z to its input layer, the 2D codes have no effect")

    rows = [_latent(s, dim) for s in args.seeds_3d]
    cols = [_latent(s, dim) for s in args.seeds_2d]
    _write([_render(state, z1, z2, pose) for z1 in rows for z2 in cols], len(cols), args.out)
    return 0


def cmd_gradcheck(args) -> int:
    results = run_suite(instances=args.instances, seed=args.seed)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:<28} {status:<5} {r.error:.3e}" + (f"  {r.message}" if r.message else ""))

    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return 1 if failed else 0


# ---------------------------------------------------------------- parser

def _addTrainFlags(parser: argparse.ArgumentParser):
    groups = {}
    for item in TrainConfig.items():
        if item.group not in groups:
            groups[item.group] = parser.add_argument_group(item.group.lower())

        group = groups[item.group]
        text = f"{item.help} (default: {item.serialize(item.defaultValue)})".replace("%", "%%")
        if isinstance(item.defaultValue, bool):
            group.add_argument(flagName(item.name), dest=item.name, action=argparse.BooleanOptionalAction,
                               default=None, help=text)
        else:
            group.add_argument(flagName(item.name), dest=item.name, default=None, metavar="VALUE", help=text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging verbosity")

    parser = argparse.ArgumentParser(prog="holovox", allow_abbrev=False,
                                     description="3D-aware image generation from unlabelled images")
    parser.add_argument("--version", action="version", version=f"holovox {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], allow_abbrev=False, help="train or resume a model")
    p.add_argument("--config", help="flat `key = value` config file, flags override it")
    p.add_argument("--resume", help="checkpoint file or run folder to continue from")
    p.add_argument("--no-progress", action="store_true", help="hide the progress bar")
    _addTrainFlags(p)
    p.set_defaults(run=cmd_train)

    def withCheckpoint(name, helpText, out):
        p = sub.add_parser(name, parents=[common], allow_abbrev=False, help=helpText)
        p.add_argument("--checkpoint", required=True, help="checkpoint file or run folder")
        p.add_argument("--out", default=out, help=f"output PNG (default: {out})")
        return p

    p = withCheckpoint("sample", "grid of random samples at random poses", "samples.png")
    p.add_argument("--n", type=_positive, default=16, help="number of samples")
    p.add_argument("--cols", type=_positive, default=4, help="grid columns")
    p.add_argument("--seed", type=int, default=0, help="latent and pose seed")
    p.set_defaults(run=cmd_sample)

    p = withCheckpoint("sweep", "one identity under a sweep of one pose angle", "sweep.png")
    p.add_argument("--axis", choices=["azimuth", "elevation"], default="azimuth", help="swept angle")
    p.add_argument("--steps", type=_positive, default=8, help="number of angles")
    p.add_argument("--seed", type=int, default=0, help="latent seed")
    p.set_defaults(run=cmd_sweep)

    p = withCheckpoint("interpolate", "linear interpolation between two latent codes", "interpolate.png")
    p.add_argument("--seed-a", type=int, required=True, help="seed of the first code")
    p.add_argument("--seed-b", type=int, required=True, help="seed of the second code")
    p.add_argument("--steps", type=_positive, default=8, help="number of interpolation steps")
    p.set_defaults(run=cmd_interpolate)

    p = withCheckpoint("mix", "grid combining 3D codes (rows) with 2D codes (columns)", "mix.png")
    p.add_argument("--seeds-3d", type=_seeds, required=True, help="comma separated seeds of z1")
    p.add_argument("--seeds-2d", type=_seeds, required=True, help="comma separated seeds of z2")
    p.set_defaults(run=cmd_mix)

    p = sub.add_parser("gradcheck", parents=[common], allow_abbrev=False,
                       help="compare every analytic gradient with finite differences")
    p.add_argument("--instances", type=_positive, default=3, help="random instances per case")
    p.add_argument("--seed", type=int, default=0, help="seed of the random instances")
    p.set_defaults(run=cmd_gradcheck)

    return parser


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, force=True)
    try:
        return args.run(args)
    except ConfigError as e:
        logger.error("%s", e)
        return 2
    except HoloError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
