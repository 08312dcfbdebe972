# coding:utf-8
import logging
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from tqdm import tqdm

from core.common.exception_handler import CheckpointError, ConfigError, NonFiniteError
from core.common.image_utils import writeGrid
from core.tensor import functional as F
from core.tensor.tensor import Tensor, get_default_dtype, no_grad

from ..common.config import (CHECKPOINT_DIR, CHECKPOINT_NAME, CONFIG_FILE, LOSS_FILE, SAMPLE_DIR, SAMPLE_NAME,
                             VERSION, TrainConfig)
from ..common.loss_log import LossLogger
from ..data.dataset import ImageDataset, load_folder, next_batch
from ..data.synthetic import SyntheticSetup, synthesize_dataset
from ..model.discriminator import STYLE_LEVELS, Discriminator
from ..model.generator import Generator, GeneratorConfig
from ..model.losses import (LossReport, LossWeights, gan_loss_d, gan_loss_g, identity_loss, style_loss_d,
                            style_losses_g, sum_terms, total_loss_g)
from .checkpoint import Records, encode_json, read_records, write_records
from .optim import Adam
from .sampling import sample_latent, sample_poses


logger = logging.getLogger(__name__)

SAMPLE_COUNT = 8
SAMPLE_COLS = 4

# independent streams derived from the run seed
INIT_STREAM, TRAIN_STREAM, DATA_STREAM, SAMPLE_STREAM = range(1, 5)


class TrainState:
    """ Everything that determines the rest of a training run

    Parameters
    ----------
    cfg: TrainConfig
        validated run configuration

    dataset: ImageDataset
        training images, its shuffle position is part of the state
    """

    def __init__(self, cfg: TrainConfig, dataset: Optional[ImageDataset] = None):
        self.cfg = cfg.validate()
        self.dataset = dataset
        init = np.random.default_rng([cfg.seed, INIT_STREAM])
        self.generator = Generator(GeneratorConfig.fromTrainConfig(cfg), init)
        self.discriminator = Discriminator(cfg.resolution, cfg.latentDim, init, cfg.channelDivisor)
        self.optG = Adam(self.generator.params, cfg.lrG, cfg.beta1, cfg.beta2, cfg.eps)
        self.optD = Adam(self.discriminator.params, cfg.lrD, cfg.beta1, cfg.beta2, cfg.eps)
        self.rng = np.random.default_rng([cfg.seed, TRAIN_STREAM])
        self.dataRng = np.random.default_rng([cfg.seed, DATA_STREAM])
        self.weights = LossWeights(cfg.lambdaIdentity, cfg.lambdaStyle)
        self.poseRange = cfg.poseRange()
        self.step = 0

    # ------------------------------------------------------------ persistence

    def records(self):
        records = {}
        records.update(self.generator.params.state_dict())
        records.update(self.discriminator.params.state_dict())
        for key, sn in self.discriminator.spectral_state().items():
            records[f"{key}/u"], records[f"{key}/v"] = sn["u"], sn["v"]

        records.update(self.optG.state_dict("opt/g"))
        records.update(self.optD.state_dict("opt/d"))
        if self.dataset is not None:
            for k, v in self.dataset.state().items():
                records[f"data/{k}"] = v

        records["meta/version"] = encode_json(VERSION)
        records["meta/config"] = encode_json(self.cfg.toDict())
        records["meta/step"] = encode_json(self.step)
        records["meta/rng"] = encode_json(self.rng.bit_generator.state)
        records["meta/data_rng"] = encode_json(self.dataRng.bit_generator.state)
        return records

    @classmethod
    def fromRecords(cls, records: Records, dataset: Optional[ImageDataset] = None,
                    cfg: Optional[TrainConfig] = None) -> "TrainState":
        """ restore a state, `cfg` replaces the stored config but must keep its fixed keys """
        stored = config_from_records(records)
        if cfg is None:
            cfg = stored
        else:
            _check_resumable(stored, cfg)

        state = cls(cfg, dataset)
        for params in (state.generator.params, state.discriminator.params):
            params.load_state_dict({k: records[k] for k in params.names()})

        state.discriminator.load_spectral_state({
            key: {"u": records[f"{key}/u"], "v": records[f"{key}/v"]}
            for key in state.discriminator.spectral_state()})
        state.optG.load_state_dict(records, "opt/g")
        state.optD.load_state_dict(records, "opt/d")
        if dataset is not None and "data/order" in records:
            dataset.load_state({"order": records["data/order"], "position": records["data/position"]})

        state.step = int(records.json("meta/step"))
        state.rng.bit_generator.state = records.json("meta/rng")
        state.dataRng.bit_generator.state = records.json("meta/data_rng")
        return state


def config_from_records(records: Records) -> TrainConfig:
    cfg = TrainConfig()
    for key, value in records.json("meta/config").items():
        cfg.set(key, value, parse=True)

    return cfg


def _check_resumable(stored: TrainConfig, cfg: TrainConfig):
    for key in TrainConfig.fixedOnResume():
        if cfg.get(key) != stored.get(key):
            item = TrainConfig.item(key)
            raise ConfigError(f"`{key}` cannot change when resuming: checkpoint has "
                              f"{item.serialize(stored.get(key))}, got {item.serialize(cfg.get(key))}")


def resolve_checkpoint(path: str) -> str:
    """ a checkpoint file, or the latest checkpoint of a run folder """
    if Path(path).is_dir():
        return latest_checkpoint(path)

    return str(path)


def resume_config(checkpoint: str, overrides: Mapping[str, object] = None) -> TrainConfig:
    """ the config of a resumed run

    Starts from the config stored in `checkpoint` and applies only the keys in
    `overrides`. The run folder stays the one holding the checkpoint unless
    `out` is overridden.
    """
    path = Path(resolve_checkpoint(checkpoint))
    records = read_records(str(path))
    stored, cfg = config_from_records(records), config_from_records(records)
    if path.parent.name == CHECKPOINT_DIR:
        cfg.out = str(path.parent.parent)

    for key, value in (overrides or {}).items():
        cfg.set(key, value)

    _check_resumable(stored, cfg)
    return cfg.validate()


def save_checkpoint(state: TrainState, path: str):
    write_records(str(path), state.records())
    logger.info("saved checkpoint %s at step %d", path, state.step)


def load_checkpoint(path: str, dataset: Optional[ImageDataset] = None) -> TrainState:
    """ load a checkpoint file, or the latest checkpoint of a run folder """
    path = resolve_checkpoint(path)
    state = TrainState.fromRecords(read_records(path), dataset)
    logger.info("loaded checkpoint %s at step %d", path, state.step)
    return state


# ---------------------------------------------------------------- steps

def _split(t: Tensor, n: int):
    return t[:n], t[n:]


def _abort(state: TrainState, what: str, values: dict):
    logger.error("non-finite %s at step %d: %s", what, state.step + 1,
                 ", ".join(f"{k}={v!r}" for k, v in values.items()))
    raise NonFiniteError(what)


def train_step(state: TrainState, batch: np.ndarray) -> LossReport:
    """ one discriminator update then one generator update on fresh samples """
    cfg, gen, disc, w = state.cfg, state.generator, state.discriminator, state.weights
    n = len(batch)
    real = Tensor(batch, dtype=get_default_dtype())

    # discriminator: real and fake share one forward, so each spectral norm advances once
    z = sample_latent(state.rng, cfg.latentDim, n)
    poses = sample_poses(state.rng, state.poseRange, n)
    with no_grad():
        fake = gen(z, z, poses, training=True)

    out = disc(F.concat([real, fake], axis=0), update=True)
    logitReal, logitFake = _split(out.logit, n)
    styleSplit = [_split(s, n) for s in out.style_logits]
    dGan = gan_loss_d(logitReal, logitFake)
    dStyle = style_loss_d([r for r, _ in styleSplit], [f for _, f in styleSplit])
    dIdentity = identity_loss(z, out.z_hat[n:])
    dLoss = dGan + F.scalar_mul(dStyle, w.lambda_style)
    if cfg.identityUpdatesD:
        dLoss = dLoss + F.scalar_mul(dIdentity, w.lambda_identity)

    if not np.isfinite(dLoss.item()):
        _abort(state, "d_loss", {"d_gan": dGan.item(), "d_style": dStyle.item(), "d_identity": dIdentity.item()})

    disc.params.zero_grad()
    dLoss.backward()
    state.optD.step()

    # generator
    z = sample_latent(state.rng, cfg.latentDim, n)
    poses = sample_poses(state.rng, state.poseRange, n)
    fake = gen(z, z, poses, training=True)
    out = disc(fake, update=False)
    gGan = gan_loss_g(out.logit)
    levels = style_losses_g(out.style_logits)
    gStyle = sum_terms(levels)
    gIdentity = identity_loss(z, out.z_hat)
    gLoss = total_loss_g(gGan, gIdentity, gStyle, w)

    if not np.isfinite(gLoss.item()):
        _abort(state, "g_loss", {"g_gan": gGan.item(), "g_style": gStyle.item(), "g_identity": gIdentity.item()})

    gen.params.zero_grad()
    disc.params.zero_grad()
    gLoss.backward()
    state.optG.step()
    disc.params.zero_grad()

    state.step += 1
    return LossReport(gGan.item(), gIdentity.item(), tuple(l.item() for l in levels),
                      dGan.item(), dStyle.item(), dIdentity.item(), w, cfg.identityUpdatesD)


# ---------------------------------------------------------------- loop

def build_dataset(cfg: TrainConfig) -> ImageDataset:
    if cfg.isSynthetic:
        setup = SyntheticSetup(cfg.syntheticPrimitive, size=cfg.resolution, items=cfg.syntheticItems,
                              azimuth_span=cfg.syntheticAzimuthSpan, seed=cfg.seed)
        return synthesize_dataset(setup)[0]

    return load_folder(cfg.dataset, cfg.resolution)


def write_samples(state: TrainState, path: str, count=SAMPLE_COUNT, cols=SAMPLE_COLS):
    """ fixed latents at fixed random poses, so successive grids are comparable """
    rng = np.random.default_rng([state.cfg.seed, SAMPLE_STREAM])
    z = sample_latent(rng, state.cfg.latentDim, count)
    poses = sample_poses(rng, state.poseRange, count)
    with no_grad():
        images = state.generator(z, z, poses).numpy()

    writeGrid(list(images), cols, path)


def train(cfg: TrainConfig, resume: str = None, progress: bool = True) -> TrainState:
    """ run or resume training, writing loss log, sample grids and checkpoints under `cfg.out`

    `resume` is a checkpoint file or a run folder. The resumed run uses `cfg`
    as given (see `resume_config`), and `cfg` must agree with the checkpoint on
    every key of `TrainConfig.fixedOnResume`.
    """
    if resume:
        resume = resolve_checkpoint(resume)
        records = read_records(resume)
        _check_resumable(config_from_records(records), cfg)
        state = TrainState.fromRecords(records, build_dataset(cfg), cfg)
        logger.info("resuming from %s at step %d", resume, state.step)
    else:
        state = TrainState(cfg, build_dataset(cfg))

    out = cfg.outDir
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / CONFIG_FILE)

    lastSaved = -1
    columns = LossReport.columns(len(STYLE_LEVELS))
    with LossLogger(str(out / LOSS_FILE), columns, resume_step=state.step if resume else None) as log:
        bar = tqdm(total=cfg.steps, initial=state.step, disable=not progress, desc="train", unit="step")
        while state.step < cfg.steps:
            batch = next_batch(state.dataset, state.dataRng, cfg.batchSize)
            report = train_step(state, batch)
            step = state.step
            log.write(step, report.row())
            bar.update(1)
            bar.set_postfix(g=f"{report.g_total:.3f}", d=f"{report.d_total:.3f}", id=f"{report.g_identity:.3f}")

            if step % cfg.logEvery == 0:
                logger.info("step %d: g_total %.4f (gan %.4f, identity %.4f, style %.4f), d_total %.4f",
                            step, report.g_total, report.g_gan, report.g_identity, report.g_style, report.d_total)
            if cfg.sampleEvery and step % cfg.sampleEvery == 0:
                write_samples(state, str(out / SAMPLE_DIR / (SAMPLE_NAME % step)))
            if cfg.checkpointEvery and step % cfg.checkpointEvery == 0:
                _checkpoint(state, out, step)
                lastSaved = step

        bar.close()

    if lastSaved != state.step:
        _checkpoint(state, out, state.step)

    return state


def _checkpoint(state: TrainState, out: Path, step: int):
    state.discriminator.spectral_norms()
    save_checkpoint(state, str(out / CHECKPOINT_DIR / (CHECKPOINT_NAME % step)))


def latest_checkpoint(out: str) -> str:
    folder = Path(out) / CHECKPOINT_DIR
    names = sorted(folder.glob("step_*.hvox")) if folder.is_dir() else []
    if not names:
        raise CheckpointError(f"no checkpoint under {folder}")

    return str(names[-1])
