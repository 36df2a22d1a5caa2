"""Python front end for the vipro core.

Configs are plain dicts with the same keys as the CLI's JSON config files.
Videos are float arrays of shape (frames, pixels) with values in [0, 1].
"""

import json as _json

from . import _vipro
from ._vipro import (
    AttackError,
    ConfigError,
    Corpus,
    DimensionError,
    Encoder,
    IoError,
    __version__,
    check_budget,
    compress,
    random_clip,
    temporal_clip,
    temporal_shuffle,
)

__all__ = [
    "AttackError",
    "ConfigError",
    "Corpus",
    "DimensionError",
    "Encoder",
    "IoError",
    "__version__",
    "ablate",
    "attack",
    "check_budget",
    "compress",
    "gen",
    "generate_corpus",
    "plant_model",
    "random_clip",
    "report",
    "report_hash",
    "run",
    "temporal_clip",
    "temporal_shuffle",
]


def _dump(cfg):
    return _json.dumps(cfg or {})


def generate_corpus(spec=None):
    return _vipro.generate_corpus(_dump(spec))


def plant_model(corpus, d_hid=64, seed=0, rho=0.0):
    return _vipro.plant_model(corpus, d_hid, seed, rho)


def attack(model, video, queries, config=None):
    """Attacks one video; queries are lists of token ids.

    Returns delta, adversarial, loss_trace, final_sims and clips.
    """
    return _vipro.attack(model, video, [list(q) for q in queries], _dump(config))


def gen(spec, out):
    return _vipro.cmd_gen(_dump(spec), str(out))


def run(config=None, out=""):
    """Full experiment; returns the report document as a dict."""
    return _json.loads(_vipro.cmd_attack(_dump(config), str(out)))


def ablate(config, axis, out=""):
    """Returns ablation.csv text for one axis."""
    return _vipro.cmd_ablate(_dump(config), axis, str(out))


def report(results, out=""):
    return _json.loads(_vipro.cmd_report(str(results), str(out)))


def report_hash(doc):
    return _vipro.report_hash(_json.dumps(doc))
