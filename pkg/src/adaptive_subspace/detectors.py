"""Registry of the twelve implemented detectors, keyed by their acronyms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ep, glr_fo, matcore
from .glr_fo import PreconditionError
from .scenario import FIRST, HE, PHE, SECOND, ScenarioConfig


@dataclass(frozen=True)
class DetectorSpec:
    name: str
    family: str  # "GLR" or "EP"
    order: str
    subspace: str  # "KS" or "US"
    env: str
    stat: Callable


def _spec(name, family, order, subspace, env, stat):
    return DetectorSpec(name, family, order, subspace, env, stat)


DETECTORS: dict[str, DetectorSpec] = {
    d.name: d
    for d in [
        _spec("FO-KS-HE", "GLR", FIRST, "KS", HE, glr_fo.stat_fo_ks_he),
        _spec("FO-KS-PHE", "GLR", FIRST, "KS", PHE, glr_fo.stat_fo_ks_phe),
        _spec("FO-US-HE", "GLR", FIRST, "US", HE, glr_fo.stat_fo_us_he),
        _spec("FO-US-PHE", "GLR", FIRST, "US", PHE, glr_fo.stat_fo_us_phe),
        _spec("EP-FO-KS-HE", "EP", FIRST, "KS", HE, ep.stat_ep_fo_ks_he),
        _spec("EP-FO-KS-PHE", "EP", FIRST, "KS", PHE, ep.stat_ep_fo_ks_phe),
        _spec("EP-FO-US-HE", "EP", FIRST, "US", HE, ep.stat_ep_fo_us_he),
        _spec("EP-FO-US-PHE", "EP", FIRST, "US", PHE, ep.stat_ep_fo_us_phe),
        _spec("EP-SO-KS-HE", "EP", SECOND, "KS", HE, ep.stat_ep_so_ks_he),
        _spec("EP-SO-KS-PHE", "EP", SECOND, "KS", PHE, ep.stat_ep_so_ks_phe),
        _spec("EP-SO-US-HE", "EP", SECOND, "US", HE, ep.stat_ep_so_us_he),
        _spec("EP-SO-US-PHE", "EP", SECOND, "US", PHE, ep.stat_ep_so_us_phe),
    ]
}
NAMES = tuple(DETECTORS)


def get(name: str) -> DetectorSpec:
    try:
        return DETECTORS[name]
    except KeyError:
        raise KeyError(f"unknown detector {name!r}; expected one of {', '.join(NAMES)}") from None


def check_applicable(name: str, cfg: ScenarioConfig) -> None:
    """Raise :class:`PreconditionError` if ``name`` cannot run on ``cfg``."""
    get(name)
    if name == "FO-KS-PHE":
        glr_fo.check_fo_ks_phe(cfg.N, cfg.K_P, cfg.K, cfg.r)
    elif name == "FO-US-PHE":
        glr_fo.check_fo_us_phe(cfg.N, cfg.K_P, cfg.K, cfg.r)


def evaluate(names, Z_P, Z_S, H, r: int | None = None) -> np.ndarray:
    """Evaluate several detectors on one dataset, sharing the whitening work."""
    glr_in = ep_in = None
    gram = matcore.column_gram(Z_S)
    out = np.empty(len(names))
    for k, name in enumerate(names):
        spec = get(name)
        if spec.family == "GLR":
            if glr_in is None:
                glr_in = glr_fo.GlrFoInput(Z_P, Z_S, H, r, gram=gram)
            out[k] = spec.stat(glr_in)
        else:
            if ep_in is None:
                ep_in = ep.EpInput(Z_P, Z_S, H, r, gram=gram)
            out[k] = spec.stat(ep_in)
    return out


__all__ = ["DETECTORS", "NAMES", "DetectorSpec", "PreconditionError",
           "check_applicable", "evaluate", "get"]
