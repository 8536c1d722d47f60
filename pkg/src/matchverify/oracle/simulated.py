from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import MalformedInput
from ..model import Correspondence
from ..objective import derive_seed
from ..truth import GroundTruth, load_ground_truth
from .base import Answer, SequentialMixin


@dataclass(frozen=True)
class SimulatedConfig:
    accuracy: float = 0.918
    seed: int = 0
    ground_truth_path: str | None = None
    closed_world: bool = False

    def __post_init__(self) -> None:
        if not 0.5 < self.accuracy <= 1.0:
            raise MalformedInput(f"simulated accuracy {self.accuracy} must lie in (0.5, 1.0]")


def _uniform(seed: int, corr_id: str) -> float:
    return (derive_seed("simulated-oracle", seed, corr_id) >> 11) / float(1 << 53)


class SimulatedOracle(SequentialMixin):
    """Answers from ground truth, flipped with probability ``1 - accuracy``.

    The flip draw depends only on (seed, correspondence id), so the answer to a
    correspondence does not depend on when or in which order it is asked.
    """

    def __init__(self, cfg: SimulatedConfig, truth: GroundTruth | None = None) -> None:
        if truth is None:
            if cfg.ground_truth_path is None:
                raise MalformedInput("simulated oracle needs ground truth")
            truth = load_ground_truth(Path(cfg.ground_truth_path), cfg.closed_world)
        self.cfg = cfg
        self.truth = truth

    def verify(self, c: Correspondence) -> Answer:
        correct = self.truth.verdict(c)
        flip = _uniform(self.cfg.seed, c.id) >= self.cfg.accuracy
        return Answer(c.id, correct != flip, self.cfg.accuracy, "simulated")
