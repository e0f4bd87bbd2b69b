"""Quantum-phase recognition task over cluster-Ising ground states."""
import logging
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException
from qcl.services.datasets.cluster_ising import variational_ground_prep
from qcl.services.datasets.types import PrepMethod, Sample, StateRecipe, TaskDataset, TaskKind
from qcl.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

SPT_LABEL = 0
ATF_LABEL = 1


def _draw(rng: np.random.Generator, count: int, n: int, prep: PrepMethod,
          spt: Tuple[float, float], atf: Tuple[float, float]) -> List[Sample]:
    n_spt = (count + 1) // 2
    samples = [
        Sample.from_recipe(StateRecipe(float(h), prep, n), SPT_LABEL)
        for h in rng.uniform(spt[0], spt[1], n_spt)
    ]
    samples += [
        Sample.from_recipe(StateRecipe(float(h), prep, n), ATF_LABEL)
        for h in rng.uniform(atf[0], atf[1], count - n_spt)
    ]
    return [samples[i] for i in rng.permutation(len(samples))]


def sample_phase_dataset(
    n: int,
    count_train: int,
    count_test: int,
    prep: PrepMethod = PrepMethod.VARIATIONAL,
    seed: int = 0,
    spt_range: Optional[Tuple[float, float]] = None,
    atf_range: Optional[Tuple[float, float]] = None,
    prepare_states: bool = False,
    threads: Optional[int] = None,
) -> TaskDataset:
    """
    Balanced recipes with h uniform in the SPT range (label 0) or the ATF range
    (label 1).

    With ``prepare_states`` variational recipes get their alpha* now (one
    preparation per sample, seeded by sample position); otherwise preparation
    happens lazily when a classifier first needs the state.
    """
    if count_train < 1 or count_test < 1:
        raise ArgumentException("phase dataset needs at least one train and one test sample")
    spt = spt_range or settings.SPT_H_RANGE
    atf = atf_range or settings.ATF_H_RANGE
    if not spt[1] < 1.0 < atf[0]:
        raise ArgumentException(f"h ranges {spt} and {atf} must lie on either side of h = 1")
    prep = PrepMethod(prep)
    rng = np.random.default_rng(seed)
    train = _draw(rng, count_train, n, prep, spt, atf)
    test = _draw(rng, count_test, n, prep, spt, atf)

    if prepare_states and prep == PrepMethod.VARIATIONAL:
        train = _prepare(train, seed, threads)
        test = _prepare(test, seed + len(train), threads)

    task = TaskDataset(
        train=train,
        test=test,
        task_kind=TaskKind.QUANTUM_PHASE,
        name="phase",
        metadata={"n": n, "prep": prep.value, "spt_range": list(spt), "atf_range": list(atf), "seed": seed},
    )
    logger.info(f"Phase dataset: n={n}, prep={prep.value}, counts={task.class_counts()}")
    return task.validate() if min(count_train, count_test) >= 2 else task


def _prepare(samples: List[Sample], seed: int, threads: Optional[int]) -> List[Sample]:
    def prep_one(item: Tuple[int, Sample]) -> Sample:
        i, s = item
        r = s.state_recipe
        result = variational_ground_prep(r.n_qubits, r.h, seed=seed + i)
        return replace(s, state_recipe=replace(r, alpha=result.alpha_star))

    return ordered_map(prep_one, list(enumerate(samples)), threads)
