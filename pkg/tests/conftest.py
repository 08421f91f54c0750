import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phantom.benchmark import generate_benchmark, stratified_split
from phantom.trainer import TrainConfig, train


@pytest.fixture(scope="session")
def desk_run():
    """One shared desk-scale training run (reference defaults, 5000 rows)."""
    data = generate_benchmark(5000, seed=7)
    pair = stratified_split(data, 0.2, seed=7)
    result = train(TrainConfig(seed=7), pair.train)
    return {"data": data, "train": pair.train, "test": pair.test, "result": result}
