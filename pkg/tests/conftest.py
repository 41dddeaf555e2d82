"""Shared fixtures: demo assets, synthetic samples, tiny models.

Heavyweight artifacts are session-scoped so the suite builds them once.
"""

from __future__ import annotations

import re

import pytest
import torch

from sste.config import ModelConfig, SynthConfig
from sste.data import content_pair, make_demo_assets, synth_sample
from sste.model import EditingModel

CRITERIA = {
    1: "shape suite",
    2: "adain moment suite",
    3: "loss suite",
    4: "spectral-norm suite",
    5: "gradient suite",
    6: "erasure/supervision audits",
    7: "latent-editing suite",
    8: "overfit run",
    9: "ablation graph checks",
    10: "evaluation suite",
}


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    m = re.search(r"criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] criterion {n} ({CRITERIA.get(n, '?')}): {verdict}", flush=True)


@pytest.fixture(scope="session")
def assets(tmp_path_factory) -> SynthConfig:
    root = tmp_path_factory.mktemp("assets")
    return make_demo_assets(str(root), seed=11)


@pytest.fixture(scope="session")
def samples(assets):
    """Eight labeled synthetic records with canonical content pairs."""
    out = []
    for i in range(8):
        record = synth_sample(assets, seed=500 + i)
        out.append((record, content_pair(assets, record)))
    return out


@pytest.fixture(scope="session")
def tiny_model() -> EditingModel:
    torch.manual_seed(0)
    model = EditingModel(ModelConfig.tiny())
    model.eval()
    return model
