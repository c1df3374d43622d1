"""Differentially private SGD with annealed screening of model updates."""

from .accountant import (
    AccountantState,
    PrivacySpend,
    compose,
    max_steps_within,
    rdp_per_step,
    rdp_to_dp,
    rdp_to_dp_tight,
    spend,
)
from .annealer import (
    AnnealerState,
    Decision,
    acceptance_probability,
    advance,
    decide,
    run_classic_sa,
)
from .data import LabeledDataset, SamplerConfig, load_csv, load_idx, poisson_sample, split, synth_blobs, synth_linear
from .dp_optimizer import ClipPolicy, NoisePolicy, clip, clip_batch, noisy_average, sgd_step
from .harness import IterationRecord, TrainConfig, compare, emit_trace, load_config, train
from .models import ModelSpec, evaluate, init_params, per_example_grads

__version__ = "0.1.0"
