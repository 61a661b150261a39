"""sensecnn: one-layer text CNN toolkit for modal sense / word sense classification.

Thin python facade over the C++ core. The heavy lifting (training, evaluation,
the experiment harness) lives in :mod:`sensecnn._core`.
"""

from sensecnn._core import (
    Classifier,
    Dataset,
    EmbeddingTable,
    Instance,
    SeededRng,
    balance,
    cross_entropy,
    derive_seed,
    evaluate,
    frobenius_inner,
    majority_baseline,
    mcnemar_midp,
    mcnemar_midp_preds,
    micro_average,
    oov_bound_from_table,
    parse_instances,
    parse_instances_file,
    relu,
    run_config,
    sample_uniform,
    serialize_instances,
    softmax,
    stratified_fold_of,
    synth_cue_dataset,
    train_classifier,
)

__all__ = [
    "Classifier",
    "Dataset",
    "EmbeddingTable",
    "Instance",
    "SeededRng",
    "balance",
    "cross_entropy",
    "derive_seed",
    "evaluate",
    "frobenius_inner",
    "majority_baseline",
    "mcnemar_midp",
    "mcnemar_midp_preds",
    "micro_average",
    "oov_bound_from_table",
    "parse_instances",
    "parse_instances_file",
    "relu",
    "run_config",
    "sample_uniform",
    "serialize_instances",
    "softmax",
    "stratified_fold_of",
    "synth_cue_dataset",
    "train_classifier",
]

__version__ = "0.1.0"
