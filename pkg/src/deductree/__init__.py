"""Tree-structured neural deduction over modular arithmetic on digit images.

Propositions over a finite set {0..9} are represented as trees whose leaves
are digit images; a recurrent graph cell evaluates each proposition and, at
test time, feeds its own predicted embedding into the next proposition, so a
model trained only on single propositions is scored on chains of deductions.
"""

from .checkpoint import (BlobError, CheckpointError, ShapeMismatchError,
                         VersionError, load_checkpoint, save_checkpoint)
from .datasets import (Corpus, IdxError, ImageDataset, load_corpus,
                       load_idx_images, load_idx_labels, normalize,
                       normalize_batch, sample_by_class, write_idx_images,
                       write_idx_labels)
from .episodes import (Episode, EpisodeConfig, EpisodeError, check_episode,
                       default_config, dump_episodes, episode_from_dict,
                       episode_to_dict, load_episodes, make_compound,
                       make_episode, make_proposition)
from .evaluate import EvalResult, deductive_test, parse_report_csv, report
from .gradcheck import full_model_gradcheck
from .model import (ForwardResult, HyperParams, ModelError, ModelParams,
                    attention_cell, attention_coeffs, classify,
                    classify_operator, conv_cell, encode, encode_object,
                    forward_episode, init_params, param_schema)
from .modular import (OMINUS, OPLUS, OPS, AxiomReport, DomainError, FiniteOp,
                      check_axioms, eval_tree, ominus, oplus)
from .rng import Rng
from .synth import generate_corpus_files, memory_corpus
from .tensor import (GraphError, Parameter, Tensor, TensorError, backward,
                     cross_entropy_from_logits, finite_difference_check,
                     leaky_relu, matmul, max_readout, mse, softmax, zero_grads)
from .training import (Adam, Metrics, TrainConfig, TrainResult, leaf_accuracy,
                       proposition_accuracy, task1_loss, task2_loss,
                       total_loss, train)
from .tree import (Kind, Node, StructureError, complete_adjacency,
                   normalize_adjacency, post_order, validate)

__version__ = "0.1.0"
