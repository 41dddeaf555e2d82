"""Scene-text style editing: swap the words, keep the look."""

from .config import (AblationFlags, LossWeights, ModelConfig, SynthConfig,  # noqa: F401
                     TrainConfig, load_synth_config, load_train_config)
from .errors import (ConfigurationError, ContractViolation,  # noqa: F401
                     NumericalGuardError, ResourceError)
from .generator import FACET_LEVELS, LayerCodes  # noqa: F401
from .model import (EditingModel, PairOutput, apply_ablation,  # noqa: F401
                    graph_signature, load_model, save_model)
from .records import ContentRender, SceneRecord, StyleAttributeLabel  # noqa: F401

__version__ = "0.1.0"
