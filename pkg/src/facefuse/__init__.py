"""facefuse: wavelet-domain fusion of visible/thermal face pairs, eigenspace
features, dual neural classifiers, and belief-based decision fusion."""

from .imaging import GrayImage, flatten, from_vector, load_pgm, resize, save_pgm
from .wavelet import (
    FilterBank,
    WaveletPyramid,
    db2_filters,
    decompose,
    dwt1d,
    dwt2d_step,
    idwt1d,
    idwt2d_step,
    reconstruct,
)
from .fusion import fuse_images, fuse_pyramids
from .eigenspace import EigenBasis, fit, project, project_many, reconstruct_from
from .classifiers import (
    LabeledSample,
    MlpModel,
    RbfModel,
    TrainConfig,
    classify,
    train_mlp,
    train_rbf,
)
from .decision_fusion import (
    BeliefVector,
    ConfusionMatrix,
    Decision,
    belief,
    build_confusion,
    conditional_prob,
    decide,
)
from .harness import (
    DatasetManifest,
    ExperimentConfig,
    Report,
    build_manifest,
    load_manifest,
    recognition_rate,
    run_experiment,
    split,
)

__version__ = "0.1.0"
