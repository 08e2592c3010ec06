"""Single-video synthesis with space-time patch nearest neighbours.

Coarse-to-fine generation, video analogies, retargeting and inpainting
built on a PatchMatch nearest-neighbour-field solver.
"""

from .dynamics import (
    QuantizedDynamics,
    dyn,
    dyn_pair,
    estimate_flow_magnitude,
    kmeans_quantize,
    load_flo,
    read_flo,
    write_flo,
)
from .io import VideoFormatError, read_video, write_video
from .metrics import bench, coherence, diversity
from .nnf import (
    NNField,
    PatchShape,
    SolverParams,
    brute_force_nnf,
    patch_distance,
    patchmatch_nnf,
)
from .pipeline import (
    AnalogyInputs,
    GenerationConfig,
    UnsatisfiableConstraintError,
    analogy,
    generate,
    inpaint,
    retarget,
)
from .video import (
    NoiseSpec,
    ScaleFactor,
    SpaceTimePyramid,
    add_noise,
    build_pyramid,
    resize_video,
)
from .vpnn import QKVBundle, fold_median, replace, unfold, vpnn_step

__version__ = "0.1.0"
