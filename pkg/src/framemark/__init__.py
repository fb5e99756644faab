"""Frame-level video watermark embedding, detection, and robustness evaluation.

The package provides a pluggable per-frame watermark codec contract with a
built-in differentiable spread-spectrum reference codec, seven frame
aggregation strategies with exact binomial threshold selection, common
no-box perturbations, white-box and query-based black-box attacks, and a
benchmark harness with quality metrics.
"""

from ._version import __version__
from .aggregate import (
    ALL_STRATEGY_TOKENS,
    AggregationStrategy,
    DetectionResult,
    StrategyKind,
    VideoDetector,
    ba_mean,
    ba_median,
    bit_median,
    detect,
    frame_decisions,
    geometric_median,
    logit_mean,
)
from .attacks import (
    AttackTrace,
    LabelOracle,
    MinEpsilonResult,
    ScoreOracle,
    SquareAttackConfig,
    TriangleAttackConfig,
    WhiteboxConfig,
    forgery_init_unrelated,
    min_epsilon_search,
    pgd_bounded,
    removal_init_gaussian,
    square_attack,
    subset_arbitrary,
    triangle_attack,
)
from .bench import (
    AttackSpec,
    BenchCell,
    BenchConfig,
    BenchReport,
    CodecSpec,
    PerturbationSweep,
    VideoSetSpec,
    eval_fnr,
    eval_fpr,
    run_benchmark,
)
from .codec import (
    Codec,
    CodecKey,
    SpreadSpectrumCodec,
    Watermark,
    bitwise_accuracy,
    carriers,
    decode_frame,
    decode_video,
    decoder_gradient,
    embed,
    round_logits,
)
from .errors import (
    ContainerError,
    DimensionError,
    EncoderUnavailableError,
    FramemarkError,
    InfeasibleError,
    InitializationError,
    OracleError,
)
from .metrics import psnr, ssim, welch_t_test
from .perturb import (
    Perturbation,
    apply as apply_perturbation,
    crop,
    frame_average,
    frame_removal,
    frame_swap,
    gaussian_blur,
    gaussian_noise,
    jpeg,
    mpeg4_external,
)
from .threshold import binomial_tail, fpr_of_tau, select_k, select_tau
from .video import (
    Video,
    load_video,
    read_container,
    read_png_dir,
    scale_contrast,
    synth_video,
    write_container,
)

__all__ = [name for name in dir() if not name.startswith("_")]
