from .losses import (  # noqa: F401
    classification_loss,
    hybrid_loss,
    localization_loss,
    localization_residual_loss,
    normalize_scoremap,
)
from .masks import build_target_mask, gaussian_box_mask  # noqa: F401
from .network import ConafNet  # noqa: F401
