from .classification import BinaryMetrics, binary_metrics, metrics_from_counts  # noqa: F401
from .deciles import decile_table, exam_size  # noqa: F401
from .glimpses import box_detection_stats, glimpse_hit_stats  # noqa: F401
from .heatmap import render_heatmap, save_heatmap  # noqa: F401
from .localisation import (  # noqa: F401
    box_iou,
    connected_components,
    component_boxes,
    localisation_metrics,
    localisation_sweep,
    match_boxes,
    overlap_sweep,
    scoremap_boxes,
    threshold_scoremap,
)
