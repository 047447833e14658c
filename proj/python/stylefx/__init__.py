"""Style side-effect audit and mitigation toolkit (C++ core)."""

from ._stylefx import (
    Checkpoint,
    StylefxError,
    bake_bias,
    binom_two_sided_p,
    build_judge_prompt,
    build_system_prompt,
    cluster,
    default_layer,
    diverging_color,
    extract_features,
    extract_steering_vectors,
    generate,
    heatmap_svg,
    init_model,
    load_checkpoint,
    logits,
    map_candidate_layers,
    matrix_csv,
    matrix_from_counts,
    mitigation_table,
    parse_verdict,
    screen_side_effects,
    simulate_matrix,
    split_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
