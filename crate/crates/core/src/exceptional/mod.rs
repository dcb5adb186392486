//! Scale ladders, heavy rectangles, cap-sum exceptional sets and the split of
//! scales into three regimes.

mod ladder;
mod rects;
mod regime;
mod sets;

pub use ladder::{scale_ladder, ExceptionalConfig, Knobs, ScaleLadder};
pub use rects::{bin_rect_masses, heavy_rectangles, heavy_threshold, scale_grid, HeavyRectSet};
pub use regime::{
    k2_height, piece_config, regime_exceptional, regime_exceptional_from, regime_partition, Regime, RegimeReport,
    RegimeRow,
};
pub use sets::{
    cap_width, double_cap_offsets, exceptional_set, in_double_arc, ratio_from_measure, size_lemma_ratio,
    ExceptionalSet,
};
