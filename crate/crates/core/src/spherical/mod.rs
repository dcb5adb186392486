//! Circle and cap measures, convolution backends and the autocorrelation kernel.
//!
//! A measure is a list of integer cell offsets with weights. The circle of
//! radius `2^k` is sampled at `P >= 16 pi 2^k / delta` equispaced angles and
//! each sample is rounded to the nearest cell offset.

mod convolve;
mod kernel;
mod measure;

pub use convolve::{
    backend, check_padding, convolution_support, convolve, convolve_with, Auto, BackendRegistry,
    ConvolutionBackend, Direct, Fft,
};
pub use kernel::{
    autocorrelation_kernel, direction_net, dominate_kernel, domination_value, kernel_domination_ratio,
    kernel_pointwise_ratio, offset_lattice, Direction,
    DominationTerm, OrientedRect, RectGrid,
};
pub use measure::{
    angle_diff, cap_measure, check_resolvable, circle_measure, circle_samples, in_arc, min_resolvable_k,
    sample_count, Atom, CircleSample, DiscreteMeasure, MeasureSupport,
};
