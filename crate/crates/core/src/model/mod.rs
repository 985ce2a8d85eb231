//! Cocycle specifications, words, sampling and null words.

pub mod markov;
pub mod nullwords;
pub mod sampler;
pub mod spec;
pub mod words;

pub use nullwords::{
    final_step_log_ratio, find_null_words, invariant_arc, is_null_block, near_kernel_arcs, scan_null_words, ArcCertificate, NearKernelArcs,
    NullScan, ProjArc,
};
pub use sampler::PathSampler;
pub use spec::{BaseLaw, Check, Cocycle, CocycleSpec, GrowthConstants, Tolerances, ValidationReport};
pub use words::{bernoulli_words, fiber_product, words, Word};
