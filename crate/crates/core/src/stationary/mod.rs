//! Stationary measures and the Markov operators of the projective chain.

pub mod measure;
pub mod observable;
pub mod operator;

pub use measure::{frontier_tail_mass, merge_atoms, stationary_measure, Atom, AtomicMeasure, MeasureKind, MeasureOptions};
pub use observable::Observable;
pub use operator::{
    apply_q, apply_qn, apply_qn_direct, check_diagram, check_stationarity, ergodicity_decay, grid, inv_power, pi, q_bar,
    q_of, sing_constant, DecayCurve, Part, QnOptions, QnValue, StationarityReport, StationarityRow,
};
