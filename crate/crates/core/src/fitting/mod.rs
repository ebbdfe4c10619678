//! Resonance and avoided-crossing fits.

mod crossing;
pub mod lm;
mod lorentzian;
pub mod peaks;

pub use crossing::{fit_avoided_crossing, fit_avoided_crossing_with, BranchModel, CrossingFit, CrossingFitOptions, SpinDispersion};
pub use lorentzian::{
    fit_complex_lorentzian, fit_lorentzian, fit_lorentzian_from, measure_dispersive_shift, ComplexLorentzianFit,
    DispersiveShiftMeasurement, LorentzianFit, LorentzianGuess,
};
