//! Reference parameter set: the two readout modes of the cross-shaped
//! resonator coupled to an NV ensemble in a [100] field.

use crate::circuit::Symmetry;
use crate::nv::NvSpinModel;
use crate::qed::{CavityModeSpec, SpinEnsembleSpec};
use crate::spectroscopy::SweepTemplate;

pub const AX_FREQUENCY_GHZ: f64 = 3.1598;
pub const AY_FREQUENCY_GHZ: f64 = 3.2275;
pub const AX_KAPPA_MHZ: f64 = 0.995;
pub const AY_KAPPA_MHZ: f64 = 0.911;
pub const COLLECTIVE_COUPLING_MHZ: f64 = 5.0;
pub const ENSEMBLE_SIZE: f64 = 2e16;
pub const INHOMOGENEOUS_HWHM_MHZ: f64 = 6.0;
/// Share of each mode's total loss that leaves through its two visible ports.
pub const EXTERNAL_FRACTION: f64 = 0.5;

fn split_ports(kappa: f64, amps: [f64; 4]) -> [f64; 4] {
    let weight: f64 = amps.iter().map(|a| a * a).sum();
    amps.map(|a| if a != 0.0 { EXTERNAL_FRACTION * kappa / weight } else { 0.0 })
}

/// A_x mode: visible between ports 1 and 2.
pub fn ax_mode() -> CavityModeSpec {
    let amps = [1.0, -1.0, 0.0, 0.0];
    CavityModeSpec::new(AX_FREQUENCY_GHZ, AX_KAPPA_MHZ, amps)
        .with_port_coupling(split_ports(AX_KAPPA_MHZ, amps))
        .with_symmetry(Symmetry::AX)
}

/// A_y mode: visible between ports 3 and 4.
pub fn ay_mode() -> CavityModeSpec {
    let amps = [0.0, 0.0, 1.0, -1.0];
    CavityModeSpec::new(AY_FREQUENCY_GHZ, AY_KAPPA_MHZ, amps)
        .with_port_coupling(split_ports(AY_KAPPA_MHZ, amps))
        .with_symmetry(Symmetry::AY)
}

/// Per-transition ensemble; the center is a placeholder at the A_x mode.
pub fn ensemble() -> SpinEnsembleSpec {
    SpinEnsembleSpec::with_collective_coupling(COLLECTIVE_COUPLING_MHZ, ENSEMBLE_SIZE, AX_FREQUENCY_GHZ)
        .expect("reference ensemble is valid")
        .with_widths(INHOMOGENEOUS_HWHM_MHZ, crate::qed::DEFAULT_HOMOGENEOUS_HWHM_MHZ)
}

pub fn sweep_template() -> SweepTemplate {
    SweepTemplate {
        nv: NvSpinModel::default(),
        modes: vec![ax_mode(), ay_mode()],
        ensemble: ensemble(),
        include_minus_transition: true,
    }
}
