use xmode_qed::qed::{self, CavityModeSpec, CoupledSystem, Lineshape, SpinEnsembleSpec};

use crate::{guard, slice, write, Fail, XqStatus};

/// A readout mode as seen by the transmission model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqCavityMode {
    pub frequency_ghz: f64,
    /// Total HWHM of the power spectrum, MHz.
    pub kappa_total_mhz: f64,
    pub kappa_c_mhz: [f64; 4],
    /// Relative port amplitudes, zero where the mode cannot couple.
    pub port_amplitudes: [f64; 4],
    pub coupling_scale: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqSpinEnsemble {
    pub collective_coupling_mhz: f64,
    pub n_spins: f64,
    pub center_ghz: f64,
    pub inhomogeneous_hwhm_mhz: f64,
    pub homogeneous_hwhm_mhz: f64,
    /// Gaussian inhomogeneous profile instead of Lorentzian.
    pub gaussian: bool,
}

impl From<&XqCavityMode> for CavityModeSpec {
    fn from(m: &XqCavityMode) -> Self {
        let mut spec = CavityModeSpec::new(m.frequency_ghz, m.kappa_total_mhz, m.port_amplitudes)
            .with_port_coupling(m.kappa_c_mhz);
        spec.coupling_scale = m.coupling_scale;
        spec
    }
}

pub(crate) fn ensemble_from(e: &XqSpinEnsemble) -> Result<SpinEnsembleSpec, Fail> {
    // an empty ensemble keeps its g0 finite and contributes nothing
    let n = if e.n_spins == 0.0 { 1.0 } else { e.n_spins };
    let mut spec = SpinEnsembleSpec::with_collective_coupling(e.collective_coupling_mhz, n, e.center_ghz)?
        .with_widths(e.inhomogeneous_hwhm_mhz, e.homogeneous_hwhm_mhz)
        .with_lineshape(if e.gaussian { Lineshape::Gaussian } else { Lineshape::Lorentzian });
    spec.n_spins = e.n_spins;
    spec.validate()?;
    Ok(spec)
}

pub(crate) unsafe fn modes_from(p: *const XqCavityMode, n: usize) -> Result<Vec<CavityModeSpec>, Fail> {
    Ok(slice(p, n, "modes")?.iter().map(CavityModeSpec::from).collect())
}

/// Complex S(port_out ← port_in) at `probe_ghz`.
#[no_mangle]
pub unsafe extern "C" fn xq_transmission(
    modes: *const XqCavityMode,
    n_modes: usize,
    spins: *const XqSpinEnsemble,
    n_spins: usize,
    probe_ghz: f64,
    port_in: usize,
    port_out: usize,
    re: *mut f64,
    im: *mut f64,
) -> XqStatus {
    guard(|| {
        let system = CoupledSystem {
            modes: modes_from(modes, n_modes)?,
            spins: slice(spins, n_spins, "spins")?
                .iter()
                .map(ensemble_from)
                .collect::<Result<_, _>>()?,
        };
        let s = qed::transmission(probe_ghz, &system, port_in, port_out)?;
        write(re, "re", s.re)?;
        write(im, "im", s.im)
    })
}

/// Spin-bath self-energy Σ(ω), MHz.
#[no_mangle]
pub unsafe extern "C" fn xq_spin_susceptibility(
    ensemble: *const XqSpinEnsemble,
    probe_ghz: f64,
    re: *mut f64,
    im: *mut f64,
) -> XqStatus {
    guard(|| {
        let spec = ensemble_from(crate::read(ensemble, "ensemble")?)?;
        let s = qed::spin_susceptibility(probe_ghz, &spec)?;
        write(re, "re", s.re)?;
        write(im, "im", s.im)
    })
}

/// χ = 2 g² Sz / Δ, MHz.
#[no_mangle]
pub unsafe extern "C" fn xq_dispersive_shift(g_col_mhz: f64, sz: f64, detuning_mhz: f64, chi_mhz: *mut f64) -> XqStatus {
    guard(|| write(chi_mhz, "chi_mhz", qed::dispersive_shift(g_col_mhz, sz, detuning_mhz)?))
}

/// Inverse of [`xq_dispersive_shift`].
#[no_mangle]
pub unsafe extern "C" fn xq_extract_g(chi_mhz: f64, detuning_mhz: f64, sz: f64, g_col_mhz: *mut f64) -> XqStatus {
    guard(|| write(g_col_mhz, "g_col_mhz", qed::extract_g(chi_mhz, detuning_mhz, sz)?))
}

/// g0 = g_col/√N, in the unit of `g_col`.
#[no_mangle]
pub unsafe extern "C" fn xq_single_spin_coupling(g_col: f64, n_spins: f64, g0: *mut f64) -> XqStatus {
    guard(|| write(g0, "g0", qed::single_spin_coupling(g_col, n_spins)?))
}
