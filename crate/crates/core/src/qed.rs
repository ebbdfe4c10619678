//! Low-excitation linear response of cavity modes coupled to a spin ensemble.
//!
//! Probe and resonance frequencies are in GHz; rates, couplings, detunings and
//! the spin self-energy are in MHz. All rates are half widths (HWHM).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Mode, Symmetry};
use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance of the Gaussian-lineshape quadrature.
pub const SUSCEPTIBILITY_REL_TOL: f64 = 1e-10;

/// Default homogeneous HWHM in MHz.
pub const DEFAULT_HOMOGENEOUS_HWHM_MHZ: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Lineshape {
    #[default]
    Lorentzian,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsembleSpec {
    pub n_spins: f64,
    /// Single-spin coupling, Hz.
    pub g0_hz: f64,
    pub center_ghz: f64,
    pub inhomogeneous_hwhm_mhz: f64,
    pub homogeneous_hwhm_mhz: f64,
    pub lineshape: Lineshape,
    /// Two-level population imbalance, −1 = fully in the ground state.
    pub polarization: f64,
}

impl SpinEnsembleSpec {
    /// Ensemble of `n_spins` whose collective coupling is `g_col_mhz`.
    pub fn with_collective_coupling(g_col_mhz: f64, n_spins: f64, center_ghz: f64) -> Result<Self> {
        let g0_hz = single_spin_coupling(g_col_mhz * 1e6, n_spins)?;
        Ok(Self {
            n_spins,
            g0_hz,
            center_ghz,
            inhomogeneous_hwhm_mhz: 0.0,
            homogeneous_hwhm_mhz: DEFAULT_HOMOGENEOUS_HWHM_MHZ,
            lineshape: Lineshape::Lorentzian,
            polarization: -1.0,
        })
    }

    pub fn with_widths(mut self, inhomogeneous_hwhm_mhz: f64, homogeneous_hwhm_mhz: f64) -> Self {
        self.inhomogeneous_hwhm_mhz = inhomogeneous_hwhm_mhz;
        self.homogeneous_hwhm_mhz = homogeneous_hwhm_mhz;
        self
    }

    pub fn with_lineshape(mut self, lineshape: Lineshape) -> Self {
        self.lineshape = lineshape;
        self
    }

    pub fn collective_coupling_mhz(&self) -> f64 {
        self.g0_hz * self.n_spins.sqrt() * 1e-6
    }

    /// Half linewidth of the single-oscillator approximation, γ_h + Γ.
    pub fn effective_hwhm_mhz(&self) -> f64 {
        self.homogeneous_hwhm_mhz + self.inhomogeneous_hwhm_mhz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_spins >= 0.0) || !self.n_spins.is_finite() {
            return Err(Error::invalid("spin count must be >= 0"));
        }
        if !(self.g0_hz >= 0.0) || !self.g0_hz.is_finite() {
            return Err(Error::invalid("single-spin coupling must be >= 0"));
        }
        if !self.center_ghz.is_finite() {
            return Err(Error::invalid("spin center frequency must be finite"));
        }
        if !(self.inhomogeneous_hwhm_mhz >= 0.0) {
            return Err(Error::invalid("inhomogeneous width must be >= 0"));
        }
        if !(self.homogeneous_hwhm_mhz > 0.0) {
            return Err(Error::invalid("homogeneous width must be > 0"));
        }
        if !(self.polarization.abs() <= 1.0) {
            return Err(Error::invalid("polarization must lie in [-1, 1]"));
        }
        Ok(())
    }
}

/// g_col = g0·√N (any consistent frequency unit).
pub fn collective_coupling(g0: f64, n_spins: f64) -> Result<f64> {
    if !(g0 >= 0.0) || !(n_spins >= 0.0) {
        return Err(Error::invalid("g0 and N must be >= 0"));
    }
    Ok(g0 * n_spins.sqrt())
}

/// g0 = g_col/√N.
pub fn single_spin_coupling(g_col: f64, n_spins: f64) -> Result<f64> {
    if !(g_col >= 0.0) {
        return Err(Error::invalid("g_col must be >= 0"));
    }
    if !(n_spins > 0.0) {
        return Err(Error::invalid("N must be > 0 to infer g0"));
    }
    Ok(g_col / n_spins.sqrt())
}

/// Σ(ω) = g_col² ∫ ρ(ν) dν / (γ_h + i(ν − ω)), MHz.
pub fn spin_susceptibility(probe_ghz: f64, ensemble: &SpinEnsembleSpec) -> Result<Complex64> {
    ensemble.validate()?;
    let g2 = ensemble.collective_coupling_mhz().powi(2);
    if g2 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let detuning = (ensemble.center_ghz - probe_ghz) * 1e3;
    let gh = ensemble.homogeneous_hwhm_mhz;
    let width = ensemble.inhomogeneous_hwhm_mhz;
    match ensemble.lineshape {
        Lineshape::Lorentzian => Ok(g2 / Complex64::new(gh + width, detuning)),
        Lineshape::Gaussian if width == 0.0 => Ok(g2 / Complex64::new(gh, detuning)),
        Lineshape::Gaussian => Ok(g2 * gaussian_bath(detuning, gh, width)?),
    }
}

/// ∫ ρ(u) du / (γ_h + i(u + detuning)) for a unit Gaussian ρ of HWHM `width`,
/// with u the offset from the ensemble center.
fn gaussian_bath(detuning: f64, gh: f64, width: f64) -> Result<Complex64> {
    const SPAN_SIGMAS: f64 = 14.0;
    let sigma = width / (2.0 * std::f64::consts::LN_2).sqrt();
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let pole = -detuning;
    let f = |u: f64| {
        let rho = norm * (-0.5 * (u / sigma).powi(2)).exp();
        Complex64::new(rho, 0.0) / Complex64::new(gh, u - pole)
    };
    let half = SPAN_SIGMAS * sigma;
    let breaks = [pole - 10.0 * gh, pole, pole + 10.0 * gh, 0.0];
    quadrature::integrate(f, -half, half, &breaks, SUSCEPTIBILITY_REL_TOL, 0.0, 4000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityModeSpec {
    pub frequency_ghz: f64,
    /// Total HWHM linewidth of the power spectrum, MHz.
    pub kappa_total_mhz: f64,
    /// External coupling rate per port, MHz.
    pub kappa_c_mhz: [f64; 4],
    pub symmetry: Option<Symmetry>,
    /// Relative port amplitudes (largest magnitude 1); zero where forbidden.
    pub port_amplitudes: [f64; 4],
    /// Multiplies the ensemble's collective coupling for this mode.
    pub coupling_scale: f64,
}

impl CavityModeSpec {
    /// Mode with the given amplitudes and no port coupling yet.
    pub fn new(frequency_ghz: f64, kappa_total_mhz: f64, port_amplitudes: [f64; 4]) -> Self {
        Self {
            frequency_ghz,
            kappa_total_mhz,
            kappa_c_mhz: [0.0; 4],
            symmetry: None,
            port_amplitudes,
            coupling_scale: 1.0,
        }
    }

    /// Builds a mode from a classified circuit eigenmode.
    pub fn from_circuit_mode(mode: &Mode, kappa_total_mhz: f64, kappa_c_mhz: [f64; 4]) -> Self {
        Self {
            frequency_ghz: mode.frequency_ghz,
            kappa_total_mhz,
            kappa_c_mhz,
            symmetry: Some(mode.symmetry),
            port_amplitudes: mode.relative_amplitudes(),
            coupling_scale: 1.0,
        }
    }

    pub fn with_port_coupling(mut self, kappa_c_mhz: [f64; 4]) -> Self {
        self.kappa_c_mhz = kappa_c_mhz;
        self
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = Some(symmetry);
        self
    }

    /// Σ_p κ_c,p·A_p², the part of κ_total leaking out of the ports.
    pub fn external_kappa_mhz(&self) -> f64 {
        self.kappa_c_mhz
            .iter()
            .zip(self.port_amplitudes)
            .map(|(k, a)| k * a * a)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_ghz > 0.0) {
            return Err(Error::invalid("mode frequency must be > 0"));
        }
        if !(self.kappa_total_mhz > 0.0) {
            return Err(Error::invalid("mode linewidth must be > 0"));
        }
        if self.kappa_c_mhz.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::invalid("port coupling rates must be >= 0"));
        }
        if self.port_amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("port amplitudes must be finite"));
        }
        let ext = self.external_kappa_mhz();
        if ext > self.kappa_total_mhz * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "external coupling {ext} MHz exceeds total linewidth {} MHz",
                self.kappa_total_mhz
            )));
        }
        if !(self.coupling_scale >= 0.0) {
            return Err(Error::invalid("coupling scale must be >= 0"));
        }
        Ok(())
    }
}

/// One or two cavity modes and the spin components they couple to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystem {
    pub modes: Vec<CavityModeSpec>,
    /// Spin components (e.g. one per transition); their susceptibilities add.
    pub spins: Vec<SpinEnsembleSpec>,
}

impl CoupledSystem {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.modes.len() > 2 {
            return Err(Error::invalid("a coupled system holds one or two cavity modes"));
        }
        for m in &self.modes {
            m.validate()?;
        }
        for s in &self.spins {
            s.validate()?;
        }
        Ok(())
    }

    /// Total spin self-energy seen by a mode with unit coupling scale.
    pub fn susceptibility(&self, probe_ghz: f64) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for s in &self.spins {
            total += spin_susceptibility(probe_ghz, s)?;
        }
        Ok(total)
    }
}

fn port_index(port: usize) -> Result<usize> {
    if port >= 4 {
        return Err(Error::invalid(format!("port index {port} not in 0..4")));
    }
    Ok(port)
}

/// S_out,in(ω) = Σ_m √(κ_in κ_out)·A_in A_out / (κ_m + i(ω_m − ω) + Σ_m(ω)).
///
/// Ports are 0-based. Modes with a zero amplitude at either port contribute
/// exactly zero.
pub fn transmission(probe_ghz: f64, system: &CoupledSystem, port_in: usize, port_out: usize) -> Result<Complex64> {
    system.validate()?;
    let (pi, po) = (port_index(port_in)?, port_index(port_out)?);
    if !system
        .modes
        .iter()
        .any(|m| m.port_amplitudes[pi] * m.port_amplitudes[po] != 0.0)
    {
        return Err(Error::invalid(format!(
            "no mode couples ports {} and {}",
            port_in + 1,
            port_out + 1
        )));
    }
    let sigma = system.susceptibility(probe_ghz)?;
    Ok(transmission_with_susceptibility(probe_ghz, &system.modes, sigma, pi, po))
}

pub(crate) fn transmission_with_susceptibility(
    probe_ghz: f64,
    modes: &[CavityModeSpec],
    sigma: Complex64,
    pi: usize,
    po: usize,
) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for m in modes {
        let amp = m.port_amplitudes[pi] * m.port_amplitudes[po];
        if amp == 0.0 {
            continue;
        }
        let num = (m.kappa_c_mhz[pi] * m.kappa_c_mhz[po]).sqrt() * amp;
        let den = Complex64::new(m.kappa_total_mhz, (m.frequency_ghz - probe_ghz) * 1e3)
            + sigma * (m.coupling_scale * m.coupling_scale);
        s += num / den;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polariton {
    pub frequency_ghz: f64,
    pub half_linewidth_mhz: f64,
}

/// Eigenvalues of [[ω_c − iκ, g], [g, ν_s − iγ_eff]], ascending in frequency.
pub fn polariton_frequencies(
    cavity_ghz: f64,
    kappa_mhz: f64,
    g_col_mhz: f64,
    spin_ghz: f64,
    gamma_eff_mhz: f64,
) -> [Polariton; 2] {
    // work in MHz relative to the cavity to keep the small splitting precise
    let a = Complex64::new(0.0, -kappa_mhz);
    let b = Complex64::new((spin_ghz - cavity_ghz) * 1e3, -gamma_eff_mhz);
    let mean = (a + b) * 0.5;
    let half = (a - b) * 0.5;
    let root = (half * half + g_col_mhz * g_col_mhz).sqrt();
    let mut ev = [mean - root, mean + root];
    ev.sort_by(|x, y| x.re.total_cmp(&y.re));
    ev.map(|e| Polariton {
        frequency_ghz: cavity_ghz + e.re * 1e-3,
        half_linewidth_mhz: -e.im,
    })
}

/// Normalization of ⟨S_z⟩ used when evaluating the dispersive shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DispersiveConvention {
    /// χ = 2 g² S_z / Δ with S_z the σ_z = ±1 population imbalance.
    #[default]
    Literal,
    /// χ = −g² S_z / Δ: the level-repulsion shift of the linear-response model
    /// (+g²/Δ for a fully polarized ensemble below the cavity).
    Polariton,
}

impl DispersiveConvention {
    fn factor(self) -> f64 {
        match self {
            DispersiveConvention::Literal => 2.0,
            DispersiveConvention::Polariton => -1.0,
        }
    }
}

/// Detunings smaller than this multiple of g fall outside the dispersive regime.
pub const DISPERSIVE_VALIDITY_RATIO: f64 = 5.0;

pub fn in_dispersive_regime(g_col_mhz: f64, detuning_mhz: f64) -> bool {
    detuning_mhz.abs() >= DISPERSIVE_VALIDITY_RATIO * g_col_mhz
}

/// χ = 2 g² S_z / Δ, with Δ = ω_c − ω_NV (MHz).
pub fn dispersive_shift(g_col_mhz: f64, sz: f64, detuning_mhz: f64) -> Result<f64> {
    dispersive_shift_with(DispersiveConvention::Literal, g_col_mhz, sz, detuning_mhz)
}

pub fn dispersive_shift_with(
    convention: DispersiveConvention,
    g_col_mhz: f64,
    sz: f64,
    detuning_mhz: f64,
) -> Result<f64> {
    if detuning_mhz == 0.0 || !detuning_mhz.is_finite() {
        return Err(Error::SingularInput("dispersive shift needs a nonzero detuning".into()));
    }
    Ok(convention.factor() * g_col_mhz * g_col_mhz * sz / detuning_mhz)
}

/// Inverse of [`dispersive_shift`]: g = √(χΔ / (2 S_z)).
pub fn extract_g(chi_mhz: f64, detuning_mhz: f64, sz: f64) -> Result<f64> {
    extract_g_with(DispersiveConvention::Literal, chi_mhz, detuning_mhz, sz)
}

pub fn extract_g_with(
    convention: DispersiveConvention,
    chi_mhz: f64,
    detuning_mhz: f64,
    sz: f64,
) -> Result<f64> {
    let ratio = chi_mhz * detuning_mhz / (convention.factor() * sz);
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::invalid(format!(
            "sign mismatch: χ = {chi_mhz}, Δ = {detuning_mhz}, S_z = {sz} admit no real coupling"
        )));
    }
    Ok(ratio.sqrt())
}

/// Sum of per-transition shifts for (g_col, Δ) pairs at a common S_z.
pub fn multi_transition_shift(transitions: &[(f64, f64)], sz: f64) -> Result<f64> {
    transitions
        .iter()
        .map(|&(g, d)| dispersive_shift(g, sz, d))
        .sum()
}

/// C = g²/(κ γ_eff).
pub fn cooperativity(g_col_mhz: f64, kappa_mhz: f64, gamma_eff_mhz: f64) -> Result<f64> {
    if !(kappa_mhz > 0.0) || !(gamma_eff_mhz > 0.0) {
        return Err(Error::invalid("loss rates must be > 0"));
    }
    Ok(g_col_mhz * g_col_mhz / (kappa_mhz * gamma_eff_mhz))
}

/// g exceeds the mean of the two loss rates.
pub fn strong_coupling(g_col_mhz: f64, kappa_mhz: f64, gamma_eff_mhz: f64) -> bool {
    g_col_mhz > 0.5 * (kappa_mhz + gamma_eff_mhz)
}
