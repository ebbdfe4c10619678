//! Run configuration: a TOML document whose keys carry their unit in the name
//! (`_ghz`, `_mhz`, `_mt`, `_nh`, `_pf`, `_k`, `_hz`, `_ppm`, `_mm`).
//!
//! Ports are numbered 1–4 here, matching instrument labels; the library uses
//! 0-based indices.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{Perturbation, ResonatorNetwork, Symmetry};
use crate::error::{Error, Result};
use crate::nv::{self, MagneticField, NvSpinModel};
use crate::qed::{self, CavityModeSpec, DispersiveConvention, Lineshape, SpinEnsembleSpec};
use crate::spectroscopy::{SweepConfig, SweepTemplate};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub spin: SpinSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator: Option<ResonatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersive: Option<DispersiveSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSection {
    #[serde(default = "default_d")]
    pub zero_field_splitting_ghz: f64,
    #[serde(default = "default_gamma")]
    pub gyromagnetic_ratio_ghz_per_t: f64,
    #[serde(default)]
    pub strain_ghz: f64,
    /// Static-field direction in the crystal frame.
    #[serde(default = "default_direction")]
    pub direction: [f64; 3],
}

fn default_d() -> f64 {
    nv::DEFAULT_ZERO_FIELD_SPLITTING_GHZ
}

fn default_gamma() -> f64 {
    nv::DEFAULT_GYROMAGNETIC_RATIO_GHZ_PER_T
}

fn default_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl Default for SpinSection {
    fn default() -> Self {
        Self {
            zero_field_splitting_ghz: default_d(),
            gyromagnetic_ratio_ghz_per_t: default_gamma(),
            strain_ghz: 0.0,
            direction: default_direction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    /// Spin count; falls back to the [sample] estimate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_spins: Option<f64>,
    /// Exactly one of `collective_coupling_mhz` and `g0_hz` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collective_coupling_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0_hz: Option<f64>,
    pub inhomogeneous_hwhm_mhz: f64,
    #[serde(default = "default_gamma_h")]
    pub homogeneous_hwhm_mhz: f64,
    #[serde(default)]
    pub lineshape: Lineshape,
    /// When set, the two-level polarization follows the thermal populations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<f64>,
    #[serde(default = "yes")]
    pub include_minus_transition: bool,
}

fn default_gamma_h() -> f64 {
    qed::DEFAULT_HOMOGENEOUS_HWHM_MHZ
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wing_inductance_nh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_inductance_nh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_inductance_nh: Option<f64>,
    /// Explicit wing capacitances; otherwise calibrated to the two targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wing_capacitances_pf: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_ax_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_ay_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacitance_perturbation_pf: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeEntry>,
}

/// A mode taken from the network by `symmetry`, or given directly with
/// `frequency_ghz` and `port_amplitudes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Symmetry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port_amplitudes: Option<[f64; 4]>,
    pub kappa_internal_mhz: f64,
    pub kappa_c_mhz: [f64; 4],
    #[serde(default = "one")]
    pub coupling_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub field_min_mt: f64,
    pub field_max_mt: f64,
    pub field_steps: usize,
    pub freq_min_ghz: f64,
    pub freq_max_ghz: f64,
    pub freq_steps: usize,
    pub port_in: usize,
    pub port_out: usize,
    #[serde(default)]
    pub normalize: bool,
    /// Field used by the `linecut` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linecut_field_mt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub concentration_ppm: f64,
    pub dimensions_mm: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveSection {
    /// Readout mode, by symmetry label.
    pub mode: Symmetry,
    /// Δ = ω_c − ν_s; when absent, ν_s comes from the NV model at `field_mt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_mt: Option<f64>,
    /// Overrides the ensemble polarization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sz: Option<f64>,
    #[serde(default)]
    pub convention: DispersiveConvention,
    pub port_in: usize,
    pub port_out: usize,
    #[serde(default = "default_span")]
    pub span_mhz: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// A measured |χ| to compare against; only used for report notes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_chi_mhz: Option<f64>,
}

fn default_span() -> f64 {
    10.0
}

fn default_points() -> usize {
    801
}

fn port_index(p: usize, what: &str) -> Result<usize> {
    if (1..=4).contains(&p) {
        Ok(p - 1)
    } else {
        Err(Error::invalid(format!("{what} must be in 1..=4, got {p}")))
    }
}

fn missing(key: &str) -> Error {
    Error::invalid(format!("missing required key `{key}`"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn nv_model(&self) -> Result<NvSpinModel> {
        NvSpinModel::new(
            self.spin.zero_field_splitting_ghz,
            self.spin.strain_ghz,
            self.spin.gyromagnetic_ratio_ghz_per_t,
        )
    }

    pub fn direction(&self) -> Result<[f64; 3]> {
        nv::unit(self.spin.direction)
    }

    /// Network, if the [resonator] section describes one.
    pub fn network(&self) -> Result<Option<ResonatorNetwork>> {
        let r = match &self.resonator {
            Some(r) => r,
            None => return Ok(None),
        };
        let lw = match r.wing_inductance_nh {
            Some(l) => l * 1e-9,
            None => return Ok(None),
        };
        let lg = r
            .return_inductance_nh
            .ok_or_else(|| missing("resonator.return_inductance_nh"))?
            * 1e-9;
        let cross = r.cross_inductance_nh.map(|l| l * 1e-9);
        let mut net = match (r.wing_capacitances_pf, r.calibrate_ax_ghz, r.calibrate_ay_ghz) {
            (Some(c), _, _) => ResonatorNetwork {
                wing_capacitances_f: c.map(|v| v * 1e-12),
                wing_inductance_h: lw,
                return_inductance_h: lg,
                cross_inductance_h: cross,
                perturbation: Perturbation::default(),
            },
            (None, Some(fx), Some(fy)) => ResonatorNetwork::calibrated(fx, fy, lw, lg, cross)?,
            _ => {
                return Err(Error::invalid(
                    "resonator needs wing_capacitances_pf or both calibrate_ax_ghz and calibrate_ay_ghz",
                ))
            }
        };
        if let Some(dc) = r.capacitance_perturbation_pf {
            net.perturbation.capacitance_f = dc.map(|v| v * 1e-12);
        }
        net.validate()?;
        Ok(Some(net))
    }

    pub fn cavity_modes(&self) -> Result<Vec<CavityModeSpec>> {
        let r = self.resonator.as_ref().ok_or_else(|| missing("[resonator]"))?;
        if r.modes.is_empty() {
            return Err(missing("resonator.modes"));
        }
        let net = self.network()?;
        let classified = net.as_ref().map(|n| n.classify_modes()).transpose()?;
        r.modes
            .iter()
            .map(|m| {
                let (frequency_ghz, amps, symmetry) = match (m.frequency_ghz, m.symmetry) {
                    (Some(f), sym) => {
                        let amps = m
                            .port_amplitudes
                            .ok_or_else(|| missing("resonator.modes.port_amplitudes"))?;
                        (f, amps, sym)
                    }
                    (None, Some(sym)) => {
                        let modes = classified.as_ref().ok_or_else(|| {
                            Error::invalid(format!(
                                "mode {} is taken from the network, but no network is configured",
                                sym.label()
                            ))
                        })?;
                        let mode = modes
                            .iter()
                            .find(|x| x.symmetry == sym)
                            .ok_or_else(|| Error::invalid(format!("network has no {} mode", sym.label())))?;
                        (mode.frequency_ghz, m.port_amplitudes.unwrap_or(mode.relative_amplitudes()), Some(sym))
                    }
                    (None, None) => return Err(Error::invalid("each mode needs symmetry or frequency_ghz")),
                };
                let mut spec = CavityModeSpec::new(frequency_ghz, 0.0, amps).with_port_coupling(m.kappa_c_mhz);
                spec.kappa_total_mhz = m.kappa_internal_mhz + spec.external_kappa_mhz();
                spec.symmetry = symmetry;
                spec.coupling_scale = m.coupling_scale;
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }

    /// Spins from [sample], when present.
    pub fn estimated_spins(&self) -> Result<Option<f64>> {
        self.sample
            .as_ref()
            .map(|s| {
                let [a, b, c] = s.dimensions_mm;
                nv::ensemble_size(s.concentration_ppm, a * b * c)
            })
            .transpose()
    }

    pub fn n_spins(&self) -> Result<f64> {
        let e = self.ensemble.as_ref().ok_or_else(|| missing("[ensemble]"))?;
        match e.n_spins {
            Some(n) => Ok(n),
            None => self
                .estimated_spins()?
                .ok_or_else(|| Error::invalid("ensemble.n_spins is absent and there is no [sample] to estimate it")),
        }
    }

    /// Two-level ⟨S_z⟩ for the ensemble, thermal if a temperature is given.
    pub fn polarization(&self, levels: Option<&nv::SpinLevels>) -> Result<f64> {
        let e = self.ensemble.as_ref().ok_or_else(|| missing("[ensemble]"))?;
        match (e.temperature_k, e.polarization) {
            (_, Some(p)) => Ok(p),
            (Some(t), None) => {
                let levels = match levels {
                    Some(l) => *l,
                    None => self.nv_model()?.levels(&MagneticField::zero(), 0)?,
                };
                Ok(nv::thermal_polarization(&levels, t)?.two_level_sz)
            }
            (None, None) => Ok(-1.0),
        }
    }

    /// Per-transition ensemble spec; the center is a placeholder.
    pub fn ensemble(&self) -> Result<SpinEnsembleSpec> {
        let e = self.ensemble.as_ref().ok_or_else(|| missing("[ensemble]"))?;
        let n = self.n_spins()?;
        let g0_hz = match (e.collective_coupling_mhz, e.g0_hz) {
            (Some(g), None) => qed::single_spin_coupling(g * 1e6, n)?,
            (None, Some(g0)) => g0,
            _ => {
                return Err(Error::invalid(
                    "set exactly one of ensemble.collective_coupling_mhz and ensemble.g0_hz",
                ))
            }
        };
        let spec = SpinEnsembleSpec {
            n_spins: n,
            g0_hz,
            center_ghz: nv::DEFAULT_ZERO_FIELD_SPLITTING_GHZ,
            inhomogeneous_hwhm_mhz: e.inhomogeneous_hwhm_mhz,
            homogeneous_hwhm_mhz: e.homogeneous_hwhm_mhz,
            lineshape: e.lineshape,
            polarization: self.polarization(None)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sweep_template(&self) -> Result<SweepTemplate> {
        Ok(SweepTemplate {
            nv: self.nv_model()?,
            modes: self.cavity_modes()?,
            ensemble: self.ensemble()?,
            include_minus_transition: self.ensemble.as_ref().is_none_or(|e| e.include_minus_transition),
        })
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let s = self.sweep.as_ref().ok_or_else(|| missing("[sweep]"))?;
        let cfg = SweepConfig {
            field_min_mt: s.field_min_mt,
            field_max_mt: s.field_max_mt,
            field_steps: s.field_steps,
            direction: self.direction()?,
            freq_min_ghz: s.freq_min_ghz,
            freq_max_ghz: s.freq_max_ghz,
            freq_steps: s.freq_steps,
            port_in: port_index(s.port_in, "sweep.port_in")?,
            port_out: port_index(s.port_out, "sweep.port_out")?,
            normalize: s.normalize,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dispersive_ports(&self) -> Result<(usize, usize)> {
        let d = self.dispersive.as_ref().ok_or_else(|| missing("[dispersive]"))?;
        Ok((port_index(d.port_in, "dispersive.port_in")?, port_index(d.port_out, "dispersive.port_out")?))
    }
}

/// The reference configuration: calibrated network, both readout modes,
/// a 5 MHz ensemble of 2×10¹⁶ spins and the default sweep window.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.toml");
