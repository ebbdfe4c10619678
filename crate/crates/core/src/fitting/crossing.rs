//! Avoided-crossing fit: collective coupling and cavity frequency from the
//! two branch positions in each row of a field sweep.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use super::peaks::{find_lorentzian_peaks, median, refine_lorentzian};
use crate::error::{Error, Result};
use crate::nv::unit;
use crate::qed::{self, CavityModeSpec, SpinEnsembleSpec};
use crate::spectroscopy::{SweepResult, SweepTemplate};

/// How branch positions are predicted from (g, ω_c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchModel {
    /// Maxima of the model |S|², located on the sweep grid with the same
    /// sub-grid interpolation as the measured peaks.
    #[default]
    TransmissionPeaks,
    /// Real parts of the 2×2 non-Hermitian eigenvalues. Faster, but biased
    /// once κ and Γ are comparable to g.
    Eigenvalues,
}

/// Spin transition frequency as a function of field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpinDispersion {
    /// Full NV Hamiltonian from the sweep's own template.
    #[default]
    NvModel,
    Linear { offset_ghz: f64, slope_ghz_per_mt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingFitOptions {
    pub branch_model: BranchModel,
    pub dispersion: SpinDispersion,
    /// Peaks must exceed this multiple of the row median of |S|².
    pub threshold_factor: f64,
    pub min_rows: usize,
}

impl Default for CrossingFitOptions {
    fn default() -> Self {
        Self {
            branch_model: BranchModel::TransmissionPeaks,
            dispersion: SpinDispersion::NvModel,
            threshold_factor: 3.0,
            min_rows: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingFit {
    pub g_col_mhz: f64,
    pub g_col_uncertainty_mhz: f64,
    pub cavity_ghz: f64,
    pub cavity_uncertainty_ghz: f64,
    /// RMS branch-position residual, MHz.
    pub rms_residual_mhz: f64,
    pub rows_used: usize,
    pub iterations: usize,
    pub branch_model: BranchModel,
}

/// One usable sweep row: field and the two branch positions (GHz).
#[derive(Debug, Clone, Copy)]
struct Row {
    field_mt: f64,
    lower: f64,
    upper: f64,
}

pub fn fit_avoided_crossing(sweep: &SweepResult) -> Result<CrossingFit> {
    fit_avoided_crossing_with(sweep, &CrossingFitOptions::default())
}

pub fn fit_avoided_crossing_with(sweep: &SweepResult, opts: &CrossingFitOptions) -> Result<CrossingFit> {
    sweep.validate()?;
    let snap = &sweep.metadata.snapshot;
    let (pi, po) = (snap.config.port_in, snap.config.port_out);
    let window = (sweep.frequencies_ghz[0], sweep.frequencies_ghz[sweep.n_frequencies() - 1]);
    let mid = 0.5 * (window.0 + window.1);
    let mode = snap
        .template
        .modes
        .iter()
        .filter(|m| m.port_amplitudes[pi] * m.port_amplitudes[po] != 0.0)
        .min_by(|a, b| (a.frequency_ghz - mid).abs().total_cmp(&(b.frequency_ghz - mid).abs()))
        .copied()
        .ok_or_else(|| Error::invalid("no mode is visible at the swept ports"))?;

    let df = (window.1 - window.0) / (sweep.n_frequencies() - 1) as f64;
    let mut rows = Vec::new();
    let mut singles = Vec::new();
    for i in 0..sweep.n_fields() {
        let y: Vec<f64> = sweep.row(i).iter().map(|z| z.norm_sqr()).collect();
        let thr = opts.threshold_factor * median(&y);
        let mut peaks: Vec<(f64, f64)> = find_lorentzian_peaks(&sweep.frequencies_ghz, &y, thr)
            .into_iter()
            .map(|f| {
                let k = (((f - window.0) / df).round() as usize).min(y.len() - 1);
                (f, y[k])
            })
            .collect();
        match peaks.len() {
            0 => {}
            1 => singles.push(peaks[0].0),
            _ => {
                peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
                let (a, b) = (peaks[0].0, peaks[1].0);
                rows.push(Row {
                    field_mt: sweep.fields_mt[i],
                    lower: a.min(b),
                    upper: a.max(b),
                });
            }
        }
    }
    if rows.len() < opts.min_rows {
        return Err(Error::InsufficientData(format!(
            "{} rows show two resolved branches, need at least {}",
            rows.len(),
            opts.min_rows
        )));
    }

    let narrowest = rows
        .iter()
        .min_by(|a, b| (a.upper - a.lower).total_cmp(&(b.upper - b.lower)))
        .unwrap();
    let cavity0 = if singles.is_empty() {
        0.5 * (narrowest.lower + narrowest.upper)
    } else {
        median(&singles)
    };
    let g0 = 0.5 * (narrowest.upper - narrowest.lower) * 1e3;

    let model = CrossingModel::new(&snap.template, snap.config.direction, mode, opts.dispersion, cavity0, &sweep.frequencies_ghz, pi, po)?;
    let lm_opts = LmOptions::default();
    // the eigenvalue model is smooth everywhere; use it to seed the peak model
    let eig = levenberg_marquardt(
        &Problem {
            model: &model,
            rows: &rows,
            kind: BranchModel::Eigenvalues,
        },
        &[g0, 0.0],
        lm_opts,
    )?;
    let res = match opts.branch_model {
        BranchModel::Eigenvalues => eig,
        BranchModel::TransmissionPeaks => {
            let mut r = levenberg_marquardt(
                &Problem {
                    model: &model,
                    rows: &rows,
                    kind: BranchModel::TransmissionPeaks,
                },
                &eig.params,
                lm_opts,
            )?;
            r.iterations += eig.iterations;
            r
        }
    };
    let n_res = 2 * rows.len();
    Ok(CrossingFit {
        g_col_mhz: res.params[0].abs(),
        g_col_uncertainty_mhz: res.std_error(0),
        cavity_ghz: cavity0 + res.params[1] * 1e-3,
        cavity_uncertainty_ghz: res.std_error(1) * 1e-3,
        rms_residual_mhz: res.residual_norm / (n_res as f64).sqrt(),
        rows_used: rows.len(),
        iterations: res.iterations,
        branch_model: opts.branch_model,
    })
}

struct CrossingModel {
    mode: CavityModeSpec,
    cavity0: f64,
    /// Spin components per field with unit total coupling, keyed by field.
    spins: SpinSource,
    gamma_eff_mhz: f64,
    /// The sweep's frequency grid; model peaks are located on it exactly as
    /// measured peaks are, so the grid's interpolation bias cancels.
    freqs: Vec<f64>,
    pi: usize,
    po: usize,
}

enum SpinSource {
    Nv { template: SweepTemplate, direction: [f64; 3] },
    Linear { ensemble: SpinEnsembleSpec, offset_ghz: f64, slope: f64 },
}

impl CrossingModel {
    #[allow(clippy::too_many_arguments)]
    fn new(
        template: &SweepTemplate,
        direction: [f64; 3],
        mode: CavityModeSpec,
        dispersion: SpinDispersion,
        cavity0: f64,
        freqs: &[f64],
        pi: usize,
        po: usize,
    ) -> Result<Self> {
        let mut unit_ens = template.ensemble;
        unit_ens.g0_hz = qed::single_spin_coupling(1e6, unit_ens.n_spins)?;
        let spins = match dispersion {
            SpinDispersion::NvModel => {
                let mut t = template.clone();
                t.ensemble = unit_ens;
                SpinSource::Nv {
                    template: t,
                    direction: unit(direction)?,
                }
            }
            SpinDispersion::Linear {
                offset_ghz,
                slope_ghz_per_mt,
            } => SpinSource::Linear {
                ensemble: unit_ens,
                offset_ghz,
                slope: slope_ghz_per_mt,
            },
        };
        Ok(Self {
            mode,
            cavity0,
            spins,
            gamma_eff_mhz: template.ensemble.effective_hwhm_mhz(),
            freqs: freqs.to_vec(),
            pi,
            po,
        })
    }

    fn spins_at(&self, field_mt: f64) -> Result<Vec<SpinEnsembleSpec>> {
        match &self.spins {
            SpinSource::Nv { template, direction } => template.spins_at(field_mt, *direction),
            SpinSource::Linear {
                ensemble,
                offset_ghz,
                slope,
            } => Ok(vec![SpinEnsembleSpec {
                center_ghz: offset_ghz + slope * field_mt,
                ..*ensemble
            }]),
        }
    }

    fn eigen_branches(&self, g: f64, cavity: f64, field_mt: f64) -> Result<(f64, f64)> {
        let spins = self.spins_at(field_mt)?;
        let nu = spins
            .iter()
            .map(|s| s.center_ghz)
            .min_by(|a, b| (a - cavity).abs().total_cmp(&(b - cavity).abs()))
            .ok_or_else(|| Error::invalid("no spin transition"))?;
        let p = qed::polariton_frequencies(cavity, self.mode.kappa_total_mhz, g, nu, self.gamma_eff_mhz);
        Ok((p[0].frequency_ghz, p[1].frequency_ghz))
    }

    fn peak_branches(&self, g: f64, cavity: f64, row: &Row) -> Result<(f64, f64)> {
        let spins = self.spins_at(row.field_mt)?;
        let mode = CavityModeSpec {
            frequency_ghz: cavity,
            coupling_scale: g,
            ..self.mode
        };
        let power = |f: f64| -> Result<f64> {
            let mut sigma = Complex64::new(0.0, 0.0);
            for s in &spins {
                sigma += qed::spin_susceptibility(f, s)?;
            }
            Ok(qed::transmission_with_susceptibility(f, std::slice::from_ref(&mode), sigma, self.pi, self.po).norm_sqr())
        };
        Ok((self.grid_peak(&power, row.lower)?, self.grid_peak(&power, row.upper)?))
    }

    /// Model counterpart of the measured peak near `near`: the strongest grid
    /// local maximum within a few samples, refined like the data.
    fn grid_peak<F: Fn(f64) -> Result<f64>>(&self, power: &F, near: f64) -> Result<f64> {
        const REACH: usize = 6;
        let n = self.freqs.len();
        let df = (self.freqs[n - 1] - self.freqs[0]) / (n - 1) as f64;
        let k0 = ((near - self.freqs[0]) / df).round().clamp(0.0, (n - 1) as f64) as usize;
        let lo = k0.saturating_sub(REACH + 1);
        let hi = (k0 + REACH + 1).min(n - 1);
        let y = (lo..=hi).map(|k| power(self.freqs[k])).collect::<Result<Vec<f64>>>()?;
        let best = (1..y.len() - 1)
            .filter(|&j| y[j] > y[j - 1] && y[j] >= y[j + 1])
            .max_by(|&a, &b| y[a].total_cmp(&y[b]));
        Ok(match best {
            Some(j) => refine_lorentzian(&self.freqs, [y[j - 1], y[j], y[j + 1]], lo + j),
            // peak has left the window: report the higher edge
            None if y[0] > y[y.len() - 1] => self.freqs[lo],
            None => self.freqs[hi],
        })
    }
}

struct Problem<'a> {
    model: &'a CrossingModel,
    rows: &'a [Row],
    kind: BranchModel,
}

impl LeastSquares for Problem<'_> {
    fn n_params(&self) -> usize {
        2
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        let g = p[0];
        let cavity = self.model.cavity0 + p[1] * 1e-3;
        let per_row: Vec<Result<[f64; 2]>> = self
            .rows
            .par_iter()
            .map(|row| {
                let (lo, hi) = match self.kind {
                    BranchModel::Eigenvalues => self.model.eigen_branches(g, cavity, row.field_mt)?,
                    BranchModel::TransmissionPeaks => self.model.peak_branches(g, cavity, row)?,
                };
                Ok([(lo - row.lower) * 1e3, (hi - row.upper) * 1e3])
            })
            .collect();
        let mut out = Vec::with_capacity(2 * self.rows.len());
        for r in per_row {
            out.extend(r?);
        }
        Ok(out)
    }

    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        // peak positions are only resolved to ~√ε of the linewidth, so use
        // steps well above that floor
        let n = 2 * self.rows.len();
        let mut j = DMatrix::zeros(n, 2);
        for k in 0..2 {
            let h = 1e-4 * p[k].abs().max(1.0);
            let mut q = p.to_vec();
            q[k] = p[k] + h;
            let rp = self.residuals(&q)?;
            q[k] = p[k] - h;
            let rm = self.residuals(&q)?;
            for i in 0..n {
                j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Ok(j)
    }
}
