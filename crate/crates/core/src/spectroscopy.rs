//! Field sweeps: transmission maps over (static field, probe frequency).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nv::{unit, MagneticField, NvSpinModel};
use crate::qed::{self, CavityModeSpec, CoupledSystem, SpinEnsembleSpec};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "XMODE_THREADS";

/// Spin centers closer than this (GHz) are merged into one component.
const MERGE_TOL_GHZ: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub field_min_mt: f64,
    pub field_max_mt: f64,
    pub field_steps: usize,
    /// Field direction in the crystal frame; normalized before use.
    pub direction: [f64; 3],
    pub freq_min_ghz: f64,
    pub freq_max_ghz: f64,
    pub freq_steps: usize,
    /// 0-based input and output ports.
    pub port_in: usize,
    pub port_out: usize,
    pub normalize: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            field_min_mt: 0.0,
            field_max_mt: 25.0,
            field_steps: 200,
            direction: [1.0, 0.0, 0.0],
            freq_min_ghz: 3.10,
            freq_max_ghz: 3.28,
            freq_steps: 400,
            port_in: 0,
            port_out: 1,
            normalize: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.field_steps < 2 || self.freq_steps < 2 {
            return Err(Error::invalid("sweep axes need at least 2 steps"));
        }
        if !(self.field_min_mt < self.field_max_mt) || !(self.field_min_mt >= 0.0) {
            return Err(Error::invalid("field axis needs 0 <= min < max"));
        }
        if !(self.freq_min_ghz < self.freq_max_ghz) || !(self.freq_min_ghz > 0.0) {
            return Err(Error::invalid("frequency axis needs 0 < min < max"));
        }
        if self.port_in >= 4 || self.port_out >= 4 {
            return Err(Error::invalid("ports must be in 1..=4"));
        }
        unit(self.direction)?;
        Ok(())
    }

    pub fn field_axis(&self) -> Vec<f64> {
        linspace(self.field_min_mt, self.field_max_mt, self.field_steps)
    }

    pub fn frequency_axis(&self) -> Vec<f64> {
        linspace(self.freq_min_ghz, self.freq_max_ghz, self.freq_steps)
    }
}

/// Inclusive, uniformly spaced; the last point is exactly `max`.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    let step = (max - min) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| min + step * i as f64).collect();
    v[n - 1] = max;
    v
}

/// Everything except the spin center frequency, which each field row sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTemplate {
    pub nv: NvSpinModel,
    pub modes: Vec<CavityModeSpec>,
    /// Per-transition ensemble; `center_ghz` is ignored.
    pub ensemble: SpinEnsembleSpec,
    /// Include the m_s = −1 transition alongside m_s = +1.
    pub include_minus_transition: bool,
}

impl SweepTemplate {
    /// Spin components at a field: each orientation sub-ensemble holds N/4 of
    /// the spins, once per included transition. Coincident centers merge.
    pub fn spins_at(&self, field_mt: f64, direction: [f64; 3]) -> Result<Vec<SpinEnsembleSpec>> {
        let field = MagneticField::along(direction, field_mt * 1e-3)?;
        let levels = self.nv.transition_frequencies(&field)?;
        let mut centers: Vec<f64> = Vec::with_capacity(8);
        for lv in &levels {
            centers.push(lv.transition_plus_ghz);
            if self.include_minus_transition {
                centers.push(lv.transition_minus_ghz);
            }
        }
        let quarter = self.ensemble.n_spins / 4.0;
        let mut out: Vec<SpinEnsembleSpec> = Vec::new();
        for c in centers {
            match out.iter_mut().find(|s| (s.center_ghz - c).abs() <= MERGE_TOL_GHZ) {
                Some(s) => s.n_spins += quarter,
                None => out.push(SpinEnsembleSpec {
                    center_ghz: c,
                    n_spins: quarter,
                    ..self.ensemble
                }),
            }
        }
        Ok(out)
    }

    pub fn system_at(&self, field_mt: f64, direction: [f64; 3]) -> Result<CoupledSystem> {
        Ok(CoupledSystem {
            modes: self.modes.clone(),
            spins: self.spins_at(field_mt, direction)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSnapshot {
    pub config: SweepConfig,
    pub template: SweepTemplate,
}

impl SweepSnapshot {
    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("snapshot serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config_hash: String,
    pub snapshot: SweepSnapshot,
    /// Unix seconds at creation; absent for reproducible output.
    pub created_unix: Option<u64>,
    /// Factor the grid was divided by, if normalized.
    pub normalized_by: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub fields_mt: Vec<f64>,
    pub frequencies_ghz: Vec<f64>,
    /// Row-major: `data[i * n_freq + j]` is (field i, frequency j).
    pub data: Vec<Complex64>,
    pub metadata: SweepMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineCut {
    pub field_mt: f64,
    pub frequencies_ghz: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SweepResult {
    pub fn n_fields(&self) -> usize {
        self.fields_mt.len()
    }

    pub fn n_frequencies(&self) -> usize {
        self.frequencies_ghz.len()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.n_frequencies();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn get(&self, field_index: usize, freq_index: usize) -> Complex64 {
        self.data[field_index * self.n_frequencies() + freq_index]
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.n_fields() * self.n_frequencies() {
            return Err(Error::invalid("grid size does not match axis lengths"));
        }
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("grid contains non-finite entries"));
        }
        Ok(())
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Evaluates the transmission on every (field, frequency) grid point.
///
/// Rows are computed in parallel and assembled by index, so the grid is
/// bit-identical for any thread count.
pub fn field_sweep(config: &SweepConfig, template: &SweepTemplate) -> Result<SweepResult> {
    config.validate()?;
    let probe = CoupledSystem {
        modes: template.modes.clone(),
        spins: vec![],
    };
    probe.validate()?;
    template.ensemble.validate()?;
    if !template.modes.iter().any(|m| {
        m.port_amplitudes[config.port_in] * m.port_amplitudes[config.port_out] != 0.0
    }) {
        return Err(Error::invalid(format!(
            "no mode couples ports {} and {}",
            config.port_in + 1,
            config.port_out + 1
        )));
    }

    let fields = config.field_axis();
    let freqs = config.frequency_axis();
    let dir = unit(config.direction)?;

    let compute_row = |(i, &b): (usize, &f64)| -> Result<Vec<Complex64>> {
        let spins = template.spins_at(b, dir)?;
        freqs
            .iter()
            .enumerate()
            .map(|(j, &f)| {
                let mut sigma = Complex64::new(0.0, 0.0);
                for s in &spins {
                    sigma += qed::spin_susceptibility(f, s).map_err(|e| {
                        Error::numerical(format!("at field {b} mT (row {i}), frequency {f} GHz (column {j}): {e}"))
                    })?;
                }
                Ok(qed::transmission_with_susceptibility(
                    f,
                    &template.modes,
                    sigma,
                    config.port_in,
                    config.port_out,
                ))
            })
            .collect()
    };

    let rows: Vec<Result<Vec<Complex64>>> = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::numerical(format!("thread pool: {e}")))?
            .install(|| fields.par_iter().enumerate().map(compute_row).collect()),
        None => fields.par_iter().enumerate().map(compute_row).collect(),
    };
    let mut data = Vec::with_capacity(fields.len() * freqs.len());
    for r in rows {
        data.extend(r?);
    }

    let snapshot = SweepSnapshot {
        config: config.clone(),
        template: template.clone(),
    };
    let mut result = SweepResult {
        fields_mt: fields,
        frequencies_ghz: freqs,
        data,
        metadata: SweepMetadata {
            config_hash: snapshot.hash(),
            snapshot,
            created_unix: None,
            normalized_by: None,
        },
    };
    if config.normalize {
        result = normalize(&result)?;
    }
    Ok(result)
}

/// Nearest grid row to `field_mt`; the reported field is the grid value.
pub fn linecut(result: &SweepResult, field_mt: f64) -> Result<LineCut> {
    let (lo, hi) = match (result.fields_mt.first(), result.fields_mt.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::invalid("empty sweep")),
    };
    let slack = 1e-9 * (hi - lo).abs().max(1.0);
    if !(field_mt >= lo - slack && field_mt <= hi + slack) {
        return Err(Error::invalid(format!(
            "field {field_mt} mT outside the swept range [{lo}, {hi}] mT"
        )));
    }
    let i = result
        .fields_mt
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - field_mt).abs().total_cmp(&(b.1 - field_mt).abs()))
        .map(|(i, _)| i)
        .unwrap();
    Ok(LineCut {
        field_mt: result.fields_mt[i],
        frequencies_ghz: result.frequencies_ghz.clone(),
        values: result.row(i).to_vec(),
    })
}

/// Scales the grid so the largest |S| is 1. Phases are untouched.
pub fn normalize(result: &SweepResult) -> Result<SweepResult> {
    let max = result.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::invalid("cannot normalize an all-zero grid"));
    }
    let mut out = result.clone();
    for z in out.data.iter_mut() {
        *z /= max;
    }
    out.metadata.normalized_by = Some(result.metadata.normalized_by.unwrap_or(1.0) * max);
    Ok(out)
}
