use std::ffi::{c_char, CString};

use xmode_qed::nv::NvSpinModel;
use xmode_qed::spectroscopy::{self, SweepConfig, SweepResult, SweepTemplate};

use crate::qed::{ensemble_from, modes_from, XqCavityMode, XqSpinEnsemble};
use crate::{boxed, guard, read, write, write_slice, Fail, XqStatus};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqSweepConfig {
    pub field_min_mt: f64,
    pub field_max_mt: f64,
    pub field_steps: usize,
    pub direction: [f64; 3],
    pub freq_min_ghz: f64,
    pub freq_max_ghz: f64,
    pub freq_steps: usize,
    pub port_in: usize,
    pub port_out: usize,
    pub normalize: bool,
}

impl From<&XqSweepConfig> for SweepConfig {
    fn from(c: &XqSweepConfig) -> Self {
        SweepConfig {
            field_min_mt: c.field_min_mt,
            field_max_mt: c.field_max_mt,
            field_steps: c.field_steps,
            direction: c.direction,
            freq_min_ghz: c.freq_min_ghz,
            freq_max_ghz: c.freq_max_ghz,
            freq_steps: c.freq_steps,
            port_in: c.port_in,
            port_out: c.port_out,
            normalize: c.normalize,
        }
    }
}

/// Opaque sweep result.
pub struct XqSweep {
    pub(crate) inner: SweepResult,
    hash: CString,
}

/// Default grid: 0–25 mT × 200 along [100], 3.10–3.28 GHz × 400, ports 0 → 1.
#[no_mangle]
pub unsafe extern "C" fn xq_sweep_config_default(out: *mut XqSweepConfig) -> XqStatus {
    guard(|| {
        let d = SweepConfig::default();
        write(
            out,
            "out",
            XqSweepConfig {
                field_min_mt: d.field_min_mt,
                field_max_mt: d.field_max_mt,
                field_steps: d.field_steps,
                direction: d.direction,
                freq_min_ghz: d.freq_min_ghz,
                freq_max_ghz: d.freq_max_ghz,
                freq_steps: d.freq_steps,
                port_in: d.port_in,
                port_out: d.port_out,
                normalize: d.normalize,
            },
        )
    })
}

/// Runs a field sweep with the default NV model. The ensemble's
/// `center_ghz` is ignored; spin centers follow the field.
#[no_mangle]
pub unsafe extern "C" fn xq_sweep_run(
    config: *const XqSweepConfig,
    modes: *const XqCavityMode,
    n_modes: usize,
    ensemble: *const XqSpinEnsemble,
    include_minus_transition: bool,
    out: *mut *mut XqSweep,
) -> XqStatus {
    guard(|| {
        let cfg = SweepConfig::from(read(config, "config")?);
        let template = SweepTemplate {
            nv: NvSpinModel::default(),
            modes: modes_from(modes, n_modes)?,
            ensemble: ensemble_from(read(ensemble, "ensemble")?)?,
            include_minus_transition,
        };
        let inner = spectroscopy::field_sweep(&cfg, &template)?;
        let hash = CString::new(inner.metadata.config_hash.clone())
            .map_err(|_| Fail::new(XqStatus::Numerical, "hash contains a nul byte"))?;
        boxed(out, XqSweep { inner, hash })
    })
}

#[no_mangle]
pub unsafe extern "C" fn xq_sweep_free(sweep: *mut XqSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

#[no_mangle]
pub unsafe extern "C" fn xq_sweep_shape(sweep: *const XqSweep, n_fields: *mut usize, n_frequencies: *mut usize) -> XqStatus {
    guard(|| {
        let s = read(sweep, "sweep")?;
        write(n_fields, "n_fields", s.inner.n_fields())?;
        write(n_frequencies, "n_frequencies", s.inner.n_frequencies())
    })
}

#[no_mangle]
pub unsafe extern "C" fn xq_sweep_fields(sweep: *const XqSweep, fields_mt: *mut f64, len: usize) -> XqStatus {
    guard(|| write_slice(fields_mt, len, "fields_mt", &read(sweep, "sweep")?.inner.fields_mt))
}

#[no_mangle]
pub unsafe extern "C" fn xq_sweep_frequencies(sweep: *const XqSweep, frequencies_ghz: *mut f64, len: usize) -> XqStatus {
    guard(|| write_slice(frequencies_ghz, len, "frequencies_ghz", &read(sweep, "sweep")?.inner.frequencies_ghz))
}

/// Grid values, field-major: entry i·n_frequencies + j is (field i, frequency j).
#[no_mangle]
pub unsafe extern "C" fn xq_sweep_data(sweep: *const XqSweep, re: *mut f64, im: *mut f64, len: usize) -> XqStatus {
    guard(|| {
        let s = read(sweep, "sweep")?;
        let r: Vec<f64> = s.inner.data.iter().map(|z| z.re).collect();
        let i: Vec<f64> = s.inner.data.iter().map(|z| z.im).collect();
        write_slice(re, len, "re", &r)?;
        write_slice(im, len, "im", &i)
    })
}

/// Hex config hash; owned by the sweep handle.
#[no_mangle]
pub unsafe extern "C" fn xq_sweep_config_hash(sweep: *const XqSweep) -> *const c_char {
    sweep.as_ref().map_or(std::ptr::null(), |s| s.hash.as_ptr())
}
