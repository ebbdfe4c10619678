use xmode_qed::nv::{self, Branch, MagneticField, NvSpinModel};

use crate::{array, boxed, guard, read, write, write_slice, XqStatus};

/// Opaque NV ground-state model.
pub struct XqNvModel {
    inner: NvSpinModel,
}

#[no_mangle]
pub extern "C" fn xq_nv_model_new(
    zero_field_splitting_ghz: f64,
    strain_ghz: f64,
    gyromagnetic_ratio_ghz_per_t: f64,
    out: *mut *mut XqNvModel,
) -> XqStatus {
    guard(|| {
        let inner = NvSpinModel::new(zero_field_splitting_ghz, strain_ghz, gyromagnetic_ratio_ghz_per_t)?;
        boxed(out, XqNvModel { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn xq_nv_model_free(model: *mut XqNvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Transition frequencies (GHz) of the four orientation classes for a field of
/// `field_t` tesla along `direction` (3 values). Each output holds 4 values.
#[no_mangle]
pub unsafe extern "C" fn xq_nv_transitions(
    model: *const XqNvModel,
    direction: *const f64,
    field_t: f64,
    plus_ghz: *mut f64,
    minus_ghz: *mut f64,
) -> XqStatus {
    guard(|| {
        let m = read(model, "model")?;
        let field = MagneticField::along(array::<3>(direction, "direction")?, field_t)?;
        let levels = m.inner.transition_frequencies(&field)?;
        write_slice(plus_ghz, 4, "plus_ghz", &levels.map(|l| l.transition_plus_ghz))?;
        write_slice(minus_ghz, 4, "minus_ghz", &levels.map(|l| l.transition_minus_ghz))
    })
}

/// Field magnitude (tesla) along `direction` that tunes the m_s = +1
/// (`plus` true) or −1 transition of the best-aligned axis to `target_ghz`.
#[no_mangle]
pub unsafe extern "C" fn xq_nv_resonant_field(
    model: *const XqNvModel,
    target_ghz: f64,
    direction: *const f64,
    plus: bool,
    field_t: *mut f64,
) -> XqStatus {
    guard(|| {
        let m = read(model, "model")?;
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let b = m.inner.resonant_field(target_ghz, array::<3>(direction, "direction")?, branch)?;
        write(field_t, "field_t", b)
    })
}

/// Boltzmann populations (ascending energy, 3 values) of orientation class
/// `axis` at `temperature_k`.
#[no_mangle]
pub unsafe extern "C" fn xq_nv_thermal_populations(
    model: *const XqNvModel,
    direction: *const f64,
    field_t: f64,
    axis: usize,
    temperature_k: f64,
    populations: *mut f64,
) -> XqStatus {
    guard(|| {
        let m = read(model, "model")?;
        let field = MagneticField::along(array::<3>(direction, "direction")?, field_t)?;
        let levels = m.inner.levels(&field, axis)?;
        let p = nv::thermal_polarization(&levels, temperature_k)?;
        write_slice(populations, 3, "populations", &p.populations)
    })
}

/// NV count for a concentration (ppm of carbon sites) in a volume (mm³).
#[no_mangle]
pub unsafe extern "C" fn xq_ensemble_size(concentration_ppm: f64, volume_mm3: f64, n_spins: *mut f64) -> XqStatus {
    guard(|| write(n_spins, "n_spins", nv::ensemble_size(concentration_ppm, volume_mm3)?))
}
