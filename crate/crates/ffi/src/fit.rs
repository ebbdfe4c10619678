use xmode_qed::fitting;

use crate::sweep::XqSweep;
use crate::{guard, read, slice, write, Fail, XqStatus};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqLorentzianFit {
    pub center_ghz: f64,
    pub hwhm_mhz: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub center_uncertainty_ghz: f64,
    pub hwhm_uncertainty_mhz: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqCrossingFit {
    pub g_col_mhz: f64,
    pub g_col_uncertainty_mhz: f64,
    pub cavity_ghz: f64,
    pub cavity_uncertainty_ghz: f64,
    pub rms_residual_mhz: f64,
    pub rows_used: usize,
}

/// Fits A·κ²/(κ² + (ω − f0)²) + b to `n` samples of |S|².
#[no_mangle]
pub unsafe extern "C" fn xq_fit_lorentzian(
    frequencies_ghz: *const f64,
    power: *const f64,
    n: usize,
    out: *mut XqLorentzianFit,
) -> XqStatus {
    guard(|| {
        let f = slice(frequencies_ghz, n, "frequencies_ghz")?;
        let y = slice(power, n, "power")?;
        let fit = fitting::fit_lorentzian(f, y)?;
        write(
            out,
            "out",
            XqLorentzianFit {
                center_ghz: fit.center_ghz,
                hwhm_mhz: fit.hwhm_mhz,
                amplitude: fit.amplitude,
                baseline: fit.baseline,
                center_uncertainty_ghz: fit.center_uncertainty_ghz,
                hwhm_uncertainty_mhz: fit.hwhm_uncertainty_mhz,
                residual_norm: fit.residual_norm,
                iterations: fit.iterations,
            },
        )
    })
}

/// Shift (MHz) between two spectra sampled on their own axes.
#[no_mangle]
pub unsafe extern "C" fn xq_measure_dispersive_shift(
    reference_ghz: *const f64,
    reference_power: *const f64,
    n_reference: usize,
    shifted_ghz: *const f64,
    shifted_power: *const f64,
    n_shifted: usize,
    chi_mhz: *mut f64,
    chi_uncertainty_mhz: *mut f64,
) -> XqStatus {
    guard(|| {
        let m = fitting::measure_dispersive_shift(
            (slice(reference_ghz, n_reference, "reference_ghz")?, slice(reference_power, n_reference, "reference_power")?),
            (slice(shifted_ghz, n_shifted, "shifted_ghz")?, slice(shifted_power, n_shifted, "shifted_power")?),
        )?;
        write(chi_mhz, "chi_mhz", m.chi_mhz)?;
        if !chi_uncertainty_mhz.is_null() {
            write(chi_uncertainty_mhz, "chi_uncertainty_mhz", m.chi_uncertainty_mhz)?;
        }
        Ok(())
    })
}

/// Collective coupling and cavity frequency from an avoided-crossing sweep.
#[no_mangle]
pub unsafe extern "C" fn xq_fit_avoided_crossing(sweep: *const XqSweep, out: *mut XqCrossingFit) -> XqStatus {
    guard(|| {
        let s = read(sweep, "sweep")?;
        if out.is_null() {
            return Err(Fail::new(XqStatus::NullPointer, "out is null"));
        }
        let fit = fitting::fit_avoided_crossing(&s.inner)?;
        write(
            out,
            "out",
            XqCrossingFit {
                g_col_mhz: fit.g_col_mhz,
                g_col_uncertainty_mhz: fit.g_col_uncertainty_mhz,
                cavity_ghz: fit.cavity_ghz,
                cavity_uncertainty_ghz: fit.cavity_uncertainty_ghz,
                rms_residual_mhz: fit.rms_residual_mhz,
                rows_used: fit.rows_used,
            },
        )
    })
}
