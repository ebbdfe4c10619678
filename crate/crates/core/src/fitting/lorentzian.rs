//! Single-resonance fits: power Lorentzian and complex single-pole.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use crate::error::{Error, Result};

const MIN_POINTS: usize = 8;

/// y(ω) = A·κ²/(κ² + (ω − f0)²) + b
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center_ghz: f64,
    pub hwhm_mhz: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub center_uncertainty_ghz: f64,
    pub hwhm_uncertainty_mhz: f64,
    pub amplitude_uncertainty: f64,
    pub baseline_uncertainty: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl LorentzianFit {
    pub fn evaluate(&self, freq_ghz: f64) -> f64 {
        let x = (freq_ghz - self.center_ghz) * 1e3;
        let k2 = self.hwhm_mhz * self.hwhm_mhz;
        self.amplitude * k2 / (k2 + x * x) + self.baseline
    }
}

struct PowerProblem<'a> {
    /// Offsets from the reference frequency, MHz.
    x: &'a [f64],
    y: &'a [f64],
}

impl LeastSquares for PowerProblem<'_> {
    fn n_params(&self) -> usize {
        4
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (f0, k, a, b) = (p[0], p[1], p[2], p[3]);
        let k2 = k * k;
        Ok(self
            .x
            .iter()
            .zip(self.y)
            .map(|(x, y)| {
                let d = x - f0;
                a * k2 / (k2 + d * d) + b - y
            })
            .collect())
    }

    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (f0, k, a) = (p[0], p[1], p[2]);
        let k2 = k * k;
        let mut j = DMatrix::zeros(self.x.len(), 4);
        for (i, x) in self.x.iter().enumerate() {
            let d = x - f0;
            let den = k2 + d * d;
            let den2 = den * den;
            j[(i, 0)] = 2.0 * a * k2 * d / den2;
            j[(i, 1)] = 2.0 * a * k * d * d / den2;
            j[(i, 2)] = k2 / den;
            j[(i, 3)] = 1.0;
        }
        Ok(j)
    }
}

fn check_axis(freqs: &[f64], n_values: usize) -> Result<()> {
    if freqs.len() != n_values {
        return Err(Error::invalid("frequency and value arrays differ in length"));
    }
    if freqs.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least {MIN_POINTS}",
            freqs.len()
        )));
    }
    if freqs.iter().any(|f| !f.is_finite()) || freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("frequencies must be finite and strictly increasing"));
    }
    Ok(())
}

/// Half width at half of `max − base` around index `peak`, in axis units.
fn half_width(x: &[f64], y: &[f64], peak: usize, base: f64) -> Option<f64> {
    let half = base + 0.5 * (y[peak] - base);
    let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for i in range {
            let k = (i as isize - step) as usize;
            if y[i] <= half {
                let t = (y[k] - half) / (y[k] - y[i]);
                return Some((x[k] + t * (x[i] - x[k]) - x[peak]).abs());
            }
        }
        None
    };
    let left = cross(&mut (0..peak).rev(), -1);
    let right = cross(&mut (peak + 1..x.len()), 1);
    match (left, right) {
        (Some(l), Some(r)) => Some(0.5 * (l + r)),
        (Some(w), None) | (None, Some(w)) => Some(w),
        (None, None) => None,
    }
}

fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()
}

/// Starting point for [`fit_lorentzian_from`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianGuess {
    pub center_ghz: f64,
    pub hwhm_mhz: f64,
    pub amplitude: f64,
    pub baseline: f64,
}

impl From<&LorentzianFit> for LorentzianGuess {
    fn from(f: &LorentzianFit) -> Self {
        Self {
            center_ghz: f.center_ghz,
            hwhm_mhz: f.hwhm_mhz,
            amplitude: f.amplitude,
            baseline: f.baseline,
        }
    }
}

/// Fits a Lorentzian peak to power data (typically |S|²), starting from the
/// sampled maximum and its half-maximum width.
///
/// Work happens in MHz offsets from the sampled maximum with values scaled by
/// max |y|, so the result is equivariant under shifts of the frequency axis
/// and under rescaling of `power`.
pub fn fit_lorentzian(freqs_ghz: &[f64], power: &[f64]) -> Result<LorentzianFit> {
    fit_lorentzian_from(freqs_ghz, power, None)
}

pub fn fit_lorentzian_from(freqs_ghz: &[f64], power: &[f64], guess: Option<LorentzianGuess>) -> Result<LorentzianFit> {
    check_axis(freqs_ghz, power.len())?;
    if power.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("power contains non-finite values"));
    }
    let scale = power.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if scale == 0.0 {
        return Err(flat(vec![]));
    }
    let y: Vec<f64> = power.iter().map(|v| v / scale).collect();
    let peak = argmax(&y);
    let f_ref = freqs_ghz[peak];
    let x: Vec<f64> = freqs_ghz.iter().map(|f| (f - f_ref) * 1e3).collect();
    let base = y.iter().copied().fold(f64::INFINITY, f64::min);
    let amp = y[peak] - base;
    if amp <= 1e-9 {
        return Err(flat(vec![0.0, 0.0, 0.0, base * scale]));
    }
    let span = x[x.len() - 1] - x[0];
    let width = half_width(&x, &y, peak, base).unwrap_or(span / 10.0).max(span * 1e-9);

    let p0 = match guess {
        Some(g) => [(g.center_ghz - f_ref) * 1e3, g.hwhm_mhz, g.amplitude / scale, g.baseline / scale],
        None => [0.0, width, amp, base],
    };
    if p0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial guess must be finite"));
    }
    let problem = PowerProblem { x: &x, y: &y };
    let res = levenberg_marquardt(&problem, &p0, LmOptions::default()).map_err(|e| match e {
        Error::FitFailure {
            message,
            last_params,
            residual_norm,
        } => Error::FitFailure {
            message,
            last_params: unscale(&last_params, f_ref, scale),
            residual_norm: residual_norm * scale,
        },
        other => other,
    })?;
    let p = &res.params;
    let kappa = p[1].abs();
    let slack = span.max(1e-12);
    if !(kappa > span * 1e-9) || p[0] < x[0] - slack || p[0] > x[x.len() - 1] + slack {
        return Err(Error::FitFailure {
            message: "fit converged to a degenerate peak".into(),
            last_params: unscale(p, f_ref, scale),
            residual_norm: res.residual_norm * scale,
        });
    }
    Ok(LorentzianFit {
        center_ghz: f_ref + p[0] * 1e-3,
        hwhm_mhz: kappa,
        amplitude: p[2] * scale,
        baseline: p[3] * scale,
        center_uncertainty_ghz: res.std_error(0) * 1e-3,
        hwhm_uncertainty_mhz: res.std_error(1),
        amplitude_uncertainty: res.std_error(2) * scale,
        baseline_uncertainty: res.std_error(3) * scale,
        residual_norm: res.residual_norm * scale,
        iterations: res.iterations,
    })
}

fn unscale(p: &[f64], f_ref: f64, scale: f64) -> Vec<f64> {
    vec![f_ref + p[0] * 1e-3, p[1].abs(), p[2] * scale, p[3] * scale]
}

fn flat(last_params: Vec<f64>) -> Error {
    Error::FitFailure {
        message: "data has no peak above its baseline".into(),
        last_params,
        residual_norm: f64::NAN,
    }
}

/// S(ω) = c/(κ + i(f0 − ω)) + s_bg, with ω and f0 in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexLorentzianFit {
    pub center_ghz: f64,
    pub hwhm_mhz: f64,
    /// Pole residue, MHz.
    pub numerator: Complex64,
    pub background: Complex64,
    pub center_uncertainty_ghz: f64,
    pub hwhm_uncertainty_mhz: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

struct ComplexProblem<'a> {
    x: &'a [f64],
    s: &'a [Complex64],
}

impl ComplexProblem<'_> {
    fn model(x: f64, p: &[f64]) -> Complex64 {
        Complex64::new(p[2], p[3]) / Complex64::new(p[1], p[0] - x) + Complex64::new(p[4], p[5])
    }

    /// Best residue and background for a fixed pole.
    fn linear_part(&self, f0: f64, k: f64) -> Option<(Complex64, Complex64)> {
        let n = self.x.len();
        let mut a = DMatrix::<Complex64>::zeros(n, 2);
        let mut b = DVector::<Complex64>::zeros(n);
        for i in 0..n {
            a[(i, 0)] = Complex64::new(k, f0 - self.x[i]).inv();
            a[(i, 1)] = Complex64::new(1.0, 0.0);
            b[i] = self.s[i];
        }
        let ah = a.adjoint();
        let sol = (&ah * &a).lu().solve(&(&ah * &b))?;
        Some((sol[0], sol[1]))
    }
}

impl LeastSquares for ComplexProblem<'_> {
    fn n_params(&self) -> usize {
        6
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(2 * self.x.len());
        for (x, s) in self.x.iter().zip(self.s) {
            let d = Self::model(*x, p) - s;
            r.push(d.re);
            r.push(d.im);
        }
        Ok(r)
    }
}

/// Fits a single complex pole plus constant background to S(ω).
pub fn fit_complex_lorentzian(freqs_ghz: &[f64], s: &[Complex64]) -> Result<ComplexLorentzianFit> {
    check_axis(freqs_ghz, s.len())?;
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("data contains non-finite values"));
    }
    let power: Vec<f64> = s.iter().map(|z| z.norm_sqr()).collect();
    let guess = fit_lorentzian(freqs_ghz, &power)?;
    let scale = s.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let sn: Vec<Complex64> = s.iter().map(|z| z / scale).collect();
    let f_ref = guess.center_ghz;
    let x: Vec<f64> = freqs_ghz.iter().map(|f| (f - f_ref) * 1e3).collect();
    let problem = ComplexProblem { x: &x, s: &sn };
    let (c, bg) = problem
        .linear_part(0.0, guess.hwhm_mhz)
        .ok_or_else(|| Error::numerical("singular linear subproblem"))?;
    let p0 = [0.0, guess.hwhm_mhz, c.re, c.im, bg.re, bg.im];
    let res = levenberg_marquardt(&problem, &p0, LmOptions::default())?;
    let p = &res.params;
    Ok(ComplexLorentzianFit {
        center_ghz: f_ref + p[0] * 1e-3,
        hwhm_mhz: p[1].abs(),
        // flipping the sign of κ flips the residue's sign too
        numerator: Complex64::new(p[2], p[3]) * p[1].signum() * scale,
        background: Complex64::new(p[4], p[5]) * scale,
        center_uncertainty_ghz: res.std_error(0) * 1e-3,
        hwhm_uncertainty_mhz: res.std_error(1),
        residual_norm: res.residual_norm * scale,
        iterations: res.iterations,
    })
}

/// Frequency shift between two spectra, each fitted with a Lorentzian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveShiftMeasurement {
    pub chi_mhz: f64,
    pub chi_uncertainty_mhz: f64,
    pub reference: LorentzianFit,
    pub shifted: LorentzianFit,
}

pub fn measure_dispersive_shift(
    reference: (&[f64], &[f64]),
    shifted: (&[f64], &[f64]),
) -> Result<DispersiveShiftMeasurement> {
    let r = fit_lorentzian(reference.0, reference.1)?;
    let s = fit_lorentzian(shifted.0, shifted.1)?;
    Ok(DispersiveShiftMeasurement {
        chi_mhz: (s.center_ghz - r.center_ghz) * 1e3,
        chi_uncertainty_mhz: (r.center_uncertainty_ghz.hypot(s.center_uncertainty_ghz)) * 1e3,
        reference: r,
        shifted: s,
    })
}
