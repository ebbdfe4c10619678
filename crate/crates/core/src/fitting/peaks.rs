//! Local-maximum detection on sampled spectra.

/// Positions of local maxima of `y` above `threshold`, refined by a parabola
/// through the three samples around each maximum. Plateaus count once.
pub fn find_peaks(x: &[f64], y: &[f64], threshold: f64) -> Vec<f64> {
    find_peaks_by(x, y, threshold, |v| v)
}

/// As [`find_peaks`], but the parabola is fitted to 1/y, which is exact for
/// a Lorentzian peak on zero background. Requires positive `y`.
pub fn find_lorentzian_peaks(x: &[f64], y: &[f64], threshold: f64) -> Vec<f64> {
    find_peaks_by(x, y, threshold, |v| -1.0 / v)
}

fn find_peaks_by(x: &[f64], y: &[f64], threshold: f64, warp: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = y.len().min(x.len());
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > threshold && y[i] > y[i - 1] {
            // walk across a flat top
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push(if j == i { refine(x, [warp(y[i - 1]), warp(y[i]), warp(y[i + 1])], i) } else { 0.5 * (x[i] + x[j]) });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Sub-grid maximum position through samples i−1, i, i+1 of 1/y.
pub(crate) fn refine_lorentzian(x: &[f64], y: [f64; 3], i: usize) -> f64 {
    refine(x, y.map(|v| -1.0 / v), i)
}

fn refine(x: &[f64], [y0, y1, y2]: [f64; 3], i: usize) -> f64 {
    let denom = y0 - 2.0 * y1 + y2;
    if denom >= 0.0 {
        return x[i];
    }
    let shift = 0.5 * (y0 - y2) / denom;
    // assumes locally uniform spacing
    let h = 0.5 * (x[i + 1] - x[i - 1]);
    x[i] + shift.clamp(-0.5, 0.5) * h
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
