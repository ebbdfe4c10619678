//! NV⁻ ground-state triplet under a static magnetic field.
//!
//! All energies are ordinary frequencies in GHz (E/h). The spin-1 basis is
//! ordered {|+1⟩, |0⟩, |−1⟩} in the frame of the selected NV axis.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// h / k_B expressed in kelvin per GHz.
pub const KELVIN_PER_GHZ: f64 = 6.626_070_15e-34 / 1.380_649e-23 * 1e9;

/// Carbon-site density of diamond, cm⁻³ (ρ = 3.515 g/cm³, M = 12.011 g/mol).
pub const DIAMOND_CARBON_DENSITY_PER_CM3: f64 = 1.763e23;

pub const DEFAULT_ZERO_FIELD_SPLITTING_GHZ: f64 = 2.87;
pub const DEFAULT_GYROMAGNETIC_RATIO_GHZ_PER_T: f64 = 28.025;

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

/// The four ⟨111⟩ bond directions of the diamond lattice.
pub const NV_AXES: [[f64; 3]; 4] = [
    [INV_SQRT3, INV_SQRT3, INV_SQRT3],
    [INV_SQRT3, -INV_SQRT3, -INV_SQRT3],
    [-INV_SQRT3, INV_SQRT3, -INV_SQRT3],
    [-INV_SQRT3, -INV_SQRT3, INV_SQRT3],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvSpinModel {
    pub zero_field_splitting_ghz: f64,
    pub strain_ghz: f64,
    pub gyromagnetic_ratio_ghz_per_t: f64,
}

impl Default for NvSpinModel {
    fn default() -> Self {
        Self {
            zero_field_splitting_ghz: DEFAULT_ZERO_FIELD_SPLITTING_GHZ,
            strain_ghz: 0.0,
            gyromagnetic_ratio_ghz_per_t: DEFAULT_GYROMAGNETIC_RATIO_GHZ_PER_T,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// Static field in the lab (crystal) frame, tesla.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticField {
    vector: [f64; 3],
}

impl MagneticField {
    pub fn zero() -> Self {
        Self { vector: [0.0; 3] }
    }

    pub fn from_vector(vector: [f64; 3]) -> Result<Self> {
        if vector.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("magnetic field components must be finite"));
        }
        Ok(Self { vector })
    }

    /// `direction` must already be unit-norm (within 1e-12).
    pub fn from_direction(direction: [f64; 3], magnitude_t: f64) -> Result<Self> {
        let norm = Vector3::from(direction).norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "field direction must be a unit vector (norm = {norm})"
            )));
        }
        if !(magnitude_t >= 0.0) || !magnitude_t.is_finite() {
            return Err(Error::invalid("field magnitude must be finite and >= 0"));
        }
        Self::from_vector(direction.map(|c| c * magnitude_t))
    }

    /// Like [`from_direction`](Self::from_direction) but normalizes the direction first.
    pub fn along(direction: [f64; 3], magnitude_t: f64) -> Result<Self> {
        Self::from_direction(unit(direction)?, magnitude_t)
    }

    pub fn vector(&self) -> [f64; 3] {
        self.vector
    }

    pub fn magnitude(&self) -> f64 {
        Vector3::from(self.vector).norm()
    }
}

/// Normalizes a direction vector; errors on a zero or non-finite vector.
pub fn unit(direction: [f64; 3]) -> Result<[f64; 3]> {
    let v = Vector3::from(direction);
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid("direction vector must be nonzero and finite"));
    }
    let u = v / n;
    Ok([u.x, u.y, u.z])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinLevels {
    /// Eigenenergies in GHz, ascending.
    pub energies_ghz: [f64; 3],
    /// Highest level minus lowest.
    pub transition_plus_ghz: f64,
    /// Middle level minus lowest.
    pub transition_minus_ghz: f64,
}

impl SpinLevels {
    fn from_sorted(e: [f64; 3]) -> Self {
        Self {
            energies_ghz: e,
            transition_plus_ghz: e[2] - e[0],
            transition_minus_ghz: e[1] - e[0],
        }
    }

    pub fn transition(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.transition_plus_ghz,
            Branch::Minus => self.transition_minus_ghz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalPolarization {
    /// Boltzmann populations of the three eigenlevels, ascending energy.
    pub populations: [f64; 3],
    /// (p₊₁ − p₀)/(p₊₁ + p₀); −1 is full polarization into |0⟩.
    pub two_level_sz: f64,
}

fn spin1_operators() -> (Matrix3<Complex64>, Matrix3<Complex64>, Matrix3<Complex64>) {
    let z = Complex64::new(0.0, 0.0);
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let one = Complex64::new(1.0, 0.0);
    let sx = Matrix3::new(z, r, z, r, z, r, z, r, z);
    let sy = Matrix3::new(z, -i, z, i, z, -i, z, i, z);
    let sz = Matrix3::new(one, z, z, z, z, z, z, z, -one);
    (sx, sy, sz)
}

/// Orthonormal (x, y, z) frame with z along the NV axis.
fn axis_frame(axis: [f64; 3]) -> [Vector3<f64>; 3] {
    let n = Vector3::from(axis);
    let reference = if n.z.abs() < 0.9 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let x = (reference - n * reference.dot(&n)).normalize();
    let y = n.cross(&x);
    [x, y, n]
}

impl NvSpinModel {
    pub fn new(
        zero_field_splitting_ghz: f64,
        strain_ghz: f64,
        gyromagnetic_ratio_ghz_per_t: f64,
    ) -> Result<Self> {
        let m = Self {
            zero_field_splitting_ghz,
            strain_ghz,
            gyromagnetic_ratio_ghz_per_t,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_field_splitting_ghz > 0.0) || !self.zero_field_splitting_ghz.is_finite() {
            return Err(Error::invalid("zero-field splitting must be > 0"));
        }
        if !(self.gyromagnetic_ratio_ghz_per_t > 0.0)
            || !self.gyromagnetic_ratio_ghz_per_t.is_finite()
        {
            return Err(Error::invalid("gyromagnetic ratio must be > 0"));
        }
        if !self.strain_ghz.is_finite() {
            return Err(Error::invalid("strain must be finite"));
        }
        Ok(())
    }

    /// H/h = D·Sz² + E(Sx² − Sy²) + γ B·S in the frame of NV axis `axis_index`.
    pub fn hamiltonian(&self, field: &MagneticField, axis_index: usize) -> Result<Matrix3<Complex64>> {
        self.validate()?;
        let axis = *NV_AXES
            .get(axis_index)
            .ok_or_else(|| Error::invalid(format!("axis index {axis_index} not in 0..4")))?;
        let [ex, ey, ez] = axis_frame(axis);
        let b = Vector3::from(field.vector());
        let (sx, sy, sz) = spin1_operators();
        let gamma = self.gyromagnetic_ratio_ghz_per_t;
        let c = |v: f64| Complex64::new(v, 0.0);

        let h = sz * sz * c(self.zero_field_splitting_ghz)
            + (sx * sx - sy * sy) * c(self.strain_ghz)
            + sx * c(gamma * b.dot(&ex))
            + sy * c(gamma * b.dot(&ey))
            + sz * c(gamma * b.dot(&ez));
        Ok(h)
    }

    pub fn levels(&self, field: &MagneticField, axis_index: usize) -> Result<SpinLevels> {
        let h = self.hamiltonian(field, axis_index)?;
        let eig = SymmetricEigen::new(h);
        let mut e = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        if e.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite NV eigenvalue"));
        }
        e.sort_by(f64::total_cmp);
        Ok(SpinLevels::from_sorted(e))
    }

    /// Exact levels for each of the four orientation sub-ensembles.
    pub fn transition_frequencies(&self, field: &MagneticField) -> Result<[SpinLevels; 4]> {
        Ok([
            self.levels(field, 0)?,
            self.levels(field, 1)?,
            self.levels(field, 2)?,
            self.levels(field, 3)?,
        ])
    }

    /// Field magnitude (T) along `direction` at which the axis-0 sub-ensemble's
    /// `branch` transition equals `target_ghz`. Searches [0, 1 T].
    pub fn resonant_field(&self, target_ghz: f64, direction: [f64; 3], branch: Branch) -> Result<f64> {
        self.resonant_field_for_axis(target_ghz, direction, branch, 0)
    }

    pub fn resonant_field_for_axis(
        &self,
        target_ghz: f64,
        direction: [f64; 3],
        branch: Branch,
        axis_index: usize,
    ) -> Result<f64> {
        const B_MAX: f64 = 1.0;
        const SCAN_STEPS: usize = 400;
        const FREQ_TOL_GHZ: f64 = 1e-7;

        if !target_ghz.is_finite() {
            return Err(Error::invalid("target frequency must be finite"));
        }
        let dir = unit(direction)?;
        let f = |b: f64| -> Result<f64> {
            Ok(self
                .levels(&MagneticField::from_direction(dir, b)?, axis_index)?
                .transition(branch)
                - target_ghz)
        };

        let f0 = f(0.0)?;
        if f0.abs() < FREQ_TOL_GHZ {
            return Ok(0.0);
        }
        if branch == Branch::Plus && f0 > 0.0 {
            return Err(Error::NoSolution(format!(
                "{target_ghz} GHz lies below the zero-field plus transition"
            )));
        }

        // first sign change on a coarse grid, then bisection
        let mut lo = 0.0;
        let mut f_lo = f0;
        let mut bracket = None;
        for k in 1..=SCAN_STEPS {
            let b = B_MAX * k as f64 / SCAN_STEPS as f64;
            let fb = f(b)?;
            if fb == 0.0 {
                return Ok(b);
            }
            if fb.signum() != f_lo.signum() {
                bracket = Some((lo, b));
                break;
            }
            lo = b;
            f_lo = fb;
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| {
            Error::NoSolution(format!(
                "{target_ghz} GHz not reached on the {branch:?} branch below {B_MAX} T"
            ))
        })?;
        let lo_sign = f(lo)?.signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid)?;
            if fm.abs() < FREQ_TOL_GHZ || hi - lo < 1e-15 {
                return Ok(mid);
            }
            if fm.signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Boltzmann populations over the three eigenlevels at `temperature_k`.
///
/// The lowest level is identified with |0⟩ and the highest with |+1⟩, which
/// holds below the ground-state level anticrossing.
pub fn thermal_polarization(levels: &SpinLevels, temperature_k: f64) -> Result<ThermalPolarization> {
    if !(temperature_k > 0.0) {
        return Err(Error::invalid("temperature must be > 0"));
    }
    let e0 = levels.energies_ghz[0];
    let w = levels
        .energies_ghz
        .map(|e| (-(e - e0) * KELVIN_PER_GHZ / temperature_k).exp());
    let z: f64 = w.iter().sum();
    let populations = w.map(|x| x / z);
    let (p0, pp) = (populations[0], populations[2]);
    Ok(ThermalPolarization {
        populations,
        two_level_sz: (pp - p0) / (pp + p0),
    })
}

/// NV count for a concentration in ppm (of carbon sites) and a volume in mm³.
pub fn ensemble_size(concentration_ppm: f64, volume_mm3: f64) -> Result<f64> {
    if !(concentration_ppm >= 0.0) || !concentration_ppm.is_finite() {
        return Err(Error::invalid("concentration must be >= 0"));
    }
    if !(volume_mm3 > 0.0) || !volume_mm3.is_finite() {
        return Err(Error::invalid("volume must be > 0"));
    }
    Ok(concentration_ppm * 1e-6 * DIAMOND_CARBON_DENSITY_PER_CM3 * volume_mm3 * 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X100: [f64; 3] = [1.0, 0.0, 0.0];

    fn field_100(mt: f64) -> MagneticField {
        MagneticField::from_direction(X100, mt * 1e-3).unwrap()
    }

    #[test]
    fn zero_field_is_degenerate_at_d() {
        let m = NvSpinModel::default();
        for lv in m.transition_frequencies(&MagneticField::zero()).unwrap() {
            assert!((lv.transition_plus_ghz - 2.87).abs() < 1e-12);
            assert!((lv.transition_minus_ghz - 2.87).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_with_trace_2d() {
        let m = NvSpinModel::default();
        let f = MagneticField::from_vector([3e-3, -7e-3, 11e-3]).unwrap();
        for axis in 0..4 {
            let h = m.hamiltonian(&f, axis).unwrap();
            assert!((h - h.adjoint()).norm() < 1e-14);
            assert!((h.trace().re - 2.0 * 2.87).abs() < 1e-12);
        }
    }

    #[test]
    fn axial_field_is_diagonal_and_exact() {
        let m = NvSpinModel::default();
        let f = MagneticField::from_direction(NV_AXES[0], 10e-3).unwrap();
        let h = m.hamiltonian(&f, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(h[(i, j)].norm() < 1e-15);
                }
            }
        }
        let lv = m.levels(&f, 0).unwrap();
        assert!((lv.transition_plus_ghz - (2.87 + 0.280_25)).abs() < 1e-9);
        assert!((lv.transition_minus_ghz - (2.87 - 0.280_25)).abs() < 1e-9);
    }

    #[test]
    fn field_along_111_splits_one_axis_from_three() {
        let m = NvSpinModel::default();
        let f = MagneticField::along([1.0, 1.0, 1.0], 5e-3).unwrap();
        let lv = m.transition_frequencies(&f).unwrap();
        let gb = 28.025 * 5e-3;
        assert!((lv[0].transition_plus_ghz - (2.87 + gb)).abs() < 1e-9);
        assert!((lv[0].transition_minus_ghz - (2.87 - gb)).abs() < 1e-9);
        for k in 2..4 {
            assert!((lv[k].transition_plus_ghz - lv[1].transition_plus_ghz).abs() < 1e-9);
            assert!((lv[k].transition_minus_ghz - lv[1].transition_minus_ghz).abs() < 1e-9);
        }
    }

    #[test]
    fn field_along_100_is_degenerate_and_near_measured_resonances() {
        let m = NvSpinModel::default();
        for (mt, target) in [(14.2, 3.1598), (17.0, 3.2275)] {
            let lv = m.transition_frequencies(&field_100(mt)).unwrap();
            for k in 1..4 {
                assert!((lv[k].transition_plus_ghz - lv[0].transition_plus_ghz).abs() < 1e-9);
            }
            assert!((lv[0].transition_plus_ghz - target).abs() / target < 0.01);
        }
    }

    #[test]
    fn transverse_shift_matches_second_order_perturbation() {
        // E = 0: f₊ ≈ D + γBz + (γB⊥)²/2 · [2/(D + γBz) + 1/(D − γBz)]
        let m = NvSpinModel::default();
        let b = 14.2e-3;
        let gbz = 28.025 * b / 3f64.sqrt();
        let gbp = 28.025 * b * (2.0f64 / 3.0).sqrt();
        let first = 2.87 + gbz;
        let second = first + gbp * gbp / 2.0 * (2.0 / (2.87 + gbz) + 1.0 / (2.87 - gbz));
        let exact = m.levels(&field_100(14.2), 0).unwrap().transition_plus_ghz;
        assert!((first - 3.099_76).abs() < 1e-4);
        assert!((exact - first - 0.055).abs() < 0.003, "shift {}", exact - first);
        assert!((exact - second).abs() < 2e-3);
        // independent numpy diagonalization
        assert!((exact - 3.153_869_692_481_63).abs() < 1e-9);
    }

    #[test]
    fn resonant_field_inverts_plus_branch() {
        let m = NvSpinModel::default();
        assert_eq!(m.resonant_field(2.87, X100, Branch::Plus).unwrap(), 0.0);
        let b1 = m.resonant_field(3.1598, X100, Branch::Plus).unwrap();
        let b2 = m.resonant_field(3.2275, X100, Branch::Plus).unwrap();
        // numpy bisection: 14.4495 mT and 17.2102 mT
        assert!((b1 * 1e3 - 14.449_517).abs() < 1e-3);
        assert!((b2 * 1e3 - 17.210_248).abs() < 1e-3);
        assert!((b1 * 1e3 - 14.2).abs() / 14.2 < 0.03);
        assert!((b2 * 1e3 - 17.0).abs() / 17.0 < 0.03);
    }

    #[test]
    fn resonant_field_minus_branch() {
        let m = NvSpinModel::default();
        let dir = NV_AXES[0];
        let b = m.resonant_field(2.7, dir, Branch::Minus).unwrap();
        assert!((b - 0.17 / 28.025).abs() < 1e-8);
    }

    #[test]
    fn resonant_field_below_d_has_no_plus_solution() {
        let m = NvSpinModel::default();
        assert!(matches!(
            m.resonant_field(2.5, X100, Branch::Plus),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn thermal_limits() {
        let lv = SpinLevels::from_sorted([0.0, 2.588, 3.1598]);
        let hot = thermal_polarization(&lv, 1e9).unwrap();
        for p in hot.populations {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(hot.two_level_sz.abs() < 1e-9);
        let cold = thermal_polarization(&lv, 1e-6).unwrap();
        assert_eq!(cold.populations[0], 1.0);
        assert_eq!(cold.two_level_sz, -1.0);
        assert!(thermal_polarization(&lv, 0.0).is_err());
    }

    #[test]
    fn thermal_population_at_28_mk() {
        // direct Boltzmann sums (numpy, CODATA h and k_B)
        let lv = SpinLevels::from_sorted([0.0, 2.588, 3.1598]);
        let p = thermal_polarization(&lv, 0.028).unwrap();
        assert!((p.populations[0] - 0.983_971_24).abs() < 1e-7);
        let exact = NvSpinModel::default().levels(&field_100(14.2), 0).unwrap();
        let p = thermal_polarization(&exact, 0.028).unwrap();
        assert!((p.populations[0] - 0.985_865_45).abs() < 1e-7);
    }

    #[test]
    fn ensemble_size_values() {
        assert_eq!(ensemble_size(0.0, 3.0).unwrap(), 0.0);
        assert!((ensemble_size(1.0, 1.0).unwrap() / 1.763e14 - 1.0).abs() < 1e-12);
        let n = ensemble_size(55.0, 3.17 * 3.15 * 0.52).unwrap();
        assert!((n / 5.034_868_839e16 - 1.0).abs() < 1e-9);
        assert!(ensemble_size(1.0, 0.0).is_err());
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(MagneticField::from_direction([1.0, 1.0, 0.0], 1e-3).is_err());
        assert!(MagneticField::along([0.0, 0.0, 0.0], 1e-3).is_err());
    }

    #[test]
    fn plus_branch_along_100_is_monotone() {
        let m = NvSpinModel::default();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=200 {
            let f = m.levels(&field_100(0.5 * k as f64), 0).unwrap().transition_plus_ghz;
            assert!(f > prev);
            prev = f;
        }
    }
}
