//! Lumped-element model of the four-wing resonator.
//!
//! Topology: each wing node has a capacitance to the lid (ground) and an
//! inductor `L_w` to a shared center node; the center node returns to ground
//! through `L_g`. An optional inductance between adjacent x- and y-wings lifts
//! the hybrid mode relative to the antisymmetric pair.
//!
//! The center node carries no capacitance and is eliminated (Kron reduction),
//! leaving a 4×4 generalized eigenproblem `K v = ω² C v` over wing potentials.
//! It is solved in the symmetry-adapted basis (S, H, Dx, Dy), split into the
//! blocks that the actual element values leave coupled. Symmetry-forbidden
//! components of the eigenvectors are therefore exact zeros, not round-off.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wing order used throughout: x₁, x₂, y₁, y₂.
pub const WING_NAMES: [&str; 4] = ["x1", "x2", "y1", "y2"];

/// Components below this fraction of the eigenvector norm count as zero.
pub const ZERO_COMPONENT_THRESHOLD: f64 = 1e-9;

/// Reported in place of −∞ dB for an exactly symmetric network.
pub const CROSSTALK_FLOOR_DB: f64 = -300.0;

/// f = 1/(2π√(LC)), returned in GHz.
pub fn resonance_frequency(inductance_h: f64, capacitance_f: f64) -> Result<f64> {
    if !(inductance_h > 0.0) || !(capacitance_f > 0.0) {
        return Err(Error::invalid("L and C must be > 0"));
    }
    Ok(1.0 / (2.0 * PI * (inductance_h * capacitance_f).sqrt()) * 1e-9)
}

/// Capacitance that resonates with `inductance_h` at `frequency_ghz`.
pub fn capacitance_for(inductance_h: f64, frequency_ghz: f64) -> Result<f64> {
    if !(inductance_h > 0.0) || !(frequency_ghz > 0.0) {
        return Err(Error::invalid("L and f must be > 0"));
    }
    let w = 2.0 * PI * frequency_ghz * 1e9;
    Ok(1.0 / (inductance_h * w * w))
}

/// Single-branch abstraction used for the dielectric-tuning knob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcResonator {
    pub inductance_h: f64,
    pub capacitance_f: f64,
}

impl LcResonator {
    pub fn frequency_ghz(&self) -> Result<f64> {
        resonance_frequency(self.inductance_h, self.capacitance_f)
    }

    /// Frequency after adding `delta_c` to the capacitance: f/√(1 + ΔC/C).
    pub fn tune_capacitance(&self, delta_c_f: f64) -> Result<f64> {
        if !(delta_c_f > -self.capacitance_f) {
            return Err(Error::invalid("capacitance change must exceed -C"));
        }
        Ok(self.frequency_ghz()? / (1.0 + delta_c_f / self.capacitance_f).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symmetry {
    /// All wings at the same potential.
    #[serde(rename = "S_xy")]
    SXy,
    /// x-wings opposite, y-wings at zero.
    #[serde(rename = "A_x")]
    AX,
    /// y-wings opposite, x-wings at zero.
    #[serde(rename = "A_y")]
    AY,
    /// x-pair against y-pair, A(S(x),S(y)).
    #[serde(rename = "Hybrid")]
    Hybrid,
}

impl Symmetry {
    pub fn label(self) -> &'static str {
        match self {
            Symmetry::SXy => "S_xy",
            Symmetry::AX => "A_x",
            Symmetry::AY => "A_y",
            Symmetry::Hybrid => "Hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "S_xy" | "S" => Some(Symmetry::SXy),
            "A_x" => Some(Symmetry::AX),
            "A_y" => Some(Symmetry::AY),
            "Hybrid" | "H" => Some(Symmetry::Hybrid),
            _ => None,
        }
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Additive deviations from the nominal element values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub capacitance_f: [f64; 4],
    pub wing_inductance_h: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorNetwork {
    /// Wing-to-lid capacitances (x₁, x₂, y₁, y₂), farads.
    pub wing_capacitances_f: [f64; 4],
    /// Wing-to-center inductance, henries.
    pub wing_inductance_h: f64,
    /// Center-to-ground inductance, henries. Zero grounds the center node.
    pub return_inductance_h: f64,
    /// Optional inductance on each of the four x–y wing links.
    pub cross_inductance_h: Option<f64>,
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub frequency_ghz: f64,
    pub symmetry: Symmetry,
    /// Wing potentials, unit Euclidean norm, first non-zero component positive.
    pub potentials: [f64; 4],
    /// All off-class components are below [`ZERO_COMPONENT_THRESHOLD`].
    pub pure: bool,
}

impl Mode {
    /// Potentials rescaled so the largest magnitude is 1.
    pub fn relative_amplitudes(&self) -> [f64; 4] {
        let m = self.potentials.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.potentials.map(|v| v / m)
    }
}

/// Which wing each of the four ports sits next to. Ports are 0-based here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortLayout {
    pub wing_of_port: [usize; 4],
}

impl Default for PortLayout {
    /// Ports 1,2 on the x-wings and 3,4 on the y-wings.
    fn default() -> Self {
        Self {
            wing_of_port: [0, 1, 2, 3],
        }
    }
}

impl PortLayout {
    pub fn new(wing_of_port: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &w in &wing_of_port {
            if w >= 4 || seen[w] {
                return Err(Error::invalid("port-to-wing assignment must be a bijection onto 0..4"));
            }
            seen[w] = true;
        }
        Ok(Self { wing_of_port })
    }
}

// Symmetry-adapted basis: columns S = (1,1,1,1)/2, H = (1,1,−1,−1)/2,
// Dx = (1,−1,0,0)/√2, Dy = (0,0,1,−1)/√2. Written out so that symmetric
// element values give exact zeros.
const S: usize = 0;
const H: usize = 1;
const DX: usize = 2;
const DY: usize = 3;

fn to_adapted(v: [f64; 4]) -> [f64; 4] {
    let sx = v[0] + v[1];
    let sy = v[2] + v[3];
    [
        0.5 * (sx + sy),
        0.5 * (sx - sy),
        (v[0] - v[1]) * FRAC_1_SQRT_2,
        (v[2] - v[3]) * FRAC_1_SQRT_2,
    ]
}

fn from_adapted(a: [f64; 4]) -> [f64; 4] {
    let dx = a[DX] * FRAC_1_SQRT_2;
    let dy = a[DY] * FRAC_1_SQRT_2;
    let px = 0.5 * (a[S] + a[H]);
    let py = 0.5 * (a[S] - a[H]);
    [px + dx, px - dx, py + dy, py - dy]
}

/// Qᵀ diag(d) Q.
fn adapted_diag(d: [f64; 4]) -> [[f64; 4]; 4] {
    let c = 0.5 * FRAC_1_SQRT_2;
    let sum = 0.25 * ((d[0] + d[1]) + (d[2] + d[3]));
    let sh = 0.25 * ((d[0] + d[1]) - (d[2] + d[3]));
    let ex = c * (d[0] - d[1]);
    let ey = c * (d[2] - d[3]);
    let mut m = [[0.0; 4]; 4];
    m[S][S] = sum;
    m[H][H] = sum;
    m[DX][DX] = 0.5 * (d[0] + d[1]);
    m[DY][DY] = 0.5 * (d[2] + d[3]);
    m[S][H] = sh;
    m[S][DX] = ex;
    m[S][DY] = ey;
    m[H][DX] = ex;
    m[H][DY] = -ey;
    #[allow(clippy::needless_range_loop)]
    for i in 0..4 {
        for j in 0..i {
            m[i][j] = m[j][i];
        }
    }
    m
}

impl ResonatorNetwork {
    /// Chooses C_x and C_y so that the antisymmetric modes land on the given
    /// frequencies for the given inductances.
    pub fn calibrated(
        ax_frequency_ghz: f64,
        ay_frequency_ghz: f64,
        wing_inductance_h: f64,
        return_inductance_h: f64,
        cross_inductance_h: Option<f64>,
    ) -> Result<Self> {
        let cross_admittance = match cross_inductance_h {
            Some(l) if l > 0.0 => 2.0 / l,
            Some(_) => return Err(Error::invalid("cross inductance must be > 0")),
            None => 0.0,
        };
        let stiffness = 1.0 / wing_inductance_h + cross_admittance;
        let c = |f: f64| capacitance_for(1.0 / stiffness, f);
        let cx = c(ax_frequency_ghz)?;
        let cy = c(ay_frequency_ghz)?;
        let net = Self {
            wing_capacitances_f: [cx, cx, cy, cy],
            wing_inductance_h,
            return_inductance_h,
            cross_inductance_h,
            perturbation: Perturbation::default(),
        };
        net.validate()?;
        Ok(net)
    }

    /// L_w = 1 nH, L_g = 0.1 nH, calibrated to 3.1598 GHz (A_x) and 3.2275 GHz (A_y).
    pub fn reference() -> Self {
        Self::calibrated(3.1598, 3.2275, 1e-9, 0.1e-9, None).expect("reference calibration")
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.effective_capacitances().iter().enumerate() {
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::invalid(format!(
                    "capacitance of wing {} must be > 0 (got {c})",
                    WING_NAMES[i]
                )));
            }
        }
        for (i, l) in self.effective_wing_inductances().iter().enumerate() {
            if !(*l > 0.0) || !l.is_finite() {
                return Err(Error::invalid(format!(
                    "wing inductance of {} must be > 0 (got {l})",
                    WING_NAMES[i]
                )));
            }
        }
        if !(self.return_inductance_h >= 0.0) || !self.return_inductance_h.is_finite() {
            return Err(Error::invalid("return inductance must be >= 0"));
        }
        if let Some(l) = self.cross_inductance_h {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::invalid("cross inductance must be > 0"));
            }
        }
        Ok(())
    }

    pub fn effective_capacitances(&self) -> [f64; 4] {
        let mut c = self.wing_capacitances_f;
        for (ci, d) in c.iter_mut().zip(self.perturbation.capacitance_f) {
            *ci += d;
        }
        c
    }

    pub fn effective_wing_inductances(&self) -> [f64; 4] {
        let mut l = [self.wing_inductance_h; 4];
        for (li, d) in l.iter_mut().zip(self.perturbation.wing_inductance_h) {
            *li += d;
        }
        l
    }

    /// Copy with `fraction` × C added to the capacitance of `wing`.
    pub fn with_capacitance_fraction(&self, wing: usize, fraction: f64) -> Self {
        let mut n = *self;
        n.perturbation.capacitance_f[wing] += fraction * self.wing_capacitances_f[wing];
        n
    }

    fn adapted_matrices(&self) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
        let cap = adapted_diag(self.effective_capacitances());
        let y = self.effective_wing_inductances().map(|l| 1.0 / l);
        let mut stiff = adapted_diag(y);
        if self.return_inductance_h > 0.0 {
            let beta = 1.0 / ((y[0] + y[1]) + (y[2] + y[3]) + 1.0 / self.return_inductance_h);
            let ya = to_adapted(y);
            for i in 0..4 {
                for j in 0..4 {
                    stiff[i][j] -= beta * ya[i] * ya[j];
                }
            }
        }
        if let Some(l) = self.cross_inductance_h {
            // (2I − B)/L with B the x–y bipartite adjacency; diagonal in this basis
            stiff[H][H] += 4.0 / l;
            stiff[DX][DX] += 2.0 / l;
            stiff[DY][DY] += 2.0 / l;
        }
        (cap, stiff)
    }

    /// The four physical modes, ascending in frequency.
    pub fn classify_modes(&self) -> Result<[Mode; 4]> {
        self.validate()?;
        let (cap, stiff) = self.adapted_matrices();
        let mut raw: Vec<(f64, [f64; 4])> = Vec::with_capacity(4);

        for block in coupled_blocks(&cap, &stiff) {
            let n = block.len();
            let c = DMatrix::from_fn(n, n, |i, j| cap[block[i]][block[j]]);
            let k = DMatrix::from_fn(n, n, |i, j| stiff[block[i]][block[j]]);
            let chol = c.clone().cholesky().ok_or_else(|| {
                Error::numerical(format!(
                    "capacitance matrix not positive definite on block {block:?}"
                ))
            })?;
            let l_inv = chol
                .l()
                .try_inverse()
                .ok_or_else(|| Error::numerical("singular capacitance factor"))?;
            let m = &l_inv * k * l_inv.transpose();
            let m = (&m + m.transpose()) * 0.5;
            let eig = SymmetricEigen::new(m);
            let back = l_inv.transpose();
            for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::numerical(format!(
                        "non-positive stiffness eigenvalue {lambda:e} on block {block:?}"
                    )));
                }
                let v = &back * eig.eigenvectors.column(idx);
                let mut adapted = [0.0; 4];
                for (i, &b) in block.iter().enumerate() {
                    adapted[b] = v[i];
                }
                let f_ghz = lambda.sqrt() / (2.0 * PI) * 1e-9;
                raw.push((f_ghz, normalize_potentials(from_adapted(adapted))));
            }
        }

        let mut modes: Vec<Mode> = raw
            .into_iter()
            .map(|(f, v)| {
                let (symmetry, pure) = classify_pattern(&v);
                Mode {
                    frequency_ghz: f,
                    symmetry,
                    potentials: v,
                    pure,
                }
            })
            .collect();
        modes.sort_by(|a, b| {
            a.frequency_ghz
                .total_cmp(&b.frequency_ghz)
                .then(a.symmetry.cmp(&b.symmetry))
        });
        resolve_sum_family(&mut modes);
        Ok([modes[0], modes[1], modes[2], modes[3]])
    }

    pub fn mode(&self, symmetry: Symmetry) -> Result<Mode> {
        self.classify_modes()?
            .into_iter()
            .find(|m| m.symmetry == symmetry)
            .ok_or_else(|| Error::numerical(format!("no mode classified as {symmetry}")))
    }

    /// Re-diagonalizes with `delta_c_f[i]` added to wing i (e.g. a dielectric film).
    pub fn tune_capacitance(&self, delta_c_f: [f64; 4]) -> Result<[Mode; 4]> {
        let c = self.effective_capacitances();
        let mut n = *self;
        for i in 0..4 {
            if !(delta_c_f[i] > -c[i]) {
                return Err(Error::invalid(format!(
                    "capacitance change on wing {} must exceed -C",
                    WING_NAMES[i]
                )));
            }
            n.perturbation.capacitance_f[i] += delta_c_f[i];
        }
        n.classify_modes()
    }
}

/// Groups basis indices into blocks connected by non-zero off-diagonal entries.
fn coupled_blocks(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> Vec<Vec<usize>> {
    let mut parent = [0usize, 1, 2, 3];
    fn root(p: &mut [usize; 4], mut i: usize) -> usize {
        while p[i] != i {
            i = p[i];
        }
        i
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if a[i][j] != 0.0 || b[i][j] != 0.0 {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..4 {
        let r = root(&mut parent, i);
        match blocks.iter_mut().find(|blk| root(&mut parent, blk[0]) == r) {
            Some(blk) => blk.push(i),
            None => blocks.push(vec![i]),
        }
    }
    blocks
}

fn normalize_potentials(v: [f64; 4]) -> [f64; 4] {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut u = v.map(|x| x / norm);
    let first = u
        .iter()
        .copied()
        .find(|x| x.abs() > ZERO_COMPONENT_THRESHOLD)
        .unwrap_or(1.0);
    if first < 0.0 {
        u = u.map(|x| -x);
    }
    // keep exact zeros free of a negative sign
    u.map(|x| if x == 0.0 { 0.0 } else { x })
}

/// Label from pair-sum / pair-difference projections.
fn classify_pattern(v: &[f64; 4]) -> (Symmetry, bool) {
    let sx = (v[0] + v[1]) * FRAC_1_SQRT_2;
    let dx = (v[0] - v[1]) * FRAC_1_SQRT_2;
    let sy = (v[2] + v[3]) * FRAC_1_SQRT_2;
    let dy = (v[2] - v[3]) * FRAC_1_SQRT_2;
    let sums = sx.hypot(sy);
    let tol = ZERO_COMPONENT_THRESHOLD;
    if dx.abs() >= dy.abs() && dx.abs() >= sums {
        (Symmetry::AX, dy.abs() < tol && sums < tol)
    } else if dy.abs() >= sums {
        (Symmetry::AY, dx.abs() < tol && sums < tol)
    } else {
        let pure = dx.abs() < tol && dy.abs() < tol;
        if sx * sy >= 0.0 {
            (Symmetry::SXy, pure)
        } else {
            (Symmetry::Hybrid, pure)
        }
    }
}

/// When both pair-sum modes get the same label (e.g. a grounded center with
/// C_x ≠ C_y puts one pair at zero), the lower one is S_xy.
fn resolve_sum_family(modes: &mut [Mode]) {
    let family: Vec<usize> = (0..modes.len())
        .filter(|&i| matches!(modes[i].symmetry, Symmetry::SXy | Symmetry::Hybrid))
        .collect();
    if family.len() == 2 && modes[family[0]].symmetry == modes[family[1]].symmetry {
        modes[family[0]].symmetry = Symmetry::SXy;
        modes[family[1]].symmetry = Symmetry::Hybrid;
    }
}

/// Mode × port amplitudes: entry (m, p) is mode m's potential on the wing hosting port p.
pub fn port_mode_couplings(modes: &[Mode; 4], layout: &PortLayout) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (row, mode) in out.iter_mut().zip(modes) {
        for (a, &w) in row.iter_mut().zip(&layout.wing_of_port) {
            *a = mode.potentials[w];
        }
    }
    out
}

fn is_x_wing(w: usize) -> bool {
    w < 2
}

/// Cross-talk of a symmetry-forbidden mode at a nominally decoupled port pair:
/// 20·log10(|A_p A_q| / |A_allowed₁ A_allowed₂|), floored at −300 dB.
pub fn crosstalk_db(
    network: &ResonatorNetwork,
    forbidden: Symmetry,
    port_pair: (usize, usize),
    layout: &PortLayout,
) -> Result<f64> {
    let (p, q) = port_pair;
    if p >= 4 || q >= 4 || p == q {
        return Err(Error::invalid("port pair must be two distinct ports in 0..4"));
    }
    let on_x = match forbidden {
        Symmetry::AX => true,
        Symmetry::AY => false,
        other => {
            return Err(Error::invalid(format!(
                "{other} couples to every port; no forbidden pair exists"
            )))
        }
    };
    let wp = layout.wing_of_port[p];
    let wq = layout.wing_of_port[q];
    if is_x_wing(wp) == on_x || is_x_wing(wq) == on_x {
        return Err(Error::invalid(format!(
            "ports {} and {} are not nominally decoupled from {forbidden}",
            p + 1,
            q + 1
        )));
    }
    let mode = network.mode(forbidden)?;
    let allowed: Vec<usize> = (0..4)
        .filter(|&w| is_x_wing(w) == on_x)
        .collect();
    let leak = (mode.potentials[wp] * mode.potentials[wq]).abs();
    let main = (mode.potentials[allowed[0]] * mode.potentials[allowed[1]]).abs();
    if main == 0.0 {
        return Err(Error::numerical("allowed-path amplitude vanished"));
    }
    if leak == 0.0 {
        return Ok(CROSSTALK_FLOOR_DB);
    }
    Ok((20.0 * (leak / main).log10()).max(CROSSTALK_FLOOR_DB))
}

/// Bisects the fractional capacitance perturbation of `wing` in (0, `max_fraction`]
/// that produces `target_db` of cross-talk. Keep `max_fraction` small enough that
/// the forbidden mode still classifies as itself; strong mixing relabels it.
pub fn perturbation_for_crosstalk(
    network: &ResonatorNetwork,
    wing: usize,
    forbidden: Symmetry,
    port_pair: (usize, usize),
    layout: &PortLayout,
    target_db: f64,
    max_fraction: f64,
) -> Result<f64> {
    if wing >= 4 {
        return Err(Error::invalid("wing index must be in 0..4"));
    }
    let ct = |d: f64| crosstalk_db(&network.with_capacitance_fraction(wing, d), forbidden, port_pair, layout);
    let mut lo = 0.0;
    let mut hi = max_fraction;
    if ct(hi)? < target_db {
        return Err(Error::NoSolution(format!(
            "cross-talk stays below {target_db} dB up to a {max_fraction} perturbation"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let v = ct(mid)?;
        if (v - target_db).abs() < 1e-9 {
            return Ok(mid);
        }
        if v < target_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityFactors {
    pub internal: f64,
    pub external: f64,
    pub total: f64,
}

/// Q = f/(2κ) for HWHM rates; 1/Q_tot = 1/Q_i + 1/Q_c. Frequency in GHz, κ in MHz.
pub fn quality_factors(frequency_ghz: f64, kappa_i_mhz: f64, kappa_c_mhz: f64) -> Result<QualityFactors> {
    if !(frequency_ghz > 0.0) {
        return Err(Error::invalid("frequency must be > 0"));
    }
    if !(kappa_i_mhz >= 0.0) || !(kappa_c_mhz >= 0.0) {
        return Err(Error::invalid("linewidths must be >= 0"));
    }
    if kappa_i_mhz == 0.0 && kappa_c_mhz == 0.0 {
        return Err(Error::invalid("at least one linewidth must be nonzero"));
    }
    let f_mhz = frequency_ghz * 1e3;
    let q = |k: f64| if k == 0.0 { f64::INFINITY } else { f_mhz / (2.0 * k) };
    Ok(QualityFactors {
        internal: q(kappa_i_mhz),
        external: q(kappa_c_mhz),
        total: q(kappa_i_mhz + kappa_c_mhz),
    })
}

/// Connector-pin coupling: κ_c = κ_max·d², capacitive coupling growing with depth.
pub fn tune_coupling(pin_depth: f64, kappa_max_mhz: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pin_depth) {
        return Err(Error::invalid("pin depth must be within [0, 1]"));
    }
    if !(kappa_max_mhz >= 0.0) {
        return Err(Error::invalid("kappa_max must be >= 0"));
    }
    Ok(kappa_max_mhz * pin_depth * pin_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(l_g: f64) -> ResonatorNetwork {
        let c = capacitance_for(1e-9, 3.1598).unwrap();
        ResonatorNetwork {
            wing_capacitances_f: [c; 4],
            wing_inductance_h: 1e-9,
            return_inductance_h: l_g,
            cross_inductance_h: None,
            perturbation: Perturbation::default(),
        }
    }

    #[test]
    fn lc_frequency_and_scaling() {
        let f = resonance_frequency(1e-9, 2.537e-12).unwrap();
        assert!((f - 3.1598).abs() < 2e-4, "{f}");
        let f4 = resonance_frequency(4e-9, 2.537e-12).unwrap();
        assert!((f4 - f / 2.0).abs() < 1e-12);
        let fy = resonance_frequency(1e-9, 2.434e-12).unwrap();
        // 2.434 pF is a rounded calibration; the exact value is 2.4317 pF
        assert!((fy - 3.2275).abs() < 2e-3, "{fy}");
        assert!(resonance_frequency(0.0, 1e-12).is_err());
        assert!(resonance_frequency(1e-9, -1.0).is_err());
    }

    #[test]
    fn calibration_hits_targets() {
        let net = ResonatorNetwork::reference();
        let c = net.wing_capacitances_f;
        assert!((c[0] * 1e12 - 2.537).abs() < 1e-3);
        assert!((c[2] * 1e12 - 2.431_687).abs() < 1e-5);
        let ax = net.mode(Symmetry::AX).unwrap();
        let ay = net.mode(Symmetry::AY).unwrap();
        assert!((ax.frequency_ghz - 3.1598).abs() < 1e-12);
        assert!((ay.frequency_ghz - 3.2275).abs() < 1e-12);
    }

    #[test]
    fn grounded_square_network_has_exact_antisymmetric_pair() {
        let net = square(0.0);
        let modes = net.classify_modes().unwrap();
        let ax = modes.iter().find(|m| m.symmetry == Symmetry::AX).unwrap();
        let ay = modes.iter().find(|m| m.symmetry == Symmetry::AY).unwrap();
        let expected = resonance_frequency(1e-9, net.wing_capacitances_f[0]).unwrap();
        assert!((ax.frequency_ghz - expected).abs() < 1e-12);
        assert!((ay.frequency_ghz - expected).abs() < 1e-12);
        let r = FRAC_1_SQRT_2;
        assert_eq!(ax.potentials[2..], [0.0, 0.0]);
        assert_eq!(ay.potentials[..2], [0.0, 0.0]);
        assert!((ax.potentials[0] - r).abs() < 1e-15 && (ax.potentials[1] + r).abs() < 1e-15);
        assert!((ay.potentials[2] - r).abs() < 1e-15 && (ay.potentials[3] + r).abs() < 1e-15);
        assert!(modes.iter().all(|m| m.pure));
        let mut labels: Vec<_> = modes.iter().map(|m| m.symmetry).collect();
        labels.sort();
        assert_eq!(labels, [Symmetry::SXy, Symmetry::AX, Symmetry::AY, Symmetry::Hybrid]);
    }

    #[test]
    fn symmetric_mode_is_lowest_with_return_inductance() {
        let net = ResonatorNetwork::reference();
        let modes = net.classify_modes().unwrap();
        assert_eq!(modes[0].symmetry, Symmetry::SXy);
        assert!(modes[0].potentials.iter().all(|&v| v > 0.0));
        // square case: ω_S² = 1/(C(L_w + 4L_g))
        let sq = square(0.1e-9).classify_modes().unwrap();
        let expect = resonance_frequency(1.4e-9, sq_cap()).unwrap();
        assert!((sq[0].frequency_ghz - expect).abs() < 1e-12);
    }

    fn sq_cap() -> f64 {
        capacitance_for(1e-9, 3.1598).unwrap()
    }

    #[test]
    fn longer_x_wings_put_a_x_below_a_y() {
        let net = ResonatorNetwork::reference();
        let ax = net.mode(Symmetry::AX).unwrap();
        let ay = net.mode(Symmetry::AY).unwrap();
        assert!(net.wing_capacitances_f[0] > net.wing_capacitances_f[2]);
        assert!(ax.frequency_ghz < ay.frequency_ghz);
    }

    #[test]
    fn hybrid_pattern_and_ordering() {
        let net = ResonatorNetwork::reference();
        let h = net.mode(Symmetry::Hybrid).unwrap();
        assert!(h.potentials[0] > 0.0 && h.potentials[1] > 0.0);
        assert!(h.potentials[2] < 0.0 && h.potentials[3] < 0.0);
        // without the cross link the hybrid lies between A_x and A_y
        let f = |s| net.mode(s).unwrap().frequency_ghz;
        assert!(f(Symmetry::AX) < f(Symmetry::Hybrid) && f(Symmetry::Hybrid) < f(Symmetry::AY));
        // the x–y link lifts it to the top while keeping the A-mode calibration
        let linked = ResonatorNetwork::calibrated(3.1598, 3.2275, 1e-9, 0.1e-9, Some(10e-9)).unwrap();
        let modes = linked.classify_modes().unwrap();
        let order: Vec<_> = modes.iter().map(|m| m.symmetry).collect();
        assert_eq!(order, [Symmetry::SXy, Symmetry::AX, Symmetry::AY, Symmetry::Hybrid]);
        assert!((linked.mode(Symmetry::AX).unwrap().frequency_ghz - 3.1598).abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_are_capacitance_orthogonal() {
        let net = ResonatorNetwork::reference()
            .with_capacitance_fraction(0, 0.013)
            .with_capacitance_fraction(3, -0.007);
        let modes = net.classify_modes().unwrap();
        let c = net.effective_capacitances();
        for a in 0..4 {
            for b in 0..a {
                let ip: f64 = (0..4).map(|i| modes[a].potentials[i] * c[i] * modes[b].potentials[i]).sum();
                assert!(ip.abs() / c[0] < 1e-10, "{a} {b} {ip}");
            }
        }
    }

    #[test]
    fn swap_equivariance() {
        let a = ResonatorNetwork::calibrated(3.1598, 3.2275, 1e-9, 0.1e-9, None).unwrap();
        let b = ResonatorNetwork::calibrated(3.2275, 3.1598, 1e-9, 0.1e-9, None).unwrap();
        let fa = a.classify_modes().unwrap();
        let fb = b.classify_modes().unwrap();
        for i in 0..4 {
            assert!((fa[i].frequency_ghz - fb[i].frequency_ghz).abs() < 1e-12);
        }
        assert_eq!(b.mode(Symmetry::AY).unwrap().frequency_ghz, a.mode(Symmetry::AX).unwrap().frequency_ghz);
    }

    #[test]
    fn port_couplings_obey_selection_rules() {
        let net = ResonatorNetwork::reference();
        let modes = net.classify_modes().unwrap();
        let m = port_mode_couplings(&modes, &PortLayout::default());
        for (i, mode) in modes.iter().enumerate() {
            match mode.symmetry {
                Symmetry::AX => assert_eq!((m[i][2], m[i][3]), (0.0, 0.0)),
                Symmetry::AY => assert_eq!((m[i][0], m[i][1]), (0.0, 0.0)),
                _ => assert!(m[i].iter().all(|v| *v != 0.0)),
            }
        }
        let sq = square(0.1e-9).classify_modes().unwrap();
        let s = port_mode_couplings(&sq, &PortLayout::default())[0];
        assert!(s.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn perturbed_wing_leaks_a_x_into_y_ports() {
        let net = ResonatorNetwork::reference().with_capacitance_fraction(0, 0.01);
        let ax = net.mode(Symmetry::AX).unwrap();
        assert!(!ax.pure);
        assert!(ax.potentials[2] != 0.0 && ax.potentials[3] != 0.0);
        // C-mixing leaves y₁, y₂ equal: the leak comes through the pair sums
        assert!((ax.potentials[2] - ax.potentials[3]).abs() < 1e-12);
        // A_y is untouched by an x-wing perturbation
        let ay = net.mode(Symmetry::AY).unwrap();
        assert_eq!(ay.potentials[..2], [0.0, 0.0]);
    }

    #[test]
    fn crosstalk_floor_and_growth() {
        let layout = PortLayout::default();
        let net = ResonatorNetwork::reference();
        assert_eq!(crosstalk_db(&net, Symmetry::AX, (2, 3), &layout).unwrap(), CROSSTALK_FLOOR_DB);
        assert_eq!(crosstalk_db(&net, Symmetry::AY, (0, 1), &layout).unwrap(), CROSSTALK_FLOOR_DB);
        assert!(crosstalk_db(&net, Symmetry::AX, (0, 1), &layout).is_err());
        assert!(crosstalk_db(&net, Symmetry::SXy, (2, 3), &layout).is_err());
        let mut prev = CROSSTALK_FLOOR_DB;
        for k in 1..=50 {
            let d = 1e-3 * k as f64;
            let v = crosstalk_db(&net.with_capacitance_fraction(0, d), Symmetry::AX, (2, 3), &layout).unwrap();
            assert!(v >= prev, "non-monotone at {d}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn bisection_finds_minus_30_db() {
        let layout = PortLayout::default();
        let net = ResonatorNetwork::reference();
        let d = perturbation_for_crosstalk(&net, 0, Symmetry::AX, (2, 3), &layout, -30.0, 0.1).unwrap();
        assert!(d > 0.0 && d <= 0.1);
        let v = crosstalk_db(&net.with_capacitance_fraction(0, d), Symmetry::AX, (2, 3), &layout).unwrap();
        assert!((v + 30.0).abs() < 1e-6);
    }

    #[test]
    fn quality_factor_relations() {
        let q = quality_factors(3.1598, 0.0, 6.0).unwrap();
        assert!((q.total - 3159.8 / 12.0).abs() < 1e-9);
        assert!(q.total < 300.0);
        let ki = 3159.8 / (2.0 * 1800.0);
        let q = quality_factors(3.1598, ki, 0.0).unwrap();
        assert!((q.total - 1800.0).abs() < 1e-9);
        assert!((quality_factors(3.1598, ki, 1e-9).unwrap().total - 1800.0).abs() < 1e-5);
        let q = quality_factors(3.0, 0.4, 0.4).unwrap();
        assert!((q.total - q.internal / 2.0).abs() < 1e-9);
        assert!(quality_factors(3.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn capacitance_tuning() {
        let lc = LcResonator { inductance_h: 1e-9, capacitance_f: 2.5e-12 };
        let f = lc.frequency_ghz().unwrap();
        assert_eq!(lc.tune_capacitance(0.0).unwrap(), f);
        assert!(lc.tune_capacitance(1e-14).unwrap() < f);
        assert!((lc.tune_capacitance(7.5e-12).unwrap() - f / 2.0).abs() < 1e-12);
        assert!(lc.tune_capacitance(-2.5e-12).is_err());

        let net = ResonatorNetwork::reference();
        let before = net.classify_modes().unwrap();
        let after = net.tune_capacitance([0.05e-12; 4]).unwrap();
        for (b, a) in before.iter().zip(after.iter()) {
            assert!(a.frequency_ghz < b.frequency_ghz);
        }
        assert!(net.tune_capacitance([-3e-12, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn coupling_tuning() {
        assert_eq!(tune_coupling(0.0, 6.0).unwrap(), 0.0);
        assert_eq!(tune_coupling(1.0, 6.0).unwrap(), 6.0);
        assert!(tune_coupling(0.3, 6.0).unwrap() < tune_coupling(0.31, 6.0).unwrap());
        assert!(tune_coupling(1.01, 6.0).is_err());
        assert!(tune_coupling(-0.01, 6.0).is_err());
    }

    #[test]
    fn layout_must_be_bijective() {
        assert!(PortLayout::new([0, 0, 2, 3]).is_err());
        assert!(PortLayout::new([1, 0, 3, 2]).is_ok());
    }
}
