use xmode_qed::circuit::{self, PortLayout, ResonatorNetwork, Symmetry};

use crate::{array, boxed, guard, read, write, Fail, XqStatus};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XqSymmetry {
    SXy = 0,
    AX = 1,
    AY = 2,
    Hybrid = 3,
}

impl From<Symmetry> for XqSymmetry {
    fn from(s: Symmetry) -> Self {
        match s {
            Symmetry::SXy => XqSymmetry::SXy,
            Symmetry::AX => XqSymmetry::AX,
            Symmetry::AY => XqSymmetry::AY,
            Symmetry::Hybrid => XqSymmetry::Hybrid,
        }
    }
}

impl From<XqSymmetry> for Symmetry {
    fn from(s: XqSymmetry) -> Self {
        match s {
            XqSymmetry::SXy => Symmetry::SXy,
            XqSymmetry::AX => Symmetry::AX,
            XqSymmetry::AY => Symmetry::AY,
            XqSymmetry::Hybrid => Symmetry::Hybrid,
        }
    }
}

/// One eigenmode of the network.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqMode {
    pub frequency_ghz: f64,
    pub symmetry: XqSymmetry,
    /// Wing potentials (x1, x2, y1, y2), unit norm.
    pub potentials: [f64; 4],
    pub pure_symmetry: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XqQualityFactors {
    pub internal: f64,
    pub external: f64,
    pub total: f64,
}

/// Opaque lumped-element network.
pub struct XqNetwork {
    inner: ResonatorNetwork,
}

/// Network whose wing capacitances put A_x and A_y at the two targets.
#[no_mangle]
pub extern "C" fn xq_network_calibrated(
    ax_ghz: f64,
    ay_ghz: f64,
    wing_inductance_h: f64,
    return_inductance_h: f64,
    out: *mut *mut XqNetwork,
) -> XqStatus {
    guard(|| {
        let inner = ResonatorNetwork::calibrated(ax_ghz, ay_ghz, wing_inductance_h, return_inductance_h, None)?;
        boxed(out, XqNetwork { inner })
    })
}

/// Network from explicit element values; `capacitances_f` holds 4 values.
#[no_mangle]
pub unsafe extern "C" fn xq_network_new(
    capacitances_f: *const f64,
    wing_inductance_h: f64,
    return_inductance_h: f64,
    out: *mut *mut XqNetwork,
) -> XqStatus {
    guard(|| {
        let inner = ResonatorNetwork {
            wing_capacitances_f: array::<4>(capacitances_f, "capacitances_f")?,
            wing_inductance_h,
            return_inductance_h,
            cross_inductance_h: None,
            perturbation: Default::default(),
        };
        inner.validate()?;
        boxed(out, XqNetwork { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn xq_network_free(network: *mut XqNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Adds `fraction` × C to the capacitance of `wing` (0..4).
#[no_mangle]
pub unsafe extern "C" fn xq_network_perturb_capacitance(network: *mut XqNetwork, wing: usize, fraction: f64) -> XqStatus {
    guard(|| {
        let net = network.as_mut().ok_or_else(|| crate::null("network"))?;
        if wing >= 4 {
            return Err(Fail::new(XqStatus::InvalidInput, "wing index must be in 0..4"));
        }
        let next = net.inner.with_capacitance_fraction(wing, fraction);
        next.validate()?;
        net.inner = next;
        Ok(())
    })
}

/// The four modes in ascending frequency; `modes` must hold 4 entries.
#[no_mangle]
pub unsafe extern "C" fn xq_network_modes(network: *const XqNetwork, modes: *mut XqMode) -> XqStatus {
    guard(|| {
        let net = read(network, "network")?;
        if modes.is_null() {
            return Err(crate::null("modes"));
        }
        for (k, m) in net.inner.classify_modes()?.iter().enumerate() {
            modes.add(k).write(XqMode {
                frequency_ghz: m.frequency_ghz,
                symmetry: m.symmetry.into(),
                potentials: m.potentials,
                pure_symmetry: m.pure,
            });
        }
        Ok(())
    })
}

/// Cross-talk (dB) of the `forbidden` mode between ports `port_a` and `port_b`.
#[no_mangle]
pub unsafe extern "C" fn xq_network_crosstalk_db(
    network: *const XqNetwork,
    forbidden: XqSymmetry,
    port_a: usize,
    port_b: usize,
    db: *mut f64,
) -> XqStatus {
    guard(|| {
        let net = read(network, "network")?;
        let v = circuit::crosstalk_db(&net.inner, forbidden.into(), (port_a, port_b), &PortLayout::default())?;
        write(db, "db", v)
    })
}

/// Fractional capacitance perturbation of `wing` giving `target_db` of cross-talk.
#[no_mangle]
pub unsafe extern "C" fn xq_network_perturbation_for_crosstalk(
    network: *const XqNetwork,
    wing: usize,
    forbidden: XqSymmetry,
    port_a: usize,
    port_b: usize,
    target_db: f64,
    max_fraction: f64,
    fraction: *mut f64,
) -> XqStatus {
    guard(|| {
        let net = read(network, "network")?;
        let v = circuit::perturbation_for_crosstalk(
            &net.inner,
            wing,
            forbidden.into(),
            (port_a, port_b),
            &PortLayout::default(),
            target_db,
            max_fraction,
        )?;
        write(fraction, "fraction", v)
    })
}

#[no_mangle]
pub unsafe extern "C" fn xq_quality_factors(
    frequency_ghz: f64,
    kappa_internal_mhz: f64,
    kappa_external_mhz: f64,
    out: *mut XqQualityFactors,
) -> XqStatus {
    guard(|| {
        let q = circuit::quality_factors(frequency_ghz, kappa_internal_mhz, kappa_external_mhz)?;
        write(out, "out", XqQualityFactors { internal: q.internal, external: q.external, total: q.total })
    })
}
