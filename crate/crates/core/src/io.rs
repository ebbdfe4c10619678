//! Result files: CSV spectra and grids with `#` metadata headers, and SVG
//! heatmaps.
//!
//! Both CSV kinds share the columns `frequency_GHz,field_mT,re_S,im_S`. A grid
//! is stored long-form, field-major. Floats use Rust's shortest round-trip
//! formatting, so reading a file back reproduces the values bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectroscopy::{LineCut, SweepMetadata, SweepResult, SweepSnapshot};

pub const CSV_COLUMNS: &str = "frequency_GHz,field_mT,re_S,im_S";

fn header(kind: &str, hash: &str, snapshot_json: &str, created: Option<u64>, normalized_by: Option<f64>) -> String {
    let mut s = format!("# xmode-qed {kind}\n# config_hash: {hash}\n# snapshot: {snapshot_json}\n");
    if let Some(t) = created {
        let _ = writeln!(s, "# created_unix: {t}");
    }
    if let Some(n) = normalized_by {
        let _ = writeln!(s, "# normalized_by: {n}");
    }
    s.push_str(CSV_COLUMNS);
    s.push('\n');
    s
}

fn sweep_header(kind: &str, meta: &SweepMetadata) -> String {
    let snap = serde_json::to_string(&meta.snapshot).expect("snapshot serializes");
    header(kind, &meta.config_hash, &snap, meta.created_unix, meta.normalized_by)
}

fn push_row(s: &mut String, f: f64, b: f64, z: Complex64) {
    let _ = writeln!(s, "{f},{b},{},{}", z.re, z.im);
}

pub fn grid_csv(result: &SweepResult) -> String {
    let mut s = sweep_header("grid", &result.metadata);
    for (i, &b) in result.fields_mt.iter().enumerate() {
        for (&f, &z) in result.frequencies_ghz.iter().zip(result.row(i)) {
            push_row(&mut s, f, b, z);
        }
    }
    s
}

pub fn spectrum_csv(cut: &LineCut, meta: &SweepMetadata) -> String {
    let mut s = sweep_header("spectrum", meta);
    for (&f, &z) in cut.frequencies_ghz.iter().zip(&cut.values) {
        push_row(&mut s, f, cut.field_mt, z);
    }
    s
}

/// Spectrum with caller-supplied provenance; `snapshot_json` must be one line.
pub fn spectrum_csv_raw(
    freqs_ghz: &[f64],
    field_mt: f64,
    values: &[Complex64],
    hash: &str,
    snapshot_json: &str,
    created: Option<u64>,
) -> String {
    let mut s = header("spectrum", hash, snapshot_json, created, None);
    for (&f, &z) in freqs_ghz.iter().zip(values) {
        push_row(&mut s, f, field_mt, z);
    }
    s
}

/// Parsed CSV body plus its `# key: value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub metadata: BTreeMap<String, String>,
    pub frequencies_ghz: Vec<f64>,
    pub fields_mt: Vec<f64>,
    pub values: Vec<Complex64>,
}

pub fn parse_csv(text: &str) -> Result<CsvData> {
    let mut metadata = BTreeMap::new();
    let mut seen_columns = false;
    let mut data = CsvData {
        metadata: BTreeMap::new(),
        frequencies_ghz: vec![],
        fields_mt: vec![],
        values: vec![],
    };
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !seen_columns {
            if line != CSV_COLUMNS {
                return Err(Error::invalid(format!(
                    "line {line_no}: expected column header `{CSV_COLUMNS}`"
                )));
            }
            seen_columns = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::invalid(format!("line {line_no}: expected 4 columns, found {}", cols.len())));
        }
        let mut v = [0.0; 4];
        for (k, c) in cols.iter().enumerate() {
            v[k] = c
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::invalid(format!("line {line_no}: `{c}` is not a finite number")))?;
        }
        data.frequencies_ghz.push(v[0]);
        data.fields_mt.push(v[1]);
        data.values.push(Complex64::new(v[2], v[3]));
    }
    if !seen_columns {
        return Err(Error::invalid(format!("missing column header `{CSV_COLUMNS}`")));
    }
    data.metadata = metadata;
    Ok(data)
}

/// A single spectrum: frequencies must increase strictly.
pub fn read_spectrum(text: &str) -> Result<CsvData> {
    let d = parse_csv(text)?;
    if d.frequencies_ghz.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("spectrum frequencies must increase strictly"));
    }
    Ok(d)
}

/// Rebuilds a sweep from a grid file, including its parameter snapshot.
pub fn read_grid(text: &str) -> Result<SweepResult> {
    let d = parse_csv(text)?;
    let snap_json = d
        .metadata
        .get("snapshot")
        .ok_or_else(|| Error::invalid("grid file has no `# snapshot:` header"))?;
    let snapshot: SweepSnapshot =
        serde_json::from_str(snap_json).map_err(|e| Error::invalid(format!("snapshot header: {e}")))?;
    let n_freq = match d.fields_mt.iter().position(|&b| b != d.fields_mt[0]) {
        Some(k) => k,
        None => d.fields_mt.len(),
    };
    if n_freq < 2 || d.values.len() % n_freq != 0 {
        return Err(Error::invalid("grid rows do not form a rectangular field × frequency grid"));
    }
    let freqs = d.frequencies_ghz[..n_freq].to_vec();
    if freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid frequencies must increase strictly within a row"));
    }
    let n_field = d.values.len() / n_freq;
    let mut fields = Vec::with_capacity(n_field);
    for i in 0..n_field {
        let block = i * n_freq..(i + 1) * n_freq;
        let b = d.fields_mt[block.start];
        if d.fields_mt[block.clone()].iter().any(|&x| x != b) || d.frequencies_ghz[block] != freqs[..] {
            return Err(Error::invalid(format!("grid row {} is not aligned with the first row", i + 1)));
        }
        fields.push(b);
    }
    let created_unix = d
        .metadata
        .get("created_unix")
        .map(|s| s.parse::<u64>().map_err(|_| Error::invalid("bad created_unix header")))
        .transpose()?;
    let normalized_by = d
        .metadata
        .get("normalized_by")
        .map(|s| s.parse::<f64>().map_err(|_| Error::invalid("bad normalized_by header")))
        .transpose()?;
    let result = SweepResult {
        fields_mt: fields,
        frequencies_ghz: freqs,
        data: d.values,
        metadata: SweepMetadata {
            config_hash: d.metadata.get("config_hash").cloned().unwrap_or_default(),
            snapshot,
            created_unix,
            normalized_by,
        },
    };
    result.validate()?;
    Ok(result)
}

/// Piecewise-linear dark-blue → teal → yellow ramp over t ∈ [0, 1].
fn color(t: f64) -> String {
    const STOPS: [[f64; 3]; 3] = [[20.0, 24.0, 82.0], [33.0, 145.0, 140.0], [253.0, 231.0, 37.0]];
    let t = t.clamp(0.0, 1.0) * 2.0;
    let k = (t.floor() as usize).min(1);
    let u = t - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|j| (STOPS[k][j] + u * (STOPS[k + 1][j] - STOPS[k][j])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// |S| heatmap, field on x and frequency on y (increasing upward), scaled to
/// the grid maximum.
pub fn heatmap_svg(result: &SweepResult) -> String {
    let (nx, ny) = (result.n_fields(), result.n_frequencies());
    let max = result.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let (cw, ch) = (3, 2);
    let (ml, mb, mt) = (60, 40, 10);
    let (w, h) = (ml + nx * cw + 10, mt + ny * ch + mb);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" shape-rendering="crispEdges">"#
    );
    for i in 0..nx {
        for (j, z) in result.row(i).iter().enumerate() {
            let t = if max > 0.0 { z.norm() / max } else { 0.0 };
            let x = ml + i * cw;
            let y = mt + (ny - 1 - j) * ch;
            let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{}"/>"#, color(t));
        }
    }
    let fx = |v: f64| format!("{v:.2}");
    let base = mt + ny * ch;
    let _ = writeln!(
        s,
        r#"<text x="{ml}" y="{}" font-size="11">{} mT</text><text x="{}" y="{}" font-size="11" text-anchor="end">{} mT</text>"#,
        base + 15,
        fx(result.fields_mt[0]),
        ml + nx * cw,
        base + 15,
        fx(result.fields_mt[nx - 1])
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{} GHz</text><text x="{}" y="{}" font-size="11" text-anchor="end">{} GHz</text>"#,
        ml - 4,
        base,
        result.frequencies_ghz[0],
        ml - 4,
        mt + 10,
        result.frequencies_ghz[ny - 1]
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">field (mT), |S| normalized</text>"#,
        ml + nx * cw / 2,
        base + 32
    );
    s.push_str("</svg>\n");
    s
}
