//! Multi-scale code histograms.

use std::io::Write;

use crate::error::{Error, Result};
use crate::kernels::{code_map, CodeMap, DescriptorKind, Encoder};
use crate::raster::{build_pyramid, GrayImage};

/// Pyramid depth used when none is given.
pub const DEFAULT_LEVELS: usize = 3;

/// L1-normalized histogram of code values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<f64>,
}

impl Histogram {
    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }
}

pub fn histogram(map: &CodeMap) -> Result<Histogram> {
    if map.data.is_empty() {
        return Err(Error::EmptyCodeMap);
    }
    let mut counts = vec![0u64; 1 << map.bits];
    for &c in &map.data {
        counts[c as usize] += 1;
    }
    let total = map.data.len() as f64;
    Ok(Histogram { bins: counts.into_iter().map(|n| n as f64 / total).collect() })
}

/// Feature vector of one image: per-level histograms, level 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub vector: Vec<f64>,
    pub encoder: Encoder,
    pub levels: usize,
}

impl Descriptor {
    pub fn kind(&self) -> DescriptorKind {
        self.encoder.kind()
    }

    pub fn bins_per_level(&self) -> usize {
        self.encoder.kind().bins()
    }

    /// The histogram of pyramid level `level`.
    pub fn segment(&self, level: usize) -> &[f64] {
        let b = self.bins_per_level();
        &self.vector[level * b..(level + 1) * b]
    }
}

pub fn describe(img: &GrayImage, encoder: &Encoder, levels: usize) -> Result<Descriptor> {
    let pyramid = build_pyramid(img, levels)?;
    let mut vector = Vec::with_capacity(levels * encoder.kind().bins());
    for level in pyramid.levels() {
        vector.extend(histogram(&code_map(level, encoder)?)?.bins);
    }
    Ok(Descriptor { vector, encoder: *encoder, levels })
}

/// Formats `v` with 9 significant digits in plain decimal notation.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new digit (9.999999999 -> 10.00000000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if digits > 9 && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Writes the descriptor CSV: `path,kind,levels,v0,v1,...` with a header row.
pub fn write_descriptor_csv<W: Write>(out: W, rows: &[(String, Descriptor)]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let width = rows.iter().map(|(_, d)| d.vector.len()).max().unwrap_or(0);
    let mut header = vec!["path".to_string(), "kind".to_string(), "levels".to_string()];
    header.extend((0..width).map(|i| format!("v{i}")));
    writer.write_record(&header)?;
    for (path, d) in rows {
        let mut record = vec![path.clone(), d.kind().to_string(), d.levels.to_string()];
        record.extend(d.vector.iter().map(|&v| format_sig9(v)));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<descriptor csv>", e))?;
    Ok(())
}
