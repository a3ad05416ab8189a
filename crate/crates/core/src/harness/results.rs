use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: &str = "scene_id,protocol,scheme,param,num_sources,seed,psnr,ssim";

/// One scheme evaluated on one scene. `seed` is the scene seed, from which
/// the scene, the rig and the stratification jitter are all derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scene_id: usize,
    pub protocol: String,
    pub scheme: String,
    /// α for error weighting, β for Gaussian weighting, empty otherwise.
    pub param: Option<f64>,
    pub num_sources: usize,
    pub seed: u64,
    /// `inf` when the render is exact.
    pub psnr: f64,
    pub ssim: f64,
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

/// Means over scenes for one (protocol, scheme, param, S) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub scheme: String,
    pub param: Option<f64>,
    pub num_sources: usize,
    pub scenes: usize,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

/// Groups rows by (protocol, scheme, param, S) and averages over scenes.
/// Output is sorted by the group key.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    type Key = (String, String, Option<u64>, usize);
    let mut groups: BTreeMap<Key, (usize, f64, f64)> = BTreeMap::new();
    for r in rows {
        let key = (r.protocol.clone(), r.scheme.clone(), r.param.map(f64::to_bits), r.num_sources);
        let g = groups.entry(key).or_insert((0, 0.0, 0.0));
        g.0 += 1;
        g.1 += r.psnr;
        g.2 += r.ssim;
    }
    groups
        .into_iter()
        .map(|((protocol, scheme, param, num_sources), (n, psnr, ssim))| SummaryRow {
            protocol,
            scheme,
            param: param.map(f64::from_bits),
            num_sources,
            scenes: n,
            mean_psnr: psnr / n as f64,
            mean_ssim: ssim / n as f64,
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in summary {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
