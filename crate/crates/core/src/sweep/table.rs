//! CSV form of sweep results: one row per sample plus `mean` and `std` rows
//! per cell.

use super::{CellAggregate, CellKey, SweepCellResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "N",
    "n_sp",
    "layer",
    "sample",
    "seed",
    "k_iso",
    "aniso_index",
    "iterations_max",
    "eps_eq",
    "coating_frac_empirical",
    "coating_frac_analytic",
    "coating_voxels",
    "status",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Floats are written in shortest round-trip form, so the output is
/// bit-stable and [`parse_aggregates`] recovers the same values.
pub fn emit_csv<W: std::io::Write>(out: W, results: &[SweepCellResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for cell in results {
        let a = &cell.aggregate;
        let key = [a.key.resolution.to_string(), a.key.n_sp.to_string(), a.key.layer.to_string()];
        for s in &cell.samples {
            let mut row = key.to_vec();
            row.extend([
                s.sample.to_string(),
                s.seed.to_string(),
                opt(s.k_iso),
                opt(s.aniso_index),
                s.iterations_max.to_string(),
                s.eps_eq.to_string(),
                opt(s.coating_frac_empirical),
                a.coating_frac_analytic.to_string(),
                opt(s.coating_voxels),
                s.status.as_str().to_string(),
            ]);
            w.write_record(&row)?;
        }
        let status = format!("failed={}", a.failed);
        let mut mean = key.to_vec();
        mean.extend([
            "mean".into(),
            String::new(),
            opt(a.k_mean),
            opt(a.aniso_mean),
            a.iterations_max.to_string(),
            a.eps_eq_max.to_string(),
            opt(a.coating_frac_empirical_mean),
            a.coating_frac_analytic.to_string(),
            opt(a.coating_voxels_mean),
            status.clone(),
        ]);
        w.write_record(&mean)?;
        let mut std = key.to_vec();
        std.extend([
            "std".into(),
            String::new(),
            opt(a.k_std),
            opt(a.aniso_std),
            String::new(),
            String::new(),
            opt(a.coating_frac_empirical_std),
            String::new(),
            opt(a.coating_voxels_std),
            status,
        ]);
        w.write_record(&std)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back the per-cell aggregates written by [`emit_csv`].
pub fn parse_aggregates(text: &str) -> Result<Vec<CellAggregate>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut out: Vec<CellAggregate> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 2));
        let num = |i: usize| -> Result<Option<f64>> {
            match &rec[i] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(CSV_HEADER[i])),
            }
        };
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(CSV_HEADER[i]));
        let key = CellKey {
            resolution: int(0)?,
            n_sp: int(1)?,
            layer: num(2)?.ok_or_else(|| bad("layer"))?,
        };
        let failed = || -> Result<usize> {
            rec[12]
                .strip_prefix("failed=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("status"))
        };
        match &rec[3] {
            "mean" => out.push(CellAggregate {
                key,
                k_mean: num(5)?,
                k_std: None,
                aniso_mean: num(6)?,
                aniso_std: None,
                iterations_max: int(7)?,
                eps_eq_max: num(8)?.ok_or_else(|| bad("eps_eq"))?,
                coating_frac_empirical_mean: num(9)?,
                coating_frac_empirical_std: None,
                coating_frac_analytic: num(10)?.ok_or_else(|| bad("coating_frac_analytic"))?,
                coating_voxels_mean: num(11)?,
                coating_voxels_std: None,
                failed: failed()?,
            }),
            "std" => {
                let a = out
                    .last_mut()
                    .filter(|a| a.key == key)
                    .ok_or_else(|| bad("std row without mean row"))?;
                a.k_std = num(5)?;
                a.aniso_std = num(6)?;
                a.coating_frac_empirical_std = num(9)?;
                a.coating_voxels_std = num(11)?;
            }
            _ => {}
        }
    }
    Ok(out)
}
