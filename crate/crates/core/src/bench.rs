//! Timing experiments: density sweeps for scaling slopes and fills of
//! increasingly perforated squares.

use std::time::Instant;

use serde::Serialize;

use crate::algorithm::Algorithm;
use crate::error::{Error, Result};
use crate::geometry::{discretize_boundary, Domain};
use crate::spacing::SpacingField;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub variant: String,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Median of `times`, seconds.
    pub median: f64,
    pub times: Vec<f64>,
    /// Set when the median is below the timer's useful resolution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl BenchRecord {
    pub fn csv_header(repeats: usize) -> String {
        let mut s = String::from("alg,variant,h,N,t_median");
        for i in 0..repeats {
            s.push_str(&format!(",t{}", i + 1));
        }
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{},{},{:.16e},{},{:.16e}",
            self.algorithm, self.variant, self.h, self.n, self.median
        );
        for t in &self.times {
            s.push_str(&format!(",{t:.16e}"));
        }
        s
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times one fill configuration: a discarded warm-up run, then `repeats`
/// timed runs. Only the fill call is timed; every run uses the same seed.
pub fn time_fill(
    alg: Algorithm,
    domain: &Domain,
    h: &SpacingField,
    repeats: usize,
    seed: u64,
) -> Result<BenchRecord> {
    if repeats < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 repeats, got {repeats}"
        )));
    }
    let boundary = discretize_boundary(domain, h)?;
    let n = alg.fill(domain, h, &boundary, seed)?.len();
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let res = alg.fill(domain, h, &boundary, seed)?;
        times.push(start.elapsed().as_secs_f64());
        debug_assert_eq!(res.len(), n);
    }
    let med = median(&times);
    Ok(BenchRecord {
        algorithm: alg,
        variant: alg.variant().to_string(),
        h: h.constant_value().unwrap_or(f64::NAN),
        n,
        median: med,
        times,
        warning: (med < 1e-3).then(|| "median below 1 ms, increase N".to_string()),
    })
}

/// One record per constant spacing in `h_list`.
pub fn sweep(
    alg: Algorithm,
    domain: &Domain,
    h_list: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    h_list
        .iter()
        .map(|&hv| time_fill(alg, domain, &SpacingField::constant(hv)?, repeats, seed))
        .collect()
}

/// Constant spacing giving roughly `target` nodes in `domain`.
pub fn spacing_for_count(domain: &Domain, target: f64) -> Result<f64> {
    if !(target >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target node count must be at least 1, got {target}"
        )));
    }
    let volume = domain
        .analytic_volume()
        .unwrap_or_else(|| domain.estimate_volume(100_000, 1));
    Ok((volume / target).powf(1.0 / domain.dim() as f64))
}

/// Least-squares slope of `log t` against `log N` over records with
/// `N ≥ min_n`; `None` with fewer than two such records.
pub fn fit_slope(records: &[BenchRecord], min_n: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.n >= min_n && r.median > 0.0)
        .map(|r| ((r.n as f64).ln(), r.median.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// The unit square with the centred square hole `(½−α, ½+α)²` removed.
pub fn perforated_square(alpha: f64) -> Result<Domain> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 0.5), got {alpha}"
        )));
    }
    let outer = Domain::unit_cube(2)?;
    let hole = Domain::make_box(&[0.5 - alpha, 0.5 - alpha], &[0.5 + alpha, 0.5 + alpha])?;
    Domain::difference(&outer, &hole)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkRecord {
    pub alpha: f64,
    #[serde(flatten)]
    pub record: BenchRecord,
}

/// Times every algorithm on the perforated square for every `α`.
pub fn shrinking_domain(
    algs: &[Algorithm],
    alphas: &[f64],
    h: f64,
    repeats: usize,
    seed: u64,
) -> Result<Vec<ShrinkRecord>> {
    let spacing = SpacingField::constant(h)?;
    let mut out = Vec::new();
    for &alpha in alphas {
        let domain = perforated_square(alpha)?;
        for &alg in algs {
            out.push(ShrinkRecord {
                alpha,
                record: time_fill(alg, &domain, &spacing, repeats, seed)?,
            });
        }
    }
    Ok(out)
}
