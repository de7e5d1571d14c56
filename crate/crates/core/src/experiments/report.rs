//! Report files. Every file is comma separated with a header row, and every
//! real number is written with 17 significant digits so that reruns with the
//! same seed are byte identical.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::quantile::Support;

use super::montecarlo::McRow;

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Group id made safe for a file name: anything outside `[A-Za-z0-9_.-]`
/// becomes `_`.
pub fn sanitize(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<PathBuf> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// `mc_table.csv`: one row per estimator.
pub fn write_mc_table(dir: &Path, rows: &[McRow]) -> Result<PathBuf> {
    write_table(
        &dir.join("mc_table.csv"),
        &[
            "estimator",
            "n",
            "tau",
            "bias",
            "sqrt_n_se",
            "rmse",
            "coverage",
        ],
        rows.iter()
            .map(|r| {
                vec![
                    r.estimator.to_string(),
                    r.n.to_string(),
                    num(r.tau),
                    num(r.bias),
                    num(r.sqrt_n_se),
                    num(r.rmse),
                    num(r.coverage),
                ]
            })
            .collect(),
    )
}

/// `posterior_<group>.csv`: support value, pmf and running CDF.
pub fn write_posterior(dir: &Path, group: &str, support: &Support, pmf: &[f64]) -> Result<PathBuf> {
    let mut cdf = 0.0;
    write_table(
        &dir.join(format!("posterior_{}.csv", sanitize(group))),
        &["value", "pmf", "cdf"],
        support
            .values()
            .iter()
            .zip(pmf)
            .map(|(&s, &p)| {
                cdf += p;
                vec![num(s), num(p), num(cdf)]
            })
            .collect(),
    )
}

/// `mixing_pmf.csv`: support value and `E(π | D)`.
pub fn write_mixing_pmf(dir: &Path, support: &Support, mean_pi: &[f64]) -> Result<PathBuf> {
    write_table(
        &dir.join("mixing_pmf.csv"),
        &["value", "mean_pi"],
        support
            .values()
            .iter()
            .zip(mean_pi)
            .map(|(&s, &p)| vec![num(s), num(p)])
            .collect(),
    )
}

/// One point of a group's estimated quantile function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantilePoint {
    pub tau: f64,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

/// `quantile_function_<group>.csv`.
pub fn write_quantile_function(
    dir: &Path,
    group: &str,
    points: &[QuantilePoint],
) -> Result<PathBuf> {
    write_table(
        &dir.join(format!("quantile_function_{}.csv", sanitize(group))),
        &["tau", "mean", "q05", "q95"],
        points
            .iter()
            .map(|p| vec![num(p.tau), num(p.mean), num(p.q05), num(p.q95)])
            .collect(),
    )
}

/// Movement of one group's estimate away from its raw sample quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageRow {
    pub group: String,
    pub n: u64,
    /// Lower sample quantile of the recorded scores, absent for empty groups.
    pub sample_q: Option<f64>,
    pub posterior_mean: f64,
}

/// `shrinkage.csv`. Empty groups have an empty `sample_q` field.
pub fn write_shrinkage(dir: &Path, rows: &[ShrinkageRow]) -> Result<PathBuf> {
    write_table(
        &dir.join("shrinkage.csv"),
        &["group", "n_i", "sample_q", "posterior_mean"],
        rows.iter()
            .map(|r| {
                vec![
                    r.group.clone(),
                    r.n.to_string(),
                    r.sample_q.map(num).unwrap_or_default(),
                    num(r.posterior_mean),
                ]
            })
            .collect(),
    )
}

/// Per-group posterior summary used by the hierarchical runs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: String,
    pub n: u64,
    pub censored: usize,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

/// `summary.csv`: posterior mean and 5% and 95% posterior quantiles.
pub fn write_summary(dir: &Path, rows: &[GroupSummary]) -> Result<PathBuf> {
    write_table(
        &dir.join("summary.csv"),
        &["group", "n_i", "censored", "mean", "q05", "q95"],
        rows.iter()
            .map(|r| {
                vec![
                    r.group.clone(),
                    r.n.to_string(),
                    r.censored.to_string(),
                    num(r.mean),
                    num(r.q05),
                    num(r.q95),
                ]
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn sanitized_names() {
        assert_eq!(sanitize("AJ Stewart"), "AJ_Stewart");
        assert_eq!(sanitize("../x"), "_.._x");
        assert_eq!(sanitize(""), "_");
        assert_eq!(sanitize("ok-1.2"), "ok-1.2");
    }

    #[test]
    fn posterior_file_has_running_cdf() {
        let dir = tempfile::tempdir().unwrap();
        let s = Support::new(vec![1.0, 2.0]).unwrap();
        let path = write_posterior(dir.path(), "g/1", &s, &[0.25, 0.75]).unwrap();
        assert!(path.ends_with("posterior_g_1.csv"));
        let text = std::fs::read_to_string(path).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(last, format!("{},{},{}", num(2.0), num(0.75), num(1.0)));
    }
}
