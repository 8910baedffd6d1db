//! CSV reporting: one row per (phase, repeat), plus a mean/stddev summary.

use std::fmt::Write;

use crate::config::GemmConfig;
use crate::run::PhaseRow;

/// One data row of the benchmark report.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub dataset: String,
    pub ranks: usize,
    pub grid_m: usize,
    pub config: String,
    pub phase: &'static str,
    pub repeat: usize,
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "dataset,ranks,grid_M,config,phase,repeat,seconds";

pub fn make_records(cfg: &GemmConfig, rows: &[PhaseRow]) -> Vec<BenchRecord> {
    rows.iter()
        .map(|r| BenchRecord {
            dataset: cfg.dataset.clone(),
            ranks: cfg.ranks,
            grid_m: cfg.grid_m,
            config: cfg.majors.to_string(),
            phase: r.phase,
            repeat: r.repeat,
            seconds: r.seconds,
        })
        .collect()
}

/// Renders the data rows followed by a summary block with the sample mean
/// and standard deviation per (configuration, phase), in first-seen order.
/// An empty record set renders as the bare header.
pub fn csv_report(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    if records.is_empty() {
        return out;
    }
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.9}",
            r.dataset, r.ranks, r.grid_m, r.config, r.phase, r.repeat, r.seconds
        )
        .unwrap();
    }
    out.push('\n');
    out.push_str("dataset,ranks,grid_M,config,phase,mean_seconds,stddev_seconds\n");
    for (key, secs) in grouped(records) {
        let (mean, sd) = stats(&secs);
        writeln!(out, "{},{},{},{},{},{mean:.9},{sd:.9}", key.0, key.1, key.2, key.3, key.4)
            .unwrap();
    }
    out
}

type GroupKey = (String, usize, usize, String, &'static str);

fn grouped(records: &[BenchRecord]) -> Vec<(GroupKey, Vec<f64>)> {
    let mut out: Vec<(GroupKey, Vec<f64>)> = Vec::new();
    for r in records {
        let key = (r.dataset.clone(), r.ranks, r.grid_m, r.config.clone(), r.phase);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, secs)) => secs.push(r.seconds),
            None => out.push((key, vec![r.seconds])),
        }
    }
    out
}

/// Mean and sample standard deviation; a single sample has deviation 0.
fn stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Majors;

    fn sample_records() -> Vec<BenchRecord> {
        let cfg = GemmConfig {
            dataset: "MINI".into(),
            ni: 64,
            nj: 64,
            nk: 64,
            ranks: 4,
            grid_m: 2,
            majors: Majors::parse("I/I/J").unwrap(),
            repeats: 2,
        };
        let rows = vec![
            PhaseRow { phase: "scatter", repeat: 0, seconds: 0.002 },
            PhaseRow { phase: "compute", repeat: 0, seconds: 0.030 },
            PhaseRow { phase: "gather", repeat: 0, seconds: 0.001 },
            PhaseRow { phase: "scatter", repeat: 1, seconds: 0.004 },
            PhaseRow { phase: "compute", repeat: 1, seconds: 0.032 },
            PhaseRow { phase: "gather", repeat: 1, seconds: 0.003 },
        ];
        make_records(&cfg, &rows)
    }

    #[test]
    fn six_rows_and_three_summary_lines() {
        let text = csv_report(&sample_records());
        let mut sections = text.split("\n\n");
        let data: Vec<&str> = sections.next().unwrap().lines().collect();
        let summary: Vec<&str> = sections.next().unwrap().lines().collect();
        assert_eq!(data.len(), 7); // header + 6 rows
        assert_eq!(data[0], CSV_HEADER);
        assert_eq!(data[1], "MINI,4,2,I/I/J,scatter,0,0.002000000");
        assert_eq!(summary.len(), 4); // header + 3 phases
        assert!(summary[1].starts_with("MINI,4,2,I/I/J,scatter,0.003000000,"));
    }

    #[test]
    fn empty_records_render_the_bare_header() {
        assert_eq!(csv_report(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn summary_means_match_recomputation() {
        let records = sample_records();
        let text = csv_report(&records);
        let summary_lines: Vec<&str> = text.split("\n\n").nth(1).unwrap().lines().skip(1).collect();
        for line in summary_lines {
            let cols: Vec<&str> = line.split(',').collect();
            let phase = cols[4];
            let mean: f64 = cols[5].parse().unwrap();
            let xs: Vec<f64> =
                records.iter().filter(|r| r.phase == phase).map(|r| r.seconds).collect();
            let want = xs.iter().sum::<f64>() / xs.len() as f64;
            assert!((mean - want).abs() < 1e-12, "{phase}: {mean} vs {want}");
        }
    }

    #[test]
    fn sample_deviation_uses_n_minus_one() {
        let (mean, sd) = stats(&[1.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((sd - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(stats(&[5.0]), (5.0, 0.0));
    }
}
