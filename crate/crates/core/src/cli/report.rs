//! Run reports and their CSV / JSON encodings.

use std::io::{Read, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::analysis::{MetricPoint, SystemConfig};
use crate::error::{Error, Result};
use crate::sim::SimEstimate;
use crate::validation::Verdict;

pub const ANALYTIC_COLUMNS: [&str; 8] = [
    "tau",
    "d_star",
    "phi1",
    "phi2",
    "p_tr",
    "f_snr",
    "p_out",
    "throughput",
];
pub const SIM_COLUMNS: [&str; 5] = ["p_tr_mc", "p_out_mc", "thr_mc", "ci99_ptr", "ci99_pout"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metrics: MetricPoint,
    pub sim: Option<SimEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SystemConfig,
    pub rows: Vec<ReportRow>,
    pub validation: Vec<Verdict>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.validation.iter().all(|v| v.passed)
    }

    pub fn has_sim(&self) -> bool {
        self.rows.iter().any(|r| r.sim.is_some())
    }

    /// Flattened view written to CSV.
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows.iter().map(CsvRow::from).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_sim = self.has_sim();
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = ANALYTIC_COLUMNS.to_vec();
        if with_sim {
            header.extend(SIM_COLUMNS);
        }
        writer.write_record(&header)?;
        for row in self.csv_rows() {
            let mut fields: Vec<String> = row
                .analytic_values()
                .iter()
                .map(|v| format!("{v:e}"))
                .collect();
            if with_sim {
                let sim = row.sim_values().ok_or_else(|| {
                    Error::InvalidConfig(
                        "every row needs simulation columns once one has them".into(),
                    )
                })?;
                fields.extend(sim.iter().map(|v| format!("{v:e}")));
            }
            writer.write_record(&fields)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ASCII"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One CSV line. Simulation columns are absent for analytic-only runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub tau: f64,
    pub d_star: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub p_tr: f64,
    pub f_snr: f64,
    pub p_out: f64,
    pub throughput: f64,
    #[serde(default)]
    pub p_tr_mc: Option<f64>,
    #[serde(default)]
    pub p_out_mc: Option<f64>,
    #[serde(default)]
    pub thr_mc: Option<f64>,
    #[serde(default)]
    pub ci99_ptr: Option<f64>,
    #[serde(default)]
    pub ci99_pout: Option<f64>,
}

impl CsvRow {
    fn analytic_values(&self) -> [f64; 8] {
        [
            self.tau,
            self.d_star,
            self.phi1,
            self.phi2,
            self.p_tr,
            self.f_snr,
            self.p_out,
            self.throughput,
        ]
    }

    fn sim_values(&self) -> Option<[f64; 5]> {
        Some([
            self.p_tr_mc?,
            self.p_out_mc?,
            self.thr_mc?,
            self.ci99_ptr?,
            self.ci99_pout?,
        ])
    }
}

impl From<&ReportRow> for CsvRow {
    fn from(r: &ReportRow) -> Self {
        let m = &r.metrics;
        let s = r.sim.as_ref();
        CsvRow {
            tau: m.tau,
            d_star: m.d_star,
            phi1: m.phi1,
            phi2: m.phi2,
            p_tr: m.p_tr,
            f_snr: m.f_snr,
            p_out: m.p_out,
            throughput: m.throughput,
            p_tr_mc: s.map(|s| s.p_tr_hat),
            p_out_mc: s.map(|s| s.p_out_hat),
            thr_mc: s.map(|s| s.throughput_hat),
            ci99_ptr: s.map(|s| s.ci99_ptr),
            ci99_pout: s.map(|s| s.ci99_pout),
        }
    }
}

/// Reads rows back from CSV produced by [`RunReport::write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let expected_len = ANALYTIC_COLUMNS.len();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < expected_len || names[..expected_len] != ANALYTIC_COLUMNS {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected CSV header `{}`", names.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sweep;
    use crate::sim::run;

    fn report(with_sim: bool) -> RunReport {
        let cfg = SystemConfig::reference_defaults();
        let pts = sweep(&cfg, &[0.2, 0.7]).unwrap();
        let rows = pts
            .into_iter()
            .map(|metrics| ReportRow {
                metrics,
                sim: with_sim.then(|| run(&cfg.with_tau(metrics.tau), 5, 200, 1).unwrap()),
            })
            .collect();
        RunReport {
            config: cfg,
            rows,
            validation: vec![],
            wall_clock: Duration::from_millis(3),
        }
    }

    #[test]
    fn analytic_header_exact() {
        let text = report(false).to_csv_string().unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "tau,d_star,phi1,phi2,p_tr,f_snr,p_out,throughput"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn simulated_header_appends_columns() {
        let text = report(true).to_csv_string().unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "tau,d_star,phi1,phi2,p_tr,f_snr,p_out,throughput,p_tr_mc,p_out_mc,thr_mc,ci99_ptr,ci99_pout"
        );
    }

    #[test]
    fn csv_round_trip_is_exact() {
        for with_sim in [false, true] {
            let rep = report(with_sim);
            let text = rep.to_csv_string().unwrap();
            let back = read_csv(text.as_bytes()).unwrap();
            assert_eq!(back, rep.csv_rows());
        }
    }

    #[test]
    fn json_round_trip() {
        let rep = report(true);
        let text = rep.to_json_string().unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["config", "rows", "validation"]);
        let back = RunReport::from_json_str(&text).unwrap();
        assert_eq!(back.rows, rep.rows);
        assert_eq!(back.config, rep.config);
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
