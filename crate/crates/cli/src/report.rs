//! Tabular reports in the three-decimal style of published depth tables.

use std::fmt::{self, Write as _};

use radar_depth::metrics::EvalReport;

#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicRow {
    pub modality: String,
    pub threshold: String,
    pub delta1: f64,
    pub rmse: f64,
    /// Mean valid pixels per frame.
    pub points: f64,
    pub retained_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub method: String,
    pub delta1: f64,
    pub rmse: f64,
    pub abs_rel: f64,
}

impl MethodRow {
    pub fn from_report(method: &str, r: &EvalReport) -> Self {
        Self {
            method: method.to_string(),
            delta1: r.delta1,
            rmse: r.rmse,
            abs_rel: r.abs_rel,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    pub intrinsic: Vec<IntrinsicRow>,
    pub methods: Vec<MethodRow>,
}

pub const INTRINSIC_HEADER: &str = "modality,threshold,delta1,rmse,points,retained_pct";
pub const METHOD_HEADER: &str = "method,delta1,rmse,abs_rel";

impl ReportTable {
    pub fn intrinsic_csv(&self) -> String {
        let mut s = format!("{INTRINSIC_HEADER}\n");
        for r in &self.intrinsic {
            let _ = writeln!(
                s,
                "{},{},{:.3},{:.3},{:.1},{:.1}",
                r.modality, r.threshold, r.delta1, r.rmse, r.points, r.retained_pct
            );
        }
        s
    }

    pub fn method_csv(&self) -> String {
        let mut s = format!("{METHOD_HEADER}\n");
        for r in &self.methods {
            let _ = writeln!(s, "{},{:.3},{:.3},{:.3}", r.method, r.delta1, r.rmse, r.abs_rel);
        }
        s
    }
}

impl fmt::Display for ReportTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.intrinsic.is_empty() {
            writeln!(f, "{:<10} {:<10} {:>7} {:>8} {:>18}", "modality", "threshold", "d1", "RMSE", "#points (%)")?;
            for r in &self.intrinsic {
                let pts = format!("{:.1} ({:.1}%)", r.points, r.retained_pct);
                writeln!(
                    f,
                    "{:<10} {:<10} {:>7.3} {:>8.3} {:>18}",
                    r.modality, r.threshold, r.delta1, r.rmse, pts
                )?;
            }
        }
        if !self.methods.is_empty() {
            if !self.intrinsic.is_empty() {
                writeln!(f)?;
            }
            let width = self.methods.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
            writeln!(f, "{:<width$}  {:>5}  {:>5}  {:>6}", "method", "d1", "RMSE", "AbsRel")?;
            for r in &self.methods {
                writeln!(f, "{:<width$}  {:.3}  {:.3}  {:.3}", r.method, r.delta1, r.rmse, r.abs_rel)?;
            }
        }
        Ok(())
    }
}
