//! Report emission: one JSON document, per-record CSV traces, SVG plots.
//!
//! Everything except the `generated_at` key is a pure function of the
//! records, so two runs of the same config produce identical files once that
//! line is dropped. Wall times go to a separate `timings.csv`.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;
use crate::record::{TracePoint, VerificationRecord};
use crate::verify::Suite;

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub suite: String,
    #[serde(flatten)]
    pub record: VerificationRecord,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub total: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub suites: Vec<SuiteSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Seconds since the Unix epoch; the only nondeterministic key.
    pub generated_at: u64,
    pub config_hash: String,
    pub seed: u64,
    pub summary: Summary,
    pub records: Vec<Entry>,
}

impl Report {
    /// Collect suite results, stamping every record with the config hash.
    pub fn new(config_hash: &str, seed: u64, results: Vec<(Suite, Vec<VerificationRecord>)>) -> Self {
        let mut summary = Summary::default();
        let mut records = Vec::new();
        for (suite, recs) in results {
            let failed = recs.iter().filter(|r| !r.passed()).count();
            summary.suites.push(SuiteSummary { suite: suite.name().into(), total: recs.len(), failed });
            summary.total += recs.len();
            summary.failed += failed;
            for mut r in recs {
                r.config_hash = config_hash.to_string();
                records.push(Entry { suite: suite.name().into(), record: r });
            }
        }
        summary.passed = summary.total - summary.failed;
        let generated_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Report { generated_at, config_hash: config_hash.into(), seed, summary, records }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Write `report.json`, `timings.csv`, `traces/*.csv` and, with `plot`,
    /// `plots/*.svg` under `dir`.
    pub fn write(&self, dir: &Path, plot: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;

        let mut timings = String::from("index,suite,name,seconds\n");
        for (k, e) in self.records.iter().enumerate() {
            let _ = writeln!(timings, "{k},{},{},{:.6}", e.suite, e.record.name, e.record.runtime.as_secs_f64());
        }
        std::fs::write(dir.join("timings.csv"), timings)?;

        for (k, e) in self.records.iter().enumerate().filter(|(_, e)| !e.record.trace.is_empty()) {
            let stem = file_stem(k, &e.record.name);
            let traces = dir.join("traces");
            std::fs::create_dir_all(&traces)?;
            std::fs::write(traces.join(format!("{stem}.csv")), trace_csv(&e.record.trace))?;
            if plot {
                let plots = dir.join("plots");
                std::fs::create_dir_all(&plots)?;
                std::fs::write(plots.join(format!("{stem}.svg")), trace_svg(&e.record))?;
            }
        }
        Ok(())
    }
}

/// The report text with the `generated_at` line removed.
pub fn strip_timestamp(json: &str) -> String {
    json.lines().filter(|l| !l.trim_start().starts_with("\"generated_at\"")).collect::<Vec<_>>().join("\n")
}

fn file_stem(index: usize, name: &str) -> String {
    let clean: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{index:04}-{clean}")
}

pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut s = String::from("t,lhs,rhs\n");
    for p in trace {
        let _ = writeln!(s, "{},{},{}", p.t, p.lhs, p.rhs);
    }
    s
}

/// Standalone SVG of LHS and RHS against `t`.
pub fn trace_svg(r: &VerificationRecord) -> String {
    let (w, h, pad) = (640.0, 400.0, 56.0);
    let tr = &r.trace;
    let t0 = tr.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
    let t1 = tr.iter().map(|p| p.t).fold(f64::NEG_INFINITY, f64::max);
    let vals = tr.iter().flat_map(|p| [p.lhs, p.rhs]).filter(|v| v.is_finite());
    let (mut y0, mut y1) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let px = |t: f64| pad + (t - t0) / span_t * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let line = |f: &dyn Fn(&TracePoint) -> f64| {
        tr.iter().map(|p| format!("{:.2},{:.2}", px(p.t), py(f(p)))).collect::<Vec<_>>().join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&r.name));
    let _ = writeln!(
        s,
        r#"<path d="M{pad},{pad} L{pad},{b} L{r},{b}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    for (v, y) in [(y0, h - pad), (y1, pad)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, pad - 4.0, y + 4.0, fmt_num(v));
    }
    for (v, x) in [(t0, pad), (t1, w - pad)] {
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, h - pad + 16.0, fmt_num(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, line(&|p| p.lhs));
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="2" stroke-dasharray="6 4"/>"##,
        line(&|p| p.rhs)
    );
    let lx = w - pad - 90.0;
    let _ = writeln!(s, r##"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="#1f77b4" stroke-width="2"/>"##, pad + 8.0, lx + 24.0, pad + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">LHS</text>"#, lx + 30.0, pad + 12.0);
    let _ = writeln!(
        s,
        r##"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="#d62728" stroke-width="2" stroke-dasharray="6 4"/>"##,
        pad + 26.0,
        lx + 24.0,
        pad + 26.0
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">RHS</text>"#, lx + 30.0, pad + 30.0);
    s.push_str("</svg>\n");
    s
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<(Suite, Vec<VerificationRecord>)> {
        let traced = VerificationRecord::new("traced", "x", 1.0, 2.0, 0.0, "none").with_trace(vec![
            TracePoint { t: 0.0, lhs: 1.0, rhs: 1.0 },
            TracePoint { t: 0.5, lhs: 1.0, rhs: 2.0 },
        ]);
        vec![
            (Suite::Window, vec![traced, VerificationRecord::new("bad", "x", 2.0, 1.0, 0.1, "0.1")]),
            (Suite::Seminorms, vec![]),
        ]
    }

    #[test]
    fn summary_counts_failures() {
        let r = Report::new("abc", 1, sample());
        assert_eq!((r.summary.total, r.summary.passed, r.summary.failed), (2, 1, 1));
        assert!(!r.all_passed());
        assert!(r.records.iter().all(|e| e.record.config_hash == "abc"));
        assert_eq!(r.summary.suites[1].total, 0);
    }

    #[test]
    fn timestamp_is_one_line() {
        let mut a = Report::new("abc", 1, sample());
        let mut b = a.clone();
        a.generated_at = 1;
        b.generated_at = 2;
        assert_ne!(a.to_json(), b.to_json());
        assert_eq!(strip_timestamp(&a.to_json()), strip_timestamp(&b.to_json()));
        let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(v["records"][0]["suite"], "window");
        assert_eq!(v["records"][0]["verdict"], "pass");
    }

    #[test]
    fn svg_and_csv_render() {
        let r = &sample()[0].1[0];
        assert_eq!(trace_csv(&r.trace), "t,lhs,rhs\n0,1,1\n0.5,1,2\n");
        let svg = trace_svg(r);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
