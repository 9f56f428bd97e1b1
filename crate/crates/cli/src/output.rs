//! Metrics CSV, verification of stored metrics, and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dabound_core::train::MetricsRow;

use crate::error::{CliError, CliResult};

pub const METRICS_HEADER: [&str; 17] = [
    "iter", "obj_I", "obj_J", "recon_s", "recon_t", "clf_loss", "acc_s", "acc_t", "risk_s", "risk_t",
    "gap", "ws_term", "dp_push", "dp_src", "min_dp", "bound_value", "holds",
];

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn row_values(r: &MetricsRow) -> [f64; 15] {
    let b = &r.report;
    [
        r.objective_i,
        r.objective_j,
        r.recon_source,
        r.recon_target,
        r.classifier_loss,
        r.source_accuracy,
        r.target_accuracy,
        b.risk_source,
        b.risk_target,
        b.gap,
        b.ws_term,
        b.delta_p_pushforward,
        b.delta_p_source,
        b.min_delta,
        b.bound_value,
    ]
}

pub fn metrics_csv(rows: &[MetricsRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(METRICS_HEADER).map_err(io)?;
    for r in rows {
        let mut rec = vec![r.iteration.to_string()];
        rec.extend(row_values(r).iter().map(|&v| fmt_real(v)));
        rec.push(u8::from(r.report.holds).to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// One parsed metrics row: iteration plus the 15 real columns and the stored flag.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredRow {
    pub iteration: u64,
    pub values: Vec<f64>,
    pub holds: bool,
}

impl StoredRow {
    fn col(&self, name: &str) -> f64 {
        let j = METRICS_HEADER.iter().position(|h| *h == name).expect("known column");
        self.values[j - 1]
    }

    pub fn gap(&self) -> f64 {
        self.col("gap")
    }

    pub fn bound_value(&self) -> f64 {
        self.col("bound_value")
    }
}

pub fn read_metrics(text: &str) -> CliResult<Vec<StoredRow>> {
    let bad = |m: String| CliError::Config(format!("malformed metrics file: {m}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(METRICS_HEADER.iter().copied()) {
        return Err(bad("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let iteration = rec[0].parse().map_err(|_| bad(format!("row {i}: bad iteration `{}`", &rec[0])))?;
        let values = (1..16)
            .map(|j| rec[j].parse::<f64>().map_err(|_| bad(format!("row {i}: bad number `{}`", &rec[j]))))
            .collect::<CliResult<Vec<_>>>()?;
        let holds = match &rec[16] {
            "0" => false,
            "1" => true,
            s => return Err(bad(format!("row {i}: bad holds flag `{s}`"))),
        };
        rows.push(StoredRow { iteration, values, holds });
    }
    Ok(rows)
}

/// Indices of rows whose gap exceeds the bound plus `slack`. NaN rows count as violations.
pub fn violations(rows: &[StoredRow], slack: f64) -> Vec<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| !(r.gap() <= r.bound_value() + slack))
        .map(|(i, _)| i)
        .collect()
}

pub struct Series<'a> {
    pub name: &'a str,
    pub values: Vec<f64>,
}

const COLORS: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];

/// Line chart with one polyline per series and the plotted data in a leading comment.
pub fn svg_plot(title: &str, xs: &[f64], series: &[Series]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let finite = |v: &f64| v.is_finite();
    let (mut lo, mut hi) = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(finite)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let x0 = xs.first().copied().unwrap_or(0.0);
    let x1 = xs.last().copied().unwrap_or(1.0).max(x0 + 1.0);
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - lo) / (hi - lo) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">");
    let _ = write!(s, "<!-- data\niter");
    for se in series {
        let _ = write!(s, ",{}", se.name);
    }
    for (i, x) in xs.iter().enumerate() {
        let _ = write!(s, "\n{x}");
        for se in series {
            let _ = write!(s, ",{}", se.values.get(i).copied().unwrap_or(f64::NAN));
        }
    }
    let _ = writeln!(s, "\n-->");
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{title}</text>", w / 2.0);
    let _ = writeln!(
        s,
        "<path d=\"M{pad},{} H{} M{pad},{} V{}\" stroke=\"black\" fill=\"none\"/>",
        h - pad,
        w - pad,
        h - pad,
        pad
    );
    let _ = writeln!(s, "<text x=\"{pad}\" y=\"{}\" font-size=\"10\">{x0}</text>", h - pad + 14.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{x1}</text>", w - pad, h - pad + 14.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{lo:.3}</text>", pad - 4.0, h - pad);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{hi:.3}</text>", pad - 4.0, pad + 4.0);
    for (k, se) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(&se.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&x, &v)| format!("{:.2},{:.2}", px(x), py(v)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline class=\"series\" data-name=\"{}\" fill=\"none\" stroke=\"{color}\" points=\"{}\"/>",
            se.name,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            w - pad - 110.0,
            pad + 14.0 * k as f64,
            se.name
        );
    }
    s.push_str("</svg>\n");
    s
}

/// The three standard panels: accuracies, bound terms, and losses.
pub fn metric_plots(rows: &[MetricsRow]) -> Vec<(&'static str, String)> {
    let xs: Vec<f64> = rows.iter().map(|r| r.iteration as f64).collect();
    let col = |f: &dyn Fn(&MetricsRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let acc = [
        Series { name: "acc_s", values: col(&|r| r.source_accuracy) },
        Series { name: "acc_t", values: col(&|r| r.target_accuracy) },
    ];
    let bound = [
        Series { name: "gap", values: col(&|r| r.report.gap) },
        Series { name: "bound_value", values: col(&|r| r.report.bound_value) },
        Series { name: "ws_term", values: col(&|r| r.report.ws_term) },
        Series { name: "min_dp", values: col(&|r| r.report.min_delta) },
    ];
    let losses = [
        Series { name: "obj_I", values: col(&|r| r.objective_i) },
        Series { name: "obj_J", values: col(&|r| r.objective_j) },
        Series { name: "recon_s", values: col(&|r| r.recon_source) },
        Series { name: "recon_t", values: col(&|r| r.recon_target) },
        Series { name: "clf_loss", values: col(&|r| r.classifier_loss) },
    ];
    vec![
        ("accuracy.svg", svg_plot("accuracy", &xs, &acc)),
        ("bound.svg", svg_plot("transfer bound", &xs, &bound)),
        ("losses.svg", svg_plot("losses", &xs, &losses)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_one_polyline_per_series() {
        let xs = [0.0, 1.0, 2.0];
        let s = svg_plot(
            "t",
            &xs,
            &[
                Series { name: "a", values: vec![0.0, 1.0, 0.5] },
                Series { name: "b", values: vec![1.0, f64::NAN, 0.0] },
            ],
        );
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("<!-- data\niter,a,b\n0,0,1\n1,1,NaN"));
    }

    #[test]
    fn malformed_metrics_rejected() {
        assert!(read_metrics("iter,gap\n0,1\n").is_err());
        let mut text = METRICS_HEADER.join(",");
        text.push_str("\n0,");
        text.push_str(&vec!["1.0"; 15].join(","));
        text.push_str(",1\n");
        let rows = read_metrics(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(violations(&rows, 0.0).is_empty());
        let broken = text.replace(",1\n", ",x\n");
        assert!(read_metrics(&broken).is_err());
    }

    #[test]
    fn nan_row_is_a_violation() {
        let r = StoredRow { iteration: 0, values: vec![f64::NAN; 15], holds: false };
        assert_eq!(violations(&[r], 0.05), vec![0]);
    }
}
