//! CSV rendering of simulation and certification reports.

use super::certify::CertifyReport;
use super::sim::SimReport;

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Columns `check, mean, stderr, reference, ratio, verdict`. The first row carries the trial
/// count and seed; each comparison follows with its threshold `bound * reference` in the
/// reference column and `mean / threshold` as the ratio.
pub fn sim_csv(report: &SimReport) -> String {
    let head = vec![
        format!("trials={} seed={}", report.trials, report.seed),
        num(report.mean),
        num(report.stderr),
        String::new(),
        String::new(),
        String::new(),
    ];
    let rows = report.comparisons.iter().map(|c| {
        let threshold = c.bound * c.reference;
        let ratio = if threshold != 0.0 { report.mean / threshold } else { 0.0 };
        vec![
            c.label.clone(),
            num(report.mean),
            num(report.stderr),
            num(threshold),
            num(ratio),
            c.verdict.as_str().to_string(),
        ]
    });
    to_csv(&["check", "mean", "stderr", "reference", "ratio", "verdict"], std::iter::once(head).chain(rows))
}

/// Columns `check, verdict, value, reference, detail`.
pub fn certify_csv(report: &CertifyReport) -> String {
    let rows = report.checks.iter().map(|c| {
        vec![
            c.check.clone(),
            c.verdict.as_str().to_string(),
            c.value.map(num).unwrap_or_default(),
            c.reference.map(num).unwrap_or_default(),
            c.detail.clone(),
        ]
    });
    to_csv(&["check", "verdict", "value", "reference", "detail"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim_csv_layout() {
        let mut r = SimReport::from_samples(&[1.0, 1.0], 7);
        r.compare("lp_opt/8", 0.125, 4.0);
        let csv = sim_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "check,mean,stderr,reference,ratio,verdict");
        assert_eq!(lines[1], "trials=2 seed=7,1,0,,,");
        assert_eq!(lines[2], "lp_opt/8,1,0,0.5,2,pass");
    }
}
