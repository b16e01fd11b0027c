//! Table and CSV rendering.

use std::fmt::Write as _;

use pathfunc_core::Estimate;

use crate::config::OutputFormat;

pub const CSV_HEADER: &str = "h,mean,stderr,ci_lo,ci_hi,n,elapsed";

/// One estimate row plus optional extra columns (name, value).
pub struct Row<'a> {
    pub estimate: &'a Estimate,
    pub extra: Vec<(&'static str, Option<f64>)>,
}

fn elapsed_text(e: &Estimate, timing: bool, csv: bool) -> String {
    match (timing, csv) {
        (true, true) => format!("{:.3}", e.elapsed),
        (true, false) => format!("{:.2}s", e.elapsed),
        (false, _) => "0".into(),
    }
}

pub fn render(rows: &[Row<'_>], format: OutputFormat, timing: bool) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows, timing),
        OutputFormat::Table => render_table(rows, timing),
    }
}

fn render_csv(rows: &[Row<'_>], timing: bool) -> String {
    let mut s = String::from(CSV_HEADER);
    if let Some(first) = rows.first() {
        for (name, _) in &first.extra {
            s.push(',');
            s.push_str(name);
        }
    }
    s.push('\n');
    for r in rows {
        let e = r.estimate;
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            e.h,
            e.mean,
            e.stderr,
            e.ci95.0,
            e.ci95.1,
            e.n_paths,
            elapsed_text(e, timing, true)
        );
        for (_, v) in &r.extra {
            s.push(',');
            if let Some(v) = v {
                let _ = write!(s, "{v}");
            }
        }
        s.push('\n');
    }
    s
}

fn render_table(rows: &[Row<'_>], timing: bool) -> String {
    let mut s = format!(
        "{:>12} {:>12} {:>11} {:>12} {:>12} {:>9} {:>9}",
        "h", "mean", "stderr", "ci95_lo", "ci95_hi", "n", "elapsed"
    );
    if let Some(first) = rows.first() {
        for (name, _) in &first.extra {
            let _ = write!(s, " {name:>11}");
        }
    }
    s.push('\n');
    for r in rows {
        let e = r.estimate;
        let _ = write!(
            s,
            "{:>12.4e} {:>12.6} {:>11.3e} {:>12.6} {:>12.6} {:>9} {:>9}",
            e.h,
            e.mean,
            e.stderr,
            e.ci95.0,
            e.ci95.1,
            e.n_paths,
            elapsed_text(e, timing, false)
        );
        for (_, v) in &r.extra {
            match v {
                Some(v) => {
                    let _ = write!(s, " {v:>11.3e}");
                }
                None => {
                    let _ = write!(s, " {:>11}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est() -> Estimate {
        Estimate { mean: 0.25, stderr: 0.5, ci95: (-0.73, 1.23), n_paths: 10, h: 0.125, elapsed: 1.5 }
    }

    #[test]
    fn csv_layout() {
        let e = est();
        let rows = [Row { estimate: &e, extra: vec![] }];
        assert_eq!(render(&rows, OutputFormat::Csv, false), "h,mean,stderr,ci_lo,ci_hi,n,elapsed\n0.125,0.25,0.5,-0.73,1.23,10,0\n");
        assert!(render(&rows, OutputFormat::Csv, true).ends_with(",10,1.500\n"));
    }

    #[test]
    fn extra_columns() {
        let e = est();
        let rows = [Row { estimate: &e, extra: vec![("error", Some(0.5)), ("other", None)] }];
        let csv = render(&rows, OutputFormat::Csv, false);
        assert!(csv.starts_with("h,mean,stderr,ci_lo,ci_hi,n,elapsed,error,other\n"));
        assert!(csv.ends_with(",0,0.5,\n"));
        let table = render(&rows, OutputFormat::Table, true);
        assert!(table.contains("error") && table.contains('-'));
    }
}
