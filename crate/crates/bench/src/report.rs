//! CSV and Markdown rendering of benchmark rows.
//!
//! Both writers go through the same formatters, so a number printed in one
//! is printed identically in the other.

use std::io::Write;

use anyhow::Result;

use crate::runner::Row;

pub const CSV_COLUMNS: [&str; 11] =
    ["m", "n", "s", "t_lambda_max", "solver", "seed", "iter", "time_s", "fval", "residual", "termination"];

/// `d.ddddde±XX`, the layout of the published tables.
pub fn format_fval(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn format_time(v: f64) -> String {
    format!("{v:.3}")
}

pub fn format_residual(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            format_time(r.t_lambda_max),
            r.solver.clone(),
            r.seed.to_string(),
            r.iter.to_string(),
            format_time(r.time_s),
            format_fval(r.fval),
            format_residual(r.residual),
            r.termination.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and sample standard deviation (`0` for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rows grouped by `(family, m, n, s)` in their existing order.
fn groups(rows: &[Row]) -> Vec<&[Row]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        let key = |r: &Row| (r.family, r.m, r.n, r.s);
        if i == rows.len() || key(&rows[i]) != key(&rows[start]) {
            out.push(&rows[start..i]);
            start = i;
        }
    }
    out
}

fn solver_order(rows: &[Row]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.solver) {
            out.push(r.solver.clone());
        }
    }
    out
}

/// Means per instance size in the published column layout (size, `t_λmax`,
/// then iter, CPU and fval blocks with one column per solver), followed by
/// standard-deviation columns and the per-seed rows.
pub fn markdown(rows: &[Row]) -> String {
    let solvers = solver_order(rows);
    let mut md = String::new();
    let per_solver = |prefix: &str| solvers.iter().map(|s| format!("{prefix} {s}")).collect::<Vec<_>>();
    let mut header = vec!["m".to_string(), "n".into(), "s".into(), "t_lambda_max".into()];
    header.extend(per_solver("iter"));
    header.extend(per_solver("CPU"));
    header.extend(per_solver("fval"));
    header.extend(per_solver("iter sd"));
    header.extend(per_solver("CPU sd"));
    header.extend(per_solver("fval sd"));
    push_row(&mut md, &header);
    push_row(&mut md, &vec!["---".to_string(); header.len()]);

    for group in groups(rows) {
        let first = &group[0];
        let stats = |solver: &str, field: fn(&Row) -> f64| {
            let values: Vec<f64> = group.iter().filter(|r| r.solver == solver).map(field).collect();
            mean_std(&values)
        };
        let mut seeds: Vec<u64> = group.iter().map(|r| r.seed).collect();
        seeds.dedup();
        let t_lambda: Vec<f64> = seeds
            .iter()
            .map(|s| group.iter().find(|r| r.seed == *s).unwrap().t_lambda_max)
            .collect();
        let mut cells = vec![first.m.to_string(), first.n.to_string(), first.s.to_string(), format_time(mean_std(&t_lambda).0)];
        let fields: [fn(&Row) -> f64; 3] = [|r| r.iter as f64, |r| r.time_s, |r| r.fval];
        for (k, field) in fields.iter().enumerate() {
            for s in &solvers {
                let (mean, _) = stats(s, *field);
                cells.push(match k {
                    0 => format!("{mean:.1}"),
                    1 => format_time(mean),
                    _ => format_fval(mean),
                });
            }
        }
        for (k, field) in fields.iter().enumerate() {
            for s in &solvers {
                let (_, sd) = stats(s, *field);
                cells.push(match k {
                    0 => format!("{sd:.1}"),
                    1 => format_time(sd),
                    _ => format_fval(sd),
                });
            }
        }
        push_row(&mut md, &cells);
    }

    md.push_str("\nPer-seed results:\n\n");
    push_row(&mut md, &CSV_COLUMNS.map(String::from));
    push_row(&mut md, &vec!["---".to_string(); CSV_COLUMNS.len()]);
    for r in rows {
        push_row(
            &mut md,
            &[
                r.m.to_string(),
                r.n.to_string(),
                r.s.to_string(),
                format_time(r.t_lambda_max),
                r.solver.clone(),
                r.seed.to_string(),
                r.iter.to_string(),
                format_time(r.time_s),
                format_fval(r.fval),
                format_residual(r.residual),
                r.termination.to_string(),
            ],
        );
    }
    md
}

fn push_row(md: &mut String, cells: &[String]) {
    md.push('|');
    for c in cells {
        md.push(' ');
        md.push_str(c);
        md.push_str(" |");
    }
    md.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use fbe_core::{Family, Termination};

    fn row(solver: &str, seed: u64, iter: usize, fval: f64) -> Row {
        Row {
            family: Family::GaussianUnitColumns,
            m: 720,
            n: 2560,
            s: 160,
            t_lambda_max: 0.25,
            solver: solver.into(),
            seed,
            iter,
            time_s: 1.5,
            fval,
            residual: 1e-7,
            termination: Termination::Converged,
            error: None,
        }
    }

    #[test]
    fn fval_matches_published_layout() {
        assert_eq!(format_fval(5.51199e-2), "5.51199e-02");
        assert_eq!(format_fval(1.16034e-1), "1.16034e-01");
        assert_eq!(format_fval(12.5), "1.25000e+01");
        assert_eq!(format_fval(0.0), "0.00000e+00");
        assert_eq!(format_fval(-3.2e-105), "-3.20000e-105");
        assert_eq!(format_fval(f64::NAN), "NaN");
    }

    #[test]
    fn mean_std_of_small_samples() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_has_fixed_columns() {
        let mut buf = Vec::new();
        write_csv(&[row("fbe_lbfgs", 1, 10, 0.05)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "m,n,s,t_lambda_max,solver,seed,iter,time_s,fval,residual,termination");
        assert_eq!(lines.next().unwrap(), "720,2560,160,0.250,fbe_lbfgs,1,10,1.500,5.00000e-02,1.000e-7,converged");
    }

    #[test]
    fn markdown_has_table_layout_and_same_numbers() {
        let rows = vec![
            row("fbe_lbfgs", 1, 10, 0.05),
            row("npg", 1, 30, 0.0501),
            row("fbe_lbfgs", 2, 20, 0.06),
            row("npg", 2, 50, 0.0601),
        ];
        let md = markdown(&rows);
        let header = md.lines().next().unwrap();
        assert!(header.starts_with("| m | n | s | t_lambda_max | iter fbe_lbfgs | iter npg | CPU fbe_lbfgs"));
        let mean_row = md.lines().nth(2).unwrap();
        assert!(mean_row.starts_with("| 720 | 2560 | 160 | 0.250 | 15.0 | 40.0 | 1.500 | 1.500 | 5.50000e-02 | 5.51000e-02 |"));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        for line in String::from_utf8(buf).unwrap().lines().skip(1) {
            let md_line = format!("| {} |", line.split(',').collect::<Vec<_>>().join(" | "));
            assert!(md.contains(&md_line), "{md_line}");
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        let md = markdown(&[]);
        assert!(md.starts_with("| m | n | s | t_lambda_max |"));
        assert_eq!(md.lines().filter(|l| l.starts_with("| 7")).count(), 0);
    }
}
