//! CSV export of solver traces.

use std::fmt::Write as _;

use stoprox_core::solvers::Trace;

pub const TRACE_HEADER: &str = "n,lambda,m,step_change,residual_to_final,snr,wall_ms";

fn cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One line per iteration; missing values are empty fields.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut s = String::with_capacity(64 * (trace.rows.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &trace.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            r.lambda,
            cell(r.batch),
            r.step_change,
            cell(r.residual_to_final),
            cell(r.snr),
            cell(r.wall_ms)
        );
    }
    s
}

pub fn curve_to_csv(curve: &[(usize, f64)]) -> String {
    let mut s = String::from("n,residual\n");
    for (n, r) in curve {
        let _ = writeln!(s, "{n},{r}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use stoprox_core::solvers::TraceRow;

    #[test]
    fn empty_fields_for_missing_values() {
        let trace = Trace {
            rows: vec![TraceRow {
                n: 0,
                lambda: 1.0,
                batch: Some(2),
                step_change: 0.5,
                dual_step_change: None,
                residual_to_final: None,
                snr: Some(12.25),
                wall_ms: None,
            }],
            ..Trace::default()
        };
        assert_eq!(trace_to_csv(&trace), format!("{TRACE_HEADER}\n0,1,2,0.5,,12.25,\n"));
    }
}
