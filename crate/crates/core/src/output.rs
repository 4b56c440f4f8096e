//! CSV renderings of trajectories and policies. LF line endings, numbers in
//! [`format_number`] form, node numbers 1-based in headers.

use std::fmt::Write;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::hjb::{Policy, ValueTrajectory};
use crate::problem_file::format_number;

/// `t,V_1,…,V_N`, one row per grid point.
pub fn values_csv(trajectory: &ValueTrajectory) -> String {
    let n = trajectory.values.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        write!(out, ",V_{i}").unwrap();
    }
    out.push('\n');
    for (t, row) in trajectory.grid.iter().zip(&trajectory.values) {
        push_row(&mut out, *t, row);
    }
    out
}

/// `t,lambda_i_j,…` with one column per edge in stored order. A stationary
/// policy is written as a single row at `t = 0`.
pub fn policy_csv(model: &CostModel, policy: &Policy) -> Result<String> {
    let graph = model.graph();
    let mut out = String::from("t");
    for (i, j) in graph.edges() {
        write!(out, ",lambda_{}_{}", i + 1, j + 1).unwrap();
    }
    out.push('\n');
    let check = |table: &[f64]| {
        if table.len() == graph.n_edges() {
            Ok(())
        } else {
            Err(Error::PolicyGridMismatch(format!(
                "intensity table has {} entries for {} edges",
                table.len(),
                graph.n_edges()
            )))
        }
    };
    match policy {
        Policy::Stationary(table) => {
            check(table)?;
            push_row(&mut out, 0.0, table);
        }
        Policy::TimeVarying { grid, tables } => {
            for (t, table) in grid.iter().zip(tables) {
                check(table)?;
                push_row(&mut out, *t, table);
            }
        }
    }
    Ok(out)
}

/// Two-column CSV with the given header.
pub fn pairs_csv(header: (&str, &str), rows: &[(f64, f64)]) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        writeln!(out, "{},{}", format_number(*a), format_number(*b)).unwrap();
    }
    out
}

fn push_row(out: &mut String, t: f64, row: &[f64]) {
    out.push_str(&format_number(t));
    for v in row {
        out.push(',');
        out.push_str(&format_number(*v));
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::EdgeCost;

    #[test]
    fn policy_headers_follow_edges() {
        let c = EdgeCost::entropic(1.0, 0.0).unwrap();
        let m = CostModel::from_edges(3, &[(2, 0, c), (0, 1, c), (1, 2, c), (0, 2, c)]).unwrap();
        let p = Policy::stationary(&m, vec![1.0, 0.5, 2.0, 0.25]).unwrap();
        let csv = policy_csv(&m, &p).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,lambda_1_2,lambda_1_3,lambda_2_3,lambda_3_1"
        );
        assert_eq!(lines.next().unwrap(), "0,1,0.5,2,0.25");
    }
}
