//! Fixed-format MPS export.
//!
//! MPS minimizes by convention, so the objective row `COST` carries the
//! negated coefficients of the maximization problem.

use std::fmt::Write as _;

use super::{LinearProgram, VarBound};

/// Shortest decimal rendering that fits a 12-character MPS field.
fn num12(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (0..=8).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn name8(s: &str) -> &str {
    &s[..s.len().min(8)]
}

fn entry(out: &mut String, col: &str, row: &str, v: f64) {
    let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", name8(col), name8(row), num12(v));
}

/// Renders `lp` in fixed MPS with rows `R1..Rm` and the program's column names.
pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* maximization problem; COST holds the negated objective");
    let _ = writeln!(out, "NAME          {}", name8(name));
    out.push_str("ROWS\n N  COST\n");
    for r in 0..lp.num_rows() {
        let _ = writeln!(out, " L  R{}", r + 1);
    }
    out.push_str("COLUMNS\n");
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            if v != 0.0 {
                by_col[j].push((r, v));
            }
        }
    }
    for (j, entries) in by_col.iter_mut().enumerate() {
        entries.sort_by_key(|e| e.0);
        let col = &lp.names[j];
        if lp.objective[j] != 0.0 {
            entry(&mut out, col, "COST", -lp.objective[j]);
        }
        for &(r, v) in entries.iter() {
            entry(&mut out, col, &format!("R{}", r + 1), v);
        }
        if lp.objective[j] == 0.0 && entries.is_empty() {
            entry(&mut out, col, "COST", 0.0);
        }
    }
    out.push_str("RHS\n");
    for (r, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            entry(&mut out, "RHS", &format!("R{}", r + 1), row.rhs);
        }
    }
    out.push_str("BOUNDS\n");
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::Free {
            let _ = writeln!(out, " FR BND       {}", name8(&lp.names[j]));
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_fields_line_up() {
        let mut lp = LinearProgram::new(vec![0.0, 1.0], vec![VarBound::Free, VarBound::NonNegative])
            .with_names(vec!["G2".into(), "EPS".into()]);
        lp.add_row(vec![(0, -0.2), (1, 1.0)], -6.0);
        let text = write_mps(&lp, "demo");
        let expected = "\
* maximization problem; COST holds the negated objective
NAME          demo
ROWS
 N  COST
 L  R1
COLUMNS
    G2        R1                -0.2
    EPS       COST                -1
    EPS       R1                   1
RHS
    RHS       R1                  -6
BOUNDS
 FR BND       G2
ENDATA
";
        assert_eq!(text, expected);
    }

    #[test]
    fn long_numbers_fit_the_field() {
        for v in [1.0 / 3.0, -2.0 / 3.0 * 1e-17, 123456789012345.0, -0.1234567891234] {
            let s = num12(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs());
        }
    }
}
