#![allow(dead_code)]

use rand::Rng;
use softpd::lp::{LinearProgram, VarBound};

/// Dense rows `a·v ≤ b` for every constraint and sign restriction of `lp`.
fn dense_rows(lp: &LinearProgram) -> Vec<(Vec<f64>, f64)> {
    let nv = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = lp
        .rows
        .iter()
        .map(|r| {
            let mut a = vec![0.0; nv];
            for &(j, v) in &r.coeffs {
                a[j] += v;
            }
            (a, r.rhs)
        })
        .collect();
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::NonNegative {
            let mut a = vec![0.0; nv];
            a[j] = -1.0;
            rows.push((a, 0.0));
        }
    }
    rows
}

/// Solves a square system with partial pivoting; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for q in c..n {
                a[r][q] -= f * a[c][q];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|q| a[c][q] * x[q]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

fn combinations(m: usize, r: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for i in start..m {
            if m - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, r, cur, f);
            cur.pop();
        }
    }
    rec(0, m, r, &mut Vec::with_capacity(r), f);
}

/// Optimal objective of a bounded LP by enumerating all vertices; `None` if
/// no feasible vertex exists.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let rows = dense_rows(lp);
    let nv = lp.num_vars();
    let mut best: Option<(f64, Vec<f64>)> = None;
    combinations(rows.len(), nv, &mut |idx| {
        let a = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b = idx.iter().map(|&i| rows[i].1).collect();
        let Some(x) = solve_square(a, b) else { return };
        let feasible = rows.iter().all(|(a, b)| {
            let act: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum();
            act <= b + 1e-7 * (1.0 + b.abs())
        });
        if feasible {
            let obj = lp.objective_value(&x);
            if best.as_ref().is_none_or(|(o, _)| obj > *o) {
                best = Some((obj, x));
            }
        }
    });
    best
}

/// Random LP with `nv` variables, `m` general rows and a box `|v_j| ≤ bound`.
pub fn random_bounded_lp<R: Rng>(rng: &mut R, nv: usize, m: usize, bound: f64) -> LinearProgram {
    let objective = (0..nv).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let bounds = (0..nv).map(|_| if rng.gen_bool(0.5) { VarBound::Free } else { VarBound::NonNegative }).collect();
    let mut lp = LinearProgram::new(objective, bounds);
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..nv {
            if rng.gen_bool(0.8) {
                coeffs.push((j, if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-5.0..5.0) }));
            }
        }
        lp.add_row(coeffs, rng.gen_range(-4.0..8.0));
    }
    for j in 0..nv {
        lp.add_row(vec![(j, 1.0)], bound);
        lp.add_row(vec![(j, -1.0)], bound);
    }
    lp
}
