//! SDPA sparse-format export, for handing a problem to an external solver.
//!
//! The problem `min c^T x, h - G x ∈ K, A x = b` is written as
//! `min c^T x, Σ x_i F_i - F_0 ⪰ 0` with `F_i = -G_i`, `F_0 = -h`. The orthant
//! and each equality (as two inequalities) form one diagonal block.

use std::fmt::Write as _;
use std::path::Path;

use super::{smat, Cone, ConicProblem};
use crate::error::Result;
use crate::io::{fmt_f64, write_atomic};

pub fn sdpa_string(p: &ConicProblem) -> String {
    let n = p.num_vars();
    let ranges = p.cone_ranges();
    let lp_rows: usize = p.cones.iter().map(|k| if let Cone::Nonneg(m) = k { *m } else { 0 }).sum::<usize>() + 2 * p.a.nrows();
    let mut sizes: Vec<i64> = Vec::new();
    if lp_rows > 0 {
        sizes.push(-(lp_rows as i64));
    }
    for k in &p.cones {
        if let Cone::Psd(q) = k {
            sizes.push(*q as i64);
        }
    }
    let mut out = String::new();
    writeln!(out, "{n}").unwrap();
    writeln!(out, "{}", sizes.len()).unwrap();
    writeln!(out, "{}", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "{}", p.c.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")).unwrap();

    // matrix 0 is F_0 = -h, matrix j + 1 is F_j = -G_j
    let entry = |mat: usize, col: &dyn Fn(usize) -> f64, out: &mut String| {
        let mut block = 1;
        if lp_rows > 0 {
            let mut row = 1;
            for (k, r) in p.cones.iter().zip(&ranges) {
                if let Cone::Nonneg(_) = k {
                    for i in r.clone() {
                        let v = -col(i);
                        if v != 0.0 {
                            writeln!(out, "{mat} {block} {row} {row} {}", fmt_f64(v)).unwrap();
                        }
                        row += 1;
                    }
                }
            }
            for e in 0..p.a.nrows() {
                // A x - b ≥ 0 and b - A x ≥ 0
                let v = if mat == 0 { p.b[e] } else { p.a[(e, mat - 1)] };
                if v != 0.0 {
                    writeln!(out, "{mat} {block} {row} {row} {}", fmt_f64(v)).unwrap();
                    writeln!(out, "{mat} {block} {} {} {}", row + 1, row + 1, fmt_f64(-v)).unwrap();
                }
                row += 2;
            }
            block += 1;
        }
        for (k, r) in p.cones.iter().zip(&ranges) {
            if let Cone::Psd(q) = *k {
                let v: Vec<f64> = r.clone().map(|i| -col(i)).collect();
                let m = smat(&v, q);
                for i in 0..q {
                    for j in i..q {
                        if m[(i, j)] != 0.0 {
                            writeln!(out, "{mat} {block} {} {} {}", i + 1, j + 1, fmt_f64(m[(i, j)])).unwrap();
                        }
                    }
                }
                block += 1;
            }
        }
    };
    entry(0, &|i| p.h[i], &mut out);
    for j in 0..n {
        entry(j + 1, &|i| p.g[(i, j)], &mut out);
    }
    out
}

pub fn write_sdpa(p: &ConicProblem, path: &Path) -> Result<()> {
    write_atomic(path, sdpa_string(p).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ProblemBuilder;
    use crate::RMatrix;

    #[test]
    fn small_problem_layout() {
        let mut b = ProblemBuilder::new();
        let t = b.add_vars("t", 1).start;
        b.set_cost(t, 1.0);
        b.add_linear_ge(vec![(t, 1.0)], 0.0);
        b.add_lmi(
            RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]),
            vec![(t, RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]))],
        );
        let s = sdpa_string(&b.build());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "1");
        assert_eq!(lines[1], "2");
        assert_eq!(lines[2], "-1 2");
        // F_0 = -M0 in the PSD block, F_1 = M1 and the orthant entry.
        let entry = |prefix: &str| -> f64 {
            let line = lines.iter().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("no entry {prefix}"));
            line[prefix.len()..].trim().parse().unwrap()
        };
        assert!((entry("0 2 1 1 ") + 1.0).abs() < 1e-15);
        assert!((entry("0 2 1 2 ") + 1.0).abs() < 1e-15);
        assert!((entry("1 1 1 1 ") - 1.0).abs() < 1e-15);
        assert!((entry("1 2 2 2 ") - 1.0).abs() < 1e-15);
        assert!(!lines.iter().any(|l| l.starts_with("0 2 2 2 ")));
    }
}
