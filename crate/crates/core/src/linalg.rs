//! Symmetric tridiagonal kernels: products, Thomas solves, Sturm-sequence
//! bisection and inverse iteration.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        debug_assert!(off.len() + 1 == diag.len() || diag.is_empty());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// Thomas algorithm. Only stable for diagonally dominant or SPD matrices,
    /// which is all the discrete Laplacians here produce.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut x = rhs.to_vec();
        let mut pivot = self.diag[0];
        if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
            return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
        }
        x[0] /= pivot;
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / pivot;
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
                return Err(Error::Numerical(format!(
                    "zero pivot at row {i} in tridiagonal solve"
                )));
            }
            x[i] = (x[i] - self.off[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.len() {
            let b2 = if i > 0 {
                self.off[i - 1] * self.off[i - 1]
            } else {
                0.0
            };
            d = self.diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an accurately known eigenvalue, by inverse iteration.
    pub fn eigenvector(&self, mu: f64) -> Vec<f64> {
        let n = self.len();
        let lu = PivotedTridiagLu::factor(self, mu);
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i * 7919 % 101) as f64 / 101.0))
            .collect();
        normalize(&mut x);
        for _ in 0..4 {
            lu.solve_in_place(&mut x);
            normalize(&mut x);
        }
        x
    }

    /// The `k` lowest eigenpairs, eigenvectors orthonormal in ℓ².
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.len();
        if k > n {
            return Err(Error::Range(format!(
                "requested {k} eigenpairs of a {n}x{n} matrix"
            )));
        }
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
        for j in 0..k {
            let mu = self.eigenvalue(j);
            let mut v = self.eigenvector(mu);
            for (_, prev) in &out {
                let d = dot(prev, &v);
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= d * pi;
                }
            }
            normalize(&mut v);
            let mut r = vec![0.0; n];
            self.apply(&v, &mut r);
            let resid = r
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - mu * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = self.gershgorin().1.abs().max(1.0);
            if !resid.is_finite() || resid > 1e-6 * scale {
                return Err(Error::Numerical(format!(
                    "eigenpair {j} did not converge (residual {resid:.3e})"
                )));
            }
            out.push((mu, v));
        }
        Ok(out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 && n.is_finite() {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// LU with partial pivoting of `T - shift·I` (LAPACK `gttrf` layout).
struct PivotedTridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    ipiv: Vec<usize>,
}

impl PivotedTridiagLu {
    fn factor(t: &SymTridiag, shift: f64) -> Self {
        let n = t.len();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut ipiv: Vec<usize> = (0..n).collect();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                ipiv[i] = i + 1;
            }
        }
        let tiny = f64::EPSILON * t.gershgorin().1.abs().max(1.0);
        for di in d.iter_mut() {
            if di.abs() < tiny {
                *di = if *di < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            ipiv,
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            let ip = self.ipiv[i];
            let temp = b[2 * i + 1 - ip] - self.dl[i] * b[ip];
            b[i] = b[ip];
            b[i + 1] = temp;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn thomas_solves() {
        let t = laplace_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; 50];
        t.apply(&x, &mut b);
        let y = t.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn eigenpairs_match_closed_form() {
        let n = 40;
        let t = laplace_1d(n);
        let pairs = t.lowest_eigenpairs(5).unwrap();
        for (k, (mu, v)) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((mu - exact).abs() < 1e-13, "{mu} vs {exact}");
            let mut r = vec![0.0; n];
            t.apply(v, &mut r);
            let res: f64 = r
                .iter()
                .zip(v)
                .map(|(a, b)| (a - mu * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-12);
        }
        for i in 0..5 {
            for j in 0..i {
                assert!(dot(&pairs[i].1, &pairs[j].1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sturm_count_brackets() {
        let t = laplace_1d(10);
        assert_eq!(t.sturm_count(-1.0), 0);
        assert_eq!(t.sturm_count(5.0), 10);
    }
}
