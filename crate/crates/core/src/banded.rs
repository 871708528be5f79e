//! Complex band matrices and an LU factorisation with partial pivoting.
//!
//! The factorisation follows the classic unblocked band scheme: row swaps at
//! step `k` touch columns `k..` only, so the stored multipliers are applied to
//! the right-hand side in the same interleaved order during the solve.

use num_complex::Complex64;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![Complex64::new(0.0, 0.0); n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            return None;
        }
        Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.slot(i, j)
            .map(|s| self.data[s])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band"));
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band"));
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(&self) -> Result<BandLu> {
        BandLu::new(self)
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    // upper bandwidth of U after fill-in
    kuf: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl BandLu {
    fn width(&self) -> usize {
        self.kl + self.kuf + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.kl - i)
    }

    pub fn new(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let kuf = a.ku + a.kl;
        let width = kl + kuf + 1;
        let mut lu = vec![Complex64::new(0.0, 0.0); n * width];
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + a.ku).min(n.saturating_sub(1));
            for j in lo..=hi {
                lu[i * width + (j + kl - i)] = a.get(i, j);
            }
        }
        let mut f = Self {
            n,
            kl,
            kuf,
            lu,
            perm: vec![0; n],
        };
        f.eliminate()?;
        Ok(f)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kuf).min(n - 1);
            let mut p = k;
            let mut best = self.lu[self.idx(k, k)].norm();
            for i in k + 1..=last_row {
                let v = self.lu[self.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(LabError::SingularOperator(k));
            }
            self.perm[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.lu.swap(a, b);
                }
            }
            let pivot = self.lu[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.lu[ik] / pivot;
                self.lu[ik] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.lu[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.lu[ij] -= l * kj;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                x[i] -= self.lu[self.idx(i, k)] * xk;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + self.kuf).min(n - 1) {
                s -= self.lu[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.lu[self.idx(i, i)];
        }
    }
}
