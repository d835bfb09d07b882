//! Banded LU with partial pivoting.

use crate::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.  Rows keep room
/// for the `kl` extra super-diagonals created by pivoting.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku {
            None
        } else {
            Some(i * self.width + j + self.kl - i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let s = self.slot(i, j).expect("inside band");
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let p = (k..=last)
                .max_by(|&a, &b| self.get(a, k).abs().total_cmp(&self.get(b, k).abs()))
                .expect("nonempty range");
            let pivot = self.get(p, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular);
            }
            piv[k] = p;
            let right = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (a, b) = (self.slot(k, j).unwrap(), self.slot(p, j).unwrap());
                    self.data.swap(a, b);
                }
            }
            for i in k + 1..=last {
                let si = self.slot(i, k).unwrap();
                let l = self.data[si] / pivot;
                self.data[si] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=right {
                    let a = self.data[self.slot(k, j).unwrap()];
                    if a != 0.0 {
                        let s = self.slot(i, j).unwrap();
                        self.data[s] -= l * a;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    x[i] -= m.get(i, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + m.kl + m.ku).min(n - 1) {
                s -= m.get(k, j) * x[j];
            }
            x[k] = s / m.get(k, k);
        }
        x
    }
}
