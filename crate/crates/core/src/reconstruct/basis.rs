//! Scaled, centered monomial basis of `P_m` in two variables.

use serde::{Deserialize, Serialize};

use crate::Point;

/// Dimension of `P_m` in two variables.
pub fn dim(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Exponents `(a, b)` of `xi1^a xi2^b`, ordered by total degree, then by `b`.
pub fn exponents(m: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::with_capacity(dim(m));
    for deg in 0..=m {
        for b in 0..=deg {
            e.push((deg - b, b));
        }
    }
    e
}

/// Monomials in `xi = (x - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub order: usize,
    pub center: [f64; 2],
    pub scale: f64,
}

impl Basis {
    pub fn new(order: usize, center: Point, scale: f64) -> Self {
        Self {
            order,
            center: [center.x, center.y],
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        dim(self.order)
    }

    fn local(&self, x: Point) -> (f64, f64) {
        ((x.x - self.center[0]) / self.scale, (x.y - self.center[1]) / self.scale)
    }

    fn powers(t: f64, m: usize) -> Vec<f64> {
        let mut p = Vec::with_capacity(m + 1);
        let mut v = 1.0;
        for _ in 0..=m {
            p.push(v);
            v *= t;
        }
        p
    }

    /// Values of all basis functions at `x`.
    pub fn eval(&self, x: Point) -> Vec<f64> {
        let (u, v) = self.local(x);
        let pu = Self::powers(u, self.order);
        let pv = Self::powers(v, self.order);
        exponents(self.order).iter().map(|&(a, b)| pu[a] * pv[b]).collect()
    }

    /// Physical gradients of all basis functions at `x`.
    pub fn gradient(&self, x: Point) -> Vec<[f64; 2]> {
        let (u, v) = self.local(x);
        let pu = Self::powers(u, self.order);
        let pv = Self::powers(v, self.order);
        exponents(self.order)
            .iter()
            .map(|&(a, b)| {
                let du = if a > 0 { a as f64 * pu[a - 1] * pv[b] } else { 0.0 };
                let dv = if b > 0 { b as f64 * pu[a] * pv[b - 1] } else { 0.0 };
                [du / self.scale, dv / self.scale]
            })
            .collect()
    }

    /// `sum_j c_j phi_j(x)`
    pub fn combine(&self, coeffs: &[f64], x: Point) -> f64 {
        self.eval(x).iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    pub fn combine_gradient(&self, coeffs: &[f64], x: Point) -> [f64; 2] {
        self.gradient(x).iter().zip(coeffs).fold([0.0, 0.0], |acc, (g, c)| {
            [acc[0] + c * g[0], acc[1] + c * g[1]]
        })
    }
}
