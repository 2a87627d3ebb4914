//! Dense (unblocked) reference implementations used as test oracles.
#![allow(dead_code)]

use hbqed::basis::StateSpace;
use hbqed::darkstates::DarkVector;
use hbqed::model::RateConfig;
use hbqed::system::OpenSystem;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Full-space model: Hamiltonian and the ordered channel list
/// `(jump operator, rate)`, leak then inflow per operator.
pub struct Dense {
    pub hbar: f64,
    pub h: CMat,
    pub channels: Vec<(CMat, f64)>,
}

impl Dense {
    pub fn new(system: &OpenSystem, rates: &RateConfig) -> Self {
        let channels = system
            .channels
            .iter()
            .map(|t| {
                let op = &system.jumps[t.operator];
                let b = if t.inflow {
                    op.creation_matrix()
                } else {
                    op.annihilation_matrix()
                };
                (b.to_dense(), t.rate(rates))
            })
            .collect();
        Self {
            hbar: system.hbar(),
            h: system.hamiltonian_sparse.to_dense(),
            channels,
        }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `exp(-i H t / hbar)` of the whole H by scaling and squaring.
    pub fn propagator(&self, t: f64) -> CMat {
        (&self.h * Complex64::new(0.0, -t / self.hbar)).exp()
    }

    /// The integrator's step, written on full matrices.
    pub fn step(&self, rho: &CMat, u: &CMat, dt: f64) -> CMat {
        let mut r = u * rho * u.adjoint();
        for (b, rate) in &self.channels {
            if *rate == 0.0 {
                continue;
            }
            let cf = rate * dt / self.hbar;
            let n = b.adjoint() * b;
            let w: Vec<f64> = (0..self.dim()).map(|i| n[(i, i)].re).collect();
            let k = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                w.len(),
                w.iter().map(|&x| c((-0.5 * cf * x).exp())),
            ));
            let f = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                w.len(),
                w.iter().map(|&x| {
                    if x > 0.0 {
                        c(((-(-cf * x).exp_m1()) / x).sqrt())
                    } else {
                        c(0.0)
                    }
                }),
            ));
            let m = b * f;
            r = &k * &r * &k + &m * &r * m.adjoint();
        }
        r
    }

    /// Lindblad generator `L(rho)`.
    pub fn generator(&self, rho: &CMat) -> CMat {
        let mut out = self.hamiltonian_part(rho);
        for (b, rate) in &self.channels {
            if *rate != 0.0 {
                out += self.dissipator(b, *rate, rho);
            }
        }
        out
    }

    fn dissipator(&self, b: &CMat, rate: f64, rho: &CMat) -> CMat {
        let n = b.adjoint() * b;
        let bt = b.adjoint();
        (b * rho * bt - (&n * rho + rho * &n) * c(0.5)) * c(rate / self.hbar)
    }

    fn second_order(&self, b: &CMat, rate: f64, rho: &CMat) -> CMat {
        let n = b.adjoint() * b;
        let n2 = &n * &n;
        let s = rate / self.hbar;
        ((&n2 * rho + rho * &n2) * c(0.125) + &n * rho * &n * c(0.25)
            - b * (&n * rho + rho * &n) * b.adjoint() * c(0.25))
            * c(s * s)
    }

    fn hamiltonian_part(&self, rho: &CMat) -> CMat {
        (&self.h * rho - rho * &self.h) * Complex64::new(0.0, -1.0 / self.hbar)
    }

    /// Predicted `S(dt) rho - S(dt/2)^2 rho` to order `dt^2` for the
    /// split step `S = S_K ... S_1 U`, where `S_k = 1 + dt D_k + dt^2 E_k`.
    pub fn half_step_defect(&self, rho: &CMat, dt: f64) -> CMat {
        let active: Vec<&(CMat, f64)> = self.channels.iter().filter(|(_, r)| *r != 0.0).collect();
        let l = |x: &CMat| self.hamiltonian_part(x);
        let d = |k: usize, x: &CMat| self.dissipator(&active[k].0, active[k].1, x);
        let g = |x: &CMat| {
            let mut out = l(x);
            for k in 0..active.len() {
                out += d(k, x);
            }
            out
        };
        // Q = L^2/2 + sum E_k + sum_k D_k L + sum_{j<k} D_k D_j
        let lr = l(rho);
        let mut q = l(&lr) * c(0.5);
        for (k, (b, rate)) in active.iter().enumerate() {
            q += self.second_order(b, *rate, rho);
            q += d(k, &lr);
            for j in 0..k {
                q += d(k, &d(j, rho));
            }
        }
        (q * c(0.5) - g(&g(rho)) * c(0.25)) * c(dt * dt)
    }

    /// Classical RK4 on the full generator.
    pub fn rk4(&self, rho: &CMat, dt: f64, steps: usize) -> CMat {
        let mut r = rho.clone();
        for _ in 0..steps {
            let k1 = self.generator(&r);
            let k2 = self.generator(&(&r + &k1 * c(dt / 2.0)));
            let k3 = self.generator(&(&r + &k2 * c(dt / 2.0)));
            let k4 = self.generator(&(&r + &k3 * c(dt)));
            r += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
        }
        r
    }
}

/// `P_k` from a full density matrix.
pub fn distribution(rho: &CMat, space: &StateSpace) -> Vec<f64> {
    let mut p = vec![0.0; space.m() + 1];
    for (i, s) in space.states().iter().enumerate() {
        p[s.bonds()] += rho[(i, i)].re;
    }
    p
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

pub const D3: [(&str, i64); 6] = [
    ("120", 1),
    ("102", -1),
    ("210", -1),
    ("201", 1),
    ("012", 1),
    ("021", -1),
];

pub fn three_unit_vector() -> DarkVector {
    DarkVector::from_terms(3, &D3).unwrap()
}

/// `D3` on `units` of four, with level `rest` on the spare unit.
fn embed4(units: [usize; 3], rest: char) -> DarkVector {
    let spare = (0..4).find(|u| !units.contains(u)).unwrap();
    let terms: Vec<(String, i64)> = D3
        .iter()
        .map(|(label, c)| {
            let mut s = ['?'; 4];
            for (u, ch) in units.iter().zip(label.chars()) {
                s[*u] = ch;
            }
            s[spare] = rest;
            (s.iter().collect(), *c)
        })
        .collect();
    let t: Vec<(&str, i64)> = terms.iter().map(|(l, c)| (l.as_str(), *c)).collect();
    DarkVector::from_terms(4, &t).unwrap()
}

/// Eleven known four-unit dark vectors: `D3` on every triple with the
/// spare unit at 0 or 1, plus three mixed combinations.
pub fn four_unit_vectors() -> Vec<DarkVector> {
    let mut out = Vec::new();
    for rest in ['0', '1'] {
        for units in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            out.push(embed4(units, rest));
        }
    }
    let extra: [&[(&str, i64)]; 3] = [
        &[
            ("1210", 1),
            ("1201", -1),
            ("1012", -1),
            ("1021", 1),
            ("2110", -1),
            ("2101", 1),
            ("0112", 1),
            ("0121", -1),
        ],
        &[
            ("1020", 1),
            ("1002", -1),
            ("2010", -1),
            ("2001", 1),
            ("0120", -1),
            ("0102", 1),
            ("0210", 1),
            ("0201", -1),
        ],
        &[
            ("1120", 1),
            ("1102", -1),
            ("1200", 1),
            ("2100", -1),
            ("2011", -1),
            ("0211", 1),
            ("0012", -1),
            ("0021", 1),
            ("1210", -1),
            ("1012", 1),
            ("1020", -1),
            ("2101", 1),
            ("2010", 1),
            ("0121", -1),
            ("0102", 1),
            ("0201", -1),
        ],
    ];
    for terms in extra {
        out.push(DarkVector::from_terms(4, terms).unwrap());
    }
    out
}
