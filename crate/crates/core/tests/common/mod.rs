//! Brute-force Fock-space reference for Gaussian states of a few sites.

#![allow(dead_code)]

use faer::{c64, Mat, Side};

pub struct Fock {
    pub sites: usize,
    pub states: Vec<u32>,
}

impl Fock {
    pub fn new(sites: usize, particles: u32) -> Self {
        let states = (0u32..1 << sites).filter(|s| s.count_ones() == particles).collect();
        Fock { sites, states }
    }

    pub fn index(&self, s: u32) -> usize {
        self.states.binary_search(&s).unwrap()
    }

    /// `c_i^dag c_j |s>` as (sign, state), or `None` when it vanishes.
    pub fn hop(s: u32, i: usize, j: usize) -> Option<(f64, u32)> {
        if s & (1 << j) == 0 {
            return None;
        }
        let below = |x: u32, k: usize| (x & ((1u32 << k) - 1)).count_ones();
        let mut sign = if below(s, j) % 2 == 0 { 1.0 } else { -1.0 };
        let t = s ^ (1 << j);
        if t & (1 << i) != 0 {
            return None;
        }
        if below(t, i) % 2 == 1 {
            sign = -sign;
        }
        Some((sign, t | (1 << i)))
    }

    pub fn slater(&self, psi: &Mat<c64>) -> Vec<c64> {
        self.states
            .iter()
            .map(|&s| {
                let rows: Vec<usize> = (0..self.sites).filter(|r| s & (1 << r) != 0).collect();
                let mut m: Vec<Vec<c64>> = rows
                    .iter()
                    .map(|&r| (0..psi.ncols()).map(|b| psi[(r, b)]).collect())
                    .collect();
                det(&mut m)
            })
            .collect()
    }

    pub fn apply_hamiltonian(&self, h: &Mat<f64>, v: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); v.len()];
        for (k, &s) in self.states.iter().enumerate() {
            for i in 0..self.sites {
                for j in 0..self.sites {
                    if h[(i, j)] == 0.0 {
                        continue;
                    }
                    if let Some((sign, t)) = Fock::hop(s, i, j) {
                        out[self.index(t)] += v[k] * (sign * h[(i, j)]);
                    }
                }
            }
        }
        out
    }

    /// `exp(-i H dt) v` by a Taylor series converged to machine precision.
    pub fn propagate(&self, h: &Mat<f64>, dt: f64, v: &[c64]) -> Vec<c64> {
        let mut out = v.to_vec();
        let mut term = v.to_vec();
        for k in 1..60 {
            term = self.apply_hamiltonian(h, &term);
            let f = c64::new(0.0, -dt / k as f64);
            for t in term.iter_mut() {
                *t *= f;
            }
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
            if term.iter().map(|t| t.norm()).sum::<f64>() < 1e-18 {
                break;
            }
        }
        out
    }

    pub fn measure(&self, weights: &[f64], v: &mut [c64]) {
        for (a, &s) in v.iter_mut().zip(&self.states) {
            let f: f64 = (0..self.sites).filter(|r| s & (1 << r) != 0).map(|r| weights[r]).product();
            *a *= f;
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in v.iter_mut() {
            *a /= norm;
        }
    }

    pub fn correlations(&self, v: &[c64]) -> Mat<c64> {
        let mut c = Mat::<c64>::zeros(self.sites, self.sites);
        for (k, &s) in self.states.iter().enumerate() {
            for i in 0..self.sites {
                for j in 0..self.sites {
                    if let Some((sign, t)) = Fock::hop(s, i, j) {
                        c[(i, j)] += v[self.index(t)].conj() * v[k] * sign;
                    }
                }
            }
        }
        c
    }

    /// Entropy of the leading `na` sites from the Schmidt decomposition.
    pub fn entropy(&self, v: &[c64], na: usize) -> f64 {
        let (da, db) = (1usize << na, 1usize << (self.sites - na));
        let mut m = Mat::<c64>::zeros(da, db);
        for (a, &s) in v.iter().zip(&self.states) {
            m[(s as usize & (da - 1), s as usize >> na)] = *a;
        }
        let rho = &m * m.adjoint();
        let p = rho.self_adjoint_eigenvalues(Side::Lower).unwrap();
        p.iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.ln()).sum()
    }
    /// Entropy of an arbitrary set of sites. The modes are reordered so the
    /// subsystem comes first, with the fermionic sign of the reordering.
    pub fn subset_entropy(&self, v: &[c64], subset: &[usize]) -> f64 {
        let mut order: Vec<usize> = subset.to_vec();
        order.extend((0..self.sites).filter(|s| !subset.contains(s)));
        let mut pos = vec![0; self.sites];
        for (p, &s) in order.iter().enumerate() {
            pos[s] = p;
        }
        let mut moved = Vec::with_capacity(v.len());
        for (a, &s) in v.iter().zip(&self.states) {
            let occ: Vec<usize> = (0..self.sites).filter(|r| s & (1 << r) != 0).map(|r| pos[r]).collect();
            let inversions = (0..occ.len())
                .flat_map(|i| (i + 1..occ.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| occ[i] > occ[j])
                .count();
            let t: u32 = occ.iter().map(|p| 1u32 << p).sum();
            moved.push((t, if inversions % 2 == 0 { *a } else { -*a }));
        }
        moved.sort_by_key(|(t, _)| *t);
        let w: Vec<c64> = moved.into_iter().map(|(_, a)| a).collect();
        self.entropy(&w, subset.len())
    }
}

pub fn det(m: &mut [Vec<c64>]) -> c64 {
    let n = m.len();
    let mut d = c64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].norm().total_cmp(&m[b][k].norm())).unwrap();
        if m[p][k].norm() == 0.0 {
            return c64::new(0.0, 0.0);
        }
        if p != k {
            m.swap(p, k);
            d = -d;
        }
        d *= m[k][k];
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            for c in k..n {
                let x = m[k][c];
                m[r][c] -= f * x;
            }
        }
    }
    d
}
