//! Stochastic evolution of a Gaussian fermionic state under nearest-neighbour
//! hopping and continuous monitoring of every site occupation.
//!
//! The state is a Slater determinant stored as an orthonormal `V x N` matrix
//! `psi` of single-particle orbitals. One step of length `dt` applies the
//! hopping propagator, multiplies row `l` by the measurement weight
//!
//! ```text
//! w_l = exp[ sqrt(2 gamma dt) xi_l + 2 gamma dt <n_l> ],   xi_l ~ N(0, 1)
//! ```
//!
//! and re-orthonormalizes with a thin QR factorization, keeping `Q`.
//! `<n_l>` is taken from the state at the beginning of the step.

use std::sync::Arc;

use faer::{c64, Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Tolerance on `psi^dag psi = 1` after every normalized step.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Independent random stream for trajectory `id` of an ensemble seeded with
/// `master_seed`. Streams do not depend on execution order.
pub fn trajectory_rng(master_seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

/// Initial condition of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Orthonormalized i.i.d. complex Gaussian orbitals.
    RandomGaussian,
    /// Every even-parity site occupied.
    Neel,
}

impl InitialState {
    pub fn tag(&self) -> &'static str {
        match self {
            InitialState::RandomGaussian => "random_gaussian",
            InitialState::Neel => "neel",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "random_gaussian" | "random" => Ok(InitialState::RandomGaussian),
            "neel" => Ok(InitialState::Neel),
            other => Err(Error::param("initial", format!("unknown initial state `{other}`"))),
        }
    }
}

/// Parameters of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Monitoring rate in units of the hopping.
    pub gamma: f64,
    pub dt: f64,
    /// Time evolved before the first sample.
    pub burn_in: f64,
    /// Time between consecutive samples.
    pub sample_interval: f64,
    pub samples: usize,
    pub initial: InitialState,
}

impl EvolutionConfig {
    pub const DEFAULT_DT: f64 = 0.05;

    /// Defaults: `dt = 0.05`, burn-in `4 L`, one sample, random initial state.
    pub fn new(gamma: f64, lattice: &Lattice) -> Self {
        EvolutionConfig {
            gamma,
            dt: Self::DEFAULT_DT,
            burn_in: 4.0 * lattice.size() as f64,
            sample_interval: 1.0,
            samples: 1,
            initial: InitialState::RandomGaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return Err(Error::param("burn_in", format!("must be >= 0, got {}", self.burn_in)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::param(
                "sample_interval",
                format!("must be > 0, got {}", self.sample_interval),
            ));
        }
        if self.gamma * self.dt > 1.0 {
            log::warn!(
                "gamma*dt = {} is not small; the Gaussian-noise limit is poorly resolved",
                self.gamma * self.dt
            );
        }
        Ok(())
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in / self.dt).round() as u64
    }

    pub fn interval_steps(&self) -> u64 {
        ((self.sample_interval / self.dt).round() as u64).max(1)
    }
}

enum PropagatorKind {
    Dense(Mat<c64>),
    /// Plane waves diagonalize the periodic hopping matrix, so
    /// `exp(-i h dt)` is a phase per wavevector between two FFTs.
    Momentum {
        phases: Vec<c64>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
}

/// The hopping propagator `U = exp(-i h dt)`, built once per lattice and
/// time step.
pub struct Propagator {
    lattice: Lattice,
    dt: f64,
    kind: PropagatorKind,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            PropagatorKind::Dense(_) => "dense",
            PropagatorKind::Momentum { .. } => "momentum",
        };
        f.debug_struct("Propagator")
            .field("lattice", &self.lattice)
            .field("dt", &self.dt)
            .field("kind", &kind)
            .finish()
    }
}

impl Propagator {
    /// Fastest exact propagator for the lattice: momentum space whenever the
    /// hopping matrix is the plain periodic one (`L >= 4`), dense otherwise.
    pub fn new(lattice: &Lattice, dt: f64) -> Result<Self> {
        if lattice.size() >= 4 {
            Self::momentum(lattice, dt)
        } else {
            Self::dense(lattice, dt)
        }
    }

    /// `U = W exp(-i Lambda dt) W^T` from a dense eigendecomposition of `h`.
    pub fn dense(lattice: &Lattice, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let h = lattice.hopping_matrix();
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let w = eig.U();
        let s = eig.S().column_vector();
        let v = lattice.num_sites();
        let phases: Vec<c64> = (0..v).map(|k| c64::cis(-s[k] * dt)).collect();
        let scaled = Mat::<c64>::from_fn(v, v, |i, k| phases[k] * w[(i, k)]);
        let wt = Mat::<c64>::from_fn(v, v, |k, j| c64::new(w[(j, k)], 0.0));
        let u = &scaled * &wt;
        Ok(Propagator {
            lattice: *lattice,
            dt,
            kind: PropagatorKind::Dense(u),
        })
    }

    pub fn momentum(lattice: &Lattice, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        if lattice.size() < 4 {
            return Err(Error::InvalidLattice(
                "momentum-space propagator needs L >= 4".into(),
            ));
        }
        let l = lattice.size();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(l);
        let inverse = planner.plan_fft_inverse(l);
        let norm = 1.0 / lattice.num_sites() as f64;
        let phases = lattice
            .band_energies()
            .into_iter()
            .map(|e| c64::cis(-e * dt) * norm)
            .collect();
        Ok(Propagator {
            lattice: *lattice,
            dt,
            kind: PropagatorKind::Momentum {
                phases,
                forward,
                inverse,
            },
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `psi <- U psi`.
    pub fn apply(&self, psi: &mut Mat<c64>) {
        match &self.kind {
            PropagatorKind::Dense(u) => {
                *psi = u * &*psi;
            }
            PropagatorKind::Momentum {
                phases,
                forward,
                inverse,
            } => {
                let mut scratch = vec![c64::new(0.0, 0.0); self.lattice.num_sites()];
                for j in 0..psi.ncols() {
                    let col = psi.col_as_slice_mut(j);
                    self.transform(col, forward.as_ref(), &mut scratch);
                    for (x, p) in col.iter_mut().zip(phases) {
                        *x *= p;
                    }
                    self.transform(col, inverse.as_ref(), &mut scratch);
                }
            }
        }
    }

    /// Unnormalized d-dimensional FFT of one column, axis by axis.
    fn transform(&self, col: &mut [c64], fft: &dyn Fft<f64>, scratch: &mut [c64]) {
        let l = self.lattice.size();
        let v = col.len();
        // Axis 0 is contiguous.
        fft.process(col);
        let mut stride = l;
        for _axis in 1..self.lattice.dim() {
            // Gather lines along this axis into contiguous chunks.
            let mut line = 0;
            for block in (0..v).step_by(stride * l) {
                for offset in 0..stride {
                    let base = block + offset;
                    for k in 0..l {
                        scratch[line * l + k] = col[base + k * stride];
                    }
                    line += 1;
                }
            }
            fft.process(scratch);
            let mut line = 0;
            for block in (0..v).step_by(stride * l) {
                for offset in 0..stride {
                    let base = block + offset;
                    for k in 0..l {
                        col[base + k * stride] = scratch[line * l + k];
                    }
                    line += 1;
                }
            }
            stride *= l;
        }
    }

    /// Dense `V x V` matrix of the propagator.
    pub fn matrix(&self) -> Mat<c64> {
        match &self.kind {
            PropagatorKind::Dense(u) => u.clone(),
            PropagatorKind::Momentum { .. } => {
                let v = self.lattice.num_sites();
                let mut u = Mat::<c64>::identity(v, v);
                self.apply(&mut u);
                u
            }
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::param("dt", format!("must be > 0, got {dt}")))
    }
}

/// One stochastic trajectory: orbitals, clock and private random stream.
#[derive(Clone)]
pub struct TrajectoryState {
    psi: Mat<c64>,
    time: f64,
    steps: u64,
    id: u64,
    rng: ChaCha8Rng,
}

impl std::fmt::Debug for TrajectoryState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrajectoryState")
            .field("sites", &self.psi.nrows())
            .field("particles", &self.psi.ncols())
            .field("time", &self.time)
            .field("steps", &self.steps)
            .field("id", &self.id)
            .finish()
    }
}

impl TrajectoryState {
    /// Half-filled initial state for trajectory `id` of the ensemble seeded
    /// with `master_seed`.
    pub fn new(lattice: &Lattice, initial: InitialState, master_seed: u64, id: u64) -> Result<Self> {
        let mut rng = trajectory_rng(master_seed, id);
        let v = lattice.num_sites();
        let n = lattice.half_filling();
        let psi = match initial {
            InitialState::Neel => {
                let mut psi = Mat::<c64>::zeros(v, n);
                let occupied = (0..v).filter(|&s| lattice.parity(s) == 0);
                for (j, s) in occupied.enumerate() {
                    psi[(s, j)] = c64::new(1.0, 0.0);
                }
                psi
            }
            InitialState::RandomGaussian => {
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                let mut draw = |_: usize, _: usize| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    c64::new(re * scale, im * scale)
                };
                let g = Mat::<c64>::from_fn(v, n, &mut draw);
                orthonormalize(&g, 0.0)?
            }
        };
        Ok(TrajectoryState {
            psi,
            time: 0.0,
            steps: 0,
            id,
            rng,
        })
    }

    /// Wraps explicit orbitals. Columns must be orthonormal.
    pub fn from_orbitals(psi: Mat<c64>, master_seed: u64, id: u64) -> Result<Self> {
        let err = orthonormality_error(&psi);
        if err > ORTHONORMALITY_TOL {
            return Err(Error::NotNormalized(err));
        }
        Ok(TrajectoryState {
            psi,
            time: 0.0,
            steps: 0,
            id,
            rng: trajectory_rng(master_seed, id),
        })
    }

    pub fn orbitals(&self) -> &Mat<c64> {
        &self.psi
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn num_sites(&self) -> usize {
        self.psi.nrows()
    }

    pub fn num_particles(&self) -> usize {
        self.psi.ncols()
    }

    /// `<n_l> = (psi psi^dag)_{ll}` for every site.
    pub fn occupations(&self) -> Vec<f64> {
        let (v, n) = (self.psi.nrows(), self.psi.ncols());
        let mut occ = vec![0.0; v];
        for j in 0..n {
            for (o, z) in occ.iter_mut().zip(self.psi.col_as_slice(j)) {
                *o += z.norm_sqr();
            }
        }
        occ
    }

    /// Draws one set of measurement outcomes and returns the per-site
    /// weights `w_l`. Advances the random stream by `V` normals.
    pub fn measurement_weights(&mut self, gamma: f64, dt: f64) -> Result<Vec<f64>> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {gamma}")));
        }
        let occ = self.occupations();
        let noise: Vec<f64> = (0..occ.len())
            .map(|_| StandardNormal.sample(&mut self.rng))
            .collect();
        Ok(weights_from_noise(&occ, &noise, gamma, dt))
    }

    /// Advances the trajectory by one time step.
    pub fn step(&mut self, config: &EvolutionConfig, propagator: &Propagator) -> Result<()> {
        let w = self.measurement_weights(config.gamma, propagator.dt())?;
        propagator.apply(&mut self.psi);
        for j in 0..self.psi.ncols() {
            for (z, wl) in self.psi.col_as_slice_mut(j).iter_mut().zip(&w) {
                *z *= *wl;
            }
        }
        self.psi = orthonormalize(&self.psi, self.time)?;
        self.time += propagator.dt();
        self.steps += 1;
        if cfg!(debug_assertions) && self.psi.nrows() <= 256 {
            let err = orthonormality_error(&self.psi);
            debug_assert!(err < ORTHONORMALITY_TOL, "orthonormality lost: {err:e}");
        }
        Ok(())
    }

    pub fn evolve(&mut self, config: &EvolutionConfig, propagator: &Propagator, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step(config, propagator)?;
        }
        Ok(())
    }
}

/// `w_l = exp[sqrt(2 gamma dt) xi_l + 2 gamma dt n_l]`.
pub fn weights_from_noise(occupations: &[f64], noise: &[f64], gamma: f64, dt: f64) -> Vec<f64> {
    let amp = (2.0 * gamma * dt).sqrt();
    let drift = 2.0 * gamma * dt;
    occupations
        .iter()
        .zip(noise)
        .map(|(n, xi)| (amp * xi + drift * n).exp())
        .collect()
}

/// Thin-QR orthonormalization keeping `Q`.
fn orthonormalize(psi: &Mat<c64>, time: f64) -> Result<Mat<c64>> {
    let qr = psi.qr();
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max.is_finite() && min > 1e-14 * max) {
        return Err(Error::Orthonormalization {
            time,
            reason: format!("rank deficient: |R_jj| in [{min:e}, {max:e}]"),
        });
    }
    Ok(qr.compute_thin_Q())
}

/// `max_{ij} |(psi^dag psi - 1)_{ij}|`.
pub fn orthonormality_error(psi: &Mat<c64>) -> f64 {
    let gram = psi.adjoint() * psi;
    let n = gram.nrows();
    let mut err: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((gram[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    err
}

/// A snapshot emitted by [`run_trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub trajectory: u64,
    pub index: usize,
    pub time: f64,
    pub gamma: f64,
    pub seed: u64,
    pub value: T,
}

/// Evolves one trajectory through the burn-in and then hands the state to
/// `observe` every sampling interval until `config.samples` snapshots have
/// been taken.
pub fn run_trajectory<T, F>(
    lattice: &Lattice,
    config: &EvolutionConfig,
    propagator: &Propagator,
    master_seed: u64,
    id: u64,
    mut observe: F,
) -> Result<Vec<Sample<T>>>
where
    F: FnMut(&TrajectoryState) -> Result<T>,
{
    config.validate()?;
    if (propagator.dt() - config.dt).abs() > 1e-15 || propagator.lattice() != lattice {
        return Err(Error::param("propagator", "built for a different lattice or time step"));
    }
    let mut out = Vec::with_capacity(config.samples);
    if config.samples == 0 {
        return Ok(out);
    }
    let mut state = TrajectoryState::new(lattice, config.initial, master_seed, id)?;
    state.evolve(config, propagator, config.burn_in_steps())?;
    for index in 0..config.samples {
        if index > 0 {
            state.evolve(config, propagator, config.interval_steps())?;
        }
        out.push(Sample {
            trajectory: id,
            index,
            time: state.time(),
            gamma: config.gamma,
            seed: master_seed,
            value: observe(&state)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    #[test]
    fn neel_occupations() {
        let lat = Lattice::new(1, 4).unwrap();
        let s = TrajectoryState::new(&lat, InitialState::Neel, 1, 0).unwrap();
        assert_eq!(s.occupations(), vec![1.0, 0.0, 1.0, 0.0]);

        let lat = Lattice::new(2, 4).unwrap();
        let s = TrajectoryState::new(&lat, InitialState::Neel, 1, 0).unwrap();
        let occ = s.occupations();
        for site in 0..lat.num_sites() {
            let [x, y, _] = lat.coords(site);
            let expected = if (x + y) % 2 == 0 { 1.0 } else { 0.0 };
            assert_eq!(occ[site], expected);
        }
    }

    #[test]
    fn random_state_is_orthonormal() {
        for (d, l) in [(1, 10), (2, 6), (3, 4)] {
            let lat = Lattice::new(d, l).unwrap();
            let s = TrajectoryState::new(&lat, InitialState::RandomGaussian, 7, 3).unwrap();
            assert!(orthonormality_error(s.orbitals()) < 1e-12);
            assert_eq!(s.num_particles(), lat.num_sites() / 2);
        }
    }

    #[test]
    fn propagator_is_unitary_and_matches_dense() {
        for (d, l) in [(1, 8), (2, 4), (2, 6), (3, 4)] {
            let lat = Lattice::new(d, l).unwrap();
            let fast = Propagator::momentum(&lat, 0.05).unwrap().matrix();
            let dense = Propagator::dense(&lat, 0.05).unwrap().matrix();
            assert!(max_abs_diff(&fast, &dense) < 1e-12, "d={d} L={l}");
            let v = lat.num_sites();
            let id = Mat::<c64>::identity(v, v);
            assert!(max_abs_diff(&(dense.adjoint() * &dense), &id) < 1e-12);
            // U commutes with h.
            let h = lat.hopping_matrix();
            let hc = Mat::<c64>::from_fn(v, v, |i, j| c64::new(h[(i, j)], 0.0));
            assert!(max_abs_diff(&(&hc * &dense), &(&dense * &hc)) < 1e-12);
        }
    }

    #[test]
    fn small_ring_uses_dense() {
        let lat = Lattice::new(1, 2).unwrap();
        let p = Propagator::new(&lat, 0.1).unwrap();
        let u = p.matrix();
        // exp(-i h dt) with h = [[0,-1],[-1,0]].
        assert!((u[(0, 0)] - c64::new(0.1f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - c64::new(0.0, 0.1f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn weights_without_monitoring_are_one() {
        let lat = Lattice::new(1, 8).unwrap();
        let mut s = TrajectoryState::new(&lat, InitialState::RandomGaussian, 3, 0).unwrap();
        let w = s.measurement_weights(0.0, 0.05).unwrap();
        assert!(w.iter().all(|&x| x == 1.0));
        assert!(s.measurement_weights(-1.0, 0.05).is_err());
    }

    #[test]
    fn weight_formula() {
        let w = weights_from_noise(&[0.5, 0.5, 0.5], &[0.0, 0.0, 0.0], 3.0, 0.05);
        assert!(w.windows(2).all(|p| p[0] == p[1]));
        let (g, dt) = (2.0, 0.1);
        let w = weights_from_noise(&[1.0, 0.0], &[0.3, -0.2], g, dt);
        let expected = (2.0 * g * dt + (2.0 * g * dt).sqrt() * (0.3 + 0.2)).exp();
        assert!((w[0] / w[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn number_eigenstate_is_unchanged_by_measurement() {
        // Neel state without hopping: each orbital sits on one site, so any
        // diagonal reweighting only rescales columns.
        let lat = Lattice::new(1, 6).unwrap();
        let mut s = TrajectoryState::new(&lat, InitialState::Neel, 5, 0).unwrap();
        let before = s.occupations();
        let w = s.measurement_weights(50.0, 0.05).unwrap();
        let mut psi = s.orbitals().clone();
        for j in 0..psi.ncols() {
            for (z, wl) in psi.col_as_slice_mut(j).iter_mut().zip(&w) {
                *z *= *wl;
            }
        }
        let q = orthonormalize(&psi, 0.0).unwrap();
        let s2 = TrajectoryState::from_orbitals(q, 5, 0).unwrap();
        for (a, b) in before.iter().zip(s2.occupations()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn steps_are_deterministic() {
        let lat = Lattice::new(2, 4).unwrap();
        let mut cfg = EvolutionConfig::new(1.5, &lat);
        cfg.dt = 0.05;
        let p = Propagator::new(&lat, cfg.dt).unwrap();
        let mut a = TrajectoryState::new(&lat, InitialState::RandomGaussian, 11, 4).unwrap();
        let mut b = a.clone();
        a.evolve(&cfg, &p, 20).unwrap();
        b.evolve(&cfg, &p, 20).unwrap();
        assert_eq!(max_abs_diff(a.orbitals(), b.orbitals()), 0.0);
        assert!((a.time() - 1.0).abs() < 1e-12);
        assert_eq!(a.steps(), 20);
    }

    #[test]
    fn unitary_evolution_keeps_projector() {
        let lat = Lattice::new(2, 4).unwrap();
        let mut cfg = EvolutionConfig::new(0.0, &lat);
        cfg.dt = 0.1;
        let p = Propagator::new(&lat, cfg.dt).unwrap();
        let mut s = TrajectoryState::new(&lat, InitialState::Neel, 1, 0).unwrap();
        for _ in 0..30 {
            s.step(&cfg, &p).unwrap();
            let psi = s.orbitals();
            let g = psi * psi.adjoint();
            let ev = g.self_adjoint_eigenvalues(Side::Lower).unwrap();
            let n = lat.half_filling();
            for (k, e) in ev.iter().enumerate() {
                let target = if k < lat.num_sites() - n { 0.0 } else { 1.0 };
                assert!((e - target).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_samples_is_empty() {
        let lat = Lattice::new(1, 8).unwrap();
        let mut cfg = EvolutionConfig::new(1.0, &lat);
        cfg.samples = 0;
        let p = Propagator::new(&lat, cfg.dt).unwrap();
        let out = run_trajectory(&lat, &cfg, &p, 1, 0, |s| Ok(s.time())).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn sampling_schedule() {
        let lat = Lattice::new(1, 8).unwrap();
        let cfg = EvolutionConfig {
            gamma: 1.0,
            dt: 0.05,
            burn_in: 1.0,
            sample_interval: 0.5,
            samples: 3,
            initial: InitialState::Neel,
        };
        let p = Propagator::new(&lat, cfg.dt).unwrap();
        let out = run_trajectory(&lat, &cfg, &p, 9, 2, |s| Ok(s.steps())).unwrap();
        let steps: Vec<u64> = out.iter().map(|s| s.value).collect();
        assert_eq!(steps, vec![20, 30, 40]);
        assert!(out.iter().all(|s| s.trajectory == 2 && s.seed == 9 && s.gamma == 1.0));
        assert!((out[2].time - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_propagator() {
        let lat = Lattice::new(1, 8).unwrap();
        let cfg = EvolutionConfig::new(1.0, &lat);
        let p = Propagator::new(&lat, 0.1).unwrap();
        assert!(run_trajectory(&lat, &cfg, &p, 1, 0, |_| Ok(())).is_err());
    }
}
