//! Time stepping: classical RK4 and Krylov (Lanczos / Arnoldi) exponential
//! steps with the Hamiltonian frozen at the step midpoint.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::cis::{CisHamiltonian, CisState, Gauge, Symmetry};
use crate::error::{Error, Result};
pub use crate::pulse::Pulse;


const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A time-dependent linear operator H(t).
pub trait Generator {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, x: &[Complex64], y: &mut [Complex64]);
    fn symmetry(&self) -> Symmetry;
}

/// The CIS Hamiltonian driven by a pulse in the Hamiltonian's own gauge.
pub struct Driven<'a> {
    pub h: &'a CisHamiltonian,
    pub pulse: &'a Pulse,
}

impl Driven<'_> {
    pub fn coupling(&self, t: f64) -> f64 {
        match self.h.gauge() {
            Gauge::Velocity => self.pulse.vector_potential(t),
            Gauge::Length => self.pulse.field(t),
        }
    }
}

impl Generator for Driven<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn apply(&self, t: f64, x: &[Complex64], y: &mut [Complex64]) {
        self.h.apply(self.coupling(t), x, y)
    }

    fn symmetry(&self) -> Symmetry {
        self.h.symmetry()
    }
}

/// A constant dense matrix, mostly for tests.
pub struct DenseGenerator {
    pub matrix: DMatrix<Complex64>,
    pub symmetry: Symmetry,
}

impl Generator for DenseGenerator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, _t: f64, x: &[Complex64], y: &mut [Complex64]) {
        let v = &self.matrix * DVector::from_column_slice(x);
        y.copy_from_slice(v.as_slice());
    }

    fn symmetry(&self) -> Symmetry {
        self.symmetry
    }
}

/// One classical RK4 step of dy/dt = rhs(t, y).
pub fn rk4_step<F>(y: &mut [Complex64], t: f64, dt: f64, mut rhs: F)
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y.len();
    let mut k1 = vec![ZERO; n];
    let mut k2 = vec![ZERO; n];
    let mut k3 = vec![ZERO; n];
    let mut k4 = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];
    rhs(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (0.5 * dt);
    }
    rhs(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (0.5 * dt);
    }
    rhs(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * dt;
    }
    rhs(t + dt, &tmp, &mut k4);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// RK4 step of i dψ/dt = H(t) ψ.
pub fn rk4_schrodinger<G: Generator + ?Sized>(y: &mut [Complex64], t: f64, dt: f64, gen: &G) {
    rk4_step(y, t, dt, |s, x, out| {
        gen.apply(s, x, out);
        for z in out.iter_mut() {
            *z = Complex64::new(z.im, -z.re);
        }
    });
}

/// Diagnostics of one Krylov step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovInfo {
    /// Krylov dimension actually used (smaller on breakdown).
    pub dim: usize,
    pub breakdown: bool,
}

fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn bdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Absolute floor for the breakdown test.
pub const BREAKDOWN_FLOOR: f64 = 1e-18;
/// Relative breakdown threshold against the scale of H q.
pub const BREAKDOWN_REL: f64 = 1e-13;

/// ψ(t+dt) = e^{-iH(t+dt/2)dt} ψ(t) in an n_krylov-dimensional Krylov space.
pub fn lanczos_step<G: Generator + ?Sized>(
    psi: &mut [Complex64],
    t: f64,
    dt: f64,
    gen: &G,
    n_krylov: usize,
) -> KrylovInfo {
    let tm = t + 0.5 * dt;
    match gen.symmetry() {
        Symmetry::Hermitian => hermitian_lanczos(psi, tm, dt, gen, n_krylov),
        Symmetry::ComplexSymmetric => symmetric_lanczos(psi, tm, dt, gen, n_krylov),
        Symmetry::General => arnoldi(psi, tm, dt, gen, n_krylov),
    }
}

fn hermitian_lanczos<G: Generator + ?Sized>(psi: &mut [Complex64], tm: f64, dt: f64, gen: &G, nk: usize) -> KrylovInfo {
    let n = psi.len();
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return KrylovInfo { dim: 0, breakdown: true };
    }
    let nk = nk.min(n).max(1);
    let mut q: Vec<Vec<Complex64>> = vec![psi.iter().map(|z| z / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut r = vec![ZERO; n];
    let mut breakdown = false;
    for k in 0..nk {
        gen.apply(tm, &q[k], &mut r);
        let scale = norm(&r);
        let a = hdot(&q[k], &r).re;
        for i in 0..n {
            r[i] -= q[k][i] * a;
            if k > 0 {
                r[i] -= q[k - 1][i] * beta[k - 1];
            }
        }
        // one reorthogonalization pass keeps the basis orthonormal
        for qj in &q {
            let c = hdot(qj, &r);
            for i in 0..n {
                r[i] -= qj[i] * c;
            }
        }
        alpha.push(a);
        let b = norm(&r);
        if k + 1 == nk {
            break;
        }
        if b < BREAKDOWN_FLOOR.max(BREAKDOWN_REL * scale) {
            breakdown = true;
            break;
        }
        beta.push(b);
        q.push(r.iter().map(|z| z / b).collect());
    }
    let m = alpha.len();
    let mut tmat = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tmat[(i, i)] = alpha[i];
        if i + 1 < m {
            tmat[(i, i + 1)] = beta[i];
            tmat[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(tmat);
    // c = U e^{-iDdt} Uᵀ e1
    let mut c = vec![ZERO; m];
    for j in 0..m {
        let ph = Complex64::from_polar(1.0, -eig.eigenvalues[j] * dt) * eig.eigenvectors[(0, j)];
        for i in 0..m {
            c[i] += ph * eig.eigenvectors[(i, j)];
        }
    }
    psi.iter_mut().for_each(|z| *z = ZERO);
    for (qk, ck) in q.iter().zip(&c) {
        let s = ck * beta0;
        for i in 0..n {
            psi[i] += qk[i] * s;
        }
    }
    KrylovInfo { dim: m, breakdown }
}

fn symmetric_lanczos<G: Generator + ?Sized>(psi: &mut [Complex64], tm: f64, dt: f64, gen: &G, nk: usize) -> KrylovInfo {
    let n = psi.len();
    let beta0 = bdot(psi, psi).sqrt();
    if beta0.norm() == 0.0 {
        return arnoldi(psi, tm, dt, gen, nk);
    }
    let nk = nk.min(n).max(1);
    let mut q: Vec<Vec<Complex64>> = vec![psi.iter().map(|z| z / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<Complex64> = Vec::new();
    let mut r = vec![ZERO; n];
    let mut breakdown = false;
    for k in 0..nk {
        gen.apply(tm, &q[k], &mut r);
        let scale = norm(&r);
        let a = bdot(&q[k], &r);
        for i in 0..n {
            r[i] -= q[k][i] * a;
            if k > 0 {
                r[i] -= q[k - 1][i] * beta[k - 1];
            }
        }
        for qj in &q {
            let c = bdot(qj, &r);
            for i in 0..n {
                r[i] -= qj[i] * c;
            }
        }
        alpha.push(a);
        if k + 1 == nk {
            break;
        }
        let b = bdot(&r, &r).sqrt();
        if norm(&r) < BREAKDOWN_FLOOR.max(BREAKDOWN_REL * scale) {
            breakdown = true;
            break;
        }
        if b.norm() < 1e-8 * norm(&r) {
            // near-serious breakdown of the bilinear recurrence: fall back
            return arnoldi_from(psi, tm, dt, gen, nk);
        }
        beta.push(b);
        q.push(r.iter().map(|z| z / b).collect());
    }
    let m = alpha.len();
    let mut tmat = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        tmat[(i, i)] = alpha[i];
        if i + 1 < m {
            tmat[(i, i + 1)] = beta[i];
            tmat[(i + 1, i)] = beta[i];
        }
    }
    let e = (tmat * Complex64::new(0.0, -dt)).exp();
    psi.iter_mut().for_each(|z| *z = ZERO);
    for (k, qk) in q.iter().enumerate() {
        let s = e[(k, 0)] * beta0;
        for i in 0..n {
            psi[i] += qk[i] * s;
        }
    }
    KrylovInfo { dim: m, breakdown }
}

fn arnoldi<G: Generator + ?Sized>(psi: &mut [Complex64], tm: f64, dt: f64, gen: &G, nk: usize) -> KrylovInfo {
    arnoldi_from(psi, tm, dt, gen, nk)
}

fn arnoldi_from<G: Generator + ?Sized>(psi: &mut [Complex64], tm: f64, dt: f64, gen: &G, nk: usize) -> KrylovInfo {
    let n = psi.len();
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return KrylovInfo { dim: 0, breakdown: true };
    }
    let nk = nk.min(n).max(1);
    let mut q: Vec<Vec<Complex64>> = vec![psi.iter().map(|z| z / beta0).collect()];
    let mut h = DMatrix::<Complex64>::zeros(nk + 1, nk);
    let mut r = vec![ZERO; n];
    let mut m = 0;
    let mut breakdown = false;
    for k in 0..nk {
        gen.apply(tm, &q[k], &mut r);
        let scale = norm(&r);
        for _pass in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let c = hdot(qj, &r);
                h[(j, k)] += c;
                for i in 0..n {
                    r[i] -= qj[i] * c;
                }
            }
        }
        m = k + 1;
        let b = norm(&r);
        if k + 1 == nk {
            break;
        }
        if b < BREAKDOWN_FLOOR.max(BREAKDOWN_REL * scale) {
            breakdown = true;
            break;
        }
        h[(k + 1, k)] = Complex64::new(b, 0.0);
        q.push(r.iter().map(|z| z / b).collect());
    }
    let hm = h.view((0, 0), (m, m)).into_owned();
    let e = (hm * Complex64::new(0.0, -dt)).exp();
    psi.iter_mut().for_each(|z| *z = ZERO);
    for (k, qk) in q.iter().enumerate().take(m) {
        let s = e[(k, 0)] * beta0;
        for i in 0..n {
            psi[i] += qk[i] * s;
        }
    }
    KrylovInfo { dim: m, breakdown }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPlan {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub krylov_dim: usize,
    /// Record observables every this many steps (and at the end).
    pub record_every: usize,
}

impl PropagationPlan {
    pub fn new(t_start: f64, t_end: f64, dt: f64, method: Method, krylov_dim: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if method == Method::Lanczos && krylov_dim < 2 {
            return Err(Error::Config(format!("Krylov dimension must be at least 2, got {krylov_dim}")));
        }
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::Config("propagation interval must be finite".into()));
        }
        Ok(Self { t_start, t_end, dt, method, krylov_dim, record_every: 1 })
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start).abs() / self.dt).round().max(1.0) as usize
    }

    /// Signed step that lands exactly on t_end.
    pub fn signed_dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps() as f64
    }
}

/// Something that runs at a requested time during propagation.
pub trait Hook {
    fn times(&self) -> Vec<f64>;
    fn fire(&mut self, t: f64, state: &mut CisState) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub norm: f64,
    pub alpha0: Complex64,
    pub channel_populations: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// (requested, actual) hook times.
    pub hook_times: Vec<(f64, f64)>,
}

impl Trajectory {
    /// Delimited log: t, norm, Re α0, Im α0, per-channel populations.
    pub fn to_text(&self, channel_labels: &[String]) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("# t_au norm re_alpha0 im_alpha0");
        for l in channel_labels {
            let _ = write!(s, " pop_{l}");
        }
        s.push('\n');
        for p in &self.points {
            let _ = write!(s, "{:.10e} {:.16e} {:.16e} {:.16e}", p.t, p.norm, p.alpha0.re, p.alpha0.im);
            for c in &p.channel_populations {
                let _ = write!(s, " {c:.16e}");
            }
            s.push('\n');
        }
        s
    }
}

fn record(state: &CisState, t: f64) -> TrajectoryPoint {
    TrajectoryPoint {
        t,
        norm: state.norm_sqr(),
        alpha0: state.alpha0(),
        channel_populations: (0..state.basis().channels().len()).map(|c| state.channel_population(c)).collect(),
    }
}

/// Steps `state` over the plan, firing hooks on the nearest step boundaries.
pub fn propagate<G: Generator + ?Sized>(
    state: &mut CisState,
    plan: &PropagationPlan,
    gen: &G,
    hooks: &mut [&mut dyn Hook],
) -> Result<Trajectory> {
    if gen.dim() != state.data().len() {
        return Err(Error::Contract("generator and state dimensions differ".into()));
    }
    let n = plan.steps();
    let dt = plan.signed_dt();
    let mut schedule: Vec<(usize, usize, f64)> = Vec::new();
    for (h, hook) in hooks.iter().enumerate() {
        for t in hook.times() {
            let k = ((t - plan.t_start) / dt).round().clamp(0.0, n as f64) as usize;
            schedule.push((k, h, t));
        }
    }
    schedule.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut traj = Trajectory::default();
    traj.points.push(record(state, plan.t_start));
    let mut next = 0;
    let fire_due = |k: usize, next: &mut usize, state: &mut CisState, hooks: &mut [&mut dyn Hook], traj: &mut Trajectory| -> Result<()> {
        while *next < schedule.len() && schedule[*next].0 == k {
            let (_, h, treq) = schedule[*next];
            let t = plan.t_start + k as f64 * dt;
            hooks[h].fire(t, state)?;
            traj.hook_times.push((treq, t));
            *next += 1;
        }
        Ok(())
    };
    fire_due(0, &mut next, state, hooks, &mut traj)?;
    for k in 0..n {
        let t = plan.t_start + k as f64 * dt;
        match plan.method {
            Method::Rk4 => rk4_schrodinger(state.data_mut(), t, dt, gen),
            Method::Lanczos => {
                lanczos_step(state.data_mut(), t, dt, gen, plan.krylov_dim);
            }
        }
        if !state.is_finite() {
            return Err(Error::NonFinite { step: k });
        }
        fire_due(k + 1, &mut next, state, hooks, &mut traj)?;
        if (k + 1) % plan.record_every.max(1) == 0 || k + 1 == n {
            traj.points.push(record(state, plan.t_start + (k + 1) as f64 * dt));
        }
    }
    Ok(traj)
}
