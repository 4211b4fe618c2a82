//! Sign polynomials, the half projector applied in the eigenbasis, and a
//! statevector simulation of amplitude amplification.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::eigen::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::lattice::Wavefunction;

/// Grid used to certify a sign polynomial.
pub const VERIFY_GRID: usize = 10_000;
/// Largest degree `build_sign_poly` will try.
pub const MAX_SIGN_DEGREE: usize = 20_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QspDegree {
    pub rho: f64,
    pub degree: u64,
    pub base: LogBase,
}

/// `rho = sqrt(2 log(2/(pi eps^2)))/delta`,
/// `d = ceil(0.4 sqrt((rho^2 + log(1/eps)) log(1/eps)))`.
pub fn qsp_degree(delta: f64, epsilon: f64, base: LogBase) -> Result<QspDegree> {
    if !(delta > 0.0 && delta < 1.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < delta, eps < 1, got ({delta}, {epsilon})")));
    }
    let l = base.log(1.0 / epsilon);
    let rho = (2.0 * base.log(2.0 / (PI * epsilon * epsilon))).sqrt() / delta;
    let d = (0.4 * ((rho * rho + l) * l).sqrt()).ceil().max(1.0);
    Ok(QspDegree {
        rho,
        degree: d as u64,
        base,
    })
}

/// Odd polynomial in the Chebyshev basis approximating `sign(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPolynomial {
    pub delta: f64,
    pub epsilon: f64,
    pub degree: usize,
    /// `S(x) = sum_n c_n T_n(x)`; even entries are zero.
    pub coefficients: Vec<f64>,
    /// Steepness of the erf being expanded.
    pub steepness: f64,
    /// `max |S|` on the grid, at most one.
    pub sup_abs: f64,
    /// `max |S - sign|` on the grid outside `(-delta, delta)`.
    pub sup_error: f64,
}

impl SignPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coefficients, x)
    }

    /// `(max |S|, max |S - sign|)` on `points` equispaced nodes of `[-1, 1]`.
    pub fn verify(&self, points: usize) -> (f64, f64) {
        grid_check(&self.coefficients, self.delta, points)
    }
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

fn grid_check(c: &[f64], delta: f64, points: usize) -> (f64, f64) {
    let mut sup_abs: f64 = 0.0;
    let mut sup_err: f64 = 0.0;
    let grid = points.max(2);
    let mut check = |x: f64| {
        let s = clenshaw(c, x);
        sup_abs = sup_abs.max(s.abs());
        if x.abs() >= delta {
            sup_err = sup_err.max((s - x.signum()).abs());
        }
    };
    for i in 0..grid {
        check(-1.0 + 2.0 * i as f64 / (grid - 1) as f64);
    }
    check(delta);
    check(-delta);
    (sup_abs, sup_err)
}

/// Chebyshev coefficients of `erf(k x)` up to `degree`, odd terms only.
fn erf_chebyshev(k: f64, degree: usize) -> Vec<f64> {
    let nodes = (4 * degree + 64).max(512);
    let theta: Vec<f64> = (0..nodes).map(|j| PI * (j as f64 + 0.5) / nodes as f64).collect();
    let f: Vec<f64> = theta.iter().map(|t| erf(k * t.cos())).collect();
    (0..=degree)
        .map(|n| {
            if n % 2 == 0 {
                return 0.0;
            }
            let s: f64 = f.iter().zip(&theta).map(|(fj, t)| fj * (n as f64 * t).cos()).sum();
            2.0 * s / nodes as f64
        })
        .collect()
}

/// Expands `erf(k x)` with `erfc(k delta) <= eps/2`, truncates where the
/// tail is small, rescales so `|S| <= 1` and certifies on a grid.
pub fn build_sign_poly(delta: f64, epsilon: f64) -> Result<SignPolynomial> {
    if !(delta > 0.0 && delta < 1.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < delta, eps < 1, got ({delta}, {epsilon})")));
    }
    let mut k = 1.0 / delta;
    while erfc(k * delta) > epsilon / 4.0 {
        k *= 1.05;
    }
    let estimate = qsp_degree(delta, epsilon, LogBase::Natural)?.degree as usize;
    let mut degree = (estimate | 1).max(3);
    let mut last = (0, f64::INFINITY);
    while degree <= MAX_SIGN_DEGREE {
        let mut c = erf_chebyshev(k, degree);
        let (sup_abs, _) = grid_check(&c, delta, VERIFY_GRID);
        if sup_abs > 1.0 {
            c.iter_mut().for_each(|v| *v /= sup_abs);
        }
        let (sup_abs, sup_error) = grid_check(&c, delta, VERIFY_GRID);
        if sup_abs <= 1.0 && sup_error <= epsilon {
            return Ok(SignPolynomial {
                delta,
                epsilon,
                degree,
                coefficients: c,
                steepness: k,
                sup_abs,
                sup_error,
            });
        }
        last = (degree, sup_error);
        degree = ((degree as f64 * 1.25) as usize) | 1;
    }
    Err(Error::PolynomialTolerance {
        degree: last.0,
        achieved: last.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionTarget {
    LowEnergy,
    Complement,
}

/// Energy window of the projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorWindow {
    /// Threshold `Lambda`.
    pub cut: f64,
    /// Block-encoding normalization `lambda`.
    pub norm: f64,
}

impl ProjectorWindow {
    pub fn new(cut: f64, norm: f64) -> Result<Self> {
        if !(norm > 0.0) || cut.abs() > norm {
            return Err(Error::InvalidArgument(format!("Lambda = {cut} outside [-lambda, lambda] with lambda = {norm}")));
        }
        Ok(Self { cut, norm })
    }

    pub fn scale(&self) -> f64 {
        self.norm + self.cut.abs()
    }

    pub fn argument(&self, e: f64) -> f64 {
        (e - self.cut) / self.scale()
    }

    /// `Lambda + delta (lambda + |Lambda|)`
    pub fn upper(&self, delta: f64) -> f64 {
        self.cut + delta * self.scale()
    }

    /// `Lambda - delta (lambda + |Lambda|)`
    pub fn lower(&self, delta: f64) -> f64 {
        self.cut - delta * self.scale()
    }

    /// Per-eigenvalue amplitude multiplier `(1 -+ S)/2`.
    pub fn multiplier(&self, poly: &SignPolynomial, e: f64, target: ProjectionTarget) -> f64 {
        let s = poly.eval(self.argument(e).clamp(-1.0, 1.0));
        match target {
            ProjectionTarget::LowEnergy => 0.5 * (1.0 - s),
            ProjectionTarget::Complement => 0.5 * (1.0 + s),
        }
    }

    fn in_target(&self, delta: f64, e: f64, target: ProjectionTarget) -> bool {
        match target {
            ProjectionTarget::LowEnergy => e <= self.upper(delta),
            ProjectionTarget::Complement => e >= self.lower(delta),
        }
    }

    /// Eigenvalues safely inside the target, where the multiplier is near one.
    fn in_promise(&self, delta: f64, e: f64, target: ProjectionTarget) -> bool {
        match target {
            ProjectionTarget::LowEnergy => e <= self.lower(delta),
            ProjectionTarget::Complement => e >= self.upper(delta),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub projected: Wavefunction,
    /// Norm outside the shifted target space.
    pub residual: f64,
    /// Norm inside the shifted target space.
    pub retained: f64,
    /// Square root of the input weight on the promise region.
    pub gamma: f64,
    pub target: ProjectionTarget,
}

fn coefficients(spec: &SpectralDecomposition, psi: &Wavefunction) -> Result<DVector<f64>> {
    if !spec.complete {
        return Err(Error::InvalidArgument("projector needs the full spectrum".into()));
    }
    if psi.amplitudes.len() != spec.basis.dim() {
        return Err(Error::SectorMismatch);
    }
    Ok(spec.eigenvectors.tr_mul(&psi.amplitudes))
}

/// Weight of `psi` on eigenstates within the promise region, square-rooted.
pub fn promise_overlap(spec: &SpectralDecomposition, window: &ProjectorWindow, delta: f64, psi: &Wavefunction, target: ProjectionTarget) -> Result<f64> {
    let alpha = coefficients(spec, psi)?;
    Ok(spec
        .eigenvalues
        .iter()
        .zip(alpha.iter())
        .filter(|(&e, _)| window.in_promise(delta, e, target))
        .map(|(_, a)| a * a)
        .sum::<f64>()
        .sqrt())
}

/// Applies `(I -+ S[(H - Lambda)/(lambda + |Lambda|)])/2` in the eigenbasis.
pub fn apply_half_projector(
    spec: &SpectralDecomposition,
    window: &ProjectorWindow,
    poly: &SignPolynomial,
    psi: &Wavefunction,
    target: ProjectionTarget,
) -> Result<ProjectionOutcome> {
    if (psi.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("input norm {} is not one", psi.norm())));
    }
    let alpha = coefficients(spec, psi)?;
    let mut out = alpha.clone();
    let (mut inside, mut outside, mut promise) = (0.0, 0.0, 0.0);
    for (k, &e) in spec.eigenvalues.iter().enumerate() {
        out[k] *= window.multiplier(poly, e, target);
        if window.in_target(poly.delta, e, target) {
            inside += out[k] * out[k];
        } else {
            outside += out[k] * out[k];
        }
        if window.in_promise(poly.delta, e, target) {
            promise += alpha[k] * alpha[k];
        }
    }
    Ok(ProjectionOutcome {
        projected: Wavefunction::subnormalized(spec.basis.clone(), &spec.eigenvectors * out),
        residual: outside.sqrt(),
        retained: inside.sqrt(),
        gamma: promise.sqrt(),
        target,
    })
}

/// Exact spectral projector onto eigenstates with `E <= threshold`.
pub fn spectral_projector(spec: &SpectralDecomposition, threshold: f64) -> DMatrix<f64> {
    let cols: Vec<usize> = (0..spec.len()).filter(|&k| spec.eigenvalues[k] <= threshold).collect();
    let v = spec.eigenvectors.select_columns(&cols);
    &v * v.transpose()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationPlan {
    pub gamma: f64,
    pub epsilon: f64,
    /// `ceil(1 + (pi/(2 asin(gamma (1 - eps gamma))) - 1)/2)`, the
    /// state-preparation repetition count.
    pub repetitions: u64,
    /// `ceil((pi/asin(gamma) - 1)/2)`
    pub appendix_iterations: u64,
    /// Grover iterates, one fewer than the repetitions.
    pub grover_iterations: u64,
    /// `sin^2((2k+1) theta)` with `sin theta = gamma (1 - eps gamma/2)`.
    pub predicted_fidelity: f64,
}

/// Ceiling that ignores representation noise just above an integer.
pub fn tolerant_ceil(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

pub fn amplification_iterations(gamma: f64, epsilon: f64) -> Result<AmplificationPlan> {
    if !(gamma > 0.0 && gamma <= 1.0) || !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("need 0 < gamma <= 1 and 0 <= eps < 1, got ({gamma}, {epsilon})")));
    }
    let a = gamma * (1.0 - epsilon * gamma);
    let repetitions = tolerant_ceil(1.0 + 0.5 * (PI / (2.0 * a.asin()) - 1.0)).max(1.0) as u64;
    let appendix_iterations = tolerant_ceil(0.5 * (PI / gamma.asin() - 1.0)).max(1.0) as u64;
    let k = repetitions - 1;
    let theta = (gamma * (1.0 - epsilon * gamma / 2.0)).min(1.0).asin();
    Ok(AmplificationPlan {
        gamma,
        epsilon,
        repetitions,
        appendix_iterations,
        grover_iterations: k,
        predicted_fidelity: ((2 * k + 1) as f64 * theta).sin().powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    /// Norm of the flagged (ancilla zero) block.
    pub good_amplitude: f64,
    /// `||(1 - P) g|| / ||g||` for the flagged block `g`.
    pub infidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationTrace {
    pub rows: Vec<TraceRow>,
    /// Initial good amplitude `sin theta`.
    pub sin_theta: f64,
    pub exact_angle: bool,
}

impl AmplificationTrace {
    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has the initial row")
    }
}

/// Amplitude amplification over the dilation `A|0>|start> = |0> M a + |1> sqrt(1 - M^2) a`
/// with the iterate `Q = (2|Psi><Psi| - I)(I - 2 Pi_good)`.
///
/// `multipliers` are the per-eigenvalue block amplitudes `M_k` in `[0, 1]`
/// and `good` flags eigenstates counted as fidelity. With `exact_angle` an
/// extra ancilla rotation lowers `theta` so that `(2k+1) theta = pi/2`.
pub fn simulate_amplification(
    alpha: &DVector<f64>,
    multipliers: &[f64],
    good: &[bool],
    iterations: u64,
    exact_angle: bool,
) -> Result<AmplificationTrace> {
    let n = alpha.len();
    if multipliers.len() != n || good.len() != n {
        return Err(Error::InvalidArgument("multiplier, flag and amplitude lengths differ".into()));
    }
    if multipliers.iter().any(|m| !(-1e-12..=1.0 + 1e-12).contains(m)) {
        return Err(Error::InvalidArgument("block amplitudes must lie in [0, 1]".into()));
    }
    let mut psi = DVector::zeros(2 * n + 1);
    for k in 0..n {
        let m = multipliers[k].clamp(0.0, 1.0);
        psi[k] = m * alpha[k];
        psi[n + k] = (1.0 - m * m).sqrt() * alpha[k];
    }
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    psi /= norm;
    let sin_theta = psi.rows(0, n).norm();
    if sin_theta == 0.0 {
        return Err(Error::ZeroNorm);
    }
    if exact_angle {
        let target = PI / (2.0 * (2 * iterations + 1) as f64);
        let s = target.sin() / sin_theta;
        if s < 1.0 {
            psi *= s;
            psi[2 * n] = (1.0 - s * s).sqrt();
        }
    }
    let row = |it: u64, v: &DVector<f64>| {
        let g = v.rows(0, n);
        let gn = g.norm();
        let bad: f64 = (0..n).filter(|&k| !good[k]).map(|k| g[k] * g[k]).sum();
        TraceRow {
            iteration: it,
            good_amplitude: gn,
            infidelity: if gn > 0.0 { bad.sqrt() / gn } else { f64::NAN },
        }
    };
    let mut rows = vec![row(0, &psi)];
    let mut v = psi.clone();
    for it in 1..=iterations {
        v.rows_mut(0, n).neg_mut();
        let overlap = psi.dot(&v);
        v = &psi * (2.0 * overlap) - v;
        rows.push(row(it, &v));
    }
    Ok(AmplificationTrace {
        rows,
        sin_theta,
        exact_angle,
    })
}

/// Runs the projector and amplification together on one input state.
#[derive(Debug, Clone)]
pub struct AmplifiedPreparation {
    pub plan: AmplificationPlan,
    pub projection: ProjectionOutcome,
    pub trace: AmplificationTrace,
}

/// Prepares `psi` into the low-energy space, amplified for the measured
/// promise overlap `gamma`. The projector precision must be at most
/// `eps gamma`; a polynomial built for a smaller `gamma` is acceptable.
pub fn prepare_low_energy(
    spec: &SpectralDecomposition,
    window: &ProjectorWindow,
    poly: &SignPolynomial,
    epsilon: f64,
    psi: &Wavefunction,
    exact_angle: bool,
) -> Result<AmplifiedPreparation> {
    let delta = poly.delta;
    let gamma = promise_overlap(spec, window, delta, psi, ProjectionTarget::LowEnergy)?;
    if gamma == 0.0 {
        return Err(Error::ZeroNorm);
    }
    if poly.epsilon > epsilon * gamma * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "projector precision {} exceeds eps gamma = {}",
            poly.epsilon,
            epsilon * gamma
        )));
    }
    let projection = apply_half_projector(spec, window, poly, psi, ProjectionTarget::LowEnergy)?;
    let plan = amplification_iterations(gamma, epsilon)?;
    let alpha = coefficients(spec, psi)?;
    let multipliers: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&e| window.multiplier(poly, e, ProjectionTarget::LowEnergy))
        .collect();
    let good: Vec<bool> = spec.eigenvalues.iter().map(|&e| e <= window.upper(delta)).collect();
    let trace = simulate_amplification(&alpha, &multipliers, &good, plan.grover_iterations, exact_angle)?;
    Ok(AmplifiedPreparation { plan, projection, trace })
}
