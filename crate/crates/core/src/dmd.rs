//! Downfolding regression: sampling, design matrices, least squares and the
//! verdict loop over descriptor ansatze.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::lattice::{build_descriptor, DescriptorKind, FockBasis, LatticeSpec, ManyBodyOperator, Sector};

/// Condition number above which a design is treated as collinear.
pub const COLLINEARITY_THRESHOLD: f64 = 1e8;

/// Candidate descriptors for the effective model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorPool {
    pub kinds: Vec<DescriptorKind>,
}

impl DescriptorPool {
    /// Whether every descriptor commutes with the global spin flip.
    pub fn spin_flip_symmetric(&self) -> bool {
        self.kinds.iter().all(|k| !matches!(k, DescriptorKind::RdmElement { .. }))
    }

    /// Labels must be unique and the pool no larger than `(2N)^4`.
    pub fn new(kinds: Vec<DescriptorKind>, sites: usize) -> Result<Self> {
        let labels: BTreeSet<String> = kinds.iter().map(|k| k.label()).collect();
        if labels.len() != kinds.len() {
            return Err(Error::InvalidArgument("descriptor labels must be unique".into()));
        }
        let bound = (2 * sites).pow(4);
        if kinds.len() > bound {
            return Err(Error::InvalidArgument(format!("pool of {} exceeds the (2N)^4 = {bound} bound", kinds.len())));
        }
        Ok(Self { kinds })
    }

    /// Spin-spin, double occupancy and hopping totals.
    pub fn standard() -> Self {
        Self {
            kinds: vec![
                DescriptorKind::TotalSpinSpin,
                DescriptorKind::TotalDoubleOccupancy,
                DescriptorKind::TotalHopping,
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.kinds.iter().map(|k| k.label()).collect()
    }

    /// Builds every descriptor on one sector.
    pub fn instantiate(&self, spec: &LatticeSpec, basis: &Arc<FockBasis>) -> Result<Vec<ManyBodyOperator>> {
        self.kinds.iter().map(|k| build_descriptor(spec, basis.clone(), k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    LowEnergy,
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Noise {
    Truncation { bits: u32 },
    Additive { epsilon: f64 },
}

/// One sampled state: descriptor coordinates and energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub sector: Sector,
    pub energy: f64,
    pub descriptors: Vec<f64>,
    pub membership: Membership,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Noise>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingPolicy {
    /// Lowest energies first.
    Eigenstates,
    /// Farthest-point selection in descriptor coordinates.
    ImageSaturating,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub records: Vec<SampleRecord>,
    /// Fewer candidates than requested.
    pub short: bool,
}

/// `<v_k|d_j|v_k>` for every eigenvector and descriptor.
pub fn descriptor_table(spec: &SpectralDecomposition, ops: &[ManyBodyOperator]) -> Vec<Vec<f64>> {
    (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let v = spec.eigenvectors.column(k);
            ops.iter().map(|op| op.matrix.quadratic_form(v.as_slice())).collect()
        })
        .collect()
}

fn records_from(spec: &SpectralDecomposition, ops: &[ManyBodyOperator], keep: impl Fn(f64) -> bool, membership: Membership) -> Vec<SampleRecord> {
    let sector = spec.basis.sector();
    let table = descriptor_table(spec, ops);
    spec.eigenvalues
        .iter()
        .zip(table)
        .enumerate()
        .filter(|(_, (e, _))| keep(**e))
        .map(|(k, (&energy, descriptors))| SampleRecord {
            id: format!("{}u{}d#{k}", sector.n_up, sector.n_dn),
            sector,
            energy,
            descriptors,
            membership,
            noise: None,
        })
        .collect()
}

/// Eigenstates with `E <= cut`.
pub fn sample_low_energy(
    spec: &SpectralDecomposition,
    ops: &[ManyBodyOperator],
    cut: f64,
    count: usize,
    policy: SamplingPolicy,
) -> SampleSet {
    let candidates = records_from(spec, ops, |e| e <= cut, Membership::LowEnergy);
    select(candidates, count, policy, None)
}

/// Eigenstates with `E > cut`. The image-saturating policy favours states
/// whose descriptors fall near `reference`, the low-energy image.
pub fn sample_complement(
    spec: &SpectralDecomposition,
    ops: &[ManyBodyOperator],
    cut: f64,
    count: usize,
    policy: SamplingPolicy,
    reference: Option<&[SampleRecord]>,
) -> SampleSet {
    let candidates = records_from(spec, ops, |e| e > cut, Membership::Complement);
    select(candidates, count, policy, reference)
}

/// Applies a sampling policy to precomputed candidates.
pub fn select(
    mut candidates: Vec<SampleRecord>,
    count: usize,
    policy: SamplingPolicy,
    reference: Option<&[SampleRecord]>,
) -> SampleSet {
    let short = candidates.len() < count;
    if candidates.len() <= count {
        return SampleSet { records: candidates, short };
    }
    let records = match policy {
        SamplingPolicy::Eigenstates => {
            candidates.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            candidates.truncate(count);
            candidates
        }
        SamplingPolicy::ImageSaturating => {
            let coords: Vec<&[f64]> = candidates.iter().map(|r| r.descriptors.as_slice()).collect();
            let scale = coordinate_scale(&coords);
            let order = match reference.filter(|r| !r.is_empty()) {
                Some(reference) => {
                    let hull = BoundingBox::from_records(reference).expect("non-empty reference");
                    let mut idx: Vec<usize> = (0..candidates.len()).collect();
                    let dist: Vec<f64> = coords.iter().map(|c| hull.scaled_distance(c, &scale)).collect();
                    idx.sort_by(|&a, &b| {
                        dist[a].total_cmp(&dist[b]).then(candidates[a].energy.total_cmp(&candidates[b].energy))
                    });
                    idx.truncate(count);
                    idx
                }
                None => farthest_point(&coords, &scale, count, &candidates),
            };
            let mut picked: Vec<SampleRecord> = order.into_iter().map(|i| candidates[i].clone()).collect();
            picked.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            picked
        }
    };
    SampleSet { records, short }
}

fn coordinate_scale(coords: &[&[f64]]) -> Vec<f64> {
    let dim = coords.first().map_or(0, |c| c.len());
    (0..dim)
        .map(|j| {
            let lo = coords.iter().map(|c| c[j]).fold(f64::INFINITY, f64::min);
            let hi = coords.iter().map(|c| c[j]).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > 1e-12 {
                1.0 / (hi - lo)
            } else {
                0.0
            }
        })
        .collect()
}

/// Greedy farthest-point selection seeded by the lowest-energy candidate.
fn farthest_point(coords: &[&[f64]], scale: &[f64], count: usize, candidates: &[SampleRecord]) -> Vec<usize> {
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(scale).map(|((x, y), s)| ((x - y) * s).powi(2)).sum::<f64>()
    };
    let first = (0..candidates.len())
        .min_by(|&a, &b| candidates[a].energy.total_cmp(&candidates[b].energy))
        .unwrap();
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = coords.iter().map(|c| dist(c, coords[first])).collect();
    while chosen.len() < count {
        let mut best = None;
        let mut best_d = -1.0;
        for (i, &d) in nearest.iter().enumerate() {
            if !chosen.contains(&i) && d > best_d + 1e-14 {
                best_d = d;
                best = Some(i);
            }
        }
        let Some(next) = best else { break };
        chosen.push(next);
        for (i, c) in coords.iter().enumerate() {
            nearest[i] = nearest[i].min(dist(c, coords[next]));
        }
    }
    chosen
}

/// Design matrix over selected pool columns and the energy response.
pub fn evaluate_design(samples: &[SampleRecord], columns: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(samples.len(), columns.len(), |i, j| samples[i].descriptors[columns[j]]);
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.energy));
    (x, y)
}

/// Ordinary least-squares fit of `y ~ X g + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub columns: Vec<usize>,
    pub labels: Vec<String>,
    /// Withheld when the design is rank deficient.
    pub couplings: Option<Vec<f64>>,
    pub intercept: Option<f64>,
    /// `max_i |y_i - (X g + c)_i|`
    pub max_residual: f64,
    /// `||y - X g - c||_2`. Bounds `max_residual` and never decreases as
    /// samples are appended.
    pub residual_norm: f64,
    pub rank: usize,
    pub condition_number: f64,
    pub samples: usize,
    /// Minimum augmented-model energy over complement samples, once checked.
    pub penalty_min: Option<f64>,
    #[serde(skip)]
    solution: Vec<f64>,
    #[serde(skip)]
    with_intercept: bool,
}

impl RegressionFit {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.solution.len()
    }

    /// Fitted energy at a descriptor vector indexed by pool position.
    pub fn predict(&self, descriptors: &[f64]) -> f64 {
        let mut e = 0.0;
        for (k, &c) in self.columns.iter().enumerate() {
            e += self.solution[k] * descriptors[c];
        }
        if self.with_intercept {
            e += self.solution[self.columns.len()];
        }
        e
    }
}

pub fn fit_linear(x: &DMatrix<f64>, y: &DVector<f64>, with_intercept: bool) -> Result<RegressionFit> {
    let cols: Vec<usize> = (0..x.ncols()).collect();
    fit_columns(x, y, &cols, &vec![String::new(); x.ncols()], with_intercept)
}

/// Fit over pool columns of `samples`.
pub fn fit_samples(samples: &[SampleRecord], columns: &[usize], labels: &[String], with_intercept: bool) -> Result<RegressionFit> {
    let (x, y) = evaluate_design(samples, columns);
    let names: Vec<String> = columns.iter().map(|&c| labels.get(c).cloned().unwrap_or_default()).collect();
    fit_columns(&x, &y, columns, &names, with_intercept)
}

fn fit_columns(x: &DMatrix<f64>, y: &DVector<f64>, columns: &[usize], labels: &[String], with_intercept: bool) -> Result<RegressionFit> {
    let (rows, p) = (x.nrows(), x.ncols());
    let params = p + with_intercept as usize;
    if rows < params || (with_intercept && rows < p + 1) {
        return Err(Error::InvalidArgument(format!("{rows} samples cannot fit {params} parameters")));
    }
    let mut a = DMatrix::zeros(rows, params);
    a.columns_mut(0, p).copy_from(x);
    if with_intercept {
        a.column_mut(p).fill(1.0);
    }
    let (solution, rank, condition_number) = if params == 0 {
        (Vec::new(), 0, 1.0)
    } else {
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let tol = smax * (rows.max(params) as f64) * f64::EPSILON * 16.0;
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let beta = svd.solve(y, tol).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let cond = if smin > tol { smax / smin } else { f64::INFINITY };
        (beta.iter().copied().collect::<Vec<f64>>(), rank, cond)
    };
    let fitted = if params == 0 { DVector::zeros(rows) } else { &a * DVector::from_column_slice(&solution) };
    let residual = y - fitted;
    let max_residual = residual.amax();
    let deficient = rank < params;
    Ok(RegressionFit {
        columns: columns.to_vec(),
        labels: labels.to_vec(),
        couplings: (!deficient).then(|| solution[..p].to_vec()),
        intercept: (!deficient && with_intercept).then(|| solution[p]),
        max_residual,
        residual_norm: residual.norm(),
        rank,
        condition_number,
        samples: rows,
        penalty_min: None,
        solution,
        with_intercept,
    })
}

/// Axis-aligned box around descriptor vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn from_records(records: &[SampleRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyHull)?;
        let mut lo = first.descriptors.clone();
        let mut hi = first.descriptors.clone();
        for r in records {
            for (j, &v) in r.descriptors.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.iter().enumerate().all(|(j, &v)| {
            let pad = 1e-9 * (1.0 + self.hi[j].abs().max(self.lo[j].abs()));
            v >= self.lo[j] - pad && v <= self.hi[j] + pad
        })
    }

    fn scaled_distance(&self, point: &[f64], scale: &[f64]) -> f64 {
        point
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let gap = if v < self.lo[j] {
                    self.lo[j] - v
                } else if v > self.hi[j] {
                    v - self.hi[j]
                } else {
                    0.0
                };
                (gap * scale[j]).powi(2)
            })
            .sum::<f64>()
    }
}

/// `H'' = P H' P + (1 - P)(Lambda + sigma)(1 - P)` with `P` the hull test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedModel {
    pub fit: RegressionFit,
    pub hull: BoundingBox,
    pub cut: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedEnergy {
    pub energy: f64,
    pub inside: bool,
}

impl AugmentedModel {
    pub fn evaluate(&self, descriptors: &[f64]) -> AugmentedEnergy {
        if self.hull.contains(descriptors) {
            AugmentedEnergy {
                energy: self.fit.predict(descriptors),
                inside: true,
            }
        } else {
            AugmentedEnergy {
                energy: self.cut + self.sigma,
                inside: false,
            }
        }
    }

    /// Complement samples inside the hull whose fitted energy is `<= Lambda`.
    pub fn intruders<'a>(&self, complement: &'a [SampleRecord]) -> Vec<&'a SampleRecord> {
        complement
            .iter()
            .filter(|r| {
                let e = self.evaluate(&r.descriptors);
                e.inside && e.energy <= self.cut
            })
            .collect()
    }
}

/// Builds the augmented model from a fit and the low-energy samples.
pub fn augment_effective(fit: &RegressionFit, low: &[SampleRecord], cut: f64, sigma: f64) -> Result<AugmentedModel> {
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(AugmentedModel {
        fit: fit.clone(),
        hull: BoundingBox::from_records(low)?,
        cut,
        sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictCase {
    ATrueNegative,
    B1FewerDescriptors,
    B1Undersampling,
    B2TruePositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibilityVerdict {
    pub case: VerdictCase,
    pub max_residual: f64,
    pub condition_number: f64,
    /// Descriptors whose removal keeps the residual below target.
    pub removable: Vec<String>,
    /// Alternative ansatze collinear with this one that fit equally well.
    pub collinear_with: Vec<Vec<String>>,
    pub intruders: Vec<String>,
    pub penalty_min: Option<f64>,
    pub note: String,
}

/// Everything the classifier needs beyond the fit itself.
#[derive(Debug, Clone)]
pub struct ClassifyContext<'a> {
    pub low: &'a [SampleRecord],
    pub complement: &'a [SampleRecord],
    pub labels: &'a [String],
    pub cut: f64,
    pub eps_target: f64,
    pub sigma: f64,
    pub collinearity_threshold: f64,
}

/// Sorts a fit into the cases of the unknown-descriptor search.
///
/// Order of checks: residual against target, exact or numerical
/// collinearity of the ansatz, drop-one removability, collinear
/// alternatives in the pool, then intruders under the augmented model.
pub fn classify_fit(fit: &RegressionFit, ctx: &ClassifyContext) -> Result<CompressibilityVerdict> {
    let mut verdict = CompressibilityVerdict {
        case: VerdictCase::B2TruePositive,
        max_residual: fit.max_residual,
        condition_number: fit.condition_number,
        removable: Vec::new(),
        collinear_with: Vec::new(),
        intruders: Vec::new(),
        penalty_min: None,
        note: String::new(),
    };
    if !(fit.max_residual < ctx.eps_target) {
        verdict.case = VerdictCase::ATrueNegative;
        verdict.note = format!("residual {:.3e} >= target {:.3e}", fit.max_residual, ctx.eps_target);
        return Ok(verdict);
    }
    if fit.rank_deficient() || fit.condition_number > ctx.collinearity_threshold {
        verdict.case = VerdictCase::B1Undersampling;
        verdict.note = format!("ansatz design is collinear (rank {}, condition {:.3e})", fit.rank, fit.condition_number);
        return Ok(verdict);
    }
    for drop in 0..fit.columns.len() {
        let kept: Vec<usize> = fit.columns.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &c)| c).collect();
        let refit = fit_samples(ctx.low, &kept, ctx.labels, fit.with_intercept)?;
        if refit.max_residual < ctx.eps_target {
            verdict.removable.push(label_of(ctx.labels, fit.columns[drop]));
        }
    }
    if !verdict.removable.is_empty() {
        verdict.case = VerdictCase::B1FewerDescriptors;
        verdict.note = format!("removable: {}", verdict.removable.join(", "));
        return Ok(verdict);
    }
    let pool = ctx.low.first().map_or(0, |r| r.descriptors.len());
    for alt in combinations(pool, fit.columns.len()) {
        if alt == fit.columns {
            continue;
        }
        let mut union: Vec<usize> = fit.columns.iter().chain(&alt).copied().collect();
        union.sort_unstable();
        union.dedup();
        if union.len() + fit.with_intercept as usize > ctx.low.len() {
            continue;
        }
        let joint = fit_samples(ctx.low, &union, ctx.labels, fit.with_intercept)?;
        if joint.rank_deficient() || joint.condition_number > ctx.collinearity_threshold {
            let other = fit_samples(ctx.low, &alt, ctx.labels, fit.with_intercept)?;
            if other.max_residual < ctx.eps_target {
                verdict.collinear_with.push(alt.iter().map(|&c| label_of(ctx.labels, c)).collect());
            }
        }
    }
    if !verdict.collinear_with.is_empty() {
        verdict.case = VerdictCase::B1Undersampling;
        verdict.note = "equivalent collinear ansatz in the pool".into();
        return Ok(verdict);
    }
    if !ctx.complement.is_empty() {
        let model = augment_effective(fit, ctx.low, ctx.cut, ctx.sigma)?;
        let min = ctx
            .complement
            .iter()
            .map(|r| model.evaluate(&r.descriptors).energy)
            .fold(f64::INFINITY, f64::min);
        verdict.penalty_min = Some(min);
        verdict.intruders = model.intruders(ctx.complement).iter().map(|r| r.id.clone()).collect();
        if !verdict.intruders.is_empty() {
            verdict.case = VerdictCase::B1Undersampling;
            verdict.note = format!("{} intruder states inside the image", verdict.intruders.len());
            return Ok(verdict);
        }
    }
    verdict.note = "all descriptors required, no collinearity, complement separated".into();
    Ok(verdict)
}

fn label_of(labels: &[String], c: usize) -> String {
    labels.get(c).cloned().unwrap_or_else(|| format!("d{c}"))
}

/// `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverConfig {
    pub cut: f64,
    pub eps_target: f64,
    /// Maximum number of ansatze to try.
    pub budget: usize,
    pub max_kappa: usize,
    /// Low-energy samples drawn per iteration; `None` takes every candidate.
    pub low_per_iteration: Option<usize>,
    pub complement_per_iteration: Option<usize>,
    pub sigma: f64,
    pub collinearity_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub ansatz: Vec<String>,
    pub low_samples: usize,
    pub complement_samples: usize,
    pub fit: RegressionFit,
    pub verdict: CompressibilityVerdict,
}

impl TraceEntry {
    /// One line of the verdict log.
    pub fn log_line(&self) -> String {
        let couplings = match &self.fit.couplings {
            Some(g) => g.iter().map(|v| format!("{v:.10}")).collect::<Vec<_>>().join(","),
            None => "withheld".into(),
        };
        format!(
            "iter={} ansatz=[{}] low={} comp={} residual={:.6e} cond={:.3e} g=[{}] verdict={:?} note={}",
            self.iteration,
            self.ansatz.join(","),
            self.low_samples,
            self.complement_samples,
            self.fit.max_residual,
            self.fit.condition_number,
            couplings,
            self.verdict.case,
            self.verdict.note
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub accepted: Option<RegressionFit>,
    pub trace: Vec<TraceEntry>,
    pub compressible: bool,
    pub summary: String,
}

/// Iterates ansatze by increasing size then lexicographically, concatenating
/// samples across iterations, until a true positive or the budget runs out.
pub fn discover(
    pool_labels: &[String],
    low_candidates: &[SampleRecord],
    complement_candidates: &[SampleRecord],
    config: &DiscoverConfig,
) -> Result<DiscoveryReport> {
    let p = pool_labels.len();
    let max_kappa = config.max_kappa.min(p);
    let ansatze: Vec<Vec<usize>> = (1..=max_kappa).flat_map(|k| combinations(p, k)).collect();
    if config.budget > ansatze.len() {
        return Err(Error::InvalidArgument(format!(
            "budget {} exceeds the {} available ansatze",
            config.budget,
            ansatze.len()
        )));
    }
    let mut low: Vec<SampleRecord> = Vec::new();
    let mut comp: Vec<SampleRecord> = Vec::new();
    let mut trace = Vec::new();
    for (iteration, ansatz) in ansatze.into_iter().take(config.budget).enumerate() {
        let project = |r: &SampleRecord| SampleRecord {
            descriptors: ansatz.iter().map(|&c| r.descriptors[c]).collect(),
            ..r.clone()
        };
        let count = config.low_per_iteration.unwrap_or(low_candidates.len());
        let projected: Vec<SampleRecord> = low_candidates.iter().map(project).collect();
        for r in select(projected, count, SamplingPolicy::ImageSaturating, None).records {
            if !low.iter().any(|x| x.id == r.id && x.sector == r.sector) {
                let full = low_candidates.iter().find(|x| x.id == r.id && x.sector == r.sector).unwrap();
                low.push(full.clone());
            }
        }
        let ccount = config.complement_per_iteration.unwrap_or(complement_candidates.len());
        let cproj: Vec<SampleRecord> = complement_candidates.iter().map(project).collect();
        let lproj: Vec<SampleRecord> = low.iter().map(project).collect();
        for r in select(cproj, ccount, SamplingPolicy::ImageSaturating, Some(&lproj)).records {
            if !comp.iter().any(|x| x.id == r.id && x.sector == r.sector) {
                let full = complement_candidates.iter().find(|x| x.id == r.id && x.sector == r.sector).unwrap();
                comp.push(full.clone());
            }
        }
        let fit = fit_samples(&low, &ansatz, pool_labels, true)?;
        let ctx = ClassifyContext {
            low: &low,
            complement: &comp,
            labels: pool_labels,
            cut: config.cut,
            eps_target: config.eps_target,
            sigma: config.sigma,
            collinearity_threshold: config.collinearity_threshold,
        };
        let verdict = classify_fit(&fit, &ctx)?;
        let mut fit = fit;
        fit.penalty_min = verdict.penalty_min;
        let accepted = verdict.case == VerdictCase::B2TruePositive;
        trace.push(TraceEntry {
            iteration,
            ansatz: ansatz.iter().map(|&c| label_of(pool_labels, c)).collect(),
            low_samples: low.len(),
            complement_samples: comp.len(),
            fit: fit.clone(),
            verdict,
        });
        if accepted {
            let summary = format!("compressible with [{}]", trace.last().unwrap().ansatz.join(", "));
            return Ok(DiscoveryReport {
                accepted: Some(fit),
                trace,
                compressible: true,
                summary,
            });
        }
    }
    Ok(DiscoveryReport {
        accepted: None,
        summary: format!(
            "not compressible at (Lambda = {}, kappa <= {}, eps = {}) within {} ansatze",
            config.cut, max_kappa, config.eps_target, config.budget
        ),
        trace,
        compressible: false,
    })
}

/// `||(sum g_i d_i + c - E) v||` for an eigenvector, the operator-level
/// consistency check behind functional matching.
pub fn operator_residual(fit: &RegressionFit, ops: &[ManyBodyOperator], energy: f64, v: &DVector<f64>) -> Option<f64> {
    let g = fit.couplings.as_ref()?;
    let mut out = v * (fit.intercept.unwrap_or(0.0) - energy);
    for (k, &c) in fit.columns.iter().enumerate() {
        out += ops[c].apply(v) * g[k];
    }
    Some(out.norm())
}

/// Low-band and complement samples of a Hubbard lattice over every sector
/// at its filling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSamples {
    pub low: Vec<SampleRecord>,
    pub complement: Vec<SampleRecord>,
    /// Highest low-band energy.
    pub band_top: f64,
    /// Lowest complement energy found.
    pub complement_bottom: f64,
}

impl BandSamples {
    /// Threshold midway between the band and its complement.
    pub fn cut(&self) -> f64 {
        if self.complement_bottom.is_finite() {
            0.5 * (self.band_top + self.complement_bottom)
        } else {
            self.band_top
        }
    }
}

/// Diagonalizes each sector for its `m = 0` band plus `extra` states.
/// With `mirror`, sectors with `N_dn > N_up` reuse their spin-flipped
/// partner. The shortcut is skipped unless the pool is spin-flip invariant.
pub fn hubbard_band_samples(
    spec: &LatticeSpec,
    t: f64,
    u: f64,
    pool: &DescriptorPool,
    extra: usize,
    mirror: bool,
) -> Result<BandSamples> {
    use crate::eigen::diagonalize_lowest;
    use crate::lattice::{binomial, build_hubbard};
    let mirror = mirror && pool.spin_flip_symmetric();
    let sectors = spec.sectors();
    type Solved = (Sector, Vec<SampleRecord>, Vec<SampleRecord>);
    let solved: Result<Vec<Solved>> = sectors
        .iter()
        .filter(|s| !mirror || s.n_up >= s.n_dn)
        .map(|&sector| {
            let h = build_hubbard(spec, sector, t, u)?;
            let band = binomial(spec.sites, sector.n_up) * binomial(spec.sites - sector.n_up, sector.n_dn);
            let band = band.min(h.dim());
            let k = (band + extra).min(h.dim());
            let dec = diagonalize_lowest(&h, k)?;
            let ops = pool.instantiate(spec, &h.basis)?;
            let mut records = records_from(&dec, &ops, |_| true, Membership::LowEnergy);
            let comp = records.split_off(band);
            let comp = comp
                .into_iter()
                .map(|r| SampleRecord {
                    membership: Membership::Complement,
                    ..r
                })
                .collect();
            Ok((sector, records, comp))
        })
        .collect();
    let mut low = Vec::new();
    let mut complement = Vec::new();
    for (sector, l, c) in solved? {
        let flipped = Sector::new(sector.n_dn, sector.n_up);
        let twin = mirror && flipped != sector && sectors.contains(&flipped);
        for (dst, src) in [(&mut low, l), (&mut complement, c)] {
            if twin {
                dst.extend(src.iter().map(|r| SampleRecord {
                    id: r.id.replacen(&format!("{}u{}d", sector.n_up, sector.n_dn), &format!("{}u{}d", flipped.n_up, flipped.n_dn), 1),
                    sector: flipped,
                    ..r.clone()
                }));
            }
            dst.extend(src);
        }
    }
    let band_top = low.iter().map(|r| r.energy).fold(f64::NEG_INFINITY, f64::max);
    let complement_bottom = complement.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    Ok(BandSamples {
        low,
        complement,
        band_top,
        complement_bottom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: usize, energy: f64, d: Vec<f64>, membership: Membership) -> SampleRecord {
        SampleRecord {
            id: format!("s{id}"),
            sector: Sector::new(1, 1),
            energy,
            descriptors: d,
            membership,
            noise: None,
        }
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn exact_linear_data() {
        let x = DMatrix::from_row_slice(5, 2, &[0., 1., 1., 0., 2., 1., 3., 5., 1., 1.]);
        let y = DVector::from_iterator(5, (0..5).map(|i| 2.0 * x[(i, 0)] - 0.5 * x[(i, 1)] + 3.0));
        let fit = fit_linear(&x, &y, true).unwrap();
        let g = fit.couplings.unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 0.5).abs() < 1e-12);
        assert!((fit.intercept.unwrap() - 3.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-10);
    }

    #[test]
    fn constant_response() {
        let x = DMatrix::from_row_slice(4, 1, &[0., 1., 2., 7.]);
        let y = DVector::from_element(4, 1.5);
        let fit = fit_linear(&x, &y, true).unwrap();
        assert!(fit.couplings.unwrap()[0].abs() < 1e-12);
        assert!((fit.intercept.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_design_withholds_couplings() {
        let x = DMatrix::from_row_slice(4, 2, &[1., 2., 2., 4., 3., 6., 5., 10.]);
        let y = DVector::from_vec(vec![1., 2., 3., 5.]);
        let fit = fit_linear(&x, &y, true).unwrap();
        assert!(fit.rank_deficient());
        assert!(fit.couplings.is_none());
        assert!(fit_linear(&x.rows(0, 2).into_owned(), &y.rows(0, 2).into_owned(), true).is_err());
    }

    #[test]
    fn verdicts() {
        // energy = 2 d0 - d1, separated complement far outside the image
        let pts = [(0., 0.), (1., 0.), (0., 1.), (1., 1.), (0.5, 0.3)];
        let low: Vec<SampleRecord> = pts
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| record(i, 2.0 * a - b, vec![a, b, 2.0 * a, (i * i) as f64], Membership::LowEnergy))
            .collect();
        let comp = vec![record(9, 10.0, vec![5.0, 5.0, 10.0, 0.0], Membership::Complement)];
        let names = labels(4);
        let ctx = ClassifyContext {
            low: &low,
            complement: &comp,
            labels: &names,
            cut: 2.5,
            eps_target: 1e-6,
            sigma: 1.0,
            collinearity_threshold: COLLINEARITY_THRESHOLD,
        };
        let fit = fit_samples(&low, &[0, 1], &names, true).unwrap();
        // d2 = 2 d0 makes {d2, d1} an equivalent ansatz
        let v = classify_fit(&fit, &ctx).unwrap();
        assert_eq!(v.case, VerdictCase::B1Undersampling);
        let collinear = fit_samples(&low, &[0, 1, 2], &names, true).unwrap();
        assert_eq!(classify_fit(&collinear, &ctx).unwrap().case, VerdictCase::B1Undersampling);
        let poor = fit_samples(&low, &[3], &names, true).unwrap();
        assert_eq!(classify_fit(&poor, &ctx).unwrap().case, VerdictCase::ATrueNegative);
        let three = fit_samples(&low, &[0, 1, 3], &names, true).unwrap();
        assert_eq!(classify_fit(&three, &ctx).unwrap().case, VerdictCase::B1FewerDescriptors);

        let trimmed: Vec<SampleRecord> = low
            .iter()
            .map(|r| SampleRecord {
                descriptors: vec![r.descriptors[0], r.descriptors[1], r.descriptors[3]],
                ..r.clone()
            })
            .collect();
        let comp3 = vec![record(9, 10.0, vec![5.0, 5.0, 0.0], Membership::Complement)];
        let names3 = labels(3);
        let ctx3 = ClassifyContext {
            low: &trimmed,
            complement: &comp3,
            labels: &names3,
            ..ctx.clone()
        };
        let fit = fit_samples(&trimmed, &[0, 1], &names3, true).unwrap();
        let v = classify_fit(&fit, &ctx3).unwrap();
        assert_eq!(v.case, VerdictCase::B2TruePositive);
        assert_eq!(v.penalty_min, Some(3.5));

        // a complement state inside the image with low fitted energy is an intruder
        let intruder = vec![record(8, 9.0, vec![0.5, 0.5, 4.0], Membership::Complement)];
        let ctx4 = ClassifyContext {
            complement: &intruder,
            ..ctx3.clone()
        };
        let v = classify_fit(&fit, &ctx4).unwrap();
        assert_eq!(v.case, VerdictCase::B1Undersampling);
        assert_eq!(v.intruders, vec!["s8".to_string()]);
    }

    #[test]
    fn augmented_model() {
        let low = vec![
            record(0, 0.0, vec![0.0], Membership::LowEnergy),
            record(1, 1.0, vec![1.0], Membership::LowEnergy),
            record(2, 2.0, vec![2.0], Membership::LowEnergy),
        ];
        let fit = fit_samples(&low, &[0], &labels(1), true).unwrap();
        let model = augment_effective(&fit, &low, 2.5, 0.75).unwrap();
        assert!((model.evaluate(&[1.5]).energy - 1.5).abs() < 1e-12);
        assert_eq!(model.evaluate(&[3.0]).energy, 3.25);
        assert!(augment_effective(&fit, &[], 2.5, 0.75).is_err());
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn farthest_point_prefers_extremes() {
        let cands: Vec<SampleRecord> = (0..11)
            .map(|i| record(i, i as f64 * 0.01, vec![i as f64 / 10.0], Membership::LowEnergy))
            .collect();
        let picked = select(cands, 3, SamplingPolicy::ImageSaturating, None).records;
        let xs: Vec<f64> = picked.iter().map(|r| r.descriptors[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn mirror_only_for_symmetric_pools() {
        let spec = LatticeSpec::chain(4);
        let sym = DescriptorPool::standard();
        let a = hubbard_band_samples(&spec, 1.0, 8.0, &sym, 2, true).unwrap();
        let b = hubbard_band_samples(&spec, 1.0, 8.0, &sym, 2, false).unwrap();
        assert_eq!(a.low.len(), b.low.len());
        let mut kinds = sym.kinds.clone();
        kinds.push(DescriptorKind::RdmElement {
            creators: vec![0],
            annihilators: vec![2],
        });
        let asym = DescriptorPool::new(kinds, 4).unwrap();
        assert!(!asym.spin_flip_symmetric());
        let c = hubbard_band_samples(&spec, 1.0, 8.0, &asym, 2, true).unwrap();
        let d = hubbard_band_samples(&spec, 1.0, 8.0, &asym, 2, false).unwrap();
        let ids = |s: &BandSamples| s.low.iter().map(|r| (r.id.clone(), r.descriptors.clone())).collect::<Vec<_>>();
        assert_eq!(ids(&c), ids(&d));
    }
}
