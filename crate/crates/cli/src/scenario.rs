//! JSON scenario schema. Every block rejects unknown keys.

use dmd_core::lattice::{DescriptorKind, Geometry, LatticeSpec, Sector};
use dmd_core::logical::Method;
use dmd_core::physical::{Accounting, HardwareModel, Layout, Objective, Protocol, Stage};
use dmd_core::projector::LogBase;
use dmd_core::propagation::SweepMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub dmd: Option<DmdBlock>,
    #[serde(default)]
    pub error: Option<ErrorBlock>,
    #[serde(default)]
    pub projector: Option<ProjectorBlock>,
    #[serde(default)]
    pub logical: Option<LogicalBlock>,
    #[serde(default)]
    pub physical: Option<PhysicalBlock>,
    #[serde(default)]
    pub bounds: Option<BoundsBlock>,
    #[serde(default)]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub lattice: LatticeSpec,
    pub hamiltonian: Hamiltonian,
    /// `[n_up, n_dn]`; defaults to the smallest non-negative `S_z`.
    #[serde(default)]
    pub sector: Option<[usize; 2]>,
    /// Every sector at the lattice filling instead of one.
    #[serde(default)]
    pub all_sectors: bool,
    /// Lowest states per sector; all of them when absent.
    #[serde(default)]
    pub states: Option<usize>,
    #[serde(default = "default_dimension_cap")]
    pub dimension_cap: usize,
}

fn default_dimension_cap() -> usize {
    6000
}

impl ModelBlock {
    pub fn sectors(&self) -> Vec<Sector> {
        match self.hamiltonian {
            Hamiltonian::Heisenberg { .. } => {
                if self.all_sectors {
                    (0..=self.lattice.sites).map(|u| Sector::new(u, self.lattice.sites - u)).collect()
                } else {
                    vec![self.sector.map_or_else(|| self.lattice.default_sector(), |[u, d]| Sector::new(u, d))]
                }
            }
            Hamiltonian::Hubbard { .. } => {
                if self.all_sectors {
                    self.lattice.sectors()
                } else {
                    vec![self.sector.map_or_else(|| self.lattice.default_sector(), |[u, d]| Sector::new(u, d))]
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Hamiltonian {
    Hubbard {
        t: f64,
        u: f64,
    },
    Heisenberg {
        j: f64,
        #[serde(default)]
        c: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmdBlock {
    #[serde(default = "standard_pool")]
    pub pool: Vec<DescriptorKind>,
    /// Descriptor labels to fit; the whole pool when absent.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(default = "yes")]
    pub intercept: bool,
    /// Threshold `Lambda`; discovery places it mid-gap when absent.
    #[serde(default)]
    pub cut: Option<f64>,
    #[serde(default)]
    pub eps_target: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_kappa")]
    pub max_kappa: usize,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_collinearity")]
    pub collinearity_threshold: f64,
    /// States above the `m = 0` band kept per sector as complement candidates.
    #[serde(default = "default_extra")]
    pub extra: usize,
    #[serde(default)]
    pub low_per_iteration: Option<usize>,
    #[serde(default)]
    pub complement_per_iteration: Option<usize>,
    /// Uniform noise of this half-width added to sampled energies.
    #[serde(default)]
    pub noise: Option<f64>,
    /// Exit with an invariant violation when the fit residual exceeds this.
    #[serde(default)]
    pub max_residual: Option<f64>,
}

fn standard_pool() -> Vec<DescriptorKind> {
    dmd_core::dmd::DescriptorPool::standard().kinds
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn default_budget() -> usize {
    7
}

fn default_kappa() -> usize {
    3
}

fn default_collinearity() -> f64 {
    dmd_core::dmd::COLLINEARITY_THRESHOLD
}

fn default_extra() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBlock {
    #[serde(default = "default_bits")]
    pub bits: [u32; 2],
    #[serde(default)]
    pub mode: SweepMode,
    /// Target coupling errors for the inverse mode.
    #[serde(default)]
    pub targets: Vec<f64>,
    /// Observable-estimation error whose parameter bound is reported.
    #[serde(default)]
    pub eps_oe_h: Option<f64>,
}

fn default_bits() -> [u32; 2] {
    [5, 15]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorBlock {
    /// Size of the low-energy band; `Lambda` sits midway to the next level.
    #[serde(default)]
    pub band: Option<usize>,
    #[serde(default)]
    pub cut: Option<f64>,
    /// Normalized half-width of the promise gap.
    #[serde(default)]
    pub delta: Option<f64>,
    /// With `band`, `delta` is this fraction of half the band gap.
    #[serde(default = "default_delta_fraction")]
    pub delta_fraction: f64,
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_gamma_min")]
    pub gamma_min: f64,
    #[serde(default)]
    pub exact_angle: bool,
}

fn default_delta_fraction() -> f64 {
    0.4
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-2, 1e-3]
}

fn default_trials() -> usize {
    100
}

fn default_gamma_min() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableSet {
    Min,
    #[serde(rename = "1-rdm")]
    OneRdm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicalBlock {
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    pub method: Method,
    #[serde(default = "default_set")]
    pub set: ObservableSet,
    /// Overrides the observable count implied by `set`.
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default = "default_nu")]
    pub nu: u32,
    #[serde(default)]
    pub repetitions: Option<u64>,
    #[serde(default)]
    pub log_base: Option<LogBase>,
}

fn default_n() -> u64 {
    22
}

fn default_u() -> f64 {
    12.0
}

fn default_p() -> f64 {
    0.1
}

fn default_set() -> ObservableSet {
    ObservableSet::Min
}

fn default_nu() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalBlock {
    pub hardware: HardwareModel,
    #[serde(default = "all_layouts")]
    pub layouts: Vec<Layout>,
    /// Distillation stages, first level first; searched when absent.
    #[serde(default)]
    pub factory: Option<Vec<Stage>>,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default = "all_protocols")]
    pub protocols: Vec<Protocol>,
    /// Factory copies; the fewest that leave the run consumption-limited when absent.
    #[serde(default)]
    pub factories: Option<u64>,
    #[serde(default)]
    pub accounting: Accounting,
    /// Fixes the code distance instead of selecting it.
    #[serde(default)]
    pub distance: Option<u32>,
    /// Logical footprint; taken from the logical block when absent.
    #[serde(default)]
    pub logical_qubits: Option<u64>,
    #[serde(default)]
    pub t_count: Option<f64>,
}

fn all_layouts() -> Vec<Layout> {
    Layout::ALL.to_vec()
}

fn all_protocols() -> Vec<Protocol> {
    vec![Protocol::P15, Protocol::P20]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default = "default_targets")]
    pub targets: Vec<usize>,
    #[serde(default = "default_ground_target")]
    pub ground_state_target: usize,
    /// Largest lattice the command will diagonalize.
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

fn default_geometry() -> Geometry {
    Geometry::Ladder
}

fn default_sizes() -> Vec<usize> {
    vec![2, 4, 6, 8]
}

fn default_targets() -> Vec<usize> {
    vec![22, 24]
}

fn default_ground_target() -> usize {
    22
}

fn default_max_sites() -> usize {
    10
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Directory for artifacts; `--out` takes precedence.
    #[serde(default)]
    pub dir: Option<String>,
    /// File stem; the subcommand name when absent.
    #[serde(default)]
    pub stem: Option<String>,
}
