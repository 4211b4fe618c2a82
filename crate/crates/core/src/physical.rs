//! Surface-code physical cost: layouts, logical error model, distance
//! selection, distillation factories and their parameter search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logical::{LogicalBudget, Method};

/// Failure budget shared by logical errors and by faulty T states.
pub const FAILURE_BUDGET: f64 = 0.01;
/// Largest distance `select_distance` will consider.
pub const MAX_DISTANCE: u32 = 99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareModel {
    pub p_phys: f64,
    /// Seconds per code cycle.
    pub t_cycle: f64,
}

impl HardwareModel {
    pub fn new(p_phys: f64) -> Self {
        Self { p_phys, t_cycle: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_phys > 0.0 && self.p_phys < 0.01 && self.t_cycle > 0.0) {
            return Err(Error::InvalidArgument(format!("need 0 < p < 1e-2 and t_cycle > 0, got {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    Compact,
    Intermediate,
    Fast,
}

impl Layout {
    pub const ALL: [Layout; 3] = [Layout::Compact, Layout::Intermediate, Layout::Fast];

    /// Tiles holding `n` logical qubits plus routing space.
    pub fn tiles(self, n: u64) -> u64 {
        let nf = n as f64;
        match self {
            Layout::Compact => (1.5 * nf + 3.0).ceil() as u64,
            Layout::Intermediate => 2 * n + 4,
            Layout::Fast => 2 * n + (8.0 * nf).sqrt().ceil() as u64 + 1,
        }
    }

    /// Logical cycles per consumed T state, in units of `d` code cycles.
    pub fn cycle_multiple(self) -> u64 {
        match self {
            Layout::Compact => 9,
            Layout::Intermediate => 5,
            Layout::Fast => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Layout::Compact => "Compact",
            Layout::Intermediate => "Intermediate",
            Layout::Fast => "Fast",
        }
    }
}

/// `0.1 (100 p)^((d+1)/2)` per patch per logical cycle of `d` code cycles.
pub fn logical_error_rate(p_phys: f64, d: u32) -> f64 {
    0.1 * (100.0 * p_phys).powf((d as f64 + 1.0) / 2.0)
}

/// Logical-cycle count of a consumption-limited run.
pub fn logical_cycles(t_count: f64, layout: Layout) -> f64 {
    t_count * layout.cycle_multiple() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    /// All tiles, data and routing.
    pub all_tiles: f64,
    /// Data patches only.
    pub data_only: f64,
    /// Faulty T states.
    pub t_states: Option<f64>,
}

pub fn failure_shares(qubits: u64, t_count: f64, layout: Layout, hw: &HardwareModel, d: u32) -> FailureReport {
    let per = logical_cycles(t_count, layout) * logical_error_rate(hw.p_phys, d);
    FailureReport {
        all_tiles: layout.tiles(qubits) as f64 * per,
        data_only: qubits as f64 * per,
        t_states: None,
    }
}

/// Which patches count against the logical failure budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accounting {
    #[default]
    AllTiles,
    DataOnly,
}

/// Smallest `d` keeping the consumption-limited logical failure within 1%.
pub fn select_distance(qubits: u64, t_count: f64, layout: Layout, hw: &HardwareModel, accounting: Accounting) -> Result<u32> {
    hw.validate()?;
    (3..=MAX_DISTANCE)
        .find(|&d| {
            let r = failure_shares(qubits, t_count, layout, hw, d);
            let share = match accounting {
                Accounting::AllTiles => r.all_tiles,
                Accounting::DataOnly => r.data_only,
            };
            share <= FAILURE_BUDGET
        })
        .ok_or(Error::NoDistance { max: MAX_DISTANCE })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "15-to-1")]
    P15,
    #[serde(rename = "20-to-4")]
    P20,
}

impl Protocol {
    pub fn inputs(self) -> u64 {
        match self {
            Protocol::P15 => 15,
            Protocol::P20 => 20,
        }
    }

    pub fn outputs(self) -> u64 {
        match self {
            Protocol::P15 => 1,
            Protocol::P20 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Protocol::P15 => "15-to-1",
            Protocol::P20 => "20-to-4",
        }
    }

    /// Distilled error per output from perfect Cliffords.
    pub fn suppress(self, p_in: f64) -> f64 {
        match self {
            Protocol::P15 => 35.0 * p_in.powi(3),
            Protocol::P20 => 22.0 * p_in.powi(2),
        }
    }

    /// Data patches carrying the output rotations.
    fn width(self) -> u64 {
        match self {
            Protocol::P15 => 3,
            Protocol::P20 => 4,
        }
    }

    /// Code cycles per round in units of `dm`.
    fn rounds(self) -> u64 {
        match self {
            Protocol::P15 => 6,
            Protocol::P20 => 7,
        }
    }

    /// Rotations applied per round.
    fn rotations(self) -> u64 {
        match self {
            Protocol::P15 => 11,
            Protocol::P20 => 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub protocol: Protocol,
    pub dx: u32,
    pub dz: u32,
    pub dm: u32,
}

pub const fn st(protocol: Protocol, dx: u32, dz: u32, dm: u32) -> Stage {
    Stage { protocol, dx, dz, dm }
}

impl Stage {
    /// Qubits of one unit: `2((dx + 4 dz) w dx + 2 dm)`.
    pub fn footprint(&self) -> u64 {
        let (dx, dz, dm) = (self.dx as u64, self.dz as u64, self.dm as u64);
        2 * ((dx + 4 * dz) * self.protocol.width() * dx + 2 * dm)
    }

    pub fn period(&self) -> u64 {
        self.protocol.rounds() * self.dm as u64
    }

    /// Output error for inputs of error `p_in` with Clifford noise at `p_phys`.
    ///
    /// Z-type and timelike faults are detected like faulty inputs, so they
    /// add to the input error; X-type faults on the output patches pass
    /// straight through.
    pub fn output_error(&self, p_in: f64, p_phys: f64) -> f64 {
        let per_cycle = |d: u32| logical_error_rate(p_phys, d) / d as f64;
        let p_eff = p_in + self.dm as f64 * per_cycle(self.dz) + logical_error_rate(p_phys, self.dm);
        let x_faults = self.protocol.width() as f64 * self.period() as f64 * per_cycle(self.dx);
        let timelike = self.protocol.rotations() as f64 * logical_error_rate(p_phys, self.dm).powi(2);
        self.protocol.suppress(p_eff) + x_faults + timelike
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorySpec {
    pub stages: Vec<Stage>,
    pub output_error: f64,
    pub footprint: u64,
    /// Code cycles per batch.
    pub period: u64,
    pub outputs: u64,
    /// Units of each stage, first stage first.
    pub units: Vec<u64>,
}

impl FactorySpec {
    pub fn label(&self) -> String {
        self.stages
            .iter()
            .map(|s| format!("({})_{{{},{},{}}}", s.protocol.label(), s.dx, s.dz, s.dm))
            .collect()
    }

    /// Qubit-cycles per output state.
    pub fn spacetime(&self) -> f64 {
        self.footprint as f64 * self.period as f64 / self.outputs as f64
    }
}

/// Chains stages; each level is fed by enough lower-level units to supply
/// its inputs within one of its periods.
pub fn factory_model(stages: &[Stage], p_phys: f64) -> Result<FactorySpec> {
    if stages.is_empty() {
        return Err(Error::InvalidArgument("factory needs at least one stage".into()));
    }
    if stages.iter().any(|s| s.dx == 0 || s.dz == 0 || s.dm == 0) {
        return Err(Error::InvalidArgument("distances must be >= 1".into()));
    }
    let mut p = p_phys;
    let mut units = vec![1u64; stages.len()];
    for s in stages {
        p = s.output_error(p, p_phys);
    }
    for i in (0..stages.len() - 1).rev() {
        let (lower, upper) = (&stages[i], &stages[i + 1]);
        let demand = upper.protocol.inputs() * units[i + 1] * lower.period();
        let supply = lower.protocol.outputs() * upper.period();
        units[i] = demand.div_ceil(supply);
    }
    let footprint = stages.iter().zip(&units).map(|(s, n)| s.footprint() * n).sum();
    let last = stages.last().unwrap();
    Ok(FactorySpec {
        stages: stages.to_vec(),
        output_error: p,
        footprint,
        period: last.period(),
        outputs: last.protocol.outputs(),
        units,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    Spacetime,
    Footprint,
}

fn objective(f: &FactorySpec, obj: Objective) -> f64 {
    match obj {
        Objective::Spacetime => f.spacetime(),
        Objective::Footprint => f.footprint as f64,
    }
}

const SEARCH_CAP: u32 = 128;

fn build(protocols: &[Protocol], v: &[u32], p_phys: f64) -> FactorySpec {
    let stages: Vec<Stage> = protocols
        .iter()
        .enumerate()
        .map(|(i, &pr)| st(pr, v[3 * i], v[3 * i + 1], v[3 * i + 2]))
        .collect();
    factory_model(&stages, p_phys).expect("valid stages")
}

/// Direct search for locally optimal integer distances meeting `target`.
///
/// From an initial guess, doubles every parameter until feasible, bisects
/// a common scale back toward the boundary, then refines one coordinate at
/// a time. Stage counts grow from one until a feasible factory exists.
pub fn search_factory(p_phys: f64, target: f64, protocols: &[Protocol], obj: Objective) -> Result<FactorySpec> {
    if !(target > 0.0) {
        return Err(Error::InvalidArgument(format!("target must be positive, got {target}")));
    }
    let mut best: Option<FactorySpec> = None;
    for levels in 1..=3usize {
        for last in protocols {
            let mut chain = vec![Protocol::P15; levels - 1];
            chain.push(*last);
            if let Some(f) = search_chain(p_phys, target, &chain, obj) {
                if best.as_ref().is_none_or(|b| objective(&f, obj) < objective(b, obj)) {
                    best = Some(f);
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    best.ok_or(Error::UnreachableTarget { target })
}

fn search_chain(p_phys: f64, target: f64, chain: &[Protocol], obj: Objective) -> Option<FactorySpec> {
    let feasible = |v: &[u32]| build(chain, v, p_phys).output_error <= target;
    let n = chain.len();
    let mut v: Vec<u32> = (0..n).flat_map(|i| {
        let d = 3 + 2 * i as u32;
        [d, d.div_ceil(2).max(1), d.div_ceil(2).max(1)]
    }).collect();
    while !feasible(&v) {
        if v.iter().any(|&x| x >= SEARCH_CAP) {
            return None;
        }
        v.iter_mut().for_each(|x| *x *= 2);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let scaled = |f: f64, v: &[u32]| -> Vec<u32> { v.iter().map(|&x| ((x as f64 * f).ceil() as u32).max(1)).collect() };
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if feasible(&scaled(mid, &v)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    v = scaled(hi, &v);
    let mut current = objective(&build(chain, &v, p_phys), obj);
    loop {
        let mut improved = false;
        for i in 0..v.len() {
            for step in [-1i32, 1] {
                let mut w = v.clone();
                let x = w[i] as i32 + step;
                if x < 1 || x as u32 > SEARCH_CAP {
                    continue;
                }
                w[i] = x as u32;
                if !feasible(&w) {
                    continue;
                }
                let value = objective(&build(chain, &w, p_phys), obj);
                if value < current - 1e-9 {
                    v = w;
                    current = value;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Some(build(chain, &v, p_phys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Consumption,
    Production,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBudget {
    pub distance: u32,
    pub layout: Layout,
    pub tiles: u64,
    pub physical_qubits: u64,
    pub consumption_time: f64,
    pub production_time: f64,
    pub runtime: f64,
    pub regime: Regime,
    pub failure: FailureReport,
    pub factories: u64,
}

/// Runtime and qubits at distance `d` with `n_factories` copies of `factory`.
pub fn physical_estimate(
    qubits: u64,
    t_count: f64,
    layout: Layout,
    factory: &FactorySpec,
    hw: &HardwareModel,
    d: u32,
    n_factories: u64,
) -> Result<PhysicalBudget> {
    hw.validate()?;
    if n_factories == 0 {
        return Err(Error::InvalidArgument("need at least one factory".into()));
    }
    let consumption = logical_cycles(t_count, layout) * d as f64 * hw.t_cycle;
    let production = t_count * factory.period as f64 / (factory.outputs * n_factories) as f64 * hw.t_cycle;
    let tiles = layout.tiles(qubits);
    let mut failure = failure_shares(qubits, t_count, layout, hw, d);
    failure.t_states = Some(t_count * factory.output_error);
    let (runtime, regime) = if consumption >= production {
        (consumption, Regime::Consumption)
    } else {
        (production, Regime::Production)
    };
    Ok(PhysicalBudget {
        distance: d,
        layout,
        tiles,
        physical_qubits: tiles * 2 * (d as u64).pow(2) + n_factories * factory.footprint,
        consumption_time: consumption,
        production_time: production,
        runtime,
        regime,
        failure,
        factories: n_factories,
    })
}

/// Selects the distance and then estimates.
pub fn estimate_from_budget(
    budget: &LogicalBudget,
    layout: Layout,
    factory: &FactorySpec,
    hw: &HardwareModel,
    n_factories: u64,
) -> Result<PhysicalBudget> {
    let t = budget.t_count as f64;
    let d = select_distance(budget.qubits, t, layout, hw, Accounting::AllTiles)?;
    physical_estimate(budget.qubits, t, layout, factory, hw, d, n_factories)
}

/// A row of the published physical resource table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalRow {
    pub set: &'static str,
    pub method: Method,
    pub logical_qubits: u64,
    pub t_count: f64,
    pub p_phys: f64,
    pub stages: [Stage; 2],
    pub layout: Layout,
    pub distance: u32,
    pub physical_qubits: f64,
    pub time: f64,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    set: &'static str,
    method: Method,
    logical_qubits: u64,
    t_count: f64,
    p_phys: f64,
    stages: [Stage; 2],
    layout: Layout,
    distance: u32,
    physical_qubits: f64,
    time: f64,
) -> PhysicalRow {
    PhysicalRow {
        set,
        method,
        logical_qubits,
        t_count,
        p_phys,
        stages,
        layout,
        distance,
        physical_qubits,
        time,
    }
}

use Protocol::{P15, P20};

pub const TABLE2: [PhysicalRow; 48] = [
    row("min", Method::Coe, 74, 2.654e12, 1e-3, [st(P15, 13, 5, 5), st(P15, 32, 12, 14)], Layout::Compact, 33, 2.855e5, 7.883e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-3, [st(P15, 13, 5, 5), st(P15, 32, 12, 14)], Layout::Intermediate, 33, 3.683e5, 4.379e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-3, [st(P15, 13, 5, 5), st(P15, 32, 12, 14)], Layout::Fast, 35, 4.635e5, 3.159e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-3, [st(P15, 18, 8, 8), st(P20, 33, 17, 19)], Layout::Compact, 33, 3.463e5, 7.883e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-3, [st(P15, 18, 8, 8), st(P20, 33, 17, 19)], Layout::Intermediate, 33, 4.291e5, 4.379e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-3, [st(P15, 18, 8, 8), st(P20, 33, 17, 19)], Layout::Fast, 34, 5.007e5, 1.261e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-4, [st(P15, 6, 2, 2), st(P15, 15, 5, 6)], Layout::Compact, 16, 6.570e4, 3.822e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-4, [st(P15, 6, 2, 2), st(P15, 15, 5, 6)], Layout::Intermediate, 16, 8.516e4, 2.123e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-4, [st(P15, 6, 2, 2), st(P15, 15, 5, 6)], Layout::Fast, 17, 1.079e5, 1.221e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-4, [st(P15, 8, 2, 3), st(P20, 16, 8, 9)], Layout::Compact, 16, 7.586e4, 3.822e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-4, [st(P15, 8, 2, 3), st(P20, 16, 8, 9)], Layout::Intermediate, 16, 9.532e4, 2.123e8),
    row("min", Method::Coe, 74, 2.654e12, 1e-4, [st(P15, 8, 2, 3), st(P20, 16, 8, 9)], Layout::Fast, 17, 1.183e5, 6.105e7),
    row("min", Method::Goe, 552, 3.694e14, 1e-3, [st(P15, 15, 6, 6), st(P15, 36, 13, 15)], Layout::Compact, 40, 2.714e6, 1.330e11),
    row("min", Method::Goe, 552, 3.694e14, 1e-3, [st(P15, 15, 6, 6), st(P15, 36, 13, 15)], Layout::Intermediate, 39, 3.425e6, 7.204e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-3, [st(P15, 15, 6, 6), st(P15, 36, 13, 15)], Layout::Fast, 41, 3.995e6, 4.174e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-4, [st(P15, 7, 2, 3), st(P15, 17, 6, 7)], Layout::Compact, 19, 6.111e5, 6.317e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-4, [st(P15, 7, 2, 3), st(P15, 17, 6, 7)], Layout::Intermediate, 19, 8.111e5, 3.509e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-4, [st(P15, 7, 2, 3), st(P15, 17, 6, 7)], Layout::Fast, 20, 9.487e5, 1.958e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-4, [st(P15, 9, 3, 3), st(P20, 18, 8, 10)], Layout::Compact, 19, 6.227e5, 6.317e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-4, [st(P15, 9, 3, 3), st(P20, 18, 8, 10)], Layout::Intermediate, 19, 8.227e5, 3.509e10),
    row("min", Method::Goe, 552, 3.694e14, 1e-4, [st(P15, 9, 3, 3), st(P20, 18, 8, 10)], Layout::Fast, 20, 9.605e5, 9.235e9),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-3, [st(P15, 14, 5, 6), st(P15, 35, 13, 15)], Layout::Compact, 36, 3.452e5, 2.457e10),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-3, [st(P15, 14, 5, 6), st(P15, 35, 13, 15)], Layout::Intermediate, 36, 4.437e5, 1.365e10),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-3, [st(P15, 14, 5, 6), st(P15, 35, 13, 15)], Layout::Fast, 38, 5.522e5, 8.570e9),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-4, [st(P15, 6, 2, 2), st(P15, 17, 6, 6)], Layout::Compact, 18, 8.229e4, 1.229e10),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-4, [st(P15, 6, 2, 2), st(P15, 17, 6, 6)], Layout::Intermediate, 17, 9.627e4, 6.446e9),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-4, [st(P15, 6, 2, 2), st(P15, 17, 6, 6)], Layout::Fast, 18, 1.212e5, 3.489e9),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-4, [st(P15, 9, 3, 3), st(P20, 17, 8, 9)], Layout::Compact, 18, 9.439e4, 1.229e10),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-4, [st(P15, 9, 3, 3), st(P20, 17, 8, 9)], Layout::Intermediate, 17, 1.082e5, 6.446e9),
    row("1-RDM", Method::Coe, 74, 7.584e13, 1e-4, [st(P15, 9, 3, 3), st(P20, 17, 8, 9)], Layout::Fast, 18, 1.333e5, 1.725e9),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-3, [st(P15, 15, 6, 6), st(P15, 38, 15, 16)], Layout::Compact, 44, 8.194e7, 1.241e12),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-3, [st(P15, 15, 6, 6), st(P15, 38, 15, 16)], Layout::Intermediate, 44, 1.092e8, 6.895e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-3, [st(P15, 15, 6, 6), st(P15, 38, 15, 16)], Layout::Fast, 46, 1.208e8, 4.356e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-4, [st(P15, 7, 2, 3), st(P15, 18, 6, 7)], Layout::Compact, 22, 2.048e7, 6.205e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-4, [st(P15, 7, 2, 3), st(P15, 18, 6, 7)], Layout::Intermediate, 21, 2.488e7, 3.291e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-4, [st(P15, 7, 2, 3), st(P15, 18, 6, 7)], Layout::Fast, 22, 2.763e7, 1.661e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-4, [st(P15, 10, 3, 4), st(P20, 19, 8, 11)], Layout::Compact, 22, 2.050e7, 6.205e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-4, [st(P15, 10, 3, 4), st(P20, 19, 8, 11)], Layout::Intermediate, 21, 2.490e7, 3.291e11),
    row("1-RDM", Method::Goe, 14097, 3.134e15, 1e-4, [st(P15, 10, 3, 4), st(P20, 19, 8, 11)], Layout::Fast, 22, 2.764e7, 9.480e10),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-3, [st(P15, 16, 7, 6), st(P15, 41, 17, 18)], Layout::Compact, 42, 3.980e5, 2.609e13),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-3, [st(P15, 16, 7, 6), st(P15, 41, 17, 18)], Layout::Intermediate, 42, 5.074e5, 1.450e13),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-3, [st(P15, 16, 7, 6), st(P15, 41, 17, 18)], Layout::Fast, 44, 6.282e5, 9.526e12),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-4, [st(P15, 7, 2, 3), st(P15, 20, 7, 8)], Layout::Compact, 21, 9.732e4, 1.305e13),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-4, [st(P15, 7, 2, 3), st(P15, 20, 7, 8)], Layout::Intermediate, 20, 1.143e5, 6.903e12),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-4, [st(P15, 7, 2, 3), st(P15, 20, 7, 8)], Layout::Fast, 21, 1.423e5, 4.142e12),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-4, [st(P15, 10, 4, 4), st(P20, 20, 10, 11)], Layout::Compact, 21, 1.128e5, 1.305e13),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-4, [st(P15, 10, 4, 4), st(P20, 20, 10, 11)], Layout::Intermediate, 20, 1.296e5, 6.903e12),
    row("1-RDM", Method::Csoe, 61, 6.903e16, 1e-4, [st(P15, 10, 4, 4), st(P20, 20, 10, 11)], Layout::Fast, 21, 1.578e5, 2.088e12),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_model_values() {
        assert!((logical_error_rate(1e-3, 33) / 1e-18 - 1.0).abs() < 1e-9);
        assert!((logical_error_rate(1e-4, 16) / 1e-18 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distances_from_table_budget() {
        let compact3 = select_distance(74, 2.654e12, Layout::Compact, &HardwareModel::new(1e-3), Accounting::AllTiles).unwrap();
        let compact4 = select_distance(74, 2.654e12, Layout::Compact, &HardwareModel::new(1e-4), Accounting::AllTiles).unwrap();
        assert!(compact3.abs_diff(33) <= 2 && compact4.abs_diff(16) <= 2, "{compact3} {compact4}");
        let d = select_distance(74, 2.654e12, Layout::Compact, &HardwareModel::new(1e-3), Accounting::AllTiles).unwrap();
        let shorter = select_distance(74, 2.654e11, Layout::Compact, &HardwareModel::new(1e-3), Accounting::AllTiles).unwrap();
        assert!(shorter <= d);
    }

    #[test]
    fn perfect_clifford_suppression() {
        assert!((Protocol::P15.suppress(1e-3) - 3.5e-8).abs() < 1e-20);
        let two = Protocol::P15.suppress(Protocol::P15.suppress(1e-3));
        assert!((two / (35.0 * 3.5e-8f64.powi(3)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_distillery_meets_budget() {
        let f = factory_model(&TABLE2[0].stages, 1e-3).unwrap();
        assert!(f.output_error < FAILURE_BUDGET / 2.654e12, "{}", f.output_error);
        assert_eq!(f.label(), "(15-to-1)_{13,5,5}(15-to-1)_{32,12,14}");
        assert!(f.units[0] >= 1);
    }

    #[test]
    fn consumption_runtimes() {
        let f = factory_model(&TABLE2[0].stages, 1e-3).unwrap();
        let hw = HardwareModel::new(1e-3);
        let c = physical_estimate(74, 2.654e12, Layout::Compact, &f, &hw, 33, 1).unwrap();
        assert!((c.runtime / 7.883e8 - 1.0).abs() < 0.02);
        let i = physical_estimate(74, 2.654e12, Layout::Intermediate, &f, &hw, 33, 1).unwrap();
        assert!((i.runtime / 4.379e8 - 1.0).abs() < 0.02);
        let many = physical_estimate(74, 2.654e12, Layout::Fast, &f, &hw, 33, 1000).unwrap();
        assert_eq!(many.regime, Regime::Consumption);
    }
}
