//! Closed-form logical qubit and T-gate counts for block encoding, state
//! preparation and observable estimation.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projector::{amplification_iterations, qsp_degree, LogBase};

/// One additive contribution to a count, before any enclosing ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

fn term(label: &str, value: f64) -> Term {
    Term {
        label: label.into(),
        value,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCost {
    pub qubits: u64,
    pub t_count: u128,
    pub breakdown: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEncodingCost {
    pub qubits: u64,
    pub t_count: u128,
    pub norm: f64,
    /// Ancillas beyond the `2N` system qubits.
    pub ancillas: u64,
    pub eps_r: f64,
}

fn ceil_u(x: f64) -> u128 {
    assert!(x.is_finite() && x >= 0.0, "count {x} is not a finite non-negative number");
    x.ceil() as u128
}

/// Majorana-style SELECT encoding of the Hubbard model.
pub fn hubbard_block_encoding(n: u64, t: f64, u: f64, eps_r: f64) -> Result<BlockEncodingCost> {
    if n < 2 || !(eps_r > 0.0) {
        return Err(Error::InvalidArgument(format!("need N >= 2 and eps_R > 0, got ({n}, {eps_r})")));
    }
    let nf = n as f64;
    let qubits = 2 * n + (2.0 * nf.log2()).ceil() as u64 + 4;
    let t_count = 16 * n as u128 + 8 * ceil_u((2.0 * nf).log2() + (2.0 * nf / eps_r).log2()) + 40;
    Ok(BlockEncodingCost {
        qubits,
        t_count,
        norm: 4.0 * nf * t + nf * u,
        ancillas: qubits - 2 * n,
        eps_r,
    })
}

/// Computational basis initialization: no T gates.
pub fn init_cost(be: &BlockEncodingCost) -> GateCost {
    GateCost {
        qubits: be.qubits,
        t_count: 0,
        breakdown: vec![term("basis-state", 0.0)],
    }
}

/// `d T_UH + d ceil(48 (2 log2 N + 6) + 10 + 4 log2(1/eps_R))`.
pub fn theta_cost(be: &BlockEncodingCost, degree: u64, n: u64) -> GateCost {
    let mcx = 48.0 * (2.0 * (n as f64).log2() + 6.0);
    let rot = 10.0 + 4.0 * (1.0 / be.eps_r).log2();
    let overhead = ceil_u(mcx + rot);
    let d = degree as u128;
    GateCost {
        qubits: be.qubits + 3,
        t_count: d * be.t_count + d * overhead,
        breakdown: vec![
            term("block-encoding", (d * be.t_count) as f64),
            term("multi-controlled", degree as f64 * mcx),
            term("rotations", degree as f64 * rot),
        ],
    }
}

/// `reps (2 T_UI + 2 T_Utheta)`.
pub fn state_prep_cost(be: &BlockEncodingCost, init: &GateCost, theta: &GateCost, repetitions: u64) -> GateCost {
    let r = repetitions as u128;
    GateCost {
        qubits: be.qubits + 4,
        t_count: r * (2 * init.t_count + 2 * theta.t_count),
        breakdown: vec![
            term("initial-state", (r * 2 * init.t_count) as f64),
            term("projector", (r * 2 * theta.t_count) as f64),
        ],
    }
}

/// Repetition count of the amplified state preparation.
pub fn state_prep_repetitions(gamma: f64, eps_sp: f64) -> Result<u64> {
    Ok(amplification_iterations(gamma, eps_sp)?.repetitions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Coe,
    Goe,
    Csoe,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Coe => "COE",
            Method::Goe => "GOE",
            Method::Csoe => "CSOE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationPlan {
    pub method: Method,
    /// Number of observables besides the energy.
    pub m: u64,
    /// RDM order for CSOE.
    pub nu: u32,
    pub eps_oe_h: f64,
    pub eps_oe_d: f64,
    pub q: f64,
    pub lambda_h: f64,
    /// Shared descriptor norm; one for Pauli-string RDM elements.
    pub lambda_d: f64,
    /// T gates per descriptor block encoding.
    pub t_descriptor: u128,
    pub eps_r: f64,
}

impl EstimationPlan {
    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidArgument(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if !(self.eps_oe_h > 0.0 && self.eps_oe_d > 0.0 && self.lambda_h > 0.0 && self.eps_r > 0.0) {
            return Err(Error::InvalidArgument("accuracies and norms must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalBudget {
    pub method: Method,
    pub qubits: u64,
    pub t_count: u128,
    pub breakdown: Vec<Term>,
    /// The same count under the other ceiling placement, when ambiguous.
    pub alternative_t: Option<u128>,
}

pub fn coe_cost(plan: &EstimationPlan, sp: &GateCost, be: &BlockEncodingCost) -> Result<LogicalBudget> {
    plan.validate()?;
    let ratio = plan.lambda_h / plan.eps_oe_h;
    let m = plan.m as f64;
    let tsp = sp.t_count as f64;
    let log = (2.0 * (m + 1.0) / plan.q).ln();
    let descriptors = 8.0 * PI * m * plan.lambda_d / plan.eps_oe_d * (tsp + plan.t_descriptor as f64) * log;
    let energy = 8.0 * PI * ratio * (tsp + be.t_count as f64) * log;
    let readout = (m + 1.0) * (10.0 + 4.0 * (1.0 / plan.eps_r).log2()) * ratio.log2().powi(2);
    Ok(LogicalBudget {
        method: Method::Coe,
        qubits: sp.qubits + ratio.log2().ceil() as u64,
        t_count: ceil_u(descriptors + energy + readout),
        alternative_t: Some(ceil_u(descriptors) + ceil_u(energy) + ceil_u(readout)),
        breakdown: vec![term("descriptors", descriptors), term("energy", energy), term("readout", readout)],
    })
}

/// `(m, R)` of the gradient method, `m` the natural log of `2 sqrt(M) lambda/eps`.
pub fn goe_constants(m_obs: u64, lambda_h: f64, eps_oe_h: f64) -> (f64, f64) {
    let s = (m_obs as f64).sqrt() * lambda_h / eps_oe_h;
    let m = (2.0 * s).ln();
    let r = 18.0 * m * (54432.0 * PI * m * s).powf(1.0 / (2.0 * m));
    (m, r)
}

pub fn goe_cost(plan: &EstimationPlan, sp: &GateCost, be: &BlockEncodingCost) -> Result<LogicalBudget> {
    plan.validate()?;
    if plan.m == 0 {
        return Err(Error::InvalidArgument("GOE needs at least one observable".into()));
    }
    let ratio = plan.lambda_h / plan.eps_oe_h;
    let dratio = plan.lambda_d / plan.eps_oe_d;
    let m = plan.m as f64;
    let (_, r) = goe_constants(plan.m, plan.lambda_h, plan.eps_oe_h);
    let queries = sp.t_count as f64 + be.t_count as f64 + m * plan.t_descriptor as f64;
    let gradient = 2.0 * r * m.sqrt() * ratio * queries * (2.0 * (m + 1.0) / plan.q).ln();
    let readout = (10.0 + 4.0 * (1.0 / plan.eps_r).log2()) * (ratio.log2().powi(2) + m * dratio.log2().powi(2));
    let qubits = (sp.qubits as f64 + ratio.log2() + m * dratio.log2()).ceil() as u64;
    Ok(LogicalBudget {
        method: Method::Goe,
        qubits,
        t_count: ceil_u(gradient) + ceil_u(readout),
        breakdown: vec![term("gradient", gradient), term("readout", readout)],
        alternative_t: None,
    })
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Classical shadows over all `nu`-RDM elements of `2N` modes.
pub fn csoe_cost_hubbard(plan: &EstimationPlan, sp: &GateCost, n: u64) -> Result<LogicalBudget> {
    plan.validate()?;
    if plan.nu == 0 {
        return Err(Error::InvalidArgument("CSOE needs nu >= 1".into()));
    }
    let modes = 2 * n;
    let nu = plan.nu as f64;
    let ratio = plan.lambda_h / plan.eps_oe_h;
    let shots = binomial(modes, plan.nu as u64)
        * nu.powf(1.5)
        * (modes as f64).log2()
        * ratio * ratio
        * (2.0 * (modes as f64).powf(2.0 * nu) / plan.q).ln();
    let t = ceil_u(shots)
        .checked_mul(sp.t_count)
        .ok_or_else(|| Error::InvalidArgument("CSOE T count overflows u128".into()))?;
    Ok(LogicalBudget {
        method: Method::Csoe,
        qubits: sp.qubits,
        t_count: t,
        breakdown: vec![term("shots", shots), term("state-prep", sp.t_count as f64)],
        alternative_t: None,
    })
}

/// Plane-wave first-quantized variant with externally supplied costs.
pub fn csoe_cost_first_quantized(
    nu: u32,
    plane_waves: f64,
    electrons: f64,
    lambda_h: f64,
    eps_oe_h: f64,
    q: f64,
    sp: &GateCost,
) -> Result<LogicalBudget> {
    if nu == 0 || !(plane_waves > 0.0 && electrons > 0.0 && lambda_h > 0.0 && eps_oe_h > 0.0 && q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument("first-quantized CSOE inputs must be positive".into()));
    }
    let nu_f = nu as f64;
    let ratio = lambda_h / eps_oe_h;
    let shots = 64.0 * E.powi(3)
        * (plane_waves / q).ln()
        * nu_f
        * (2.0 * nu_f + 2.0 * E).powf(nu_f)
        * electrons.powf(nu_f)
        * ratio * ratio;
    let t = ceil_u(shots)
        .checked_mul(sp.t_count)
        .ok_or_else(|| Error::InvalidArgument("CSOE T count overflows u128".into()))?;
    Ok(LogicalBudget {
        method: Method::Csoe,
        qubits: sp.qubits,
        t_count: t,
        breakdown: vec![term("shots", shots), term("state-prep", sp.t_count as f64)],
        alternative_t: None,
    })
}

/// Parameter chain of the doped Hubbard scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardPreset {
    pub n: u64,
    pub t: f64,
    pub u: f64,
    pub p: f64,
    pub lambda_h: f64,
    pub cut: f64,
    pub e0: f64,
    pub delta: f64,
    pub eps_oe_h: f64,
    pub eps_oe_d: f64,
    pub eps_sp: f64,
    pub eps_r: f64,
    pub q: f64,
    /// State-preparation repetitions; one for basis states with no double occupancy.
    pub repetitions: u64,
    pub log_base: LogBase,
}

impl HubbardPreset {
    pub fn new(n: u64, u: f64, p: f64) -> Self {
        let nf = n as f64;
        let t = 1.0;
        let lambda_h = 4.0 * nf * t + nf * u;
        let eps_oe_h = 0.003 * nf * t;
        let eps_oe_d = eps_oe_h / 10.0;
        let eps_sp = eps_oe_d / 100.0;
        let cut = 3.0 * p * nf * t;
        let e0 = -0.765 * nf * t;
        Self {
            n,
            t,
            u,
            p,
            lambda_h,
            cut,
            e0,
            delta: (cut - e0) / (2.0 * lambda_h),
            eps_oe_h,
            eps_oe_d,
            eps_sp,
            eps_r: eps_sp / 10.0,
            q: 0.1,
            repetitions: 1,
            log_base: LogBase::Two,
        }
    }

    /// Three observables per site.
    pub fn minimal_m(&self) -> u64 {
        3 * self.n
    }

    /// All `(2N)^2` one-body RDM elements.
    pub fn one_rdm_m(&self) -> u64 {
        4 * self.n * self.n
    }

    pub fn block_encoding(&self) -> Result<BlockEncodingCost> {
        hubbard_block_encoding(self.n, self.t, self.u, self.eps_r)
    }

    pub fn qsp_degree(&self) -> Result<u64> {
        Ok(qsp_degree(self.delta, self.eps_sp, self.log_base)?.degree)
    }

    pub fn state_prep(&self) -> Result<(BlockEncodingCost, GateCost)> {
        let be = self.block_encoding()?;
        let theta = theta_cost(&be, self.qsp_degree()?, self.n);
        let sp = state_prep_cost(&be, &init_cost(&be), &theta, self.repetitions);
        Ok((be, sp))
    }

    pub fn plan(&self, method: Method, m: u64, nu: u32) -> EstimationPlan {
        EstimationPlan {
            method,
            m,
            nu,
            eps_oe_h: self.eps_oe_h,
            eps_oe_d: self.eps_oe_d,
            q: self.q,
            lambda_h: self.lambda_h,
            lambda_d: 1.0,
            t_descriptor: 0,
            eps_r: self.eps_r,
        }
    }

    pub fn budget(&self, method: Method, m: u64, nu: u32) -> Result<LogicalBudget> {
        let (be, sp) = self.state_prep()?;
        let plan = self.plan(method, m, nu);
        match method {
            Method::Coe => coe_cost(&plan, &sp, &be),
            Method::Goe => goe_cost(&plan, &sp, &be),
            Method::Csoe => csoe_cost_hubbard(&plan, &sp, self.n),
        }
    }
}

/// One row of the published logical resource table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicalRow {
    pub set: &'static str,
    pub method: Method,
    pub qubits: u64,
    pub t_count: f64,
}

pub const TABLE2_LOGICAL: [LogicalRow; 5] = [
    LogicalRow { set: "min", method: Method::Coe, qubits: 74, t_count: 2.654e12 },
    LogicalRow { set: "min", method: Method::Goe, qubits: 552, t_count: 3.694e14 },
    LogicalRow { set: "1-RDM", method: Method::Coe, qubits: 74, t_count: 7.584e13 },
    LogicalRow { set: "1-RDM", method: Method::Goe, qubits: 14097, t_count: 3.134e15 },
    LogicalRow { set: "1-RDM", method: Method::Csoe, qubits: 61, t_count: 6.903e16 },
];

/// Budget of one published row under the `N = 22` preset.
pub fn reproduce_row(preset: &HubbardPreset, row: &LogicalRow) -> Result<LogicalBudget> {
    let m = if row.set == "min" { preset.minimal_m() } else { preset.one_rdm_m() };
    preset.budget(row.method, m, 1)
}
