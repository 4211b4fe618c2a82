//! Observable-estimation and state-preparation error budgets and their
//! effect on fitted couplings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmd::{fit_samples, SampleRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    Explicit,
    PresetRatios,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps_oe_h: f64,
    pub eps_oe_d: f64,
    pub eps_sp: f64,
    pub eps_r: f64,
    pub mode: BudgetMode,
}

impl ErrorBudget {
    pub fn explicit(eps_oe_h: f64, eps_oe_d: f64, eps_sp: f64, eps_r: f64) -> Result<Self> {
        let b = Self {
            eps_oe_h,
            eps_oe_d,
            eps_sp,
            eps_r,
            mode: BudgetMode::Explicit,
        };
        b.validate()?;
        Ok(b)
    }

    /// Descriptor error a tenth of the energy error, state preparation a
    /// hundredth of that, rotation synthesis a tenth again.
    pub fn preset(eps_oe_h: f64) -> Result<Self> {
        let eps_oe_d = eps_oe_h / 10.0;
        let eps_sp = eps_oe_d / 100.0;
        let b = Self {
            eps_oe_h,
            eps_oe_d,
            eps_sp,
            eps_r: eps_sp / 10.0,
            mode: BudgetMode::PresetRatios,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps_oe_h, self.eps_oe_d, self.eps_sp, self.eps_r];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("error budget entries must be finite and >= 0: {all:?}")));
        }
        Ok(())
    }
}

/// `v` truncated toward zero to `b` binary fraction digits.
pub fn truncate_b_bits(value: f64, b: u32) -> f64 {
    assert!(b >= 1, "truncation needs at least one bit");
    let scale = 2f64.powi(b as i32);
    (value * scale).trunc() / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryBounds {
    pub eps_y: f64,
    pub eps_x: f64,
}

/// `eps_y <= eps_oe^H + lambda^H (2 eps_sp + eps_sp^2)` and likewise for the
/// descriptor entries with `eps_oe^d` and `lambda^d`.
pub fn bound_entry_errors(budget: &ErrorBudget, lambda_h: f64, lambda_d: f64) -> EntryBounds {
    let sp = 2.0 * budget.eps_sp + budget.eps_sp * budget.eps_sp;
    EntryBounds {
        eps_y: budget.eps_oe_h + lambda_h * sp,
        eps_x: budget.eps_oe_d + lambda_d * sp,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamErrorBound {
    pub labels: Vec<String>,
    pub ranges: Vec<f64>,
    /// `2 eps / range`; infinite for a constant descriptor.
    pub bounds: Vec<f64>,
}

impl ParamErrorBound {
    pub fn has_infinite(&self) -> bool {
        self.bounds.iter().any(|b| b.is_infinite())
    }
}

/// Per-column descriptor range over the samples.
pub fn descriptor_ranges(samples: &[SampleRecord], columns: &[usize]) -> Vec<f64> {
    columns
        .iter()
        .map(|&c| {
            let lo = samples.iter().map(|s| s.descriptors[c]).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|s| s.descriptors[c]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .collect()
}

pub fn bound_param_error(eps_oe_h: f64, samples: &[SampleRecord], columns: &[usize], labels: &[String]) -> Result<ParamErrorBound> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("parameter bound needs at least two samples".into()));
    }
    let ranges = descriptor_ranges(samples, columns);
    let bounds = ranges
        .iter()
        .map(|&r| if r > 1e-14 { 2.0 * eps_oe_h / r } else { f64::INFINITY })
        .collect();
    Ok(ParamErrorBound {
        labels: columns.iter().map(|&c| labels.get(c).cloned().unwrap_or_default()).collect(),
        ranges,
        bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bits: u32,
    pub label: String,
    pub observed: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Which entries the sweep perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Energies only, descriptors untouched.
    #[default]
    EnergyOnly,
    /// Energies and descriptors.
    Both,
}

/// Refits with `b`-bit truncated data for every `b` in `bits` and compares
/// the coupling shifts with `2^(1-b)/range`.
pub fn run_truncation_sweep(
    samples: &[SampleRecord],
    columns: &[usize],
    labels: &[String],
    bits: std::ops::RangeInclusive<u32>,
    mode: SweepMode,
) -> Result<Vec<SweepRow>> {
    let exact = fit_samples(samples, columns, labels, true)?;
    let reference = exact
        .couplings
        .clone()
        .ok_or_else(|| Error::InvalidArgument("reference fit is rank deficient".into()))?;
    let ranges = descriptor_ranges(samples, columns);
    let rows: Result<Vec<Vec<SweepRow>>> = bits
        .collect::<Vec<u32>>()
        .into_par_iter()
        .map(|b| {
            let truncated: Vec<SampleRecord> = samples
                .iter()
                .map(|s| SampleRecord {
                    energy: truncate_b_bits(s.energy, b),
                    descriptors: match mode {
                        SweepMode::EnergyOnly => s.descriptors.clone(),
                        SweepMode::Both => s.descriptors.iter().map(|&d| truncate_b_bits(d, b)).collect(),
                    },
                    noise: Some(crate::dmd::Noise::Truncation { bits: b }),
                    ..s.clone()
                })
                .collect();
            let fit = fit_samples(&truncated, columns, labels, true)?;
            let g = fit
                .couplings
                .ok_or_else(|| Error::InvalidArgument(format!("truncated fit at b = {b} is rank deficient")))?;
            let eps = 2f64.powi(-(b as i32));
            Ok((0..columns.len())
                .map(|j| {
                    let observed = (g[j] - reference[j]).abs();
                    let bound = if ranges[j] > 1e-14 { 2.0 * eps / ranges[j] } else { f64::INFINITY };
                    SweepRow {
                        bits: b,
                        label: labels.get(columns[j]).cloned().unwrap_or_default(),
                        observed,
                        bound,
                        ratio: observed / bound,
                    }
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetBudget {
    pub eps_oe_h: f64,
    pub bits: u32,
}

/// Largest `eps_oe^H` whose bound meets `target` on every coupling, and the
/// matching truncation width.
pub fn budget_from_target(target: f64, samples: &[SampleRecord], columns: &[usize]) -> Result<TargetBudget> {
    if !(target > 0.0) {
        return Err(Error::InvalidArgument(format!("target must be positive, got {target}")));
    }
    let ranges = descriptor_ranges(samples, columns);
    let min = ranges.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-14) {
        return Err(Error::InvalidArgument("a descriptor has zero range".into()));
    }
    let eps = target * min / 2.0;
    Ok(TargetBudget {
        eps_oe_h: eps,
        bits: (1.0 / eps).log2().ceil().max(1.0) as u32,
    })
}
