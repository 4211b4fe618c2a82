//! Strong-coupling band bounds, product-state infidelities against the
//! low-energy space, and their extrapolation in system size.

use serde::{Deserialize, Serialize};

use crate::eigen::{diagonalize_lowest, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::lattice::{binomial, build_hubbard, configuration, double_occupancy, LatticeSpec};
use crate::projector::amplification_iterations;

/// Interval of `E/U` for dressed double-occupancy sector `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandBound {
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
}

impl BandBound {
    /// Distance of `x` outside the interval, zero inside.
    pub fn violation(&self, x: f64) -> f64 {
        (self.lower - x).max(x - self.upper).max(0.0)
    }
}

/// `[m - 3(2m + pN) t/U, m + 3(2m + pN) t/U]`
pub fn band_bounds(m: usize, n: usize, p: f64, t: f64, u: f64) -> BandBound {
    let half = 3.0 * (2.0 * m as f64 + p * n as f64) * t / u;
    BandBound {
        m,
        lower: m as f64 - half,
        upper: m as f64 + half,
    }
}

/// For each energy, the violation of the nearest band in units of `U`.
pub fn containment_slack(energies: &[f64], n: usize, p: f64, t: f64, u: f64) -> Vec<f64> {
    let bands: Vec<BandBound> = (0..=n).map(|m| band_bounds(m, n, p, t, u)).collect();
    energies
        .iter()
        .map(|&e| bands.iter().map(|b| b.violation(e / u)).fold(f64::INFINITY, f64::min))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateInfidelity {
    pub configuration: u64,
    /// Double occupancy of the product state.
    pub m: usize,
    /// `||(1 - P_Lambda)|w>||`
    pub infidelity: f64,
}

/// Infidelity of basis product states against span{E <= cut}.
///
/// A partial spectrum is accepted when it already reaches above `cut`.
pub fn compute_infidelities(spec: &SpectralDecomposition, cut: f64, configurations: &[u64]) -> Result<Vec<StateInfidelity>> {
    let reaches = spec.eigenvalues.last().is_some_and(|&e| e > cut);
    if !spec.complete && !reaches {
        return Err(Error::InvalidArgument(format!("partial spectrum ends below Lambda = {cut}")));
    }
    let cols: Vec<usize> = (0..spec.len()).filter(|&k| spec.eigenvalues[k] <= cut).collect();
    configurations
        .iter()
        .map(|&w| {
            let i = spec.basis.index(w).ok_or(Error::NotInSector(w))?;
            let weight: f64 = cols.iter().map(|&k| spec.eigenvectors[(i, k)].powi(2)).sum();
            Ok(StateInfidelity {
                configuration: w,
                m: double_occupancy(w),
                infidelity: (1.0 - weight).max(0.0).sqrt(),
            })
        })
        .collect()
}

/// Top of the lower band taken as the eigenvalue counting the states
/// without double occupancy, `C(N, N_up) C(N - N_up, N_dn)`.
pub fn lower_band_edge(spec: &SpectralDecomposition) -> Result<f64> {
    let basis = &spec.basis;
    let s = basis.sector();
    let count = binomial(basis.sites(), s.n_up) * binomial(basis.sites() - s.n_up, s.n_dn);
    spec.eigenvalues
        .get(count - 1)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("need the lowest {count} eigenvalues, have {}", spec.len())))
}

/// Number of states in the `m = 0` band of a sector.
pub fn lower_band_size(sites: usize, n_up: usize, n_dn: usize) -> usize {
    binomial(sites, n_up) * binomial(sites - n_up, n_dn)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub residuals: Vec<f64>,
}

impl LineFit {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line through the per-size maxima.
pub fn fit_upper_edge(points: &[(usize, f64)]) -> Result<LineFit> {
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    fit_line(&xs, &ys)
}

fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 sizes, got {}", xs.len())));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all sizes coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x).collect();
    Ok(LineFit {
        intercept,
        slope,
        residuals,
    })
}

/// `ceil((pi/asin(sqrt(1 - I^2)) - 1)/2)`
pub fn n_iter_from_infidelity(infidelity: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&infidelity) {
        return Err(Error::ExtrapolationRange(infidelity));
    }
    Ok(amplification_iterations((1.0 - infidelity * infidelity).sqrt(), 0.0)?.appendix_iterations)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub target_n: usize,
    pub infidelity: f64,
    pub n_iter: u64,
}

/// Evaluates the edge line at `target_n`; negative predictions clamp to zero.
pub fn extrapolate_niter(fit: &LineFit, target_n: usize) -> Result<ExtrapolationResult> {
    let infidelity = fit.at(target_n as f64).max(0.0);
    Ok(ExtrapolationResult {
        target_n,
        infidelity,
        n_iter: n_iter_from_infidelity(infidelity)?,
    })
}

/// `a exp(-b N)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub a: f64,
    pub b: f64,
}

impl ExponentialFit {
    pub fn at(&self, n: f64) -> f64 {
        self.a * (-self.b * n).exp()
    }
}

pub fn fit_exponential(points: &[(usize, f64)]) -> Result<ExponentialFit> {
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidArgument("exponential fit needs positive values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(ExponentialFit {
        a: line.intercept.exp(),
        b: -line.slope,
    })
}

/// Least-squares `c` of `c/N`.
pub fn fit_inverse(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 3 || points.iter().any(|p| !(p.1 > 0.0) || p.0 == 0) {
        return Err(Error::InvalidArgument("inverse fit needs at least 3 positive values".into()));
    }
    let num: f64 = points.iter().map(|(n, g)| g / *n as f64).sum();
    let den: f64 = points.iter().map(|(n, _)| 1.0 / (*n as f64).powi(2)).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateExtrapolation {
    pub gamma_fit: ExponentialFit,
    /// `c` in `gap = c/N`, units of `t`.
    pub gap_c: f64,
    pub target_n: usize,
    pub gamma: f64,
    pub gap: f64,
    /// `delta lambda^H = gap/2`, the analogue of `(Lambda - E_0)/2`.
    pub delta_lambda: f64,
}

pub fn ground_state_extrapolation(series: &[SizeRecord], target_n: usize) -> Result<GroundStateExtrapolation> {
    let gammas: Vec<(usize, f64)> = series.iter().map(|r| (r.n, r.gamma_neel)).collect();
    let gaps: Vec<(usize, f64)> = series.iter().map(|r| (r.n, r.gap)).collect();
    let gamma_fit = fit_exponential(&gammas)?;
    let gap_c = fit_inverse(&gaps)?;
    let gap = gap_c / target_n as f64;
    Ok(GroundStateExtrapolation {
        gamma_fit,
        gap_c,
        target_n,
        gamma: gamma_fit.at(target_n as f64),
        gap,
        delta_lambda: gap / 2.0,
    })
}

/// Exact-diagonalization summary for one lattice size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRecord {
    pub n: usize,
    pub cut: f64,
    pub max_m0_infidelity: f64,
    pub min_excited_infidelity: f64,
    /// `|<E_0|Neel>|`
    pub gamma_neel: f64,
    /// `E_1 - E_0` in the sector.
    pub gap: f64,
    pub e0: f64,
}

/// Lower-band infidelity data for a half-filled `S_z = 0` lattice.
pub fn half_filled_record(spec_lattice: &LatticeSpec, t: f64, u: f64) -> Result<SizeRecord> {
    let sector = spec_lattice.default_sector();
    let h = build_hubbard(spec_lattice, sector, t, u)?;
    let band = lower_band_size(spec_lattice.sites, sector.n_up, sector.n_dn);
    let k = (band + 2).min(h.dim());
    let spec = diagonalize_lowest(&h, k)?;
    let cut = lower_band_edge(&spec)?;
    let states = spec.basis.states().to_vec();
    let inf = compute_infidelities(&spec, cut + 1e-9 * u, &states)?;
    let max_m0 = inf.iter().filter(|s| s.m == 0).map(|s| s.infidelity).fold(0.0, f64::max);
    let min_excited = inf.iter().filter(|s| s.m > 0).map(|s| s.infidelity).fold(f64::INFINITY, f64::min);
    let neel = configuration(&spec_lattice.neel())?;
    let i = spec.basis.index(neel).ok_or(Error::NotInSector(neel))?;
    Ok(SizeRecord {
        n: spec_lattice.sites,
        cut,
        max_m0_infidelity: max_m0,
        min_excited_infidelity: min_excited,
        gamma_neel: spec.eigenvectors[(i, 0)].abs(),
        gap: spec.eigenvalues[1] - spec.eigenvalues[0],
        e0: spec.eigenvalues[0],
    })
}

/// Maximum `m = 0` infidelity at threshold `cut`, computing just enough of
/// the spectrum to pass it.
pub fn max_m0_infidelity(lattice: &LatticeSpec, t: f64, u: f64, cut: f64) -> Result<f64> {
    let sector = lattice.default_sector();
    let h = build_hubbard(lattice, sector, t, u)?;
    let mut k = (lower_band_size(lattice.sites, sector.n_up, sector.n_dn) + 8).min(h.dim());
    loop {
        let spec = diagonalize_lowest(&h, k)?;
        if spec.complete || spec.eigenvalues.last().is_some_and(|&e| e > cut) {
            let m0: Vec<u64> = spec.basis.states().iter().copied().filter(|&w| double_occupancy(w) == 0).collect();
            let inf = compute_infidelities(&spec, cut, &m0)?;
            return Ok(inf.iter().map(|s| s.infidelity).fold(0.0, f64::max));
        }
        k = (k * 3 / 2).min(h.dim());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::diagonalize;
    use crate::lattice::Sector;

    #[test]
    fn bands() {
        let b = band_bounds(0, 8, 0.0, 1.0, 12.0);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        let b = band_bounds(0, 8, 0.125, 1.0, 8.0);
        assert!((b.upper - b.lower - 6.0 * 0.125 * 8.0 / 8.0).abs() < 1e-15);
        let b = band_bounds(1, 4, 0.0, 1.0, 12.0);
        assert!((b.lower - (1.0 - 0.5)).abs() < 1e-15 && (b.upper - 1.5).abs() < 1e-15);
        assert_eq!(b.violation(1.0), 0.0);
        assert!((b.violation(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn infidelity_limits() {
        let lat = LatticeSpec::ladder(4);
        let h = build_hubbard(&lat, Sector::new(2, 2), 1.0, 24.0).unwrap();
        let spec = diagonalize(&h).unwrap();
        let all = spec.basis.states().to_vec();
        let hi = compute_infidelities(&spec, 1e9, &all).unwrap();
        assert!(hi.iter().all(|s| s.infidelity < 1e-7));
        let lo = compute_infidelities(&spec, -1e9, &all).unwrap();
        assert!(lo.iter().all(|s| (s.infidelity - 1.0).abs() < 1e-12));
        let cut = lower_band_edge(&spec).unwrap();
        let mid = compute_infidelities(&spec, cut + 1e-9, &all).unwrap();
        let m0 = mid.iter().filter(|s| s.m == 0).map(|s| s.infidelity).fold(0.0, f64::max);
        let m1 = mid.iter().filter(|s| s.m > 0).map(|s| s.infidelity).fold(1.0, f64::min);
        assert!(m0 < 0.3 && m1 > 0.9, "{m0} {m1}");
    }

    #[test]
    fn fits() {
        let f = fit_upper_edge(&[(2, 0.1), (4, 0.2), (6, 0.3)]).unwrap();
        assert!((f.slope - 0.05).abs() < 1e-14 && f.intercept.abs() < 1e-14);
        let c = fit_upper_edge(&[(2, 0.3), (4, 0.3), (8, 0.3)]).unwrap();
        assert!(c.slope.abs() < 1e-15);
        assert!(fit_upper_edge(&[(2, 0.1), (4, 0.2)]).is_err());
        let e = fit_exponential(&[(2, 2.0 * (-0.6f64).exp()), (4, 2.0 * (-1.2f64).exp()), (6, 2.0 * (-1.8f64).exp())]).unwrap();
        assert!((e.a - 2.0).abs() < 1e-12 && (e.b - 0.3).abs() < 1e-12);
        assert!((fit_inverse(&[(2, 1.0), (4, 0.5), (8, 0.25)]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(n_iter_from_infidelity(0.0).unwrap(), 1);
        assert!(n_iter_from_infidelity(1.0).is_err());
    }
}
