//! Fermi-Hubbard and Heisenberg operators on small lattices.
//!
//! Spin-orbitals are numbered site-major with the up spin first: mode `2i`
//! is `(i, up)` and mode `2i + 1` is `(i, down)`. A configuration is a `u64`
//! bit mask over modes, and the Jordan-Wigner string runs over lower modes.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Largest sector the builders will enumerate.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Chain,
    /// Two legs of length `N/2`; site `2x + leg`.
    #[serde(rename = "ladder-2xL", alias = "ladder")]
    Ladder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub sites: usize,
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub electrons: usize,
    /// Hole-doping fraction; informational once `electrons` is set.
    #[serde(default)]
    pub doping: f64,
}

impl LatticeSpec {
    /// Half-filled open chain.
    pub fn chain(sites: usize) -> Self {
        Self {
            sites,
            geometry: Geometry::Chain,
            boundary: Boundary::Open,
            electrons: sites,
            doping: 0.0,
        }
    }

    /// Half-filled open `2 x N/2` ladder.
    pub fn ladder(sites: usize) -> Self {
        Self {
            geometry: Geometry::Ladder,
            ..Self::chain(sites)
        }
    }

    pub fn periodic(mut self) -> Self {
        self.boundary = Boundary::Periodic;
        self
    }

    /// Sets the electron count to `round((1 - p) N)`.
    pub fn with_doping(mut self, p: f64) -> Self {
        self.doping = p;
        self.electrons = ((1.0 - p) * self.sites as f64).round() as usize;
        self
    }

    pub fn with_electrons(mut self, electrons: usize) -> Self {
        self.electrons = electrons;
        self.doping = 1.0 - electrons as f64 / self.sites as f64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidLattice(format!("need at least 2 sites, got {}", self.sites)));
        }
        if self.sites > 32 {
            return Err(Error::InvalidLattice(format!("{} sites exceed the 64-mode bit mask", self.sites)));
        }
        if self.geometry == Geometry::Ladder && !self.sites.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!("ladder needs an even site count, got {}", self.sites)));
        }
        if !(0.0..1.0).contains(&self.doping) && self.electrons <= self.sites {
            return Err(Error::InvalidLattice(format!("doping {} outside [0, 1)", self.doping)));
        }
        if self.electrons > 2 * self.sites {
            return Err(Error::InvalidSector(format!(
                "{} electrons exceed 2N = {}",
                self.electrons,
                2 * self.sites
            )));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds `(i, j)` with `i < j`, deduplicated.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.sites;
        let periodic = self.boundary == Boundary::Periodic;
        let mut bonds = Vec::new();
        match self.geometry {
            Geometry::Chain => {
                for i in 0..n - 1 {
                    bonds.push((i, i + 1));
                }
                if periodic && n > 2 {
                    bonds.push((0, n - 1));
                }
            }
            Geometry::Ladder => {
                let len = n / 2;
                for x in 0..len {
                    bonds.push((2 * x, 2 * x + 1));
                    let next = if x + 1 < len {
                        Some(x + 1)
                    } else if periodic && len > 2 {
                        Some(0)
                    } else {
                        None
                    };
                    if let Some(y) = next {
                        for leg in 0..2 {
                            let (a, b) = (2 * x + leg, 2 * y + leg);
                            bonds.push((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        bonds.sort_unstable();
        bonds.dedup();
        bonds
    }

    /// All `(N_up, N_dn)` sectors at this filling.
    pub fn sectors(&self) -> Vec<Sector> {
        let n = self.sites;
        let e = self.electrons;
        let lo = e.saturating_sub(n);
        let hi = e.min(n);
        (lo..=hi).map(|up| Sector::new(up, e - up)).collect()
    }

    /// The sector with the smallest non-negative `S_z`.
    pub fn default_sector(&self) -> Sector {
        let up = self.electrons.div_ceil(2);
        Sector::new(up, self.electrons - up)
    }

    /// Checkerboard spin pattern with holes placed on the last sites.
    pub fn neel(&self) -> Vec<SiteOccupation> {
        let mut occ = Vec::with_capacity(self.sites);
        for s in 0..self.sites {
            let parity = match self.geometry {
                Geometry::Chain => s % 2,
                Geometry::Ladder => (s / 2 + s % 2) % 2,
            };
            occ.push(if parity == 0 { SiteOccupation::UP } else { SiteOccupation::DOWN });
        }
        let holes = self.sites.saturating_sub(self.electrons);
        for o in occ.iter_mut().rev().take(holes) {
            *o = SiteOccupation::EMPTY;
        }
        occ
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub n_up: usize,
    pub n_dn: usize,
}

impl Sector {
    pub fn new(n_up: usize, n_dn: usize) -> Self {
        Self { n_up, n_dn }
    }

    pub fn particles(&self) -> usize {
        self.n_up + self.n_dn
    }

    /// Twice the total `S_z`.
    pub fn two_sz(&self) -> i64 {
        self.n_up as i64 - self.n_dn as i64
    }
}

/// Per-site electron counts; each must be 0 or 1 to be physical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteOccupation {
    pub up: u8,
    pub down: u8,
}

impl SiteOccupation {
    pub const EMPTY: Self = Self { up: 0, down: 0 };
    pub const UP: Self = Self { up: 1, down: 0 };
    pub const DOWN: Self = Self { up: 0, down: 1 };
    pub const DOUBLE: Self = Self { up: 1, down: 1 };
}

/// Packs per-site occupations into a mode bit mask.
pub fn configuration(occupations: &[SiteOccupation]) -> Result<u64> {
    if occupations.len() > 32 {
        return Err(Error::InvalidArgument("more than 32 sites".into()));
    }
    let mut w = 0u64;
    for (i, o) in occupations.iter().enumerate() {
        if o.up > 1 || o.down > 1 {
            return Err(Error::InvalidArgument(format!(
                "site {i} holds {} up and {} down electrons",
                o.up, o.down
            )));
        }
        w |= (o.up as u64) << (2 * i);
        w |= (o.down as u64) << (2 * i + 1);
    }
    Ok(w)
}

pub fn count_up(w: u64) -> usize {
    (w & 0x5555_5555_5555_5555).count_ones() as usize
}

pub fn count_down(w: u64) -> usize {
    (w & 0xAAAA_AAAA_AAAA_AAAA).count_ones() as usize
}

/// Number of doubly occupied sites `m`.
pub fn double_occupancy(w: u64) -> usize {
    (w & (w >> 1) & 0x5555_5555_5555_5555).count_ones() as usize
}

/// Exchanges up and down on every site. The sign is `(-1)^m`.
pub fn spin_flip(w: u64) -> (u64, f64) {
    let up = w & 0x5555_5555_5555_5555;
    let dn = w & 0xAAAA_AAAA_AAAA_AAAA;
    let flipped = (up << 1) | (dn >> 1);
    let sign = if double_occupancy(w).is_multiple_of(2) { 1.0 } else { -1.0 };
    (flipped, sign)
}

/// Ordered occupation basis of one `(N_up, N_dn)` sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    sites: usize,
    sector: Sector,
    singly_occupied: bool,
    states: Vec<u64>,
}

impl FockBasis {
    pub fn new(sites: usize, sector: Sector) -> Result<Self> {
        Self::build(sites, sector, false, DEFAULT_DIMENSION_CAP)
    }

    /// Spin basis: every site holds exactly one electron.
    pub fn spin(sites: usize, n_up: usize) -> Result<Self> {
        if n_up > sites {
            return Err(Error::InvalidSector(format!("{n_up} up spins on {sites} sites")));
        }
        Self::build(sites, Sector::new(n_up, sites - n_up), true, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(sites: usize, sector: Sector, cap: usize) -> Result<Self> {
        Self::build(sites, sector, false, cap)
    }

    fn build(sites: usize, sector: Sector, singly_occupied: bool, cap: usize) -> Result<Self> {
        if sites == 0 || sites > 32 {
            return Err(Error::InvalidLattice(format!("{sites} sites")));
        }
        if sector.n_up > sites || sector.n_dn > sites {
            return Err(Error::InvalidSector(format!(
                "({}, {}) electrons on {sites} sites exceed 2N = {}",
                sector.n_up,
                sector.n_dn,
                2 * sites
            )));
        }
        let dim = if singly_occupied {
            binomial(sites, sector.n_up)
        } else {
            binomial(sites, sector.n_up).saturating_mul(binomial(sites, sector.n_dn))
        };
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let ups = subsets(sites, sector.n_up);
        let mut states = Vec::with_capacity(dim);
        if singly_occupied {
            let all = (1u64 << sites) - 1;
            for &u in &ups {
                states.push(interleave(u, all & !u));
            }
        } else {
            let dns = subsets(sites, sector.n_dn);
            for &u in &ups {
                for &d in &dns {
                    states.push(interleave(u, d));
                }
            }
        }
        states.sort_unstable();
        Ok(Self {
            sites,
            sector,
            singly_occupied,
            states,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn is_spin_basis(&self) -> bool {
        self.singly_occupied
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index(&self, w: u64) -> Option<usize> {
        self.states.binary_search(&w).ok()
    }

    pub fn contains(&self, w: u64) -> bool {
        self.index(w).is_some()
    }
}

fn interleave(up: u64, dn: u64) -> u64 {
    let mut w = 0u64;
    for i in 0..32 {
        w |= ((up >> i) & 1) << (2 * i);
        w |= ((dn >> i) & 1) << (2 * i + 1);
    }
    w
}

fn subsets(n: usize, k: usize) -> Vec<u64> {
    (0u64..(1u64 << n)).filter(|x| x.count_ones() as usize == k).collect()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// A product of creation and annihilation operators times a coefficient.
///
/// `ops` is written left to right as in the operator product, so the
/// rightmost operator acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, bool)>,
}

impl FermionTerm {
    pub fn new(coeff: f64, ops: Vec<(usize, bool)>) -> Self {
        Self { coeff, ops }
    }

    /// `c_dag(to) c(from)`
    pub fn hop(coeff: f64, to: usize, from: usize) -> Self {
        Self::new(coeff, vec![(to, true), (from, false)])
    }

    pub fn number(coeff: f64, mode: usize) -> Self {
        Self::hop(coeff, mode, mode)
    }

    /// Acts on a configuration; `None` when the result vanishes.
    pub fn apply(&self, w: u64) -> Option<(u64, f64)> {
        let mut state = w;
        let mut amp = self.coeff;
        for &(mode, dagger) in self.ops.iter().rev() {
            let bit = 1u64 << mode;
            let occupied = state & bit != 0;
            if occupied == dagger {
                return None;
            }
            if (state & (bit - 1)).count_ones() % 2 == 1 {
                amp = -amp;
            }
            state ^= bit;
        }
        Some((state, amp))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coeff: self.coeff,
            ops: self.ops.iter().rev().map(|&(m, d)| (m, !d)).collect(),
        }
    }
}

/// `c_dag_a c_b + c_dag_b c_a` on both spins for every bond.
pub fn hopping_terms(spec: &LatticeSpec) -> Vec<FermionTerm> {
    let mut terms = Vec::new();
    for (i, j) in spec.bonds() {
        for s in 0..2 {
            terms.push(FermionTerm::hop(1.0, 2 * i + s, 2 * j + s));
            terms.push(FermionTerm::hop(1.0, 2 * j + s, 2 * i + s));
        }
    }
    terms
}

pub fn double_occupancy_terms(sites: usize) -> Vec<FermionTerm> {
    (0..sites)
        .map(|i| FermionTerm::new(1.0, vec![(2 * i, true), (2 * i, false), (2 * i + 1, true), (2 * i + 1, false)]))
        .collect()
}

/// `S_i . S_j` in fermionic form.
pub fn spin_spin_terms(i: usize, j: usize) -> Vec<FermionTerm> {
    let n = |m: usize| [(m, true), (m, false)];
    let zz = |a: usize, b: usize, c: f64| {
        let mut ops = n(a).to_vec();
        ops.extend_from_slice(&n(b));
        FermionTerm::new(c, ops)
    };
    let (iu, id, ju, jd) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
    vec![
        zz(iu, ju, 0.25),
        zz(id, jd, 0.25),
        zz(iu, jd, -0.25),
        zz(id, ju, -0.25),
        // S+_i S-_j and S-_i S+_j
        FermionTerm::new(0.5, vec![(iu, true), (id, false), (jd, true), (ju, false)]),
        FermionTerm::new(0.5, vec![(ju, true), (jd, false), (id, true), (iu, false)]),
    ]
}

pub fn hubbard_terms(spec: &LatticeSpec, t: f64, u: f64) -> Vec<FermionTerm> {
    let mut terms: Vec<FermionTerm> = hopping_terms(spec)
        .into_iter()
        .map(|mut h| {
            h.coeff = -t;
            h
        })
        .collect();
    if u != 0.0 {
        for mut d in double_occupancy_terms(spec.sites) {
            d.coeff = u;
            terms.push(d);
        }
    }
    terms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyUnit {
    /// Units of the hopping `t`.
    Hopping,
    /// Units of the exchange `J`.
    Exchange,
    Dimensionless,
}

impl EnergyUnit {
    pub fn label(&self) -> &'static str {
        match self {
            EnergyUnit::Hopping => "t",
            EnergyUnit::Exchange => "J",
            EnergyUnit::Dimensionless => "1",
        }
    }
}

/// Sparse real-symmetric operator restricted to one sector.
#[derive(Debug, Clone)]
pub struct ManyBodyOperator {
    pub label: String,
    pub basis: Arc<FockBasis>,
    pub matrix: CsrMatrix,
    /// Upper bound on the spectral norm.
    pub norm_bound: f64,
    pub unit: EnergyUnit,
    /// Commutes with the global spin flip.
    pub spin_flip_symmetric: bool,
}

impl ManyBodyOperator {
    pub fn from_terms(
        label: impl Into<String>,
        basis: Arc<FockBasis>,
        terms: &[FermionTerm],
        norm_bound: f64,
        unit: EnergyUnit,
    ) -> Self {
        let dim = basis.dim();
        let mut triplets = Vec::with_capacity(dim * (terms.len() / 4 + 1));
        for (col, &w) in basis.states().iter().enumerate() {
            for term in terms {
                if let Some((w2, amp)) = term.apply(w) {
                    if let Some(row) = basis.index(w2) {
                        triplets.push((row, col, amp));
                    }
                }
            }
        }
        Self {
            label: label.into(),
            basis,
            matrix: CsrMatrix::from_triplets(dim, triplets),
            norm_bound,
            unit,
            spin_flip_symmetric: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.matrix.mul_vec(v)
    }

    /// `max |A_ij - A_ji|`
    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.asymmetry()
    }

    /// Weighted sum of operators on the same sector.
    pub fn linear_combination(
        label: impl Into<String>,
        parts: &[(f64, &ManyBodyOperator)],
        constant: f64,
        unit: EnergyUnit,
    ) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty combination".into()))?.1;
        if parts.iter().any(|(_, op)| op.basis != first.basis) {
            return Err(Error::SectorMismatch);
        }
        let dim = first.dim();
        let mut triplets = Vec::new();
        for (c, op) in parts {
            triplets.extend(op.matrix.triplets().map(|(i, j, v)| (i, j, c * v)));
        }
        if constant != 0.0 {
            triplets.extend((0..dim).map(|i| (i, i, constant)));
        }
        let norm_bound = parts.iter().map(|(c, op)| c.abs() * op.norm_bound).sum::<f64>() + constant.abs();
        Ok(Self {
            label: label.into(),
            basis: first.basis.clone(),
            matrix: CsrMatrix::from_triplets(dim, triplets),
            norm_bound,
            unit,
            spin_flip_symmetric: parts.iter().all(|(_, op)| op.spin_flip_symmetric),
        })
    }
}

/// `-t sum (c_dag c + h.c.) + U sum n_up n_dn`, with `lambda = 4Nt + NU`.
pub fn build_hubbard(spec: &LatticeSpec, sector: Sector, t: f64, u: f64) -> Result<ManyBodyOperator> {
    spec.validate()?;
    check_sector(spec, sector)?;
    if t <= 0.0 || u < 0.0 {
        return Err(Error::InvalidArgument(format!("need t > 0 and U >= 0, got t = {t}, U = {u}")));
    }
    let basis = Arc::new(FockBasis::new(spec.sites, sector)?);
    let n = spec.sites as f64;
    let mut op = ManyBodyOperator::from_terms(
        format!("hubbard(U={u})"),
        basis,
        &hubbard_terms(spec, t, u),
        4.0 * n * t + n * u,
        EnergyUnit::Hopping,
    );
    op.spin_flip_symmetric = true;
    Ok(op)
}

/// `J sum S_i . S_j + c` on the spin basis with `n_up` up spins.
pub fn build_heisenberg(spec: &LatticeSpec, n_up: usize, j: f64, c: f64) -> Result<ManyBodyOperator> {
    spec.validate()?;
    if spec.electrons != spec.sites {
        return Err(Error::InvalidSector("the spin model needs one electron per site".into()));
    }
    let basis = Arc::new(FockBasis::spin(spec.sites, n_up)?);
    let bonds = spec.bonds();
    let mut terms = Vec::new();
    for &(a, b) in &bonds {
        for mut term in spin_spin_terms(a, b) {
            term.coeff *= j;
            terms.push(term);
        }
    }
    let dim = basis.dim();
    let mut op = ManyBodyOperator::from_terms(
        format!("heisenberg(J={j})"),
        basis,
        &terms,
        0.75 * j.abs() * bonds.len() as f64 + c.abs(),
        EnergyUnit::Exchange,
    );
    if c != 0.0 {
        let shift = CsrMatrix::from_triplets(dim, (0..dim).map(|i| (i, i, c)).collect());
        op.matrix = op.matrix.add(&shift);
    }
    op.spin_flip_symmetric = true;
    Ok(op)
}

fn check_sector(spec: &LatticeSpec, sector: Sector) -> Result<()> {
    if sector.particles() != spec.electrons {
        return Err(Error::InvalidSector(format!(
            "sector ({}, {}) does not hold {} electrons",
            sector.n_up, sector.n_dn, spec.electrons
        )));
    }
    if sector.n_up > spec.sites || sector.n_dn > spec.sites {
        return Err(Error::InvalidSector(format!(
            "{} electrons exceed 2N = {}",
            sector.particles(),
            2 * spec.sites
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum DescriptorKind {
    TotalHopping,
    TotalDoubleOccupancy,
    SpinSpin { i: usize, j: usize },
    /// `S_i . S_j` summed over lattice bonds.
    TotalSpinSpin,
    /// `c_dag(p1)..c_dag(pn) c(qn)..c(q1) + h.c.` on spin-orbitals.
    RdmElement { creators: Vec<usize>, annihilators: Vec<usize> },
}

impl DescriptorKind {
    pub fn label(&self) -> String {
        match self {
            DescriptorKind::TotalHopping => "hopping".into(),
            DescriptorKind::TotalDoubleOccupancy => "double-occupancy".into(),
            DescriptorKind::SpinSpin { i, j } => format!("S{i}.S{j}"),
            DescriptorKind::TotalSpinSpin => "spin-spin".into(),
            DescriptorKind::RdmElement { creators, annihilators } => {
                let c: Vec<String> = creators.iter().map(|p| p.to_string()).collect();
                let a: Vec<String> = annihilators.iter().map(|p| p.to_string()).collect();
                format!("rdm[{};{}]", c.join(","), a.join(","))
            }
        }
    }
}

pub fn build_descriptor(spec: &LatticeSpec, basis: Arc<FockBasis>, kind: &DescriptorKind) -> Result<ManyBodyOperator> {
    spec.validate()?;
    let n = spec.sites;
    if basis.sites() != n {
        return Err(Error::SectorMismatch);
    }
    let label = kind.label();
    let (terms, norm, symmetric) = match kind {
        DescriptorKind::TotalHopping => {
            let terms = hopping_terms(spec);
            let norm = terms.len() as f64 / 2.0;
            (terms, norm, true)
        }
        DescriptorKind::TotalDoubleOccupancy => (double_occupancy_terms(n), n as f64, true),
        DescriptorKind::SpinSpin { i, j } => {
            if *i >= n || *j >= n || i == j {
                return Err(Error::InvalidArgument(format!("spin-spin({i}, {j}) on {n} sites")));
            }
            (spin_spin_terms(*i, *j), 0.75, true)
        }
        DescriptorKind::TotalSpinSpin => {
            let bonds = spec.bonds();
            let terms = bonds.iter().flat_map(|&(a, b)| spin_spin_terms(a, b)).collect();
            (terms, 0.75 * bonds.len() as f64, true)
        }
        DescriptorKind::RdmElement { creators, annihilators } => {
            if creators.is_empty() || creators.len() != annihilators.len() {
                return Err(Error::InvalidArgument("rdm element needs nu >= 1 creators and annihilators".into()));
            }
            if creators.iter().chain(annihilators).any(|&p| p >= 2 * n) {
                return Err(Error::InvalidArgument(format!("orbital index out of range for {} modes", 2 * n)));
            }
            let mut ops: Vec<(usize, bool)> = creators.iter().map(|&p| (p, true)).collect();
            ops.extend(annihilators.iter().rev().map(|&q| (q, false)));
            let term = FermionTerm::new(1.0, ops);
            let adj = term.adjoint();
            let mut sorted_c = creators.clone();
            let mut sorted_a = annihilators.clone();
            sorted_c.sort_unstable();
            sorted_a.sort_unstable();
            let terms = if sorted_c == sorted_a && creators == annihilators {
                vec![term]
            } else {
                vec![term, adj]
            };
            (terms, 1.0, false)
        }
    };
    let mut op = ManyBodyOperator::from_terms(label, basis, &terms, norm, EnergyUnit::Dimensionless);
    op.spin_flip_symmetric = symmetric;
    Ok(op)
}

/// Spin-conserving `nu`-body RDM elements with canonical index order.
pub fn rdm_pool(sites: usize, nu: usize) -> Vec<DescriptorKind> {
    let modes = 2 * sites;
    let tuples: Vec<Vec<usize>> = (0u64..(1u64 << modes))
        .filter(|x| x.count_ones() as usize == nu)
        .map(|x| (0..modes).filter(|&m| x >> m & 1 == 1).collect())
        .collect();
    let spin = |set: &[usize]| set.iter().filter(|&&m| m % 2 == 0).count();
    let mut out = Vec::new();
    for (a, c) in tuples.iter().enumerate() {
        for q in &tuples[a..] {
            if spin(c) == spin(q) {
                out.push(DescriptorKind::RdmElement {
                    creators: c.clone(),
                    annihilators: q.clone(),
                });
            }
        }
    }
    out
}

/// State vector over a sector basis.
#[derive(Debug, Clone)]
pub struct Wavefunction {
    pub basis: Arc<FockBasis>,
    pub amplitudes: DVector<f64>,
    /// Set on intermediate projector states whose norm may be below one.
    pub subnormalized: bool,
}

impl Wavefunction {
    pub fn new(basis: Arc<FockBasis>, amplitudes: DVector<f64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::SectorMismatch);
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            basis,
            amplitudes: amplitudes / norm,
            subnormalized: false,
        })
    }

    pub fn subnormalized(basis: Arc<FockBasis>, amplitudes: DVector<f64>) -> Self {
        Self {
            basis,
            amplitudes,
            subnormalized: true,
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

#[derive(Debug, Clone)]
pub struct ProductState {
    pub configuration: u64,
    /// Number of doubly occupied sites.
    pub m: usize,
    pub state: Wavefunction,
}

pub fn product_state(basis: &Arc<FockBasis>, occupations: &[SiteOccupation]) -> Result<ProductState> {
    if occupations.len() != basis.sites() {
        return Err(Error::InvalidArgument(format!(
            "{} occupations for {} sites",
            occupations.len(),
            basis.sites()
        )));
    }
    let w = configuration(occupations)?;
    basis_product_state(basis, w)
}

pub fn basis_product_state(basis: &Arc<FockBasis>, w: u64) -> Result<ProductState> {
    let index = basis.index(w).ok_or(Error::NotInSector(w))?;
    let mut amps = DVector::zeros(basis.dim());
    amps[index] = 1.0;
    Ok(ProductState {
        configuration: w,
        m: double_occupancy(w),
        state: Wavefunction {
            basis: basis.clone(),
            amplitudes: amps,
            subnormalized: false,
        },
    })
}

/// Rayleigh quotient `<psi|A|psi> / <psi|psi>`.
pub fn expectation(op: &ManyBodyOperator, psi: &Wavefunction) -> Result<f64> {
    if op.basis != psi.basis {
        return Err(Error::SectorMismatch);
    }
    let nn = psi.amplitudes.norm_squared();
    if nn == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(op.matrix.quadratic_form(psi.amplitudes.as_slice()) / nn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dimer() -> LatticeSpec {
        LatticeSpec::chain(2)
    }

    #[test]
    fn basis_sizes() {
        let b = FockBasis::new(4, Sector::new(2, 2)).unwrap();
        assert_eq!(b.dim(), 36);
        let s = FockBasis::spin(4, 2).unwrap();
        assert_eq!(s.dim(), 6);
        assert!(s.states().iter().all(|&w| double_occupancy(w) == 0));
        for (i, &w) in b.states().iter().enumerate() {
            assert_eq!(b.index(w), Some(i));
            assert_eq!(count_up(w), 2);
            assert_eq!(count_down(w), 2);
        }
    }

    #[test]
    fn ladder_bonds() {
        let l = LatticeSpec::ladder(6);
        assert_eq!(l.bonds(), vec![(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5)]);
        assert_eq!(LatticeSpec::ladder(8).periodic().bonds().len(), 12);
        assert_eq!(LatticeSpec::chain(4).periodic().bonds().len(), 4);
        assert_eq!(LatticeSpec::chain(2).periodic().bonds().len(), 1);
    }

    #[test]
    fn invalid_specs() {
        assert!(LatticeSpec::ladder(5).validate().is_err());
        assert!(LatticeSpec::chain(1).validate().is_err());
        let over = LatticeSpec::chain(2).with_electrons(5);
        assert!(matches!(build_hubbard(&over, Sector::new(3, 2), 1.0, 4.0), Err(Error::InvalidSector(_))));
        assert!(build_hubbard(&dimer(), Sector::new(2, 1), 1.0, 1.0).is_err());
    }

    #[test]
    fn doping_rounds_electrons() {
        let s = LatticeSpec::chain(8).with_doping(0.1);
        assert_eq!(s.electrons, 7);
        assert_eq!(LatticeSpec::chain(22).with_doping(0.1).electrons, 20);
    }

    #[test]
    fn hubbard_dimer_matrix() {
        let h = build_hubbard(&dimer(), Sector::new(1, 1), 1.0, 8.0).unwrap();
        assert_eq!(h.dim(), 4);
        assert_eq!(h.norm_bound, 4.0 * 2.0 + 2.0 * 8.0);
        assert!(h.hermiticity_defect() < 1e-12);
        let dense = h.matrix.to_dense();
        let diag: Vec<f64> = (0..4).map(|i| dense[(i, i)]).collect();
        let doubles: Vec<f64> = h.basis.states().iter().map(|&w| 8.0 * double_occupancy(w) as f64).collect();
        assert_eq!(diag, doubles);
        // every off-diagonal element is +-t between states one hop apart
        for i in 0..4 {
            for j in 0..4 {
                if i != j && dense[(i, j)] != 0.0 {
                    assert_eq!(dense[(i, j)].abs(), 1.0);
                }
            }
        }
    }

    #[test]
    fn descriptor_expectations() {
        let spec = dimer();
        let basis = Arc::new(FockBasis::new(2, Sector::new(1, 1)).unwrap());
        let d = build_descriptor(&spec, basis.clone(), &DescriptorKind::TotalDoubleOccupancy).unwrap();
        let both = product_state(&basis, &[SiteOccupation::DOUBLE, SiteOccupation::EMPTY]).unwrap();
        assert_eq!(both.m, 1);
        assert_eq!(expectation(&d, &both.state).unwrap(), 1.0);
        let t = build_descriptor(&spec, basis.clone(), &DescriptorKind::TotalHopping).unwrap();
        for &w in basis.states() {
            let ps = basis_product_state(&basis, w).unwrap();
            assert_eq!(expectation(&t, &ps.state).unwrap(), 0.0);
        }
    }

    #[test]
    fn neel_spin_spin() {
        let spec = LatticeSpec::chain(4);
        let basis = Arc::new(FockBasis::new(4, Sector::new(2, 2)).unwrap());
        let ss = build_descriptor(&spec, basis.clone(), &DescriptorKind::SpinSpin { i: 0, j: 1 }).unwrap();
        let neel = product_state(&basis, &spec.neel()).unwrap();
        assert_eq!(neel.m, 0);
        assert!((expectation(&ss, &neel.state).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_state_errors() {
        let basis = Arc::new(FockBasis::new(2, Sector::new(1, 1)).unwrap());
        let bad = [SiteOccupation { up: 2, down: 1 }, SiteOccupation::EMPTY];
        assert!(product_state(&basis, &bad).is_err());
        let wrong = [SiteOccupation::UP, SiteOccupation::UP];
        assert!(matches!(product_state(&basis, &wrong), Err(Error::NotInSector(_))));
    }

    #[test]
    fn fermion_signs() {
        // c_dag_2 c_0 on |modes 0,1> passes the electron in mode 1
        let t = FermionTerm::hop(1.0, 2, 0);
        assert_eq!(t.apply(0b011), Some((0b110, -1.0)));
        assert_eq!(t.apply(0b001), Some((0b100, 1.0)));
        assert_eq!(t.apply(0b100), None);
        let (w, s) = spin_flip(0b0111);
        assert_eq!(w, 0b1011);
        assert_eq!(s, -1.0);
    }

    #[test]
    fn rdm_pool_counts() {
        // one-body spin-conserving elements p <= q within each spin species
        let pool = rdm_pool(3, 1);
        assert_eq!(pool.len(), 2 * 6);
        let two = rdm_pool(3, 2);
        assert!(two.len() > pool.len());
    }

    #[test]
    fn rdm_element_is_hermitian_with_unit_norm() {
        let spec = LatticeSpec::chain(3);
        let basis = Arc::new(FockBasis::new(3, Sector::new(2, 1)).unwrap());
        for kind in rdm_pool(3, 2) {
            let op = build_descriptor(&spec, basis.clone(), &kind).unwrap();
            assert!(op.hermiticity_defect() < 1e-14, "{}", kind.label());
            assert!(op.matrix.gershgorin() <= 2.0 + 1e-12);
        }
    }
}
