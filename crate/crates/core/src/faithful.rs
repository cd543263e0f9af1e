//! Orbit kernels, averaged kernels and separation certificates.
//!
//! For a base point `a`, the orbit kernel `p_a(g) = p(d(ga, a))` is
//! positive-definite on the isometry group whenever `p` is positive on the
//! space. Averaging over base points `a_1, …, a_n` gives `t`, and for
//! `g` outside `U = {g : d(g a_i, a_i) < ε for all i}` one has
//! `t(g) ≤ 1 - δ/n` where `δ = 1 - sup{p(x) : x ≥ ε}`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::gns::{direct_sum, gns_build, GnsError, GnsOptions, UnitaryRep};
use crate::isometry::{Isometry, IsometryGroup};
use crate::kernel::{GroupKernel, KernelError, KernelFunction};
use crate::metric::FiniteMetricSpace;

/// Slack on the separation bound.
pub const BOUND_SLACK: f64 = 1e-12;
/// Slack on the margin realized through the GNS representation.
pub const MARGIN_SLACK: f64 = 1e-8;
/// Representation matrices of distinct elements must differ by more than this.
pub const INJECTIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaithfulError {
    #[error("point index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("no basepoints given")]
    EmptyBasepoints,
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("kernel {kernel} has no certified gap at epsilon {epsilon}")]
    NoGapCertified { kernel: String, epsilon: f64 },
    #[error("kernel {0} does not satisfy p(0) = 1")]
    NotAdmissible(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Gns(#[from] GnsError),
}

pub type Result<T> = std::result::Result<T, FaithfulError>;

/// `p_a(g) = p(d(g(a), a))`.
#[derive(Debug, Clone)]
pub struct OrbitKernel {
    p: KernelFunction,
    space: Arc<FiniteMetricSpace>,
    basepoint: usize,
}

pub fn orbit_kernel(p: &KernelFunction, space: &FiniteMetricSpace, a: usize) -> Result<OrbitKernel> {
    if a >= space.len() {
        return Err(FaithfulError::IndexOutOfRange(a));
    }
    if !p.admissibility().p0_is_one {
        return Err(FaithfulError::NotAdmissible(p.name().to_string()));
    }
    Ok(OrbitKernel {
        p: p.clone(),
        space: Arc::new(space.clone()),
        basepoint: a,
    })
}

impl OrbitKernel {
    pub fn basepoint(&self) -> usize {
        self.basepoint
    }
}

impl GroupKernel for OrbitKernel {
    fn value(&self, g: &Isometry) -> std::result::Result<f64, KernelError> {
        if g.len() != self.space.len() {
            return Err(KernelError::MismatchedGroup(g.clone()));
        }
        let a = self.basepoint;
        self.p.eval(self.space.dist(g.apply(a), a))
    }
}

/// `t(g) = (1/n) Σ_k p_{a_k}(g)`.
#[derive(Debug, Clone)]
pub struct AveragedKernel {
    orbits: Vec<OrbitKernel>,
}

pub fn averaged_kernel(p: &KernelFunction, space: &FiniteMetricSpace, basepoints: &[usize]) -> Result<AveragedKernel> {
    if basepoints.is_empty() {
        return Err(FaithfulError::EmptyBasepoints);
    }
    let orbits = basepoints
        .iter()
        .map(|&a| orbit_kernel(p, space, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragedKernel { orbits })
}

impl GroupKernel for AveragedKernel {
    fn value(&self, g: &Isometry) -> std::result::Result<f64, KernelError> {
        let mut sum = 0.0;
        for k in &self.orbits {
            sum += k.value(g)?;
        }
        Ok(sum / self.orbits.len() as f64)
    }
}

/// Basic neighborhood of the identity: base points and a radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodSpec {
    basepoints: Vec<usize>,
    epsilon: f64,
}

impl NeighborhoodSpec {
    pub fn new(space: &FiniteMetricSpace, basepoints: Vec<usize>, epsilon: f64) -> Result<Self> {
        if basepoints.is_empty() {
            return Err(FaithfulError::EmptyBasepoints);
        }
        if let Some(&bad) = basepoints.iter().find(|&&a| a >= space.len()) {
            return Err(FaithfulError::IndexOutOfRange(bad));
        }
        if !(epsilon > 0.0) {
            return Err(FaithfulError::NonPositiveEpsilon(epsilon));
        }
        Ok(Self { basepoints, epsilon })
    }

    /// All points as base points, `ε` half the minimum pairwise distance
    /// (or 1 for a single point).
    pub fn default_for(space: &FiniteMetricSpace) -> Self {
        Self {
            basepoints: (0..space.len()).collect(),
            epsilon: space.min_distance().map_or(1.0, |d| d / 2.0),
        }
    }

    pub fn basepoints(&self) -> &[usize] {
        &self.basepoints
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `max_i d(g a_i, a_i)`.
    pub fn displacement(&self, space: &FiniteMetricSpace, g: &Isometry) -> f64 {
        self.basepoints
            .iter()
            .map(|&a| space.dist(g.apply(a), a))
            .fold(0.0, f64::max)
    }
}

/// Indices of elements with every base point displaced by strictly less than `ε`.
pub fn neighborhood_members(group: &IsometryGroup, spec: &NeighborhoodSpec) -> Vec<usize> {
    let space = group.space();
    (0..group.order())
        .filter(|&k| spec.displacement(space, group.element(k)) < spec.epsilon)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationCertificate {
    pub basepoints: Vec<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub bound: f64,
    /// `max t(g)` over `G ∖ U`; `None` when the complement is empty.
    pub achieved_sup: Option<f64>,
    /// `min |1 - t(g)|` over `G ∖ U`.
    pub margin: Option<f64>,
    #[serde(rename = "members_of_U")]
    pub members_of_u: Vec<Isometry>,
    pub complement_size: usize,
    pub pass: bool,
}

impl SeparationCertificate {
    pub fn is_vacuous(&self) -> bool {
        self.complement_size == 0
    }
}

pub fn separation_certificate(
    group: &IsometryGroup,
    p: &KernelFunction,
    spec: &NeighborhoodSpec,
) -> Result<SeparationCertificate> {
    let sup = p.strict_sup_gap(spec.epsilon).ok_or_else(|| FaithfulError::NoGapCertified {
        kernel: p.name().to_string(),
        epsilon: spec.epsilon,
    })?;
    let t = averaged_kernel(p, group.space(), &spec.basepoints)?;
    let delta = 1.0 - sup;
    let n = spec.basepoints.len();
    let bound = 1.0 - delta / n as f64;

    let members = neighborhood_members(group, spec);
    let mut in_u = vec![false; group.order()];
    for &k in &members {
        in_u[k] = true;
    }
    let mut achieved_sup: Option<f64> = None;
    let mut margin: Option<f64> = None;
    for (k, g) in group.elements().iter().enumerate() {
        if in_u[k] {
            continue;
        }
        let v = t.value(g)?;
        achieved_sup = Some(achieved_sup.map_or(v, |s| s.max(v)));
        let m = (1.0 - v).abs();
        margin = Some(margin.map_or(m, |s| s.min(m)));
    }
    let pass = achieved_sup.is_none_or(|s| s <= bound + BOUND_SLACK);
    Ok(SeparationCertificate {
        basepoints: spec.basepoints.clone(),
        epsilon: spec.epsilon,
        delta,
        n,
        bound,
        achieved_sup,
        margin,
        members_of_u: members.iter().map(|&k| group.element(k).clone()).collect(),
        complement_size: group.order() - members.len(),
        pass,
    })
}

/// Per-spec part of a faithfulness report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecReport {
    pub certificate: SeparationCertificate,
    pub dim: usize,
    /// `min |1 - ⟨ρ_U(g)v, v⟩|` over `G ∖ U`.
    pub realized_margin: Option<f64>,
    /// `realized_margin ≥ margin - 1e-8`.
    pub transfer_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaithfulReport {
    pub specs: Vec<SpecReport>,
    pub dim: usize,
    pub injective: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_pair: Option<(Isometry, Isometry)>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct FaithfulOutcome {
    pub rep: UnitaryRep,
    pub report: FaithfulReport,
}

/// GNS representation of the averaged kernel for each spec, direct-summed,
/// together with a check that the sum is injective.
pub fn faithful_representation(
    group: &Arc<IsometryGroup>,
    p: &KernelFunction,
    specs: &[NeighborhoodSpec],
    options: GnsOptions,
) -> Result<FaithfulOutcome> {
    let mut reps = Vec::with_capacity(specs.len());
    let mut spec_reports = Vec::with_capacity(specs.len());
    for spec in specs {
        let certificate = separation_certificate(group, p, spec)?;
        let t = averaged_kernel(p, group.space(), &spec.basepoints)?;
        let rep = gns_build(group, &t, options)?;

        let members = neighborhood_members(group, spec);
        let realized_margin = (0..group.order())
            .filter(|k| !members.contains(k))
            .map(|k| (1.0 - rep.reconstruct_at(k)).abs())
            .reduce(f64::min);
        let transfer_pass = match (realized_margin, certificate.margin) {
            (Some(r), Some(a)) => r >= a - MARGIN_SLACK,
            _ => true,
        };
        spec_reports.push(SpecReport {
            certificate,
            dim: rep.dim(),
            realized_margin,
            transfer_pass,
        });
        reps.push(rep);
    }
    let rep = direct_sum(&reps)?;

    let witness = first_collision(&rep);
    let injective = witness.is_none();
    let pass = injective
        && spec_reports.iter().all(|s| {
            s.certificate.pass && s.transfer_pass && s.certificate.margin.is_none_or(|a| a > 0.0)
        });
    let report = FaithfulReport {
        specs: spec_reports,
        dim: rep.dim(),
        injective,
        witness_pair: witness.map(|(a, b)| (group.element(a).clone(), group.element(b).clone())),
        pass,
    };
    Ok(FaithfulOutcome { rep, report })
}

/// First pair of distinct elements whose matrices agree to within `INJECTIVITY_TOL`.
pub fn first_collision(rep: &UnitaryRep) -> Option<(usize, usize)> {
    let n = rep.group().order();
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .find(|&(a, b)| (rep.matrix_at(a) - rep.matrix_at(b)).amax() <= INJECTIVITY_TOL)
}
