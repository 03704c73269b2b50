//! Numerical reconstruction of the consistency conditions behind the exact
//! families: given a family and a split of the eleven quantities
//! {A, B, D, β, y, μ, ga, gm, gam, α, ε} into knowns and unknowns, find
//! unknown values for which the stationary residual vanishes on a
//! collocation subsample, then validate on the full grid at four times the
//! resolution. Free parameter directions are first-class: the solver reports
//! the null-space dimension of the Jacobian instead of failing on continua.

pub mod lm;

use std::fmt;
use std::str::FromStr;

use crate::catalog::{self, AnsatzParams, FamilyId};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{self, ChemicalPotential, Couplings};
use crate::presets::Preset;

pub use lm::{LmOptions, LmStop};

/// One of the eleven quantities a constraint problem can fix or solve for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    AtomAmp,
    Shape,
    MolAmp,
    Beta,
    Background,
    Mu,
    GA,
    GM,
    GAm,
    Alpha,
    Epsilon,
}

pub const ALL_PARAMS: [Param; 11] = [
    Param::AtomAmp,
    Param::Shape,
    Param::MolAmp,
    Param::Beta,
    Param::Background,
    Param::Mu,
    Param::GA,
    Param::GM,
    Param::GAm,
    Param::Alpha,
    Param::Epsilon,
];

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::AtomAmp => "A",
            Param::Shape => "B",
            Param::MolAmp => "D",
            Param::Beta => "beta",
            Param::Background => "y",
            Param::Mu => "mu",
            Param::GA => "g_a",
            Param::GM => "g_m",
            Param::GAm => "g_am",
            Param::Alpha => "alpha",
            Param::Epsilon => "epsilon",
        }
    }

    /// Quantities that actually enter a family's ansatz and equations.
    pub fn active_for(family: FamilyId) -> &'static [Param] {
        use Param::*;
        match family {
            FamilyId::DropletGround | FamilyId::DropletExcited => &[
                AtomAmp, Shape, MolAmp, Beta, Mu, GA, GM, GAm, Alpha, Epsilon,
            ],
            FamilyId::PulseGround | FamilyId::PulseExcited => &[
                AtomAmp, Shape, MolAmp, Background, Mu, GA, GM, GAm, Alpha, Epsilon,
            ],
            FamilyId::HyperbolicGround | FamilyId::HyperbolicExcited => &[
                AtomAmp, MolAmp, Beta, Background, Mu, GA, GM, GAm, Alpha, Epsilon,
            ],
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" => Ok(Param::AtomAmp),
            "B" => Ok(Param::Shape),
            "D" => Ok(Param::MolAmp),
            "beta" => Ok(Param::Beta),
            "y" => Ok(Param::Background),
            "mu" => Ok(Param::Mu),
            "g_a" => Ok(Param::GA),
            "g_m" => Ok(Param::GM),
            "g_am" => Ok(Param::GAm),
            "alpha" => Ok(Param::Alpha),
            "epsilon" => Ok(Param::Epsilon),
            other => Err(Error::InvalidArgument(format!(
                "unknown parameter '{other}' (expected one of A B D beta y mu g_a g_m g_am alpha epsilon)"
            ))),
        }
    }
}

/// A complete value assignment for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub family: FamilyId,
    values: [f64; 11],
}

impl Assignment {
    pub fn new(family: FamilyId) -> Self {
        Assignment {
            family,
            values: [0.0; 11],
        }
    }

    pub fn from_parts(
        family: FamilyId,
        params: &AnsatzParams,
        couplings: &Couplings,
        mu: f64,
    ) -> Self {
        let mut a = Assignment::new(family);
        a.set(Param::AtomAmp, params.atom_amp);
        a.set(Param::Shape, params.shape);
        a.set(Param::MolAmp, params.mol_amp);
        a.set(Param::Beta, params.beta);
        a.set(Param::Background, params.background);
        a.set(Param::Mu, mu);
        a.set(Param::GA, couplings.g_a);
        a.set(Param::GM, couplings.g_m);
        a.set(Param::GAm, couplings.g_am);
        a.set(Param::Alpha, couplings.alpha);
        a.set(Param::Epsilon, couplings.epsilon);
        a
    }

    pub fn from_preset(p: &Preset) -> Self {
        Assignment::from_parts(p.family, &p.params, &p.couplings, p.mu)
    }

    fn index(p: Param) -> usize {
        ALL_PARAMS.iter().position(|&q| q == p).unwrap()
    }

    pub fn get(&self, p: Param) -> f64 {
        self.values[Self::index(p)]
    }

    pub fn set(&mut self, p: Param, v: f64) {
        self.values[Self::index(p)] = v;
    }

    pub fn ansatz_params(&self) -> AnsatzParams {
        AnsatzParams::new(
            self.get(Param::AtomAmp),
            self.get(Param::Shape),
            self.get(Param::MolAmp),
            self.get(Param::Beta),
            self.get(Param::Background),
        )
    }

    pub fn couplings(&self) -> Result<Couplings> {
        Couplings::new(
            self.get(Param::GA),
            self.get(Param::GM),
            self.get(Param::GAm),
            self.get(Param::Alpha),
            self.get(Param::Epsilon),
        )
    }

    pub fn mu(&self) -> ChemicalPotential {
        ChemicalPotential(self.get(Param::Mu))
    }

    /// The x → λx covariance map: fields pick up a 1/λ, α a 1/λ, μ and ε a
    /// 1/λ²; maps exact solutions to exact solutions. Shape parameters carry
    /// their own dimensions: β ~ 1/x for the exponential families, B and y
    /// ~ x² for the pulse families, where the ansatz numerators (1 resp. x)
    /// make the atomic amplitude scale as λ (ground) resp. stay fixed
    /// (excited).
    pub fn rescaled(&self, lambda: f64) -> Assignment {
        let mut out = *self;
        let inv = 1.0 / lambda;
        let inv2 = inv * inv;
        out.set(Param::MolAmp, self.get(Param::MolAmp) * inv);
        out.set(Param::Alpha, self.get(Param::Alpha) * inv);
        out.set(Param::Mu, self.get(Param::Mu) * inv2);
        out.set(Param::Epsilon, self.get(Param::Epsilon) * inv2);
        match self.family {
            FamilyId::PulseGround => {
                out.set(Param::AtomAmp, self.get(Param::AtomAmp) * lambda);
                out.set(Param::Shape, self.get(Param::Shape) * lambda * lambda);
                out.set(Param::Background, self.get(Param::Background) * lambda * lambda);
            }
            FamilyId::PulseExcited => {
                out.set(Param::Shape, self.get(Param::Shape) * lambda * lambda);
                out.set(Param::Background, self.get(Param::Background) * lambda * lambda);
            }
            _ => {
                out.set(Param::AtomAmp, self.get(Param::AtomAmp) * inv);
                out.set(Param::Beta, self.get(Param::Beta) * inv);
            }
        }
        out
    }
}

/// Full-grid stationary residual of a family profile under an assignment.
pub fn constraint_residual(
    a: &Assignment,
    grid: &Grid,
) -> Result<(ndarray::Array1<f64>, ndarray::Array1<f64>)> {
    let params = a.ansatz_params();
    params.validate(a.family, None)?;
    let (phi_a, phi_m) = catalog::profiles(a.family, &params, grid)?;
    model::stationary_residual(&phi_a, &phi_m, &a.couplings()?, a.mu(), grid)
}

/// Sup-norm of the full-grid residual.
pub fn residual_sup(a: &Assignment, grid: &Grid) -> Result<f64> {
    let (ra, rm) = constraint_residual(a, grid)?;
    Ok(model::sup_norm(&ra).max(model::sup_norm(&rm)))
}

/// Declaration of a constraint solve: which quantities are held fixed and
/// which are unknowns (their current values act as the initial guess).
#[derive(Debug, Clone)]
pub struct ConstraintProblem {
    pub assignment: Assignment,
    pub unknowns: Vec<Param>,
    pub grid: Grid,
}

impl ConstraintProblem {
    pub fn validate(&self) -> Result<()> {
        let active = Param::active_for(self.assignment.family);
        for u in &self.unknowns {
            if !active.contains(u) {
                return Err(Error::InvalidArgument(format!(
                    "parameter {u} is inert for family {}",
                    self.assignment.family
                )));
            }
        }
        let mut seen = self.unknowns.clone();
        seen.dedup();
        if seen.len() != self.unknowns.len() {
            return Err(Error::InvalidArgument("duplicate unknown".into()));
        }
        if self.unknowns.is_empty() {
            return Err(Error::InvalidArgument("no unknowns declared".into()));
        }
        // domain of the *fixed* part must already be sane when the unknowns
        // do not include the offending parameter
        let params = self.assignment.ansatz_params();
        if !self.unknowns.contains(&Param::Shape)
            && !self.unknowns.contains(&Param::Background)
        {
            params.validate(self.assignment.family, None)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// collocation subsample size used during the iteration
    pub collocation_points: usize,
    /// acceptance threshold on the full-grid sup residual at 4x resolution
    pub tolerance: f64,
    pub lm: LmOptions,
    /// relative singular-value cutoff for the null-space report
    pub rank_tol: f64,
}

impl SolveOptions {
    pub fn for_grid(grid: &Grid) -> Self {
        let tolerance = match grid.kind() {
            crate::grid::GridKind::Periodic => 1e-10,
            crate::grid::GridKind::Bounded => 1e-8,
        };
        SolveOptions {
            collocation_points: 64,
            tolerance,
            lm: LmOptions::default(),
            rank_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintSolution {
    pub assignment: Assignment,
    /// sup-norm of the stationary residual on the 4x-refined full grid
    pub residual_norm: f64,
    /// sup-norm on the collocation subsample at the final iterate
    pub collocation_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// dimension of the numerically-free parameter continuum at the solution
    pub null_space_dim: usize,
}

/// Solve a constraint problem by damped least squares on the collocation
/// residual, then validate the result on the full grid at 4x resolution
/// (collocation artifacts cannot hide there). Rank deficiency of the final
/// Jacobian is reported as `null_space_dim` rather than treated as failure.
pub fn solve(problem: &ConstraintProblem, opts: &SolveOptions) -> Result<ConstraintSolution> {
    problem.validate()?;
    let indices = problem.grid.collocation_indices(opts.collocation_points);
    if problem.unknowns.len() > 2 * indices.len() {
        return Err(Error::InvalidArgument(format!(
            "{} unknowns exceed the {} collocation residuals",
            problem.unknowns.len(),
            2 * indices.len()
        )));
    }

    let base = problem.assignment;
    let unknowns = problem.unknowns.clone();
    let grid = problem.grid.clone();
    let x0: Vec<f64> = unknowns.iter().map(|&p| base.get(p)).collect();

    let mut residual = |x: &[f64]| -> Result<Vec<f64>> {
        let mut asg = base;
        for (p, v) in unknowns.iter().zip(x.iter()) {
            asg.set(*p, *v);
        }
        let (ra, rm) = constraint_residual(&asg, &grid)?;
        let mut out = Vec::with_capacity(2 * indices.len());
        for &i in &indices {
            out.push(ra[i]);
        }
        for &i in &indices {
            out.push(rm[i]);
        }
        Ok(out)
    };

    let lm = lm::minimize(&mut residual, &x0, &opts.lm)?;

    let mut solved = base;
    for (p, v) in unknowns.iter().zip(lm.x.iter()) {
        solved.set(*p, *v);
    }

    // full-grid validation at 4x resolution
    let fine = problem.grid.refined(4)?;
    let residual_norm = residual_sup(&solved, &fine)?;
    let converged = residual_norm < opts.tolerance;
    let null_space_dim = lm::null_space_dim(&lm.jacobian, opts.rank_tol);

    Ok(ConstraintSolution {
        assignment: solved,
        residual_norm,
        collocation_norm: lm.residual_sup,
        converged,
        iterations: lm.iterations,
        null_space_dim,
    })
}

/// A parameter sweep for branch continuation.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: Param,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.from];
        }
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.from + h * i as f64).collect()
    }
}

/// Where and why a branch stopped early.
#[derive(Debug, Clone)]
pub struct BranchBoundary {
    pub last_good: f64,
    pub failed_at: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub param: Param,
    pub solutions: Vec<(f64, ConstraintSolution)>,
    pub boundary: Option<BranchBoundary>,
}

/// Predictor-corrector continuation: march the swept parameter across the
/// range, seeding each solve from the previous solution (secant-extrapolated
/// once two points exist). Loss of convergence terminates the branch and
/// localizes the domain-of-existence boundary.
pub fn continuation(
    problem: &ConstraintProblem,
    sweep: &SweepSpec,
    opts: &SolveOptions,
) -> Result<Branch> {
    problem.validate()?;
    if problem.unknowns.contains(&sweep.param) {
        return Err(Error::InvalidArgument(format!(
            "swept parameter {} must be a known, not an unknown",
            sweep.param
        )));
    }
    let values = sweep.values();
    let mut solutions: Vec<(f64, ConstraintSolution)> = Vec::with_capacity(values.len());
    let mut boundary = None;

    for (step, &v) in values.iter().enumerate() {
        let mut asg = match solutions.len() {
            0 => problem.assignment,
            1 => solutions[0].1.assignment,
            _ => {
                // secant predictor in the swept parameter
                let (v1, s1) = &solutions[solutions.len() - 2];
                let (v2, s2) = &solutions[solutions.len() - 1];
                let mut pred = s2.assignment;
                let denom = v2 - v1;
                if denom.abs() > 0.0 {
                    let w = (v - v2) / denom;
                    for &p in &problem.unknowns {
                        let extrap =
                            s2.assignment.get(p) + w * (s2.assignment.get(p) - s1.assignment.get(p));
                        pred.set(p, extrap);
                    }
                }
                pred
            }
        };
        asg.set(sweep.param, v);
        let sub = ConstraintProblem {
            assignment: asg,
            unknowns: problem.unknowns.clone(),
            grid: problem.grid.clone(),
        };
        match solve(&sub, opts) {
            Ok(sol) if sol.converged => solutions.push((v, sol)),
            Ok(sol) => {
                boundary = Some(BranchBoundary {
                    last_good: solutions.last().map(|(v, _)| *v).unwrap_or(f64::NAN),
                    failed_at: v,
                    reason: format!(
                        "validation residual {:.3e} above tolerance after {} iterations",
                        sol.residual_norm, sol.iterations
                    ),
                });
                break;
            }
            Err(e) => {
                boundary = Some(BranchBoundary {
                    last_good: solutions.last().map(|(v, _)| *v).unwrap_or(f64::NAN),
                    failed_at: v,
                    reason: e.to_string(),
                });
                break;
            }
        }
        let _ = step;
    }

    Ok(Branch {
        param: sweep.param,
        solutions,
        boundary,
    })
}
