//! Closed-form constructors for the six exact stationary families and their
//! algebraically equivalent superposed/reparametrized forms.
//!
//! Families pair up as (ground, excited) sharing one molecular profile:
//! droplet (I, II), power-law pulse (III, IV), hyperbolic (V, VI). Ground
//! atomic profiles are even with no node; excited ones are odd with a single
//! node at x = 0.

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::Grid;
use crate::model::ChemicalPotential;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    /// ψa = A cosh(βx)/(B + cosh²(βx)), ψm = D/(B + cosh²(βx))
    DropletGround,
    /// ψa = A sinh(βx)/(B + cosh²(βx)), same molecular profile
    DropletExcited,
    /// ψa = A/(B + x²), ψm = D(x² + y)/(B + x²)
    PulseGround,
    /// ψa = A x/(B + x²), same molecular profile
    PulseExcited,
    /// ψa = A sech²(βx), ψm = Bm (sech²(βx) + y)
    HyperbolicGround,
    /// ψa = A sech(βx) tanh(βx), same molecular profile
    HyperbolicExcited,
}

pub const ALL_FAMILIES: [FamilyId; 6] = [
    FamilyId::DropletGround,
    FamilyId::DropletExcited,
    FamilyId::PulseGround,
    FamilyId::PulseExcited,
    FamilyId::HyperbolicGround,
    FamilyId::HyperbolicExcited,
];

impl FamilyId {
    /// Roman-numeral label used on the command line and in reports.
    pub fn numeral(self) -> &'static str {
        match self {
            FamilyId::DropletGround => "I",
            FamilyId::DropletExcited => "II",
            FamilyId::PulseGround => "III",
            FamilyId::PulseExcited => "IV",
            FamilyId::HyperbolicGround => "V",
            FamilyId::HyperbolicExcited => "VI",
        }
    }

    pub fn is_ground(self) -> bool {
        matches!(
            self,
            FamilyId::DropletGround | FamilyId::PulseGround | FamilyId::HyperbolicGround
        )
    }

    /// The partner sharing the molecular profile.
    pub fn partner(self) -> FamilyId {
        match self {
            FamilyId::DropletGround => FamilyId::DropletExcited,
            FamilyId::DropletExcited => FamilyId::DropletGround,
            FamilyId::PulseGround => FamilyId::PulseExcited,
            FamilyId::PulseExcited => FamilyId::PulseGround,
            FamilyId::HyperbolicGround => FamilyId::HyperbolicExcited,
            FamilyId::HyperbolicExcited => FamilyId::HyperbolicGround,
        }
    }

    pub fn is_droplet(self) -> bool {
        matches!(self, FamilyId::DropletGround | FamilyId::DropletExcited)
    }
    pub fn is_pulse(self) -> bool {
        matches!(self, FamilyId::PulseGround | FamilyId::PulseExcited)
    }
    pub fn is_hyperbolic(self) -> bool {
        matches!(
            self,
            FamilyId::HyperbolicGround | FamilyId::HyperbolicExcited
        )
    }

    /// Pulse profiles have power-law tails and want bounded/FD grids; the
    /// other families decay exponentially and are periodic-friendly.
    pub fn prefers_bounded_grid(self) -> bool {
        self.is_pulse()
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.numeral())
    }
}

impl FromStr for FamilyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(FamilyId::DropletGround),
            "II" | "2" => Ok(FamilyId::DropletExcited),
            "III" | "3" => Ok(FamilyId::PulseGround),
            "IV" | "4" => Ok(FamilyId::PulseExcited),
            "V" | "5" => Ok(FamilyId::HyperbolicGround),
            "VI" | "6" => Ok(FamilyId::HyperbolicExcited),
            other => Err(Error::InvalidArgument(format!(
                "unknown family '{other}' (expected I..VI)"
            ))),
        }
    }
}

/// Per-family shape parameters.
///
/// Slot usage by family (the hyperbolic families reuse the paper's letter B
/// for their molecular amplitude; it lives in the amplitude slot `mol_amp`
/// here to avoid colliding with the droplet/pulse shape parameter):
///
/// | family | `atom_amp` | `shape`       | `mol_amp`        | `beta` | `background` |
/// |--------|-----------|----------------|------------------|--------|--------------|
/// | I/II   | A         | B > 0          | D                | β > 0  | unused       |
/// | III/IV | A         | B > 0          | D                | unused | y ≠ B        |
/// | V/VI   | A         | unused         | molecular amp    | β > 0  | y            |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzParams {
    pub atom_amp: f64,
    pub shape: f64,
    pub mol_amp: f64,
    pub beta: f64,
    pub background: f64,
}

impl AnsatzParams {
    pub const fn new(atom_amp: f64, shape: f64, mol_amp: f64, beta: f64, background: f64) -> Self {
        AnsatzParams {
            atom_amp,
            shape,
            mol_amp,
            beta,
            background,
        }
    }

    /// Superposition half-separation Δ with B = sinh²Δ (droplet families).
    pub fn delta(&self) -> Result<f64> {
        if self.shape > 0.0 {
            Ok(self.shape.sqrt().asinh())
        } else {
            Err(Error::InvalidArgument(format!(
                "delta needs B > 0, got B = {}",
                self.shape
            )))
        }
    }

    /// Domain checks for one family; `mu` additionally enforces β² = -2μ for
    /// the droplet families where the stationary form requires it.
    pub fn validate(&self, family: FamilyId, mu: Option<ChemicalPotential>) -> Result<()> {
        let fail = |reason: String| Err(Error::domain(family, reason));
        for (name, v) in [
            ("A", self.atom_amp),
            ("B", self.shape),
            ("D", self.mol_amp),
            ("beta", self.beta),
            ("y", self.background),
        ] {
            if !v.is_finite() {
                return fail(format!("parameter {name} must be finite"));
            }
        }
        match family {
            FamilyId::DropletGround | FamilyId::DropletExcited => {
                if self.shape <= 0.0 {
                    return fail(format!("B must be positive, got {}", self.shape));
                }
                if self.beta <= 0.0 {
                    return fail(format!("beta must be positive, got {}", self.beta));
                }
                if let Some(mu) = mu {
                    let b2 = self.beta * self.beta;
                    if (b2 + 2.0 * mu.value()).abs() > 1e-9 * b2.max(1.0) {
                        return fail(format!(
                            "droplet families require beta^2 = -2 mu, got beta^2 = {} vs -2 mu = {}",
                            b2,
                            -2.0 * mu.value()
                        ));
                    }
                }
            }
            FamilyId::PulseGround | FamilyId::PulseExcited => {
                if self.shape <= 0.0 {
                    return fail(format!("B must be positive, got {}", self.shape));
                }
                let scale = self.shape.abs().max(self.background.abs()).max(1.0);
                if (self.background - self.shape).abs() <= 1e-14 * scale {
                    return fail("y != B is required (y = B collapses the molecular profile)".into());
                }
            }
            FamilyId::HyperbolicGround | FamilyId::HyperbolicExcited => {
                if self.beta <= 0.0 {
                    return fail(format!("beta must be positive, got {}", self.beta));
                }
            }
        }
        Ok(())
    }
}

/// Real spatial profiles (φa, φm) of a family at t = 0.
pub fn profiles(
    family: FamilyId,
    p: &AnsatzParams,
    grid: &Grid,
) -> Result<(Array1<f64>, Array1<f64>)> {
    p.validate(family, None)?;
    let x = grid.points();
    let (a, b, d, beta, y) = (p.atom_amp, p.shape, p.mol_amp, p.beta, p.background);
    let mut phi_a = Array1::zeros(grid.len());
    let mut phi_m = Array1::zeros(grid.len());
    match family {
        FamilyId::DropletGround | FamilyId::DropletExcited => {
            for (i, &xi) in x.iter().enumerate() {
                let u = beta * xi;
                let c = u.cosh();
                // 1/(B/c + c) = c/(B + c^2) without overflow at large |u|
                let core = 1.0 / (b / c + c);
                phi_a[i] = if family == FamilyId::DropletGround {
                    a * core
                } else {
                    a * u.tanh() * core
                };
                phi_m[i] = d / (b + c * c);
            }
        }
        FamilyId::PulseGround | FamilyId::PulseExcited => {
            for (i, &xi) in x.iter().enumerate() {
                let q = b + xi * xi;
                phi_a[i] = if family == FamilyId::PulseGround {
                    a / q
                } else {
                    a * xi / q
                };
                phi_m[i] = d * (xi * xi + y) / q;
            }
        }
        FamilyId::HyperbolicGround | FamilyId::HyperbolicExcited => {
            for (i, &xi) in x.iter().enumerate() {
                let u = beta * xi;
                let s = 1.0 / u.cosh();
                let s2 = s * s;
                phi_a[i] = if family == FamilyId::HyperbolicGround {
                    a * s2
                } else {
                    a * s * u.tanh()
                };
                phi_m[i] = d * (s2 + y);
            }
        }
    }
    Ok((phi_a, phi_m))
}

/// Evaluate a family as a complex field pair at time `t` with the stationary
/// phases e^{-iμt} (atomic) and e^{-2iμt} (molecular).
pub fn eval_family(
    family: FamilyId,
    p: &AnsatzParams,
    mu: ChemicalPotential,
    grid: &Grid,
    t: f64,
) -> Result<FieldPair> {
    p.validate(family, Some(mu))?;
    let (phi_a, phi_m) = profiles(family, p, grid)?;
    let ph_a = C64::from_polar(1.0, -mu.value() * t);
    let ph_m = C64::from_polar(1.0, -2.0 * mu.value() * t);
    FieldPair::new(
        phi_a.mapv(|v| ph_a * v),
        phi_m.mapv(|v| ph_m * v),
        t,
    )
}

/// Droplet profiles rebuilt from shifted kink/bright-soliton constituents
/// (B = sinh²Δ):
///
/// ```text
/// 1/(B + cosh²βx)        = [tanh(βx+Δ) - tanh(βx-Δ)] / sinh(2Δ)
/// cosh βx/(B + cosh²βx)  = [sech(βx+Δ) + sech(βx-Δ)] / (2 cosh Δ)
/// sinh βx/(B + cosh²βx)  = [sech(βx-Δ) - sech(βx+Δ)] / (2 sinh Δ)
/// ```
///
/// Equal to [`eval_family`] at t = 0 pointwise to roundoff.
pub fn superposed_form(family: FamilyId, p: &AnsatzParams, grid: &Grid) -> Result<FieldPair> {
    if !family.is_droplet() {
        return Err(Error::domain(
            family,
            "superposed form exists for the droplet families only",
        ));
    }
    p.validate(family, None)?;
    let delta = p.delta()?;
    let (a, d, beta) = (p.atom_amp, p.mol_amp, p.beta);
    let x = grid.points();
    let mut psi_a = Array1::from_elem(grid.len(), C64::new(0.0, 0.0));
    let mut psi_m = Array1::from_elem(grid.len(), C64::new(0.0, 0.0));
    let sinh2d = (2.0 * delta).sinh();
    let coshd = delta.cosh();
    let sinhd = delta.sinh();
    for (i, &xi) in x.iter().enumerate() {
        let u = beta * xi;
        let sech_p = 1.0 / (u + delta).cosh();
        let sech_m = 1.0 / (u - delta).cosh();
        let kink = ((u + delta).tanh() - (u - delta).tanh()) / sinh2d;
        let atomic = if family == FamilyId::DropletGround {
            a * (sech_p + sech_m) / (2.0 * coshd)
        } else {
            a * (sech_m - sech_p) / (2.0 * sinhd)
        };
        psi_a[i] = C64::new(atomic, 0.0);
        psi_m[i] = C64::new(d * kink, 0.0);
    }
    FieldPair::new(psi_a, psi_m, 0.0)
}

/// Droplet plateau scaling: the molecular plateau density and the chemical
/// potential ratio
///
/// ```text
/// √nm = D(2B+1) / (2B(B+1)),    μ/μ0 = 4B(B+1) / (2B+1)²
/// ```
///
/// μ/μ0 increases strictly with B and approaches the flat-top limit 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropletScaling {
    /// molecular plateau density nm
    pub n_m: f64,
    /// μ/μ0 ∈ (0, 1)
    pub mu_ratio: f64,
}

impl DropletScaling {
    pub fn sqrt_n_m(&self) -> f64 {
        self.n_m.sqrt()
    }
}

pub fn droplet_scaling(b: f64, d: f64) -> Result<DropletScaling> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "droplet scaling needs B > 0, got {b}"
        )));
    }
    let sqrt_n_m = d * (2.0 * b + 1.0) / (2.0 * b * (b + 1.0));
    let mu_ratio = 4.0 * b * (b + 1.0) / ((2.0 * b + 1.0) * (2.0 * b + 1.0));
    Ok(DropletScaling {
        n_m: sqrt_n_m * sqrt_n_m,
        mu_ratio,
    })
}

/// Invert μ/μ0 = 4B(B+1)/(2B+1)² for the unique positive root
/// B = (1 - √(1-r)) / (2√(1-r)). The negative root is rejected because the
/// superposition separation Δ = arcsinh√B needs B > 0.
pub fn invert_mu_ratio(mu_ratio: f64) -> Result<f64> {
    if !(mu_ratio > 0.0 && mu_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mu_ratio must lie in (0, 1), got {mu_ratio}"
        )));
    }
    let s = (1.0 - mu_ratio).sqrt();
    Ok((1.0 - s) / (2.0 * s))
}

/// Droplet field built from the plateau parametrization (nm, μ/μ0, A, μ):
/// B is recovered from μ/μ0, D from nm and B, and β = √(-2μ). Produces the
/// same field as [`eval_family`] with the equivalent (A, B, D, β).
pub fn reparametrized_form(
    family: FamilyId,
    n_m: f64,
    mu_ratio: f64,
    atom_amp: f64,
    mu: ChemicalPotential,
    grid: &Grid,
    t: f64,
) -> Result<FieldPair> {
    if !family.is_droplet() {
        return Err(Error::domain(
            family,
            "the plateau parametrization applies to the droplet families only",
        ));
    }
    if !(mu.value() < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "droplet families need mu < 0, got {}",
            mu.value()
        )));
    }
    if !(n_m >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "plateau density must be nonnegative, got {n_m}"
        )));
    }
    let b = invert_mu_ratio(mu_ratio)?;
    let d = n_m.sqrt() * 2.0 * b * (b + 1.0) / (2.0 * b + 1.0);
    let beta = (-2.0 * mu.value()).sqrt();
    let p = AnsatzParams::new(atom_amp, b, d, beta, 0.0);
    eval_family(family, &p, mu, grid, t)
}
