//! Validated anchor parameter sets, one or more per family.
//!
//! Each preset is a full (parameters, couplings, μ) assignment for which the
//! family profile solves the stationary equations exactly; the residual
//! tests and the constraint solver reproduce them independently. The `soft`
//! variants are scale-covariant rescalings toward smaller β, used for the
//! long-time propagation and relaxation suites where gentler frequencies
//! keep the split-step bias and modulational growth far below the
//! acceptance tolerances.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::catalog::{AnsatzParams, FamilyId};
use crate::grid::{Grid, GridKind};
use crate::model::{ChemicalPotential, Couplings};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub family: FamilyId,
    pub name: &'static str,
    pub params: AnsatzParams,
    pub couplings: Couplings,
    pub mu: f64,
    /// half-width of the recommended box
    pub x_half: f64,
    /// residual-verification resolution
    pub n_verify: usize,
    /// time-evolution resolution (explicit FD stability caps this for the
    /// pulse families)
    pub n_evolve: usize,
    pub note: &'static str,
}

impl Preset {
    pub fn grid_kind(&self) -> GridKind {
        if self.family.prefers_bounded_grid() {
            GridKind::Bounded
        } else {
            GridKind::Periodic
        }
    }

    pub fn verify_grid(&self) -> Result<Grid> {
        match self.grid_kind() {
            GridKind::Periodic => Grid::periodic(-self.x_half, self.x_half, self.n_verify),
            GridKind::Bounded => Grid::bounded(-self.x_half, self.x_half, self.n_verify),
        }
    }

    pub fn evolve_grid(&self) -> Result<Grid> {
        match self.grid_kind() {
            GridKind::Periodic => Grid::periodic(-self.x_half, self.x_half, self.n_evolve),
            GridKind::Bounded => Grid::bounded(-self.x_half, self.x_half, self.n_evolve),
        }
    }

    pub fn chemical_potential(&self) -> ChemicalPotential {
        ChemicalPotential(self.mu)
    }

    /// Residual tolerance this preset is verified against: spectral floor on
    /// periodic grids, FD4 truncation floor on bounded ones.
    pub fn residual_tolerance(&self) -> f64 {
        match self.grid_kind() {
            GridKind::Periodic => 1e-10,
            GridKind::Bounded => 1e-8,
        }
    }
}

const fn couplings(g_a: f64, g_m: f64, g_am: f64, alpha: f64, epsilon: f64) -> Couplings {
    Couplings {
        g_a,
        g_m,
        g_am,
        alpha,
        epsilon,
    }
}

pub static PRESETS: &[Preset] = &[
    Preset {
        family: FamilyId::DropletGround,
        name: "default",
        params: AnsatzParams::new(1.0, 1.0, 1.0, 1.0, 0.0),
        couplings: couplings(-10.0, 2.0, -2.0, 2.5 * SQRT_2, -2.5),
        mu: -0.5,
        x_half: 36.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "unit-amplitude droplet; mu/mu0 = 8/9 at B = 1",
    },
    Preset {
        family: FamilyId::DropletExcited,
        name: "default",
        params: AnsatzParams::new(1.0, 1.0, 1.0, 1.0, 0.0),
        couplings: couplings(-6.5, -6.0, -5.0, -0.25 * SQRT_2, 0.25),
        mu: -0.5,
        x_half: 36.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "single-node partner of the unit droplet",
    },
    Preset {
        family: FamilyId::DropletExcited,
        name: "soft",
        params: AnsatzParams::new(0.5, 1.0, 0.5, 0.5, 0.0),
        couplings: couplings(-6.5, -6.0, -5.0, -0.125 * SQRT_2, 0.0625),
        mu: -0.125,
        x_half: 72.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "beta = 1/2 rescaling of 'default'; propagation anchor",
    },
    Preset {
        family: FamilyId::PulseGround,
        name: "default",
        params: AnsatzParams::new(4.0, 4.0, 1.0, 0.0, 0.0),
        couplings: couplings(-0.5, 0.0, -0.5, 0.125 * SQRT_2, -0.5),
        mu: -0.25,
        x_half: 80.0,
        n_verify: 32769,
        n_evolve: 4097,
        note: "wide Lorentzian-squared pulse on a constant molecular background",
    },
    Preset {
        family: FamilyId::PulseGround,
        name: "narrow",
        params: AnsatzParams::new(1.0, 1.0, 1.0, 0.0, 0.0),
        couplings: couplings(-2.0, 0.0, -2.0, FRAC_1_SQRT_2, -2.0),
        mu: -1.0,
        x_half: 80.0,
        n_verify: 32769,
        n_evolve: 4097,
        note: "unit-width pulse; residual checks only",
    },
    Preset {
        family: FamilyId::PulseExcited,
        name: "default",
        params: AnsatzParams::new(1.0, 4.0, SQRT_2 / 3.0, 0.0, -2.0),
        couplings: couplings(17.0, 2.25, 6.5, -1.0 / 3.0, 35.0 / 18.0),
        mu: 11.0 / 9.0,
        x_half: 80.0,
        n_verify: 32769,
        n_evolve: 4097,
        note: "odd pulse; the excited pulse exists for y strictly inside (-B, 0)",
    },
    Preset {
        family: FamilyId::HyperbolicGround,
        name: "y0",
        params: AnsatzParams::new(3.0 * FRAC_1_SQRT_2, 0.0, -3.0 * FRAC_1_SQRT_2, 1.0, 0.0),
        couplings: couplings(-1.0, -1.0, 1.0, 1.0, -3.0),
        mu: -2.0,
        x_half: 36.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "mu = -2 beta^2, eps = -3 beta^2, amp = -3 beta^2/(sqrt2 alpha), g_a = g_m = -g_am",
    },
    Preset {
        family: FamilyId::HyperbolicGround,
        name: "y0-soft",
        params: AnsatzParams::new(0.48 * FRAC_1_SQRT_2, 0.0, -0.48 * FRAC_1_SQRT_2, 0.4, 0.0),
        couplings: couplings(2.0, 2.0, -2.0, 1.0, -0.48),
        mu: -0.32,
        x_half: 50.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "beta = 2/5, repulsive branch (g_a = g_m = 2): constrained energy minimizer; propagation and relaxation anchor",
    },
    Preset {
        family: FamilyId::HyperbolicExcited,
        name: "y0",
        params: AnsatzParams::new(1.0, 0.0, 1.0, 1.0, 0.0),
        couplings: couplings(-2.0, -2.0, -2.0, -FRAC_1_SQRT_2, 0.5),
        mu: -0.5,
        x_half: 36.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "mu = -beta^2/2 branch of the odd hyperbolic state",
    },
    Preset {
        family: FamilyId::HyperbolicExcited,
        name: "y0-soft",
        params: AnsatzParams::new(0.5, 0.0, 0.5, 0.5, 0.0),
        couplings: couplings(-2.0, -2.0, -2.0, -0.5 * FRAC_1_SQRT_2, 0.125),
        mu: -0.125,
        x_half: 72.0,
        n_verify: 2048,
        n_evolve: 2048,
        note: "beta = 1/2 rescaling of 'y0'; propagation anchor",
    },
];

/// Look a preset up by family and name.
pub fn find(family: FamilyId, name: &str) -> Option<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.family == family && p.name == name)
}

/// All presets of one family.
pub fn for_family(family: FamilyId) -> impl Iterator<Item = &'static Preset> {
    PRESETS.iter().filter(move |p| p.family == family)
}

/// The preset used for long-time propagation checks of a family.
pub fn propagation_anchor(family: FamilyId) -> &'static Preset {
    let preferred = match family {
        FamilyId::DropletGround => "default",
        FamilyId::DropletExcited => "soft",
        FamilyId::PulseGround => "default",
        FamilyId::PulseExcited => "default",
        FamilyId::HyperbolicGround => "y0-soft",
        FamilyId::HyperbolicExcited => "y0-soft",
    };
    find(family, preferred).expect("every family ships a propagation anchor")
}
