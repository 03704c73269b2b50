//! The continuum model: couplings, stationary residuals, conserved
//! quantities, energy functional, Madelung split and the continuity equation.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::{self, Grid};
use crate::C64;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Physical parameter set: two-body interaction strengths, photoassociation
/// strength and the atom-to-molecule energy mismatch. All dimensionless
/// (natural units); any sign is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// atom-atom interaction strength
    pub g_a: f64,
    /// molecule-molecule interaction strength
    pub g_m: f64,
    /// atom-molecule interaction strength
    pub g_am: f64,
    /// photoassociation strength
    pub alpha: f64,
    /// energy mismatch of the atom -> molecule conversion
    pub epsilon: f64,
}

impl Couplings {
    pub fn new(g_a: f64, g_m: f64, g_am: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        let c = Couplings {
            g_a,
            g_m,
            g_am,
            alpha,
            epsilon,
        };
        if [g_a, g_m, g_am, alpha, epsilon].iter().all(|v| v.is_finite()) {
            Ok(c)
        } else {
            Err(Error::InvalidArgument("couplings must be finite".into()))
        }
    }

    pub const fn zero() -> Self {
        Couplings {
            g_a: 0.0,
            g_m: 0.0,
            g_am: 0.0,
            alpha: 0.0,
            epsilon: 0.0,
        }
    }
}

/// Chemical potential of the atomic branch; the molecular branch rotates at
/// twice this frequency by the two-atoms-per-molecule structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemicalPotential(pub f64);

impl ChemicalPotential {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Trap potentials; `None` stands for the identically-zero potential that all
/// exact-solution workflows require.
#[derive(Debug, Clone, Default)]
pub struct Potential {
    pub v_a: Option<Array1<f64>>,
    pub v_m: Option<Array1<f64>>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential::default()
    }

    pub fn is_zero(&self) -> bool {
        self.v_a.is_none() && self.v_m.is_none()
    }

    fn at_a(&self, i: usize) -> f64 {
        self.v_a.as_ref().map_or(0.0, |v| v[i])
    }
    fn at_m(&self, i: usize) -> f64 {
        self.v_m.as_ref().map_or(0.0, |v| v[i])
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        for v in [&self.v_a, &self.v_m].into_iter().flatten() {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Residual of the stationary equations for real profiles (phases
/// e^{-iμt}, e^{-2iμt} divided out, zero trap):
///
/// ```text
/// r_a = -1/2 φa'' + (ga φa² + gam φm²) φa + √2 α φm φa - μ φa
/// r_m = -1/4 φm'' + (ε + gm φm² + gam φa²) φm + (α/√2) φa² - 2μ φm
/// ```
///
/// Derivatives are spectral on periodic grids and 4th-order finite
/// differences on bounded grids. An exact solution leaves only
/// discretization-floor residuals.
pub fn stationary_residual(
    phi_a: &Array1<f64>,
    phi_m: &Array1<f64>,
    c: &Couplings,
    mu: ChemicalPotential,
    g: &Grid,
) -> Result<(Array1<f64>, Array1<f64>)> {
    g.check_len(phi_a.len())?;
    g.check_len(phi_m.len())?;
    let d2a = grid::second_derivative(g, &grid::real_to_complex(phi_a))?;
    let d2m = grid::second_derivative(g, &grid::real_to_complex(phi_m))?;
    let mu = mu.value();
    let n = g.len();
    let mut r_a = Array1::zeros(n);
    let mut r_m = Array1::zeros(n);
    for i in 0..n {
        let (pa, pm) = (phi_a[i], phi_m[i]);
        r_a[i] = -0.5 * d2a[i].re
            + (c.g_a * pa * pa + c.g_am * pm * pm) * pa
            + SQRT_2 * c.alpha * pm * pa
            - mu * pa;
        r_m[i] = -0.25 * d2m[i].re
            + (c.epsilon + c.g_m * pm * pm + c.g_am * pa * pa) * pm
            + (c.alpha / SQRT_2) * pa * pa
            - 2.0 * mu * pm;
    }
    Ok((r_a, r_m))
}

/// Particle numbers `(N_a, N_m, N)` with the conserved total
/// `N = N_a + 2 N_m` counting two atoms per molecule.
pub fn particle_numbers(f: &FieldPair, g: &Grid) -> Result<(f64, f64, f64)> {
    g.check_len(f.len())?;
    let n_a = g.integrate(f.psi_a.iter().map(|z| z.norm_sqr()));
    let n_m = g.integrate(f.psi_m.iter().map(|z| z.norm_sqr()));
    Ok((n_a, n_m, n_a + 2.0 * n_m))
}

/// Background-subtracted molecular number ∫(|ψm|² - |bg|²) dx for families
/// whose molecular field tends to a constant; the raw number is box-dependent
/// there.
pub fn molecular_number_background_subtracted(
    f: &FieldPair,
    g: &Grid,
    background: f64,
) -> Result<f64> {
    g.check_len(f.len())?;
    let b2 = background * background;
    Ok(g.integrate(f.psi_m.iter().map(|z| z.norm_sqr() - b2)))
}

/// Mean-field energy functional
///
/// ```text
/// E = ∫ [ 1/2|∂ψa|² + 1/4|∂ψm|² + Va|ψa|² + (Vm+ε)|ψm|²
///        + ga/2 |ψa|⁴ + gm/2 |ψm|⁴ + gam |ψa|²|ψm|²
///        + (α/√2)(ψm* ψa² + ψm ψa*²) ] dx
/// ```
///
/// Its functional derivative reproduces the equations of motion (checked by
/// the gradient-consistency test).
pub fn energy(f: &FieldPair, p: &Potential, c: &Couplings, g: &Grid) -> Result<f64> {
    g.check_len(f.len())?;
    p.check_len(f.len())?;
    let da = grid::first_derivative(g, &f.psi_a)?;
    let dm = grid::first_derivative(g, &f.psi_m)?;
    let density = (0..g.len()).map(|i| {
        let na = f.psi_a[i].norm_sqr();
        let nm = f.psi_m[i].norm_sqr();
        let pa2 = f.psi_a[i] * f.psi_a[i];
        0.5 * da[i].norm_sqr()
            + 0.25 * dm[i].norm_sqr()
            + p.at_a(i) * na
            + (p.at_m(i) + c.epsilon) * nm
            + 0.5 * c.g_a * na * na
            + 0.5 * c.g_m * nm * nm
            + c.g_am * na * nm
            + (c.alpha / SQRT_2) * 2.0 * (f.psi_m[i].conj() * pa2).re
    });
    Ok(g.integrate(density))
}

/// Functional gradient (δE/δψa*, δE/δψm*): exactly the right-hand sides of
/// the i∂t equations. Shared by the propagators and the imaginary-time flow.
pub fn energy_gradient(
    f: &FieldPair,
    p: &Potential,
    c: &Couplings,
    g: &Grid,
) -> Result<(Array1<C64>, Array1<C64>)> {
    g.check_len(f.len())?;
    p.check_len(f.len())?;
    let d2a = grid::second_derivative(g, &f.psi_a)?;
    let d2m = grid::second_derivative(g, &f.psi_m)?;
    let mut f_a = Array1::from_elem(g.len(), C64::new(0.0, 0.0));
    let mut f_m = Array1::from_elem(g.len(), C64::new(0.0, 0.0));
    for i in 0..g.len() {
        let (a, m) = (f.psi_a[i], f.psi_m[i]);
        f_a[i] = -0.5 * d2a[i]
            + (p.at_a(i) + c.g_a * a.norm_sqr() + c.g_am * m.norm_sqr()) * a
            + SQRT_2 * c.alpha * m * a.conj();
        f_m[i] = -0.25 * d2m[i]
            + (p.at_m(i) + c.epsilon + c.g_m * m.norm_sqr() + c.g_am * a.norm_sqr()) * m
            + (c.alpha / SQRT_2) * a * a;
    }
    Ok((f_a, f_m))
}

/// Density/phase split ψ = √n e^{iφ}. Phases are unwrapped along each
/// contiguous run where the density exceeds `floor` and set to NaN elsewhere.
#[derive(Debug, Clone)]
pub struct MadelungDecomposition {
    pub n_a: Array1<f64>,
    pub n_m: Array1<f64>,
    pub phi_a: Array1<f64>,
    pub phi_m: Array1<f64>,
}

pub fn madelung(f: &FieldPair, floor: f64) -> Result<MadelungDecomposition> {
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(
            "madelung floor must be positive".into(),
        ));
    }
    let split = |psi: &Array1<C64>| {
        let n = psi.mapv(|z| z.norm_sqr());
        let mut phi = Array1::from_elem(psi.len(), f64::NAN);
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for i in 0..psi.len() {
            if n[i] > floor {
                let raw = psi[i].arg();
                if let Some(p) = prev {
                    // keep increments within (-pi, pi]
                    let mut d = raw + offset - p;
                    while d > std::f64::consts::PI {
                        offset -= 2.0 * std::f64::consts::PI;
                        d = raw + offset - p;
                    }
                    while d <= -std::f64::consts::PI {
                        offset += 2.0 * std::f64::consts::PI;
                        d = raw + offset - p;
                    }
                }
                phi[i] = raw + offset;
                prev = Some(phi[i]);
            } else {
                prev = None;
                offset = 0.0;
            }
        }
        (n, phi)
    };
    let (n_a, phi_a) = split(&f.psi_a);
    let (n_m, phi_m) = split(&f.psi_m);
    Ok(MadelungDecomposition {
        n_a,
        n_m,
        phi_a,
        phi_m,
    })
}

/// Which weight the molecular term carries in the continuity flux.
///
/// `MassWeighted` uses `j = na φa' + nm φm'` (atomic weight 1, molecular
/// weight 2·(1/2) from the quarter-Laplacian); this is the form the equations
/// of motion conserve exactly. `DensityWeighted` doubles the molecular term
/// to match the weights of the conserved density na + 2nm; it is exposed for
/// comparison only and is not a conserved flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxForm {
    #[default]
    MassWeighted,
    DensityWeighted,
}

/// Pointwise residual of the continuity equation
/// `∂t(na + 2nm) + ∂x j = 0` from three equally spaced snapshots: centered
/// difference in time, grid-native derivative in space. Second order in dt;
/// discretization floor on stationary states.
pub fn continuity_residual(
    prev: &FieldPair,
    cur: &FieldPair,
    next: &FieldPair,
    g: &Grid,
    form: FluxForm,
) -> Result<Array1<f64>> {
    for f in [prev, cur, next] {
        g.check_len(f.len())?;
    }
    let dt_fwd = next.t - cur.t;
    let dt_bwd = cur.t - prev.t;
    if dt_fwd <= 0.0 || (dt_fwd - dt_bwd).abs() > 1e-9 * dt_fwd.abs() {
        return Err(Error::InvalidArgument(format!(
            "snapshots must be equally spaced in time, got dt = {dt_bwd:0.3e}, {dt_fwd:0.3e}"
        )));
    }
    let w_m = match form {
        FluxForm::MassWeighted => 1.0,
        FluxForm::DensityWeighted => 2.0,
    };
    // j = Im(ψa* ∂x ψa) + w Im(ψm* ∂x ψm); the Im form equals n φ' without
    // needing phase unwrapping.
    let da = grid::first_derivative(g, &cur.psi_a)?;
    let dm = grid::first_derivative(g, &cur.psi_m)?;
    let flux = Array1::from_iter((0..g.len()).map(|i| {
        C64::new(
            (cur.psi_a[i].conj() * da[i]).im + w_m * (cur.psi_m[i].conj() * dm[i]).im,
            0.0,
        )
    }));
    let dflux = grid::first_derivative(g, &flux)?;
    let inv_2dt = 1.0 / (2.0 * dt_fwd);
    Ok(Array1::from_iter((0..g.len()).map(|i| {
        let n_next = next.psi_a[i].norm_sqr() + 2.0 * next.psi_m[i].norm_sqr();
        let n_prev = prev.psi_a[i].norm_sqr() + 2.0 * prev.psi_m[i].norm_sqr();
        (n_next - n_prev) * inv_2dt + dflux[i].re
    })))
}

pub fn sup_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn test_grid() -> Grid {
        Grid::periodic(-20.0, 20.0, 512).unwrap()
    }

    #[test]
    fn zero_fields_have_zero_residual_and_numbers() {
        let g = test_grid();
        let z = Array1::zeros(g.len());
        let c = Couplings::new(-1.0, 2.0, 0.5, 1.0, -3.0).unwrap();
        let (ra, rm) = stationary_residual(&z, &z, &c, ChemicalPotential(-1.0), &g).unwrap();
        assert_eq!(sup_norm(&ra), 0.0);
        assert_eq!(sup_norm(&rm), 0.0);
        let f = FieldPair::zeros(g.len());
        let (na, nm, n) = particle_numbers(&f, &g).unwrap();
        assert_eq!((na, nm, n), (0.0, 0.0, 0.0));
        assert_eq!(energy(&f, &Potential::zero(), &c, &g).unwrap(), 0.0);
    }

    #[test]
    fn decoupled_bright_soliton_solves_atomic_equation() {
        // alpha = 0, gam = 0, ga = -1: φa = sech(x), mu = -1/2 is the
        // textbook bright soliton; the residual must sit at spectral floor.
        // The box needs sech(X) below ~1e-14: the derivative jump of the
        // periodic extension otherwise floors the spectral second
        // derivative near 1e-7 (X = 20 is NOT enough at this tolerance).
        let g = Grid::periodic(-36.0, 36.0, 1024).unwrap();
        let phi_a = g.points().mapv(|x| 1.0 / x.cosh());
        let phi_m = Array1::zeros(g.len());
        let c = Couplings::new(-1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let (ra, rm) = stationary_residual(&phi_a, &phi_m, &c, ChemicalPotential(-0.5), &g).unwrap();
        assert!(sup_norm(&ra) < 1e-10, "residual {}", sup_norm(&ra));
        assert_eq!(sup_norm(&rm), 0.0);
    }

    #[test]
    fn sech_squared_number_matches_closed_form() {
        let g = Grid::periodic(-30.0, 30.0, 1024).unwrap();
        let psi_a = g.points().mapv(|x| C64::new(1.0 / x.cosh().powi(2), 0.0));
        let psi_m = Array1::zeros(g.len());
        let f = FieldPair::new(psi_a, psi_m, 0.0).unwrap();
        let (na, nm, n) = particle_numbers(&f, &g).unwrap();
        assert_abs_diff_eq!(na, 4.0 / 3.0, epsilon = 1e-12);
        assert_eq!(nm, 0.0);
        assert_abs_diff_eq!(n, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_molecular_background_number_scales_with_box() {
        let g = Grid::periodic(-10.0, 10.0, 256).unwrap();
        let d = 0.7;
        let f = FieldPair::new(
            Array1::zeros(g.len()),
            Array1::from_elem(g.len(), C64::new(d, 0.0)),
            0.0,
        )
        .unwrap();
        let (_, nm, _) = particle_numbers(&f, &g).unwrap();
        assert_abs_diff_eq!(nm, d * d * 20.0, epsilon = 1e-12);
        let sub = molecular_number_background_subtracted(&f, &g, d).unwrap();
        assert_abs_diff_eq!(sub, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn plane_wave_kinetic_energy() {
        let g = Grid::periodic(-10.0, 10.0, 256).unwrap();
        let k = g.wavenumbers().unwrap()[3];
        let psi_a = g.points().mapv(|x| C64::new(0.0, k * x).exp());
        let f = FieldPair::new(psi_a, Array1::zeros(g.len()), 0.0).unwrap();
        let e = energy(&f, &Potential::zero(), &Couplings::zero(), &g).unwrap();
        assert_abs_diff_eq!(e, 0.5 * k * k * 20.0, epsilon = 1e-9);
    }

    #[test]
    fn madelung_constant_phase_and_node_jump() {
        let g = test_grid();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let psi_a = g
            .points()
            .mapv(|x| C64::new(inv_sqrt2, inv_sqrt2) * (1.0 / x.cosh()));
        // odd molecular-side stand-in: sign change at x = 0
        let psi_m = g.points().mapv(|x| C64::new(x / (1.0 + x * x), 0.0));
        let f = FieldPair::new(psi_a, psi_m, 0.0).unwrap();
        let m = madelung(&f, 1e-24).unwrap();
        let mid = g.len() / 2;
        assert_abs_diff_eq!(m.n_a[mid], 1.0, epsilon = 1e-12);
        for (i, &x) in g.points().iter().enumerate() {
            if x.abs() < 15.0 {
                assert_abs_diff_eq!(m.phi_a[i], std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
            }
        }
        // phase jump of pi across the node at x = 0
        let left = m.phi_m[mid - 4];
        let right = m.phi_m[mid + 4];
        let jump = (left - right).abs() % (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(jump, std::f64::consts::PI, epsilon = 1e-12);
        // the node itself is masked
        assert!(m.phi_m[mid].is_nan());
    }

    #[test]
    fn real_positive_field_has_zero_phase() {
        let g = test_grid();
        let psi = g.points().mapv(|x| C64::new((-x * x).exp() + 0.1, 0.0));
        let f = FieldPair::new(psi.clone(), psi, 0.0).unwrap();
        let m = madelung(&f, 1e-30).unwrap();
        assert!(m.phi_a.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn residual_is_linear_in_mu() {
        let g = test_grid();
        let phi_a = g.points().mapv(|x| (-0.3 * x * x).exp() * (1.0 + 0.2 * x));
        let phi_m = g.points().mapv(|x| 0.4 * (-0.5 * x * x).exp());
        let c = Couplings::new(-2.0, 1.5, 0.7, 0.9, -1.1).unwrap();
        let (mu1, mu2) = (-0.7, 0.4);
        let (ra1, rm1) = stationary_residual(&phi_a, &phi_m, &c, ChemicalPotential(mu1), &g).unwrap();
        let (ra2, rm2) = stationary_residual(&phi_a, &phi_m, &c, ChemicalPotential(mu2), &g).unwrap();
        for i in 0..g.len() {
            assert_abs_diff_eq!(ra1[i] - ra2[i], (mu2 - mu1) * phi_a[i], epsilon = 1e-12);
            assert_abs_diff_eq!(rm1[i] - rm2[i], 2.0 * (mu2 - mu1) * phi_m[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_preserves_parity() {
        let g = test_grid();
        // phi_a odd, phi_m even
        let phi_a = g.points().mapv(|x| x * (-0.4 * x * x).exp());
        let phi_m = g.points().mapv(|x| (-0.3 * x * x).exp());
        let c = Couplings::new(1.0, -0.5, 0.8, -0.6, 0.9).unwrap();
        let (ra, rm) = stationary_residual(&phi_a, &phi_m, &c, ChemicalPotential(-0.2), &g).unwrap();
        let n = g.len();
        for j in 1..n {
            assert_abs_diff_eq!(ra[j], -ra[n - j], epsilon = 1e-10);
            assert_abs_diff_eq!(rm[j], rm[n - j], epsilon = 1e-10);
        }
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let g = Grid::periodic(-15.0, 15.0, 256).unwrap();
        let c = Couplings::new(-1.3, 0.8, 0.4, 0.7, -0.9).unwrap();
        let p = Potential::zero();
        let psi_a = g
            .points()
            .mapv(|x| C64::new((-0.2 * x * x).exp(), 0.1 * (-0.3 * x * x).exp()));
        let psi_m = g
            .points()
            .mapv(|x| C64::new(0.5 * (-0.25 * x * x).exp(), -0.2 * (-0.4 * x * x).exp()));
        let f = FieldPair::new(psi_a, psi_m, 0.0).unwrap();
        let da = g.points().mapv(|x| C64::new((-0.5 * x * x).exp(), 0.3 * x * (-0.5 * x * x).exp()));
        let dm = g.points().mapv(|x| C64::new(0.2 * x * (-0.6 * x * x).exp(), (-0.45 * x * x).exp()));

        let (fa, fm) = energy_gradient(&f, &p, &c, &g).unwrap();
        let inner = 2.0
            * (g.integrate_c(fa.iter().zip(da.iter()).map(|(f, d)| f.conj() * d)).re
                + g.integrate_c(fm.iter().zip(dm.iter()).map(|(f, d)| f.conj() * d)).re);

        let energy_at = |h: f64| {
            let fa = FieldPair::new(
                Array1::from_iter(f.psi_a.iter().zip(da.iter()).map(|(v, d)| v + h * d)),
                Array1::from_iter(f.psi_m.iter().zip(dm.iter()).map(|(v, d)| v + h * d)),
                0.0,
            )
            .unwrap();
            energy(&fa, &p, &c, &g).unwrap()
        };
        // central difference converges to the pairing at O(h^2)
        let mut errs = Vec::new();
        for h in [1e-3, 5e-4, 2.5e-4] {
            let fd = (energy_at(h) - energy_at(-h)) / (2.0 * h);
            errs.push((fd - inner).abs());
        }
        assert!(errs[0] < 1e-5, "h-sweep errors {errs:?}");
        assert!(errs[2] < errs[0] * 0.2, "expected O(h^2) decay, got {errs:?}");
    }

    #[test]
    fn continuity_residual_zero_fields_and_bad_spacing() {
        let g = test_grid();
        let mk = |t: f64| {
            let mut f = FieldPair::zeros(g.len());
            f.t = t;
            f
        };
        let r = continuity_residual(&mk(0.0), &mk(0.1), &mk(0.2), &g, FluxForm::MassWeighted)
            .unwrap();
        assert_eq!(sup_norm(&r), 0.0);
        assert!(
            continuity_residual(&mk(0.0), &mk(0.1), &mk(0.3), &g, FluxForm::MassWeighted).is_err()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn particle_numbers_invariant_under_global_phase(theta_a in 0.0f64..6.28, theta_m in 0.0f64..6.28) {
            let g = Grid::periodic(-10.0, 10.0, 128).unwrap();
            let psi_a = g.points().mapv(|x| C64::new((-0.5*x*x).exp(), 0.2*x*(-0.5*x*x).exp()));
            let psi_m = g.points().mapv(|x| C64::new(0.3*(-0.4*x*x).exp(), -0.1*(-0.4*x*x).exp()));
            let f = FieldPair::new(psi_a.clone(), psi_m.clone(), 0.0).unwrap();
            let ra = C64::from_polar(1.0, theta_a);
            let rm = C64::from_polar(1.0, theta_m);
            let g2 = FieldPair::new(psi_a.mapv(|z| z*ra), psi_m.mapv(|z| z*rm), 0.0).unwrap();
            let (na, nm, n) = particle_numbers(&f, &g).unwrap();
            let (na2, nm2, n2) = particle_numbers(&g2, &g).unwrap();
            prop_assert!((na - na2).abs() < 1e-12 * na.max(1.0));
            prop_assert!((nm - nm2).abs() < 1e-12 * nm.max(1.0));
            prop_assert!((n - n2).abs() < 1e-12 * n.max(1.0));
        }
    }
}
