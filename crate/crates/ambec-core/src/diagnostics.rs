//! Quantitative checks tying the simulations to the two-level structure:
//! orthogonality, two-mode projection bookkeeping, phase-slope recovery of
//! the chemical potential, flat-top and tail-decay metrics.

use ndarray::Array1;

use crate::catalog::{self, AnsatzParams, FamilyId};
use crate::error::{Error, Result};
use crate::grid::{real_to_complex, Grid};
use crate::propagate::Trajectory;
use crate::C64;

/// Inner product ∫ f* g dx by grid quadrature.
pub fn overlap(f: &Array1<C64>, g: &Array1<C64>, grid: &Grid) -> Result<C64> {
    grid.check_len(f.len())?;
    grid.check_len(g.len())?;
    Ok(grid.integrate_c(f.iter().zip(g.iter()).map(|(a, b)| a.conj() * b)))
}

pub fn norm_l2(f: &Array1<C64>, grid: &Grid) -> Result<f64> {
    Ok(grid.integrate(f.iter().map(|z| z.norm_sqr())).sqrt())
}

/// Normalized ground/excited atomic mode pair with the shared molecular
/// profile they ride on.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub ground: Array1<C64>,
    pub excited: Array1<C64>,
    pub molecular: Array1<C64>,
    pub pair: (FamilyId, FamilyId),
}

impl ModeBasis {
    /// Build the basis from a ground-state family and its excited partner,
    /// evaluated with shared parameters and normalized to unit L² norm.
    pub fn from_family_pair(ground: FamilyId, p: &AnsatzParams, grid: &Grid) -> Result<Self> {
        if !ground.is_ground() {
            return Err(Error::InvalidArgument(format!(
                "family {ground} is not a ground family"
            )));
        }
        let excited = ground.partner();
        let (ga, gm) = catalog::profiles(ground, p, grid)?;
        let (ea, _) = catalog::profiles(excited, p, grid)?;
        let mut ground_c = real_to_complex(&ga);
        let mut excited_c = real_to_complex(&ea);
        for (name, f) in [("ground", &mut ground_c), ("excited", &mut excited_c)] {
            let n = norm_l2(f, grid)?;
            if n < 1e-280 {
                return Err(Error::InvalidArgument(format!(
                    "{name} basis profile has zero norm"
                )));
            }
            f.mapv_inplace(|z| z / n);
        }
        Ok(ModeBasis {
            ground: ground_c,
            excited: excited_c,
            molecular: real_to_complex(&gm),
            pair: (ground, excited),
        })
    }
}

/// Projection of an atomic field onto a two-mode basis.
///
/// The bookkeeping identity |c0|² + |c1|² + leakage·‖ψ‖² = ‖ψ‖² holds by
/// construction; `leakage` is the norm fraction outside the two-mode span.
#[derive(Debug, Clone, Copy)]
pub struct QubitState {
    pub c0: C64,
    pub c1: C64,
    pub leakage: f64,
}

pub fn project_qubit(psi_a: &Array1<C64>, basis: &ModeBasis, grid: &Grid) -> Result<QubitState> {
    let c0 = overlap(&basis.ground, psi_a, grid)?;
    let c1 = overlap(&basis.excited, psi_a, grid)?;
    let norm_sq = grid.integrate(psi_a.iter().map(|z| z.norm_sqr()));
    if norm_sq < 1e-280 {
        return Err(Error::InvalidArgument(
            "cannot project a zero-norm field".into(),
        ));
    }
    let leakage = 1.0 - (c0.norm_sqr() + c1.norm_sqr()) / norm_sq;
    Ok(QubitState { c0, c1, leakage })
}

/// Which field's projected phase a trajectory measurement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseField {
    Atomic,
    Molecular,
}

/// Least-squares slope of the unwrapped projected phase against time.
/// Stationary states give μ (atomic) and 2μ (molecular): their overlaps with
/// the initial field rotate as e^{+iμt}/e^{+2iμt}.
///
/// Fails when consecutive phase increments exceed π/2: beyond that the 2π
/// unwrap branch is ambiguous (|μ| dt·stride got too large).
pub fn phase_slope(traj: &Trajectory, which: PhaseField) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(Error::InvalidArgument(
            "phase slope needs at least two samples".into(),
        ));
    }
    let mut ts = Vec::with_capacity(traj.samples.len());
    let mut phases = Vec::with_capacity(traj.samples.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for s in &traj.samples {
        let raw = match which {
            PhaseField::Atomic => s.overlap_a.arg(),
            PhaseField::Molecular => s.overlap_m.arg(),
        };
        let mut ph = raw + offset;
        if let Some(p) = prev {
            let mut d = ph - p;
            while d > std::f64::consts::PI {
                offset -= 2.0 * std::f64::consts::PI;
                ph = raw + offset;
                d = ph - p;
            }
            while d <= -std::f64::consts::PI {
                offset += 2.0 * std::f64::consts::PI;
                ph = raw + offset;
                d = ph - p;
            }
            if d.abs() > std::f64::consts::FRAC_PI_2 {
                return Err(Error::PhaseUnwrap { jump: d.abs() });
            }
        }
        ts.push(s.t);
        phases.push(ph);
        prev = Some(ph);
    }
    Ok(lsq_slope(&ts, &phases))
}

fn lsq_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        sxx += (xi - xm) * (xi - xm);
        sxy += (xi - xm) * (yi - ym);
    }
    sxy / sxx
}

/// Relative peak-to-valley variation of |ψm| over the central half of the
/// box: → 0 for a flat-top profile. The outer half is excluded so the tails
/// do not contaminate the plateau measure.
pub fn flat_top_metric(psi_m: &Array1<C64>) -> f64 {
    let n = psi_m.len();
    if n == 0 {
        return 0.0;
    }
    let lo = n / 4;
    let hi = (3 * n) / 4;
    let window = psi_m.slice(ndarray::s![lo..hi.max(lo + 1)]);
    let mut max = 0.0f64;
    let mut min = f64::INFINITY;
    for z in window.iter() {
        let v = z.norm();
        max = max.max(v);
        min = min.min(v);
    }
    if max == 0.0 {
        0.0
    } else {
        (max - min) / max
    }
}

/// Decay law the tail fit assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailKind {
    /// fit log|ψ| against log x: returns the power (≈ -2 for A/x², -1 for A/x)
    PowerLaw,
    /// fit log|ψ| against x: returns the positive decay rate (≈ 2β for sech²)
    Exponential,
}

#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    /// power (PowerLaw, negative) or decay rate (Exponential, positive)
    pub exponent: f64,
    /// standard error of the fitted slope
    pub std_error: f64,
}

/// Fit the decay of |ψ| over the outermost `window` fraction of the right
/// half-axis. The modulus must decrease monotonically across the window
/// (tiny non-monotonicity below 10⁻¹²·peak is tolerated as roundoff).
pub fn tail_exponent(
    field: &Array1<C64>,
    grid: &Grid,
    window: f64,
    kind: TailKind,
) -> Result<TailFit> {
    grid.check_len(field.len())?;
    if !(window > 0.0 && window < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail window fraction must lie in (0, 1), got {window}"
        )));
    }
    let x_max = grid.x_max();
    let x_lo = x_max * (1.0 - window);
    let peak = field.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let mut xs = Vec::new();
    let mut logs = Vec::new();
    let mut prev = f64::INFINITY;
    for (i, &x) in grid.points().iter().enumerate() {
        if x < x_lo || x > x_max - 1e-12 {
            continue;
        }
        let v = field[i].norm();
        if v <= 0.0 {
            continue;
        }
        if v > prev + 1e-12 * peak {
            return Err(Error::NonMonotoneTail);
        }
        prev = v;
        match kind {
            TailKind::PowerLaw => {
                if x <= 0.0 {
                    continue;
                }
                xs.push(x.ln());
            }
            TailKind::Exponential => xs.push(x),
        }
        logs.push(v.ln());
    }
    if xs.len() < 8 {
        return Err(Error::InvalidArgument(
            "tail window holds too few usable points".into(),
        ));
    }
    let slope = lsq_slope(&xs, &logs);
    // slope standard error from the fit residuals
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = logs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|&x| (x - xm) * (x - xm)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(logs.iter())
        .map(|(&x, &y)| {
            let fit = ym + slope * (x - xm);
            (y - fit) * (y - fit)
        })
        .sum();
    let std_error = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(match kind {
        TailKind::PowerLaw => TailFit {
            exponent: slope,
            std_error,
        },
        TailKind::Exponential => TailFit {
            exponent: -slope,
            std_error,
        },
    })
}

/// Count sign changes of a real profile, ignoring entries below
/// `floor_rel`·max|φ| (exact zeros at a node do not double-count).
pub fn count_nodes(profile: &Array1<f64>, floor_rel: f64) -> usize {
    let max = profile.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    let floor = floor_rel * max;
    let mut nodes = 0;
    let mut prev_sign = 0i8;
    for &v in profile.iter() {
        if v.abs() < floor {
            continue;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if prev_sign != 0 && s != prev_sign {
            nodes += 1;
        }
        prev_sign = s;
    }
    nodes
}

/// Largest pointwise deviation between two fields after aligning the global
/// phase of `trial` to `reference` (sign flips included), relative to the
/// reference peak. Used for "same profile up to phase and sign" checks.
pub fn aligned_relative_deviation(
    trial: &Array1<C64>,
    reference: &Array1<C64>,
    grid: &Grid,
) -> Result<f64> {
    let ov = overlap(reference, trial, grid)?;
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let peak = reference.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if peak == 0.0 {
        return Err(Error::InvalidArgument("zero reference profile".into()));
    }
    let mut worst = 0.0f64;
    for (t, r) in trial.iter().zip(reference.iter()) {
        worst = worst.max((t * phase.conj() - r).norm());
    }
    Ok(worst / peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChemicalPotential;
    use approx::assert_abs_diff_eq;

    #[test]
    fn overlap_matches_shifted_sech_closed_form() {
        // ∫ sech(x) sech(x-a) dx = 2a/sinh(a)
        let grid = Grid::periodic(-40.0, 40.0, 2048).unwrap();
        for &a in &[0.5, 1.0, 2.0] {
            let f = grid.points().mapv(|x| C64::new(1.0 / x.cosh(), 0.0));
            let g = grid.points().mapv(|x| C64::new(1.0 / (x - a).cosh(), 0.0));
            let ov = overlap(&f, &g, &grid).unwrap();
            assert_abs_diff_eq!(ov.re, 2.0 * a / a.sinh(), epsilon = 1e-12);
            assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn normalized_self_overlap_is_one() {
        let grid = Grid::periodic(-20.0, 20.0, 512).unwrap();
        let mut f = grid.points().mapv(|x| C64::new((-x * x).exp(), 0.2 * x.sin()));
        let n = norm_l2(&f, &grid).unwrap();
        f.mapv_inplace(|z| z / n);
        let ov = overlap(&f, &f, &grid).unwrap();
        assert_abs_diff_eq!(ov.re, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn ground_excited_pairs_are_orthogonal_by_parity() {
        let grid = Grid::periodic(-36.0, 36.0, 2048).unwrap();
        let p = AnsatzParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let basis = ModeBasis::from_family_pair(FamilyId::DropletGround, &p, &grid).unwrap();
        let ov = overlap(&basis.ground, &basis.excited, &grid).unwrap();
        assert!(ov.norm() < 1e-12, "overlap {:.3e}", ov.norm());
    }

    #[test]
    fn projection_reproduces_basis_members_and_mixtures() {
        let grid = Grid::periodic(-36.0, 36.0, 1024).unwrap();
        let p = AnsatzParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let basis = ModeBasis::from_family_pair(FamilyId::HyperbolicGround, &p, &grid).unwrap();

        let q = project_qubit(&basis.ground.clone(), &basis, &grid).unwrap();
        assert_abs_diff_eq!(q.c0.norm(), 1.0, epsilon = 1e-12);
        assert!(q.c1.norm() < 1e-12);
        assert!(q.leakage.abs() < 1e-12);

        let mix = Array1::from_iter(
            basis
                .ground
                .iter()
                .zip(basis.excited.iter())
                .map(|(g, e)| (g + e) / SQRT_2_C),
        );
        let q = project_qubit(&mix, &basis, &grid).unwrap();
        assert_abs_diff_eq!(q.c0.norm_sqr(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q.c1.norm_sqr(), 0.5, epsilon = 1e-12);
    }

    const SQRT_2_C: C64 = C64::new(std::f64::consts::SQRT_2, 0.0);

    #[test]
    fn flat_top_metric_reference_values() {
        // constant field: exactly flat
        let flat = Array1::from_elem(256, C64::new(0.7, 0.0));
        assert_eq!(flat_top_metric(&flat), 0.0);
        // droplet molecular profiles on a plateau-scaled box
        let grid = Grid::periodic(-2.0, 2.0, 256).unwrap();
        let profile = |b: f64| {
            grid.points()
                .mapv(|x| C64::new(1.0 / (b + x.cosh().powi(2)), 0.0))
        };
        let wide = flat_top_metric(&profile(100.0));
        let narrow = flat_top_metric(&profile(0.1));
        assert!(wide < 0.02, "B = 100 metric {wide:.3}");
        assert!(narrow > 0.5, "B = 0.1 metric {narrow:.3}");
    }

    #[test]
    fn tail_exponents_separate_the_decay_classes() {
        let gb = Grid::bounded(-80.0, 80.0, 4097).unwrap();
        let pulse_g = gb.points().mapv(|x| C64::new(4.0 / (4.0 + x * x), 0.0));
        let pulse_e = gb.points().mapv(|x| C64::new(x / (4.0 + x * x), 0.0));
        let f3 = tail_exponent(&pulse_g, &gb, 0.25, TailKind::PowerLaw).unwrap();
        let f4 = tail_exponent(&pulse_e, &gb, 0.25, TailKind::PowerLaw).unwrap();
        assert!((f3.exponent + 2.0).abs() < 0.05, "III power {}", f3.exponent);
        assert!((f4.exponent + 1.0).abs() < 0.05, "IV power {}", f4.exponent);

        let gs = Grid::periodic(-20.0, 20.0, 2048).unwrap();
        let beta = 1.0;
        let hyp = gs
            .points()
            .mapv(|x| C64::new(1.0 / (beta * x).cosh().powi(2), 0.0));
        let f5 = tail_exponent(&hyp, &gs, 0.2, TailKind::Exponential).unwrap();
        assert!(
            (f5.exponent - 2.0 * beta).abs() < 0.02 * beta,
            "V rate {}",
            f5.exponent
        );
        // the three confidence intervals are disjoint
        assert!(f3.exponent + 2.0 * f3.std_error < f4.exponent - 2.0 * f4.std_error);
    }

    #[test]
    fn tail_fit_rejects_rising_tails() {
        let grid = Grid::periodic(-20.0, 20.0, 256).unwrap();
        let rising = grid.points().mapv(|x| C64::new(x * x + 1.0, 0.0));
        assert!(matches!(
            tail_exponent(&rising, &grid, 0.2, TailKind::PowerLaw),
            Err(Error::NonMonotoneTail)
        ));
    }

    #[test]
    fn node_counting_on_catalog_profiles() {
        let grid = Grid::periodic(-36.0, 36.0, 1024).unwrap();
        let p = AnsatzParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
        for (fam, expect) in [
            (FamilyId::DropletGround, 0usize),
            (FamilyId::DropletExcited, 1),
            (FamilyId::HyperbolicGround, 0),
            (FamilyId::HyperbolicExcited, 1),
        ] {
            let (pa, _) = catalog::profiles(fam, &p, &grid).unwrap();
            assert_eq!(count_nodes(&pa, 1e-9), expect, "family {fam}");
        }
    }

    #[test]
    fn catalog_state_phase_slope_is_mu() {
        // short, coarse trajectory synthesized directly from the stationary
        // phase law (integration accuracy is covered elsewhere)
        let grid = Grid::periodic(-36.0, 36.0, 256).unwrap();
        let p = AnsatzParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let mu = -0.5;
        let samples = (0..50)
            .map(|i| {
                let t = 0.1 * i as f64;
                let f =
                    catalog::eval_family(FamilyId::DropletGround, &p, ChemicalPotential(mu), &grid, t)
                        .unwrap();
                let f0 = catalog::eval_family(
                    FamilyId::DropletGround,
                    &p,
                    ChemicalPotential(mu),
                    &grid,
                    0.0,
                )
                .unwrap();
                let na = grid.integrate(f0.psi_a.iter().map(|z| z.norm_sqr()));
                let nm = grid.integrate(f0.psi_m.iter().map(|z| z.norm_sqr()));
                crate::propagate::TrajectorySample {
                    t,
                    n_a: na,
                    n_m: nm,
                    n_total: na + 2.0 * nm,
                    energy: 0.0,
                    overlap_a: grid.integrate_c(
                        f.psi_a
                            .iter()
                            .zip(f0.psi_a.iter())
                            .map(|(z, z0)| z.conj() * z0),
                    ) / na,
                    overlap_m: grid.integrate_c(
                        f.psi_m
                            .iter()
                            .zip(f0.psi_m.iter())
                            .map(|(z, z0)| z.conj() * z0),
                    ) / nm,
                    max_continuity_residual: 0.0,
                }
            })
            .collect();
        let traj = Trajectory {
            samples,
            snapshots: vec![],
        };
        let sa = phase_slope(&traj, PhaseField::Atomic).unwrap();
        let sm = phase_slope(&traj, PhaseField::Molecular).unwrap();
        assert_abs_diff_eq!(sa, mu, epsilon = 1e-10);
        assert_abs_diff_eq!(sm, 2.0 * mu, epsilon = 1e-10);
        assert_abs_diff_eq!(sm / sa, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn phase_slope_flags_unwrap_ambiguity() {
        // |mu| dt_sample = 2.0 > pi/2: ambiguous
        let grid = Grid::periodic(-10.0, 10.0, 64).unwrap();
        let samples = (0..20)
            .map(|i| {
                let t = 1.0 * i as f64;
                crate::propagate::TrajectorySample {
                    t,
                    n_a: 1.0,
                    n_m: 1.0,
                    n_total: 3.0,
                    energy: 0.0,
                    overlap_a: C64::from_polar(1.0, 2.0 * t),
                    overlap_m: C64::from_polar(1.0, 4.0 * t),
                    max_continuity_residual: 0.0,
                }
            })
            .collect();
        let _ = &grid;
        let traj = Trajectory {
            samples,
            snapshots: vec![],
        };
        assert!(matches!(
            phase_slope(&traj, PhaseField::Atomic),
            Err(Error::PhaseUnwrap { .. })
        ));
    }
}
