use ndw_core::closed_form::{self, ballistic_peak, ExactClosedForm};
use ndw_core::dirac::{self, ensemble_compare, CompareConfig, GridSpec, WavepacketSpec};
use ndw_core::moments::{
    containment, crossover, empirical_moments, exact_moments, regime_expansions,
    normal_density_lattice, sup_distance_to_normal, tv_to_normal, Regime,
    DEFAULT_SLOPE_THRESHOLD,
};
use ndw_core::monte_carlo::{exhaustive_channel, run_ensemble, MAX_EXHAUSTIVE_STEPS};
use ndw_core::physical::{self, check_validity, derive_epsilon, PhysicalParams};
use ndw_core::walk::{evolve, site, DiagonalState, WalkParams};

use crate::args::{CommonArgs, DiracArgs, Preset};
use crate::output::{num, Dataset};
use crate::CliError;

/// Relative tolerance for the ballistic-peak law.
pub const PEAK_TOLERANCE: f64 = 1e-12;
/// Tolerance on total probability.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Relative tolerance, against `max(1, S2)`, for empirical moments.
pub const MOMENT_TOLERANCE: f64 = 1e-10;
/// Absolute tolerance of the closed form against the recurrence.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance of full enumeration against the recurrence.
pub const ENUMERATION_TOLERANCE: f64 = 1e-12;
/// Monte Carlo sites further than this many standard errors count as outliers.
pub const OUTLIER_SIGMAS: f64 = 4.0;
/// Absolute slack added to the outlier band so zero-variance sites compare
/// cleanly.
pub const OUTLIER_FLOOR: f64 = 1e-12;
/// Largest acceptable fraction of outlying sites.
pub const MAX_OUTLIER_FRACTION: f64 = 0.01;

pub const DEFAULT_MC_REALIZATIONS: u64 = 100_000;
pub const DEFAULT_DIRAC_REALIZATIONS: u64 = 2_000;
pub const DEFAULT_PHI_SWEEP: [f64; 3] = [0.2, 0.1, 0.05];

/// A finished dataset and whether every check in it held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub dataset: Dataset,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn within_tolerance(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Noise strength and, when given, the physical parameters behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub epsilon: f64,
    pub physical: Option<PhysicalParams>,
}

fn preset_for(command: &str, common: &CommonArgs) -> Result<Option<Preset>, CliError> {
    match common.preset {
        Some(p) if p.command() != command => Err(CliError::Usage(format!(
            "preset {} belongs to the {} subcommand",
            p.as_str(),
            p.command()
        ))),
        p => Ok(p),
    }
}

pub fn physical_from_args(common: &CommonArgs) -> Result<Option<PhysicalParams>, CliError> {
    let a = &common.physical;
    if !a.any() {
        return Ok(None);
    }
    let b0 = a.b0.unwrap_or(1.0);
    let delta = a.delta.unwrap_or(1.0);
    let mu = match (a.mu, a.coin_angle) {
        (Some(mu), _) => mu,
        (None, Some(angle)) => {
            if b0 == 0.0 {
                return Err(CliError::Usage("--coin-angle needs a nonzero --b0".into()));
            }
            2.0 * angle / (b0 * delta)
        }
        (None, None) => {
            return Err(CliError::Usage(
                "physical parameters need --mu or --coin-angle".into(),
            ))
        }
    };
    let phys = PhysicalParams::new(
        a.c.unwrap_or(1.0),
        a.hbar.unwrap_or(1.0),
        mu,
        b0,
        delta,
        a.mass.unwrap_or(0.0),
    )?;
    Ok(Some(phys))
}

pub fn resolve_noise(command: &str, common: &CommonArgs) -> Result<Noise, CliError> {
    let preset = preset_for(command, common)?;
    if let Some(eps) = common.epsilon {
        WalkParams::new(eps, 0)?;
        return Ok(Noise {
            epsilon: eps,
            physical: None,
        });
    }
    if let Some(phys) = physical_from_args(common)? {
        return Ok(Noise {
            epsilon: derive_epsilon(&phys)?,
            physical: Some(phys),
        });
    }
    match preset {
        Some(p) => Ok(Noise {
            epsilon: p.epsilon(),
            physical: None,
        }),
        None => Err(CliError::Usage(
            "one of --epsilon, --mu or --coin-angle is required".into(),
        )),
    }
}

fn resolve_steps(command: &str, common: &CommonArgs, default: &[usize]) -> Result<Vec<usize>, CliError> {
    let steps = match (&common.steps, preset_for(command, common)?) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => p.steps(),
        (None, None) => default.to_vec(),
    };
    if steps.is_empty() {
        return Err(CliError::Usage("--steps needs at least one value".into()));
    }
    Ok(steps)
}

fn resolve_realizations(common: &CommonArgs, default: u64) -> Result<u64, CliError> {
    match common.realizations.unwrap_or(default) {
        0 => Err(CliError::Usage("--realizations must be at least 1".into())),
        m => Ok(m),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn header(data: &mut Dataset, command: &str, common: &CommonArgs, noise: Option<&Noise>) {
    data.meta("generator", format!("ndw {}", env!("CARGO_PKG_VERSION")));
    data.meta("command", command);
    if let Some(p) = common.preset {
        data.meta("preset", p.as_str());
    }
    if let Some(noise) = noise {
        data.meta("epsilon", num(noise.epsilon));
        if let Some(p) = &noise.physical {
            data.meta(
                "physical",
                format!(
                    "c={} hbar={} mu={} b0={} delta={} mass={}",
                    num(p.c),
                    num(p.hbar),
                    num(p.mu),
                    num(p.b0),
                    num(p.delta),
                    num(p.mass)
                ),
            );
        }
    }
}

fn regime_name(n: usize, eps: f64) -> &'static str {
    Regime::classify(n, eps).as_str()
}

pub fn cmd_evolve(common: &CommonArgs) -> Result<Outcome, CliError> {
    let noise = resolve_noise("evolve", common)?;
    let steps = resolve_steps("evolve", common, &[20])?;
    let mut data = Dataset::new(vec!["N", "k", "alpha", "beta", "P", "ballistic_peak"]);
    header(&mut data, "evolve", common, Some(&noise));
    data.meta("steps", join(&steps));
    let mut failures = Vec::new();
    for &n in &steps {
        let state = evolve(&WalkParams::new(noise.epsilon, n)?);
        let peak = ballistic_peak(n, noise.epsilon);
        let dist = state.distribution();
        for (j, (k, p)) in dist.iter().enumerate() {
            data.push(vec![
                n.to_string(),
                k.to_string(),
                num(state.alpha[j]),
                num(state.beta[j]),
                num(p),
                num(peak),
            ]);
        }
        let total = dist.total();
        if (total - 1.0).abs() > TRACE_TOLERANCE {
            failures.push(format!("N={n}: total probability {total}"));
        }
        let p_nn = dist.probability_at(n as i64);
        if (p_nn - peak).abs() > PEAK_TOLERANCE * peak {
            failures.push(format!("N={n}: P_NN {p_nn} vs {peak}"));
        }
        data.summary(format!("total_probability_N{n}"), num(total));
    }
    Ok(Outcome {
        dataset: data,
        failures,
    })
}

pub fn cmd_peak(common: &CommonArgs) -> Result<Outcome, CliError> {
    let noise = resolve_noise("peak", common)?;
    let steps = resolve_steps("peak", common, &[200])?;
    let n_max = *steps.iter().max().expect("non-empty");
    let mut data = Dataset::new(vec!["N", "P_NN", "closed_form", "rel_diff"]);
    header(&mut data, "peak", common, Some(&noise));
    data.meta("n_max", n_max);
    let params = WalkParams::new(noise.epsilon, n_max)?;
    let mut state = DiagonalState::initial();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        if n > 0 {
            state = state.step(&params)?;
        }
        let p_nn = state.alpha_at(n as i64) + state.beta_at(n as i64);
        let law = ballistic_peak(n, noise.epsilon);
        let rel = if law > 0.0 { (p_nn - law).abs() / law } else { p_nn.abs() };
        worst = worst.max(rel);
        data.push(vec![n.to_string(), num(p_nn), num(law), num(rel)]);
    }
    if worst > PEAK_TOLERANCE {
        failures.push(format!("ballistic peak off by {worst:e} relative"));
    }
    data.summary("max_rel_diff", num(worst));
    Ok(Outcome {
        dataset: data,
        failures,
    })
}

pub fn cmd_moments(common: &CommonArgs) -> Result<Outcome, CliError> {
    let noise = resolve_noise("moments", common)?;
    let steps = resolve_steps("moments", common, &[300])?;
    let n_max = *steps.iter().max().expect("non-empty");
    let eps = noise.epsilon;
    let mut data = Dataset::new(vec![
        "N",
        "S1_exact",
        "S1_empirical",
        "S2_exact",
        "S2_empirical",
        "ballistic_approx",
        "diffusive_approx",
        "regime",
    ]);
    header(&mut data, "moments", common, Some(&noise));
    data.meta("n_max", n_max);
    let params = WalkParams::new(eps, n_max)?;
    let mut state = DiagonalState::initial();
    let mut failures = Vec::new();
    for n in 0..=n_max {
        if n > 0 {
            state = state.step(&params)?;
        }
        let emp = empirical_moments(&state.distribution(), 2);
        let exact = exact_moments(n, eps)?;
        let scale = MOMENT_TOLERANCE * exact.s2.max(1.0);
        if (emp[1] - exact.s1).abs() > scale || (emp[2] - exact.s2).abs() > scale {
            failures.push(format!("N={n}: empirical moments disagree with exact"));
        }
        let (ballistic, diffusive) = if eps > 0.0 {
            let (b, d) = regime_expansions(n, eps)?;
            (num(b), num(d))
        } else {
            (num((n * n) as f64), String::new())
        };
        data.push(vec![
            n.to_string(),
            num(exact.s1),
            num(emp[1]),
            num(exact.s2),
            num(emp[2]),
            ballistic,
            diffusive,
            regime_name(n, eps).to_string(),
        ]);
    }
    match crossover(eps, DEFAULT_SLOPE_THRESHOLD) {
        Ok(c) => {
            data.summary("crossover_n_star", c.n_star);
            data.summary("slope_threshold", num(DEFAULT_SLOPE_THRESHOLD));
            data.summary("early_slope", num(c.early_slope));
            data.summary("late_slope", num(c.late_slope));
        }
        Err(_) => data.summary("crossover_n_star", "none"),
    }
    Ok(Outcome {
        dataset: data,
        failures,
    })
}

pub fn cmd_gaussian(common: &CommonArgs) -> Result<Outcome, CliError> {
    let noise = resolve_noise("gaussian", common)?;
    let steps = resolve_steps("gaussian", common, &[100, 300])?;
    let eps = noise.epsilon;
    let mut data = Dataset::new(vec!["N", "k", "half_P", "normal_density"]);
    header(&mut data, "gaussian", common, Some(&noise));
    data.meta("steps", join(&steps));
    let mut tvs = Vec::new();
    for &n in &steps {
        let dist = evolve(&WalkParams::new(eps, n)?).distribution();
        for (k, p) in dist.iter() {
            data.push(vec![
                n.to_string(),
                k.to_string(),
                num(0.5 * p),
                num(normal_density_lattice(n, eps, k as f64)?),
            ]);
        }
        let tv = tv_to_normal(&dist, eps)?;
        tvs.push((n, tv));
        data.summary(format!("tv_N{n}"), num(tv));
        data.summary(format!("sup_N{n}"), num(sup_distance_to_normal(&dist, eps)?));
        data.summary(format!("containment_2sd_N{n}"), num(containment(&dist, eps, 2.0)?));
    }
    tvs.sort_by_key(|&(n, _)| n);
    tvs.dedup_by_key(|&mut (n, _)| n);
    let monotone = tvs.windows(2).all(|w| w[1].1 < w[0].1);
    data.summary("tv_decreasing", monotone);
    let failures = if monotone {
        Vec::new()
    } else {
        vec!["distance to the normal law does not shrink with N".into()]
    };
    Ok(Outcome {
        dataset: data,
        failures,
    })
}

/// Sites whose Monte Carlo residual exceeds the outlier band, and the site count.
pub fn outliers(mean: &[f64], std_err: &[f64], exact: &[f64]) -> (usize, usize) {
    let bad = mean
        .iter()
        .zip(std_err)
        .zip(exact)
        .filter(|((m, s), e)| (*m - *e).abs() > OUTLIER_SIGMAS * **s + OUTLIER_FLOOR)
        .count();
    (bad, mean.len())
}

pub fn cmd_mc(common: &CommonArgs) -> Result<Outcome, CliError> {
    let noise = resolve_noise("mc", common)?;
    let steps = resolve_steps("mc", common, &[100])?;
    let m = resolve_realizations(common, DEFAULT_MC_REALIZATIONS)?;
    let mut data = Dataset::new(vec![
        "N", "k", "alpha_mc", "beta_mc", "P_mc", "std_err_P", "P_exact", "z",
    ]);
    header(&mut data, "mc", common, Some(&noise));
    data.meta("steps", join(&steps));
    data.meta("realizations", m);
    data.meta("seed", common.seed);
    let mut failures = Vec::new();
    for &n in &steps {
        let params = WalkParams::new(noise.epsilon, n)?;
        let est = run_ensemble(&params, m, common.seed)?;
        let exact = evolve(&params).distribution();
        let mc = est.distribution();
        for j in 0..=n {
            let resid = mc.p[j] - exact.p[j];
            let se = est.std_err_p[j];
            let z = if se > 0.0 {
                resid / se
            } else if resid.abs() <= OUTLIER_FLOOR {
                0.0
            } else {
                resid.signum() * f64::INFINITY
            };
            data.push(vec![
                n.to_string(),
                site(n, j).to_string(),
                num(est.mean_alpha[j]),
                num(est.mean_beta[j]),
                num(mc.p[j]),
                num(se),
                num(exact.p[j]),
                num(z),
            ]);
        }
        let (bad, total) = outliers(&mc.p, &est.std_err_p, &exact.p);
        let fraction = bad as f64 / total as f64;
        data.summary(format!("outlier_fraction_N{n}"), num(fraction));
        if fraction >= MAX_OUTLIER_FRACTION {
            failures.push(format!("N={n}: {bad} of {total} sites beyond {OUTLIER_SIGMAS} sigma"));
        }
    }
    Ok(Outcome {
        dataset: data,
        failures,
    })
}

pub fn cmd_dirac(common: &CommonArgs, args: &DiracArgs) -> Result<Outcome, CliError> {
    preset_for("dirac", common)?;
    let steps = resolve_steps("dirac", common, &[50])?;
    let [n] = steps[..] else {
        return Err(CliError::Usage("dirac takes a single --steps value".into()));
    };
    let m = resolve_realizations(common, DEFAULT_DIRAC_REALIZATIONS)?;
    let phis: Vec<f64> = match &args.phi {
        Some(p) if p.is_empty() => return Err(CliError::Usage("--phi needs a value".into())),
        Some(p) => p.clone(),
        None if common.epsilon.is_some() || common.physical.any() => {
            let noise = resolve_noise("dirac", common)?;
            let phi = match noise.physical {
                Some(p) => p.coin_angle(),
                None => noise.epsilon.atan(),
            };
            vec![phi]
        }
        None => DEFAULT_PHI_SWEEP.to_vec(),
    };
    let mut template = CompareConfig::new(n, 0.0, m, common.seed)?;
    template.wavepacket = WavepacketSpec {
        width: args.width,
        center: 0,
    };
    template.theta_scale = args.theta_scale;
    let packet = dirac::make_wavepacket(&template.wavepacket, &template.grid)?;
    let spread = dirac::momentum_spread(&packet, args.theta_scale);

    let mut data = Dataset::new(vec!["phi", "epsilon", "k", "exact", "split", "walk"]);
    header(&mut data, "dirac", common, None);
    data.meta("steps", n);
    data.meta("realizations", m);
    data.meta("seed", common.seed);
    data.meta("phi", join(&phis.iter().map(|&p| num(p)).collect::<Vec<_>>()));
    data.meta("width", num(args.width));
    data.meta("theta_scale", num(args.theta_scale));
    data.meta("grid_extent", template.grid.extent());
    data.meta("grid_points", template.grid.n_points());
    data.summary("momentum_spread", num(spread));

    let mut sweep = Vec::new();
    for &phi in &phis {
        let cmp = ensemble_compare(&CompareConfig { phi, ..template })?;
        let (exact, split, walk) = (
            cmp.exact.total_per_cell(),
            cmp.split.total_per_cell(),
            cmp.walk.total_per_cell(),
        );
        for (i, k) in cmp.exact.sites().enumerate() {
            if k.unsigned_abs() as usize > n + 1 {
                continue;
            }
            data.push(vec![
                num(phi),
                num(cmp.epsilon),
                k.to_string(),
                num(exact[i]),
                num(split[i]),
                num(walk[i]),
            ]);
        }
        let tag = num(phi);
        data.summary(format!("tv_exact_split_phi{tag}"), num(cmp.tv_exact_split));
        data.summary(format!("tv_split_walk_phi{tag}"), num(cmp.tv_split_walk));
        data.summary(format!("tv_exact_walk_phi{tag}"), num(cmp.tv_exact_walk));
        data.summary(format!("boundary_mass_phi{tag}"), num(cmp.boundary_mass));
        sweep.push((phi.abs(), cmp.tv_exact_split));
    }
    sweep.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sweep.windows(2).all(|w| w[0].0 == w[1].0 || w[0].1 < w[1].1);
    data.summary("tv_exact_split_increasing_in_phi", monotone);
    let failures = if monotone {
        Vec::new()
    } else {
        vec!["exact/split distance does not grow with phi".into()]
    };
    Ok(Outcome {
        dataset: data,
        failures,
    })
}

pub fn cmd_validate(common: &CommonArgs, momentum: Option<f64>) -> Result<Outcome, CliError> {
    let noise = resolve_noise("validate", common)?;
    let phys = match noise.physical {
        Some(p) => p,
        None => PhysicalParams::dimensionless(noise.epsilon.atan()),
    };
    let p_expectation = match momentum {
        Some(p) => p,
        None => {
            let grid = GridSpec::new(2, 2 * dirac::MIN_POINTS_PER_CELL)?;
            let packet = dirac::make_wavepacket(&WavepacketSpec::default(), &grid)?;
            dirac::momentum_spread(&packet, 1.0) * phys.hbar / phys.cell_length()
        }
    };
    let report = check_validity(&phys, p_expectation);
    let mut data = Dataset::new(vec!["quantity", "value", "verdict"]);
    header(&mut data, "validate", common, Some(&noise));
    data.meta("momentum", num(p_expectation));
    let row = |q: &str, v: f64, verdict: &str| vec![q.to_string(), num(v), verdict.to_string()];
    data.push(row("epsilon", report.epsilon.unwrap_or(f64::NAN), ""));
    data.push(row("coin_angle", report.coin_angle, ""));
    data.push(row("momentum_condition", report.momentum_condition, report.momentum_verdict.as_str()));
    data.push(row("coin_condition", report.coin_condition, report.coin_verdict.as_str()));
    data.push(row("mass_condition_ratio", report.mass_condition_ratio, report.mass_verdict.as_str()));
    if let Ok(d) = physical::diffusion_parameters(&phys) {
        data.push(row("x0", d.x0, ""));
        data.push(row("diffusion", d.diffusion, ""));
    }
    data.summary("overall", report.overall().as_str());
    Ok(Outcome {
        dataset: data,
        failures: Vec::new(),
    })
}

pub fn cmd_compare(common: &CommonArgs) -> Result<Outcome, CliError> {
    let noise = resolve_noise("compare", common)?;
    let steps = resolve_steps("compare", common, &[12, 60])?;
    let m = resolve_realizations(common, DEFAULT_MC_REALIZATIONS)?;
    let eps = noise.epsilon;
    let mut data = Dataset::new(vec!["N", "route", "max_abs_diff", "tv", "tolerance", "pass"]);
    header(&mut data, "compare", common, Some(&noise));
    data.meta("steps", join(&steps));
    data.meta("realizations", m);
    data.meta("seed", common.seed);
    let exact_cf = ExactClosedForm::new(eps)?;
    let mut failures = Vec::new();
    let mut record = |data: &mut Dataset, n: usize, route: &str, diff: f64, tv: f64, tol: f64| {
        let pass = diff <= tol;
        if !pass {
            failures.push(format!("N={n}: {route} off by {diff:e}"));
        }
        data.push(vec![
            n.to_string(),
            route.to_string(),
            num(diff),
            num(tv),
            num(tol),
            pass.to_string(),
        ]);
    };
    for &n in &steps {
        let params = WalkParams::new(eps, n)?;
        let state = evolve(&params);
        let rec = state.distribution();
        let max_diff = |other: &[f64]| {
            rec.p
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let tv = |other: &[f64]| ndw_core::numerics::total_variation(&rec.p, other);

        let cf = closed_form::distribution(n, eps)?;
        record(&mut data, n, "closed_form", max_diff(&cf.p), tv(&cf.p), CLOSED_FORM_TOLERANCE);

        let exact: Vec<f64> = rec
            .sites()
            .map(|k| exact_cf.p_f64(n, k))
            .collect::<Result<_, _>>()?;
        record(&mut data, n, "exact_rational", max_diff(&exact), tv(&exact), CLOSED_FORM_TOLERANCE);

        if n <= MAX_EXHAUSTIVE_STEPS {
            let all = exhaustive_channel(&params)?.distribution();
            record(&mut data, n, "enumeration", max_diff(&all.p), tv(&all.p), ENUMERATION_TOLERANCE);
        }

        let est = run_ensemble(&params, m, common.seed)?;
        let mc = est.distribution();
        let (bad, total) = outliers(&mc.p, &est.std_err_p, &rec.p);
        record(
            &mut data,
            n,
            "monte_carlo_outlier_fraction",
            bad as f64 / total as f64,
            tv(&mc.p),
            MAX_OUTLIER_FRACTION,
        );
    }
    data.summary("all_pass", failures.is_empty());
    Ok(Outcome {
        dataset: data,
        failures,
    })
}
