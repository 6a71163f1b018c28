//! Subcommand implementations. Every command writes `manifest.conf`, the fully
//! resolved configuration; running the same command with
//! `--config manifest.conf` reproduces all outputs byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::RngCore;
use so3_decompound::decompound::{
    decompound as estimate, decompound_spectrum, decompound_with_prior, error_decomposition, reconstruct_density,
    EstimatorConfig, ParametricEstimate, Truth,
};
use so3_decompound::io::{
    fmt_f64, read_observations, write_columns, write_estimate, write_g_table, write_observations, write_reconstruction,
    CURVE_POINTS,
};
use so3_decompound::processes::{stream_rng, theoretical_spectrum, CompoundModel, JumpLaw, ObservationSet, Sampling};
use so3_decompound::rotations::AngleDensity;
use so3_decompound::scattering::{estimate_g, mixture_cdf_cos_given_scattered, mixture_density, transmitted_intensity};
use so3_decompound::stats::{ks_one_sample_with_atoms, median};
use so3_decompound::Rotation;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::Common;

/// Sample size used by `--quick`.
const QUICK_N: usize = 500;
const QUICK_MC: usize = 10_000;
const HISTOGRAM_BINS: usize = 50;

pub struct Context {
    pub cfg: ExperimentConfig,
}

impl Context {
    pub fn new(common: &Common, command: &'static str) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
                ExperimentConfig::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = common.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(out) = &common.out {
            cfg.experiment.output_dir = out.clone();
        }
        if common.quick {
            cfg.experiment.n = cfg.experiment.n.min(QUICK_N);
            cfg.experiment.ns = vec![QUICK_N];
            cfg.layer.mc_samples = cfg.layer.mc_samples.min(QUICK_MC);
        }
        if let Some(w) = common.workers {
            if w == 0 {
                return Err(CliError::Config("--workers must be ≥ 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot start {w} workers: {e}")))?;
        }
        let ctx = Self { cfg };
        fs::create_dir_all(ctx.out())
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", ctx.out().display())))?;
        ctx.write_text(
            "manifest.conf",
            &format!("# so3-decompound {command}\n{}", ctx.cfg.to_text()),
        )?;
        Ok(ctx)
    }

    fn out(&self) -> &Path {
        &self.cfg.experiment.output_dir
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out().join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        }
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let mut f = self.create(name)?;
        f.write_all(text.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| CliError::Io(format!("{name}: {e}")))
    }

    fn model(&self, jump: &str) -> Result<CompoundModel, CliError> {
        self.cfg.compound_model(jump).map_err(CliError::Config)
    }

    fn estimator(&self) -> Result<EstimatorConfig, CliError> {
        self.cfg.estimator_config().map_err(CliError::Config)
    }
}

/// Independent seed for replication or grid cell `tag`; tag 0 is the master
/// seed itself.
fn derived_seed(seed: u64, tag: u64) -> u64 {
    if tag == 0 {
        seed
    } else {
        stream_rng(seed, u64::MAX - tag).next_u64()
    }
}

fn sampling_text(s: Sampling) -> String {
    match s {
        Sampling::Noisy => "noisy".into(),
        Sampling::Interlaced { step } => format!("interlaced:{step}"),
    }
}

fn observation_meta(model: &CompoundModel, obs: &ObservationSet, sampling: Sampling) -> Vec<(&'static str, String)> {
    vec![
        ("lambda", model.lambda.to_string()),
        ("horizon", model.horizon.to_string()),
        ("sigma2", model.sigma2.to_string()),
        ("jump", model.jump.describe()),
        ("sampling", sampling_text(sampling)),
        ("seed", obs.seed.to_string()),
        ("n", obs.len().to_string()),
    ]
}

fn truth_of(jump: &JumpLaw) -> Truth {
    match jump {
        JumpLaw::HenyeyGreenstein(hg) => Truth::HenyeyGreenstein(hg.g()),
        JumpLaw::Zonal(_) => Truth::Spectrum(jump.spectrum(200)),
    }
}

fn summary(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let x = &ctx.cfg.experiment;
    let model = ctx.model(&ctx.cfg.model.jump)?;
    for r in 0..x.replications {
        let obs = ObservationSet::simulate(&model, x.n, derived_seed(x.seed, r as u64), x.sampling)?;
        let name = if x.replications == 1 {
            "observations.csv".to_string()
        } else {
            format!("observations_r{r}.csv")
        };
        write_observations(
            ctx.create(&name)?,
            &observation_meta(&model, &obs, x.sampling),
            &obs.samples,
        )?;
    }
    Ok(())
}

fn run_estimator(obs: &[Rotation], cfg: &EstimatorConfig) -> Result<ParametricEstimate, CliError> {
    Ok(if cfg.prior_bounds.is_some() {
        decompound_with_prior(obs, cfg)?
    } else {
        estimate(obs, cfg)?
    })
}

/// Writes `<prefix>estimate.csv`, `<prefix>reconstruction.csv` and
/// `<prefix>g_hat.csv`.
fn write_estimate_bundle(
    ctx: &Context,
    prefix: &str,
    est: &ParametricEstimate,
    cfg: &EstimatorConfig,
    jump: &JumpLaw,
) -> Result<(), CliError> {
    let truth = truth_of(jump);
    write_estimate(ctx.create(&format!("{prefix}estimate.csv"))?, est, Some(&truth))?;
    let rec = reconstruct_density(est, cfg);
    let density = |t: f64| match jump {
        JumpLaw::HenyeyGreenstein(hg) => hg.density(t),
        JumpLaw::Zonal(s) => s.density().density(t),
    };
    write_reconstruction(
        ctx.create(&format!("{prefix}reconstruction.csv"))?,
        &rec,
        Some(&density),
    )?;
    write_g_table(ctx.create(&format!("{prefix}g_hat.csv"))?, &estimate_g(est))?;
    Ok(())
}

pub fn decompound(ctx: &Context, obs_path: Option<&Path>, oracle: bool) -> Result<(), CliError> {
    let cfg = ctx.estimator()?;
    let model = ctx.model(&ctx.cfg.model.jump)?;
    let (est, n, source) = if oracle {
        let b = theoretical_spectrum(&model, &model.jump.spectrum(cfg.cutoff));
        (decompound_spectrum(b.as_slice(), &cfg)?, 0, "oracle".to_string())
    } else {
        let path: PathBuf = obs_path
            .map(Path::to_path_buf)
            .unwrap_or_else(|| ctx.out().join("observations.csv"));
        let file = File::open(&path).map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
        let data = read_observations(file).map_err(|e| match e {
            so3_decompound::Error::Parse { row, message } => {
                CliError::Io(format!("{}: malformed row {row}: {message}", path.display()))
            }
            other => other.into(),
        })?;
        (
            run_estimator(&data.samples, &cfg)?,
            data.samples.len(),
            path.display().to_string(),
        )
    };
    write_estimate_bundle(ctx, "", &est, &cfg, &model.jump)?;
    let dec = error_decomposition(&est, &truth_of(&model.jump));
    let passed = est.entries.iter().filter(|e| e.gate_passed).count();
    ctx.write_text(
        "summary.txt",
        &summary(&[
            ("source", source),
            ("n", n.to_string()),
            ("cutoff", cfg.cutoff.to_string()),
            ("mode", cfg.mode.as_str().to_string()),
            ("gates_passed", passed.to_string()),
            ("parametric_error", fmt_f64(dec.parametric)),
            ("truncation_error", fmt_f64(dec.truncation)),
            ("total_error", fmt_f64(dec.total)),
        ]),
    )?;
    if est.all_gates_failed() {
        return Err(CliError::Numerical(
            "every coefficient with δ ≥ 1 failed the positivity gate".into(),
        ));
    }
    Ok(())
}

pub fn scatter(ctx: &Context) -> Result<(), CliError> {
    let l = &ctx.cfg.layer;
    let layer = ctx.cfg.layer_model().map_err(CliError::Config)?;
    let tau = layer.optical_depth();
    let grid: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| std::f64::consts::PI * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect();

    let mut angles: Vec<f64> = if l.mc_samples > 0 {
        let obs = ObservationSet::simulate(
            &layer.compound_model(),
            l.mc_samples,
            ctx.cfg.experiment.seed,
            Sampling::Noisy,
        )?;
        obs.samples
            .iter()
            .map(|r| r.cos_euler_theta().clamp(-1.0, 1.0).acos())
            .collect()
    } else {
        Vec::new()
    };
    angles.sort_by(f64::total_cmp);

    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|&t| {
            let c = transmitted_intensity(&layer, t, l.delta_max);
            if angles.is_empty() {
                vec![t, c]
            } else {
                let below = angles.partition_point(|&a| a < t);
                vec![t, c, below as f64 / angles.len() as f64]
            }
        })
        .collect();
    let header: &[&str] = if angles.is_empty() {
        &["theta", "c_h"]
    } else {
        &["theta", "c_h", "c_h_mc"]
    };
    write_columns(ctx.create("transmitted.csv")?, header, &rows)?;

    let mixture: Vec<Vec<f64>> = grid
        .iter()
        .map(|&t| Ok(vec![t, mixture_density(l.g, tau, t, l.nmax)?.continuous]))
        .collect::<Result<_, so3_decompound::Error>>()?;
    write_columns(ctx.create("mixture.csv")?, &["theta", "continuous"], &mixture)?;

    let atom = mixture_density(l.g, tau, 0.0, l.nmax)?.atom;
    let mut pairs = vec![
        ("optical_depth", fmt_f64(tau)),
        ("g", l.g.to_string()),
        ("atom", fmt_f64(atom)),
        ("mc_samples", angles.len().to_string()),
    ];
    if !angles.is_empty() {
        let right = |t: f64| {
            if t <= 0.0 {
                atom
            } else {
                transmitted_intensity(&layer, t, l.delta_max)
            }
        };
        let left = |t: f64| transmitted_intensity(&layer, t, l.delta_max);
        pairs.push(("ks_distance", fmt_f64(ks_one_sample_with_atoms(&angles, right, left))));
    }
    ctx.write_text("summary.txt", &summary(&pairs))
}

/// Observed and expected fractions of `cos θ` in equal-width bins, the
/// identity atom counted in the top bin.
fn histogram_rows(samples: &[Rotation], g: f64, lambda_t: f64, nmax: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for r in samples {
        let c = r.cos_euler_theta().clamp(-1.0, 1.0);
        counts[(((c + 1.0) / 2.0 * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
    }
    let atom = (-lambda_t).exp();
    (0..HISTOGRAM_BINS)
        .map(|b| {
            let lo = -1.0 + 2.0 * b as f64 / HISTOGRAM_BINS as f64;
            let hi = -1.0 + 2.0 * (b + 1) as f64 / HISTOGRAM_BINS as f64;
            let mut p = (1.0 - atom)
                * (mixture_cdf_cos_given_scattered(g, lambda_t, hi, nmax)?
                    - mixture_cdf_cos_given_scattered(g, lambda_t, lo, nmax)?);
            if b == HISTOGRAM_BINS - 1 {
                p += atom;
            }
            Ok(vec![lo, hi, counts[b] as f64 / samples.len().max(1) as f64, p])
        })
        .collect()
}

pub fn figures(ctx: &Context) -> Result<(), CliError> {
    let x = &ctx.cfg.experiment;
    let cfg = ctx.estimator()?;
    let mut report = String::new();
    report.push_str(
        "# g, n: median parametric error over replications, worst |a_hat - g^delta| for delta <= 5 and <= 20,\n",
    );
    report.push_str("# gate failures and negative a_hat for delta >= 25 summed over replications\n");
    for (gi, &g) in x.gs.iter().enumerate() {
        let jump = format!("hg:{g}");
        let model = ctx.model(&jump)?;
        let truth = Truth::HenyeyGreenstein(g);
        for (ni, &n) in x.ns.iter().enumerate() {
            let mut errors = Vec::with_capacity(x.replications);
            let (mut worst5, mut worst20) = (0.0f64, 0.0f64);
            let (mut failures, mut negatives) = (0usize, 0usize);
            for r in 0..x.replications {
                let tag = 1 + ((gi * x.ns.len() + ni) * x.replications + r) as u64;
                let obs = ObservationSet::simulate(&model, n, derived_seed(x.seed, tag), x.sampling)?;
                if obs.is_empty() {
                    return Err(CliError::Numerical(format!("no observations for g = {g}, n = {n}")));
                }
                let est = run_estimator(&obs.samples, &cfg)?;
                errors.push(error_decomposition(&est, &truth).parametric);
                for e in est.entries.iter().skip(1) {
                    let dev = (e.a_hat() - g.powi(e.delta as i32)).abs();
                    if e.delta <= 5 {
                        worst5 = worst5.max(dev);
                    }
                    if e.delta <= 20 {
                        worst20 = worst20.max(dev);
                    }
                    failures += usize::from(!e.gate_passed);
                    negatives += usize::from(e.delta >= 25 && e.gate_passed && e.a_hat() < 0.0);
                }
                if r == 0 {
                    write_estimate_bundle(ctx, &format!("g{g}_n{n}/"), &est, &cfg, &model.jump)?;
                    if ni + 1 == x.ns.len() {
                        let rows = histogram_rows(&obs.samples, g, model.mean_jumps(), ctx.cfg.layer.nmax)?;
                        write_columns(
                            ctx.create(&format!("histogram_g{g}.csv"))?,
                            &["cos_lo", "cos_hi", "observed", "expected"],
                            &rows,
                        )?;
                    }
                }
            }
            report.push_str(&format!(
                "g={g} n={n} parametric_error={} max_dev_5={} max_dev_20={} gate_failures={failures} negative_tail={negatives}\n",
                fmt_f64(median(&errors)),
                fmt_f64(worst5),
                fmt_f64(worst20),
            ));
        }
    }
    ctx.write_text("summary.txt", &report)
}
