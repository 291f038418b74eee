use std::io::Write;
use std::path::Path;

use chiral_core::dynamics::{integrate_amplitude, integrate_classical, AmplitudeSystem};
use chiral_core::ensemble::{self, convergence_study, run_ensemble, sample_env_initial, EnsembleConfig, EnsembleResult};
use chiral_core::model::{total_h_value, wrap_phase, AmplitudeState, MoleculeState, SystemEnvState};
use chiral_core::potentials::{
    axion_potential, classify_chirality, i_integral, vacpol_contact_weight, vacpol_longrange, weak_charge, Interaction,
    PotentialParams, SymmetrySignature,
};
use chiral_core::spectra::{environment_split, system_split, EnergySplit};
use serde::Serialize;
use serde_json::json;

use crate::config::{Formalism, RunConfig};
use crate::output::{fmt_f64, plot_script, render_json, write_file, Metadata, Table};
use crate::reproduce::{reproduce_fig3, SweepGrid};
use crate::{Cli, CliError, Command, FormalismArg, InteractionArg, PotentialArgs, PotentialCmd, RadiusArgs, Role};

pub fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let g = &cli.global;
    let overrides = crate::config::Overrides {
        seed: g.seed,
        n: g.n,
        n_env: g.n_env,
        dt: g.dt,
        t_final: g.t_final,
        convention: g.convention,
        out: g.out.clone(),
        threads: g.threads,
    };
    let cfg = RunConfig::resolve(g.config.as_deref(), &overrides)?;
    let explicit_out = g.out.is_some();
    let ctx = Ctx { cfg, explicit_out };
    match cli.command {
        Command::Simulate { formalism, realization } => ctx.simulate(formalism, realization, stdout),
        Command::Ensemble { window } => ctx.ensemble(window, stdout),
        Command::ReproduceFig3 {
            sweep,
            sweep_z0,
            sweep_n_env,
            sweep_t_final,
            sweep_conventions,
            sweep_n,
        } => {
            let grid = sweep.then(|| {
                let d = SweepGrid::default();
                SweepGrid {
                    z0: sweep_z0.unwrap_or(d.z0),
                    n_env: sweep_n_env.unwrap_or(d.n_env),
                    t_final: sweep_t_final.unwrap_or(d.t_final),
                    conventions: sweep_conventions.unwrap_or(d.conventions),
                    n_realizations: sweep_n.unwrap_or(ctx.cfg.ensemble.n_realizations),
                }
            });
            ctx.reproduce(grid, stdout)
        }
        Command::Spectrum {
            role,
            delta,
            epsilon,
            lambda,
            env_z,
            system_z,
            scan_lambda,
        } => ctx.spectrum(role, delta, epsilon, lambda, &env_z, system_z, scan_lambda, stdout),
        Command::Potential { kind } => ctx.potential(kind, stdout),
        Command::Classify {
            parity,
            time_reversal,
            interaction,
        } => ctx.classify(parity.zip(time_reversal), interaction, stdout),
        Command::Convergence { n_list } => ctx.convergence(&n_list, stdout),
    }
}

struct Ctx {
    cfg: RunConfig,
    explicit_out: bool,
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write output: {e}"))
}

/// The configuration as echoed into outputs: everything except where the
/// files go.
fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("configuration serializes");
    if let serde_json::Value::Object(map) = &mut v {
        map.remove("output");
    }
    v
}

/// `(z, φ)` read off amplitudes without the normalization check, so long runs
/// with slight norm drift can still be reported.
fn classical_view(a: &AmplitudeState) -> MoleculeState {
    let z = a.population_difference().clamp(-1.0, 1.0);
    let phi = if a.a_l.norm_sqr() == 0.0 || a.a_r.norm_sqr() == 0.0 {
        0.0
    } else {
        wrap_phase((a.a_r * a.a_l.conj()).arg())
    };
    MoleculeState { z, phi }
}

impl Ctx {
    fn out_dir(&self) -> &Path {
        &self.cfg.output.dir
    }

    fn run_ensemble(&self, cfg: &EnsembleConfig) -> Result<EnsembleResult, CliError> {
        Ok(match self.cfg.ensemble.threads {
            Some(t) => ensemble::run_ensemble_with_threads(cfg, t)?,
            None => run_ensemble(cfg)?,
        })
    }

    fn initial_state(&self, realization: usize) -> Result<SystemEnvState, CliError> {
        let cfg = &self.cfg;
        let env: Vec<MoleculeState> = match &cfg.environment.z0 {
            Some(z) => {
                let phi = cfg.environment.phi0.clone().unwrap_or_else(|| vec![0.0; z.len()]);
                if phi.len() != z.len() {
                    return Err(CliError::Config(format!(
                        "environment.z0 has {} entries but environment.phi0 has {}",
                        z.len(),
                        phi.len()
                    )));
                }
                z.iter().zip(&phi).map(|(&z, &phi)| MoleculeState { z, phi }).collect()
            }
            None => sample_env_initial(&cfg.ensemble_config(), realization),
        };
        let n = env.len();
        let lambdas = match &cfg.coupling.lambdas {
            Some(l) if l.len() != n => {
                return Err(CliError::Config(format!(
                    "coupling.lambdas has {} entries for {n} environment molecules",
                    l.len()
                )))
            }
            Some(l) => l.clone(),
            None => vec![cfg.coupling.lambda; n],
        };
        Ok(SystemEnvState::new(
            MoleculeState {
                z: cfg.system.z0,
                phi: cfg.system.phi0,
            },
            cfg.system_params(),
            env,
            vec![cfg.env_params(); n],
            lambdas,
        )?)
    }

    fn simulate(
        &self,
        formalism: Option<FormalismArg>,
        realization: usize,
        stdout: &mut dyn Write,
    ) -> Result<(), CliError> {
        let formalism = match formalism {
            Some(FormalismArg::Amplitude) => Formalism::Amplitude,
            Some(FormalismArg::Classical) => Formalism::Classical,
            None => self.cfg.integrator.formalism,
        };
        let initial = self.initial_state(realization)?;
        let icfg = self.cfg.integrator_config();
        let convention = self.cfg.coupling.convention;
        let (times, states, drift) = match formalism {
            Formalism::Classical => {
                let traj = integrate_classical(&initial, &icfg, convention)?;
                let states = traj
                    .states
                    .into_iter()
                    .map(|mut s| {
                        s.system.phi = wrap_phase(s.system.phi);
                        s.env.iter_mut().for_each(|m| m.phi = wrap_phase(m.phi));
                        s
                    })
                    .collect::<Vec<_>>();
                (traj.times, states, traj.conserved_energy_drift)
            }
            Formalism::Amplitude => {
                let traj = integrate_amplitude(&AmplitudeSystem::from_classical(&initial, 0.0)?, &icfg, convention)?;
                let states = traj
                    .states
                    .iter()
                    .map(|a| SystemEnvState {
                        system: classical_view(&a.system),
                        system_params: a.system_params,
                        env: a.env.iter().map(classical_view).collect(),
                        env_params: a.env_params.clone(),
                        lambdas: a.lambdas.clone(),
                    })
                    .collect::<Vec<_>>();
                (traj.times, states, traj.conserved_energy_drift)
            }
        };

        let n = initial.n_env();
        let mut header = vec!["t".to_string(), "Z".into(), "Phi".into()];
        for i in 1..=n {
            header.push(format!("z_{i}"));
            header.push(format!("phi_{i}"));
        }
        header.push("H_total".into());
        let mut table = Table::new(header);
        for (t, s) in times.iter().zip(&states) {
            let mut row = vec![*t, s.system.z, s.system.phi];
            for m in &s.env {
                row.push(m.z);
                row.push(m.phi);
            }
            row.push(total_h_value(s));
            table.push_floats(row);
        }
        let formalism_name = match formalism {
            Formalism::Amplitude => "amplitude",
            Formalism::Classical => "classical",
        };
        let meta = Metadata::new("simulate")
            .with("formalism", formalism_name)
            .with("convention", convention)
            .with("realization", realization)
            .with("relative_energy_drift", fmt_f64(drift))
            .with_json("config", &config_echo(&self.cfg));
        let path = write_file(self.out_dir(), "simulate.csv", &table.render(&meta))?;
        if self.cfg.output.plot_script {
            write_file(
                self.out_dir(),
                "plot_simulate.py",
                &plot_script("simulate.csv", &["Z"], "Z", "simulate.png"),
            )?;
        }
        writeln!(
            stdout,
            "wrote {} ({} samples, {formalism_name} formalism, relative energy drift {drift:.3e})",
            path.display(),
            times.len()
        )
        .map_err(out_err)
    }

    fn ensemble(&self, window: Option<Vec<f64>>, stdout: &mut dyn Write) -> Result<(), CliError> {
        let mut cfg = self.cfg.ensemble_config();
        if let Some(w) = window {
            let [lo, hi] = w[..] else {
                return Err(CliError::Config("--window expects LO,HI".into()));
            };
            cfg.time_average_window = Some([lo, hi]);
        }
        let result = self.run_ensemble(&cfg)?;
        let meta = Metadata::new("ensemble")
            .with("master_seed", cfg.master_seed)
            .with("convention", cfg.convention)
            .with("n_realizations", cfg.n_realizations)
            .with_json("config", &cfg);
        let mut table = Table::new(["t", "mean_Z", "std_Z"]);
        for ((t, m), s) in result.times.iter().zip(&result.mean_z).zip(&result.std_z) {
            table.push_floats([*t, *m, *s]);
        }
        let csv = write_file(self.out_dir(), "ensemble.csv", &table.render(&meta))?;
        let summary = json!({
            "time_avg_Z": result.time_avg_z,
            "time_avg_std_error": finite_or_null(result.time_avg_std_error),
            "envelope_decay": finite_or_null(result.envelope_decay),
            "window": result.window,
            "master_seed": cfg.master_seed,
            "convention": cfg.convention,
            "n_realizations": cfg.n_realizations,
            "config": cfg,
        });
        write_file(self.out_dir(), "ensemble_summary.json", &render_json(&meta, &summary))?;
        if self.cfg.output.plot_script {
            write_file(
                self.out_dir(),
                "plot_ensemble.py",
                &plot_script("ensemble.csv", &["mean_Z"], "<Z>", "ensemble.png"),
            )?;
        }
        writeln!(
            stdout,
            "time-averaged Z over [{}, {}]: {:.6} ± {:.6} (envelope decay {:.4}); wrote {}",
            result.window[0],
            result.window[1],
            result.time_avg_z,
            result.time_avg_std_error,
            result.envelope_decay,
            csv.display()
        )
        .map_err(out_err)
    }

    fn reproduce(&self, grid: Option<SweepGrid>, stdout: &mut dyn Write) -> Result<(), CliError> {
        let base = self.cfg.ensemble_config();
        let run = reproduce_fig3(&base, grid.as_ref(), &|c| self.run_ensemble(c))?;
        let report = &run.report;
        let meta = Metadata::new("reproduce-fig3")
            .with("master_seed", base.master_seed)
            .with("convention", base.convention)
            .with_json("config", &base)
            .with_json("sweep", &grid);

        let mut table = Table::new(["t", "mean_Z_eps0", "std_Z_eps0", "mean_Z_eps50", "std_Z_eps50"]);
        for i in 0..run.degenerate.times.len() {
            table.push_floats([
                run.degenerate.times[i],
                run.degenerate.mean_z[i],
                run.degenerate.std_z[i],
                run.biased.mean_z[i],
                run.biased.std_z[i],
            ]);
        }
        write_file(self.out_dir(), "fig3.csv", &table.render(&meta))?;
        write_file(self.out_dir(), "fig3_report.json", &render_json(&meta, report))?;
        if grid.is_some() {
            let mut sweep = Table::new([
                "convention",
                "Z0",
                "n_env",
                "t_final",
                "n_realizations",
                "time_avg_Z_eps0",
                "std_error_eps0",
                "time_avg_Z_eps50",
                "std_error_eps50",
                "envelope_decay_eps0",
                "matches_targets",
            ]);
            for p in &report.sweep {
                sweep.push(vec![
                    p.convention.to_string(),
                    fmt_f64(p.z0),
                    p.n_env.to_string(),
                    fmt_f64(p.t_final),
                    p.n_realizations.to_string(),
                    fmt_f64(p.degenerate.time_avg_z),
                    fmt_f64(p.degenerate.std_error),
                    fmt_f64(p.biased.time_avg_z),
                    fmt_f64(p.biased.std_error),
                    fmt_f64(p.degenerate.envelope_decay),
                    p.matches_targets.to_string(),
                ]);
            }
            write_file(self.out_dir(), "fig3_sweep.csv", &sweep.render(&meta))?;
        }
        if self.cfg.output.plot_script {
            write_file(
                self.out_dir(),
                "plot_fig3.py",
                &plot_script("fig3.csv", &["mean_Z_eps0", "mean_Z_eps50"], "<Z>", "fig3.png"),
            )?;
        }

        let d = &report.default;
        let v = &report.verdict;
        let w = |e: std::io::Error| out_err(e);
        writeln!(
            stdout,
            "eps_env=0:  <Z> = {:.4} ± {:.4}, envelope decay {:.4}",
            d.degenerate.time_avg_z, d.degenerate.std_error, d.degenerate.envelope_decay
        )
        .map_err(w)?;
        writeln!(
            stdout,
            "eps_env=50: <Z> = {:.4} ± {:.4}",
            d.biased.time_avg_z, d.biased.std_error
        )
        .map_err(w)?;
        writeln!(
            stdout,
            "ordering: gap {:.4} vs 3σ {:.4} -> {}",
            v.gap,
            3.0 * v.combined_std_error,
            pass(v.ordering_pass)
        )
        .map_err(w)?;
        writeln!(stdout, "damping: envelope {:.4} < 0.5 -> {}", v.envelope_decay, pass(v.damping_pass)).map_err(w)?;
        writeln!(
            stdout,
            "targets {:.2}/{:.2} ± {:.2}: default point {}",
            report.targets.degenerate,
            report.targets.biased,
            report.targets.tolerance,
            if d.matches_targets { "matches" } else { "does not match" }
        )
        .map_err(w)?;
        if grid.is_some() {
            writeln!(
                stdout,
                "sweep: {} of {} points match the targets",
                report.matching_points,
                report.sweep.len()
            )
            .map_err(w)?;
            for p in report.sweep.iter().filter(|p| p.matches_targets) {
                writeln!(
                    stdout,
                    "  match: convention={} Z0={} N={} t_final={} -> {:.4} / {:.4}",
                    p.convention, p.z0, p.n_env, p.t_final, p.degenerate.time_avg_z, p.biased.time_avg_z
                )
                .map_err(w)?;
            }
        }
        if v.passed() {
            Ok(())
        } else {
            Err(CliError::Acceptance(
                "reproduction verdict failed (see fig3_report.json)".into(),
            ))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn spectrum(
        &self,
        role: Role,
        delta: Option<f64>,
        epsilon: Option<f64>,
        lambda: Option<f64>,
        env_z: &[f64],
        system_z: Option<f64>,
        scan: Option<Vec<f64>>,
        stdout: &mut dyn Write,
    ) -> Result<(), CliError> {
        let mut params = match role {
            Role::System => self.cfg.system_params(),
            Role::Environment => self.cfg.env_params(),
        };
        params.delta = delta.unwrap_or(params.delta);
        params.epsilon = epsilon.unwrap_or(params.epsilon);
        params.validate()?;
        let lambda = lambda.unwrap_or(self.cfg.coupling.lambda);
        let system_z = system_z.unwrap_or(self.cfg.system.z0);
        for &z in env_z.iter().chain([&system_z]) {
            MoleculeState { z, phi: 0.0 }.validate()?;
        }
        let split = |lambda: f64| -> EnergySplit {
            match role {
                Role::System => system_split(&params, lambda, env_z),
                Role::Environment => environment_split(&params, lambda, system_z),
            }
        };
        let role_name = match role {
            Role::System => "system",
            Role::Environment => "environment",
        };
        let meta = Metadata::new("spectrum")
            .with("role", role_name)
            .with("delta", params.delta)
            .with("epsilon", params.epsilon)
            .with("energies", "model energy units");
        let (bytes, name) = match scan {
            Some(s) => {
                if s.len() != 3 {
                    return Err(CliError::Config("--scan-lambda expects LO,HI,POINTS".into()));
                }
                let points = s[2];
                if !(points >= 2.0 && points.fract() == 0.0) || !s[0].is_finite() || !s[1].is_finite() {
                    return Err(CliError::Config("--scan-lambda expects LO,HI,POINTS with POINTS ≥ 2".into()));
                }
                let points = points as usize;
                let mut table = Table::new([
                    "lambda",
                    "epsilon_eff",
                    "lambda_plus",
                    "lambda_minus",
                    "E_L",
                    "E_R",
                    "Delta_E",
                    "theta [rad]",
                ]);
                for k in 0..points {
                    let l = s[0] + (s[1] - s[0]) * k as f64 / (points - 1) as f64;
                    let e = split(l);
                    table.push(vec![
                        fmt_f64(l),
                        fmt_f64(e.epsilon_eff),
                        fmt_f64(e.lambda_plus),
                        fmt_f64(e.lambda_minus),
                        fmt_f64(e.e_l),
                        fmt_f64(e.e_r),
                        fmt_f64(e.delta_e),
                        e.theta.map(fmt_f64).unwrap_or_default(),
                    ]);
                }
                (table.render(&meta), "spectrum.csv")
            }
            None => {
                #[derive(Serialize)]
                struct Record<'a> {
                    role: &'a str,
                    lambda: f64,
                    #[serde(flatten)]
                    split: EnergySplit,
                }
                let rec = Record {
                    role: role_name,
                    lambda,
                    split: split(lambda),
                };
                (render_json(&meta, &rec), "spectrum.json")
            }
        };
        self.emit(&bytes, name, stdout)
    }

    /// Prints to stdout, and also writes a file when `--out` was given.
    fn emit(&self, bytes: &[u8], name: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
        stdout.write_all(bytes).map_err(out_err)?;
        if self.explicit_out {
            write_file(self.out_dir(), name, bytes)?;
        }
        Ok(())
    }

    fn potential_params(&self, a: &PotentialArgs) -> Result<PotentialParams, CliError> {
        let mut p = self.cfg.potential;
        p.z_protons = a.z_protons.unwrap_or(p.z_protons);
        p.n_neutrons = a.n_neutrons.unwrap_or(p.n_neutrons);
        p.sin2_theta_w = a.sin2_theta_w.unwrap_or(p.sin2_theta_w);
        p.m_phi = a.m_phi.unwrap_or(p.m_phi);
        p.validate()?;
        Ok(p)
    }

    fn potential(&self, kind: PotentialCmd, stdout: &mut dyn Write) -> Result<(), CliError> {
        let (bytes, name) = match kind {
            PotentialCmd::IIntegral { radii } => {
                let mut table = Table::new(["r [1/m_e]", "I [dimensionless]"]);
                for r in radius_list(&radii)? {
                    table.push_floats([r, i_integral(r)?]);
                }
                (table.render(&Metadata::new("potential i-integral")), "i_integral.csv")
            }
            PotentialCmd::Vacpol { radii, params } => {
                let p = self.potential_params(&params)?;
                let meta = Metadata::new("potential vacpol")
                    .with_json("params", &p)
                    .with("contact_weight [1/energy^2]", fmt_f64(vacpol_contact_weight(&p)?))
                    .with("energies", "units of m_e (GeV for the default constants)");
                let mut table = Table::new(["r [1/m_e]", "W_long [energy]"]);
                for r in radius_list(&radii)? {
                    table.push_floats([r, vacpol_longrange(r, &p)?]);
                }
                (table.render(&meta), "vacpol.csv")
            }
            PotentialCmd::Axion { radii, params } => {
                let p = self.potential_params(&params)?;
                let meta = Metadata::new("potential axion")
                    .with_json("params", &p)
                    .with("energies", "units of m_e (GeV for the default constants)");
                let mut table = Table::new(["r [1/m_e]", "V_axion [energy^2]"]);
                for r in radius_list(&radii)? {
                    table.push_floats([r, axion_potential(r, &p)?]);
                }
                (table.render(&meta), "axion.csv")
            }
            PotentialCmd::WeakCharge { params } => {
                let p = self.potential_params(&params)?;
                let body = json!({
                    "z_protons": p.z_protons,
                    "n_neutrons": p.n_neutrons,
                    "sin2_theta_w": p.sin2_theta_w,
                    "q_w": weak_charge(p.z_protons, p.n_neutrons, p.sin2_theta_w),
                });
                (render_json(&Metadata::new("potential weak-charge"), &body), "weak_charge.json")
            }
        };
        self.emit(&bytes, name, stdout)
    }

    fn classify(
        &self,
        signature: Option<(chiral_core::potentials::Parity, chiral_core::potentials::Parity)>,
        interaction: Option<InteractionArg>,
        stdout: &mut dyn Write,
    ) -> Result<(), CliError> {
        let (sig, named) = match (signature, interaction) {
            (Some((parity, time_reversal)), None) => (SymmetrySignature { parity, time_reversal }, None),
            (None, Some(i)) => {
                let i = match i {
                    InteractionArg::WeakNeutralCurrent => Interaction::WeakNeutralCurrent,
                    InteractionArg::AxionExchange => Interaction::AxionExchange,
                    InteractionArg::MixedVacuumPolarization => Interaction::MixedVacuumPolarization,
                };
                (i.signature(), Some(i))
            }
            _ => {
                return Err(CliError::Config(
                    "give either --parity and --time-reversal, or --interaction".into(),
                ))
            }
        };
        let class = classify_chirality(sig);
        let body = json!({
            "interaction": named,
            "parity": sig.parity,
            "time_reversal": sig.time_reversal,
            "class": class,
            "generates_pved": class.generates_pved(),
        });
        self.emit(&render_json(&Metadata::new("classify"), &body), "classify.json", stdout)
    }

    fn convergence(&self, n_list: &[usize], stdout: &mut dyn Write) -> Result<(), CliError> {
        let cfg = self.cfg.ensemble_config();
        let rows = match self.cfg.ensemble.threads {
            Some(t) => ensemble::with_threads(t, || convergence_study(&cfg, n_list))?,
            None => convergence_study(&cfg, n_list)?,
        };
        let meta = Metadata::new("convergence")
            .with("master_seed", cfg.master_seed)
            .with("convention", cfg.convention)
            .with_json("config", &cfg);
        let mut table = Table::new(["n", "time_avg_Z", "std_error"]);
        for r in &rows {
            table.push(vec![r.n.to_string(), fmt_f64(r.time_avg_z), fmt_f64(r.std_error)]);
        }
        let bytes = table.render(&meta);
        write_file(self.out_dir(), "convergence.csv", &bytes)?;
        stdout.write_all(&bytes).map_err(out_err)
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn radius_list(args: &RadiusArgs) -> Result<Vec<f64>, CliError> {
    let mut radii = args.r.clone();
    if let Some(g) = &args.r_grid {
        let [lo, hi, points] = g[..] else {
            return Err(CliError::Config("--r-grid expects LO,HI,POINTS".into()));
        };
        if !(lo > 0.0 && hi > lo && points >= 2.0 && points.fract() == 0.0) {
            return Err(CliError::Config(
                "--r-grid expects LO,HI,POINTS with 0 < LO < HI and POINTS ≥ 2".into(),
            ));
        }
        let points = points as usize;
        let ratio = (hi / lo).ln();
        radii.extend((0..points).map(|k| {
            if k == points - 1 {
                hi
            } else {
                lo * (ratio * k as f64 / (points - 1) as f64).exp()
            }
        }));
    }
    if radii.is_empty() {
        return Err(CliError::Config("no radii given; use --r or --r-grid".into()));
    }
    Ok(radii)
}
