use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qobserver_core::dynamics::running_average;
use qobserver_core::linear::max_abs;
use qobserver_core::nalgebra::{DVector, RowDVector, RowVector2};
use qobserver_core::observer::{OBSERVER_ROW, PLANT_ROW};
use qobserver_core::{
    augment, coefficient_trajectory, default_horizons, design_ndpa, realizability_defect,
    simulate_means, validate_observer, verify_observer_claims, ConvergenceReport, CoreError,
    NdpaOutcome, PlantSpec, VerificationError,
};

use crate::config::{Command, RunConfig, Units};
use crate::error::CliError;
use crate::golden::{self, GoldenCheck};
use crate::numfmt::format_f64;
use crate::report::{
    nums, to_json, Angle, AnglesDoc, DesignDoc, DiagnosticsDoc, InputDoc, Num, RepresentationDoc,
    VerifyDoc,
};

pub const DESIGN_FILE: &str = "design.json";
pub const REPORT_FILE: &str = "report.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// Tolerance for the observer admissibility checks reported in
/// `design.json`.
const OBSERVER_TOLERANCE: f64 = 1e-12;

#[derive(Debug)]
pub struct RunOutput {
    pub stdout: String,
    pub files: Vec<PathBuf>,
    pub golden: Option<Vec<GoldenCheck>>,
    /// Set when outputs were produced but the run must still exit nonzero.
    pub failure: Option<CliError>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, CliError::exit_code)
    }
}

/// Designs of one configuration in nondimensional and, when a reference
/// frequency is known, SI units.
#[derive(Debug, Clone)]
pub struct Designs {
    pub nondimensional: NdpaOutcome,
    pub si: Option<NdpaOutcome>,
}

pub fn design(cfg: &RunConfig) -> Result<Designs, CliError> {
    let c_p = RowVector2::new(cfg.c_p[0], cfg.c_p[1]);
    let s = cfg.frequency_scale();
    let nondimensional = design_ndpa(
        c_p,
        cfg.omega_o * s,
        cfg.gamma * s,
        cfg.eps_ratio,
        cfg.delta,
    )?;
    let si = match (cfg.units, cfg.reference_frequency) {
        (Units::Si, _) => Some(design_ndpa(
            c_p,
            cfg.omega_o,
            cfg.gamma,
            cfg.eps_ratio,
            cfg.delta,
        )?),
        (Units::Nondimensional, Some(w)) => Some(design_ndpa(
            c_p,
            cfg.omega_o * w,
            cfg.gamma * w,
            cfg.eps_ratio,
            cfg.delta,
        )?),
        (Units::Nondimensional, None) => None,
    };
    Ok(Designs { nondimensional, si })
}

fn input_doc(cfg: &RunConfig) -> InputDoc {
    InputDoc {
        units: cfg.units.name(),
        reference_frequency: cfg.reference_frequency.map(Num),
        c_p: nums(&cfg.c_p),
        omega_o: Num(cfg.omega_o),
        gamma: Num(cfg.gamma),
        eps_ratio: Num(cfg.eps_ratio),
        delta: cfg.delta.map(Num),
    }
}

fn numerics(stage: &'static str) -> impl Fn(CoreError) -> CliError {
    move |source| CliError::Numerics { stage, source }
}

pub fn design_doc(cfg: &RunConfig, d: &Designs) -> Result<DesignDoc, CliError> {
    let nd = &d.nondimensional;
    let plant = PlantSpec::new(nd.observer.c_p).map_err(numerics("augment"))?;
    let sys = augment(&plant, &nd.observer).map_err(numerics("augment"))?;
    let c_p_row: RowDVector<f64> = sys.c().row(PLANT_ROW).into_owned();
    let r = &nd.report;
    Ok(DesignDoc {
        input: input_doc(cfg),
        c_p: nums(&cfg.c_p),
        angles: AnglesDoc {
            arg_c: Angle::new(r.arg_c),
            delta: Angle::new(r.delta),
            theta: Angle::new(r.theta),
            psi: Angle::new(r.psi),
            phi: Angle::new(r.phi),
        },
        si: d.si.as_ref().map(RepresentationDoc::new),
        nondimensional: RepresentationDoc::new(nd),
        diagnostics: DiagnosticsDoc::new(
            r,
            &validate_observer(&nd.observer, OBSERVER_TOLERANCE),
            nd.observer.limit_gain().unwrap_or(f64::NAN),
            realizability_defect(&sys),
            max_abs(&(&c_p_row * sys.a())),
        ),
        warnings: r.warnings.iter().map(|w| w.to_string()).collect(),
    })
}

/// Horizons in nondimensional time.
pub fn horizons(cfg: &RunConfig, d: &Designs) -> Vec<f64> {
    let s = cfg.frequency_scale();
    match &cfg.horizons {
        Some(h) => h.iter().map(|t| t / s).collect(),
        None => default_horizons(d.nondimensional.observer.omega_o),
    }
}

/// Runs verification; a report with violated claims is returned as `Ok`
/// alongside the claims.
pub fn verify(cfg: &RunConfig, d: &Designs) -> Result<ConvergenceReport, CliError> {
    match verify_observer_claims(&d.nondimensional.observer, &horizons(cfg, d)) {
        Ok(r) => Ok(r),
        Err(VerificationError::ClaimsViolated { report, .. }) => Ok(*report),
        Err(VerificationError::Input(e)) => Err(numerics("verify")(e)),
    }
}

/// Plot-ready CSV of the output rows on a uniform grid from 0.
pub fn trajectory_csv(cfg: &RunConfig, d: &Designs) -> Result<String, CliError> {
    let nd = &d.nondimensional.observer;
    let plant = PlantSpec::new(nd.c_p).map_err(numerics("augment"))?;
    let sys = augment(&plant, nd).map_err(numerics("augment"))?;
    let s = cfg.frequency_scale();
    let t_end = match cfg.t_final {
        Some(t) => t / s,
        None => *horizons(cfg, d).last().expect("non-empty horizons"),
    };
    let n = cfg.samples;
    let grid: Vec<f64> = (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect();

    let sim = numerics("simulate");
    let zp =
        coefficient_trajectory(&sys, &sys.c().row(PLANT_ROW).into_owned(), &grid).map_err(&sim)?;
    let zo = coefficient_trajectory(&sys, &sys.c().row(OBSERVER_ROW).into_owned(), &grid)
        .map_err(&sim)?;
    let avg = running_average(&zo);
    let means = match cfg.x0 {
        Some(x0) => Some(simulate_means(&sys, &DVector::from_row_slice(&x0), &grid).map_err(&sim)?),
        None => None,
    };

    let comps = ["qp", "pp", "qo", "po"];
    let mut header = vec![match cfg.units {
        Units::Si => "t_s".to_string(),
        Units::Nondimensional => "t".to_string(),
    }];
    for prefix in ["zp", "zo", "avg_zo"] {
        header.extend(comps.iter().map(|c| format!("{prefix}_{c}")));
    }
    if means.is_some() {
        header.extend(["mean_zp".to_string(), "mean_zo".to_string()]);
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..n {
        let mut values = vec![grid[k] * s];
        for r in [&zp.coefficient_rows[k], &zo.coefficient_rows[k], &avg[k]] {
            values.extend(r.iter());
        }
        if let Some(m) = &means {
            values.extend(
                m[..2]
                    .iter()
                    .map(|t| t.mean_values.as_ref().expect("means")[k]),
            );
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(sim(CoreError::NonFinite("trajectory value")));
        }
        let cells: Vec<String> = values.into_iter().map(format_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    files.push(path);
    Ok(())
}

pub fn golden_table(checks: &[GoldenCheck]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{} {:<22} deviation {:<20} tolerance {} ({})",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            format_f64(c.deviation),
            format_f64(c.tolerance),
            c.tolerance_kind
        );
    }
    s
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let designs = design(cfg)?;
    let design_json = to_json(&design_doc(cfg, &designs)?);
    let mut files = Vec::new();
    let mut stdout = String::new();
    let mut golden = None;
    let mut failure = None;
    let out_dir = cfg.output_dir.as_deref();

    if let Some(dir) = out_dir {
        if cfg.json {
            write(dir, DESIGN_FILE, &design_json, &mut files)?;
        }
    }

    match cfg.command {
        Command::Design => {
            if out_dir.is_none() {
                stdout.push_str(&design_json);
            }
        }
        Command::Simulate => {
            let csv = trajectory_csv(cfg, &designs)?;
            match out_dir {
                Some(dir) if cfg.csv => write(dir, TRAJECTORY_FILE, &csv, &mut files)?,
                Some(_) => {}
                None if cfg.csv => stdout.push_str(&csv),
                None => stdout.push_str(&design_json),
            }
        }
        Command::Verify => {
            let report = verify(cfg, &designs)?;
            let doc = VerifyDoc::new(
                input_doc(cfg),
                designs.nondimensional.observer.omega_o,
                cfg.reference_frequency,
                &report,
            );
            let json = to_json(&doc);
            match out_dir {
                Some(dir) if cfg.json => write(dir, REPORT_FILE, &json, &mut files)?,
                Some(_) => {}
                None => stdout.push_str(&json),
            }
            if !report.passed() {
                failure = Some(CliError::ClaimsViolated(report.violations.clone()));
            }
        }
        Command::ReproduceExample => {
            let si = designs.si.as_ref().expect("example is in SI units");
            let checks = golden::compare(si);
            stdout.push_str(&golden_table(&checks));
            let failed: Vec<String> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.to_string())
                .collect();
            if !failed.is_empty() {
                failure = Some(CliError::GoldenMismatch(failed));
            }
            golden = Some(checks);
        }
    }
    for f in &files {
        let _ = writeln!(stdout, "wrote {}", f.display());
    }
    Ok(RunOutput {
        stdout,
        files,
        golden,
        failure,
    })
}
