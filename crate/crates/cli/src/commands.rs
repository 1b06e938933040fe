use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use spectra_core::circle::Angle;
use spectra_core::classical::periodic_sweep;
use spectra_core::dimension::{profile_L, ZERO_DIM_TOL};
use spectra_core::engine::{
    classify_level, construct_interval_nonperiodic_case, construct_interval_periodic_case, ell_nonnegative_profile,
    markov_value_skew, spectra_difference_witness, CertConfig, IntervalCertificate, WitnessSetup,
};
use spectra_core::model::Model;
use spectra_core::symbolic::{BiSequence, TransitionMatrix, Word};
use spectra_core::{SpectraError, SpectrumSample};

use crate::output::{field, Report};
use crate::{Case, CertArgs, Command, Failure};

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    Ok(Model::parse(&read(path)?)?)
}

fn missing(what: &str) -> Failure {
    SpectraError::InvalidModel(format!("model has no {what}")).into()
}

pub fn dispatch(cmd: Command) -> Result<Report, Failure> {
    match cmd {
        Command::Classical { digits, max_period } => classical(&digits, max_period),
        Command::SkewMarkov {
            model,
            max_period,
            t,
            horizon,
        } => skew_markov(&model, max_period, t, horizon),
        Command::Interval { case, model, cert } => interval(case, &model, &cert),
        Command::WitnessSeparation {
            model,
            horizon,
            max_period,
        } => witness(model.as_deref(), horizon, max_period),
        Command::ProfileL {
            model,
            t_min,
            t_max,
            points,
            depth,
        } => profile(&model, t_min, t_max, points, depth),
        Command::Levels {
            model,
            samples,
            horizon,
            seed,
            levels,
            depth,
            grid,
            tol,
        } => levels_cmd(
            &model,
            samples,
            horizon,
            seed,
            &levels,
            &CertArgs {
                horizon: CertConfig::default().horizon,
                depth,
                grid,
                tol,
            },
        ),
    }
}

fn sample_table(samples: &[SpectrumSample]) -> Report {
    let rows = samples.iter().map(SpectrumSample::csv_row).collect();
    let json = serde_json::to_value(samples).expect("samples serialize");
    Report::table(SpectrumSample::CSV_HEADER, rows, json)
}

fn classical(digits: &[u64], max_period: usize) -> Result<Report, Failure> {
    if max_period == 0 {
        return Err(Failure::usage("--max-period must be at least 1"));
    }
    Ok(sample_table(&periodic_sweep(digits, max_period)?))
}

/// One word per primitive admissible cycle (its least rotation).
fn primitive_cycles(m: &TransitionMatrix, max_period: usize) -> Vec<Word> {
    (1..=max_period)
        .flat_map(|p| m.words(p))
        .filter(|w| m.allows(w.last().expect("non-empty"), w.first().expect("non-empty")))
        .filter(|w| w.primitive_period() == w.len())
        .filter(|w| (1..w.len()).all(|k| w.as_slice() <= w.rotate(k).as_slice()))
        .collect()
}

fn skew_markov(model: &Path, max_period: usize, t: f64, horizon: u64) -> Result<Report, Failure> {
    if max_period == 0 {
        return Err(Failure::usage("--max-period must be at least 1"));
    }
    let sys = load_model(model)?.system()?;
    let t = Angle::new(t);
    let mut samples = primitive_cycles(sys.matrix(), max_period)
        .into_par_iter()
        .map(|w| markov_value_skew(&sys, &BiSequence::periodic(w)?, t, horizon))
        .collect::<Result<Vec<_>, _>>()?;
    samples.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(sample_table(&samples))
}

fn cert_config(a: &CertArgs) -> Result<CertConfig, Failure> {
    if !(a.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    Ok(CertConfig {
        horizon: a.horizon,
        membership_depth: a.depth,
        targets: a.grid,
        validation_tol: a.tol,
        ..CertConfig::default()
    })
}

fn certificate_csv(c: &IntervalCertificate) -> String {
    let mut out = String::from("t,target,estimate,error_bound,validated\n");
    for g in &c.grid {
        out.push_str(&format!(
            "{},{},{},{:e},{}\n",
            g.t.value(),
            g.target,
            g.estimate,
            g.error_bound,
            g.validated
        ));
    }
    out
}

fn interval(case: Case, model: &Path, args: &CertArgs) -> Result<Report, Failure> {
    let cfg = cert_config(args)?;
    let md = load_model(model)?;
    let sys = md.system()?;
    let cert = match case {
        Case::Periodic => {
            let p = md.periodic_case.as_ref().ok_or_else(|| missing("periodic_case"))?;
            construct_interval_periodic_case(&sys, p, &cfg)?
        }
        Case::Nonperiodic => {
            let p = md.nonperiodic_case.as_ref().ok_or_else(|| missing("nonperiodic_case"))?;
            construct_interval_nonperiodic_case(&sys, p, &cfg)?
        }
    };
    let csv = certificate_csv(&cert);
    Ok(Report::document(serde_json::to_value(&cert).expect("certificate serializes"), Some(csv)))
}

fn witness(model: Option<&Path>, horizon: Option<u64>, max_period: Option<usize>) -> Result<Report, Failure> {
    let mut setup = match model {
        Some(p) => serde_json::from_str::<WitnessSetup>(&read(p)?)
            .map_err(|e| Failure::from(SpectraError::InvalidModel(e.to_string())))?,
        None => WitnessSetup::standard(3),
    };
    if let Some(h) = horizon {
        setup.horizon = h;
    }
    if let Some(p) = max_period {
        setup.max_period = p;
    }
    let record = spectra_difference_witness(&setup)?;
    Ok(Report::document(
        json!({"setup": setup, "record": record}),
        None,
    ))
}

fn classify(lower: f64, upper: f64) -> &'static str {
    if upper < ZERO_DIM_TOL {
        "zero"
    } else if lower >= ZERO_DIM_TOL {
        "positive"
    } else {
        "undetermined"
    }
}

fn profile(model: &Path, t_min: f64, t_max: f64, points: usize, depth: usize) -> Result<Report, Failure> {
    if points < 2 || !(t_min < t_max) {
        return Err(Failure::usage("need --points >= 2 and --t-min < --t-max"));
    }
    let sys = load_model(model)?.system()?;
    let grid: Vec<f64> = (0..points)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (points - 1) as f64)
        .collect();
    let prof = profile_L(&sys, &grid, depth)?;
    let rows: Vec<String> = prof
        .points
        .iter()
        .map(|p| format!("{},{},{},{}", p.t, p.lower, p.upper, classify(p.lower, p.upper)))
        .collect();
    let json: Vec<Value> = prof
        .points
        .iter()
        .map(|p| json!({"t": p.t, "dim_lower": p.lower, "dim_upper": p.upper, "classification": classify(p.lower, p.upper)}))
        .collect();
    Ok(Report::table(
        "t,dim_lower,dim_upper,classification",
        rows,
        json!({"points": json, "c_estimate": prof.c_estimate}),
    ))
}

fn levels_cmd(
    model: &Path,
    samples: usize,
    horizon: u64,
    seed: u64,
    levels: &[f64],
    args: &CertArgs,
) -> Result<Report, Failure> {
    let cfg = cert_config(args)?;
    let md = load_model(model)?;
    let sys = md.system()?;
    let sub = md.subhorseshoe.as_ref().ok_or_else(|| missing("subhorseshoe"))?;
    let prof = ell_nonnegative_profile(&sys, samples, horizon, seed)?;
    let reports = levels
        .iter()
        .map(|&s| classify_level(&sys, s, &prof, &sub.matrix, &sub.periodic_case, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("s,class,dimension,lo,hi,min_sampled_ell\n");
    for r in &reports {
        let (lo, hi) = r
            .certificate
            .as_ref()
            .map_or((String::new(), String::new()), |c| (c.lo.to_string(), c.hi.to_string()));
        let class = serde_json::to_value(r.class).expect("class serializes");
        csv.push_str(&format!(
            "{},{},{},{lo},{hi},{}\n",
            r.s,
            field(class.as_str().unwrap_or_default()),
            r.dimension,
            r.min_sampled_ell
        ));
    }
    Ok(Report::document(json!({"profile": prof, "levels": reports}), Some(csv)))
}
