//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! Runs without the libtest harness so the report is always printed.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectra_core::circle::{perturbed_composition_decompose, steer_rotation, Angle, CircleMap, SteerConfig};
use spectra_core::classical::{freiman_constant, markov_numbers, markov_number_value, periodic_sweep};
use spectra_core::dimension::{box_dimension, cylinder_counts, hd_sft, profile_L, Axes, SubSft};
use spectra_core::engine::{
    classify_level, construct_interval_periodic_case, ell_nonnegative_profile, fiber_max, spectra_difference_witness,
    CertConfig, IntervalCertificate, LevelClass, Observable, ObservableSpec, SkewSystem, WitnessSetup,
};
use spectra_core::model::Model;
use spectra_core::symbolic::{BiSequence, EmbeddingSpec, TransitionMatrix, Word};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn model(name: &str) -> Model {
    let path = format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    Model::parse(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn criterion_1() -> Check {
    let samples = periodic_sweep(&[1, 2], 12).map_err(|e| e.to_string())?;
    let values: Vec<f64> = markov_numbers(1_000_000).into_iter().map(markov_number_value).collect();
    let below: Vec<_> = samples.iter().filter(|s| s.value < 3.0).collect();
    let mut worst = 0.0f64;
    for s in &below {
        let d = values.iter().map(|v| (v - s.value).abs()).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
        ensure(d <= 1e-8, format!("{} = {} is {d:e} from every Markov value", s.witness, s.value))?;
    }
    Ok(format!("{} periodic values, {} below 3, worst distance {worst:.1e}", samples.len(), below.len()))
}

fn criterion_2() -> Check {
    let c = freiman_constant();
    ensure((c - 4.52782956).abs() <= 1e-7, format!("constant {c}"))?;
    let back = (c * 491_993_569.0 - 2_221_564_096.0) / 283_748.0;
    let rel = (back * back - 462.0).abs() / 462.0;
    ensure(rel <= 1e-6, format!("inversion gives {} (relative {rel:e})", back * back))?;
    Ok(format!("{c:.10}, inversion relative error {rel:.1e}"))
}

fn criterion_3() -> Check {
    let samples = periodic_sweep(&[1, 2], 12).map_err(|e| e.to_string())?;
    let root5 = 5f64.sqrt();
    let min = &samples[0];
    ensure((min.value - root5).abs() <= 1e-10, format!("minimum {}", min.value))?;
    let ones = BiSequence::periodic(Word::from(vec![1])).expect("non-empty");
    let at_min: Vec<_> = samples.iter().filter(|s| (s.value - root5).abs() <= 1e-10).collect();
    ensure(at_min.len() == 1, format!("{} sequences attain the minimum", at_min.len()))?;
    let root = at_min[0].witness.as_periodic().map(|w| w.primitive_root());
    ensure(
        root == ones.as_periodic(),
        format!("minimum attained by {}", at_min[0].witness),
    )?;
    let inside: Vec<_> = samples
        .iter()
        .filter(|s| s.value > root5 + 1e-10 && s.value < 2.6)
        .collect();
    ensure(inside.is_empty(), format!("{} values in (sqrt5, 2.6)", inside.len()))?;
    let next = samples.iter().find(|s| s.value > root5 + 1e-10).map(|s| s.value);
    Ok(format!("minimum {:.12}, next value {:?}", min.value, next))
}

fn random_map(rng: &mut ChaCha8Rng, c: f64) -> CircleMap {
    if rng.gen_bool(0.2) {
        CircleMap::Rotation(rng.gen())
    } else {
        let b = rng.gen_range(-(c - 1.0)..=(c - 1.0));
        CircleMap::Sine {
            a: rng.gen(),
            b,
            m: rng.gen_range(1..=3),
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, m: &CircleMap, c: f64) -> CircleMap {
    let da = rng.gen_range(-0.01..0.01);
    match m {
        CircleMap::Rotation(a) => CircleMap::Rotation(a + da),
        CircleMap::Sine { a, b, m } => {
            let lim = c - 1.0;
            CircleMap::Sine {
                a: a + da,
                b: (b + rng.gen_range(-0.01..0.01)).clamp(-lim, lim),
                m: *m,
            }
        }
        CircleMap::Custom { .. } => unreachable!("families use rotations and sines"),
    }
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_ratio = 0.0f64;
    for fam in 0..1000 {
        let n = rng.gen_range(1..=20);
        let c = rng.gen_range(1.0..=3.0);
        let r: Vec<CircleMap> = (0..n).map(|_| random_map(&mut rng, c)).collect();
        let rt: Vec<CircleMap> = r.iter().map(|m| perturb(&mut rng, m, c)).collect();
        let (g, gt, rep) = perturbed_composition_decompose(&r, &rt, 1000).map_err(|e| e.to_string())?;
        ensure(rep.lipschitz <= 3.0, format!("family {fam}: C = {}", rep.lipschitz))?;
        let gap = (0..10_000)
            .map(|i| {
                let x = i as f64 / 10_000.0;
                (gt.eval(x) - g.eval(x)).abs()
            })
            .fold(0.0, f64::max);
        ensure(
            gap <= rep.total + 1e-9,
            format!("family {fam}: sampled {gap} above bound {}", rep.total),
        )?;
        if rep.total > 0.0 {
            worst_ratio = worst_ratio.max(gap / rep.total);
        }
        // the unperturbed family reproduces itself exactly
        let (g0, gt0, rep0) = perturbed_composition_decompose(&r, &r, 1000).map_err(|e| e.to_string())?;
        ensure(rep0.total == 0.0, format!("family {fam}: zero perturbation bound {}", rep0.total))?;
        for i in 0..100 {
            let x = i as f64 / 100.0;
            ensure(g0.eval(x) == gt0.eval(x), format!("family {fam}: zero perturbation differs"))?;
        }
    }
    Ok(format!("1000 families, largest sampled/bound ratio {worst_ratio:.3}"))
}

fn criterion_5() -> Check {
    let alphas = [
        ("golden", 0.5 * (5f64.sqrt() - 1.0)),
        ("sqrt2-1", 2f64.sqrt() - 1.0),
        ("pi-3", std::f64::consts::PI - 3.0),
    ];
    let cfg = SteerConfig::default();
    let id = CircleMap::identity();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut runs = 0;
    let mut largest_n = 0;
    for (name, alpha) in alphas {
        for k in 1..=3u64 {
            for _ in 0..100 {
                let (t1, t2) = (Angle::new(rng.gen()), Angle::new(rng.gen()));
                let n_min = rng.gen_range(0..10_000);
                let hit = steer_rotation(alpha, k, 0, t1, t2, 1e-3, n_min, &id, &cfg)
                    .map_err(|e| format!("{name}, k={k}: {e}"))?;
                let d = t1.add((hit.n * k) as f64 * alpha).dist(t2);
                ensure(hit.n >= n_min, format!("{name}, k={k}: N {} below {n_min}", hit.n))?;
                ensure(d < 1e-3, format!("{name}, k={k}: distance {d}"))?;
                runs += 1;
                largest_n = largest_n.max(hit.n);
            }
        }
    }
    Ok(format!("{runs}/900 steered, largest N {largest_n}"))
}

fn worked(m: usize) -> (SkewSystem, IntervalCertificate) {
    let mut md = model("worked.json");
    let params = md.periodic_case.as_mut().expect("worked model has a periodic case");
    params.h = Word::from(vec![1; 2 * m]);
    params.j = m;
    let params = params.clone();
    let sys = md.system().expect("valid model");
    let cert = construct_interval_periodic_case(&sys, &params, &CertConfig::default()).expect("certificate");
    (sys, cert)
}

fn criterion_6() -> Check {
    let (_, c3) = worked(3);
    let (_, c6) = worked(6);
    let f_top = 2.2;
    ensure(c3.horizon >= 10, format!("horizon {}", c3.horizon))?;
    ensure(c3.length() > 1e-3, format!("length {}", c3.length()))?;
    ensure(c3.grid.len() >= 200, format!("{} targets", c3.grid.len()))?;
    ensure(c3.validated_fraction >= 0.99, format!("validated {}", c3.validated_fraction))?;
    // fresh estimates from a certificate that went through JSON
    let copy: IntervalCertificate =
        serde_json::from_str(&serde_json::to_string(&c3).expect("serializable")).map_err(|e| e.to_string())?;
    let re = copy.revalidate().map_err(|e| e.to_string())?;
    ensure(re.validated_fraction >= 0.99, format!("revalidated {}", re.validated_fraction))?;
    let want3 = f_top - 2.0 / 27.0;
    // targets sit on a grid, so the top one is within the grid's curvature slack
    ensure(
        c3.hi <= want3 + 1e-12 && want3 - c3.hi < 1e-6,
        format!("right endpoint {} vs {want3}", c3.hi),
    )?;
    ensure(c6.hi > c3.hi, format!("closer marker gives {} <= {}", c6.hi, c3.hi))?;
    ensure((c6.hi - f_top).abs() <= 1e-2, format!("right endpoint {} far from {f_top}", c6.hi))?;
    ensure(c6.validated_fraction >= 0.99, format!("second certificate validated {}", c6.validated_fraction))?;
    Ok(format!(
        "[{:.6}, {:.6}] length {:.4}, {} targets, validated {:.3} (fresh {:.3}); closer: hi {:.6}",
        c3.lo,
        c3.hi,
        c3.length(),
        c3.grid.len(),
        c3.validated_fraction,
        re.validated_fraction,
        c6.hi
    ))
}

fn criterion_7() -> Check {
    let setup = WitnessSetup::standard(3);
    ensure(setup.horizon == 1000 && setup.max_period == 10, "witness setup changed")?;
    let r = spectra_difference_witness(&setup).map_err(|e| e.to_string())?;
    let diff = (r.m_skew.value - r.m_surface.value).abs();
    ensure(diff <= r.horizon_error, format!("|m_skew - m_surface| = {diff} > {}", r.horizon_error))?;
    ensure(
        r.separation > 10.0 * r.horizon_error,
        format!("separation {} vs error {}", r.separation, r.horizon_error),
    )?;
    Ok(format!(
        "m = {:.10}, beta {:.4}, error {:.1e}, separation {:.2e} over {} periodic values",
        r.m_skew.value, r.beta, r.horizon_error, r.separation, r.periodic_samples
    ))
}

fn criterion_8() -> Check {
    let md = model("fg_product.json");
    let sys = md.system().map_err(|e| e.to_string())?;
    let sub = md.subhorseshoe.as_ref().expect("product model has a subhorseshoe");
    let prof = ell_nonnegative_profile(&sys, 100, 100_000, 8).map_err(|e| e.to_string())?;
    ensure(prof.samples.len() == 100, "sample count")?;
    ensure(prof.min_estimate >= -1e-6, format!("smallest estimate {}", prof.min_estimate))?;
    let cfg = CertConfig::default();
    let low = classify_level(&sys, -0.1, &prof, &sub.matrix, &sub.periodic_case, &cfg).map_err(|e| e.to_string())?;
    ensure(low.class == LevelClass::Empty, format!("s = -0.1 classified {:?}", low.class))?;
    let high = classify_level(&sys, 0.1, &prof, &sub.matrix, &sub.periodic_case, &cfg).map_err(|e| e.to_string())?;
    ensure(high.class == LevelClass::Interval, format!("s = 0.1 classified {:?}", high.class))?;
    let cert = high.certificate.as_ref().ok_or("no certificate for s = 0.1")?;
    ensure(cert.hi < 0.1 && cert.lo > 0.0, format!("certificate [{}, {}]", cert.lo, cert.hi))?;
    Ok(format!(
        "min estimate {:.3e}; s=-0.1 empty; s=0.1 interval [{:.6}, {:.6}] validated {:.3}",
        prof.min_estimate, cert.lo, cert.hi, cert.validated_fraction
    ))
}

fn criterion_9() -> Check {
    let emb = EmbeddingSpec::with_base(2, 3);
    let full = SubSft::full(TransitionMatrix::full(2), 2);
    let hd = hd_sft(&full, &emb, Axes::Both);
    let exact = 2.0 * 2f64.ln() / 3f64.ln();
    ensure(hd.value == exact, format!("spectral {} vs {exact}", hd.value))?;
    let bx = box_dimension(cylinder_counts(&full, Axes::Both), 3.0, &[2, 4, 6, 8, 10]).map_err(|e| e.to_string())?;
    ensure((bx.value - hd.value).abs() <= 0.02, format!("box {} vs spectral {}", bx.value, hd.value))?;
    let gm = hd_sft(&SubSft::full(TransitionMatrix::golden_mean(), 2), &emb, Axes::Unstable);
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    ensure(
        (gm.value - phi.ln() / 3f64.ln()).abs() <= 1e-9,
        format!("golden mean {}", gm.value),
    )?;
    let sys = model("worked.json").system().map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..20).map(|i| -0.3 + 2.6 * i as f64 / 19.0).collect();
    let prof = profile_L(&sys, &grid, 6).map_err(|e| e.to_string())?;
    for w in prof.points.windows(2) {
        ensure(
            w[0].lower <= w[1].lower && w[0].upper <= w[1].upper,
            format!("not monotone between t = {} and {}", w[0].t, w[1].t),
        )?;
    }
    ensure(prof.points.iter().all(|p| p.lower <= p.upper), "lower above upper")?;
    let last = prof.points.last().expect("20 points");
    Ok(format!(
        "spectral {:.12}, box {:.4}, golden {:.12}, profile ends at [{:.4}, {:.4}]",
        hd.value, bx.value, gm.value, last.lower, last.upper
    ))
}

fn smooth_observable() -> Observable {
    // f_F(x) = x_s·x_u + sqrt(1 + x_u²), maximizer at angle atan2(x_u, 1)/2π
    let tau = std::f64::consts::TAU;
    Observable::new(ObservableSpec::custom("smooth", 3.0, tau * 2f64.sqrt(), move |xs, xu, t| {
        xs * xu + (tau * t).cos() + xu * (tau * t).sin()
    }))
    .expect("valid observable")
}

fn criterion_10() -> Check {
    let tau = std::f64::consts::TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // analytic maximizer of f0(x) + cos 2πt
    let plain = Observable::new(ObservableSpec::custom("f0+cos", 3.0, tau, move |xs, xu, t| {
        xs * xs + xu + (tau * t).cos()
    }))
    .expect("valid observable");
    let mut worst_t = 0.0f64;
    for _ in 0..200 {
        let (xs, xu): (f64, f64) = (rng.gen(), rng.gen());
        let m = fiber_max(&plain, xs, xu, 64, 1e-12).map_err(|e| e.to_string())?;
        let dt = m.t.dist(Angle::new(0.0));
        worst_t = worst_t.max(dt);
        ensure(dt <= 1e-8, format!("argmax {} at ({xs}, {xu})", m.t.value()))?;
        ensure((m.value - (xs * xs + xu + 1.0)).abs() <= 1e-8, format!("value {}", m.value))?;
        ensure(
            (m.second_deriv + tau * tau).abs() <= 1e-6 * tau * tau,
            format!("second derivative {}", m.second_deriv),
        )?;
    }
    // Lipschitz property on embedded horseshoe points
    let sys = model("worked.json").system().map_err(|e| e.to_string())?;
    let smooth = smooth_observable();
    let lf_worked = sys.observable().lipschitz_x();
    let mut worst_ratio = 0.0f64;
    let random_point = |rng: &mut ChaCha8Rng| {
        let w = |rng: &mut ChaCha8Rng, n| Word::from((0..n).map(|_| rng.gen_range(0..2u32)).collect::<Vec<_>>());
        let (l, c, r) = (w(rng, 3), w(rng, 24), w(rng, 3));
        sys.embed_at(&BiSequence::eventually_periodic(l, c, r).expect("full shift"), 12)
    };
    for _ in 0..1000 {
        let (a, b) = (random_point(&mut rng), random_point(&mut rng));
        let d = a.dist(&b);
        for (obs, lf) in [(sys.observable(), lf_worked), (&smooth, 3.0)] {
            let gap = (obs.fiber_value(a.xs, a.xu, 256) - obs.fiber_value(b.xs, b.xu, 256)).abs();
            ensure(gap <= lf * d + 1e-12, format!("|f_F difference| {gap} above {lf}·{d}"))?;
            if d > 0.0 {
                worst_ratio = worst_ratio.max(gap / (lf * d));
            }
        }
    }
    // central differences of f_F against the closed-form derivative
    let ff = |xs: f64, xu: f64| fiber_max(&smooth, xs, xu, 256, 1e-13).map(|m| m.value);
    let h = 1e-4;
    let mut worst_d = 0.0f64;
    for _ in 0..100 {
        let (xs, xu): (f64, f64) = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let e = |r: spectra_core::Result<f64>| r.map_err(|e| e.to_string());
        let d_s = (e(ff(xs + h, xu))? - e(ff(xs - h, xu))?) / (2.0 * h);
        let d_u = (e(ff(xs, xu + h))? - e(ff(xs, xu - h))?) / (2.0 * h);
        let (want_s, want_u) = (xu, xs + xu / (1.0 + xu * xu).sqrt());
        let err = (d_s - want_s).abs().max((d_u - want_u).abs());
        worst_d = worst_d.max(err);
        ensure(err <= 1e-6, format!("derivative error {err:e} at ({xs}, {xu})"))?;
    }
    Ok(format!(
        "argmax error {worst_t:.1e}, Lipschitz ratio {worst_ratio:.3}, derivative error {worst_d:.1e}"
    ))
}

fn main() {
    let criteria: [(fn() -> Check, Duration); 10] = [
        (criterion_1, Duration::from_secs(10)),
        (criterion_2, Duration::MAX),
        (criterion_3, Duration::MAX),
        (criterion_4, Duration::from_secs(30)),
        (criterion_5, Duration::from_secs(30)),
        (criterion_6, Duration::from_secs(300)),
        (criterion_7, Duration::MAX),
        (criterion_8, Duration::MAX),
        (criterion_9, Duration::MAX),
        (criterion_10, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > *budget => Err(format!("{msg}; took {took:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {:>2}: PASS ({took:.2?}) {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2}: FAIL ({took:.2?}) {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
