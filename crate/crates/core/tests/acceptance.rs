//! Acceptance studies. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (uncaptured) and then asserts. The tests share one lock so their
//! runtimes are measured without competing for the CPU.

use std::io::Write;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampdisc::certify::{brute_force_certificate, extract_factor, CertStatus};
use sampdisc::experiment::{run_experiment, ExperimentConfig, ExperimentKind};
use sampdisc::norms::nikolskii_constant;
use sampdisc::points::{equispaced, iid_points, tensor_points};
use sampdisc::recovery::verify_recovery;
use sampdisc::{
    certify, make_lacunary_space, make_trig_space, tensor_product, CertifyOptions, Domain, PointSet, Spectrum,
    Subspace, Target, Tolerances, TrigPolynomial, WeightedPointSet, C64,
};

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, pass: bool, elapsed: Duration, limit: Duration, detail: &str) -> bool {
    let in_time = elapsed <= limit;
    let ok = pass && in_time;
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n}: {} ({detail}; {:.2} s of {} s allowed)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn trig_degree(n: i64) -> Subspace {
    make_trig_space(1, Spectrum::cube(1, n).unwrap()).unwrap()
}

fn trig(freqs: &[i64]) -> Subspace {
    make_trig_space(1, Spectrum::one_dimensional(freqs).unwrap()).unwrap()
}

fn iid(m: usize, seed: u64) -> PointSet {
    PointSet::explicit(1, iid_points(&Domain::Torus { dimension: 1 }, m, seed, 0)).unwrap()
}

#[test]
fn criterion_01_equispaced_exactness_at_p2() {
    let _g = serial();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [1, 2, 4, 8, 16] {
        let space = trig_degree(n);
        let c = certify(&space, &equispaced(1, space.dim()), None, 2.0, &CertifyOptions::default()).unwrap();
        worst = worst.max((c.c1_pow - 1.0).abs()).max((c.c2_pow - 1.0).abs());
    }
    let ok = verdict(1, worst <= 1e-10, start.elapsed(), Duration::from_secs(1), &format!("max |c - 1| = {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_02_even_power_exactness() {
    let _g = serial();
    let start = Instant::now();
    let space = trig(&[-1, 1]);
    let pts = equispaced(1, 5);
    let c = certify(&space, &pts, None, 4.0, &CertifyOptions::default()).unwrap();
    let exact = (c.c1_pow - 1.0).abs().max((c.c2_pow - 1.0).abs());
    let bf = brute_force_certificate(&space, &pts, 4.0, 200).unwrap();
    let agree = (bf.c1_pow - c.c1_pow).abs() <= bf.tolerance && (bf.c2_pow - c.c2_pow).abs() <= bf.tolerance;
    let ok = verdict(
        2,
        exact <= 1e-8 && agree,
        start.elapsed(),
        Duration::from_secs(10),
        &format!(
            "certificate ({:.12}, {:.12}); oracle ({:.6}, {:.6}) ± {:.1e}",
            c.c1_pow, c.c2_pow, bf.c1_pow, bf.c2_pow, bf.tolerance
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_nikolskii_anchors() {
    let _g = serial();
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    for n_dim in [3usize, 5, 9, 17] {
        let est = nikolskii_constant(&trig_degree((n_dim as i64 - 1) / 2), 2.0, &tol).unwrap();
        if (est.m - (n_dim as f64).sqrt()).abs() > 1e-10 {
            failures.push(format!("trig N = {n_dim}: M = {}", est.m));
        }
    }
    for n in 2..=6 {
        let space = make_lacunary_space(n, 2.0).unwrap();
        let q2 = nikolskii_constant(&space, 2.0, &tol).unwrap();
        if (q2.m - (n as f64).sqrt()).abs() > 1e-8 {
            failures.push(format!("lacunary n = {n}, q = 2: M = {}", q2.m));
        }
        let q4 = nikolskii_constant(&space, 4.0, &tol).unwrap();
        if q4.b > (n as f64).powf(0.25) + 1e-6 || q4.certified_lower_bound > q4.m + 1e-9 {
            failures.push(format!("lacunary n = {n}, q = 4: B = {} (bound {})", q4.b, (n as f64).powf(0.25)));
        }
    }
    let detail = if failures.is_empty() { "all anchors within tolerance".to_string() } else { failures.join("; ") };
    let ok = verdict(3, failures.is_empty(), start.elapsed(), Duration::from_secs(30), &detail);
    assert!(ok);
}

#[test]
fn criterion_04_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    let mut worst_tol: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for i in 0..20 {
        let p = [2.0, 3.0, 4.0][i % 3];
        let n = rng.random_range(2..=3usize);
        let (space, pts) = if i % 5 == 4 {
            // random basis on a six-point set
            let size = 6;
            let values: Vec<Vec<C64>> = (0..n)
                .map(|_| (0..size).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect();
            let m = rng.random_range(n..=size);
            let idx = rand::seq::index::sample(&mut rng, size, m).into_vec();
            let pts = PointSet::explicit(1, idx.into_iter().map(|j| vec![j as f64]).collect()).unwrap();
            (Subspace::finite(values).unwrap(), pts)
        } else {
            let mut freqs: Vec<i64> = (-3..=3).collect();
            for j in (1..freqs.len()).rev() {
                freqs.swap(j, rng.random_range(0..=j));
            }
            freqs.truncate(n);
            let m = rng.random_range(n..=n + 5);
            (trig(&freqs), iid(m, rng.random()))
        };
        let c = certify(&space, &pts, None, p, &CertifyOptions::with_seed(i as u64)).unwrap();
        let bf = brute_force_certificate(&space, &pts, p, 200).unwrap();
        let gap = (c.c1_pow - bf.c1_pow).abs().max((c.c2_pow - bf.c2_pow).abs());
        worst_tol = worst_tol.max(bf.tolerance);
        worst_gap = worst_gap.max(gap);
        if gap > bf.tolerance || bf.tolerance > 1e-3 {
            failures.push(format!(
                "instance {i} (N = {n}, p = {p}): ({:.6}, {:.6}) vs oracle ({:.6}, {:.6}) ± {:.1e}",
                c.c1_pow, c.c2_pow, bf.c1_pow, bf.c2_pow, bf.tolerance
            ));
        }
    }
    let detail = format!(
        "20 instances, worst gap {worst_gap:.1e}, worst oracle tolerance {worst_tol:.1e}{}",
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    let ok = verdict(4, failures.is_empty(), start.elapsed(), Duration::from_secs(300), &detail);
    assert!(ok);
}

fn scaling_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::StudyScaling);
    cfg.sizes = Some(vec![5, 9, 17, 33]);
    cfg.p = 2.0;
    cfg.eps = Some(0.5);
    cfg.trials = Some(50);
    cfg.threshold = Some(0.9);
    cfg.seed = Some(7);
    cfg
}

fn lacunary_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::StudyLacunary);
    cfg.sizes = Some(vec![2, 3, 4, 5]);
    cfg.p = 4.0;
    cfg.eps = Some(0.5);
    cfg.trials = Some(50);
    cfg.threshold = Some(0.9);
    cfg.seed = Some(7);
    cfg
}

struct StudyRun {
    csv: String,
    m_star: Vec<(usize, usize)>,
    exponent: Option<f64>,
    exhausted: bool,
    elapsed: Duration,
}

fn run_study(cfg: &ExperimentConfig) -> StudyRun {
    let start = Instant::now();
    let rep = run_experiment(cfg).unwrap();
    StudyRun {
        csv: rep.series.to_csv().unwrap(),
        m_star: rep.summary.m_star.clone().unwrap_or_default(),
        exponent: rep.summary.fit.as_ref().map(|f| f.exponent),
        exhausted: rep.summary.exhausted,
        elapsed: start.elapsed(),
    }
}

static SCALING: OnceLock<StudyRun> = OnceLock::new();
static LACUNARY: OnceLock<StudyRun> = OnceLock::new();

#[test]
fn criterion_05_random_sampling_scaling() {
    let _g = serial();
    let run = SCALING.get_or_init(|| run_study(&scaling_config()));
    let bracket = run.m_star.len() == 4
        && run.m_star.iter().all(|&(n, m)| {
            let n = n as f64;
            n <= m as f64 && m as f64 <= 20.0 * n * (2.0 * n).log2()
        });
    let exp_ok = run.exponent.is_some_and(|e| (0.9..=1.4).contains(&e));
    let ok = verdict(
        5,
        bracket && exp_ok && !run.exhausted,
        run.elapsed,
        Duration::from_secs(600),
        &format!("m_star {:?}, fitted exponent {:.3}", run.m_star, run.exponent.unwrap_or(f64::NAN)),
    );
    assert!(ok);
}

#[test]
fn criterion_06_tensor_multiplicativity() {
    let _g = serial();
    let start = Instant::now();
    let opts = CertifyOptions::default();
    let cases = [
        (trig_degree(1), iid(7, 1), trig_degree(2), iid(11, 2)),
        (trig(&[0, 1, 3]), iid(9, 3), trig(&[-2, 0]), iid(4, 4)),
        (trig_degree(1), equispaced(1, 3), trig_degree(2), equispaced(1, 5)),
    ];
    let mut failures = Vec::new();
    let mut exact_product = (0.0, 0.0);
    for (k, (s1, p1, s2, p2)) in cases.iter().enumerate() {
        let c1 = certify(s1, p1, None, 2.0, &opts).unwrap();
        let c2 = certify(s2, p2, None, 2.0, &opts).unwrap();
        let t = tensor_product(&[s1.clone(), s2.clone()]).unwrap();
        let tp = tensor_points(&[p1.clone(), p2.clone()]).unwrap();
        let ct = certify(&t, &tp, None, 2.0, &opts).unwrap();
        let (lo, hi) = (c1.c1_pow * c2.c1_pow, c1.c2_pow * c2.c2_pow);
        if ct.c1_pow < lo - 1e-8 || ct.c2_pow > hi + 1e-8 {
            failures.push(format!("case {k}: ({}, {}) outside [{lo}, {hi}]", ct.c1_pow, ct.c2_pow));
        }
        if k == 2 {
            exact_product = (ct.c1_pow, ct.c2_pow);
        }
    }
    let exact = (exact_product.0 - 1.0).abs() <= 1e-8 && (exact_product.1 - 1.0).abs() <= 1e-8;
    let detail = format!(
        "3 products inside their factor brackets: {}; exact factors give ({:.12}, {:.12})",
        failures.is_empty(),
        exact_product.0,
        exact_product.1
    );
    let ok = verdict(6, failures.is_empty() && exact, start.elapsed(), Duration::from_secs(60), &detail);
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_07_factor_extraction() {
    let _g = serial();
    let start = Instant::now();
    let opts = CertifyOptions::default();
    let s1 = trig_degree(1);
    let s2 = trig(&[-2, 0, 1]);
    let t = tensor_product(&[s1.clone(), s2.clone()]).unwrap();

    // the transferred certificate is sharp when the other factor set is exact
    let tp = tensor_points(&[iid(8, 5), equispaced(1, 4)]).unwrap();
    let ct = certify(&t, &tp, None, 2.0, &opts).unwrap();
    let (pts, transferred) = extract_factor(&t, &tp, 0, &ct).unwrap();
    let direct = certify(&s1, &pts, None, 2.0, &opts).unwrap();
    let gap = (transferred.c1_pow - direct.c1_pow).abs().max((transferred.c2_pow - direct.c2_pow).abs());

    // in general it is a valid, possibly looser, pair of constants
    let tp2 = tensor_points(&[iid(8, 6), iid(7, 7)]).unwrap();
    let ct2 = certify(&t, &tp2, None, 2.0, &opts).unwrap();
    let mut valid = ct2.status == CertStatus::Certified;
    for index in 0..2 {
        let (pts, tr) = extract_factor(&t, &tp2, index, &ct2).unwrap();
        let d = certify([&s1, &s2][index], &pts, None, 2.0, &opts).unwrap();
        valid &= tr.c1_pow <= d.c1_pow + 1e-10 && tr.c2_pow >= d.c2_pow - 1e-10;
    }
    let ok = verdict(
        7,
        gap <= 1e-8 && valid,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("transferred vs direct gap {gap:.1e}; transferred bounds contain direct ones: {valid}"),
    );
    assert!(ok);
}

fn fixture() -> Vec<(Subspace, PointSet, f64, Target, String)> {
    let targets: Vec<(Target, &str)> = vec![
        (Target::function(1, |x| C64::new(x[0].sin().exp(), 0.0)), "exp(sin x)"),
        (Target::function(1, |x| C64::new(x[0].sin().abs().powi(3), 0.0)), "|sin x|^3"),
        (Target::function(1, |x| C64::new(1.0 / (1.25 - x[0].cos()), 0.0)), "1/(5/4 - cos x)"),
        (
            Target::Trig(TrigPolynomial::from_terms(
                1,
                [(vec![4], C64::new(0.3, 0.1)), (vec![-5], C64::new(0.0, -0.7)), (vec![1], C64::new(1.0, 0.0))],
            )),
            "trig(1, 4, -5)",
        ),
        (Target::function(1, |x| C64::from_polar(1.0, (3.0 * x[0]).sin())), "exp(i sin 3x)"),
    ];
    let mut out = Vec::new();
    for (k, (target, name)) in targets.into_iter().enumerate() {
        for (j, n) in [1i64, 2].into_iter().enumerate() {
            let space = trig_degree(n);
            let dim = space.dim();
            // p = 2: random points, certified by the frame eigenvalues
            let seed = (10 * k + j) as u64;
            out.push((space.clone(), iid(3 * dim, seed), 2.0, target.clone(), format!("{name}, N = {dim}, p = 2, iid")));
            // p = 4: equispaced grids fine enough to integrate |f|^4 exactly
            let m = 2 * (2 * n as usize) + 1 + j;
            out.push((space, equispaced(1, m), 4.0, target.clone(), format!("{name}, N = {dim}, p = 4, m = {m}")));
        }
    }
    out
}

#[test]
fn criterion_08_recovery_bound() {
    let _g = serial();
    let start = Instant::now();
    let opts = CertifyOptions::default();
    let cases = fixture();
    let mut failures = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for (space, pts, p, target, name) in &cases {
        match verify_recovery(target, space, &WeightedPointSet::uniform(pts.clone()), *p, &opts) {
            Ok(rep) => {
                worst_ratio = worst_ratio.max(rep.lhs / rep.rhs);
                if !rep.holds || rep.advisory {
                    failures.push(format!("{name}: lhs {} vs rhs {}", rep.lhs, rep.rhs));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let cos2 = Target::Trig(TrigPolynomial::from_terms(
        1,
        [(vec![2], C64::new(0.5, 0.0)), (vec![-2], C64::new(0.5, 0.0))],
    ));
    let anchor = verify_recovery(&cos2, &trig_degree(1), &WeightedPointSet::uniform(equispaced(1, 9)), 2.0, &opts).unwrap();
    let anchor_ok = (anchor.lhs - 0.5f64.sqrt()).abs() <= 1e-6 && (anchor.rhs - 3.0).abs() <= 1e-3 && anchor.holds;
    let detail = format!(
        "{} instances, worst lhs/rhs {worst_ratio:.3}; cos 2x anchor lhs {:.9}, rhs {:.6}{}",
        cases.len(),
        anchor.lhs,
        anchor.rhs,
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    let ok = verdict(
        8,
        cases.len() == 20 && failures.is_empty() && anchor_ok,
        start.elapsed(),
        Duration::from_secs(120),
        &detail,
    );
    assert!(ok);
}

#[test]
fn criterion_09_lacunary_trend() {
    let _g = serial();
    let run = LACUNARY.get_or_init(|| run_study(&lacunary_config()));
    let ms: Vec<usize> = run.m_star.iter().map(|&(_, m)| m).collect();
    let nondecreasing = ms.len() == 4 && ms.windows(2).all(|w| w[1] >= w[0]);
    let ratio = if ms.len() == 4 { ms[3] as f64 / ms[0] as f64 } else { f64::NAN };
    let ok = verdict(
        9,
        nondecreasing && ratio >= 2.5 && !run.exhausted,
        run.elapsed,
        Duration::from_secs(900),
        &format!("m_star {:?}, m_star(5)/m_star(2) = {ratio:.3}", run.m_star),
    );
    assert!(ok);
}

#[test]
fn criterion_10_determinism() {
    let _g = serial();
    let first_scaling = SCALING.get_or_init(|| run_study(&scaling_config()));
    let first_lacunary = LACUNARY.get_or_init(|| run_study(&lacunary_config()));
    let rerun_start = Instant::now();
    let again_scaling = run_study(&scaling_config());
    let again_lacunary = run_study(&lacunary_config());
    let same = first_scaling.csv == again_scaling.csv && first_lacunary.csv == again_lacunary.csv;
    let ok = verdict(
        10,
        same,
        rerun_start.elapsed(),
        Duration::from_secs(600 + 900),
        &format!(
            "reran both studies; CSV payloads identical: {same} ({} and {} bytes)",
            again_scaling.csv.len(),
            again_lacunary.csv.len()
        ),
    );
    assert!(ok);
}
