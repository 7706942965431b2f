mod common;

use std::time::{Duration, Instant};

use ellbvp::boundary::{ab_obstruction, find_classical_condition, frames_at, random_condition, sl_check, BoundaryGrid, SlVerdict};
use ellbvp::dyadic::DyadicRational;
use ellbvp::homotopy::{flatten_path, projection_defect, reduce_order, rotate_path, CertifyGrid};
use ellbvp::index::{
    classical_generator, cobordism_check, finite_rank_generator, loop_condition_problem, random_excision_pair,
    random_extendable_pair, verify_excision, verify_index_formula, DEFAULT_RANK_TOL,
};
use ellbvp::linalg::{self, c, CMat, C64};
use ellbvp::spectral::{
    d_value, finite_rank_modify, quantize_projection, relative_index_report, DiscreteProjection, FourierSpace,
    ProjectionSymbol,
};
use ellbvp::symbol::{
    make_model_operator, BoundaryCondition, BvpProblem, CollarOperator, EndCondition, ManifoldKind, MatrixSymbol,
    ModeChange, ModelKind, ModelManifold, SymbolPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{cylinder, resolutions, spectrum_distance, stable_index, sym, RandomTangential};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, seconds: u64) -> bool {
    elapsed <= Duration::from_secs(seconds)
}

fn model_index() -> Outcome {
    let start = Instant::now();
    let p = make_model_operator(ModelKind::Dpm, (1, 1), &cylinder()).unwrap();
    let index = stable_index(&p, &[16, 32]);
    let elapsed = start.elapsed();
    outcome(index == Some(0) && within(elapsed, 10), format!("index {index:?} at 16 and 32 modes in {elapsed:.2?}"))
}

fn spectral_boundary_symbol() -> Outcome {
    let grid = BoundaryGrid::uniform(32);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut instances = vec![
        ellbvp::symbol::ProblemFile::read(std::path::Path::new(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../problems/cauchy-riemann-aps.json"
        )))
        .unwrap()
        .build()
        .unwrap(),
    ];
    for n in 1..=3 {
        for plus in 0..=n {
            instances.push(RandomTangential::new(&mut rng, n, plus).spectral_problem());
        }
    }
    let mut worst: f64 = 0.0;
    let mut samples = usize::MAX;
    for p in &instances {
        let report = sl_check(p, &grid, 1e-8, 1e-8).unwrap();
        let near: Vec<_> = report.samples.iter().filter(|s| s.end == 0).collect();
        samples = samples.min(near.len());
        if !report.is_elliptic() || near.iter().any(|s| s.identity_residual.is_none()) {
            return outcome(false, format!("{}: {:?}", p.name, report.verdict));
        }
        worst = worst.max(report.max_identity_residual().unwrap());
    }
    outcome(
        worst < 1e-10 && samples == 64,
        format!("{} instances, {samples} samples each, max residual {worst:.2e}", instances.len()),
    )
}

fn obstruction_dichotomy() -> Outcome {
    let start = Instant::now();
    let grid = BoundaryGrid::uniform(16);
    let laplace = CollarOperator::new(vec![MatrixSymbol::identity(1), MatrixSymbol::zero(1, 1, 1), sym(&[&["xi^2"]], 2)], None).unwrap();
    let disk = ModelManifold::new(ManifoldKind::Disk);
    let lap_problem =
        BvpProblem::new("laplace", disk.clone(), laplace.clone(), vec![EndCondition::classical(BoundaryCondition::trace(2, 1))]).unwrap();
    let lap_obstruction = ab_obstruction(&laplace, 32, 1e-8).unwrap().obstruction;
    let found = find_classical_condition(&lap_problem, &grid, 0, 50, 1e-8, 1e-8).unwrap();
    let found_ok = found.is_some_and(|b| {
        let p = BvpProblem::new("laplace", disk.clone(), laplace.clone(), vec![EndCondition::classical(b)]).unwrap();
        sl_check(&p, &grid, 1e-8, 1e-8).unwrap().is_elliptic()
    });

    let cr = CollarOperator::new(vec![MatrixSymbol::identity(1), sym(&[&["-i*xi"]], 1)], None).unwrap();
    let cr_obstruction = ab_obstruction(&cr, 32, 1e-8).unwrap().obstruction;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mismatches = (0..100)
        .filter(|_| {
            let target = rng.gen_range(1..=2);
            let b = random_condition(&mut rng, 1, 1, target);
            let p = BvpProblem::new("cr", disk.clone(), cr.clone(), vec![EndCondition::classical(b)]).unwrap();
            sl_check(&p, &grid, 1e-8, 1e-8).unwrap().verdict == SlVerdict::RankMismatch
        })
        .count();
    let elapsed = start.elapsed();
    outcome(
        lap_obstruction == 0 && found_ok && cr_obstruction.abs() == 1 && mismatches == 100 && within(elapsed, 5),
        format!(
            "laplace obstruction {lap_obstruction} (condition found: {found_ok}), cauchy-riemann obstruction {cr_obstruction} \
             with {mismatches}/100 rank mismatches, {elapsed:.2?}"
        ),
    )
}

fn tangential_at(p: &BvpProblem, x: f64, t: f64, xi: f64) -> CMat {
    p.operator.coefficients()[1].eval_principal(&SymbolPoint::new(x, t, xi, c(0.0, 0.0))) * linalg::I
}

fn flatten_homotopy() -> Outcome {
    let grid = CertifyGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs = [0.0, 1.3, 2.9, 4.4];
    let mut eig_err: f64 = 0.0;
    let mut angle: f64 = 0.0;
    let mut valid = 0;
    for k in 0..20 {
        let n = 1 + k % 3;
        let plus = rng.gen_range(0..=n);
        let a = RandomTangential::new(&mut rng, n, plus);
        let p = a.spectral_problem();
        let (path, cert) = flatten_path(&p, 101, &grid).unwrap();
        valid += cert.valid as usize;
        for &x in &xs {
            for xi in [1.0, -1.0] {
                let mu = a.eigenvalues(xi);
                let (plus0, minus0) = frames_at(&path.start().operator, x, xi, 1e-8).unwrap();
                for (step, &s) in path.steps.iter().zip(&path.parameters) {
                    for t in [0.0, 0.5] {
                        let expect: Vec<C64> =
                            mu.iter().map(|&m| m * (1.0 - s) + c(s * m.re.signum(), 0.0)).collect();
                        eig_err = eig_err.max(spectrum_distance(&linalg::eigenvalues(&tangential_at(step, x, t, xi)), &expect));
                    }
                    let (plus_s, minus_s) = frames_at(&step.operator, x, xi, 1e-8).unwrap();
                    angle = angle.max(linalg::max_principal_angle_sin(&plus0.columns, &plus_s.columns));
                    angle = angle.max(linalg::max_principal_angle_sin(&minus0.columns, &minus_s.columns));
                }
            }
        }
    }
    outcome(
        eig_err < 1e-10 && angle < 1e-8 && valid == 20,
        format!("20 symbols, 101 steps: eigenvalue error {eig_err:.2e}, max angle {angle:.2e}, {valid}/20 certificates valid"),
    )
}

fn rotation_homotopy() -> Outcome {
    let grid = CertifyGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut defect: f64 = 0.0;
    let mut exact = true;
    let mut valid = 0;
    let mut count = 0;
    for n in 1..=3 {
        for plus in 1..=n {
            let a = RandomTangential::new(&mut rng, n, plus);
            let probe = a.spectral_problem();
            let Some(near) = find_classical_condition(&probe, &grid.boundary, 11 + n as u64, 50, 1e-8, 1e-2).unwrap() else {
                return outcome(false, format!("no classical condition for rank {n}, {plus} plus"));
            };
            let p = a.classical_problem(near);
            let flat = flatten_path(&p, 2, &grid).unwrap().0.end().clone();
            let (path, cert) = rotate_path(&flat, 101, &grid).unwrap();
            count += 1;
            valid += cert.valid as usize;
            for step in &path.steps {
                defect = defect.max(projection_defect(step, &grid).unwrap());
                if let Some(proj) = &step.ends[0].projection {
                    for &x in &grid.boundary.x {
                        for xi in [1.0, -1.0] {
                            let s = proj.symbol.eval(x, xi);
                            defect = defect.max(linalg::norm2(&(&s * &s - &s)));
                        }
                    }
                }
            }
            let end = path.end();
            let g = plus;
            let mut target = linalg::zeros(g, n + g);
            for i in 0..g {
                target[(i, n + i)] = c(1.0, 0.0);
            }
            for &x in &grid.boundary.x {
                for xi in [1.0, -1.0] {
                    exact &= end.ends[0].condition.stacked_at(x, xi) == target;
                }
            }
        }
    }
    outcome(
        defect < 1e-10 && exact && valid == count,
        format!("{count} instances, 101 steps: idempotency defect {defect:.2e}, endpoint condition exact: {exact}, {valid}/{count} certificates valid"),
    )
}

fn second_order(middle: &str) -> BvpProblem {
    let op = CollarOperator::new(vec![sym(&[&["1"]], 0), sym(&[&[middle]], 1), sym(&[&["absxi*absxi"]], 2)], None).unwrap();
    let dirichlet = || EndCondition::classical(BoundaryCondition::new(vec![sym(&[&["1"]], 0), sym(&[&["0"]], -1)]).unwrap());
    BvpProblem::new("second-order", cylinder(), op, vec![dirichlet(), dirichlet()]).unwrap()
}

fn order_reduction() -> Outcome {
    let grid = CertifyGrid::default();
    let p = second_order("0.5*xi");
    let r = reduce_order(&p, 101, &grid).unwrap();
    let modes = [12, 16];
    let (i0, i1, i2) = (stable_index(&p, &modes), stable_index(r.path.start(), &modes), stable_index(&r.endpoint, &modes));
    let factored = reduce_order(&second_order("0"), 101, &grid).unwrap();
    let pass = r.certificate.valid
        && r.certificate.steps.len() == 101
        && r.trace.endpoint_residual < 1e-10
        && i0.is_some()
        && i0 == i1
        && i1 == i2
        && !r.trace.trivial
        && factored.trace.trivial;
    outcome(
        pass,
        format!(
            "certificate valid: {}, endpoint residual {:.2e}, index {i0:?} / {i1:?} / {i2:?}, factored input trivial: {}",
            r.certificate.valid, r.trace.endpoint_residual, factored.trace.trivial
        ),
    )
}

/// Random orthogonal projection of the given rank on `C^n`, quantized.
fn random_base<R: Rng>(rng: &mut R, space: FourierSpace, rank: usize) -> DiscreteProjection {
    let n = space.rank;
    let raw = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let q = linalg::unitary_polar(&(raw + linalg::identity(n)));
    let frame = q.columns(0, rank).into_owned();
    let p = &frame * frame.adjoint();
    let symbol = ProjectionSymbol::new(MatrixSymbol::constant(&p)).unwrap();
    quantize_projection(&symbol, space).unwrap()
}

/// Changes on distinct modes: additions from the kernel of the base symbol,
/// removals from its range. Returns them with their net rank change.
fn random_changes<R: Rng>(rng: &mut R, base: &DiscreteProjection, modes: &[i64]) -> (Vec<ModeChange>, i64) {
    let sigma = base.symbol().eval(0.0, 1.0);
    let n = sigma.nrows();
    let kernel = linalg::identity(n) - &sigma;
    let mut net = 0;
    let mut changes = Vec::new();
    for &mode in modes {
        let add = rng.gen_bool(0.5);
        let proj = if add { &kernel } else { &sigma };
        if linalg::norm2(proj) < 0.5 {
            continue;
        }
        let w = CMat::from_fn(n, 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let v = proj * w;
        changes.push(ModeChange { add, mode, vector: v.iter().copied().collect() });
        net += if add { 1 } else { -1 };
    }
    (changes, net)
}

fn d_functional() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = FourierSpace::new(6, 2);
    let mut failures = Vec::new();
    let mut pairs = 0;
    for k in 0..50 {
        let base = random_base(&mut rng, space, k % 3);
        let mut modes: Vec<i64> = (-6..=6).collect();
        let mut pick = |rng: &mut ChaCha8Rng| {
            let count = rng.gen_range(0..=4);
            (0..count).map(|_| modes.remove(rng.gen_range(0..modes.len()))).collect::<Vec<_>>()
        };
        let (m1, m2) = (pick(&mut rng), pick(&mut rng));
        let (c1, n1) = random_changes(&mut rng, &base, &m1);
        let (c2, n2) = random_changes(&mut rng, &base, &m2);
        let p1 = finite_rank_modify(&base, &c1).unwrap();
        let p2 = finite_rank_modify(&base, &c2).unwrap();
        let (d1, d2) = (d_value(&p1).unwrap(), d_value(&p2).unwrap());
        let rel = relative_index_report(&p1, &p2).unwrap();
        let back = relative_index_report(&p2, &p1).unwrap();
        pairs += 2;
        let checks = [
            d1 == DyadicRational::integer(n1) && d2 == DyadicRational::integer(n2),
            d1 - d2 == DyadicRational::integer(rel.index),
            d2 - d1 == DyadicRational::integer(back.index),
            d_value(&p1.complement()).unwrap() + d1 == DyadicRational::zero(),
            d_value(&p2.complement()).unwrap() + d2 == DyadicRational::zero(),
            rel.by_trace == rel.index && back.by_trace == back.index,
            rel.dim_ker as i64 - rel.dim_coker as i64 == rel.index,
        ];
        if checks.iter().any(|ok| !ok) {
            failures.push(k);
        }
    }
    outcome(failures.is_empty(), format!("50 instances, {pairs} ordered pairs, failing instances {failures:?}"))
}

fn index_formula() -> Outcome {
    let start = Instant::now();
    let res = resolutions(&[12, 16]);
    let mut problems: Vec<BvpProblem> = (-3..=3).map(|k| finite_rank_generator(k).unwrap()).collect();
    for (angle, twist) in [(0.0, 0), (0.4, 1), (0.7, -2), (1.2, 3)] {
        problems.push(classical_generator(angle, twist).unwrap());
    }
    let mut failing = Vec::new();
    for p in &problems {
        match verify_index_formula(p, &res, DEFAULT_RANK_TOL) {
            Ok(r) if r.holds => {}
            Ok(r) => failing.push(format!("{}: {} vs {}", p.name, r.index, r.rhs)),
            Err(e) => failing.push(format!("{}: {e}", p.name)),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failing.is_empty() && within(elapsed, 60),
        format!("{} generators in {elapsed:.2?}, failing {failing:?}", problems.len()),
    )
}

fn cobordism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut zero = 0;
    for k in 0..20 {
        let (ap, am) = random_extendable_pair(&mut rng, 1 + k % 3, 1);
        let r = cobordism_check(&ap, &am, 16).unwrap();
        zero += (r.extendable && r.consistent && r.index == 0) as usize;
    }
    // shift on the Hardy space: injective with one-dimensional cokernel
    let hardy = -1;
    let (ap, am) = (sym(&[&["e(1)"]], 0), sym(&[&["1"]], 0));
    let r = cobordism_check(&ap, &am, 16).unwrap();
    let bvp = stable_index(&loop_condition_problem(&ap, &am).unwrap(), &[12, 16]);
    outcome(
        zero == 20 && r.index == hardy && r.consistent && bvp == Some(hardy),
        format!("{zero}/20 extendable pairs with index 0, Hardy pair index {} (boundary problem {bvp:?})", r.index),
    )
}

fn excision() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let res = resolutions(&[12, 16]);
    let mut agree = 0;
    let mut notes = Vec::new();
    for k in 0..10 {
        let (a, b, (w1, w2)) = random_excision_pair(&mut rng, 1 + k % 2).unwrap();
        let r = verify_excision(&a, &b, (Some(w1), Some(w2)), &res, DEFAULT_RANK_TOL).unwrap();
        let ok = w1 == w2 && r.equal && r.index_first.stable_index() == Some(w1);
        agree += ok as usize;
        if !ok {
            notes.push(format!("#{k}: {:?} vs {:?}", r.index_first.stable_index(), r.index_second.stable_index()));
        }
    }
    outcome(agree == 10, format!("{agree}/10 instances agree {notes:?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("model problem index", model_index),
        ("spectral boundary symbol is the identity", spectral_boundary_symbol),
        ("obstruction dichotomy", obstruction_dichotomy),
        ("flattening homotopy", flatten_homotopy),
        ("rotation homotopy", rotation_homotopy),
        ("order reduction", order_reduction),
        ("d-functional identities", d_functional),
        ("index formula on generators", index_formula),
        ("cobordism invariance", cobordism),
        ("excision consistency", excision),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1?}]",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
