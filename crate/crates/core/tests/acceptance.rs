//! Acceptance harness: runs every criterion and prints one PASS/FAIL line each.
//! The doubling implication is false (for `k = 1` it asks `|2α|_Z ≥ 1/2`), so its
//! criterion is expected to fail. The process exits nonzero when any other criterion
//! fails or when that one unexpectedly passes.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use cocycle_lab::algebra::*;
use cocycle_lab::arithmetic::{check_dc, check_dc_tilde, doubling_probe};
use cocycle_lab::cocycle::*;
use cocycle_lab::fourier::{analyze_with_leakage, FourierMap, Su2Field, Symmetry};
use cocycle_lab::reduction::*;
use cocycle_lab::renorm::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn algebra_identities(rng: &mut ChaCha8Rng) -> Outcome {
    let a = GroupElement::a();
    let mut err: f64 = 0.0;
    for j in 0..128 {
        let x = j as f64 / 128.0;
        err = err.max((a * e_half(x) * a.inverse()).distance(&e_half(-x)));
        err = err.max(cover_project(e_half(x)).max_abs_diff(&So3::rotation_z(x)));
    }
    for _ in 0..10_000 {
        let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let out = ad_action(a, Su2Vector::off_diagonal(z));
        err = err.max(out.t.abs() + (out.z - z.conj()).norm());
    }
    let square_exact = a * a == GroupElement::minus_identity();
    Outcome {
        pass: err < 1e-12 && square_exact,
        detail: format!("max error {err:.2e}, A² = −Id exact: {square_exact}"),
    }
}

fn homotopy_and_degree() -> Outcome {
    let rotation = Cocycle::rotation(GOLDEN);
    let model = Cocycle::model(GOLDEN);
    let classes = [rotation.homotopy_class(), model.homotopy_class()];
    let nontrivial = classes
        .iter()
        .all(|k| matches!(k, Ok(HomotopyClass::Nontrivial)));
    let pin = Cocycle::rotation_r(GOLDEN, HalfInt::ONE).degree_estimate(1, 256);
    let d_rot = rotation.degree_estimate(256, 4096);
    let d_model = model.degree_estimate(256, 4096);
    let odd: Vec<(f64, f64)> = [1i64, 3, 7, 15, 31, 63, 127, 255]
        .iter()
        .filter_map(|&n| model.degree_estimate(n, 4096).ok().map(|d| (n as f64, d)))
        .collect();
    let (cfit, r2) = fit_inverse_decay(&odd);
    let (Ok(pin), Ok(d_rot), Ok(d_model)) = (pin, d_rot, d_model) else {
        return Outcome {
            pass: false,
            detail: "degree estimate was under-resolved".into(),
        };
    };
    let pass = nontrivial
        && (pin - 1.0).abs() < 1e-9
        && (d_rot - 0.5).abs() <= 0.02
        && d_model <= 0.02
        && odd.len() == 8
        && r2 > 0.99;
    Outcome {
        pass,
        detail: format!(
            "classes nontrivial: {nontrivial}, E_1 → {pin:.6}, rotation → {d_rot:.6}, model → {d_model:.2e}, \
             fit C = {cfit:.4} (R² = {r2:.6}) over odd n"
        ),
    }
}

fn doubling(rng: &mut ChaCha8Rng) -> Outcome {
    let (gamma, tau, k) = (4.0, 2.0, 200);
    let mut accepted = 0;
    let mut drawn = 0;
    let mut counterexamples = 0;
    let mut first = None;
    while accepted < 1000 && drawn < 1_000_000 {
        drawn += 1;
        let alpha: f64 = rng.gen();
        if !check_dc_tilde(alpha, gamma, tau, k).satisfied {
            continue;
        }
        accepted += 1;
        let probe = doubling_probe(alpha, gamma, tau, k);
        if !probe.conclusion.satisfied {
            counterexamples += 1;
            first.get_or_insert((alpha, probe.conclusion.worst_k, probe.conclusion.min_margin));
        }
    }
    let k1 = check_dc(2.0 * GOLDEN % 1.0, gamma / 2.0, tau, 1);
    Outcome {
        pass: accepted == 1000 && counterexamples == 0,
        detail: format!(
            "{accepted} accepted of {drawn} drawn, {counterexamples} counterexamples; first {first:?}; \
             k = 1 alone needs |2α|_Z ≥ 1/2 (golden margin {:.3e})",
            k1.min_margin
        ),
    }
}

fn random_real(rng: &mut ChaCha8Rng, n: usize) -> FourierMap {
    let mut e = vec![(0i64, c(rng.gen_range(-1.0..1.0), 0.0))];
    for k in 1..=n as i64 {
        let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        e.push((k, v));
        e.push((-k, v.conj()));
    }
    FourierMap::from_entries(1, e, Symmetry::RealValued).unwrap()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize, decay: f64) -> FourierMap {
    let e: Vec<_> = (-(n as i64)..=n as i64)
        .map(|k| {
            let w = (-decay * k.abs() as f64).exp();
            (
                k,
                c(rng.gen_range(-1.0..1.0) * w, rng.gen_range(-1.0..1.0) * w),
            )
        })
        .collect();
    FourierMap::from_entries(1, e, Symmetry::None).unwrap()
}

fn cohomological_solvers(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=64);
        let ut = random_real(rng, n);
        let uz = random_complex(rng, n, 0.0);
        let (Ok(bt), Ok(bz)) = (
            solve_diagonal(&ut, GOLDEN, 0.0),
            solve_offdiagonal(&uz, GOLDEN, 0.0),
        ) else {
            return Outcome {
                pass: false,
                detail: "solver refused a golden-mean input".into(),
            };
        };
        worst = worst
            .max(diagonal_residual(&bt.map, &ut, GOLDEN, 512))
            .max(offdiagonal_residual(&bz.map, &uz, GOLDEN, 512));
    }
    let mean_only = FourierMap::constant(1, c(0.7, 0.0), Symmetry::RealValued);
    let zero_mode = solve_diagonal(&mean_only, GOLDEN, 0.0).is_ok();
    Outcome {
        pass: worst < 1e-9 && zero_mode,
        detail: format!(
            "worst residual {worst:.2e} over 20 draws, k = 0 mode solvable: {zero_mode}"
        ),
    }
}

fn kam(rng: &mut ChaCha8Rng) -> Outcome {
    let mut t = random_real(rng, 8);
    let mut z = random_complex(rng, 8, 0.5);
    let raw = Su2Field {
        t: t.clone(),
        z: z.clone(),
    }
    .norm_c0(256);
    let s = c(1e-3 / raw, 0.0);
    t = t.scale(s);
    z = z.scale(s);
    let chart = ChartCocycle::new(GOLDEN, Su2Field { t, z });
    match kam_reduce(&chart, &[8, 16, 32, 64], 1e-10, GuardPolicy::new(10.0, 2.0)) {
        Ok(out) => {
            let sizes: Vec<String> = out
                .reports
                .iter()
                .map(|r| format!("{:.2e}→{:.2e}", r.input_size, r.output_size))
                .collect();
            let superlinear = out
                .reports
                .iter()
                .filter(|r| r.input_size < 1e-4)
                .all(|r| r.output_size <= r.input_size.powf(1.5));
            let last = out.reports.last().map(|r| r.output_size).unwrap_or(0.0);
            Outcome {
                pass: out.reports.len() <= 6 && last < 1e-10 && superlinear,
                detail: format!(
                    "{} steps [{}], |z_n| = {:.2e}",
                    out.reports.len(),
                    sizes.join(", "),
                    out.normal_form.z_n.norm()
                ),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("KAM failed: {e}"),
        },
    }
}

fn corollary() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut outside: f64 = 0.0;
    let mut constants = Vec::new();
    for r in [1e-1, 1e-2, 1e-3] {
        let nf = NormalFormParams {
            alpha_n: GOLDEN,
            z_n: Complex64::from_polar(r, 0.7),
        };
        let direct = normal_form_cocycle(nf)
            .second_iterate()
            .conjugate(&corollary_frame())
            .unwrap();
        let closed = second_iterate_closed_form(nf);
        worst = worst.max(generator_distance(&direct, &closed, 256));

        let e = e_half(GOLDEN).inverse();
        for comp in 0..4 {
            let samples: Vec<_> = (0..64)
                .map(|j| c((e * closed.value(j as f64 / 64.0)).quaternion()[comp], 0.0))
                .collect();
            let (map, _) = analyze_with_leakage(&samples, 1, 31, Symmetry::RealValued).unwrap();
            for k in 3..=31i64 {
                outside = outside.max(map.coeff(k).norm()).max(map.coeff(-k).norm());
            }
        }
        match reduce_second_iterate_once(nf) {
            Ok(red) => constants.push(red.size / (r * r)),
            Err(e) => {
                return Outcome {
                    pass: false,
                    detail: format!("reduction step failed: {e}"),
                }
            }
        }
    }
    let spread = constants.iter().cloned().fold(0.0, f64::max)
        / constants.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: worst < 1e-9 && outside < 1e-14 && spread <= 3.0,
        detail: format!(
            "SO(3) distance {worst:.2e}, spectrum outside [−2, 2] {outside:.1e}, size/|z|² = {constants:.4?} (spread {spread:.3})"
        ),
    }
}

fn pipeline() -> Outcome {
    let nf = NormalFormParams {
        alpha_n: GOLDEN,
        z_n: c(1e-2, 0.0),
    };
    match two_periodic_pipeline(&normal_form_cocycle(nf), &PipelineConfig::default()) {
        Ok(out) => {
            let tr = &out.trace;
            let d: Vec<f64> = tr
                .distances
                .iter()
                .map(|r| r.distance_to_constant)
                .collect();
            let monotone = d.windows(2).all(|w| w[1] < w[0]);
            Outcome {
                pass: tr.distance_to_constant <= 1e-3
                    && monotone
                    && tr.nf_periodicity_defect < 1e-7
                    && tr.base_change_roundtrip < 1e-8,
                detail: format!(
                    "distances {}, NF periodicity {:.1e}, round trip {:.1e}",
                    d.iter()
                        .map(|v| format!("{v:.2e}"))
                        .collect::<Vec<_>>()
                        .join(" → "),
                    tr.nf_periodicity_defect,
                    tr.base_change_roundtrip
                ),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("{e}"),
        },
    }
}

fn obstruction(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let r = rng.gen_range(1e-3..2.0);
        let phi = rng.gen_range(-PI..PI);
        let z1 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let input = ObstructionPair {
            z0: Complex64::from_polar(r, phi),
            z1,
        };
        let Ok(out) = normalize_obstruction(input) else {
            return Outcome {
                pass: false,
                detail: "nonzero z₀ rejected".into(),
            };
        };
        let expect = Complex64::from_polar(1.0, -phi) * z1;
        worst = worst
            .max((out.z0 - c(r, 0.0)).norm() / r)
            .max((out.z1 - expect).norm() / z1.norm())
            .max(out.z0.im.abs());
    }
    Outcome {
        pass: worst < 1e-14,
        detail: format!("worst relative deviation {worst:.1e} over 100 inputs"),
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    println!("# seed {SEED}");
    type Criterion<'a> = (
        &'a str,
        Duration,
        Box<dyn FnOnce(&mut ChaCha8Rng) -> Outcome>,
    );
    let criteria: Vec<Criterion> = vec![
        (
            "1 algebra identities",
            Duration::from_secs(1),
            Box::new(algebra_identities),
        ),
        (
            "2 homotopy and degree",
            Duration::from_secs(10),
            Box::new(|_| homotopy_and_degree()),
        ),
        (
            "3 doubling implication",
            Duration::from_secs(30),
            Box::new(doubling),
        ),
        (
            "4 cohomological solvers",
            Duration::from_secs(5),
            Box::new(cohomological_solvers),
        ),
        ("5 KAM convergence", Duration::from_secs(60), Box::new(kam)),
        (
            "6 second iterate closed form",
            Duration::from_secs(30),
            Box::new(|_| corollary()),
        ),
        (
            "7 two-periodic pipeline",
            Duration::from_secs(120),
            Box::new(|_| pipeline()),
        ),
        (
            "8 obstruction normalization",
            Duration::from_secs(5),
            Box::new(obstruction),
        ),
    ];
    let expected_failures = ["3 doubling implication"];
    let (mut failures, mut unexpected) = (0, 0);
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run(&mut rng);
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        let expected = expected_failures.contains(&name);
        failures += usize::from(!pass);
        unexpected += usize::from(pass == expected);
        println!(
            "{} {name}: {} [{:.3}s / {}s]{}",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if expected { " (expected failure)" } else { "" }
        );
    }
    println!(
        "{} of 8 criteria passed, {unexpected} unexpected outcomes",
        8 - failures
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
