//! Acceptance gate: one line per criterion, `PASS` or `FAIL`, with the measured time
//! against its budget. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use dualthresh::analysis::{
    consistent_secret_counts, forgery_experiment, impersonation_experiment, tamper_experiment, ForgeryStrategy, Testbed,
};
use dualthresh::group_math::{generate_params, validate_params};
use dualthresh::protocol::{FixedNonces, Scheduler};
use dualthresh::signing::{schnorr_sign, schnorr_verify, SchnorrSignature};
use dualthresh::verification::{combine_shadows, verifier_shadow, verify_bundle};
use dualthresh::worked_example as fx;
use dualthresh::*;
use num_bigint::BigUint;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn demo() -> GroupParams {
    GroupParams::small(47, 23, 2).unwrap()
}

fn trace_value(trace: &[(String, String)], name: &str) -> String {
    trace
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| v.clone())
        .unwrap_or_else(|| "<missing>".into())
}

/// Compares named values and reports every mismatch.
fn expect_all(trace: &[(String, String)], expected: &[(&str, &str)]) -> Outcome {
    let bad: Vec<String> = expected
        .iter()
        .filter_map(|(name, want)| {
            let got = trace_value(trace, name);
            (got != *want).then(|| format!("{name} = {got}, expected {want}"))
        })
        .collect();
    if bad.is_empty() {
        outcome(true, format!("{} values match", expected.len()))
    } else {
        outcome(false, bad.join("; "))
    }
}

fn c1_setup() -> Outcome {
    let trace = fx::trace().unwrap();
    expect_all(
        &trace,
        &[
            ("y_S", "27"),
            ("y_R", "34"),
            ("W", "9"),
            ("v_S1", "34"),
            ("v_S2", "34"),
            ("v_S3", "38"),
            ("v_S4", "9"),
            ("v_S5", "6"),
            ("v_S6", "6"),
            ("v_S7", "40"),
            ("v_R1", "14"),
            ("v_R2", "25"),
            ("v_R3", "16"),
            ("v_R4", "20"),
            ("v_R5", "24"),
            ("v_R6", "32"),
        ],
    )
}

fn c2_signing() -> Outcome {
    let trace = fx::trace().unwrap();
    let values = expect_all(
        &trace,
        &[
            ("commit_S2", "(18, 32, 21)"),
            ("commit_S4", "(6, 16, 4)"),
            ("commit_S6", "(32, 7, 1)"),
            ("commit_S7", "(7, 12, 17)"),
            ("U_S", "34"),
            ("V_S", "3"),
            ("W_S", "18"),
            ("R_S", "8"),
            ("MS_S2", "5"),
            ("MS_S4", "21"),
            ("MS_S6", "12"),
            ("MS_S7", "19"),
            ("s_S2", "22"),
            ("s_S4", "11"),
            ("s_S6", "16"),
            ("s_S7", "12"),
            ("S_S", "15"),
        ],
    );
    let (mut ctc, keys) = fx::deployment().unwrap();
    let config = fx::session_config(&ctc);
    let session = run_signing_session(&mut ctc, &keys, &config, fx::MESSAGE).unwrap();
    let p = demo();
    let session_ok = session.bundle == fx::bundle(&p);
    outcome(
        values.pass && session_ok,
        format!("{}; session bundle (15, 34, 18): {}", values.detail, session_ok),
    )
}

fn c3_verification() -> Outcome {
    let trace = fx::trace().unwrap();
    let values = expect_all(
        &trace,
        &[
            ("MS_R1", "19"),
            ("MS_R3", "4"),
            ("MS_R4", "11"),
            ("MS_R5", "9"),
            ("MS_R6", "10"),
            ("share_R5", "6"),
            ("shadow_sum", "7"),
            ("R_R", "3"),
            ("R_S'", "8"),
            ("g^S_S", "9"),
            ("R_R*y_S^R_S", "9"),
            ("verdict", "valid"),
        ],
    );
    let (mut ctc, keys) = fx::deployment().unwrap();
    let config = fx::session_config(&ctc);
    let p = demo();
    let verdict = run_verification_session(&mut ctc, &keys, &config, &fx::bundle(&p))
        .unwrap()
        .verdict;
    outcome(
        values.pass && verdict.valid,
        format!("{}; session verdict valid: {}", values.detail, verdict.valid),
    )
}

fn c4_completeness() -> Outcome {
    let p = demo();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut valid = 0;
    for i in 0..200u64 {
        let n = rng.gen_range(1..=7);
        let t = rng.gen_range(1..=n);
        let l = rng.gen_range(1..=7);
        let k = rng.gen_range(1..=l);
        let (mut ctc, keys) = deploy_random(&p, DeploymentShape { n, t, l, k }, &mut rng).unwrap();
        let mut config = SessionConfig::random(&ctc, ChallengeHash::Production, Some(i), &mut rng);
        if i % 2 == 1 {
            config.scheduler = Scheduler::Threaded;
        }
        let message: Vec<u8> = (0..rng.gen_range(0..40)).map(|_| rng.gen()).collect();
        let bundle = run_signing_session(&mut ctc, &keys, &config, &message).unwrap().bundle;
        if run_verification_session(&mut ctc, &keys, &config, &bundle)
            .unwrap()
            .verdict
            .valid
        {
            valid += 1;
        }
    }
    outcome(valid == 200, format!("{valid}/200 valid"))
}

fn c5_subset_independence() -> Outcome {
    let (ctc, keys) = fx::deployment().unwrap();
    let p = ctc.params().clone();
    let bundle = fx::bundle(&p);
    let roster = ctc.recipient().roster_ids();
    let mut good = 0;
    for skip in 0..roster.len() {
        let subset: Vec<Scalar> = roster
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, id)| id.clone())
            .collect();
        let shadows: Vec<_> = subset
            .iter()
            .map(|id| {
                verifier_shadow(
                    keys.get(Org::Recipient, id).unwrap(),
                    ctc.recipient().masked_share(id).unwrap(),
                    &subset,
                    &p,
                )
                .unwrap()
            })
            .collect();
        let sum = combine_shadows(&shadows, subset.len(), &p).unwrap();
        let verdict = verify_bundle(&bundle, &sum, ctc.sender().public_key(), &p, &fx::hash()).unwrap();
        if sum == p.scalar(7u32) && verdict.valid {
            good += 1;
        }
    }
    outcome(
        good == 6,
        format!("{good}/6 subsets give shadow sum 7 and a valid verdict"),
    )
}

fn c6_tamper(large: &GroupParams) -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let bed = Testbed::small(large, &mut rng).unwrap();
    let big = tamper_experiment(&bed, 500, &mut rng).unwrap();
    let bed = Testbed::small(&demo(), &mut rng).unwrap();
    let small = tamper_experiment(&bed, 500, &mut rng).unwrap();
    outcome(
        big.successes == 0 && small.within_interval(),
        format!(
            "160-bit q: {}/500 accepted; q=23: {}/500 accepted, interval [{}, {}]",
            big.successes, small.successes, small.interval[0], small.interval[1]
        ),
    )
}

fn contains_decimal(text: &str, value: &BigUint) -> bool {
    let needle = format!("\"{value}\"");
    text.contains(&needle)
}

fn c7_secrecy(large: &GroupParams) -> Outcome {
    // (a) two shares of a degree-2 polynomial at q = 23
    let p = demo();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut open_all = true;
    for _ in 0..5 {
        let poly = dualthresh::shamir::sample_polynomial(p.random_scalar(&mut rng), 2, &mut rng, &p);
        let mut ids: Vec<u32> = (1..23).collect();
        ids.shuffle(&mut rng);
        let shares: Vec<Share> = ids[..2]
            .iter()
            .map(|&u| Share {
                id: p.scalar(u),
                value: poly.eval(&p.scalar(u), p.q()),
            })
            .collect();
        let counts = consistent_secret_counts(&shares, 2, &p).unwrap();
        open_all &= counts.iter().all(|&c| c >= 1);
    }

    // (b) public transcripts of a full session at large parameters
    let (mut ctc, keys) = deploy_random(large, DeploymentShape { n: 5, t: 3, l: 4, k: 3 }, &mut rng).unwrap();
    let mut config = SessionConfig::random(&ctc, ChallengeHash::Production, Some(70), &mut rng);
    config.nonces = config
        .signers
        .iter()
        .map(|id| FixedNonces {
            signer_id: id.clone(),
            nonces: Nonces::random(large, &mut rng),
        })
        .collect();
    let message = b"secrecy check";
    let setup = distribute_setup(&mut ctc);
    let signed = run_signing_session(&mut ctc, &keys, &config, message).unwrap();
    let verified = run_verification_session(&mut ctc, &keys, &config, &signed.bundle).unwrap();
    let public = [
        setup.public().to_jsonl(),
        signed.transcript.public().to_jsonl(),
        verified.transcript.public().to_jsonl(),
    ]
    .concat();

    let mut secrets: Vec<(String, BigUint)> = Vec::new();
    let v_s = large.product(
        config
            .nonces
            .iter()
            .map(|n| large.g_pow(&n.nonces.k1))
            .collect::<Vec<_>>()
            .iter(),
    );
    let r_s = ChallengeHash::Production.hash_to_scalar(&v_s, message, large).unwrap();
    secrets.push(("V_S".into(), v_s.value().clone()));
    secrets.push(("R_S".into(), r_s.value().clone()));
    for org in [Org::Sender, Org::Recipient] {
        let setup = ctc.org(org);
        for c in setup.polynomial().coefficients() {
            secrets.push((format!("{org} coefficient"), c.value().clone()));
        }
        for id in setup.roster_ids() {
            secrets.push((
                format!("share of {org}:{id}"),
                setup.share_of(&id, large).unwrap().value.value().clone(),
            ));
        }
    }
    for m in &keys.members {
        secrets.push((
            format!("key of {}:{}", m.org, m.public_id),
            m.secret_key.value().clone(),
        ));
    }
    for n in &config.nonces {
        secrets.push(("K1".into(), n.nonces.k1.value().clone()));
        secrets.push(("K2".into(), n.nonces.k2.value().clone()));
    }
    // the private transcript carries each v_i; make sure the search would have found them
    let private = signed.transcript.to_jsonl();
    let mut private_has_v = true;
    for n in &config.nonces {
        let v_i = large.g_pow(&n.nonces.k1);
        private_has_v &= contains_decimal(&private, v_i.value());
        secrets.push(("v_i".into(), v_i.value().clone()));
    }
    let leaks: Vec<&str> = secrets
        .iter()
        .filter(|(_, v)| contains_decimal(&public, v) || public.contains(&v.to_string()))
        .map(|(name, _)| name.as_str())
        .collect();
    outcome(
        open_all && leaks.is_empty() && private_has_v,
        format!(
            "(a) all 23 secrets consistent with t-1 shares: {open_all}; (b) {} secrets searched, leaks: {:?}",
            secrets.len(),
            leaks
        ),
    )
}

fn c8_experiments() -> Outcome {
    let p = demo();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let bed = Testbed::small(&p, &mut rng).unwrap();
    let x_s = bed.ctc.sender().polynomial().secret().clone();
    let reports = [
        impersonation_experiment(&bed, 1000, false, &mut rng).unwrap(),
        forgery_experiment(&bed, 1000, ForgeryStrategy::PickRrFirst, None, &mut rng).unwrap(),
        forgery_experiment(&bed, 1000, ForgeryStrategy::PickBothFirst, None, &mut rng).unwrap(),
        impersonation_experiment(&bed, 100, true, &mut rng).unwrap(),
        forgery_experiment(&bed, 100, ForgeryStrategy::PickRrFirst, Some(&x_s), &mut rng).unwrap(),
        forgery_experiment(&bed, 100, ForgeryStrategy::PickBothFirst, Some(&x_s), &mut rng).unwrap(),
    ];
    let detail = reports
        .iter()
        .map(|r| {
            format!(
                "{} {}/{} in [{}, {}]",
                r.experiment, r.successes, r.trials, r.interval[0], r.interval[1]
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(reports.iter().all(|r| r.within_interval()), detail)
}

fn c9_params() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut times = Vec::new();
    let mut all_ok = true;
    let low_p = BigUint::from(1u32) << 511;
    let low_q = BigUint::from(1u32) << 159;
    for _ in 0..5 {
        let start = Instant::now();
        let params = generate_params(ParamSize::FULL, &mut rng).unwrap();
        times.push(start.elapsed());
        let p = params.p();
        let q = params.q();
        let bounds = &low_p < p && p.bits() == 512 && &low_q < q && q.bits() == 160;
        all_ok &= bounds && validate_params(&params).is_valid();
    }
    times.sort();
    let median = times[2];
    outcome(
        all_ok && median < Duration::from_secs(120),
        format!("5/5 valid: {all_ok}; median {:.2} s", median.as_secs_f64()),
    )
}

fn schnorr_trials(p: &GroupParams, rng: &mut ChaCha20Rng) -> (u32, u32) {
    let hash = ChallengeHash::Production;
    let mut roundtrips = 0;
    let mut rejected = 0;
    for i in 0..100 {
        let x = p.random_nonzero_scalar(rng);
        let y = p.g_pow(&x);
        let message: Vec<u8> = (0..rng.gen_range(1..20)).map(|_| rng.gen()).collect();
        let k = p.random_nonzero_scalar(rng);
        let sig = schnorr_sign(&x, &message, &k, p, &hash).unwrap();
        roundtrips += schnorr_verify(&y, &message, &sig, p, &hash) as u32;
        let bump = |s: &Scalar| p.s_add(s, &p.scalar(1u32));
        let mut bad_message = message.clone();
        bad_message[0] ^= 1;
        // each of r, s, m and y is tampered in 25 of the 100 trials
        let accepted = match i % 4 {
            0 => schnorr_verify(
                &y,
                &message,
                &SchnorrSignature {
                    r: bump(&sig.r),
                    s: sig.s.clone(),
                },
                p,
                &hash,
            ),
            1 => schnorr_verify(
                &y,
                &message,
                &SchnorrSignature {
                    r: sig.r.clone(),
                    s: bump(&sig.s),
                },
                p,
                &hash,
            ),
            2 => schnorr_verify(&y, &bad_message, &sig, p, &hash),
            _ => schnorr_verify(&p.random_subgroup_element_except(rng, &y), &message, &sig, p, &hash),
        };
        rejected += !accepted as u32;
    }
    (roundtrips, rejected)
}

fn c10_schnorr(large: &GroupParams) -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let (small_round, _) = schnorr_trials(&demo(), &mut rng);
    let (round, rejected) = schnorr_trials(large, &mut rng);
    outcome(
        small_round == 100 && round == 100 && rejected == 100,
        format!(
            "q=23: {small_round}/100 roundtrips; 160-bit q: {round}/100 roundtrips, {rejected}/100 tampers rejected"
        ),
    )
}

fn run(number: &str, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {number:>2} {}: {name}: {} ({:.2} s of {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = vec![
        run("1", "fixture setup", secs(1), c1_setup),
        run("2", "fixture signing", secs(1), c2_signing),
        run("3", "fixture verification", secs(1), c3_verification),
        run("4", "completeness", secs(10), c4_completeness),
        run("5", "subset independence", secs(1), c5_subset_independence),
    ];

    // a 512/160-bit group for the criteria that need a large q
    let large = generate_params(ParamSize::FULL, &mut ChaCha20Rng::seed_from_u64(600)).unwrap();
    results.push(run("6", "tamper soundness", secs(30), || c6_tamper(&large)));
    results.push(run("7", "secrecy", secs(5), || c7_secrecy(&large)));
    results.push(run("8", "attack experiments", secs(60), c8_experiments));
    results.push(run("9", "parameter generation", secs(600), c9_params));
    results.push(run("10", "schnorr reference", secs(5), || c10_schnorr(&large)));

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
