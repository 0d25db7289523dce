use povm_coherence::verify;
use std::time::Instant;

#[test]
#[ignore]
fn time_acceptance_budgets() {
    let t = Instant::now();
    let rep = verify::monotonicity_suite(100, 20, 902).unwrap();
    eprintln!("monotonicity(100,20): {:?} passed={}", t.elapsed(), rep.passed);
    eprint!("{}", rep.render());

    let t = Instant::now();
    let rep = verify::inequalities_suite(500, 500, 904).unwrap();
    eprintln!("inequalities(500,500): {:?} passed={}", t.elapsed(), rep.passed);

    let t = Instant::now();
    let rep = verify::appendix_a_suite(20, 20, 907).unwrap();
    eprintln!("appendix_a(20,20): {:?} passed={}", t.elapsed(), rep.passed);

    let t = Instant::now();
    let rep = verify::randomness_suite(200, 5, 903).unwrap();
    eprintln!("randomness(200,5): {:?} passed={}", t.elapsed(), rep.passed);

    let t = Instant::now();
    let rep = verify::convexity_suite(300, 100, 910).unwrap();
    eprintln!("convexity(300,100): {:?} passed={}", t.elapsed(), rep.passed);

    let t = Instant::now();
    let rep = verify::naimark_invariance_suite(6, 906).unwrap();
    eprintln!("naimark_invariance(6): {:?} passed={}", t.elapsed(), rep.passed);
    eprint!("{}", rep.render());
}
