use apbias_core::arith::{factor, is_prime, mobius_omega_phi};
use apbias_core::classno::hurwitz;
use apbias_core::traces::{dim_new_signed, trace_signed, TraceQuery};
use apbias_core::verify::trace_grid;
use rayon::prelude::*;

/// Each newform has `|a_n| ≤ d(n) n^{(k-1)/2}`, so the signed traces are
/// bounded by the signed dimensions times that.
#[test]
fn signed_traces_respect_coefficient_bounds() {
    let grid = trace_grid(&[2, 4, 6, 8], 300, &[2, 3, 5, 6, 7]);
    grid.par_iter().for_each(|&q| {
        let s = trace_signed(q).unwrap();
        let d = dim_new_signed(q.k, q.level).unwrap();
        let divisors = factor(q.n).unwrap().divisors().len() as f64;
        let per_form = divisors * (q.n as f64).powf((q.k as f64 - 1.0) / 2.0);
        assert!((s.tr_plus.abs() as f64) <= d.dim_plus as f64 * per_form + 1e-9, "{q:?} {s:?} {d:?}");
        assert!((s.tr_minus.abs() as f64) <= d.dim_minus as f64 * per_form + 1e-9, "{q:?} {s:?} {d:?}");
    });
}

#[test]
fn signed_dimensions_track_phi_over_twelve() {
    (2..=5000u64).into_par_iter().for_each(|n| {
        let m = mobius_omega_phi(n).unwrap();
        if !m.squarefree {
            return;
        }
        let d = dim_new_signed(2, n).unwrap();
        let target = m.phi as f64 / 12.0;
        let slack = 2.0 * (n as f64).sqrt() * (n as f64).ln();
        assert!((d.dim_plus as f64 - target).abs() <= slack, "N = {n}: {d:?}");
        assert!((d.dim_minus as f64 - target).abs() <= slack, "N = {n}: {d:?}");
    });
}

#[test]
fn separation_is_positive_once_the_class_number_is_large() {
    for level in (100..2000u64).filter(|&n| is_prime(n)) {
        let q = TraceQuery::new(2, level, 3).unwrap();
        let s = trace_signed(q).unwrap();
        let h = hurwitz(12 * level);
        // H(4nN) > 2σ₁(3) = 8.
        if h > 8.into() {
            assert!(s.tr_plus > s.tr_minus, "N = {level}");
        }
    }
}

#[test]
fn prime_level_newform_dimensions_match_genus() {
    for level in (11..3000u64).filter(|&n| is_prime(n)) {
        let d = dim_new_signed(2, level).unwrap();
        let genus = apbias_core::traces::dim_cusp_gamma0(2, level).unwrap();
        assert_eq!(d.total(), genus);
    }
}
