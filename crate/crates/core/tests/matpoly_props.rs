use pmi_sos::matpoly::sym_eigvals_desc;
use pmi_sos::oracle::descartes_membership;
use pmi_sos::{MultiPoly, SymPolyMatrix, UniPoly};
use proptest::prelude::*;

fn poly(n: usize, max_deg: u32, coef: impl Strategy<Value = f64> + Clone) -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::collection::vec(0..=max_deg, n), coef), 0..5).prop_map(move |terms| {
        let capped = terms.into_iter().map(|(mut e, c)| {
            while e.iter().sum::<u32>() > max_deg {
                let i = e.iter().position(|&v| v > 0).unwrap();
                e[i] -= 1;
            }
            (e, c)
        });
        MultiPoly::from_terms(n, capped).unwrap()
    })
}

/// Upper-triangle rows of an `m x m` matrix with degree-2 entries.
fn upper(n: usize, m: usize, coef: impl Strategy<Value = f64> + Clone + 'static) -> impl Strategy<Value = Vec<Vec<MultiPoly>>> {
    let rows: Vec<_> = (0..m).map(|i| prop::collection::vec(poly(n, 2, coef.clone()), m - i)).collect();
    rows
}

fn real_matrix() -> impl Strategy<Value = (SymPolyMatrix, Vec<f64>)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
        (upper(n, m, -1.0..1.0f64), prop::collection::vec(-1.0..1.0f64, n))
            .prop_map(|(u, x)| (SymPolyMatrix::from_upper(u).unwrap(), x))
    })
}

fn integer_matrix() -> impl Strategy<Value = SymPolyMatrix> {
    (1usize..=8, 1usize..=3).prop_flat_map(|(n, m)| {
        upper(n, m, (-2i32..=2).prop_map(f64::from)).prop_map(|u| SymPolyMatrix::from_upper(u).unwrap())
    })
}

fn unipoly() -> impl Strategy<Value = UniPoly> {
    prop::collection::vec(-1.0..1.0f64, 0..6).prop_map(UniPoly::new)
}

/// `(G - lo I) / max(hi - lo, 1)` with `[lo, hi]` the spectrum of `G(x)`.
fn unit_spectrum(g: &SymPolyMatrix, x: &[f64]) -> SymPolyMatrix {
    let ev = g.eigvals_sorted(x).unwrap();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = 1.0 / (hi - lo).max(1.0);
    let n = g.n();
    let m = g.m();
    let rows = (0..m)
        .map(|i| {
            (i..m)
                .map(|j| {
                    let e = g.get(i, j).clone();
                    let e = if i == j { &e - &MultiPoly::constant(n, lo) } else { e };
                    e.scale(s)
                })
                .collect()
        })
        .collect();
    SymPolyMatrix::from_upper(rows).unwrap()
}

proptest! {
    #[test]
    fn trace_power_matches_eigenvalues((g, x) in real_matrix(), k in 1u32..=8) {
        let ev = sym_eigvals_desc(g.eval_matrix(&x).unwrap());
        let expect: f64 = ev.iter().map(|l| l.powi(k as i32)).sum();
        let scale: f64 = ev.iter().map(|l| l.abs().powi(k as i32)).sum();
        let got = g.trace_power(k).unwrap().eval(&x).unwrap();
        prop_assert!((got - expect).abs() <= 1e-8 * (1.0 + scale), "{got} vs {expect}");
    }

    #[test]
    fn inner_h_g_is_linear((g, _) in real_matrix(), h1 in unipoly(), h2 in unipoly(), a in -2.0..2.0f64) {
        let lhs = g.inner_h_g(&h1.scale(a).add(&h2));
        let rhs = &g.inner_h_g(&h1).scale(a) + &g.inner_h_g(&h2);
        prop_assert!(lhs.max_coef_diff(&rhs) <= 1e-12 * (1.0 + lhs.coef_norm()));
    }

    #[test]
    fn trace_blocks_psd_on_unit_spectrum((g, x) in real_matrix(), v in 0u32..=4) {
        let g = unit_spectrum(&g, &x);
        let (p, q) = g.trace_blocks(v).eval(&x).unwrap();
        for b in [p, q] {
            if b.nrows() > 0 {
                let min = *sym_eigvals_desc(b).last().unwrap();
                prop_assert!(min >= -1e-8, "{min}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn charpoly_signs_decide_psd_on_cube(g in integer_matrix()) {
        let n = g.n();
        for b in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|i| ((b >> i) & 1) as f64).collect();
            let rec = descartes_membership(&g, &x, 1e-9).unwrap();
            prop_assert!(rec.agree, "x = {x:?}: {rec:?}");
        }
    }
}
