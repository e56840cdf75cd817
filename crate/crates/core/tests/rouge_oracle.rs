//! ROUGE scores checked against deliberately naive reimplementations.

use proptest::prelude::*;
use rtsum_core::rouge::{corpus_rouge, rouge_l, rouge_n, tokenize};

const VOCAB: &[&str] = &[
    "bác", "sĩ", "bệnh", "nhân", "sốt", "ho", "Sốt", "BỆNH", "đau,", "đầu.", "ừm", "!", "tôi", "bị", "không?", "hoà",
    "hòa",
];

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 0..12).prop_map(|w| w.join(" "))
}

fn f1(overlap: usize, cand: usize, reference: usize) -> (f64, f64, f64) {
    let p = if cand == 0 { 0.0 } else { overlap as f64 / cand as f64 };
    let r = if reference == 0 { 0.0 } else { overlap as f64 / reference as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Clipped overlap by repeatedly pairing off equal n-grams.
fn naive_overlap(cand: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let grams = |t: &[String]| -> Vec<Vec<String>> { t.windows(n).map(<[String]>::to_vec).collect() };
    let c = grams(cand);
    let mut r = grams(reference);
    let (c_len, r_len) = (c.len(), r.len());
    let mut hits = 0;
    for g in &c {
        if let Some(pos) = r.iter().position(|x| x == g) {
            r.remove(pos);
            hits += 1;
        }
    }
    (hits, c_len, r_len)
}

fn is_subsequence(sub: &[&String], seq: &[String]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|s| it.any(|x| x == *s))
}

/// Longest common subsequence by trying every subsequence of `a`.
fn exhaustive_lcs(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 12);
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let k = mask.count_ones() as usize;
        if k <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if is_subsequence(&sub, b) {
            best = k;
        }
    }
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn rouge_n_matches_clipped_oracle(c in text(), r in text(), n in 1usize..4) {
        let (ct, rt) = (tokenize(&c), tokenize(&r));
        let (hits, cl, rl) = naive_overlap(&ct, &rt, n);
        let (p, rec, f) = f1(hits, cl, rl);
        let got = rouge_n(&c, &r, n);
        prop_assert!(close(got.precision, p) && close(got.recall, rec) && close(got.f1, f), "{got:?} vs {p} {rec} {f}");
    }

    #[test]
    fn rouge_l_matches_exhaustive_lcs(c in text(), r in text()) {
        let (ct, rt) = (tokenize(&c), tokenize(&r));
        let (p, rec, f) = f1(exhaustive_lcs(&ct, &rt), ct.len(), rt.len());
        let got = rouge_l(&c, &r);
        prop_assert!(close(got.precision, p) && close(got.recall, rec) && close(got.f1, f));
    }

    #[test]
    fn corpus_score_is_mean_of_pairs(pairs in prop::collection::vec((text(), text()), 1..8)) {
        let report = corpus_rouge(pairs.iter().map(|(c, r)| (c.as_str(), r.as_str()))).unwrap();
        let mean = pairs.iter().map(|(c, r)| rouge_l(c, r).f1).sum::<f64>() / pairs.len() as f64;
        prop_assert!(close(report.rl.f1, mean));
        prop_assert_eq!(report.sample_count, pairs.len());
    }
}

#[test]
fn normalization_makes_composed_and_decomposed_equal() {
    let composed = "hoà bình";
    let decomposed = "hoa\u{0300} bình";
    assert_eq!(rouge_n(composed, decomposed, 1).f1, 1.0);
}

#[test]
fn punctuation_and_case_do_not_matter() {
    assert_eq!(rouge_l("Bệnh nhân, SỐT!", "bệnh nhân sốt").f1, 1.0);
}
