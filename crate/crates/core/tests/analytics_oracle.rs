use proptest::prelude::*;
use sacreddetect_core::analytics::{
    disagreement_ratios, group_rates, pairwise_agreement, LabelMatrix, MatrixRow, Scope,
};
use sacreddetect_core::harvest::Group;
use sacreddetect_core::Label;

const NGOS: [(&str, Group); 4] =
    [("s1", Group::Secular), ("s2", Group::Secular), ("r1", Group::Religious), ("r2", Group::Religious)];

/// (ngo index, tree, gpt, llama) with labels 0 = yes, 1 = no, 2 = malformed.
type Raw = (usize, u8, u8, u8);

fn label(x: u8) -> Label {
    [Label::Yes, Label::No, Label::Malformed][x as usize]
}

fn build(raw: &[Raw]) -> LabelMatrix {
    LabelMatrix {
        model_ids: vec!["gpt".into(), "llama".into()],
        sources: NGOS.iter().map(|(n, g)| (n.to_string(), *g)).collect(),
        rows: raw
            .iter()
            .enumerate()
            .map(|(i, &(n, t, g, l))| MatrixRow {
                sentence_id: format!("s{i}"),
                doc_id: "d".into(),
                ngo_id: NGOS[n].0.into(),
                group: NGOS[n].1,
                text: String::new(),
                text_hash: String::new(),
                tree: label(t),
                models: vec![label(g), label(l)],
                argumentation: vec![None, None],
            })
            .collect(),
    }
}

fn in_scope(scope: &Scope, n: usize) -> bool {
    match scope {
        Scope::Ngo(id) => NGOS[n].0 == id,
        Scope::SecularTotal => NGOS[n].1 == Group::Secular,
        Scope::ReligiousTotal => NGOS[n].1 == Group::Religious,
        Scope::Total => true,
    }
}

fn classifier(row: &Raw, c: usize) -> u8 {
    [row.1, row.2, row.3][c]
}

fn same_valid(a: u8, b: u8) -> bool {
    a != 2 && a == b
}

fn raw_strategy(max: usize) -> impl Strategy<Value = Vec<Raw>> {
    prop::collection::vec((0..4usize, 0..2u8, 0..3u8, 0..3u8), 0..max)
}

fn check_all(raw: &[Raw]) -> Result<(), TestCaseError> {
    let m = build(raw);
    let names = ["tree", "gpt", "llama"];

    let rates = group_rates(&m);
    let agreement = pairwise_agreement(&m);
    let ratios = disagreement_ratios(&m);
    let mut seen_scopes = 0;
    for scope in m.scopes() {
        let rows: Vec<&Raw> = raw.iter().filter(|r| in_scope(&scope, r.0)).collect();
        if rows.is_empty() {
            prop_assert!(rates.entries.iter().all(|e| e.scope != scope));
            continue;
        }
        seen_scopes += 1;
        let n = rows.len();
        for (c, name) in names.iter().enumerate() {
            let e = rates.get(name, &scope).unwrap();
            let yes = rows.iter().filter(|r| classifier(r, c) == 0).count();
            let no = rows.iter().filter(|r| classifier(r, c) == 1).count();
            prop_assert_eq!((e.counts.n, e.counts.n_yes, e.counts.n_no), (n, yes, no));
            prop_assert_eq!(e.pct_yes, 100.0 * yes as f64 / n as f64);
            prop_assert!(e.pct_yes + e.pct_no <= 100.0 + 1e-9);
            if c == 0 {
                prop_assert!((e.pct_yes + e.pct_no - 100.0).abs() < 1e-9);
            }
        }

        let s = agreement.scopes.iter().find(|s| s.scope == scope).unwrap();
        let overall = rows.iter().filter(|r| same_valid(r.1, r.2) && same_valid(r.1, r.3)).count();
        prop_assert_eq!(s.overall, overall);
        let pairs = [(0, 1), (0, 2), (1, 2)];
        for (p, &(a, b)) in s.pairs.iter().zip(&pairs) {
            prop_assert_eq!((p.a.as_str(), p.b.as_str()), (names[a], names[b]));
            let agree = rows.iter().filter(|r| same_valid(classifier(r, a), classifier(r, b))).count();
            prop_assert_eq!(p.agree, agree);
            prop_assert!(s.overall_pct <= p.pct);
        }

        let d: Vec<&&Raw> = rows.iter().filter(|r| !same_valid(r.2, r.3)).collect();
        for (m_idx, model) in ["gpt", "llama"].iter().enumerate() {
            let r = ratios.iter().find(|x| &x.model == model && x.scope == scope).unwrap();
            let lab = |row: &Raw| classifier(row, m_idx + 1);
            prop_assert_eq!(r.n_disagreement, d.len());
            prop_assert_eq!(r.n_yes, d.iter().filter(|row| lab(row) == 0).count());
            prop_assert_eq!(r.n_no, d.iter().filter(|row| lab(row) == 1).count());
            prop_assert_eq!(r.n_malformed, d.iter().filter(|row| lab(row) == 2).count());
        }
    }
    prop_assert_eq!(rates.entries.len(), seen_scopes * 3);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistics_equal_naive_recount(raw in raw_strategy(10_000)) {
        check_all(&raw)?;
    }

    #[test]
    fn reciprocity_without_malformed(raw in prop::collection::vec((0..4usize, 0..2u8, 0..2u8, 0..2u8), 0..2000)) {
        let m = build(&raw);
        let ratios = disagreement_ratios(&m);
        for scope in m.scopes() {
            let (Some(g), Some(l)) = (
                ratios.iter().find(|r| r.model == "gpt" && r.scope == scope),
                ratios.iter().find(|r| r.model == "llama" && r.scope == scope),
            ) else { continue };
            // Each disagreement is a yes for one model and a no for the other.
            prop_assert_eq!(g.n_yes, l.n_no);
            prop_assert_eq!(g.n_no, l.n_yes);
            if g.n_yes > 0 && g.n_no > 0 {
                let product = (g.n_yes as u128 * l.n_yes as u128, g.n_no as u128 * l.n_no as u128);
                prop_assert_eq!(product.0, product.1);
                prop_assert!((g.ratio() * l.ratio() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_total_identity(raw in raw_strategy(3000)) {
        let m = build(&raw);
        let rates = group_rates(&m);
        for c in ["tree", "gpt", "llama"] {
            let Some(total) = rates.get(c, &Scope::Total) else { continue };
            let ngos: Vec<_> = rates.entries.iter().filter(|e| e.classifier == c && matches!(e.scope, Scope::Ngo(_))).collect();
            let yes: usize = ngos.iter().map(|e| e.counts.n_yes).sum();
            let n: usize = ngos.iter().map(|e| e.counts.n).sum();
            prop_assert_eq!(total.pct_yes, 100.0 * yes as f64 / n as f64);
            let weighted: f64 = ngos.iter().map(|e| e.pct_yes * e.counts.n as f64).sum::<f64>() / n as f64;
            prop_assert!((weighted - total.pct_yes).abs() < 1e-9);
        }
    }

    #[test]
    fn permutation_invariant(raw in raw_strategy(500), seed in any::<u64>()) {
        let mut shuffled = raw.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let (a, b) = (build(&raw), build(&shuffled));
        prop_assert_eq!(group_rates(&a), group_rates(&b));
        prop_assert_eq!(pairwise_agreement(&a), pairwise_agreement(&b));
        prop_assert_eq!(disagreement_ratios(&a), disagreement_ratios(&b));
    }
}
