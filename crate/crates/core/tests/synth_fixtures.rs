use wordclosure::align::build_input_map;
use wordclosure::closure::build_closures;
use wordclosure::io::{load_synonyms, load_vectors};
use wordclosure::model::{validate_pair, TransformKind};
use wordclosure::similarity::load_stopwords;
use wordclosure::synth::{closure_oracle, random_pair, rng_for, structured_pair, Injection, Lexicon, SynthConfig};

fn cfg(density: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        density,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn same_seed_same_pair() {
    let a = random_pair(&cfg(0.3, 42), &mut rng_for(42), "p");
    let b = random_pair(&cfg(0.3, 42), &mut rng_for(42), "p");
    assert_eq!(a, b);
    let c = random_pair(&cfg(0.3, 43), &mut rng_for(43), "p");
    assert_ne!(a, c);
}

#[test]
fn zero_density_has_no_alignments() {
    let mut rng = rng_for(1);
    for i in 0..50 {
        let p = random_pair(&cfg(0.0, 1), &mut rng, format!("z{i}"));
        assert!(validate_pair(&p).is_empty());
        assert!(p.alignment_source.is_empty() && p.alignment_followup.is_empty());
        // Unaligned inputs still get one closure per input-map component.
        let m = build_input_map(&p).unwrap();
        let oracle = closure_oracle(&p, &m);
        assert!(oracle.iter().all(|c| c.tran_s.is_empty() && c.tran_f.is_empty()));
        assert_eq!(oracle.len(), p.source_input.len() + p.followup_input.len() - m.len());
    }
}

#[test]
fn full_density_is_complete_bipartite() {
    let mut rng = rng_for(2);
    for i in 0..50 {
        let p = random_pair(&cfg(1.0, 2), &mut rng, format!("f{i}"));
        assert_eq!(p.alignment_source.len(), p.source_input.len() * p.source_translation.len());
        assert_eq!(p.alignment_followup.len(), p.followup_input.len() * p.followup_translation.len());
    }
}

#[test]
fn oracle_agrees_with_construction_across_densities() {
    for (d, density) in [0.0, 0.1, 0.3, 1.0].into_iter().enumerate() {
        let mut rng = rng_for(100 + d as u64);
        for i in 0..100 {
            let p = random_pair(&cfg(density, 0), &mut rng, format!("o{i}"));
            let m = build_input_map(&p).unwrap();
            let built: std::collections::BTreeSet<_> = build_closures(&p, &m).into_iter().map(|c| c.sets).collect();
            assert_eq!(built, closure_oracle(&p, &m), "density {density} pair {i}");
        }
    }
}

#[test]
fn injections_edit_translations_only() {
    let lex = Lexicon::new(80);
    for kind in TransformKind::ALL {
        for inject in Injection::ALL {
            for seed in 0..20 {
                let base = SynthConfig {
                    kind,
                    seed,
                    ..SynthConfig::default()
                };
                let clean = structured_pair(&base, &lex, &mut rng_for(seed), "c");
                let dirty = structured_pair(&SynthConfig { inject, ..base }, &lex, &mut rng_for(seed), "c");
                assert_eq!(clean.source_input, dirty.source_input);
                assert_eq!(clean.followup_input, dirty.followup_input);
                assert_eq!(clean.source_translation, dirty.source_translation);
                assert_eq!(clean.transformation, dirty.transformation);
                assert!(validate_pair(&dirty).is_empty());
                let gold = dirty.gold.as_ref().unwrap();
                assert_eq!(gold.violation, inject != Injection::None, "{kind} {inject:?}");
            }
        }
    }
}

#[test]
fn written_resources_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let lex = Lexicon::new(30);
    let paths = lex.write_resources(dir.path()).unwrap();
    let syn = load_synonyms(&paths.synonyms).unwrap();
    assert_eq!(syn.len(), lex.synonyms().len());
    let (vec, warnings) = load_vectors(&paths.vectors).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(vec.len(), lex.vectors().len());
    let stop = load_stopwords(&paths.stopwords).unwrap();
    assert_eq!(stop.len(), lex.stopwords().len());
}
