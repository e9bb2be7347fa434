//! Deterministic synthetic protocol corpus for smoke tests and demos.
//!
//! Every entity type draws from its own phrase lexicon, disjoint from filler
//! vocabulary and from every other type, so a tagger trained on the output can
//! memorize it. Document `i` always contains an entity of type `i % T`, which
//! guarantees full type coverage once `n_docs` reaches the number of types.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scheme::LabelScheme;

use super::{Document, Sentence, Token};

const FILLER: &[&str] = &[
    "the", "a", "an", "of", "to", "into", "with", "and", "then", "at", "for", "from", "on", "in",
    "each", "until", "next", "once", "twice", "well",
];

const ACTION: &[&[&str]] = &[
    &["dissect"],
    &["mix"],
    &["add"],
    &["transfer"],
    &["incubate"],
    &["aspirate"],
    &["resuspend"],
];
const REAGENT: &[&[&str]] = &[
    &["host", "culture"],
    &["lysis", "buffer"],
    &["ethanol"],
    &["trypsin"],
    &["agarose"],
    &["dNTP", "mix9"],
];
const LOCATION: &[&[&str]] = &[
    &["ice"],
    &["benchtop"],
    &["fume", "hood"],
    &["freezer"],
    &["waterbath"],
];
const AMOUNT: &[&[&str]] = &[
    &["5", "mL"],
    &["12", "mL"],
    &["250", "uL"],
    &["3", "g"],
    &["40", "ng"],
];
const MODIFIER: &[&[&str]] = &[
    &["gently"],
    &["carefully"],
    &["vigorously"],
    &["fresh"],
    &["sterile"],
];
const TIME: &[&[&str]] = &[
    &["10", "min"],
    &["45", "sec"],
    &["2", "hours"],
    &["overnight"],
];
const DEVICE: &[&[&str]] = &[
    &["thermocycler"],
    &["spectrophotometer"],
    &["microscope"],
    &["shaker"],
];
const TEMPERATURE: &[&[&str]] = &[
    &["37", "degC"],
    &["95", "degC"],
    &["-20", "degC"],
    &["room", "temperature"],
];
const METHOD: &[&[&str]] = &[
    &["PCR"],
    &["electrophoresis"],
    &["titration"],
    &["blotting"],
    &["sonication"],
];
const SPEED: &[&[&str]] = &[&["14000", "rpm"], &["600", "rcf"], &["maximum", "speed"]];
const NUMERICAL: &[&[&str]] = &[&["6"], &["24"], &["96"]];
const CONCENTRATION: &[&[&str]] = &[&["10x"], &["1M"], &["70%"], &["0.5M"]];
const SIZE: &[&[&str]] = &[&["1.5", "mm"], &["30", "cm"], &["0.2", "um"]];
const GENERIC_MEASURE: &[&[&str]] = &[&["8", "units"], &["3", "folds"], &["20", "lumens"]];
const SEAL: &[&[&str]] = &[&["parafilm"], &["foil"], &["cap"], &["lid"]];
const MEASURE_TYPE: &[&[&str]] = &[&["volume"], &["mass"], &["density"], &["weight"]];
const PH: &[&[&str]] = &[&["pH", "7.4"], &["pH", "5.0"], &["pH", "8.3"]];
const MENTION: &[&[&str]] = &[&["it"], &["them"], &["this"], &["these"]];

fn builtin_lexicon(type_name: &str) -> Option<&'static [&'static [&'static str]]> {
    Some(match type_name {
        "Action" => ACTION,
        "Reagent" => REAGENT,
        "Location" => LOCATION,
        "Amount" => AMOUNT,
        "Modifier" => MODIFIER,
        "Time" => TIME,
        "Device" => DEVICE,
        "Temperature" => TEMPERATURE,
        "Method" => METHOD,
        "Speed" => SPEED,
        "Numerical" => NUMERICAL,
        "Concentration" => CONCENTRATION,
        "Size" => SIZE,
        "Generic-Measure" => GENERIC_MEASURE,
        "Seal" => SEAL,
        "Measure-Type" => MEASURE_TYPE,
        "pH" => PH,
        "Mention" => MENTION,
        _ => return None,
    })
}

fn lexicons(scheme: &LabelScheme) -> Vec<Vec<Vec<String>>> {
    (0..scheme.num_types())
        .map(|t| {
            let name = scheme.type_name(t);
            if let Some(lex) = builtin_lexicon(name) {
                lex.iter()
                    .map(|phrase| phrase.iter().map(|w| w.to_string()).collect())
                    .collect()
            } else {
                let stem: String = name
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_lowercase();
                (0..5)
                    .map(|k| {
                        (0..1 + k % 2)
                            .map(|p| format!("{stem}{t}w{k}p{p}"))
                            .collect()
                    })
                    .collect()
            }
        })
        .collect()
}

/// Generate `n_docs` synthetic documents under `scheme`, deterministically
/// from `seed`. Gold tags are always BIO-valid.
pub fn generate_synthetic(seed: u64, n_docs: usize, scheme: &LabelScheme) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicons = lexicons(scheme);
    let width = n_docs.to_string().len().max(4);
    let mut docs = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let n_sentences = rng.random_range(2..=6);
        let mut sentences = Vec::with_capacity(n_sentences);
        for s in 0..n_sentences {
            let mut tokens = Vec::new();
            let n_entities = rng.random_range(1..=3);
            for e in 0..n_entities {
                push_filler(&mut tokens, &mut rng, 1, 3);
                let t = if s == 0 && e == 0 {
                    i % scheme.num_types()
                } else {
                    rng.random_range(0..scheme.num_types())
                };
                let phrase = lexicons[t]
                    .choose(&mut rng)
                    .expect("lexicons are non-empty");
                for (p, word) in phrase.iter().enumerate() {
                    let tag = if p == 0 {
                        scheme.begin_tag(t)
                    } else {
                        scheme.inside_tag(t)
                    };
                    tokens.push(Token::tagged(word, scheme.tag_name(tag)));
                }
            }
            push_filler(&mut tokens, &mut rng, 1, 2);
            sentences.push(Sentence::new(tokens));
        }
        docs.push(Document::new(format!("synthetic-{i:0width$}"), sentences));
    }
    docs
}

fn push_filler(tokens: &mut Vec<Token>, rng: &mut ChaCha8Rng, lo: usize, hi: usize) {
    for _ in 0..rng.random_range(lo..=hi) {
        let word = FILLER.choose(rng).expect("filler is non-empty");
        tokens.push(Token::tagged(*word, "O"));
    }
}
