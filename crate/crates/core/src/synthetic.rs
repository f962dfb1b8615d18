//! Generated three-class corpora with class-specific keywords and shared
//! noise words. Keyword sets are disjoint, so the classes are separable.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, Label, LabeledExample, SplitTag};

const HOPE: &[&str] = &[
    "hope", "faith", "joy", "peace", "courage", "kindness", "support", "inspire", "together",
    "strength", "bless", "heal", "dream", "smile", "grateful",
];
const NON_HOPE: &[&str] = &[
    "hate", "racist", "stupid", "disgust", "idiot", "trash", "liar", "corrupt", "shame", "pathetic",
    "evil", "ugly", "violent", "toxic", "fraud",
];
const NEUTRAL: &[&str] = &[
    "percent", "statistic", "census", "report", "survey", "figure", "data", "chart", "number",
    "source", "table", "sample", "average", "total", "ratio",
];
const NOISE: &[&str] = &[
    "video", "channel", "watch", "comment", "today", "world", "country", "year", "time", "topic",
    "question", "answer", "school", "city", "week",
];

fn keywords(label: Label) -> &'static [&'static str] {
    match label {
        Label::Hope => HOPE,
        Label::NonHope => NON_HOPE,
        Label::Neutral => NEUTRAL,
    }
}

fn sentence(label: Label, rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<&str> = Vec::new();
    for _ in 0..rng.gen_range(2..=4) {
        words.push(keywords(label).choose(rng).unwrap());
    }
    for _ in 0..rng.gen_range(2..=5) {
        words.push(NOISE.choose(rng).unwrap());
    }
    words.shuffle(rng);
    let mut text = words.join(" ");
    if rng.gen_bool(0.3) {
        text.push('!');
    }
    text
}

/// `per_class` examples of each label, interleaved, with ids `<prefix>-<n>`.
pub fn separable_corpus(per_class: usize, seed: u64, prefix: &str) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(per_class * 3);
    for i in 0..per_class {
        for label in Label::ALL {
            examples.push(LabeledExample {
                id: format!("{prefix}-{}", i * 3 + label.index()),
                text: sentence(label, &mut rng),
                label: Some(label),
            });
        }
    }
    Dataset {
        examples,
        split: SplitTag::Unsplit,
    }
}

/// Independent train and test corpora from distinct seeds.
pub fn separable_split(train_per_class: usize, test_per_class: usize, seed: u64) -> (Dataset, Dataset) {
    let mut train = separable_corpus(train_per_class, seed, "train");
    train.split = SplitTag::Train;
    let mut test = separable_corpus(test_per_class, seed.wrapping_add(1), "test");
    test.split = SplitTag::Test;
    (train, test)
}
