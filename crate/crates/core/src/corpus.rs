//! Example programs shipped with the library.

pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! examples {
    ($($name:literal),* $(,)?) => {
        &[$(Example {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".pb")),
        }),*]
    };
}

pub const EXAMPLES: &[Example] = examples![
    "discrete4",
    "luhn-2",
    "luhn-4",
    "luhn-9",
    "gcd-small",
    "triangle-small",
    "beta-single",
    "beta-missing",
    "survey-network",
];

pub fn get(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}
