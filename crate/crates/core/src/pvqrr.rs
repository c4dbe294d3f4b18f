//! Built-in dimension catalog and scoring key of the Revised Portrait Value
//! Questionnaire (57 items, 19 values, 3 items each).
//!
//! Item texts are not shipped; [`skeleton`] produces a spec with empty texts
//! for the user to fill in.

use serde_json::{json, Value};

/// (code, name, item numbers)
pub const DIMENSIONS: [(&str, &str, [u8; 3]); 19] = [
    ("SDT", "Self-direction Thought", [1, 23, 39]),
    ("SDA", "Self-direction Action", [16, 30, 56]),
    ("ST", "Stimulation", [10, 28, 43]),
    ("HE", "Hedonism", [3, 36, 46]),
    ("AC", "Achievement", [17, 32, 48]),
    ("POD", "Power Dominance", [6, 29, 41]),
    ("POR", "Power Resources", [12, 20, 44]),
    ("SEP", "Security Personal", [13, 26, 53]),
    ("SES", "Security Societal", [2, 35, 50]),
    ("TR", "Tradition", [18, 33, 40]),
    ("COR", "Conformity Rules", [15, 31, 42]),
    ("COI", "Conformity Interpersonal", [4, 22, 51]),
    ("HUM", "Humility", [7, 38, 54]),
    ("BEC", "Benevolence Caring", [11, 25, 47]),
    ("BED", "Benevolence Dependability", [19, 27, 55]),
    ("UNC", "Universalism Concern", [5, 37, 52]),
    ("UNN", "Universalism Nature", [8, 21, 45]),
    ("UNT", "Universalism Tolerance", [14, 34, 57]),
    ("FAC", "Face", [9, 24, 49]),
];

pub const VARIANTS: [&str; 2] = ["female", "male"];

pub fn codes() -> Vec<String> {
    DIMENSIONS.iter().map(|(c, _, _)| c.to_string()).collect()
}

pub fn item_id(number: u8) -> String {
    format!("pvq{number:02}")
}

/// Spec template in item-number order, with empty gendered texts.
pub fn skeleton() -> Value {
    let mut items: Vec<(u8, &str)> = DIMENSIONS
        .iter()
        .flat_map(|(code, _, nums)| nums.iter().map(move |&n| (n, *code)))
        .collect();
    items.sort();
    json!({
        "dimensions": DIMENSIONS.iter().map(|(c, n, _)| json!({"code": c, "name": n})).collect::<Vec<_>>(),
        "items": items.iter().map(|(n, c)| json!({
            "id": item_id(*n),
            "dimension": c,
            "texts": {"female": "", "male": ""},
        })).collect::<Vec<_>>(),
    })
}
