/// Instruction text of the English PVQ-RR, used for models that accept one.
pub const PVQRR_INSTRUCTION: &str = "Here we briefly describe different people. Please read each description and think about how much that person is or is not like you. Put an X in the box to the right that shows how much the person described is like you.";

/// Instruction-tuned embedding models conventionally take the instruction
/// and the text in one input string.
pub const DEFAULT_INPUT_TEMPLATE: &str = "Instruct: {prompt}\nQuery: {text}";

/// Builds the string sent to the endpoint for one item.
pub fn compose_input(template: &str, prompt: Option<&str>, text: &str) -> String {
    match prompt {
        Some(p) => template.replace("{prompt}", p).replace("{text}", text),
        None => text.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_prompt_sends_the_bare_text() {
        assert_eq!(compose_input(DEFAULT_INPUT_TEMPLATE, None, "item"), "item");
    }

    #[test]
    fn prompt_is_substituted() {
        let s = compose_input(DEFAULT_INPUT_TEMPLATE, Some("describe"), "item");
        assert_eq!(s, "Instruct: describe\nQuery: item");
    }
}
