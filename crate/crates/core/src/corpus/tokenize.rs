use icu_properties::props::{GeneralCategory, GeneralCategoryGroup, Script};
use icu_properties::CodePointMapData;

/// Splits text into lowercase word tokens.
///
/// Letters, marks and digits form words; everything else is a boundary.
/// Han, Hiragana and Katakana characters become one token each. Characters
/// that are still uppercase after lowercasing (they have no lowercase form)
/// are treated as boundaries so that no token carries an uppercase letter.
pub fn tokenize(text: &str) -> Vec<String> {
    let categories = CodePointMapData::<GeneralCategory>::new();
    let scripts = CodePointMapData::<Script>::new();
    let word_group = GeneralCategoryGroup::Letter
        .union(GeneralCategoryGroup::Mark)
        .union(GeneralCategoryGroup::Number);

    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in lowered.chars() {
        if c.is_ascii_alphanumeric() {
            current.push(c);
            continue;
        }
        if c.is_ascii() || c.is_uppercase() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if matches!(
            scripts.get(c),
            Script::Han | Script::Hiragana | Script::Katakana
        ) && !GeneralCategoryGroup::Mark.contains(categories.get(c))
        {
            flush(&mut current, &mut tokens);
            tokens.push(c.to_string());
        } else if word_group.contains(categories.get(c)) {
            current.push(c);
        } else {
            flush(&mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}
