/// Lowercases, drops punctuation (hyphens survive between word characters)
/// and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|word| {
            let chars: Vec<char> = word.chars().collect();
            let mut out = String::with_capacity(word.len());
            for (i, &c) in chars.iter().enumerate() {
                if c.is_alphanumeric() {
                    out.extend(c.to_lowercase());
                } else if c == '-'
                    && i > 0
                    && chars[i - 1].is_alphanumeric()
                    && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
                {
                    out.push('-');
                }
            }
            (!out.is_empty()).then_some(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::tokenize;

    #[test]
    fn examples() {
        assert_eq!(tokenize("Midsummer to Autumn"), ["midsummer", "to", "autumn"]);
        assert_eq!(tokenize("i spilled tea!!"), ["i", "spilled", "tea"]);
        assert_eq!(tokenize("mango and grapefruit"), ["mango", "and", "grapefruit"]);
    }

    #[test]
    fn hyphens_only_inside_words() {
        assert_eq!(tokenize("blue-green -- sea- -foam"), ["blue-green", "sea", "foam"]);
    }

    #[test]
    fn punctuation_only_is_empty() {
        assert!(tokenize("  ?! ... ").is_empty());
    }
}
