use serde::{Deserialize, Serialize};

use super::RetrievalError;

/// Model-independent token estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum TokenizerConfig {
    /// `ceil(chars / chars_per_token)`, counting Unicode scalar values.
    CharsPerToken { chars_per_token: u32 },
    /// `ceil(words × factor)` over whitespace-separated words.
    WhitespaceWords { factor: f64 },
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self::CharsPerToken { chars_per_token: 4 }
    }
}

impl TokenizerConfig {
    pub fn chars_per_token(k: u32) -> Result<Self, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidTokenizer("chars_per_token must be > 0".into()));
        }
        Ok(Self::CharsPerToken { chars_per_token: k })
    }

    pub fn whitespace_words(factor: f64) -> Result<Self, RetrievalError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(RetrievalError::InvalidTokenizer(format!("word factor {factor} must be > 0")));
        }
        Ok(Self::WhitespaceWords { factor })
    }
}

pub fn estimate_tokens(text: &str, cfg: &TokenizerConfig) -> u64 {
    match *cfg {
        TokenizerConfig::CharsPerToken { chars_per_token } => {
            let chars = text.chars().count() as u64;
            chars.div_ceil(u64::from(chars_per_token.max(1)))
        }
        TokenizerConfig::WhitespaceWords { factor } => {
            let words = text.split_whitespace().count() as f64;
            (words * factor).ceil() as u64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DEFAULT: TokenizerConfig = TokenizerConfig::CharsPerToken { chars_per_token: 4 };

    #[test]
    fn ceiling_of_chars_over_four() {
        assert_eq!(estimate_tokens("", &DEFAULT), 0);
        assert_eq!(estimate_tokens(&"a".repeat(440), &DEFAULT), 110);
        assert_eq!(estimate_tokens(&"a".repeat(441), &DEFAULT), 111);
    }

    #[test]
    fn counts_characters_not_bytes() {
        assert_eq!(estimate_tokens("−−−−", &DEFAULT), 1);
        assert_eq!(estimate_tokens("καλό", &DEFAULT), 1);
    }

    #[test]
    fn word_strategy() {
        let cfg = TokenizerConfig::whitespace_words(1.3).unwrap();
        assert_eq!(estimate_tokens("one two  three\nfour", &cfg), 6);
        assert!(TokenizerConfig::whitespace_words(0.0).is_err());
        assert!(TokenizerConfig::chars_per_token(0).is_err());
    }

    proptest! {
        #[test]
        fn subadditive_under_concatenation(a in "\\PC{0,200}", b in "\\PC{0,200}", k in 1u32..9) {
            let cfg = TokenizerConfig::chars_per_token(k).unwrap();
            let joined = format!("{a}{b}");
            prop_assert!(estimate_tokens(&joined, &cfg) <= estimate_tokens(&a, &cfg) + estimate_tokens(&b, &cfg) + 1);
        }

        #[test]
        fn monotone_in_length(a in "\\PC{0,200}", extra in "\\PC{0,20}") {
            let longer = format!("{a}{extra}");
            prop_assert!(estimate_tokens(&a, &DEFAULT) <= estimate_tokens(&longer, &DEFAULT));
        }
    }
}
