use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizeMode {
    /// Lowercased runs of alphanumeric characters.
    Word,
    /// Chunks containing any CJK character become character bigrams over the
    /// whole chunk; other chunks become words.
    CjkBigram,
    /// Each chunk is split into CJK and non-CJK runs; CJK runs become
    /// bigrams and the rest become words.
    #[default]
    Auto,
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF       // hiragana, katakana
        | 0x31F0..=0x31FF     // katakana extensions
        | 0x3400..=0x4DBF     // CJK extension A
        | 0x4E00..=0x9FFF     // CJK unified ideographs
        | 0xF900..=0xFAFF     // compatibility ideographs
        | 0xFF66..=0xFF9F     // halfwidth katakana
        | 0x1100..=0x11FF     // hangul jamo
        | 0x3130..=0x318F     // hangul compatibility jamo
        | 0xAC00..=0xD7AF     // hangul syllables
        | 0x20000..=0x2FA1F) // supplementary ideographs
}

fn push_bigrams(chars: &[char], out: &mut Vec<String>) {
    if chars.len() == 1 {
        out.push(chars[0].to_string());
    } else {
        out.extend(chars.windows(2).map(|w| w.iter().collect::<String>()));
    }
}

fn chunks(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|s| !s.is_empty())
}

/// Splits `text` into terms according to `mode`.
pub fn tokenize(text: &str, mode: TokenizeMode) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in chunks(text) {
        let lower = chunk.to_lowercase();
        match mode {
            TokenizeMode::Word => out.push(lower),
            TokenizeMode::CjkBigram => {
                if lower.chars().any(is_cjk) {
                    let chars: Vec<char> = lower.chars().collect();
                    push_bigrams(&chars, &mut out);
                } else {
                    out.push(lower);
                }
            }
            TokenizeMode::Auto => {
                let chars: Vec<char> = lower.chars().collect();
                let mut start = 0;
                while start < chars.len() {
                    let cjk = is_cjk(chars[start]);
                    let mut end = start + 1;
                    while end < chars.len() && is_cjk(chars[end]) == cjk {
                        end += 1;
                    }
                    let run = &chars[start..end];
                    if cjk {
                        push_bigrams(run, &mut out);
                    } else {
                        out.push(run.iter().collect());
                    }
                    start = end;
                }
            }
        }
    }
    out
}

/// Tokenizer with an optional stop-word list (empty by default).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tokenizer {
    pub mode: TokenizeMode,
    #[serde(default)]
    pub stop_words: BTreeSet<String>,
}

impl Tokenizer {
    pub fn new(mode: TokenizeMode) -> Self {
        Self { mode, stop_words: BTreeSet::new() }
    }

    pub fn with_stop_words<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stop_words.extend(words.into_iter().map(|w| w.into().to_lowercase()));
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut terms = tokenize(text, self.mode);
        if !self.stop_words.is_empty() {
            terms.retain(|t| !self.stop_words.contains(t));
        }
        terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn words_are_lowercased() {
        assert_eq!(tokenize("Compiler design basics", TokenizeMode::Word), strs(&["compiler", "design", "basics"]));
        assert_eq!(
            tokenize("Signals, Systems & (Control)!", TokenizeMode::Word),
            strs(&["signals", "systems", "control"])
        );
    }

    #[test]
    fn empty_text() {
        for mode in [TokenizeMode::Word, TokenizeMode::CjkBigram, TokenizeMode::Auto] {
            assert!(tokenize("", mode).is_empty());
            assert!(tokenize("  ,. ", mode).is_empty());
        }
    }

    #[test]
    fn mixed_script_auto() {
        // hand-enumerated: 機械学習 -> 機械 械学 学習; C言語 -> c, 言語
        let got = tokenize("機械学習 Basics、C言語 入門", TokenizeMode::Auto);
        assert_eq!(got, strs(&["機械", "械学", "学習", "basics", "c", "言語", "入門"]));
    }

    #[test]
    fn mixed_script_bigram_chunks() {
        let got = tokenize("機械学習 Basics、C言語 入", TokenizeMode::CjkBigram);
        assert_eq!(got, strs(&["機械", "械学", "学習", "basics", "c言", "言語", "入"]));
    }

    #[test]
    fn word_mode_keeps_cjk_runs_whole() {
        assert_eq!(tokenize("機械学習 basics", TokenizeMode::Word), strs(&["機械学習", "basics"]));
    }

    #[test]
    fn stop_words_are_removed() {
        let t = Tokenizer::new(TokenizeMode::Word).with_stop_words(["The", "of"]);
        assert_eq!(t.tokenize("The theory of computation"), strs(&["theory", "computation"]));
    }
}
