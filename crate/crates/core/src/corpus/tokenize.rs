use serde::{Deserialize, Serialize};

/// One token of a source string.
///
/// `char_start`/`char_end` are UTF-8 byte offsets into the source, so
/// `&source[char_start..char_end] == surface` always holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Lowercased, apostrophes folded to ASCII, surrounding punctuation
    /// stripped. Empty for punctuation and markdown markers.
    pub normalized: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    pub fn is_content(&self) -> bool {
        !self.normalized.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenizedText {
    pub tokens: Vec<Token>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn normalized(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.normalized.as_str()).collect()
    }

    /// Rebuilds the source from the surfaces and the whitespace between them.
    pub fn reconstruct(&self, source: &str) -> String {
        let mut out = String::with_capacity(source.len());
        let mut cursor = 0;
        for token in &self.tokens {
            out.push_str(&source[cursor..token.char_start]);
            out.push_str(&token.surface);
            cursor = token.char_end;
        }
        out.push_str(&source[cursor..]);
        out
    }
}

impl std::ops::Index<usize> for TokenizedText {
    type Output = Token;

    fn index(&self, index: usize) -> &Token {
        &self.tokens[index]
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Characters that stay inside a word when flanked by the right neighbours:
/// apostrophes and hyphens between alphanumerics, `.`/`,` between digits.
fn joins(prev: char, c: char, next: char) -> bool {
    if is_apostrophe(c) || c == '-' {
        prev.is_alphanumeric() && next.is_alphanumeric()
    } else if c == '.' || c == ',' {
        prev.is_ascii_digit() && next.is_ascii_digit()
    } else {
        false
    }
}

fn normalize_word(surface: &str) -> String {
    surface
        .trim_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Splits on whitespace and at punctuation boundaries.
///
/// Runs of `#` or `*` form a single marker token; every other punctuation
/// character is its own token. Punctuation and marker tokens carry an empty
/// normalized form.
pub fn tokenize(text: &str) -> TokenizedText {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        let is_word = c.is_alphanumeric();
        if is_word {
            while j < chars.len() {
                let cj = chars[j].1;
                if cj.is_alphanumeric() {
                    j += 1;
                } else if j + 1 < chars.len() && joins(chars[j - 1].1, cj, chars[j + 1].1) {
                    j += 2;
                } else {
                    break;
                }
            }
        } else if c == '#' || c == '*' {
            while j < chars.len() && chars[j].1 == c {
                j += 1;
            }
        }
        let surface = &text[start..end_of(j)];
        tokens.push(Token {
            surface: surface.to_string(),
            normalized: if is_word {
                normalize_word(surface)
            } else {
                String::new()
            },
            char_start: start,
            char_end: end_of(j),
        });
        i = j;
    }
    TokenizedText { tokens }
}
