//! Static program features from C sources.
//!
//! A tokenizer plus a brace-matching structural pass stand in for a full C
//! parser: enough to find file-scope variables, function bodies, call sites
//! and loop headers on preprocessed `.i` files and plain `.c` files without
//! choking on anything. All counting rules are deterministic functions of
//! the token stream.

use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Number of program features.
pub const FEATURE_COUNT: usize = 11;

/// Contribution of a loop whose trip count cannot be determined statically.
pub const LOOP_SENTINEL: u64 = 1_000_000;

/// The 11-dimensional static feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProgramFeatures {
    pub threads_created: u64,
    pub threads_joined: u64,
    pub mutex_locks: u64,
    pub atomic_locks: u64,
    pub global_var_accesses: u64,
    pub global_fn_calls: u64,
    pub binary_operators: u64,
    pub nondet_variables: u64,
    pub min_global_var_access: u64,
    pub min_global_fn_calls: u64,
    pub loop_iterations: u64,
}

impl ProgramFeatures {
    /// Field names in vector order.
    pub const FIELD_NAMES: [&'static str; FEATURE_COUNT] = [
        "threads_created",
        "threads_joined",
        "mutex_locks",
        "atomic_locks",
        "global_var_accesses",
        "global_fn_calls",
        "binary_operators",
        "nondet_variables",
        "min_global_var_access",
        "min_global_fn_calls",
        "loop_iterations",
    ];

    pub fn to_vector(&self) -> [f64; FEATURE_COUNT] {
        [
            self.threads_created as f64,
            self.threads_joined as f64,
            self.mutex_locks as f64,
            self.atomic_locks as f64,
            self.global_var_accesses as f64,
            self.global_fn_calls as f64,
            self.binary_operators as f64,
            self.nondet_variables as f64,
            self.min_global_var_access as f64,
            self.min_global_fn_calls as f64,
            self.loop_iterations as f64,
        ]
    }

    pub fn values(&self) -> [u64; FEATURE_COUNT] {
        [
            self.threads_created,
            self.threads_joined,
            self.mutex_locks,
            self.atomic_locks,
            self.global_var_accesses,
            self.global_fn_calls,
            self.binary_operators,
            self.nondet_variables,
            self.min_global_var_access,
            self.min_global_fn_calls,
            self.loop_iterations,
        ]
    }

    /// One-line record with keys in field order, as printed by the
    /// `extract` subcommand.
    pub fn to_json_line(&self) -> String {
        let pairs: Vec<String> = Self::FIELD_NAMES
            .iter()
            .zip(self.values())
            .map(|(name, value)| format!("\"{name}\":{value}"))
            .collect();
        format!("{{{}}}", pairs.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offset in the comment/preprocessor-masked source.
    pub pos: usize,
}

/// Half-open token-index range of a function body, braces excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenRange {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseWarning {
    /// Brace depth went negative or ended nonzero; structural analysis
    /// degraded to whole-file scanning.
    UnbalancedBraces,
}

/// Token-level structural view of one source file.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub path: String,
    pub tokens: Vec<Token>,
    /// Identifiers declared at file scope, excluding functions and typedefs.
    pub file_scope_vars: BTreeSet<String>,
    /// Function name to body token range.
    pub function_defs: BTreeMap<String, TokenRange>,
    pub warnings: Vec<ParseWarning>,
}

impl SourceUnit {
    pub fn is_degraded(&self) -> bool {
        self.warnings.contains(&ParseWarning::UnbalancedBraces)
    }
}

/// Names treated as concurrency/verification intrinsics when counting.
#[derive(Debug, Clone)]
pub struct IntrinsicNames {
    pub thread_create: BTreeSet<String>,
    pub thread_join: BTreeSet<String>,
    pub mutex_lock: BTreeSet<String>,
    pub atomic_begin: BTreeSet<String>,
    /// Any called function with this prefix marks an atomic section.
    pub atomic_prefix: String,
    /// Any called function with this prefix yields a nondeterministic value.
    pub nondet_prefix: String,
}

impl Default for IntrinsicNames {
    fn default() -> Self {
        let set = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
        IntrinsicNames {
            thread_create: set(&["pthread_create"]),
            thread_join: set(&["pthread_join"]),
            mutex_lock: set(&["pthread_mutex_lock", "pthread_mutex_trylock"]),
            atomic_begin: set(&["__VERIFIER_atomic_begin"]),
            atomic_prefix: "__VERIFIER_atomic_".to_string(),
            nondet_prefix: "__VERIFIER_nondet".to_string(),
        }
    }
}

impl IntrinsicNames {
    fn is_atomic_marker(&self, name: &str) -> bool {
        self.atomic_begin.contains(name) || name.starts_with(&self.atomic_prefix)
    }
}

const C_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Atomic",
    "_Bool",
    "_Noreturn",
    "_Thread_local",
    "_Alignas",
    "_Alignof",
    "_Static_assert",
    "_Generic",
    "_Complex",
    "_Imaginary",
];

fn is_keyword(name: &str) -> bool {
    C_KEYWORDS.contains(&name)
}

// ---------------------------------------------------------------------------
// Masking and tokenization
// ---------------------------------------------------------------------------

/// Replace comments with spaces (newlines kept), leaving everything else,
/// including string contents, untouched.
fn mask_comments(text: &str) -> String {
    #[derive(PartialEq)]
    enum State {
        Normal,
        Line,
        Block,
        Str,
        Chr,
    }
    let mut out = String::with_capacity(text.len());
    let mut state = State::Normal;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match state {
            State::Normal => match c {
                '/' if chars.peek() == Some(&'/') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::Line;
                }
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::Block;
                }
                '"' => {
                    out.push(c);
                    state = State::Str;
                }
                '\'' => {
                    out.push(c);
                    state = State::Chr;
                }
                _ => out.push(c),
            },
            State::Line => {
                if c == '\n' {
                    out.push(c);
                    state = State::Normal;
                } else {
                    out.push(' ');
                }
            }
            State::Block => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    out.push_str("  ");
                    state = State::Normal;
                } else if c == '\n' {
                    out.push(c);
                } else {
                    out.push(' ');
                }
            }
            State::Str | State::Chr => {
                out.push(c);
                if c == '\\' {
                    if let Some(escaped) = chars.next() {
                        out.push(escaped);
                    }
                } else if (c == '"' && state == State::Str)
                    || (c == '\'' && state == State::Chr)
                    || c == '\n'
                {
                    // Newline closes an unterminated literal; stay tolerant.
                    state = State::Normal;
                }
            }
        }
    }
    out
}

/// Blank preprocessor lines (first non-space character `#`), honoring
/// backslash line continuations. Operates on comment-masked text.
fn mask_preprocessor(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut continued = false;
    for line in text.split_inclusive('\n') {
        let body = line.strip_suffix('\n').unwrap_or(line);
        let is_directive = continued || body.trim_start().starts_with('#');
        if is_directive {
            out.extend(std::iter::repeat_n(' ', body.chars().count()));
            if line.ends_with('\n') {
                out.push('\n');
            }
            continued = body.trim_end().ends_with('\\');
        } else {
            out.push_str(line);
            continued = false;
        }
    }
    out
}

const THREE_CHAR_OPS: &[&str] = &["<<=", ">>=", "..."];
const TWO_CHAR_OPS: &[&str] = &[
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=",
];

fn tokenize(masked: &str) -> Vec<Token> {
    let bytes = masked.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let n = bytes.len();
    let is_ident_start = |b: u8| b == b'_' || b.is_ascii_alphabetic();
    let is_ident_cont = |b: u8| b == b'_' || b.is_ascii_alphanumeric();
    while i < n {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if is_ident_start(b) {
            while i < n && is_ident_cont(bytes[i]) {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident,
                text: masked[start..i].to_string(),
                pos: start,
            });
        } else if b.is_ascii_digit() || (b == b'.' && i + 1 < n && bytes[i + 1].is_ascii_digit()) {
            i += 1;
            while i < n {
                let c = bytes[i];
                let exponent_sign =
                    (c == b'+' || c == b'-') && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P');
                if is_ident_cont(c) || c == b'.' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text: masked[start..i].to_string(),
                pos: start,
            });
        } else if b == b'"' || b == b'\'' {
            let quote = b;
            i += 1;
            while i < n {
                let c = bytes[i];
                if c == b'\\' {
                    i += 2;
                } else if c == quote || c == b'\n' {
                    i += 1;
                    break;
                } else {
                    i += 1;
                }
            }
            i = i.min(n);
            while i < n && !masked.is_char_boundary(i) {
                i += 1;
            }
            tokens.push(Token {
                kind: if quote == b'"' {
                    TokenKind::Str
                } else {
                    TokenKind::Char
                },
                text: masked[start..i].to_string(),
                pos: start,
            });
        } else {
            let rest = &masked[i..];
            let op_len = THREE_CHAR_OPS
                .iter()
                .find(|op| rest.starts_with(**op))
                .map(|op| op.len())
                .or_else(|| {
                    TWO_CHAR_OPS
                        .iter()
                        .find(|op| rest.starts_with(**op))
                        .map(|op| op.len())
                })
                .unwrap_or_else(|| masked[i..].chars().next().map_or(1, char::len_utf8));
            i += op_len;
            tokens.push(Token {
                kind: TokenKind::Punct,
                text: masked[start..i].to_string(),
                pos: start,
            });
        }
    }
    tokens
}

// ---------------------------------------------------------------------------
// Structural pass
// ---------------------------------------------------------------------------

/// Matching close-brace index for every open brace, or None if unbalanced.
fn match_braces(tokens: &[Token]) -> Option<HashMap<usize, usize>> {
    let mut stack = Vec::new();
    let mut matches = HashMap::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "{" => stack.push(i),
                "}" => {
                    let open = stack.pop()?;
                    matches.insert(open, i);
                }
                _ => {}
            }
        }
    }
    stack.is_empty().then_some(matches)
}

/// If the declaration tokens so far end with `name ( ... )`, return the name
/// token index. Trailing `__attribute__ ((...))` style groups are skipped.
fn function_header_name(tokens: &[Token], decl: &[usize]) -> Option<usize> {
    let mut end = decl.len();
    loop {
        if end == 0 {
            return None;
        }
        // Walk back over one balanced paren group.
        if tokens[decl[end - 1]].text != ")" {
            return None;
        }
        let mut depth = 0i32;
        let mut i = end;
        let open = loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            match tokens[decl[i]].text.as_str() {
                ")" => depth += 1,
                "(" => {
                    depth -= 1;
                    if depth == 0 {
                        break i;
                    }
                }
                _ => {}
            }
        };
        if open == 0 {
            return None;
        }
        let before = tokens[decl[open - 1]].clone();
        if before.kind == TokenKind::Ident && !is_keyword(&before.text) {
            if before.text == "__attribute__" || before.text == "__asm__" || before.text == "asm" {
                // Skip the annotation and its group, keep looking.
                end = open - 1;
                continue;
            }
            return Some(decl[open - 1]);
        }
        return None;
    }
}

/// Record declared variable names from one top-level declaration.
fn collect_declared_vars(tokens: &[Token], decl: &[usize], vars: &mut BTreeSet<String>) {
    if decl.is_empty() {
        return;
    }
    let first = &tokens[decl[0]];
    if first.kind == TokenKind::Ident && first.text == "typedef" {
        return;
    }
    // Split into declarator fragments at top-level commas.
    let mut fragments: Vec<Vec<usize>> = vec![Vec::new()];
    let mut paren_depth = 0i32;
    let mut bracket_depth = 0i32;
    for &idx in decl {
        match tokens[idx].text.as_str() {
            "(" => paren_depth += 1,
            ")" => paren_depth -= 1,
            "[" => bracket_depth += 1,
            "]" => bracket_depth -= 1,
            "," if paren_depth == 0 && bracket_depth == 0 => {
                fragments.push(Vec::new());
                continue;
            }
            _ => {}
        }
        fragments.last_mut().unwrap().push(idx);
    }
    for fragment in &fragments {
        // Keep only the declarator part: cut at `=`, then at `[`.
        let mut end = fragment.len();
        let mut paren_depth = 0i32;
        for (i, &idx) in fragment.iter().enumerate() {
            match tokens[idx].text.as_str() {
                "(" => paren_depth += 1,
                ")" => paren_depth -= 1,
                "=" if paren_depth == 0 => {
                    end = i;
                    break;
                }
                _ => {}
            }
        }
        let mut paren_depth = 0i32;
        for (i, &idx) in fragment[..end].iter().enumerate() {
            match tokens[idx].text.as_str() {
                "(" => paren_depth += 1,
                ")" => paren_depth -= 1,
                "[" if paren_depth == 0 => {
                    end = i;
                    break;
                }
                _ => {}
            }
        }
        let declarator = &fragment[..end];
        if declarator.is_empty() {
            continue;
        }
        // A declarator ending in `)` is a prototype or function-pointer
        // declaration, not a variable.
        if tokens[*declarator.last().unwrap()].text == ")" {
            continue;
        }
        // Last identifier at paren depth 0 names the variable.
        let mut paren_depth = 0i32;
        let mut candidate: Option<usize> = None;
        for (i, &idx) in declarator.iter().enumerate() {
            let t = &tokens[idx];
            match t.text.as_str() {
                "(" => paren_depth += 1,
                ")" => paren_depth -= 1,
                _ => {
                    if paren_depth == 0 && t.kind == TokenKind::Ident && !is_keyword(&t.text) {
                        candidate = Some(i);
                    }
                }
            }
        }
        if let Some(i) = candidate {
            // A name directly after struct/union/enum is a tag, not a variable.
            if i > 0 {
                let prev = &tokens[declarator[i - 1]];
                if matches!(prev.text.as_str(), "struct" | "union" | "enum") {
                    continue;
                }
            }
            vars.insert(tokens[declarator[i]].text.clone());
        }
    }
}

/// Parse a C source string into its structural view.
///
/// Comments and preprocessor lines are stripped before tokenization; string
/// and character literals are single opaque tokens. Unbalanced braces are a
/// warning, not a failure: the unit keeps its tokens and degrades to
/// whole-file scanning with no file-scope information.
pub fn parse_source(text: &str) -> SourceUnit {
    parse_source_named(text, "<input>")
}

pub fn parse_source_named(text: &str, path: &str) -> SourceUnit {
    let masked = mask_preprocessor(&mask_comments(text));
    let tokens = tokenize(&masked);
    let mut unit = SourceUnit {
        path: path.to_string(),
        tokens,
        file_scope_vars: BTreeSet::new(),
        function_defs: BTreeMap::new(),
        warnings: Vec::new(),
    };
    let Some(brace_match) = match_braces(&unit.tokens) else {
        unit.warnings.push(ParseWarning::UnbalancedBraces);
        return unit;
    };

    let mut decl: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < unit.tokens.len() {
        let t = &unit.tokens[i];
        match (t.kind, t.text.as_str()) {
            (TokenKind::Punct, "{") => {
                let close = brace_match[&i];
                if let Some(name_idx) = function_header_name(&unit.tokens, &decl) {
                    let name = unit.tokens[name_idx].text.clone();
                    unit.function_defs.entry(name).or_insert(TokenRange {
                        start: i + 1,
                        end: close,
                    });
                    decl.clear();
                } else {
                    // Struct/union/enum body or initializer braces: keep the
                    // open brace as an opaque marker in the declaration.
                    decl.push(i);
                }
                i = close + 1;
            }
            (TokenKind::Punct, ";") => {
                collect_declared_vars(&unit.tokens, &decl, &mut unit.file_scope_vars);
                decl.clear();
                i += 1;
            }
            _ => {
                decl.push(i);
                i += 1;
            }
        }
    }
    unit
}

/// Read and parse a file, decoding lossily.
pub fn parse_file(path: &std::path::Path) -> std::io::Result<SourceUnit> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(parse_source_named(&text, &path.display().to_string()))
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

const BINARY_OPS: &[&str] = &[
    "+", "-", "*", "/", "%", "<<", ">>", "&", "|", "^", "&&", "||", "<", ">", "<=", ">=", "==",
    "!=",
];

/// An operator token is in expression position when the previous token can
/// end an expression. This is the classic lexer disambiguation for `*`, `&`
/// and unary minus.
fn prev_ends_expression(prev: &Token) -> bool {
    match prev.kind {
        TokenKind::Ident => !is_keyword(&prev.text),
        TokenKind::Number | TokenKind::Str | TokenKind::Char => true,
        TokenKind::Punct => prev.text == ")" || prev.text == "]",
    }
}

fn count_binary_operators(tokens: &[Token]) -> u64 {
    let mut count = 0;
    for i in 1..tokens.len() {
        let t = &tokens[i];
        if t.kind == TokenKind::Punct
            && BINARY_OPS.contains(&t.text.as_str())
            && prev_ends_expression(&tokens[i - 1])
        {
            count += 1;
        }
    }
    count
}

fn parse_int_literal(text: &str) -> Option<i128> {
    let trimmed = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if trimmed.is_empty() {
        return None;
    }
    if let Some(hex) = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
    {
        return i128::from_str_radix(hex, 16).ok();
    }
    if trimmed.len() > 1 && trimmed.starts_with('0') && trimmed.bytes().all(|b| b.is_ascii_digit())
    {
        return i128::from_str_radix(&trimmed[1..], 8).ok();
    }
    trimmed.parse().ok()
}

/// Cursor over the tokens inside a `for(...)` header.
struct HeaderCursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn ident(&mut self) -> Option<&'a str> {
        let t = self.tokens.get(self.pos)?;
        if t.kind == TokenKind::Ident && !is_keyword(&t.text) {
            self.pos += 1;
            Some(&t.text)
        } else {
            None
        }
    }

    fn punct(&mut self, text: &str) -> Option<()> {
        let t = self.tokens.get(self.pos)?;
        if t.kind == TokenKind::Punct && t.text == text {
            self.pos += 1;
            Some(())
        } else {
            None
        }
    }

    fn punct_of(&mut self, options: &[&str]) -> Option<&'a str> {
        let t = self.tokens.get(self.pos)?;
        if t.kind == TokenKind::Punct && options.contains(&t.text.as_str()) {
            self.pos += 1;
            Some(&t.text)
        } else {
            None
        }
    }

    fn int_literal(&mut self) -> Option<i128> {
        let mut sign = 1i128;
        if let Some(t) = self.tokens.get(self.pos) {
            if t.kind == TokenKind::Punct && (t.text == "-" || t.text == "+") {
                if t.text == "-" {
                    sign = -1;
                }
                self.pos += 1;
            }
        }
        let t = self.tokens.get(self.pos)?;
        if t.kind == TokenKind::Number {
            let value = parse_int_literal(&t.text)?;
            self.pos += 1;
            Some(sign * value)
        } else {
            None
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.tokens.len()
    }
}

/// Trip count of one `for` header of the exact shape
/// `for (i = C0; i REL C1; STEP)`, or None when the shape does not match.
fn for_trip_count(header: &[Token]) -> Option<u64> {
    let mut cur = HeaderCursor {
        tokens: header,
        pos: 0,
    };
    let var = cur.ident()?;
    cur.punct("=")?;
    let start = cur.int_literal()?;
    cur.punct(";")?;
    let cond_var = cur.ident()?;
    if cond_var != var {
        return None;
    }
    let rel = cur.punct_of(&["<", "<=", ">", ">=", "!="])?;
    let limit = cur.int_literal()?;
    cur.punct(";")?;
    // Step: i++ / ++i / i-- / --i / i += C / i -= C
    let step: i128 = if cur.punct("++").is_some() {
        let v = cur.ident()?;
        if v != var {
            return None;
        }
        1
    } else if cur.punct("--").is_some() {
        let v = cur.ident()?;
        if v != var {
            return None;
        }
        -1
    } else {
        let v = cur.ident()?;
        if v != var {
            return None;
        }
        if cur.punct("++").is_some() {
            1
        } else if cur.punct("--").is_some() {
            -1
        } else if cur.punct("+=").is_some() {
            cur.int_literal()?
        } else if cur.punct("-=").is_some() {
            -cur.int_literal()?
        } else {
            return None;
        }
    };
    if !cur.at_end() {
        return None;
    }
    Some(trip_count(start, rel, limit, step))
}

fn trip_count(start: i128, rel: &str, limit: i128, step: i128) -> u64 {
    if step == 0 {
        return LOOP_SENTINEL;
    }
    let ceil_div = |a: i128, b: i128| -> u64 {
        // a >= 0, b > 0
        ((a + b - 1) / b) as u64
    };
    match rel {
        "<" => {
            if start >= limit {
                0
            } else if step > 0 {
                ceil_div(limit - start, step)
            } else {
                LOOP_SENTINEL
            }
        }
        "<=" => {
            if start > limit {
                0
            } else if step > 0 {
                ((limit - start) / step + 1) as u64
            } else {
                LOOP_SENTINEL
            }
        }
        ">" => {
            if start <= limit {
                0
            } else if step < 0 {
                ceil_div(start - limit, -step)
            } else {
                LOOP_SENTINEL
            }
        }
        ">=" => {
            if start < limit {
                0
            } else if step < 0 {
                ((start - limit) / -step + 1) as u64
            } else {
                LOOP_SENTINEL
            }
        }
        "!=" => {
            if start == limit {
                0
            } else if step > 0 && limit > start && (limit - start) % step == 0 {
                ((limit - start) / step) as u64
            } else if step < 0 && limit < start && (start - limit) % -step == 0 {
                ((start - limit) / -step) as u64
            } else {
                LOOP_SENTINEL
            }
        }
        _ => LOOP_SENTINEL,
    }
}

/// Sum of statically determined loop trip counts over the whole token
/// stream, with the sentinel for anything unbounded or unrecognized.
fn count_loop_iterations(tokens: &[Token]) -> u64 {
    let mut total: u64 = 0;
    let mut brace_depth = 0i64;
    let mut do_depths: Vec<i64> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        match (t.kind, t.text.as_str()) {
            (TokenKind::Punct, "{") => brace_depth += 1,
            (TokenKind::Punct, "}") => brace_depth -= 1,
            (TokenKind::Ident, "do") => {
                total = total.saturating_add(LOOP_SENTINEL);
                do_depths.push(brace_depth);
            }
            (TokenKind::Ident, "while") => {
                if do_depths.last() == Some(&brace_depth) {
                    // Tail of a do-while; the `do` already counted.
                    do_depths.pop();
                } else {
                    total = total.saturating_add(LOOP_SENTINEL);
                }
            }
            (TokenKind::Ident, "for") => {
                let contribution = for_header(tokens, i)
                    .and_then(|(header, after)| {
                        let count = for_trip_count(header);
                        i = after - 1; // resume after the header
                        count
                    })
                    .unwrap_or(LOOP_SENTINEL);
                total = total.saturating_add(contribution);
            }
            _ => {}
        }
        i += 1;
    }
    total
}

/// Tokens strictly inside the parens of `for (...)` starting at `for_idx`,
/// plus the index just past the closing paren.
fn for_header(tokens: &[Token], for_idx: usize) -> Option<(&[Token], usize)> {
    let open = for_idx + 1;
    if tokens.get(open).map(|t| t.text.as_str()) != Some("(") {
        return None;
    }
    let mut depth = 0i32;
    for (j, t) in tokens.iter().enumerate().skip(open) {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some((&tokens[open + 1..j], j + 1));
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// Call sites (callee name, one entry per site) within the given ranges.
fn call_sites<'a>(tokens: &'a [Token], ranges: &[TokenRange]) -> Vec<&'a str> {
    let mut calls = Vec::new();
    for range in ranges {
        for i in range.start..range.end {
            let t = &tokens[i];
            if t.kind == TokenKind::Ident
                && !is_keyword(&t.text)
                && tokens.get(i + 1).map(|n| n.text.as_str()) == Some("(")
            {
                calls.push(t.text.as_str());
            }
        }
    }
    calls
}

/// Compute the feature vector with the default intrinsic names.
pub fn extract_features(unit: &SourceUnit) -> ProgramFeatures {
    extract_features_with(unit, &IntrinsicNames::default())
}

pub fn extract_features_with(unit: &SourceUnit, names: &IntrinsicNames) -> ProgramFeatures {
    let tokens = &unit.tokens;

    // Degraded units scan the whole file as one range with no file-scope info.
    let body_ranges: Vec<TokenRange> = if unit.is_degraded() {
        vec![TokenRange {
            start: 0,
            end: tokens.len(),
        }]
    } else {
        unit.function_defs.values().copied().collect()
    };

    let calls = call_sites(tokens, &body_ranges);
    let mut call_counts: HashMap<&str, u64> = HashMap::new();
    for name in &calls {
        *call_counts.entry(name).or_default() += 1;
    }

    let count_in = |set: &BTreeSet<String>| -> u64 {
        set.iter()
            .map(|name| call_counts.get(name.as_str()).copied().unwrap_or(0))
            .sum()
    };
    let threads_created = count_in(&names.thread_create);
    let threads_joined = count_in(&names.thread_join);
    let mutex_locks = count_in(&names.mutex_lock);
    let atomic_locks = calls
        .iter()
        .filter(|name| names.is_atomic_marker(name))
        .count() as u64;
    let nondet_variables = calls
        .iter()
        .filter(|name| name.starts_with(&names.nondet_prefix))
        .count() as u64;

    // Per-variable access counts over all function bodies.
    let mut var_accesses: BTreeMap<&str, u64> = BTreeMap::new();
    for range in &body_ranges {
        for t in &tokens[range.start..range.end] {
            if t.kind == TokenKind::Ident && unit.file_scope_vars.contains(&t.text) {
                *var_accesses.entry(t.text.as_str()).or_default() += 1;
            }
        }
    }
    let global_var_accesses: u64 = var_accesses.values().sum();
    let min_global_var_access = var_accesses.values().copied().min().unwrap_or(0);

    // Functions defined here whose bodies touch at least one file-scope var.
    let global_fns: BTreeSet<&str> = unit
        .function_defs
        .iter()
        .filter(|(_, range)| {
            tokens[range.start..range.end]
                .iter()
                .any(|t| t.kind == TokenKind::Ident && unit.file_scope_vars.contains(&t.text))
        })
        .map(|(name, _)| name.as_str())
        .collect();
    let global_fn_call_counts: Vec<u64> = global_fns
        .iter()
        .filter_map(|name| call_counts.get(*name).copied())
        .collect();
    let global_fn_calls: u64 = global_fn_call_counts.iter().sum();
    let min_global_fn_calls = global_fn_call_counts.iter().copied().min().unwrap_or(0);

    ProgramFeatures {
        threads_created,
        threads_joined,
        mutex_locks,
        atomic_locks,
        global_var_accesses,
        global_fn_calls,
        binary_operators: count_binary_operators(tokens),
        nondet_variables,
        min_global_var_access,
        min_global_fn_calls,
        loop_iterations: count_loop_iterations(tokens),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(src: &str) -> ProgramFeatures {
        extract_features(&parse_source(src))
    }

    #[test]
    fn empty_input_yields_empty_unit() {
        let unit = parse_source("");
        assert!(unit.tokens.is_empty());
        assert!(unit.file_scope_vars.is_empty());
        assert!(unit.function_defs.is_empty());
        assert!(unit.warnings.is_empty());
        assert_eq!(features(""), ProgramFeatures::default());
    }

    #[test]
    fn file_scope_vars_and_function_defs() {
        let unit = parse_source("int g; int main(){return g;}");
        assert_eq!(unit.file_scope_vars.iter().collect::<Vec<_>>(), vec!["g"]);
        assert_eq!(unit.function_defs.len(), 1);
        assert!(unit.function_defs.contains_key("main"));
    }

    #[test]
    fn tokens_include_identifiers_and_operators() {
        let unit = parse_source("int main(){int x=1+2;}");
        let idents: BTreeSet<&str> = unit
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Ident)
            .map(|t| t.text.as_str())
            .collect();
        assert!(idents.contains("main") && idents.contains("int") && idents.contains("x"));
        assert!(unit
            .tokens
            .iter()
            .any(|t| t.kind == TokenKind::Punct && t.text == "+"));
    }

    #[test]
    fn token_positions_strictly_increase() {
        let unit = parse_source("int g; /* c */ int main(){return g+1;}");
        for pair in unit.tokens.windows(2) {
            assert!(pair[0].pos < pair[1].pos);
        }
    }

    #[test]
    fn function_body_ranges_are_disjoint() {
        let unit = parse_source("void a(){int x;} void b(){int y;} int c(){return 0;}");
        let mut ranges: Vec<_> = unit.function_defs.values().copied().collect();
        ranges.sort_by_key(|r| r.start);
        assert_eq!(ranges.len(), 3);
        for pair in ranges.windows(2) {
            assert!(pair[0].end <= pair[1].start);
        }
    }

    #[test]
    fn thread_intrinsics_counted() {
        let src = r#"
            int main() {
                pthread_t t;
                pthread_create(&t, 0, worker, 0);
                pthread_join(t, 0);
                return 0;
            }
        "#;
        let f = features(src);
        assert_eq!(f.threads_created, 1);
        assert_eq!(f.threads_joined, 1);
        assert_eq!(f.global_var_accesses, 0);
        assert_eq!(f.min_global_var_access, 0);
    }

    #[test]
    fn prototypes_do_not_count_as_call_sites() {
        let src = "extern int pthread_create(void*, void*, void*, void*);\nint main(){return 0;}";
        assert_eq!(features(src).threads_created, 0);
    }

    #[test]
    fn global_access_and_function_counts() {
        let src = "int g; void f(){g=g+1;} int main(){f();f();}";
        let f = features(src);
        assert_eq!(f.global_var_accesses, 2);
        assert_eq!(f.min_global_var_access, 2);
        assert_eq!(f.global_fn_calls, 2);
        assert_eq!(f.min_global_fn_calls, 2);
        assert_eq!(f.binary_operators, 1);
    }

    #[test]
    fn min_global_var_access_takes_minimum_over_vars() {
        let src = "int a; int b; int main(){a=a+a; b=1; return 0;}";
        let f = features(src);
        // a accessed 3 times, b once.
        assert_eq!(f.global_var_accesses, 4);
        assert_eq!(f.min_global_var_access, 1);
    }

    #[test]
    fn for_loop_constant_trip_count() {
        let f = features("int main(){int s=0; int i; for(i=0;i<10;i++){s=s+i;}}");
        assert_eq!(f.loop_iterations, 10);
    }

    #[test]
    fn for_loop_shapes() {
        let cases = [
            ("for(i=0;i<=10;i++){}", 11),
            ("for(i=10;i>0;i--){}", 10),
            ("for(i=10;i>=0;i--){}", 11),
            ("for(i=0;i<10;i+=3){}", 4),
            ("for(i=0;i!=10;i+=2){}", 5),
            ("for(i=0;i!=10;i+=3){}", LOOP_SENTINEL),
            ("for(i=5;i<3;i++){}", 0),
            ("for(i=0;i<10;i--){}", LOOP_SENTINEL),
            ("for(;;){}", LOOP_SENTINEL),
            ("for(i=0;i<n;i++){}", LOOP_SENTINEL),
            ("for(i=0;i<0x10;++i){}", 16),
        ];
        for (loop_src, expected) in cases {
            let src = format!("int main(){{int i; int n; {loop_src}}}");
            assert_eq!(features(&src).loop_iterations, expected, "loop {loop_src}");
        }
    }

    #[test]
    fn while_and_do_loops_use_sentinel() {
        let f = features("int main(){int i=0; while(i<10){i++;} do{i--;}while(i>0);}");
        assert_eq!(f.loop_iterations, 2 * LOOP_SENTINEL);
    }

    #[test]
    fn do_while_tail_is_not_double_counted() {
        let f = features("int main(){int i=0; do i++; while(i<5);}");
        assert_eq!(f.loop_iterations, LOOP_SENTINEL);
    }

    #[test]
    fn nested_while_inside_do_counts_separately() {
        let f = features("int main(){int i=0; do { while(i){i--;} } while(i);}");
        assert_eq!(f.loop_iterations, 2 * LOOP_SENTINEL);
    }

    #[test]
    fn binary_operator_disambiguation() {
        // Declarations and unary uses of * & - are not binary operators.
        let f = features("int main(){int *p; int a=1; int b = a * 2; int c = -a; int d = b & a;}");
        assert_eq!(f.binary_operators, 2);
    }

    #[test]
    fn compound_assignment_not_counted() {
        let f = features("int main(){int a=1; a+=2; a<<=1; a==3;}");
        assert_eq!(f.binary_operators, 1); // only ==
    }

    #[test]
    fn nondet_and_atomic_intrinsics() {
        let src = r#"
            int main() {
                int x = __VERIFIER_nondet_int();
                unsigned y = __VERIFIER_nondet_uint();
                __VERIFIER_atomic_begin();
                x = x + y;
                __VERIFIER_atomic_end();
                __VERIFIER_atomic_store(&x);
                return x;
            }
        "#;
        let f = features(src);
        assert_eq!(f.nondet_variables, 2);
        // Any __VERIFIER_atomic_* call marks an atomic section.
        assert_eq!(f.atomic_locks, 3);
    }

    #[test]
    fn mutex_lock_variants() {
        let src = "int main(){pthread_mutex_lock(&m); pthread_mutex_trylock(&m); pthread_mutex_unlock(&m);}";
        assert_eq!(features(src).mutex_locks, 2);
    }

    #[test]
    fn comment_insensitivity() {
        let plain = "int g; void f(){g=g+1;} int main(){f();f();}";
        let commented =
            "int g; /* global */ void f(){g=g/*x*/+1;} // main below\nint main(){f();/*mid*/f();}";
        assert_eq!(features(plain), features(commented));
    }

    #[test]
    fn preprocessor_lines_are_ignored() {
        let src = "#include <pthread.h>\n#define N 10\nint g;\nint main(){return g;}";
        let unit = parse_source(src);
        assert_eq!(unit.file_scope_vars.iter().collect::<Vec<_>>(), vec!["g"]);
        let f = features(src);
        assert_eq!(f.global_var_accesses, 1);
    }

    #[test]
    fn preprocessor_continuation_lines_are_ignored() {
        let src = "#define LOOP(x) \\\n  while(x) {}\nint main(){return 0;}";
        assert_eq!(features(src).loop_iterations, 0);
    }

    #[test]
    fn string_literals_are_opaque() {
        let src = "int main(){const char *s = \"while(1) + pthread_create\"; return 0;}";
        let f = features(src);
        assert_eq!(f.loop_iterations, 0);
        assert_eq!(f.threads_created, 0);
        assert_eq!(f.binary_operators, 0);
    }

    #[test]
    fn unbalanced_braces_degrade_to_whole_file_scan() {
        let src = "int g; int main(){ pthread_create(&t,0,f,0); ";
        let unit = parse_source(src);
        assert!(unit.is_degraded());
        assert!(unit.file_scope_vars.is_empty());
        assert!(unit.function_defs.is_empty());
        let f = extract_features(&unit);
        // Whole-file scan still sees the call site.
        assert_eq!(f.threads_created, 1);
        assert_eq!(f.global_var_accesses, 0);
    }

    #[test]
    fn struct_tags_and_typedefs_are_not_variables() {
        let src =
            "typedef int myint; struct S; struct T { int x; }; struct T t; int main(){return 0;}";
        let unit = parse_source(src);
        assert_eq!(unit.file_scope_vars.iter().collect::<Vec<_>>(), vec!["t"]);
    }

    #[test]
    fn multi_declarator_lines() {
        let src = "int a, b = 2, c[3], *p; int main(){return a+b;}";
        let unit = parse_source(src);
        let vars: Vec<&str> = unit.file_scope_vars.iter().map(|s| s.as_str()).collect();
        assert_eq!(vars, vec!["a", "b", "c", "p"]);
    }

    #[test]
    fn initializer_braces_do_not_hide_later_vars() {
        let src = "int arr[2] = {1, 2}; int g; int main(){return arr[0]+g;}";
        let unit = parse_source(src);
        let vars: Vec<&str> = unit.file_scope_vars.iter().map(|s| s.as_str()).collect();
        assert_eq!(vars, vec!["arr", "g"]);
    }

    #[test]
    fn renaming_locals_leaves_features_unchanged() {
        let a = "int g; int main(){int i; int acc=0; for(i=0;i<10;i++){acc=acc+g;} return acc;}";
        let b = "int g; int main(){int k; int total=0; for(k=0;k<10;k++){total=total+g;} return total;}";
        assert_eq!(features(a), features(b));
    }

    #[test]
    fn appending_fragment_adds_exactly_its_counts() {
        let base = "int main(){pthread_create(&t,0,w,0); return 0;}";
        let fragment = "void extra(){pthread_create(&a,0,w,0); pthread_create(&b,0,w,0);}";
        let combined = format!("{base}\n{fragment}");
        assert_eq!(
            features(&combined).threads_created,
            features(base).threads_created + 2
        );
    }

    #[test]
    fn determinism_across_runs() {
        let src = "int g; int main(){int i; for(i=0;i<3;i++){g=g+i;} return g;}";
        assert_eq!(features(src), features(src));
        assert_eq!(
            format!("{:?}", parse_source(src).tokens),
            format!("{:?}", parse_source(src).tokens)
        );
    }

    #[test]
    fn json_line_has_fields_in_order() {
        let f = features("int main(){int i; for(i=0;i<10;i++){}}");
        let line = f.to_json_line();
        assert!(line.starts_with("{\"threads_created\":0,"));
        assert!(line.ends_with("\"loop_iterations\":10}"));
        let comma_count = line.matches(':').count();
        assert_eq!(comma_count, FEATURE_COUNT);
    }

    #[test]
    fn global_fn_calls_only_counts_global_accessing_functions() {
        // f touches g, h does not; only calls of f count.
        let src = "int g; void f(){g=1;} void h(){} int main(){f(); h(); h(); f(); f();}";
        let f = features(src);
        assert_eq!(f.global_fn_calls, 3);
        assert_eq!(f.min_global_fn_calls, 3);
    }

    #[test]
    fn min_global_fn_calls_over_multiple_functions() {
        let src = "int g; void f(){g=1;} void w(){g=2;} int main(){f(); f(); w();}";
        let f = features(src);
        assert_eq!(f.global_fn_calls, 3);
        assert_eq!(f.min_global_fn_calls, 1);
    }

    #[test]
    fn defined_but_uncalled_global_fn_contributes_zero() {
        let src = "int g; void f(){g=1;} int main(){return 0;}";
        let f = features(src);
        assert_eq!(f.global_fn_calls, 0);
        assert_eq!(f.min_global_fn_calls, 0);
    }
}
