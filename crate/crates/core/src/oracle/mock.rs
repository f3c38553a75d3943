//! Deterministic in-process oracles.
//!
//! Every family is a pure function of the candidate's token texts, so a
//! reduction against a mock can be verified exhaustively. The one exception
//! is `use_before_assign`, whose labels carry uids by construction.
//!
//! Spec strings (the `--mock` flag):
//!
//! | family              | syntax                 | preserved label          |
//! |---------------------|------------------------|--------------------------|
//! | keyset              | `keyset:a,b,c`         | sorted set joined by `,` |
//! | threshold_count     | `threshold:x:2`        | `x>=2`                   |
//! | use_before_assign   | `use_before_assign`    | `buggy@U/repair@V`       |
//! | constant            | `constant[:label]`     | the label                |
//! | full_only           | `full_only[:N]`        | `full`                   |

use super::{OracleError, Prediction, Predictor, Query, Transport};
use crate::granularity::{token_texts, Language};
use crate::unit::{AtomicUnit, Uid};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

pub const NONE_LABEL: &str = "<none>";
pub const LEX_ERROR_LABEL: &str = "<lex-error>";
pub const NO_BUG_LABEL: &str = "no-bug";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MockOracleSpec {
    Keyset {
        required: BTreeSet<String>,
    },
    ThresholdCount {
        token: String,
        min_count: usize,
    },
    UseBeforeAssign,
    Constant {
        label: String,
    },
    /// Preserved only on a candidate with at least `len` units; `None`
    /// binds to the original program size at instantiation.
    FullOnly {
        len: Option<usize>,
    },
}

impl MockOracleSpec {
    pub fn keyset<I, S>(required: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        MockOracleSpec::Keyset {
            required: required.into_iter().map(Into::into).collect(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            MockOracleSpec::Keyset { .. } => "keyset",
            MockOracleSpec::ThresholdCount { .. } => "threshold_count",
            MockOracleSpec::UseBeforeAssign => "use_before_assign",
            MockOracleSpec::Constant { .. } => "constant",
            MockOracleSpec::FullOnly { .. } => "full_only",
        }
    }

    /// Builds an oracle for one program of `original_len` units.
    pub fn instantiate(&self, view: MockView, original_len: usize) -> MockOracle {
        let spec = match self {
            MockOracleSpec::FullOnly { len: None } => MockOracleSpec::FullOnly {
                len: Some(original_len),
            },
            other => other.clone(),
        };
        MockOracle { spec, view }
    }
}

impl fmt::Display for MockOracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockOracleSpec::Keyset { required } => {
                write!(f, "keyset:{}", required.iter().cloned().collect::<Vec<_>>().join(","))
            }
            MockOracleSpec::ThresholdCount { token, min_count } => write!(f, "threshold:{token}:{min_count}"),
            MockOracleSpec::UseBeforeAssign => f.write_str("use_before_assign"),
            MockOracleSpec::Constant { label } => write!(f, "constant:{label}"),
            MockOracleSpec::FullOnly { len: Some(n) } => write!(f, "full_only:{n}"),
            MockOracleSpec::FullOnly { len: None } => f.write_str("full_only"),
        }
    }
}

impl FromStr for MockOracleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, params) = s.split_once(':').unwrap_or((s, ""));
        match family {
            "keyset" => Ok(MockOracleSpec::keyset(
                params.split(',').map(str::trim).filter(|t| !t.is_empty()),
            )),
            "threshold" | "threshold_count" => {
                let (token, count) = params
                    .rsplit_once(':')
                    .ok_or_else(|| format!("threshold mock needs `threshold:<token>:<count>`, got {s:?}"))?;
                let min_count = count
                    .parse()
                    .map_err(|e| format!("bad threshold count {count:?}: {e}"))?;
                if token.is_empty() {
                    return Err("threshold mock needs a token".into());
                }
                Ok(MockOracleSpec::ThresholdCount {
                    token: token.to_string(),
                    min_count,
                })
            }
            "use_before_assign" => Ok(MockOracleSpec::UseBeforeAssign),
            "constant" => Ok(MockOracleSpec::Constant {
                label: if params.is_empty() {
                    "constant".into()
                } else {
                    params.into()
                },
            }),
            "full_only" => {
                let len = if params.is_empty() {
                    None
                } else {
                    Some(
                        params
                            .parse()
                            .map_err(|e| format!("bad full_only length {params:?}: {e}"))?,
                    )
                };
                Ok(MockOracleSpec::FullOnly { len })
            }
            other => Err(format!("unknown mock family {other:?}")),
        }
    }
}

/// Which token texts a mock reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockView {
    /// The submitted unit texts (token granularity).
    Units,
    /// Tokens re-lexed from the candidate text; for character or line
    /// granularity. Text that fails to lex yields [`LEX_ERROR_LABEL`].
    Relex(Language),
}

#[derive(Debug, Clone)]
pub struct MockOracle {
    spec: MockOracleSpec,
    view: MockView,
}

impl MockOracle {
    pub fn new(spec: MockOracleSpec, view: MockView) -> Self {
        Self { spec, view }
    }

    pub fn spec(&self) -> &MockOracleSpec {
        &self.spec
    }

    /// Pure evaluation; the [`Predictor`] impl delegates here.
    pub fn evaluate(&self, text: &str, units: &[AtomicUnit]) -> Prediction {
        let owned;
        let tokens: Vec<(Uid, &str)> = match self.view {
            MockView::Units => units.iter().map(|u| (u.uid, u.text.as_str())).collect(),
            MockView::Relex(language) => match token_texts(text, language) {
                Ok(texts) => {
                    owned = texts;
                    owned.iter().enumerate().map(|(i, t)| (i as Uid, t.as_str())).collect()
                }
                Err(_) => return Prediction::new(LEX_ERROR_LABEL, 0.0),
            },
        };

        match &self.spec {
            MockOracleSpec::Keyset { required } => {
                let present: HashSet<&str> = tokens.iter().map(|(_, t)| *t).collect();
                let hits = required.iter().filter(|r| present.contains(r.as_str())).count();
                let mut prediction = if hits == required.len() {
                    Prediction::new(required.iter().cloned().collect::<Vec<_>>().join(","), 1.0)
                } else {
                    Prediction::new(NONE_LABEL, hits as f64 / required.len() as f64)
                };
                if self.view == MockView::Units {
                    prediction.attention = Some(
                        units
                            .iter()
                            .map(|u| if required.contains(&u.text) { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
                prediction
            }
            MockOracleSpec::ThresholdCount { token, min_count } => {
                let count = tokens.iter().filter(|(_, t)| t == token).count();
                if count >= *min_count {
                    Prediction::new(format!("{token}>={min_count}"), 1.0)
                } else {
                    Prediction::new(format!("{token}<{min_count}"), count as f64 / *min_count as f64)
                }
            }
            MockOracleSpec::UseBeforeAssign => Prediction::new(use_before_assign_label(&tokens), 1.0),
            MockOracleSpec::Constant { label } => Prediction::new(label.clone(), 1.0),
            MockOracleSpec::FullOnly { len } => {
                let full = len.unwrap_or(0);
                if tokens.len() >= full {
                    Prediction::new("full", 1.0)
                } else {
                    Prediction::new("partial", tokens.len() as f64 / full as f64)
                }
            }
        }
    }
}

impl Predictor for MockOracle {
    fn predict(&mut self, query: Query<'_>) -> Result<Prediction, OracleError> {
        Ok(self.evaluate(query.text, query.units))
    }

    fn uid_sensitive(&self) -> bool {
        matches!(self.spec, MockOracleSpec::UseBeforeAssign)
    }

    fn transport(&self) -> Transport {
        Transport::InProcess
    }
}

/// The variable-misuse stand-in oracle over python_like tokens.
pub fn make_use_before_assign_oracle() -> super::OracleClient {
    super::OracleClient::new(MockOracle::new(MockOracleSpec::UseBeforeAssign, MockView::Units))
}

const PY_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

/// Keywords that begin a new statement when they follow a complete operand.
const STATEMENT_KEYWORDS: &[&str] = &[
    "assert", "break", "class", "continue", "def", "del", "elif", "except", "finally", "for", "from", "global", "if",
    "import", "nonlocal", "pass", "raise", "return", "try", "while", "with",
];

fn is_identifier(tok: &str) -> bool {
    tok.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') && !PY_KEYWORDS.contains(&tok)
}

fn ends_operand(tok: &str) -> bool {
    matches!(tok, ")" | "]" | "}")
        || tok.starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_' || c == '"' || c == '\'')
            && (!PY_KEYWORDS.contains(&tok) || matches!(tok, "True" | "False" | "None"))
}

fn starts_operand(tok: &str) -> bool {
    tok.starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_' || c == '"' || c == '\'')
        && (!PY_KEYWORDS.contains(&tok) || matches!(tok, "True" | "False" | "None" | "lambda" | "not"))
}

/// Marks single `=` assignment targets, including `a, b = ...` chains.
fn assignment_targets(tokens: &[(Uid, &str)]) -> HashSet<usize> {
    let mut depth = 0i32;
    let mut depth_at = Vec::with_capacity(tokens.len());
    for (_, t) in tokens {
        if matches!(*t, ")" | "]" | "}") {
            depth -= 1;
        }
        depth_at.push(depth);
        if matches!(*t, "(" | "[" | "{") {
            depth += 1;
        }
    }
    let tok = |i: usize| tokens.get(i).map(|(_, t)| *t);
    let mut targets = HashSet::new();
    for j in 1..tokens.len() {
        let is_assign = tok(j) == Some("=")
            && tok(j + 1) != Some("=")
            && !matches!(
                tok(j - 1),
                Some("=" | "<" | ">" | "!" | "+" | "-" | "*" | "/" | "%" | "&" | "|" | "^" | ":")
            )
            && depth_at[j] <= 0;
        if !is_assign {
            continue;
        }
        let mut k = j - 1;
        loop {
            if !tok(k).is_some_and(is_identifier) || depth_at[k] > 0 {
                break;
            }
            if k >= 1 && tok(k - 1) == Some(".") {
                break;
            }
            targets.insert(k);
            if k >= 2 && tok(k - 1) == Some(",") {
                k -= 2;
            } else {
                break;
            }
        }
    }
    targets
}

/// Labels a token stream `buggy@U/repair@V` for the first identifier read
/// before any binding of it, or `no-bug`.
///
/// Bindings: function parameters, `for`/`as`/`import`/`global` names, and
/// assignment targets. A target binds only after its right-hand side, which
/// ends when a new statement starts: a depth-0 `:` or `;`, a statement
/// keyword, an assignment target, or an operand directly following a
/// complete operand. Calls (`name(`), attributes (`.name`), and keyword
/// arguments are neither reads nor bindings. The repair pointer is the
/// nearest preceding binding occurrence of a different variable.
pub(crate) fn use_before_assign_label(tokens: &[(Uid, &str)]) -> String {
    let targets = assignment_targets(tokens);
    let tok = |i: usize| tokens.get(i).map(|(_, t)| *t);

    let mut bound: HashSet<&str> = HashSet::new();
    // Variable binding occurrences, in scan order: (uid, name).
    let mut bindings: Vec<(Uid, &str)> = Vec::new();
    let mut pending: Vec<(Uid, &str)> = Vec::new();
    let mut depth = 0i32;
    let mut def_params_depth: Option<i32> = None;
    let mut lambda_params = false;
    let mut for_targets = false;
    let mut import_names = false;
    let mut expect_name = false;

    fn commit<'t>(pending: &mut Vec<(Uid, &'t str)>, bound: &mut HashSet<&'t str>, bindings: &mut Vec<(Uid, &'t str)>) {
        for (uid, name) in pending.drain(..) {
            bound.insert(name);
            bindings.push((uid, name));
        }
    }

    let mut i = 0;
    while i < tokens.len() {
        let (uid, t) = tokens[i];
        let prev = if i > 0 { tok(i - 1) } else { None };
        let next = tok(i + 1);

        let new_statement =
            (depth <= 0 && prev.is_some_and(ends_operand) && (starts_operand(t) || STATEMENT_KEYWORDS.contains(&t)))
                || targets.contains(&i)
                || (STATEMENT_KEYWORDS.contains(&t) && depth <= 0);
        if new_statement {
            commit(&mut pending, &mut bound, &mut bindings);
            import_names = false;
            for_targets = false;
        }

        match t {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if def_params_depth.is_some_and(|d| depth < d) {
                    def_params_depth = None;
                }
            }
            ":" | ";" if depth <= 0 => {
                commit(&mut pending, &mut bound, &mut bindings);
                lambda_params = false;
                for_targets = false;
                import_names = false;
            }
            "def" | "class" => {
                expect_name = true;
                if t == "def" {
                    def_params_depth = Some(depth + 1);
                }
            }
            "lambda" => lambda_params = true,
            "for" => for_targets = true,
            "in" => for_targets = false,
            "import" | "global" | "nonlocal" => import_names = true,
            "as" => {
                if let Some(name) = next.filter(|n| is_identifier(n)) {
                    bound.insert(name);
                    bindings.push((tokens[i + 1].0, name));
                    i += 2;
                    continue;
                }
            }
            "from" => {
                // skip the module path up to `import`
                while i + 1 < tokens.len() && tok(i + 1) != Some("import") {
                    i += 1;
                }
            }
            _ if is_identifier(t) => {
                let after_dot = prev == Some(".");
                if expect_name {
                    expect_name = false;
                    bound.insert(t);
                } else if after_dot {
                    // attribute access
                } else if def_params_depth.is_some_and(|d| depth == d) && matches!(prev, Some("(" | "," | "*")) {
                    bound.insert(t);
                    bindings.push((uid, t));
                } else if lambda_params || import_names {
                    bound.insert(t);
                    if lambda_params {
                        bindings.push((uid, t));
                    }
                } else if for_targets || targets.contains(&i) {
                    pending.push((uid, t));
                } else if next == Some("(") {
                    // call target
                } else if depth > 0 && next == Some("=") && tok(i + 2) != Some("=") {
                    // keyword argument name
                } else if !bound.contains(t) {
                    let repair = bindings
                        .iter()
                        .rev()
                        .find(|(_, name)| *name != t)
                        .map_or_else(|| "none".to_string(), |(u, _)| u.to_string());
                    return format!("buggy@{uid}/repair@{repair}");
                }
            }
            _ => {}
        }
        i += 1;
    }
    NO_BUG_LABEL.to_string()
}

/// Uid of every identifier occurrence, keyed by text; used for protecting
/// "all variable occurrences".
pub fn identifier_occurrences(units: &[AtomicUnit]) -> HashMap<&str, Vec<Uid>> {
    let mut map: HashMap<&str, Vec<Uid>> = HashMap::new();
    for u in units.iter().filter(|u| is_identifier(&u.text)) {
        map.entry(u.text.as_str()).or_default().push(u.uid);
    }
    map
}
