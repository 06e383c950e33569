use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty formula")]
    Empty,
    #[error("invalid character {ch:?} at offset {offset}")]
    InvalidCharacter { offset: usize, ch: char },
    #[error("syntax error at offset {offset}: found {found}, expected one of {}", expected.join(", "))]
    Unexpected {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unclosed parenthesis opened at offset {open} (input ends at offset {offset})")]
    UnclosedParen { open: usize, offset: usize },
    #[error("unbalanced `)` at offset {offset}")]
    UnbalancedClose { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Empty => 0,
            ParseError::InvalidCharacter { offset, .. }
            | ParseError::Unexpected { offset, .. }
            | ParseError::UnclosedParen { offset, .. }
            | ParseError::UnbalancedClose { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("undefined variable `{0}`")]
    UndefinedVariable(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("n-ary connective with {0} operands (need at least 2)")]
    Arity(usize),
    #[error("{variables} variables exceed the enumeration limit of {limit}")]
    Capacity { variables: usize, limit: usize },
}

#[derive(Debug, Error)]
pub enum RtwError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{found}` at position {position} (expected `{expected}`)")]
    ColumnOrder {
        position: usize,
        found: String,
        expected: String,
    },
    #[error("row {row}: duplicate requirement id {id}")]
    DuplicateId { row: usize, id: String },
    #[error("row {row} ({id}): unparsable formula: {source}")]
    Formula {
        row: usize,
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("row {row} ({id}): unknown kind `{value}`")]
    UnknownKind { row: usize, id: String, value: String },
    #[error("row {row} ({id}): unknown status `{value}`")]
    UnknownStatus { row: usize, id: String, value: String },
    #[error("row {row} ({id}): {message}")]
    Invalid { row: usize, id: String, message: String },
    #[error("model name missing and no unique root could be inferred")]
    MissingModelName,
    #[error("malformed worksheet: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("invalid feature name `{0}`")]
    InvalidName(String),
    #[error("{kind} group under `{parent}` needs at least two children, found {count}")]
    GroupTooSmall {
        parent: String,
        kind: &'static str,
        count: usize,
    },
    #[error("constraint {constraint} references unknown feature `{feature}`")]
    UnknownReference { constraint: String, feature: String },
    #[error("duplicate constraint id {0}")]
    DuplicateConstraint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("{entry}: formula does not match any mapping rule: {formula}")]
    Unmatchable { entry: String, formula: String },
    #[error("{entry}: rule parent `{found}` must be `{expected}`")]
    WrongParent {
        entry: String,
        found: String,
        expected: String,
    },
    #[error("{entry}: rule binds {bound:?} but the entry introduces {introduced:?}")]
    ChildMismatch {
        entry: String,
        bound: Vec<String>,
        introduced: Vec<String>,
    },
    #[error("{entry}: parent `{parent}` is not introduced by any entry")]
    UnknownParent { entry: String, parent: String },
    #[error("feature `{feature}` introduced by both {first} and {second}")]
    DuplicateFeature {
        feature: String,
        first: String,
        second: String,
    },
    #[error("{entry}: cannot attach a {kind} group under `{parent}`, which already has other children")]
    GroupConflict {
        entry: String,
        parent: String,
        kind: &'static str,
    },
    #[error("entries {0:?} are not reachable from the root (cyclic parent references)")]
    Unreachable(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("anomaly {0} is not present in the model")]
    NotPresent(String),
    #[error("conflict attribution is not defined for {0}")]
    Unsupported(String),
    #[error("trace id {0} is not in the worksheet")]
    UnknownTraceId(String),
}

#[derive(Debug, Error)]
pub enum VariantError {
    #[error("the model is void (no valid configuration); run `analyze` for details")]
    VoidModel,
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("feature map: concrete feature `{0}` has no code symbol")]
    MissingFeature(String),
    #[error("feature map: `{0}` is not a concrete feature of the model")]
    UnknownFeature(String),
    #[error("feature map: symbol `{symbol}` used for both `{first}` and `{second}`")]
    DuplicateSymbol {
        symbol: String,
        first: String,
        second: String,
    },
    #[error("feature map: feature `{0}` listed twice")]
    DuplicateFeature(String),
    #[error("feature map line {line}: {message}")]
    MapSyntax { line: usize, message: String },
    #[error("variant file {path}: {message}")]
    VariantSyntax { path: String, message: String },
    #[error("unknown variant id {0}")]
    UnknownVariant(String),
    #[error("command template must contain the {{config}} placeholder")]
    MissingPlaceholder,
    #[error("command could not be executed: {0}")]
    Command(#[source] std::io::Error),
    #[error("work directory {path} is not writable: {source}")]
    WorkDir {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum InteropError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unsupported element <{0}>")]
    UnknownElement(String),
    #[error("malformed nesting: {0}")]
    Nesting(String),
    #[error("invalid constraint: {0}")]
    Constraint(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
