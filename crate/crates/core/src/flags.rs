//! Backend flag-space model: configurations, the canonical 240-point grid,
//! numeric encoding for the classifier, and command-line rendering.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of flag fields in a configuration (and in its encoding).
pub const FLAG_FIELD_COUNT: usize = 8;

/// An integer bound that may be unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Finite(u32),
    Unlimited,
}

impl Bound {
    /// Numeric encoding: finite value as-is, unlimited as -1.
    pub fn encoded(self) -> f64 {
        match self {
            Bound::Finite(n) => n as f64,
            Bound::Unlimited => -1.0,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(n) => write!(f, "{n}"),
            Bound::Unlimited => write!(f, "U"),
        }
    }
}

impl FromStr for Bound {
    type Err = GridFileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "U" {
            return Ok(Bound::Unlimited);
        }
        let n: u32 = s
            .parse()
            .map_err(|_| GridFileError::bad_field(format!("invalid bound '{s}'")))?;
        if n == 0 {
            return Err(GridFileError::bad_field("bound must be >= 1 when finite"));
        }
        Ok(Bound::Finite(n))
    }
}

/// Verification strategy of the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    None,
    Incr,
    KInduction,
}

impl Strategy {
    pub fn encoded(self) -> f64 {
        match self {
            Strategy::None => 0.0,
            Strategy::Incr => 1.0,
            Strategy::KInduction => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "None",
            Strategy::Incr => "Incr",
            Strategy::KInduction => "KInduction",
        }
    }
}

impl FromStr for Strategy {
    type Err = GridFileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "None" | "0" => Ok(Strategy::None),
            "Incr" | "1" => Ok(Strategy::Incr),
            "KInduction" | "2" => Ok(Strategy::KInduction),
            _ => Err(GridFileError::bad_field(format!("invalid strategy '{s}'"))),
        }
    }
}

/// One assignment of the eight backend flags.
///
/// Constructed values are normalized: `k_step` is forced to 1 whenever the
/// strategy is `None`, so equality and hashing agree with the grid's
/// no-duplicates invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlagConfiguration {
    pub context_bound: Bound,
    pub strategy: Strategy,
    pub k_step: u32,
    pub unwind: Bound,
    pub no_por: bool,
    pub no_goto_merge: bool,
    pub state_hashing: bool,
    pub add_symex_value_sets: bool,
}

impl FlagConfiguration {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        context_bound: Bound,
        strategy: Strategy,
        k_step: u32,
        unwind: Bound,
        no_por: bool,
        no_goto_merge: bool,
        state_hashing: bool,
        add_symex_value_sets: bool,
    ) -> Self {
        let config = FlagConfiguration {
            context_bound,
            strategy,
            k_step,
            unwind,
            no_por,
            no_goto_merge,
            state_hashing,
            add_symex_value_sets,
        };
        config.normalized()
    }

    /// `k_step` is meaningless without a strategy; pin it to 1 there.
    pub fn normalized(mut self) -> Self {
        if self.strategy == Strategy::None {
            self.k_step = 1;
        }
        self
    }

    /// Fixed-order numeric encoding consumed by the classifier:
    /// `[context_bound, strategy, k_step, unwind, no_por, no_goto_merge,
    /// state_hashing, add_symex_value_sets]` with unlimited bounds as -1
    /// and booleans as 0/1.
    pub fn encode(&self) -> [f64; FLAG_FIELD_COUNT] {
        let c = self.normalized();
        [
            c.context_bound.encoded(),
            c.strategy.encoded(),
            c.k_step as f64,
            c.unwind.encoded(),
            c.no_por as u8 as f64,
            c.no_goto_merge as u8 as f64,
            c.state_hashing as u8 as f64,
            c.add_symex_value_sets as u8 as f64,
        ]
    }

    /// Render the configuration as backend command-line arguments.
    ///
    /// Default field values produce no arguments; bounds emit
    /// `--context-bound N` / `--unwind N`, the strategy emits
    /// `--incremental-bmc` or `--k-induction` followed by `--k-step N`,
    /// and each boolean flag emits its literal name when enabled.
    pub fn render_flags(&self) -> Vec<String> {
        let c = self.normalized();
        let mut args = Vec::new();
        if let Bound::Finite(n) = c.context_bound {
            args.push("--context-bound".to_string());
            args.push(n.to_string());
        }
        match c.strategy {
            Strategy::None => {}
            Strategy::Incr => {
                args.push("--incremental-bmc".to_string());
                args.push("--k-step".to_string());
                args.push(c.k_step.to_string());
            }
            Strategy::KInduction => {
                args.push("--k-induction".to_string());
                args.push("--k-step".to_string());
                args.push(c.k_step.to_string());
            }
        }
        if let Bound::Finite(n) = c.unwind {
            args.push("--unwind".to_string());
            args.push(n.to_string());
        }
        if c.no_por {
            args.push("--no-por".to_string());
        }
        if c.no_goto_merge {
            args.push("--no-goto-merge".to_string());
        }
        if c.state_hashing {
            args.push("--state-hashing".to_string());
        }
        if c.add_symex_value_sets {
            args.push("--add-symex-value-sets".to_string());
        }
        args
    }

    /// One grid-file line: 8 comma-separated fields in encode order,
    /// `U` for unlimited bounds, strategy by name, booleans as 0/1.
    pub fn to_grid_line(&self) -> String {
        let c = self.normalized();
        format!(
            "{},{},{},{},{},{},{},{}",
            c.context_bound,
            c.strategy.name(),
            c.k_step,
            c.unwind,
            c.no_por as u8,
            c.no_goto_merge as u8,
            c.state_hashing as u8,
            c.add_symex_value_sets as u8,
        )
    }

    fn from_grid_line(line: &str) -> Result<Self, GridFileError> {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != FLAG_FIELD_COUNT {
            return Err(GridFileError::bad_field(format!(
                "expected {} comma-separated fields, found {}",
                FLAG_FIELD_COUNT,
                fields.len()
            )));
        }
        let parse_bool = |s: &str| -> Result<bool, GridFileError> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(GridFileError::bad_field(format!("invalid boolean '{s}'"))),
            }
        };
        let k_step: u32 = fields[2]
            .parse()
            .map_err(|_| GridFileError::bad_field(format!("invalid k_step '{}'", fields[2])))?;
        if k_step == 0 {
            return Err(GridFileError::bad_field("k_step must be >= 1"));
        }
        Ok(FlagConfiguration::new(
            fields[0].parse()?,
            fields[1].parse()?,
            k_step,
            fields[3].parse()?,
            parse_bool(fields[4])?,
            parse_bool(fields[5])?,
            parse_bool(fields[6])?,
            parse_bool(fields[7])?,
        ))
    }
}

/// The backend's own defaults: everything unlimited/off.
pub fn default_config() -> FlagConfiguration {
    FlagConfiguration::new(
        Bound::Unlimited,
        Strategy::None,
        1,
        Bound::Unlimited,
        false,
        false,
        false,
        false,
    )
}

/// Ordered, duplicate-free list of flag configurations.
///
/// The order is load-bearing: it defines the predictor's tie-break.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagGrid {
    configs: Vec<FlagConfiguration>,
}

#[derive(Debug, Error)]
pub enum GridFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate configuration at line {line}")]
    Duplicate { line: usize },
    #[error("grid is empty")]
    Empty,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GridFileError {
    fn bad_field(message: impl Into<String>) -> Self {
        GridFileError::Malformed {
            line: 0,
            message: message.into(),
        }
    }

    fn at_line(self, line: usize) -> Self {
        match self {
            GridFileError::Malformed { message, .. } => GridFileError::Malformed { line, message },
            other => other,
        }
    }
}

impl FlagGrid {
    /// Build a grid from configurations, rejecting duplicates
    /// (after k_step normalization).
    pub fn new(configs: Vec<FlagConfiguration>) -> Result<Self, GridFileError> {
        if configs.is_empty() {
            return Err(GridFileError::Empty);
        }
        let normalized: Vec<FlagConfiguration> =
            configs.into_iter().map(|c| c.normalized()).collect();
        for (i, c) in normalized.iter().enumerate() {
            if normalized[..i].contains(c) {
                return Err(GridFileError::Duplicate { line: i + 1 });
            }
        }
        Ok(FlagGrid {
            configs: normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&FlagConfiguration> {
        self.configs.get(index)
    }

    pub fn configs(&self) -> &[FlagConfiguration] {
        &self.configs
    }

    pub fn iter(&self) -> impl Iterator<Item = &FlagConfiguration> {
        self.configs.iter()
    }

    /// Index of a configuration in this grid, comparing normalized values.
    pub fn index_of(&self, config: &FlagConfiguration) -> Option<usize> {
        let needle = config.normalized();
        self.configs.iter().position(|c| *c == needle)
    }

    /// Serialize as the line-oriented grid file format.
    pub fn to_grid_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# flag grid: context_bound,strategy,k_step,unwind,no_por,no_goto_merge,state_hashing,add_symex_value_sets\n");
        for c in &self.configs {
            out.push_str(&c.to_grid_line());
            out.push('\n');
        }
        out
    }

    /// Parse the grid file format: one configuration per line, `#` comments
    /// and blank lines ignored.
    pub fn from_grid_text(text: &str) -> Result<Self, GridFileError> {
        let mut configs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let config = FlagConfiguration::from_grid_line(line).map_err(|e| e.at_line(idx + 1))?;
            if configs.contains(&config) {
                return Err(GridFileError::Duplicate { line: idx + 1 });
            }
            configs.push(config);
        }
        if configs.is_empty() {
            return Err(GridFileError::Empty);
        }
        Ok(FlagGrid { configs })
    }

    pub fn from_grid_file(path: &std::path::Path) -> Result<Self, GridFileError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_grid_text(&text)
    }
}

/// The canonical 240-configuration grid.
///
/// Row-major Cartesian product, outermost factor first:
/// context_bound in {1, 2, 3, U} x unwind in {1, 8, 32, 128, U} x
/// (strategy, k_step) in {(None, 1), (Incr, 1), (Incr, 4)} x
/// no_por in {false, true} x no_goto_merge in {false, true};
/// state_hashing and add_symex_value_sets stay false throughout.
pub fn canonical_grid() -> FlagGrid {
    let context_bounds = [
        Bound::Finite(1),
        Bound::Finite(2),
        Bound::Finite(3),
        Bound::Unlimited,
    ];
    let unwinds = [
        Bound::Finite(1),
        Bound::Finite(8),
        Bound::Finite(32),
        Bound::Finite(128),
        Bound::Unlimited,
    ];
    let strategies = [
        (Strategy::None, 1),
        (Strategy::Incr, 1),
        (Strategy::Incr, 4),
    ];
    let bools = [false, true];

    let mut configs = Vec::with_capacity(240);
    for &context_bound in &context_bounds {
        for &unwind in &unwinds {
            for &(strategy, k_step) in &strategies {
                for &no_por in &bools {
                    for &no_goto_merge in &bools {
                        configs.push(FlagConfiguration::new(
                            context_bound,
                            strategy,
                            k_step,
                            unwind,
                            no_por,
                            no_goto_merge,
                            false,
                            false,
                        ));
                    }
                }
            }
        }
    }
    FlagGrid::new(configs).expect("canonical grid is duplicate-free")
}
